//! Turns an [`ExperimentConfig`] into a concrete instance and runs it.

use rowstoch_core::algorithms;
use rowstoch_core::analysis::{alpha_upper_bound, StepSizeBound};
use rowstoch_core::digraph::column_stochastic_weights;
use rowstoch_core::objectives::{global_optimum, logistic_suite, random_quadratic_suite, GlobalConstants};
use rowstoch_core::spectral::{network_constants, SpectralOptions};
use rowstoch_core::{
    BoundConstants, NetworkState, ConvergenceTrace, DVector, DirectedGraph, LogisticData, ObjectiveSuite, RunConfig, WeightMatrix,
};

use crate::config::{Algorithm, ExperimentConfig, GraphSource, ObjectiveSource};
use crate::error::{CliError, Result};

/// Stationarity tolerance for the centralized optimum.
pub const OPTIMUM_TOL: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct Problem {
    pub graph: DirectedGraph,
    pub weights: WeightMatrix,
    pub suite: ObjectiveSuite,
    pub x_star: DVector<f64>,
    pub constants: BoundConstants,
    pub global: GlobalConstants,
}

impl Problem {
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        let graph = match &config.graph {
            GraphSource::File(path) => DirectedGraph::load(path)?,
            GraphSource::Random { n, extra_edge_prob, seed } => {
                DirectedGraph::random_strongly_connected(*n, *extra_edge_prob, *seed)?
            }
        };
        let suite = match &config.objective {
            ObjectiveSource::File(path) => logistic_suite(&LogisticData::load(path)?)?,
            ObjectiveSource::Logistic { n, m, p, beta, seed } => {
                logistic_suite(&LogisticData::generate(*n, *m, *p, *beta, *seed))?
            }
            ObjectiveSource::Quadratic { n, p, seed } => random_quadratic_suite(*n, *p, *seed)?,
        };
        if suite.n() != graph.n() {
            return Err(CliError::Config(format!("graph has {} agents, objective has {}", graph.n(), suite.n())));
        }
        let weights = WeightMatrix::local_degree(&graph);
        Self::from_parts(graph, weights, suite)
    }

    pub fn from_parts(graph: DirectedGraph, weights: WeightMatrix, suite: ObjectiveSuite) -> Result<Self> {
        let constants = network_constants(&weights, &SpectralOptions::default())?;
        let x_star = global_optimum(&suite, OPTIMUM_TOL)?;
        let global = suite.global_constants();
        Ok(Self { graph, weights, suite, x_star, constants, global })
    }

    pub fn n(&self) -> usize {
        self.suite.n()
    }

    pub fn step_bound(&self) -> Result<StepSizeBound> {
        Ok(alpha_upper_bound(&self.constants, self.n(), self.global.l, self.global.s)?)
    }

    /// Runs `algorithm`; `step` is `alpha` for constant-step methods and the
    /// diminishing-step constant for Subgradient-Push.
    pub fn run(&self, algorithm: Algorithm, step: f64, max_iters: usize, record_every: usize) -> Result<ConvergenceTrace> {
        let mut config = RunConfig::new(step, max_iters);
        config.record_every = record_every;
        let trace = match algorithm {
            Algorithm::Proposed => algorithms::run(&config, &self.weights, &self.suite, &self.x_star, &self.constants)?,
            Algorithm::CentralizedGd => algorithms::run_centralized_gd(&config, &self.suite, &self.x_star)?,
            Algorithm::SubgradientPush => algorithms::run_subgradient_push(
                &config,
                &column_stochastic_weights(&self.graph),
                &self.suite,
                &self.x_star,
            )?,
        };
        Ok(trace)
    }
}

impl Problem {
    /// Proposed-method run that also returns the final state and hands every
    /// state to `observer`.
    pub fn run_proposed<F: FnMut(&NetworkState)>(
        &self,
        alpha: f64,
        max_iters: usize,
        record_every: usize,
        mut observer: F,
    ) -> Result<(ConvergenceTrace, NetworkState)> {
        let mut config = RunConfig::new(alpha, max_iters);
        config.record_every = record_every;
        let mut last = None;
        let trace = algorithms::run_observed(&config, &self.weights, &self.suite, &self.x_star, &self.constants, |s| {
            observer(s);
            if s.k == max_iters {
                last = Some(s.clone());
            }
        })?;
        Ok((trace, last.expect("the final state is observed")))
    }
}

/// The step a config uses for its own algorithm.
pub fn config_step(config: &ExperimentConfig) -> f64 {
    if config.algorithm.constant_step() {
        config.alpha
    } else {
        config.push_step
    }
}
