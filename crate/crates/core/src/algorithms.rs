//! The row-stochastic gradient-tracking iteration, centralized gradient
//! descent, and the Subgradient-Push baseline.
//!
//! In stacked form, with `Yt_k = diag(Y_k)`:
//!
//! ```text
//! X_{k+1} = A X_k - alpha Z_k
//! Y_{k+1} = A Y_k
//! Z_{k+1} = A Z_k + Yt_{k+1}^{-1} grad F(X_{k+1}) - Yt_k^{-1} grad F(X_k)
//! ```
//!
//! with `Y_0 = I` and `Z_0 = grad F(X_0)`. Row `i` of each product only reads
//! rows `j` with `a_ij > 0`, i.e. agent `i`'s in-neighbors.

use nalgebra::{DMatrix, DVector};

use crate::analysis::{ConvergenceTrace, TraceRecord};
use crate::digraph::WeightMatrix;
use crate::linalg::{inverse_diagonal, scale_rows};
use crate::objectives::ObjectiveSuite;
use crate::spectral::BoundConstants;
use crate::{Error, Result};

/// Diagonal entries of `Y` at or below this are treated as singular.
pub const DIAGONAL_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState {
    pub k: usize,
    /// `n x p`, row `i` is agent `i`'s estimate.
    pub x: DMatrix<f64>,
    /// `n x n`, row `i` is agent `i`'s Perron-vector estimate.
    pub y: DMatrix<f64>,
    /// `n x p` gradient trackers.
    pub z: DMatrix<f64>,
    /// Cached `grad F(X_k)`.
    pub grad: DMatrix<f64>,
}

impl NetworkState {
    /// `Yt_k^{-1} grad F(X_k)`.
    pub fn scaled_gradient(&self) -> DMatrix<f64> {
        scale_rows(&self.grad, &inverse_diagonal(&self.y))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub max_iters: usize,
    pub record_every: usize,
    /// Initial estimates; all zeros when `None`.
    pub x0: Option<DMatrix<f64>>,
}

impl RunConfig {
    pub fn new(alpha: f64, max_iters: usize) -> Self {
        Self { alpha, max_iters, record_every: 1, x0: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::StepSizeOutOfRange { alpha: self.alpha, limit: f64::INFINITY });
        }
        if self.max_iters == 0 || self.record_every == 0 {
            return Err(Error::InvalidData("max_iters and record_every must be at least 1".into()));
        }
        Ok(())
    }

    fn initial_x(&self, suite: &ObjectiveSuite) -> DMatrix<f64> {
        self.x0.clone().unwrap_or_else(|| DMatrix::zeros(suite.n(), suite.p()))
    }
}

/// `k = 0`, `Y = I`, `Z = grad F(x0)`.
pub fn init_state(suite: &ObjectiveSuite, x0: &DMatrix<f64>) -> Result<NetworkState> {
    let (n, p) = (suite.n(), suite.p());
    if x0.nrows() != n || x0.ncols() != p {
        return Err(Error::ShapeMismatch {
            expected: format!("{n}x{p}"),
            got: format!("{}x{}", x0.nrows(), x0.ncols()),
        });
    }
    let grad = suite.gradients(x0);
    Ok(NetworkState { k: 0, x: x0.clone(), y: DMatrix::identity(n, n), z: grad.clone(), grad })
}

/// One synchronous round of the proposed method.
pub fn step(state: &NetworkState, a: &WeightMatrix, alpha: f64, suite: &ObjectiveSuite) -> Result<NetworkState> {
    let a = a.matrix();
    let x = a * &state.x - &state.z * alpha;
    let y = a * &state.y;
    if let Some((agent, &value)) = y.diagonal().iter().enumerate().find(|(_, v)| v.is_nan() || **v <= DIAGONAL_FLOOR) {
        return Err(Error::SingularDiagonal { agent, k: state.k + 1, value });
    }
    let grad = suite.gradients(&x);
    let z = a * &state.z + scale_rows(&grad, &inverse_diagonal(&y)) - state.scaled_gradient();
    Ok(NetworkState { k: state.k + 1, x, y, z, grad })
}

/// Runs `config.max_iters` rounds, recording every `record_every` rounds (and
/// always the first and last state).
pub fn run(
    config: &RunConfig,
    a: &WeightMatrix,
    suite: &ObjectiveSuite,
    x_star: &DVector<f64>,
    constants: &BoundConstants,
) -> Result<ConvergenceTrace> {
    run_observed(config, a, suite, x_star, constants, |_| {})
}

/// [`run`], additionally handing every state (including the initial one) to
/// `observer`.
pub fn run_observed<F: FnMut(&NetworkState)>(
    config: &RunConfig,
    a: &WeightMatrix,
    suite: &ObjectiveSuite,
    x_star: &DVector<f64>,
    constants: &BoundConstants,
    mut observer: F,
) -> Result<ConvergenceTrace> {
    config.validate()?;
    let mut state = init_state(suite, &config.initial_x(suite))?;
    let mut records = vec![TraceRecord::from_state(&state, x_star, constants)];
    observer(&state);
    for k in 1..=config.max_iters {
        state = step(&state, a, config.alpha, suite)?;
        observer(&state);
        if k % config.record_every == 0 || k == config.max_iters {
            records.push(TraceRecord::from_state(&state, x_star, constants));
        }
    }
    Ok(ConvergenceTrace { algorithm: "proposed".into(), alpha: config.alpha, records })
}

/// `x - alpha sum_i grad f_i(x)`, for `0 < alpha < 2/(n l)`.
pub fn centralized_gd_step(x: &DVector<f64>, alpha: f64, suite: &ObjectiveSuite) -> Result<DVector<f64>> {
    let limit = 2.0 / suite.global_constants().nl;
    if !(alpha > 0.0 && alpha < limit) {
        return Err(Error::StepSizeOutOfRange { alpha, limit });
    }
    Ok(x - suite.total_gradient(x) * alpha)
}

/// Centralized gradient descent from the mean of `x0`'s rows. Residuals are
/// reported for the stacked iterate `1 x_k^T` so they compare directly with the
/// distributed methods.
pub fn run_centralized_gd(config: &RunConfig, suite: &ObjectiveSuite, x_star: &DVector<f64>) -> Result<ConvergenceTrace> {
    config.validate()?;
    let x0 = config.initial_x(suite);
    let mut x = x0.row_mean().transpose();
    let record = |k: usize, x: &DVector<f64>| {
        let stacked = DMatrix::from_fn(suite.n(), suite.p(), |_, c| x[c]);
        let residual2 = (suite.n() as f64).sqrt() * (x - x_star).norm();
        TraceRecord {
            k,
            residual2,
            consensus_err: 0.0,
            opt_err: residual2,
            grad_track_err: 0.0,
            grad_norm: suite.gradients(&stacked).norm(),
        }
    };
    let mut records = vec![record(0, &x)];
    for k in 1..=config.max_iters {
        x = centralized_gd_step(&x, config.alpha, suite)?;
        if k % config.record_every == 0 || k == config.max_iters {
            records.push(record(k, &x));
        }
    }
    Ok(ConvergenceTrace { algorithm: "centralized_gd".into(), alpha: config.alpha, records })
}

/// Push-sum state for Subgradient-Push.
#[derive(Clone, Debug, PartialEq)]
pub struct PushSumState {
    pub k: usize,
    pub x: DMatrix<f64>,
    /// Push-sum weights, started at one.
    pub mass: DVector<f64>,
    /// De-biased estimates `w / mass`.
    pub z: DMatrix<f64>,
}

impl PushSumState {
    pub fn new(x0: DMatrix<f64>) -> Self {
        let n = x0.nrows();
        Self { k: 0, z: x0.clone(), x: x0, mass: DVector::from_element(n, 1.0) }
    }
}

/// `w = C x`, `mass' = C mass`, `z' = w / mass'`, `x' = w - alpha_k grad F(z')`
/// for a column-stochastic `C`.
pub fn subgradient_push_step(
    state: &PushSumState,
    column_stochastic: &DMatrix<f64>,
    alpha_k: f64,
    suite: &ObjectiveSuite,
) -> PushSumState {
    let w = column_stochastic * &state.x;
    let mass = column_stochastic * &state.mass;
    let z = scale_rows(&w, &mass.map(|m| 1.0 / m));
    let x = &w - suite.gradients(&z) * alpha_k;
    PushSumState { k: state.k + 1, x, mass, z }
}

/// Diminishing step `a / sqrt(k)` for the step producing iterate `k`.
pub fn diminishing_step(a: f64, k: usize) -> f64 {
    a / (k as f64).sqrt()
}

/// Subgradient-Push with step `step_constant / sqrt(k)`. Residuals are measured
/// on the de-biased estimates `z`; gradient tracking is not part of this
/// method, so `grad_track_err` is reported as zero.
pub fn run_subgradient_push(
    config: &RunConfig,
    column_stochastic: &DMatrix<f64>,
    suite: &ObjectiveSuite,
    x_star: &DVector<f64>,
) -> Result<ConvergenceTrace> {
    config.validate()?;
    let mut state = PushSumState::new(config.initial_x(suite));
    let record = |s: &PushSumState| {
        let n = suite.n();
        let mean = s.z.row_mean();
        let consensus = DMatrix::from_fn(n, suite.p(), |_, c| mean[c]);
        let target = DMatrix::from_fn(n, suite.p(), |_, c| x_star[c]);
        TraceRecord {
            k: s.k,
            residual2: (&s.z - &target).norm(),
            consensus_err: (&s.z - &consensus).norm(),
            opt_err: (&consensus - &target).norm(),
            grad_track_err: 0.0,
            grad_norm: suite.gradients(&s.z).norm(),
        }
    };
    let mut records = vec![record(&state)];
    for k in 1..=config.max_iters {
        state = subgradient_push_step(&state, column_stochastic, diminishing_step(config.alpha, k), suite);
        if k % config.record_every == 0 || k == config.max_iters {
            records.push(record(&state));
        }
    }
    Ok(ConvergenceTrace { algorithm: "subgradient_push".into(), alpha: config.alpha, records })
}

/// Relative error of `pi^T Z_k = pi^T Yt_k^{-1} grad F_k`, scaled by the
/// magnitude of the summands.
pub fn perron_identity_error(state: &NetworkState, pi: &DVector<f64>) -> f64 {
    let (diff, scale) = perron_identity_parts(state, pi);
    relative(diff, scale)
}

fn perron_identity_parts(state: &NetworkState, pi: &DVector<f64>) -> (f64, f64) {
    let scaled = state.scaled_gradient();
    let lhs = state.z.transpose() * pi;
    let rhs = scaled.transpose() * pi;
    let scale = weighted_row_norms(&state.z, pi) + weighted_row_norms(&scaled, pi);
    ((lhs - rhs).norm(), scale)
}

/// Tracks the `pi^T Z_k` identity along one run.
///
/// `Z_k` accumulates gradient differences, so it carries rounding of order
/// `eps` times the largest gradients seen so far. Errors are measured
/// relative to the running peak of the summand magnitudes; relative to the
/// current magnitude they would grow without bound as the gradients vanish.
#[derive(Debug, Clone, Default)]
pub struct PerronIdentityMonitor {
    peak: f64,
    worst: f64,
}

impl PerronIdentityMonitor {
    /// Records one iterate and returns its relative error.
    pub fn observe(&mut self, state: &NetworkState, pi: &DVector<f64>) -> f64 {
        let (diff, scale) = perron_identity_parts(state, pi);
        self.peak = self.peak.max(scale);
        let err = relative(diff, self.peak);
        self.worst = self.worst.max(err);
        err
    }

    /// Largest relative error observed so far.
    pub fn worst(&self) -> f64 {
        self.worst
    }
}

/// Relative error of `pi^T X_{k+1} = pi^T X_k - alpha pi^T Z_k`.
pub fn mean_recursion_error(prev: &NetworkState, next: &NetworkState, pi: &DVector<f64>, alpha: f64) -> f64 {
    let lhs = next.x.transpose() * pi;
    let rhs = prev.x.transpose() * pi - prev.z.transpose() * pi * alpha;
    let scale = weighted_row_norms(&next.x, pi) + weighted_row_norms(&prev.x, pi) + alpha * weighted_row_norms(&prev.z, pi);
    relative((lhs - rhs).norm(), scale)
}

fn weighted_row_norms(m: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    m.row_iter().zip(pi.iter()).map(|(r, w)| w * r.norm()).sum()
}

fn relative(d: f64, scale: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        d / scale.max(f64::MIN_POSITIVE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::DirectedGraph;
    use crate::objectives::{quadratic_suite, random_quadratic_suite};
    use crate::spectral::{network_constants, SpectralOptions};

    fn scalar_suite() -> ObjectiveSuite {
        // f(x) = x^2 / 2
        quadratic_suite(vec![DMatrix::from_element(1, 1, 1.0)], vec![DVector::zeros(1)]).unwrap()
    }

    fn single() -> WeightMatrix {
        WeightMatrix::from_matrix_unchecked(DMatrix::from_element(1, 1, 1.0))
    }

    #[test]
    fn init_single_agent() {
        let s = init_state(&scalar_suite(), &DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert_eq!(s.y, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(s.z, DMatrix::from_element(1, 1, 2.0));
        assert!(matches!(
            init_state(&scalar_suite(), &DMatrix::zeros(2, 1)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn init_at_optimum_keeps_local_gradients() {
        let suite = random_quadratic_suite(4, 2, 3).unwrap();
        let xs = suite.closed_form_optimum().unwrap().clone();
        let x0 = DMatrix::from_fn(4, 2, |_, c| xs[c]);
        let s = init_state(&suite, &x0).unwrap();
        for (i, f) in suite.locals().iter().enumerate() {
            assert_eq!(s.z.row(i).transpose(), f.gradient(&xs));
        }
        assert!(s.y.diagonal().iter().all(|&d| d == 1.0));
    }

    #[test]
    fn single_agent_step() {
        let s0 = init_state(&scalar_suite(), &DMatrix::from_element(1, 1, 2.0)).unwrap();
        let s1 = step(&s0, &single(), 0.1, &scalar_suite()).unwrap();
        assert!((s1.x[0] - 1.8).abs() < 1e-15);
        assert!((s1.z[0] - 1.8).abs() < 1e-15);
    }

    #[test]
    fn identical_objectives_keep_consensus() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let r = DVector::from_vec(vec![0.5, -1.0]);
        let suite = quadratic_suite(vec![q.clone(); 4], vec![r.clone(); 4]).unwrap();
        let g = DirectedGraph::random_strongly_connected(4, 0.3, 8).unwrap();
        let a = WeightMatrix::local_degree(&g);
        let c = DVector::from_vec(vec![1.0, -2.0]);
        let x0 = DMatrix::from_fn(4, 2, |_, j| c[j]);
        let s1 = step(&init_state(&suite, &x0).unwrap(), &a, 0.05, &suite).unwrap();
        let expected = &c - (&q * &c + &r) * 0.05;
        for i in 0..4 {
            assert!((s1.x.row(i).transpose() - &expected).norm() < 1e-14);
        }
    }

    #[test]
    fn two_agent_hand_computed() {
        // f_1 = x^2/2 - x, f_2 = 3x^2/2 + x, A all 0.5, alpha = 0.1, x0 = (0, 0).
        let suite = quadratic_suite(
            vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 3.0)],
            vec![DVector::from_element(1, -1.0), DVector::from_element(1, 1.0)],
        )
        .unwrap();
        let a = WeightMatrix::from_matrix_unchecked(DMatrix::from_element(2, 2, 0.5));
        let s0 = init_state(&suite, &DMatrix::zeros(2, 1)).unwrap();
        // z0 = (-1, 1); x1 = A*0 - 0.1*z0 = (0.1, -0.1); Y1 diag = 0.5.
        // grad(x1) = (0.1 - 1, -0.3 + 1) = (-0.9, 0.7)
        // z1 = A z0 + grad(x1)/0.5 - grad(x0)/1 = (0,0) + (-1.8, 1.4) - (-1, 1) = (-0.8, 0.4)
        let s1 = step(&s0, &a, 0.1, &suite).unwrap();
        assert!((s1.x[0] - 0.1).abs() < 1e-14 && (s1.x[1] + 0.1).abs() < 1e-14);
        assert!((s1.z[0] + 0.8).abs() < 1e-14 && (s1.z[1] - 0.4).abs() < 1e-14);
        // x2 = A x1 - 0.1 z1 = (0,0) - (-0.08, 0.04) = (0.08, -0.04)
        // grad(x2) = (0.08 - 1, -0.12 + 1) = (-0.92, 0.88); Y2 diag = 0.5.
        // z2 = A z1 + grad(x2)/0.5 - grad(x1)/0.5 = (-0.2,-0.2) + (-1.84, 1.76) - (-1.8, 1.4) = (-0.24, 0.16)
        let s2 = step(&s1, &a, 0.1, &suite).unwrap();
        assert!((s2.x[0] - 0.08).abs() < 1e-14 && (s2.x[1] + 0.04).abs() < 1e-14);
        assert!((s2.z[0] + 0.24).abs() < 1e-14 && (s2.z[1] - 0.16).abs() < 1e-14);
    }

    /// Agent-local form of one round: reads only in-neighbor rows.
    fn agent_round(
        i: usize,
        graph: &DirectedGraph,
        a: &DMatrix<f64>,
        s: &NetworkState,
        alpha: f64,
        suite: &ObjectiveSuite,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let mut x = -s.z.row(i).transpose() * alpha;
        let mut y = DVector::zeros(s.y.ncols());
        let mut z = DVector::zeros(s.z.ncols());
        for &j in graph.in_neighbors(i) {
            x += s.x.row(j).transpose() * a[(i, j)];
            y += s.y.row(j).transpose() * a[(i, j)];
            z += s.z.row(j).transpose() * a[(i, j)];
        }
        let f = &suite.locals()[i];
        z += f.gradient(&x) / y[i] - f.gradient(&s.x.row(i).transpose()) / s.y[(i, i)];
        (x, y, z)
    }

    #[test]
    fn matrix_form_matches_agent_local_form() {
        let g = DirectedGraph::random_strongly_connected(6, 0.2, 21).unwrap();
        let a = WeightMatrix::local_degree(&g);
        let suite = random_quadratic_suite(6, 2, 4).unwrap();
        let mut s = init_state(&suite, &DMatrix::from_fn(6, 2, |i, j| (i + 2 * j) as f64 * 0.3)).unwrap();
        for _ in 0..20 {
            let next = step(&s, &a, 0.02, &suite).unwrap();
            for i in 0..6 {
                // Garbage in every row agent i does not listen to must not matter.
                let mut masked = s.clone();
                for j in 0..6 {
                    if !g.has_edge(i, j) {
                        masked.x.row_mut(j).fill(f64::NAN);
                        masked.y.row_mut(j).fill(f64::NAN);
                        masked.z.row_mut(j).fill(f64::NAN);
                    }
                }
                let (x, y, z) = agent_round(i, &g, a.matrix(), &masked, 0.02, &suite);
                assert!((x - next.x.row(i).transpose()).amax() < 1e-13);
                assert!((y - next.y.row(i).transpose()).amax() < 1e-15);
                assert!((z - next.z.row(i).transpose()).amax() < 1e-12);
            }
            s = next;
        }
    }

    #[test]
    fn y_tracks_powers_of_a_and_identities_hold() {
        let g = DirectedGraph::random_strongly_connected(7, 0.15, 2).unwrap();
        let a = WeightMatrix::local_degree(&g);
        let suite = random_quadratic_suite(7, 3, 5).unwrap();
        let constants = network_constants(&a, &SpectralOptions::default()).unwrap();
        let mut s = init_state(&suite, &DMatrix::from_element(7, 3, 1.0)).unwrap();
        let mut power = DMatrix::identity(7, 7);
        for _ in 0..150 {
            let next = step(&s, &a, 0.01, &suite).unwrap();
            power = a.matrix() * power;
            assert!((&next.y - &power).amax() < 1e-10);
            for row in next.y.row_iter() {
                assert!((row.sum() - 1.0).abs() < 1e-10);
            }
            assert!(perron_identity_error(&next, &constants.pi) < 1e-9);
            assert!(mean_recursion_error(&s, &next, &constants.pi, 0.01) < 1e-9);
            s = next;
        }
    }

    #[test]
    fn identity_monitor_uses_running_peak() {
        let suite = quadratic_suite(vec![DMatrix::from_element(1, 1, 2.0)], vec![DVector::from_element(1, -3.0)]).unwrap();
        let a = WeightMatrix::local_degree(&DirectedGraph::new(1, &[]).unwrap());
        let pi = DVector::from_element(1, 1.0);
        let mut s = init_state(&suite, &DMatrix::from_element(1, 1, 5.0)).unwrap();
        let mut monitor = PerronIdentityMonitor::default();
        monitor.observe(&s, &pi);
        for _ in 0..150 {
            s = step(&s, &a, 0.1, &suite).unwrap();
            monitor.observe(&s, &pi);
        }
        assert!(s.z.amax() < 1e-10);
        assert!(monitor.worst() < 1e-14, "{}", monitor.worst());
    }

    #[test]
    fn single_agent_matches_centralized_gd() {
        let suite = quadratic_suite(vec![DMatrix::from_element(1, 1, 3.0)], vec![DVector::from_element(1, -1.5)]).unwrap();
        let mut s = init_state(&suite, &DMatrix::from_element(1, 1, 4.0)).unwrap();
        let mut x = DVector::from_element(1, 4.0);
        for _ in 0..100 {
            s = step(&s, &single(), 0.2, &suite).unwrap();
            x = centralized_gd_step(&x, 0.2, &suite).unwrap();
            assert!((s.x[0] - x[0]).abs() <= 1e-12);
        }
    }

    #[test]
    fn gd_step_range_and_fixed_point() {
        let suite = quadratic_suite(vec![DMatrix::from_element(1, 1, 2.0); 2], vec![DVector::from_element(1, -2.0); 2]).unwrap();
        // n l = 4, so alpha = 1/4 is the exact Newton step.
        let x_star = suite.closed_form_optimum().unwrap().clone();
        let x1 = centralized_gd_step(&DVector::from_element(1, 7.0), 0.25, &suite).unwrap();
        assert!((x1 - &x_star).norm() < 1e-15);
        assert_eq!(centralized_gd_step(&x_star, 0.1, &suite).unwrap(), x_star);
        assert!(matches!(
            centralized_gd_step(&x_star, 0.5, &suite),
            Err(Error::StepSizeOutOfRange { .. })
        ));
        assert!(centralized_gd_step(&x_star, 0.0, &suite).is_err());
    }

    #[test]
    fn zero_step_mixes_to_weighted_average() {
        let g = DirectedGraph::random_strongly_connected(5, 0.2, 9).unwrap();
        let a = WeightMatrix::local_degree(&g);
        let suite = random_quadratic_suite(5, 1, 1).unwrap();
        let constants = network_constants(&a, &SpectralOptions::default()).unwrap();
        let x0 = DMatrix::from_fn(5, 1, |i, _| i as f64);
        let mut s = init_state(&suite, &x0).unwrap();
        for _ in 0..2000 {
            s = step(&s, &a, 0.0, &suite).unwrap();
        }
        let target = constants.pi.dot(&x0.column(0));
        assert!(s.x.iter().all(|&v| (v - target).abs() < 1e-10));
    }

    #[test]
    fn subgradient_push_single_agent_is_diminishing_gd() {
        let suite = scalar_suite();
        let mut s = PushSumState::new(DMatrix::from_element(1, 1, 3.0));
        let mut x = 3.0;
        let c = DMatrix::from_element(1, 1, 1.0);
        for k in 1..=50 {
            s = subgradient_push_step(&s, &c, diminishing_step(0.5, k), &suite);
            x -= diminishing_step(0.5, k) * x;
            assert!((s.x[0] - x).abs() < 1e-15);
        }
    }

    #[test]
    fn subgradient_push_consensus_with_identical_objectives() {
        let suite = quadratic_suite(vec![DMatrix::from_element(1, 1, 1.0); 4], vec![DVector::from_element(1, -1.0); 4]).unwrap();
        let g = DirectedGraph::new(4, &[(1, 0), (2, 1), (3, 2), (0, 3)]).unwrap();
        let c = crate::digraph::column_stochastic_weights(&g);
        let mut s = PushSumState::new(DMatrix::from_element(4, 1, 5.0));
        let mut x = 5.0;
        for k in 1..=30 {
            let alpha = diminishing_step(0.2, k);
            s = subgradient_push_step(&s, &c, alpha, &suite);
            x -= alpha * (x - 1.0);
            assert!(s.x.iter().all(|&v| (v - x).abs() < 1e-13));
        }
    }
}
