//! `verify`: executes the invariants of every module on one configuration and
//! reports each as pass, fail or inapplicable.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rowstoch_core::algorithms::{self, centralized_gd_step, mean_recursion_error, PerronIdentityMonitor};
use rowstoch_core::analysis::{
    alpha_upper_bound, build_g, char_poly_eval, eigenvalues_3x3, eta, fit_linear_rate, rho_slope_at_zero,
    spectral_radius_3x3, theorem1_check, StepSizeBound,
};
use rowstoch_core::objectives::{checks, quadratic_suite, GlobalConstants};
use rowstoch_core::spectral::{
    contraction_worst_ratio, inverse_diagonal_decay_worst, norm_equivalence_worst, powers_decay_check, BoundConstants,
};
use rowstoch_core::{RunConfig, WeightMatrix};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::problem::Problem;
use crate::trace_io::write_atomic;

pub const PERRON_TOL: f64 = 1e-11;
pub const LIMIT_INVERSE_TOL: f64 = 1e-10;
pub const TRACKING_IDENTITY_TOL: f64 = 1e-9;
pub const STATIONARITY_TOL: f64 = 1e-10;
pub const FD_TOL: f64 = 1e-6;
pub const ORACLE_TOL: f64 = 1e-12;
/// Relative slack allowed on inequalities that hold exactly in theory.
pub const RATIO_SLACK: f64 = 1e-9;
/// Iterations per run of the empirical step-size search.
pub const EMPIRICAL_ITERS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inapplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    /// Worst observed value of the checked quantity.
    pub worst: Option<f64>,
    pub limit: Option<f64>,
    pub detail: String,
}

impl Check {
    fn bound(name: &'static str, worst: f64, limit: f64, detail: impl Into<String>) -> Self {
        let status = if worst <= limit { Status::Pass } else { Status::Fail };
        Self { name, status, worst: Some(worst), limit: Some(limit), detail: detail.into() }
    }

    fn flag(name: &'static str, ok: bool, detail: impl Into<String>) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { name, status, worst: None, limit: None, detail: detail.into() }
    }

    fn inapplicable(name: &'static str, detail: impl Into<String>) -> Self {
        Self { name, status: Status::Inapplicable, worst: None, limit: None, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalStep {
    /// Largest step found by doubling from `alpha_bar` whose run still
    /// converged; empirical, not covered by the theory.
    pub alpha: f64,
    pub first_failure: Option<f64>,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub failed: Vec<&'static str>,
    pub alpha: f64,
    pub checks: Vec<Check>,
    pub step_bound: Option<StepSizeBound>,
    pub empirical_step: Option<EmpiricalStep>,
    pub global: GlobalConstants,
    pub constants: Option<BoundConstants>,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Scales the weight matrix by 1.1 (row sums 1.1) to exercise the
    /// failure path.
    pub corrupt_weights: bool,
    /// Seed of the random probes (test vectors and points).
    pub probe_seed: u64,
}

fn status_str(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Inapplicable => "inapplicable",
    }
}

impl VerifyReport {
    pub fn summary_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| format!("{:<13} {:<34} {}", status_str(c.status), c.name, c.detail))
            .collect()
    }
}

pub fn cmd_verify(config: &ExperimentConfig, options: &VerifyOptions) -> Result<VerifyReport> {
    let report = verify(config, options)?;
    write_atomic(config.out.join("verify.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}

pub fn verify(config: &ExperimentConfig, options: &VerifyOptions) -> Result<VerifyReport> {
    config.validate()?;
    let clean = Problem::build(config)?;
    let alpha = config.alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(options.probe_seed);
    let mut checks = Vec::new();

    checks.push(Check::flag(
        "digraph.strongly_connected",
        clean.graph.is_strongly_connected(),
        format!("{} agents, {} edges", clean.graph.n(), clean.graph.edges().len()),
    ));
    let weights = if options.corrupt_weights {
        WeightMatrix::from_matrix_unchecked(clean.weights.matrix() * 1.1)
    } else {
        clean.weights.clone()
    };
    let violations = weights.violations(&clean.graph);
    let worst_row = weights.matrix().row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);
    let weights_ok = violations.is_empty();
    checks.push(Check {
        name: "digraph.weight_matrix",
        status: if weights_ok { Status::Pass } else { Status::Fail },
        worst: Some(worst_row),
        limit: Some(rowstoch_core::digraph::ROW_SUM_TOL),
        detail: if weights_ok { "row-stochastic, positive diagonal, graph support".into() } else { violations.join("; ") },
    });

    objective_checks(&clean, &mut rng, &mut checks);
    checks.push(single_agent_oracle());

    let mut step_bound = None;
    let mut empirical_step = None;
    let mut constants = None;
    if weights_ok {
        let problem = clean;
        spectral_checks(&problem, &mut rng, &mut checks);
        step_bound = step_bound_checks(&problem, alpha, &mut checks);
        run_checks(&problem, config, step_bound.as_ref(), &mut checks)?;
        empirical_step = step_bound.as_ref().map(|b| empirical_search(&problem, b.alpha_bar));
        constants = Some(problem.constants.clone());
        finish(config, checks, step_bound, empirical_step, problem.global, constants)
    } else {
        for name in [
            "spectral.perron_identities",
            "spectral.powers_decay",
            "spectral.contraction",
            "spectral.norm_equivalence",
            "spectral.inverse_diagonal_decay",
            "analysis.step_bound",
            "analysis.rho_at_alpha",
            "algorithms.tracking_identities",
            "analysis.theorem1",
            "analysis.linear_rate",
        ] {
            checks.push(Check::inapplicable(name, "weight matrix invalid"));
        }
        let global = clean.global;
        finish(config, checks, step_bound, empirical_step, global, constants)
    }
}

fn finish(
    config: &ExperimentConfig,
    checks: Vec<Check>,
    step_bound: Option<StepSizeBound>,
    empirical_step: Option<EmpiricalStep>,
    global: GlobalConstants,
    constants: Option<BoundConstants>,
) -> Result<VerifyReport> {
    let failed: Vec<&'static str> = checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.name).collect();
    Ok(VerifyReport {
        passed: failed.is_empty(),
        failed,
        alpha: config.alpha,
        checks,
        step_bound,
        empirical_step,
        global,
        constants,
        config: config.clone(),
    })
}

fn objective_checks(problem: &Problem, rng: &mut ChaCha8Rng, checks: &mut Vec<Check>) {
    let suite = &problem.suite;
    let sc = checks::strong_convexity_worst(suite, 50, rng);
    checks.push(Check::bound(
        "objectives.strong_convexity",
        sc,
        RATIO_SLACK,
        "max of f(x1) - f(x2) - grad f(x1)'(x1 - x2) + s/2 |x1 - x2|^2 over 50 pairs per agent",
    ));
    let lip = checks::lipschitz_worst(suite, 50, rng);
    checks.push(Check::bound(
        "objectives.lipschitz",
        lip,
        1.0 + RATIO_SLACK,
        "max |grad f(x1) - grad f(x2)| / (l |x1 - x2|) over 50 pairs per agent",
    ));
    let fd = checks::gradient_fd_worst(suite, 20, rng);
    checks.push(Check::bound("objectives.gradient_fd", fd, FD_TOL, "relative error against central differences, 20 points per agent"));
    let stationarity = suite.total_gradient(&problem.x_star).norm();
    checks.push(Check::bound("objectives.stationarity", stationarity, STATIONARITY_TOL, "|sum_i grad f_i(x*)|"));

    let g = problem.global;
    let mut worst: f64 = 0.0;
    for factor in [0.5, 1.0, 1.5] {
        let step = factor / g.nl;
        let contraction = eta(step, suite.n(), g.l, g.s);
        for _ in 0..50 {
            let x = DVector::from_fn(suite.p(), |_, _| rng.random_range(-3.0..3.0));
            let before = (&x - &problem.x_star).norm();
            if let Ok(next) = centralized_gd_step(&x, step, suite) {
                worst = worst.max((&next - &problem.x_star).norm() / (contraction * before).max(f64::MIN_POSITIVE));
            }
        }
    }
    checks.push(Check::bound(
        "objectives.gd_contraction",
        worst,
        1.0 + RATIO_SLACK,
        "|x+ - x*| / (eta |x - x*|) for steps 0.5, 1, 1.5 over nl",
    ));
}

fn single_agent_oracle() -> Check {
    let suite = quadratic_suite(vec![DMatrix::from_element(1, 1, 2.0)], vec![DVector::from_element(1, -3.0)])
        .expect("positive definite");
    let alpha = 0.1;
    let mut state = algorithms::init_state(&suite, &DMatrix::from_element(1, 1, 5.0)).expect("shapes match");
    let mut x = DVector::from_element(1, 5.0);
    let a = WeightMatrix::from_matrix_unchecked(DMatrix::identity(1, 1));
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        state = algorithms::step(&state, &a, alpha, &suite).expect("nonsingular");
        x = centralized_gd_step(&x, alpha, &suite).expect("step in range");
        worst = worst.max((state.x[(0, 0)] - x[0]).abs());
    }
    Check::bound("algorithms.single_agent_gd", worst, ORACLE_TOL, "n = 1 iterates against centralized gradient descent, 100 steps")
}

fn spectral_checks(problem: &Problem, rng: &mut ChaCha8Rng, checks: &mut Vec<Check>) {
    let c = &problem.constants;
    let a = problem.weights.matrix();
    let n = problem.n();
    let y_inf = c.limit_matrix();
    let pi = &c.pi;
    let perron = [
        (a.transpose() * pi - pi).amax(),
        (a * &y_inf - &y_inf).amax(),
        (&y_inf * &y_inf - &y_inf).amax(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let inv = DMatrix::from_diagonal(&pi.map(|p| 1.0 / p));
    let ones = (&y_inf * inv - DMatrix::from_element(n, n, 1.0)).amax();
    checks.push(Check::bound(
        "spectral.perron_identities",
        perron.max(ones * PERRON_TOL / LIMIT_INVERSE_TOL),
        PERRON_TOL,
        format!("pi'A = pi', A Yinf = Yinf = Yinf^2 (max {perron:.2e}); Yinf diag(pi)^-1 = 11' ({ones:.2e}, limit {LIMIT_INVERSE_TOL:e})"),
    ));

    match powers_decay_check(&problem.weights, c.horizon.max(2)) {
        Ok(profile) => {
            let ok = profile.gamma1 < 1.0 && profile.bound_holds();
            checks.push(Check::flag(
                "spectral.powers_decay",
                ok,
                format!("gamma1 = {}, T = {}, {} powers", profile.gamma1, profile.t, profile.deviations.len()),
            ));
        }
        Err(e) => checks.push(Check::flag("spectral.powers_decay", false, e.to_string())),
    }

    let ratio = contraction_worst_ratio(&problem.weights, c, 200, rng);
    let certified = c.norm.is_certified();
    checks.push(Check {
        name: "spectral.contraction",
        status: if certified && ratio <= 1.0 + RATIO_SLACK { Status::Pass } else { Status::Fail },
        worst: Some(ratio),
        limit: Some(1.0 + RATIO_SLACK),
        detail: format!(
            "|A a - Yinf a| / (sigma |a - Yinf a|) over 200 vectors, sigma = {}, rho(A - Yinf) < 1 certified: {certified}",
            c.sigma
        ),
    });
    let (lower, upper) = norm_equivalence_worst(c, 200, rng);
    checks.push(Check::bound(
        "spectral.norm_equivalence",
        lower.max(upper),
        1.0 + RATIO_SLACK,
        format!("|x|_2 <= c|x| and |x| <= d|x|_2 over 200 vectors, c = {}, d = {}", c.c, c.d),
    ));
    let (wa, wb) = inverse_diagonal_decay_worst(&problem.weights, c, c.horizon.max(2));
    checks.push(Check::bound(
        "spectral.inverse_diagonal_decay",
        wa.max(wb),
        1.0 + RATIO_SLACK,
        format!("inverse-diagonal decay ratios {wa:.3e} and {wb:.3e} of their bounds"),
    ));
}

fn step_bound_checks(problem: &Problem, alpha: f64, checks: &mut Vec<Check>) -> Option<StepSizeBound> {
    let c = &problem.constants;
    let (n, l, s) = (problem.n(), problem.global.l, problem.global.s);
    let bound = match alpha_upper_bound(c, n, l, s) {
        Ok(b) => b,
        Err(e) => {
            checks.push(Check::flag("analysis.step_bound", false, e.to_string()));
            checks.push(Check::inapplicable("analysis.rho_at_alpha", "no step-size bound"));
            return None;
        }
    };
    let mut failures = Vec::new();
    let g0 = build_g(c, 0.0, n, l, s);
    let rho0 = spectral_radius_3x3(&g0);
    if (rho0 - 1.0).abs() > 1e-10 {
        failures.push(format!("rho(G_0) = {rho0}"));
    }
    let mut eig: Vec<f64> = eigenvalues_3x3(&g0).iter().map(|z| z.re).collect();
    eig.sort_by(f64::total_cmp);
    if (eig[0] - c.sigma).abs() > 1e-6 || (eig[1] - c.sigma).abs() > 1e-6 {
        failures.push(format!("eigenvalues of G_0 {eig:?}, expected sigma twice"));
    }
    let worst_rho = (1..=20)
        .map(|i| spectral_radius_3x3(&build_g(c, bound.alpha_bar * i as f64 / 21.0, n, l, s)))
        .fold(0.0, f64::max);
    if worst_rho >= 1.0 {
        failures.push(format!("rho(G_alpha) = {worst_rho} inside (0, alpha_bar)"));
    }
    if char_poly_eval(1.0, 0.0, c, n, l, s) != 0.0 {
        failures.push("characteristic polynomial nonzero at q = 1, alpha = 0".into());
    }
    if bound.alpha_root.is_finite() {
        let k = c.c * c.d * c.epsilon * c.y_tilde;
        let scale = (k * (n * n) as f64 * l.powi(3) * bound.alpha_root.powi(3)).max(1.0);
        let at_root = char_poly_eval(1.0, bound.alpha_root, c, n, l, s);
        if at_root.abs() > 1e-8 * scale {
            failures.push(format!("characteristic polynomial {at_root} at the root step"));
        }
    }
    let slope = rho_slope_at_zero(c, n, l, s, 1e-8);
    let expected = -(n as f64) * s;
    if !(slope < 0.0 && ((slope - expected) / expected).abs() < 0.1) {
        failures.push(format!("d rho / d alpha at 0 = {slope}, expected about {expected}"));
    }
    checks.push(Check {
        name: "analysis.step_bound",
        status: if failures.is_empty() { Status::Pass } else { Status::Fail },
        worst: Some(worst_rho),
        limit: Some(1.0),
        detail: if failures.is_empty() {
            format!("alpha_bar = {:e}; 20 sampled steps below it give max rho(G) = {worst_rho}", bound.alpha_bar)
        } else {
            failures.join("; ")
        },
    });
    if alpha < bound.alpha_bar {
        let rho = spectral_radius_3x3(&build_g(c, alpha, n, l, s));
        checks.push(Check::bound("analysis.rho_at_alpha", rho, 1.0 - f64::EPSILON, format!("rho(G) at alpha = {alpha}")));
    } else {
        checks.push(Check::inapplicable(
            "analysis.rho_at_alpha",
            format!("alpha = {alpha} is not below alpha_bar = {:e}; the step-size guarantee does not cover it", bound.alpha_bar),
        ));
    }
    Some(bound)
}

fn run_checks(
    problem: &Problem,
    config: &ExperimentConfig,
    bound: Option<&StepSizeBound>,
    checks: &mut Vec<Check>,
) -> Result<()> {
    let alpha = config.alpha;
    let pi = &problem.constants.pi;
    let mut prev: Option<rowstoch_core::NetworkState> = None;
    let mut identity = PerronIdentityMonitor::default();
    let mut worst_b: f64 = 0.0;
    let (trace, _) = problem.run_proposed(alpha, config.max_iters, 1, |s| {
        identity.observe(s, pi);
        if let Some(p) = &prev {
            worst_b = worst_b.max(mean_recursion_error(p, s, pi, alpha));
        }
        prev = Some(s.clone());
    })?;
    let worst_a = identity.worst();
    checks.push(Check::bound(
        "algorithms.tracking_identities",
        worst_a.max(worst_b),
        TRACKING_IDENTITY_TOL,
        format!("pi'z = pi' Yt^-1 grad ({worst_a:.2e}) and mean recursion ({worst_b:.2e}) over {} iterations", config.max_iters),
    ));

    let (n, l, s) = (problem.n(), problem.global.l, problem.global.s);
    if alpha < 2.0 / (n as f64 * l) {
        match theorem1_check(&trace.records, &problem.constants, alpha, n, l, s) {
            Ok(report) => checks.push(Check {
                name: "analysis.theorem1",
                status: if report.holds { Status::Pass } else { Status::Fail },
                worst: Some(report.worst_normalized),
                limit: Some(-rowstoch_core::analysis::THEOREM1_TOL),
                detail: format!("min slack / (1 + |t_k|) over {} steps (must be >= limit)", report.slacks.len()),
            }),
            Err(e) => checks.push(Check::flag("analysis.theorem1", false, e.to_string())),
        }
    } else {
        checks.push(Check::inapplicable("analysis.theorem1", format!("alpha = {alpha} is not below 2/(nl)")));
    }

    let guaranteed = bound.is_some_and(|b| alpha < b.alpha_bar);
    let fit = fit_linear_rate(&trace.records);
    let (ok, detail) = match &fit {
        Ok(r) => (r.mu_hat < 1.0 && r.r_squared > 0.99, format!("mu_hat = {}, r^2 = {}, k in [{}, {}]", r.mu_hat, r.r_squared, r.k_start, r.k_end)),
        Err(e) => (false, e.to_string()),
    };
    checks.push(if ok {
        Check::flag("analysis.linear_rate", true, detail)
    } else if guaranteed {
        Check::flag("analysis.linear_rate", false, detail)
    } else {
        Check::inapplicable("analysis.linear_rate", format!("alpha outside (0, alpha_bar); {detail}"))
    });
    Ok(())
}

fn converges(problem: &Problem, alpha: f64) -> bool {
    let mut config = RunConfig::new(alpha, EMPIRICAL_ITERS);
    config.record_every = 1;
    let Ok(trace) = algorithms::run(&config, &problem.weights, &problem.suite, &problem.x_star, &problem.constants) else {
        return false;
    };
    if trace.records.iter().any(|r| !r.residual2.is_finite()) {
        return false;
    }
    match fit_linear_rate(&trace.records) {
        Ok(r) => r.mu_hat < 1.0 && r.r_squared > 0.9,
        // Too few records above the floor: converged quickly.
        Err(_) => trace.relative_residual().is_some_and(|r| r < 1e-6),
    }
}

/// Doubles the step from `alpha_bar` while a short run still converges.
pub fn empirical_search(problem: &Problem, alpha_bar: f64) -> EmpiricalStep {
    let mut alpha = alpha_bar;
    let mut best = alpha_bar;
    let mut first_failure = None;
    for _ in 0..64 {
        if !converges(problem, alpha) {
            first_failure = Some(alpha);
            break;
        }
        best = alpha;
        alpha *= 2.0;
    }
    EmpiricalStep { alpha: best, first_failure, iterations: EMPIRICAL_ITERS }
}
