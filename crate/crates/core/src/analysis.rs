//! The linear comparison system `t_{k+1} <= G t_k + H_k s_k`, the step-size
//! bound that makes `rho(G) < 1`, trace records, and empirical rate fitting.
//!
//! `t_k = (||x_k - x^_k||, ||x^_k - x*||_2, ||z_k - z^_k||)` mixes the
//! contraction norm (first and third components) with the Euclidean norm, and
//! `s_k = (||grad F_k||_2, 0, 0)`.

use nalgebra::{Complex, DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::algorithms::NetworkState;
use crate::spectral::BoundConstants;
use crate::{Error, Result};

/// Relative tolerance of the comparison-inequality check.
pub const THEOREM1_TOL: f64 = 1e-9;
/// Residuals below `FLOOR_FACTOR * eps * initial` are excluded from rate fits.
pub const FLOOR_FACTOR: f64 = 1e3;
/// Minimum number of points a rate fit needs.
pub const MIN_FIT_POINTS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `||x_k - 1 x*^T||_2`
    pub residual2: f64,
    pub consensus_err: f64,
    pub opt_err: f64,
    pub grad_track_err: f64,
    pub grad_norm: f64,
}

impl TraceRecord {
    pub fn from_state(state: &NetworkState, x_star: &DVector<f64>, constants: &BoundConstants) -> Self {
        let (n, p) = state.x.shape();
        let pi = &constants.pi;
        let x_hat_row = state.x.transpose() * pi;
        let z_hat_row = state.z.transpose() * pi;
        let x_hat = DMatrix::from_fn(n, p, |_, c| x_hat_row[c]);
        let z_hat = DMatrix::from_fn(n, p, |_, c| z_hat_row[c]);
        let target = DMatrix::from_fn(n, p, |_, c| x_star[c]);
        Self {
            k: state.k,
            residual2: (&state.x - &target).norm(),
            consensus_err: constants.norm.norm(&(&state.x - &x_hat)),
            opt_err: (&x_hat - &target).norm(),
            grad_track_err: constants.norm.norm(&(&state.z - &z_hat)),
            grad_norm: state.grad.norm(),
        }
    }

    pub fn t(&self) -> Vector3<f64> {
        Vector3::new(self.consensus_err, self.opt_err, self.grad_track_err)
    }

    pub fn s(&self) -> Vector3<f64> {
        Vector3::new(self.grad_norm, 0.0, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTrace {
    pub algorithm: String,
    pub alpha: f64,
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn final_record(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Final `residual2` divided by the initial one.
    pub fn relative_residual(&self) -> Option<f64> {
        let first = self.records.first()?.residual2;
        let last = self.records.last()?.residual2;
        Some(if first > 0.0 { last / first } else { last })
    }

    /// First recorded iteration whose relative residual is at most `level`.
    pub fn first_below(&self, level: f64) -> Option<usize> {
        let first = self.records.first()?.residual2;
        self.records.iter().find(|r| r.residual2 <= level * first).map(|r| r.k)
    }
}

/// `max(|1 - alpha n l|, |1 - alpha n s|)`.
pub fn eta(alpha: f64, n: usize, l: f64, s: f64) -> f64 {
    let n = n as f64;
    (1.0 - alpha * n * l).abs().max((1.0 - alpha * n * s).abs())
}

/// The comparison matrix `G`.
pub fn build_g(c: &BoundConstants, alpha: f64, n: usize, l: f64, s: f64) -> Matrix3<f64> {
    let nf = n as f64;
    let cd_eps_yt = c.c * c.d * c.epsilon * c.y_tilde;
    Matrix3::new(
        c.sigma,
        0.0,
        alpha,
        alpha * c.c * nf * l,
        eta(alpha, n, l, s),
        0.0,
        cd_eps_yt * l * (c.tau + alpha * nf * l),
        alpha * c.d * c.epsilon * l * l * c.y_tilde * nf,
        c.sigma + alpha * cd_eps_yt * l,
    )
}

/// The perturbation matrix `H_k`; only its first column is nonzero.
pub fn build_hk(c: &BoundConstants, alpha: f64, k: usize, l: f64) -> Matrix3<f64> {
    let decay = c.gamma1.powi(k as i32);
    let yt2t = c.y_tilde * c.y_tilde * c.t_tilde;
    let mut h = Matrix3::zeros();
    h[(1, 0)] = alpha * c.y * yt2t * decay;
    h[(2, 0)] = (alpha * c.epsilon * c.y_tilde * l * c.y + 2.0 * c.epsilon) * c.d * yt2t * decay;
    h
}

/// `Gamma_1 gamma1^k` with
/// `Gamma_1 = sqrt((alpha y y~^2 T~)^2 + (eps d y~^2 T~)^2 (2 + alpha y y~ l)^2)`.
pub fn hk_norm_closed_form(c: &BoundConstants, alpha: f64, k: usize, l: f64) -> f64 {
    let yt2t = c.y_tilde * c.y_tilde * c.t_tilde;
    let a = alpha * c.y * yt2t;
    let b = c.epsilon * c.d * yt2t * (2.0 + alpha * c.y * c.y_tilde * l);
    a.hypot(b) * c.gamma1.powi(k as i32)
}

/// Characteristic polynomial of `G` in the expanded form
/// `((q-sigma)^2 - alpha c d eps l y~ (q-sigma))(q - 1 + n alpha s)
///  - alpha c d (q - 1 + n alpha s)(eps l tau y~ + alpha eps l^2 y~ n)
///  - alpha^3 c d n^2 l^3 eps y~`,
/// which equals `det(qI - G)` whenever `eta = 1 - alpha n s`.
pub fn char_poly_eval(q: f64, alpha: f64, c: &BoundConstants, n: usize, l: f64, s: f64) -> f64 {
    let nf = n as f64;
    let cd = c.c * c.d;
    let shift = q - c.sigma;
    let lead = q - 1.0 + nf * alpha * s;
    (shift * shift - alpha * cd * c.epsilon * l * c.y_tilde * shift) * lead
        - alpha * cd * lead * (c.epsilon * l * c.tau * c.y_tilde + alpha * c.epsilon * l * l * c.y_tilde * nf)
        - alpha.powi(3) * cd * nf * nf * l.powi(3) * c.epsilon * c.y_tilde
}

/// Positive step size at which `G` has eigenvalue one:
/// `(sqrt(D^2 + 4 K n^3 l^2 (l+s) s (1-sigma)^2) - D) / (2 K n^2 l^2 (l+s))` with
/// `K = c d eps y~` and `D = K l n s (tau + 1 - sigma)`. Infinite when `K = 0`.
pub fn alpha_root(c: &BoundConstants, n: usize, l: f64, s: f64) -> f64 {
    let nf = n as f64;
    let k = c.c * c.d * c.epsilon * c.y_tilde;
    let delta = k * l * nf * s * (c.tau + 1.0 - c.sigma);
    let denom = 2.0 * k * nf * nf * l * l * (l + s);
    if denom == 0.0 {
        return f64::INFINITY;
    }
    let disc = delta * delta + 4.0 * k * nf.powi(3) * l * l * (l + s) * s * (1.0 - c.sigma).powi(2);
    // Rationalized form of (sqrt(disc) - delta) / denom avoids cancellation.
    let root = disc.sqrt();
    let numer = 4.0 * k * nf.powi(3) * l * l * (l + s) * s * (1.0 - c.sigma).powi(2);
    numer / ((root + delta) * denom)
}

#[derive(Clone, Debug, Serialize)]
pub struct StepSizeBound {
    pub alpha_bar: f64,
    pub alpha_root: f64,
    pub inverse_nl: f64,
    /// `(alpha, rho(G_alpha))` at the certification points.
    pub certified: Vec<(f64, f64)>,
}

/// `alpha_bar = min(alpha_root, 1/(n l))`, certified by checking
/// `rho(G_alpha) < 1` at `alpha_bar/10`, `alpha_bar/2` and `0.99 alpha_bar`.
pub fn alpha_upper_bound(c: &BoundConstants, n: usize, l: f64, s: f64) -> Result<StepSizeBound> {
    let root = alpha_root(c, n, l, s);
    let inverse_nl = 1.0 / (n as f64 * l);
    let alpha_bar = root.min(inverse_nl);
    let mut certified = Vec::new();
    for alpha in [alpha_bar / 10.0, alpha_bar / 2.0, 0.99 * alpha_bar] {
        let rho = spectral_radius_3x3(&build_g(c, alpha, n, l, s));
        if rho.is_nan() || rho >= 1.0 {
            return Err(Error::CertificationFailed { alpha, rho });
        }
        certified.push((alpha, rho));
    }
    Ok(StepSizeBound { alpha_bar, alpha_root: root, inverse_nl, certified })
}

/// Finite-difference slope `(rho(G_h) - rho(G_0)) / h`.
pub fn rho_slope_at_zero(c: &BoundConstants, n: usize, l: f64, s: f64, h: f64) -> f64 {
    let at = |alpha| spectral_radius_3x3(&build_g(c, alpha, n, l, s));
    (at(h) - at(0.0)) / h
}

/// Eigenvalues of a 3x3 real matrix from its characteristic cubic.
///
/// The largest real root is isolated by bisection between the critical
/// points of the cubic, then deflated; the remaining quadratic is solved in closed form.
pub fn eigenvalues_3x3(g: &Matrix3<f64>) -> [Complex<f64>; 3] {
    let trace = g.trace();
    let minors = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)] + g[(0, 0)] * g[(2, 2)] - g[(0, 2)] * g[(2, 0)]
        + g[(1, 1)] * g[(2, 2)] - g[(1, 2)] * g[(2, 1)];
    let det = g.determinant();
    // x^3 + b x^2 + c x + d
    let (b, c, d) = (-trace, minors, -det);
    // Bisection evaluates det(xI - G) directly, which stays exact for
    // repeated roots of diagonal-like matrices where the expanded cubic does not.
    let p = |x: f64| (Matrix3::identity() * x - g).determinant();
    let bound = 1.0 + b.abs().max(c.abs()).max(d.abs());

    let disc = 4.0 * b * b - 12.0 * c;
    let (mut lo, mut hi) = if disc <= 0.0 {
        (-bound, bound)
    } else {
        let sq = disc.sqrt();
        let c1 = (-2.0 * b - sq) / 6.0;
        let c2 = (-2.0 * b + sq) / 6.0;
        if p(c2) <= 0.0 {
            (c2, bound)
        } else {
            (-bound, c1)
        }
    };
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = if p(hi).abs() < p(lo).abs() { hi } else { lo };

    let e = b + r;
    let f = c + r * e;
    let qdisc = e * e - 4.0 * f;
    let (r2, r3) = if qdisc >= 0.0 {
        let sq = qdisc.sqrt();
        let q = -0.5 * (e + if e >= 0.0 { sq } else { -sq });
        if q == 0.0 {
            (Complex::new(0.0, 0.0), Complex::new(0.0, 0.0))
        } else {
            (Complex::new(q, 0.0), Complex::new(f / q, 0.0))
        }
    } else {
        let im = 0.5 * (-qdisc).sqrt();
        (Complex::new(-0.5 * e, im), Complex::new(-0.5 * e, -im))
    };
    [Complex::new(r, 0.0), r2, r3]
}

pub fn spectral_radius_3x3(g: &Matrix3<f64>) -> f64 {
    eigenvalues_3x3(g).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem1Report {
    /// `G t_k + H_k s_k - t_{k+1}` per step.
    pub slacks: Vec<[f64; 3]>,
    /// Smallest `slack / (1 + ||t_k||_2)` over all steps and components.
    pub worst_normalized: f64,
    pub holds: bool,
}

/// Evaluates the comparison inequality on consecutive records.
pub fn theorem1_check(records: &[TraceRecord], c: &BoundConstants, alpha: f64, n: usize, l: f64, s: f64) -> Result<Theorem1Report> {
    if records.len() < 2 {
        return Err(Error::InsufficientData("need at least two consecutive records".into()));
    }
    let g = build_g(c, alpha, n, l, s);
    let mut slacks = Vec::with_capacity(records.len() - 1);
    let mut worst = f64::INFINITY;
    for pair in records.windows(2) {
        let (now, next) = (&pair[0], &pair[1]);
        if next.k != now.k + 1 {
            return Err(Error::InsufficientData(format!("records {} and {} are not consecutive", now.k, next.k)));
        }
        let t = now.t();
        let slack = g * t + build_hk(c, alpha, now.k, l) * now.s() - next.t();
        worst = worst.min(slack.min() / (1.0 + t.norm()));
        slacks.push([slack[0], slack[1], slack[2]]);
    }
    Ok(Theorem1Report { slacks, worst_normalized: worst, holds: worst >= -THEOREM1_TOL })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub mu_hat: f64,
    pub m_hat: f64,
    pub r_squared: f64,
    pub k_start: usize,
    pub k_end: usize,
    pub points: usize,
}

/// Least-squares fit of `ln residual2` against `k`.
///
/// The window is the prefix of records above the floor
/// `FLOOR_FACTOR * eps * residual2_0`, minus its first tenth.
pub fn fit_linear_rate(records: &[TraceRecord]) -> Result<RateEstimate> {
    let initial = records
        .first()
        .map(|r| r.residual2)
        .ok_or_else(|| Error::InsufficientData("empty trace".into()))?;
    if !(initial > 0.0 && initial.is_finite()) {
        return Err(Error::InsufficientData(format!("initial residual {initial}")));
    }
    let floor = FLOOR_FACTOR * f64::EPSILON * initial;
    let usable = records
        .iter()
        .position(|r| !(r.residual2 > floor && r.residual2.is_finite()))
        .unwrap_or(records.len());
    let window = &records[usable / 10..usable];
    if window.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} records above the floor after the transient, need {MIN_FIT_POINTS}",
            window.len()
        )));
    }
    let xs: Vec<f64> = window.iter().map(|r| r.k as f64).collect();
    let ys: Vec<f64> = window.iter().map(|r| r.residual2.ln()).collect();
    let m = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / m;
    let mean_y = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let syy: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(RateEstimate {
        mu_hat: slope.exp(),
        m_hat: intercept.exp(),
        r_squared,
        k_start: window[0].k,
        k_end: window[window.len() - 1].k,
        points: window.len(),
    })
}
