//! Perron vector, limit matrix `Y_inf = 1 pi^T`, the contraction norm in which
//! `A - Y_inf` is a strict contraction, and numerical estimates of the network
//! constants used by the `G`/`H_k` comparison system.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::digraph::WeightMatrix;
use crate::linalg::{serialize_matrix, serialize_vector, two_norm};
use crate::{Error, Result};

/// Iteration cap for [`perron_left_vector`].
pub const PERRON_MAX_ITERS: usize = 1_000_000;
/// Largest power tried by [`contraction_norm`].
pub const NORM_DEPTH_CAP: usize = 10_000;
/// Multiplier applied to the fitted decay ratio of `Y_k - Y_inf`.
pub const GAMMA_SAFETY: f64 = 1.05;
/// Decay ratio reported when `Y_k = Y_inf` from the first step on, where any
/// ratio in (0, 1) is valid.
const DEGENERATE_GAMMA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralOptions {
    pub tol: f64,
    pub horizon_cap: usize,
    pub theta_margin: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { tol: 1e-12, horizon_cap: 100_000, theta_margin: 0.1 }
    }
}

/// Left Perron vector of `a` by power iteration, normalized to sum one.
pub fn perron_left_vector(a: &WeightMatrix, tol: f64) -> Result<DVector<f64>> {
    perron_left_vector_capped(a.matrix(), tol, PERRON_MAX_ITERS)
}

/// Iterates `pi <- A^T pi` from the uniform vector until successive iterates
/// differ by less than `tol` in the max norm. The same number of sweeps is then
/// repeated so the remaining error sits at rounding level rather than at
/// `tol / (1 - |lambda_2|)`.
pub fn perron_left_vector_capped(a: &DMatrix<f64>, tol: f64, max_iters: usize) -> Result<DVector<f64>> {
    let n = a.nrows();
    let at = a.transpose();
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    let no_convergence = Error::NoConvergence { what: "Perron left eigenvector", iterations: max_iters };
    let mut converged_at = None;
    for it in 1..=max_iters {
        let next = &at * &pi;
        let diff = (&next - &pi).amax();
        pi = next;
        if !diff.is_finite() {
            return Err(no_convergence);
        }
        if diff < tol {
            converged_at = Some(it);
            break;
        }
    }
    let Some(sweeps) = converged_at else {
        return Err(no_convergence);
    };
    for _ in 0..sweeps.min(max_iters - sweeps) {
        pi = &at * &pi;
    }
    let sum = pi.sum();
    if !(sum.is_finite() && sum > 0.0) {
        return Err(no_convergence);
    }
    pi /= sum;
    Ok(pi)
}

/// `Y_inf = 1 pi^T`.
pub fn limit_matrix(pi: &DVector<f64>) -> DMatrix<f64> {
    let n = pi.len();
    DMatrix::from_fn(n, n, |_, j| pi[j])
}

/// Vector norm `||x|| = sum_{j<N} theta^{-j} ||B^j x||_2` with `B = A - Y_inf`.
///
/// When `||B^N||_2 <= theta^N` this norm satisfies `||B x|| <= theta ||x||`,
/// and `||x||_2 <= ||x|| <= d ||x||_2` with `d = sum_j theta^{-j} ||B^j||_2`.
/// Stacked `n x p` iterates are measured column-wise through the Frobenius
/// norm, which keeps both properties.
#[derive(Clone, Debug, Serialize)]
pub struct NormOperator {
    #[serde(serialize_with = "serialize_matrix")]
    pub base_matrix: DMatrix<f64>,
    pub depth: usize,
    pub theta: f64,
    /// `||B^j||_2` for `j = 0..=depth`.
    pub power_norms: Vec<f64>,
}

impl NormOperator {
    pub fn norm(&self, x: &DMatrix<f64>) -> f64 {
        let mut total = 0.0;
        let mut scale = 1.0;
        let mut current = x.clone();
        for j in 0..self.depth {
            if j > 0 {
                current = &self.base_matrix * &current;
            }
            total += scale * current.norm();
            scale /= self.theta;
        }
        total
    }

    pub fn norm_vec(&self, x: &DVector<f64>) -> f64 {
        self.norm(&DMatrix::from_column_slice(x.len(), 1, x.as_slice()))
    }

    /// `||x||_2 <= c ||x||`; the `j = 0` term alone gives `c = 1`.
    pub fn c(&self) -> f64 {
        1.0
    }

    /// `||x|| <= d ||x||_2`.
    pub fn d(&self) -> f64 {
        let mut scale = 1.0;
        let mut d = 0.0;
        for j in 0..self.depth {
            d += scale * self.power_norms[j];
            scale /= self.theta;
        }
        d
    }

    /// Checks `||B^N||_2 <= theta^N`, the certificate behind the contraction.
    pub fn is_certified(&self) -> bool {
        self.power_norms[self.depth] <= self.theta.powi(self.depth as i32)
    }
}

/// Builds the contraction norm for `B = A - Y_inf`.
///
/// `N` is the smallest power with `||B^N||_2^{1/N} < 1`, and
/// `theta = r + margin (1 - r)` where `r` is the larger of that root and a
/// Gelfand estimate of the spectral radius.
pub fn contraction_norm(a: &WeightMatrix, y_inf: &DMatrix<f64>, theta_margin: f64) -> Result<NormOperator> {
    let b = a.matrix() - y_inf;
    let n = b.nrows();
    let mut power = DMatrix::identity(n, n);
    let mut power_norms = vec![1.0];
    let mut depth = 0;
    let mut root = f64::INFINITY;
    for j in 1..=NORM_DEPTH_CAP {
        power = &b * &power;
        let norm = two_norm(&power);
        power_norms.push(norm);
        let r = norm.powf(1.0 / j as f64);
        if r < 1.0 {
            depth = j;
            root = r;
            break;
        }
    }
    if depth == 0 {
        return Err(Error::SpectralRadiusNotLessThanOne { cap: NORM_DEPTH_CAP });
    }
    let rho_hat = gelfand_radius(&power, depth);
    let base = root.max(rho_hat);
    let theta = (base + theta_margin * (1.0 - base)).min(1.0 - f64::EPSILON);
    Ok(NormOperator { base_matrix: b, depth, theta, power_norms })
}

/// `||P^(2^s)||^{1/(depth 2^s)}` for `P = B^depth`, by repeated squaring.
fn gelfand_radius(power: &DMatrix<f64>, depth: usize) -> f64 {
    let mut p = power.clone();
    let mut exponent = depth as f64;
    for _ in 0..6 {
        p = &p * &p;
        exponent *= 2.0;
    }
    two_norm(&p).powf(1.0 / exponent)
}

/// Network constants feeding the comparison system.
#[derive(Clone, Debug, Serialize)]
pub struct BoundConstants {
    /// `||A - I||_2`
    pub tau: f64,
    /// `||I - Y_inf||_2`
    pub epsilon: f64,
    pub sigma: f64,
    /// `sup_k ||Y_k||_2`
    pub y: f64,
    /// `sup_k ||diag(Y_k)^{-1}||_2`
    pub y_tilde: f64,
    pub c: f64,
    pub d: f64,
    pub gamma1: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "T_tilde")]
    pub t_tilde: f64,
    /// Last power of `A` computed before `||A^K - Y_inf||_2 < tol`.
    pub horizon: usize,
    #[serde(serialize_with = "serialize_vector")]
    pub pi: DVector<f64>,
    pub norm: NormOperator,
}

impl BoundConstants {
    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn limit_matrix(&self) -> DMatrix<f64> {
        limit_matrix(&self.pi)
    }
}

/// Deviations `||A^k - Y_inf||_2` with their fitted geometric envelope.
#[derive(Clone, Debug)]
pub struct DecayProfile {
    pub deviations: Vec<(usize, f64)>,
    pub gamma1: f64,
    pub t: f64,
}

impl DecayProfile {
    /// Whether every recorded deviation lies under `T gamma1^k`.
    pub fn bound_holds(&self) -> bool {
        self.deviations
            .iter()
            .all(|&(k, dev)| dev <= self.t * self.gamma1.powi(k as i32) * (1.0 + 1e-12))
    }

    fn fit(deviations: Vec<(usize, f64)>) -> Self {
        let gamma1 = fit_gamma(&deviations);
        let t = deviations
            .iter()
            .map(|&(k, dev)| dev / gamma1.powi(k as i32))
            .fold(0.0, f64::max);
        Self { deviations, gamma1, t }
    }
}

/// `(dev_K / dev_1)^{1/(K-1)}` over the last nonzero deviation, inflated by
/// [`GAMMA_SAFETY`] and kept strictly below one.
fn fit_gamma(deviations: &[(usize, f64)]) -> f64 {
    let first = deviations.iter().find(|(k, _)| *k == 1).map(|d| d.1);
    let last = deviations.iter().rev().find(|(k, dev)| *k >= 2 && *dev > 0.0);
    match (first, last) {
        (Some(d1), Some(&(k, dk))) if d1 > 0.0 => {
            let raw = (dk / d1).powf(1.0 / (k - 1) as f64);
            if raw >= 1.0 {
                raw * GAMMA_SAFETY
            } else {
                (raw * GAMMA_SAFETY).min(0.5 * (1.0 + raw))
            }
        }
        _ => DEGENERATE_GAMMA,
    }
}

/// `||A^k - Y_inf||_2` for `k = 0..=max_power`, with the fitted envelope.
pub fn powers_decay_check(a: &WeightMatrix, max_power: usize) -> Result<DecayProfile> {
    let pi = perron_left_vector(a, SpectralOptions::default().tol)?;
    let y_inf = limit_matrix(&pi);
    let n = a.n();
    let mut y = DMatrix::identity(n, n);
    let mut deviations = vec![(0, two_norm(&(&y - &y_inf)))];
    for k in 1..=max_power {
        y = a.matrix() * &y;
        deviations.push((k, two_norm(&(&y - &y_inf))));
    }
    Ok(DecayProfile::fit(deviations))
}

/// Computes every constant of [`BoundConstants`] for `a`.
pub fn network_constants(a: &WeightMatrix, opts: &SpectralOptions) -> Result<BoundConstants> {
    let n = a.n();
    let pi = perron_left_vector(a, opts.tol)?;
    let y_inf = limit_matrix(&pi);
    let identity = DMatrix::<f64>::identity(n, n);
    let tau = two_norm(&(a.matrix() - &identity));
    let epsilon = two_norm(&(&identity - &y_inf));

    let mut y_k = identity.clone();
    let mut deviations = vec![(0, epsilon)];
    let mut y_sup: f64 = 1.0;
    let mut y_tilde: f64 = 1.0;
    let mut k = 0;
    while deviations[k].1 >= opts.tol {
        if k == opts.horizon_cap {
            return Err(Error::NoConvergence { what: "powers of A", iterations: k });
        }
        y_k = a.matrix() * &y_k;
        k += 1;
        deviations.push((k, two_norm(&(&y_k - &y_inf))));
        y_sup = y_sup.max(two_norm(&y_k));
        let min_diag = y_k.diagonal().min();
        y_tilde = y_tilde.max(1.0 / min_diag);
    }
    // The suprema run over all k, including the limit.
    y_sup = y_sup.max((n as f64).sqrt() * pi.norm());
    y_tilde = y_tilde.max(1.0 / pi.min());

    let profile = DecayProfile::fit(deviations);
    let norm = contraction_norm(a, &y_inf, opts.theta_margin)?;
    Ok(BoundConstants {
        tau,
        epsilon,
        sigma: norm.theta,
        y: y_sup,
        y_tilde,
        c: norm.c(),
        d: norm.d(),
        gamma1: profile.gamma1,
        t: profile.t,
        t_tilde: profile.t,
        horizon: k,
        pi,
        norm,
    })
}

/// Worst ratio `||A a - Y_inf a|| / (sigma ||a - Y_inf a||)` over `samples`
/// random vectors; the contraction holds when the result is at most one.
pub fn contraction_worst_ratio<R: Rng>(a: &WeightMatrix, constants: &BoundConstants, samples: usize, rng: &mut R) -> f64 {
    let n = a.n();
    let y_inf = constants.limit_matrix();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let hat = &y_inf * &v;
        let lhs = constants.norm.norm_vec(&(a.matrix() * &v - &hat));
        let rhs = constants.sigma * constants.norm.norm_vec(&(&v - &hat));
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        } else if lhs > 0.0 {
            return f64::INFINITY;
        }
    }
    worst
}

/// Worst ratios of `||x||_2 / (c ||x||)` and `||x|| / (d ||x||_2)`.
pub fn norm_equivalence_worst<R: Rng>(constants: &BoundConstants, samples: usize, rng: &mut R) -> (f64, f64) {
    let n = constants.n();
    let mut lower: f64 = 0.0;
    let mut upper: f64 = 0.0;
    for _ in 0..samples {
        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let two = v.norm();
        let custom = constants.norm.norm_vec(&v);
        lower = lower.max(two / (constants.c * custom));
        upper = upper.max(custom / (constants.d * two));
    }
    (lower, upper)
}

/// Largest observed ratio of each inverse-diagonal bound to its right-hand side,
/// over `k = 1..=max_power`:
/// `||Yt_k^{-1} - Yt_inf^{-1}||_2 <= y~^2 T~ gamma1^k` and
/// `||Yt_{k+1}^{-1} - Yt_k^{-1}||_2 <= 2 y~^2 T~ gamma1^k`.
pub fn inverse_diagonal_decay_worst(a: &WeightMatrix, constants: &BoundConstants, max_power: usize) -> (f64, f64) {
    let n = a.n();
    let inv_inf = constants.pi.map(|p| 1.0 / p);
    let mut y_k = a.matrix().clone();
    let mut inv_k = DVector::from_fn(n, |i, _| 1.0 / y_k[(i, i)]);
    let coeff = constants.y_tilde.powi(2) * constants.t_tilde;
    let (mut worst_a, mut worst_b): (f64, f64) = (0.0, 0.0);
    for k in 1..=max_power {
        let y_next = a.matrix() * &y_k;
        let inv_next = DVector::from_fn(n, |i, _| 1.0 / y_next[(i, i)]);
        let bound = coeff * constants.gamma1.powi(k as i32);
        let lhs_a = (&inv_k - &inv_inf).amax();
        let lhs_b = (&inv_next - &inv_k).amax();
        worst_a = worst_a.max(ratio(lhs_a, bound));
        worst_b = worst_b.max(ratio(lhs_b, 2.0 * bound));
        y_k = y_next;
        inv_k = inv_next;
    }
    (worst_a, worst_b)
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    // Differences at rounding level count as zero.
    let lhs = if lhs < 1e-14 { 0.0 } else { lhs };
    if lhs == 0.0 {
        0.0
    } else if rhs > 0.0 {
        lhs / rhs
    } else {
        f64::INFINITY
    }
}
