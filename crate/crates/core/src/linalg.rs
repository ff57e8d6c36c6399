//! Small dense helpers shared by the spectral and analysis code.

use nalgebra::{DMatrix, DVector};

/// Relative stopping tolerance for [`two_norm`].
pub const TWO_NORM_TOL: f64 = 1e-12;
/// Iteration cap for [`two_norm`].
pub const TWO_NORM_MAX_ITERS: usize = 100_000;

/// Spectral norm `||m||_2`, computed by power iteration on `m^T m`.
///
/// The iteration runs until the Rayleigh quotient changes by less than
/// [`TWO_NORM_TOL`] relative, then repeats as many sweeps again: the per-sweep
/// change understates the remaining error when the top two singular values
/// are close. At most [`TWO_NORM_MAX_ITERS`] sweeps in total.
pub fn two_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = m.transpose() * m;
    let n = gram.nrows();
    // Irregular start vector: structured choices such as the all-ones vector
    // lie in the kernel of A - Y_inf.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (0.618_033_988_749_895 * (i as f64 + 1.0)).fract());
    v.normalize_mut();
    let mut lambda: f64 = 0.0;
    let mut converged_at = None;
    for it in 1..=TWO_NORM_MAX_ITERS {
        let w = &gram * &v;
        let next = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 || !wn.is_finite() {
            return if wn == 0.0 { 0.0 } else { f64::INFINITY };
        }
        v = w / wn;
        let settled = (next - lambda).abs() <= TWO_NORM_TOL * next.abs();
        lambda = lambda.max(next);
        match converged_at {
            None if settled => converged_at = Some(it),
            Some(first) if it >= 2 * first => break,
            _ => {}
        }
    }
    lambda.max(0.0).sqrt()
}

/// `diag(m)^{-1}` as a vector of reciprocals of the diagonal.
pub fn inverse_diagonal(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(m.nrows(), |i, _| 1.0 / m[(i, i)])
}

/// Scales row `i` of `m` by `scale[i]`.
pub fn scale_rows(m: &DMatrix<f64>, scale: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= scale[i];
    }
    out
}

/// Rows of `m` as nested vectors, for serialization.
pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Inverse of [`to_rows`]; `None` when the rows are ragged.
pub fn from_rows(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    Some(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub(crate) fn serialize_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&to_rows(m), s)
}

pub(crate) fn serialize_vector<S: serde::Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}
