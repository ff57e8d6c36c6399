//! Local objectives `f_i` with their strong-convexity and Lipschitz-gradient
//! constants.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fraction of generated logistic labels that are flipped.
pub const LABEL_FLIP_PROB: f64 = 0.1;

#[derive(Clone, Debug)]
pub enum LocalObjective {
    /// `1/2 x^T Q x + r^T x`
    Quadratic { q: DMatrix<f64>, r: DVector<f64> },
    /// `reg/2 ||x||^2 + sum_j ln(1 + exp(-b_j c_j^T x))`
    Logistic { features: DMatrix<f64>, labels: DVector<f64>, reg: f64 },
}

impl LocalObjective {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            Self::Quadratic { q, r } => 0.5 * x.dot(&(q * x)) + r.dot(x),
            Self::Logistic { features, labels, reg } => {
                let margins = features * x;
                let loss: f64 = margins.iter().zip(labels.iter()).map(|(m, b)| softplus(-b * m)).sum();
                0.5 * reg * x.norm_squared() + loss
            }
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Quadratic { q, r } => q * x + r,
            Self::Logistic { features, labels, reg } => {
                let margins = features * x;
                // d/dm ln(1 + e^{-b m}) = -b sigmoid(-b m)
                let weights = DVector::from_fn(labels.len(), |j, _| -labels[j] * sigmoid(-labels[j] * margins[j]));
                features.transpose() * weights + x * *reg
            }
        }
    }
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `n` local objectives over a common decision dimension `p`.
#[derive(Clone, Debug)]
pub struct ObjectiveSuite {
    p: usize,
    locals: Vec<LocalObjective>,
    strong: Vec<f64>,
    lipschitz: Vec<f64>,
    closed_form: Option<DVector<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GlobalConstants {
    pub s: f64,
    pub l: f64,
    pub ns: f64,
    pub nl: f64,
}

impl ObjectiveSuite {
    pub fn n(&self) -> usize {
        self.locals.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn locals(&self) -> &[LocalObjective] {
        &self.locals
    }

    pub fn strong_convexity(&self) -> &[f64] {
        &self.strong
    }

    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    /// Stacked gradients: row `i` is `grad f_i(x.row(i))`.
    pub fn gradients(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n(), self.p);
        for (i, f) in self.locals.iter().enumerate() {
            let xi = x.row(i).transpose();
            out.set_row(i, &f.gradient(&xi).transpose());
        }
        out
    }

    /// `sum_i grad f_i(x)`.
    pub fn total_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.locals.iter().fold(DVector::zeros(self.p), |acc, f| acc + f.gradient(x))
    }

    pub fn total_value(&self, x: &DVector<f64>) -> f64 {
        self.locals.iter().map(|f| f.value(x)).sum()
    }

    /// Uniform constants: `s = min s_i`, `l = max l_i`.
    pub fn global_constants(&self) -> GlobalConstants {
        let s = self.strong.iter().copied().fold(f64::INFINITY, f64::min);
        let l = self.lipschitz.iter().copied().fold(0.0, f64::max);
        let n = self.n() as f64;
        GlobalConstants { s, l, ns: n * s, nl: n * l }
    }

    /// Closed-form minimizer when the suite is quadratic.
    pub fn closed_form_optimum(&self) -> Option<&DVector<f64>> {
        self.closed_form.as_ref()
    }

    /// Keeps agents in a new order: agent `perm[i]` of the result is agent `i`
    /// of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        let mut inverse = vec![0; n];
        for (i, &target) in perm.iter().enumerate() {
            inverse[target] = i;
        }
        Self {
            p: self.p,
            locals: inverse.iter().map(|&i| self.locals[i].clone()).collect(),
            strong: inverse.iter().map(|&i| self.strong[i]).collect(),
            lipschitz: inverse.iter().map(|&i| self.lipschitz[i]).collect(),
            closed_form: self.closed_form.clone(),
        }
    }
}

fn symmetric_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// Quadratic suite `f_i(x) = 1/2 x^T Q_i x + r_i^T x` with `s_i = lambda_min(Q_i)`
/// and `l_i = lambda_max(Q_i)`.
pub fn quadratic_suite(qs: Vec<DMatrix<f64>>, rs: Vec<DVector<f64>>) -> Result<ObjectiveSuite> {
    if qs.is_empty() || qs.len() != rs.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} linear terms", qs.len()),
            got: rs.len().to_string(),
        });
    }
    let p = rs[0].len();
    let mut strong = Vec::with_capacity(qs.len());
    let mut lipschitz = Vec::with_capacity(qs.len());
    for (agent, (q, r)) in qs.iter().zip(&rs).enumerate() {
        if q.nrows() != p || q.ncols() != p || r.len() != p {
            return Err(Error::ShapeMismatch {
                expected: format!("{p}x{p} and {p}"),
                got: format!("{}x{} and {}", q.nrows(), q.ncols(), r.len()),
            });
        }
        let asym = (q - q.transpose()).amax();
        if asym > 1e-12 * q.amax().max(1.0) {
            return Err(Error::NotPositiveDefinite { agent });
        }
        let (lo, hi) = symmetric_extremes(q);
        if lo.is_nan() || lo <= 0.0 {
            return Err(Error::NotPositiveDefinite { agent });
        }
        strong.push(lo);
        lipschitz.push(hi);
    }
    let q_sum = qs.iter().fold(DMatrix::zeros(p, p), |acc, q| acc + q);
    let r_sum = rs.iter().fold(DVector::zeros(p), |acc, r| acc + r);
    let closed_form = q_sum.cholesky().map(|c| -c.solve(&r_sum));
    let locals = qs.into_iter().zip(rs).map(|(q, r)| LocalObjective::Quadratic { q, r }).collect();
    Ok(ObjectiveSuite { p, locals, strong, lipschitz, closed_form })
}

/// Random quadratic suite with each `Q_i = M M^T / p + I / 2`.
pub fn random_quadratic_suite(n: usize, p: usize, seed: u64) -> Result<ObjectiveSuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut qs = Vec::with_capacity(n);
    let mut rs = Vec::with_capacity(n);
    for _ in 0..n {
        let m = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = (&m * m.transpose()) / p as f64 + DMatrix::identity(p, p) * 0.5;
        qs.push((&q + q.transpose()) * 0.5);
        rs.push(DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal)));
    }
    quadratic_suite(qs, rs)
}

/// Training examples for one agent: rows of `features` are `c_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentData {
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticData {
    pub agents: Vec<AgentData>,
    pub beta: f64,
}

/// Dataset manifest: `{"n", "p", "beta", "files": [...]}`; file paths are
/// resolved relative to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub n: usize,
    pub p: usize,
    pub beta: f64,
    pub files: Vec<PathBuf>,
}

impl LogisticData {
    /// Gaussian features with variance `1/p` (unit expected norm); labels are
    /// the sign of a random ground-truth hyperplane, flipped with probability
    /// [`LABEL_FLIP_PROB`].
    pub fn generate(n: usize, m: usize, p: usize, beta: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let scale = 1.0 / (p.max(1) as f64).sqrt();
        let agents = (0..n)
            .map(|_| {
                let features = DMatrix::from_fn(m, p, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
                let labels = DVector::from_fn(m, |j, _| {
                    let clean = if features.row(j).transpose().dot(&truth) >= 0.0 { 1.0 } else { -1.0 };
                    if rng.random::<f64>() < LABEL_FLIP_PROB {
                        -clean
                    } else {
                        clean
                    }
                });
                AgentData { features, labels }
            })
            .collect();
        Self { agents, beta }
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn p(&self) -> usize {
        self.agents.first().map_or(0, |a| a.features.ncols())
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::InvalidData("no agents".into()));
        }
        if self.beta.is_nan() || self.beta < 0.0 {
            return Err(Error::InvalidData(format!("beta = {} must be nonnegative", self.beta)));
        }
        let p = self.p();
        for (i, agent) in self.agents.iter().enumerate() {
            if agent.features.nrows() == 0 {
                return Err(Error::InvalidData(format!("agent {i} has no examples")));
            }
            if agent.features.ncols() != p || agent.labels.len() != agent.features.nrows() {
                return Err(Error::InvalidData(format!("agent {i} has inconsistent shapes")));
            }
            if agent.labels.iter().any(|&b| b != 1.0 && b != -1.0) {
                return Err(Error::InvalidData(format!("agent {i} has labels other than +1/-1")));
            }
        }
        Ok(())
    }

    /// Reads a manifest and the per-agent CSV files it lists.
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let manifest_path = manifest_path.as_ref();
        let manifest: DatasetManifest = serde_json::from_str(&std::fs::read_to_string(manifest_path)?)?;
        if manifest.files.len() != manifest.n {
            return Err(Error::InvalidData(format!(
                "manifest lists {} files for n = {}",
                manifest.files.len(),
                manifest.n
            )));
        }
        let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let agents = manifest
            .files
            .iter()
            .map(|f| read_agent_csv(&dir.join(f), manifest.p))
            .collect::<Result<Vec<_>>>()?;
        let data = Self { agents, beta: manifest.beta };
        data.validate()?;
        Ok(data)
    }

    /// Writes `agent_<i>.csv` files and `manifest.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::with_capacity(self.n());
        for (i, agent) in self.agents.iter().enumerate() {
            let name = PathBuf::from(format!("agent_{i}.csv"));
            let mut w = csv::WriterBuilder::new().has_headers(false).from_path(dir.join(&name))?;
            for j in 0..agent.features.nrows() {
                let mut row: Vec<String> = agent.features.row(j).iter().map(|v| v.to_string()).collect();
                row.push(agent.labels[j].to_string());
                w.write_record(&row)?;
            }
            w.flush()?;
            files.push(name);
        }
        let manifest = DatasetManifest { n: self.n(), p: self.p(), beta: self.beta, files };
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(path)
    }
}

fn read_agent_csv(path: &Path, p: usize) -> Result<AgentData> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).from_path(path)?;
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != p + 1 {
            return Err(Error::InvalidData(format!(
                "{}: expected {} columns, found {}",
                path.display(),
                p + 1,
                record.len()
            )));
        }
        let values = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))?;
        feats.extend_from_slice(&values[..p]);
        labels.push(values[p]);
    }
    let m = labels.len();
    Ok(AgentData { features: DMatrix::from_row_slice(m, p, &feats), labels: DVector::from_vec(labels) })
}

/// Logistic suite with `f_i(x) = beta/(2n) ||x||^2 + sum_j ln(1 + exp(-b_ij c_ij^T x))`,
/// `s_i = beta/n` and `l_i = beta/n + lambda_max(C_i^T C_i) / 4`.
pub fn logistic_suite(data: &LogisticData) -> Result<ObjectiveSuite> {
    data.validate()?;
    let n = data.n();
    let reg = data.beta / n as f64;
    let mut strong = Vec::with_capacity(n);
    let mut lipschitz = Vec::with_capacity(n);
    let mut locals = Vec::with_capacity(n);
    for agent in &data.agents {
        let gram = agent.features.transpose() * &agent.features;
        let (_, top) = symmetric_extremes(&gram);
        strong.push(reg);
        lipschitz.push(reg + 0.25 * top.max(0.0));
        locals.push(LocalObjective::Logistic {
            features: agent.features.clone(),
            labels: agent.labels.clone(),
            reg,
        });
    }
    Ok(ObjectiveSuite { p: data.p(), locals, strong, lipschitz, closed_form: None })
}

/// Centralized gradient descent on `sum_i f_i` with step `1/(n l)`, started at
/// the origin, until `||sum_i grad f_i(x)||_2 < tol`.
pub fn gradient_descent_optimum(suite: &ObjectiveSuite, tol: f64, max_iters: usize) -> Result<DVector<f64>> {
    let step = 1.0 / suite.global_constants().nl;
    let mut x = DVector::zeros(suite.p());
    for _ in 0..max_iters {
        let g = suite.total_gradient(&x);
        let norm = g.norm();
        if norm < tol {
            return Ok(x);
        }
        if !norm.is_finite() {
            break;
        }
        x -= g * step;
    }
    Err(Error::NoConvergence { what: "centralized gradient descent", iterations: max_iters })
}

/// Ground-truth minimizer: closed form for quadratic suites, otherwise
/// [`gradient_descent_optimum`] with at most a million steps.
pub fn global_optimum(suite: &ObjectiveSuite, tol: f64) -> Result<DVector<f64>> {
    if let Some(x) = suite.closed_form_optimum() {
        if suite.total_gradient(x).norm() < tol {
            return Ok(x.clone());
        }
    }
    gradient_descent_optimum(suite, tol, 1_000_000)
}

/// Randomized checks of the strong-convexity and Lipschitz inequalities and of
/// gradients against central finite differences.
pub mod checks {
    use super::*;

    /// Finite-difference step.
    pub const FD_STEP: f64 = 1e-6;

    fn random_point<R: Rng>(p: usize, rng: &mut R) -> DVector<f64> {
        DVector::from_fn(p, |_, _| rng.random_range(-3.0..3.0))
    }

    /// Central-difference gradient of `f` at `x`.
    pub fn finite_difference_gradient(f: &LocalObjective, x: &DVector<f64>, h: f64) -> DVector<f64> {
        DVector::from_fn(x.len(), |k, _| {
            let mut up = x.clone();
            let mut down = x.clone();
            up[k] += h;
            down[k] -= h;
            (f.value(&up) - f.value(&down)) / (2.0 * h)
        })
    }

    /// Largest `||g - g_fd||_2 / max(||g||_2, 1)` over all agents and points.
    pub fn gradient_fd_worst<R: Rng>(suite: &ObjectiveSuite, points: usize, rng: &mut R) -> f64 {
        let mut worst: f64 = 0.0;
        for f in suite.locals() {
            for _ in 0..points {
                let x = random_point(suite.p(), rng);
                let g = f.gradient(&x);
                let fd = finite_difference_gradient(f, &x, FD_STEP);
                worst = worst.max((&g - fd).norm() / g.norm().max(1.0));
            }
        }
        worst
    }

    /// Largest violation of
    /// `f(x1) - f(x2) <= grad f(x1)^T (x1 - x2) - s_i/2 ||x1 - x2||^2`.
    pub fn strong_convexity_worst<R: Rng>(suite: &ObjectiveSuite, pairs: usize, rng: &mut R) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (f, &s) in suite.locals().iter().zip(suite.strong_convexity()) {
            for _ in 0..pairs {
                let x1 = random_point(suite.p(), rng);
                let x2 = random_point(suite.p(), rng);
                let diff = &x1 - &x2;
                let lhs = f.value(&x1) - f.value(&x2);
                let rhs = f.gradient(&x1).dot(&diff) - 0.5 * s * diff.norm_squared();
                worst = worst.max(lhs - rhs);
            }
        }
        worst
    }

    /// Largest `||grad f(x1) - grad f(x2)|| / (l_i ||x1 - x2||)`.
    pub fn lipschitz_worst<R: Rng>(suite: &ObjectiveSuite, pairs: usize, rng: &mut R) -> f64 {
        let mut worst: f64 = 0.0;
        for (f, &l) in suite.locals().iter().zip(suite.lipschitz()) {
            for _ in 0..pairs {
                let x1 = random_point(suite.p(), rng);
                let x2 = random_point(suite.p(), rng);
                let num = (f.gradient(&x1) - f.gradient(&x2)).norm();
                worst = worst.max(num / (l * (&x1 - &x2).norm()));
            }
        }
        worst
    }
}
