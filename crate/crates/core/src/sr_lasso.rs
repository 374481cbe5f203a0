//! Weighted square-root LASSO solved by a restarted primal-dual iteration.

use std::fmt;
use std::str::FromStr;

use faer::linalg::matmul::matmul;
use faer::{Accum, ColMut, ColRef, MatRef, Par};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_index::{hyperbolic_cross_anchored_in, largest_hyperbolic_order, IndexSet, MultiIndex};
use crate::poly_basis::{build_design_matrix, BasisFamily, CoefVector, Points};
use crate::rng::StreamRng;
use crate::sampling::{christoffel_distribution, draw_from, draw_mc, Grid, SampleSet, SamplingStrategy};
use crate::weighted_ls::Noise;

/// Power-iteration cap for [`operator_norm`].
pub const POWER_ITERATIONS: usize = 100;
/// Relative change at which [`operator_norm`] stops early.
pub const POWER_TOLERANCE: f64 = 1e-6;
/// Seed of the starting vector in [`operator_norm`].
pub const POWER_SEED: u64 = 0x5eed_0f_a11;
/// Default cardinality budget for the hyperbolic cross.
pub const DEFAULT_BUDGET: usize = 10_000;
/// Consecutive objective increases across restarts that count as divergence.
pub const DIVERGENCE_RUN: usize = 3;
/// Relative excess over the best objective so far that counts as an increase
/// towards [`DIVERGENCE_RUN`].
pub const DIVERGENCE_RTOL: f64 = 1e-2;

/// Regularization parameter rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum LambdaPolicy {
    /// `(5 sqrt(m))^-1`.
    Table,
    /// `(4 sqrt(m / L))^-1` with `L = ln m (ln^3 m + ln(1/epsilon))`.
    Theorem { epsilon: f64 },
}

impl LambdaPolicy {
    pub fn lambda(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return Err(Error::InvalidConfig("lambda needs m >= 1".into()));
        }
        let mf = m as f64;
        match *self {
            LambdaPolicy::Table => Ok(1.0 / (5.0 * mf.sqrt())),
            LambdaPolicy::Theorem { epsilon } => {
                if !(epsilon > 0.0 && epsilon < 1.0) {
                    return Err(Error::InvalidConfig(format!("epsilon {epsilon} not in (0, 1)")));
                }
                let lm = mf.ln();
                let l = lm * (lm.powi(3) + (1.0 / epsilon).ln());
                if l <= 0.0 {
                    return Err(Error::InvalidConfig(format!("L(m, epsilon) = {l} is not positive at m = {m}")));
                }
                Ok(1.0 / (4.0 * (mf / l).sqrt()))
            }
        }
    }
}

impl fmt::Display for LambdaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaPolicy::Table => f.write_str("table"),
            LambdaPolicy::Theorem { epsilon } => write!(f, "theorem:{epsilon}"),
        }
    }
}

impl FromStr for LambdaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(LambdaPolicy::Table),
            _ => {
                let eps = s
                    .strip_prefix("theorem:")
                    .and_then(|e| e.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown lambda policy `{s}`")))?;
                Ok(LambdaPolicy::Theorem { epsilon: eps })
            }
        }
    }
}

/// Parameters of the restarted primal-dual iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrLassoConfig {
    pub lambda: f64,
    pub lambda_policy: LambdaPolicy,
    pub tau: f64,
    pub sigma: f64,
    pub t_inner: usize,
    pub r_max: usize,
    pub zeta_prime: f64,
    pub r: f64,
    pub s: f64,
    pub operator_norm: f64,
}

impl SrLassoConfig {
    /// Default parameters for an `m`-row matrix with `||A||_2 = norm`.
    pub fn table(norm: f64, m: usize, policy: LambdaPolicy) -> Result<Self> {
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidConfig(format!("operator norm {norm} must be positive")));
        }
        let r = (-1.0f64).exp();
        let t_inner = (4.0 * norm / r).ceil() as usize;
        let cfg = SrLassoConfig {
            lambda: policy.lambda(m)?,
            lambda_policy: policy,
            tau: 1.0 / norm,
            sigma: 1.0 / norm,
            t_inner,
            r_max: 100,
            zeta_prime: 1e-15,
            r,
            s: t_inner as f64 / (2.0 * norm),
            operator_norm: norm,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.lambda, self.tau, self.sigma, self.s, self.operator_norm, self.zeta_prime];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidConfig("lambda, tau, sigma, s, ||A||, zeta' must be positive".into()));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::InvalidConfig(format!("r = {} not in (0, 1)", self.r)));
        }
        if self.t_inner == 0 || self.r_max == 0 {
            return Err(Error::InvalidConfig("T and R must be at least 1".into()));
        }
        let product = self.tau * self.sigma * self.operator_norm * self.operator_norm;
        if product > 1.0 + 1e-12 {
            return Err(Error::InvalidConfig(format!("tau sigma ||A||^2 = {product} exceeds 1")));
        }
        Ok(())
    }
}

/// Output of [`restarted`] and [`cs_approximate`].
#[derive(Clone, Debug, Serialize)]
pub struct CsResult {
    #[serde(skip)]
    pub coefficients: CoefVector,
    pub restarts_used: usize,
    /// Objective after each restart.
    pub objective_trace: Vec<f64>,
    #[serde(skip)]
    pub extracted: Option<(IndexSet, CoefVector)>,
    pub config: SrLassoConfig,
    /// `||A c - f||_2` at the returned coefficients.
    pub residual_norm: f64,
    /// `sigma_max / sigma_min` of the measurement matrix restricted to the
    /// support of the returned coefficients; 1 for an empty support and
    /// infinite when the support has more columns than rows.
    pub support_condition: f64,
}

/// Raw output of [`restarted`] over plain column order.
#[derive(Clone, Debug)]
pub struct RestartedRun {
    pub coefficients: Vec<f64>,
    pub restarts_used: usize,
    pub objective_trace: Vec<f64>,
}

/// `dst = alpha * op(A) x`, with `op` the transpose when `transpose` holds.
fn gemv(dst: &mut [f64], a: MatRef<'_, f64>, x: &[f64], transpose: bool, alpha: f64) {
    let x = ColRef::from_slice(x).as_mat();
    let dst = ColMut::from_slice_mut(dst).as_mat_mut();
    if transpose {
        matmul(dst, Accum::Replace, a.transpose(), x, alpha, Par::Seq);
    } else {
        matmul(dst, Accum::Replace, a, x, alpha, Par::Seq);
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizer of `t |c| + (c - p)^2 / 2`, with `sign(0) = 0`.
pub fn soft_threshold(p: f64, t: f64) -> f64 {
    let mag = (p.abs() - t).max(0.0);
    if p > 0.0 {
        mag
    } else if p < 0.0 {
        -mag
    } else {
        0.0
    }
}

/// `lambda sum_i u_i |z_i| + ||A z - f||_2`.
pub fn objective(z: &[f64], a: MatRef<'_, f64>, f: &[f64], u: &[f64], lambda: f64) -> Result<f64> {
    check_shapes(a, f, u)?;
    if z.len() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: z.len(),
        });
    }
    let mut az = vec![0.0; a.nrows()];
    gemv(&mut az, a, z, false, 1.0);
    let res = az.iter().zip(f).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let l1: f64 = z.iter().zip(u).map(|(c, w)| w * c.abs()).sum();
    Ok(lambda * l1 + res)
}

fn residual_norm(z: &[f64], a: MatRef<'_, f64>, f: &[f64]) -> f64 {
    let mut az = vec![0.0; a.nrows()];
    gemv(&mut az, a, z, false, 1.0);
    az.iter().zip(f).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_shapes(a: MatRef<'_, f64>, f: &[f64], u: &[f64]) -> Result<()> {
    if f.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: f.len(),
        });
    }
    if u.len() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: u.len(),
        });
    }
    Ok(())
}

/// Step sizes and iteration count of one primal-dual run.
#[derive(Clone, Copy, Debug)]
pub struct PdParams {
    pub lambda: f64,
    pub tau: f64,
    pub sigma: f64,
    pub iterations: usize,
}

/// Primal-dual iteration with soft-threshold `radius * tau * lambda * u` and
/// dual ball of the given radius. Updates `c` and `xi` in place and calls
/// `observe(c, xi)` after every iteration.
fn pd_core(
    a: MatRef<'_, f64>,
    f: &[f64],
    u: &[f64],
    p: PdParams,
    radius: f64,
    c: &mut [f64],
    xi: &mut [f64],
    mut observe: impl FnMut(&[f64], &[f64]),
) -> Result<()> {
    let n = a.ncols();
    let m = a.nrows();
    let mut atxi = vec![0.0; n];
    let mut cnext = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut adir = vec![0.0; m];
    let thresh: Vec<f64> = u.iter().map(|w| radius * p.tau * p.lambda * w).collect();
    for it in 0..p.iterations {
        gemv(&mut atxi, a, xi, true, p.tau);
        for j in 0..n {
            let pj = c[j] - atxi[j];
            cnext[j] = soft_threshold(pj, thresh[j]);
            dir[j] = 2.0 * cnext[j] - c[j];
        }
        gemv(&mut adir, a, &dir, false, p.sigma);
        for i in 0..m {
            xi[i] += adir[i] - p.sigma * f[i];
        }
        let qn = norm2(xi);
        if !qn.is_finite() {
            return Err(Error::NonFinite(format!("dual iterate at primal-dual step {it}")));
        }
        if qn > radius {
            let scale = radius / qn;
            xi.iter_mut().for_each(|x| *x *= scale);
        }
        c.copy_from_slice(&cnext);
        observe(c, xi);
    }
    Ok(())
}

/// `iterations` steps of the unrestarted primal-dual iteration from
/// `(c0, xi0)`; returns the last primal iterate.
pub fn primal_dual(
    a: MatRef<'_, f64>,
    f: &[f64],
    u: &[f64],
    params: PdParams,
    c0: &[f64],
    xi0: &[f64],
) -> Result<Vec<f64>> {
    check_shapes(a, f, u)?;
    if c0.len() != a.ncols() || xi0.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: c0.len(),
        });
    }
    if !(params.tau > 0.0 && params.sigma > 0.0) {
        return Err(Error::InvalidConfig("tau and sigma must be positive".into()));
    }
    if norm2(xi0) > 1.0 + 1e-12 {
        return Err(Error::InvalidConfig("initial dual iterate outside the unit ball".into()));
    }
    let mut c = c0.to_vec();
    let mut xi = xi0.to_vec();
    pd_core(a, f, u, params, 1.0, &mut c, &mut xi, |_, _| {})?;
    Ok(c)
}

/// Restarted primal-dual iteration. Restart `l` solves the rescaled problem
/// with right-hand side `f / a_l`, warm-started at `c_l / a_l`.
pub fn restarted(a: MatRef<'_, f64>, f: &[f64], u: &[f64], config: &SrLassoConfig) -> Result<RestartedRun> {
    check_shapes(a, f, u)?;
    config.validate()?;
    let n = a.ncols();
    let params = PdParams {
        lambda: config.lambda,
        tau: config.tau,
        sigma: config.sigma,
        iterations: config.t_inner,
    };
    let mut c = vec![0.0; n];
    let mut eps = norm2(f);
    let mut trace = Vec::new();
    let mut increases = 0usize;
    let mut best = f64::INFINITY;
    let mut used = 0usize;
    let mut fs = vec![0.0; f.len()];
    for _ in 0..config.r_max {
        eps = config.r * (eps + config.zeta_prime);
        let al = config.s * eps;
        fs.iter_mut().zip(f).for_each(|(d, v)| *d = v / al);
        let mut cs: Vec<f64> = c.iter().map(|v| v / al).collect();
        let mut xi = vec![0.0; f.len()];
        pd_core(a, &fs, u, params, 1.0, &mut cs, &mut xi, |_, _| {})?;
        let next: Vec<f64> = cs.iter().map(|v| v * al).collect();
        let step = next.iter().zip(&c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        c = next;
        used += 1;
        let g = objective(&c, a, f, u, config.lambda)?;
        if !g.is_finite() {
            return Err(Error::NonFinite(format!("objective after restart {used}")));
        }
        if g > best * (1.0 + DIVERGENCE_RTOL) {
            increases += 1;
        } else {
            increases = 0;
        }
        best = best.min(g);
        trace.push(g);
        if increases >= DIVERGENCE_RUN {
            return Err(Error::Diverged(format!(
                "objective above its best value for {DIVERGENCE_RUN} consecutive restarts; trace = {trace:?}"
            )));
        }
        if step <= 10.0 * config.zeta_prime {
            break;
        }
    }
    Ok(RestartedRun {
        coefficients: c,
        restarts_used: used,
        objective_trace: trace,
    })
}

/// Estimates `||A||_2` by power iteration on `A^T A` from a fixed random start.
pub fn operator_norm(a: MatRef<'_, f64>) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut rng = StreamRng::seed_from_u64(POWER_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
    let mut av = vec![0.0; a.nrows()];
    let mut est = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let nv = norm2(&v);
        if nv == 0.0 {
            return est;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        gemv(&mut av, a, &v, false, 1.0);
        let next = norm2(&av);
        gemv(&mut v, a, &av, true, 1.0);
        let done = (next - est).abs() <= POWER_TOLERANCE * next;
        est = next;
        if done {
            break;
        }
    }
    est
}

/// Keeps the `min(n, |supp c|)` largest-magnitude entries. Ties go to the
/// canonically smaller index.
pub fn extract_top_n(c: &CoefVector, n: usize) -> (IndexSet, CoefVector) {
    let mut order: Vec<usize> = (0..c.len()).filter(|&i| c.values()[i] != 0.0).collect();
    order.sort_by(|&i, &j| c.values()[j].abs().total_cmp(&c.values()[i].abs()).then(i.cmp(&j)));
    order.truncate(n);
    let pairs: Vec<(MultiIndex, f64)> = order.iter().map(|&i| (c.indices()[i].clone(), c.values()[i])).collect();
    let set: IndexSet = pairs.iter().map(|(nu, _)| nu.clone()).collect();
    let restricted = CoefVector::from_pairs(pairs).expect("distinct indices from a coefficient vector");
    (set, restricted)
}

/// How sample points are drawn from the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CsSampling {
    #[serde(rename = "mc")]
    MonteCarlo,
    /// Grid-discretized density `K_Lambda / N` with weights `N / K_Lambda`.
    #[serde(rename = "christoffel")]
    Christoffel,
}

impl FromStr for CsSampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(CsSampling::MonteCarlo),
            "christoffel" => Ok(CsSampling::Christoffel),
            _ => Err(Error::InvalidConfig(format!("unknown CS sampling `{s}`"))),
        }
    }
}

/// Setup of a compressed-sensing approximation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsConfig {
    pub family: BasisFamily,
    pub sampling: CsSampling,
    /// Cardinality cap for the hyperbolic cross.
    pub budget: usize,
    pub lambda_policy: LambdaPolicy,
    pub noise: Noise,
    /// Keep the `n` largest coefficients as well when set.
    pub extract: Option<usize>,
}

impl CsConfig {
    pub fn new(family: BasisFamily, sampling: CsSampling) -> Self {
        CsConfig {
            family,
            sampling,
            budget: DEFAULT_BUDGET,
            lambda_policy: LambdaPolicy::Table,
            noise: Noise::None,
            extract: None,
        }
    }
}

/// The hyperbolic cross of largest order with at most `budget` elements,
/// using dimensions `1..=d`.
pub fn cs_index_set(budget: usize, d: usize) -> Result<IndexSet> {
    if budget == 0 {
        return Err(Error::InvalidConfig("index budget must be at least 1".into()));
    }
    hyperbolic_cross_anchored_in(largest_hyperbolic_order(budget as u64, d), d)
}

/// Draws `m` grid samples, assembles the scaled measurement system over the
/// budgeted hyperbolic cross and solves it with [`restarted`].
pub fn cs_approximate(
    grid: &Grid,
    target: &[f64],
    config: &CsConfig,
    m: usize,
    rng: &mut StreamRng,
) -> Result<CsResult> {
    if m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    if target.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: target.len(),
        });
    }
    let set = cs_index_set(config.budget, grid.dim())?;
    let samples = match config.sampling {
        CsSampling::MonteCarlo => draw_mc(grid, m, rng)?,
        CsSampling::Christoffel => {
            let dist = christoffel_distribution(grid, config.family, &set)?;
            draw_from(&dist, m, rng, SamplingStrategy::Christoffel)?
        }
    };
    let fvals: Vec<f64> = samples.indices.iter().map(|&i| target[i] + config.noise.draw(rng)).collect();
    cs_solve(grid, &set, &samples, &fvals, config)
}

/// Solves the compressed-sensing problem over `set` for given samples.
pub fn cs_solve(
    grid: &Grid,
    set: &IndexSet,
    samples: &SampleSet,
    values: &[f64],
    config: &CsConfig,
) -> Result<CsResult> {
    let m = samples.len();
    let pts = grid.gather(&samples.indices);
    let design = build_design_matrix(config.family, set, Points::new(&pts, grid.dim())?, &samples.weights)?;
    let f: Vec<f64> = values.iter().enumerate().map(|(i, v)| design.row_scale(i) * v).collect();
    let u: Vec<f64> = design.columns.iter().map(|nu| config.family.intrinsic_weight(nu)).collect();
    let a = design.values.as_ref();
    let norm = operator_norm(a);
    let sr = SrLassoConfig::table(norm, m, config.lambda_policy)?;
    let run = restarted(a, &f, &u, &sr)?;
    let residual = residual_norm(&run.coefficients, a, &f);
    let support_condition = support_condition(a, &run.coefficients)?;
    let coefficients = CoefVector::new(set, run.coefficients)?;
    let extracted = config.extract.map(|n| extract_top_n(&coefficients, n));
    Ok(CsResult {
        coefficients,
        restarts_used: run.restarts_used,
        objective_trace: run.objective_trace,
        extracted,
        config: sr,
        residual_norm: residual,
        support_condition,
    })
}

/// Condition number of the columns of `a` where `c` is nonzero.
pub fn support_condition(a: MatRef<'_, f64>, c: &[f64]) -> Result<f64> {
    let support: Vec<usize> = (0..c.len()).filter(|&j| c[j] != 0.0).collect();
    if support.is_empty() {
        return Ok(1.0);
    }
    if support.len() > a.nrows() {
        return Ok(f64::INFINITY);
    }
    let sub = faer::Mat::<f64>::from_fn(a.nrows(), support.len(), |i, k| a[(i, support[k])]);
    let sv = sub
        .singular_values()
        .map_err(|_| Error::NonFinite("SVD of support columns did not converge".into()))?;
    let hi = sv[0];
    let lo = sv[sv.len() - 1];
    Ok(if lo > 0.0 { (hi / lo).max(1.0) } else { f64::INFINITY })
}
