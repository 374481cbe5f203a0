//! Weighted least squares with stability diagnostics, and adaptive least
//! squares driven by bulk chasing on reduced margins.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::metrics::{relative_error, ErrorNorm};
use crate::multi_index::{IndexSet, MultiIndex};
use crate::poly_basis::{basis_matrix, BasisFamily, CoefVector, DesignMatrix, Points, UnivariateTables};
use crate::rng::StreamRng;
use crate::sampling::{append_columns, draw_mc, draw_near_optimal, Grid, GridOrthonormalizer, SampleSet};

/// `sigma_min < SINGULAR_TOLERANCE * sigma_max` flags a numerically singular
/// system. The solve still proceeds.
pub const SINGULAR_TOLERANCE: f64 = 1e-13;

/// Output of a weighted least-squares solve.
#[derive(Clone, Debug)]
pub struct LsResult {
    pub coefficients: CoefVector,
    /// `beta_w / alpha_w`.
    pub condition_number: f64,
    /// `sigma_min(A)`.
    pub alpha_w: f64,
    /// `sigma_max(A)`.
    pub beta_w: f64,
    /// `||A c - b||_2`.
    pub residual_norm: f64,
    pub numerically_singular: bool,
}

/// Minimizes `||A z - b||_2` with `b_i = sqrt(w_i / m) * samples[i]` by
/// Householder QR. Singular values are those of the triangular factor.
pub fn solve_wls(a: &DesignMatrix, samples: &[f64]) -> Result<LsResult> {
    let (m, n) = (a.nrows(), a.ncols());
    if samples.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: samples.len(),
        });
    }
    if m < n {
        return Err(Error::InvalidConfig(format!("underdetermined system: m = {m} < n = {n}")));
    }
    if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("sample value {v}")));
    }
    let rhs = Mat::<f64>::from_fn(m, 1, |i, _| a.row_scale(i) * samples[i]);
    let qr = a.values.qr();
    let sv = qr
        .thin_R()
        .singular_values()
        .map_err(|_| Error::NonFinite("SVD of triangular factor did not converge".into()))?;
    let beta_w = sv[0];
    let alpha_w = sv[sv.len() - 1];
    let sol = qr.solve_lstsq(&rhs);
    let coef: Vec<f64> = (0..n).map(|j| sol[(j, 0)]).collect();
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("least-squares coefficients".into()));
    }
    let fitted = &a.values * &sol;
    let residual_norm = (0..m)
        .map(|i| {
            let r = fitted[(i, 0)] - rhs[(i, 0)];
            r * r
        })
        .sum::<f64>()
        .sqrt();
    let coefficients = CoefVector::from_pairs(a.columns.iter().cloned().zip(coef))?;
    Ok(LsResult {
        coefficients,
        condition_number: if alpha_w > 0.0 { beta_w / alpha_w } else { f64::INFINITY },
        alpha_w,
        beta_w,
        residual_norm,
        numerically_singular: !(alpha_w >= SINGULAR_TOLERANCE * beta_w),
    })
}

/// `(1/m) sum_i w_i f_i g_i`.
pub fn discrete_inner(f: &[f64], g: &[f64], weights: &[f64], m: usize) -> f64 {
    assert!(f.len() == g.len() && g.len() == weights.len(), "length mismatch");
    f.iter().zip(g).zip(weights).map(|((a, b), w)| w * a * b).sum::<f64>() / m as f64
}

/// Smallest set of highest-energy candidates whose energy reaches `beta`
/// times the total. `candidates` must be in canonical order, which breaks
/// ties. When every energy is zero the first candidate is returned.
pub fn bulk(candidates: &[(MultiIndex, f64)], beta: f64) -> Result<Vec<MultiIndex>> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidConfig(format!("bulk parameter {beta} outside (0, 1]")));
    }
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("bulk selection from an empty candidate set".into()));
    }
    if let Some((_, e)) = candidates.iter().find(|(_, e)| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::NonFinite(format!("estimator value {e}")));
    }
    let total: f64 = candidates.iter().map(|c| c.1).sum();
    if total == 0.0 {
        return Ok(vec![candidates[0].0.clone()]);
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[b].1.total_cmp(&candidates[a].1));
    let mut acc = 0.0;
    let mut out = Vec::new();
    for i in order {
        acc += candidates[i].1;
        out.push(candidates[i].0.clone());
        if acc >= beta * total {
            break;
        }
    }
    Ok(out)
}

/// Rule mapping the number of basis functions to the number of samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// `max(n + 1, ceil(n ln n))`.
    Loglinear,
    /// `ceil(1.5 n)`.
    Linear15,
    /// `2 n`.
    Linear2,
}

impl Scaling {
    pub fn id(self) -> &'static str {
        match self {
            Scaling::Loglinear => "loglinear",
            Scaling::Linear15 => "linear15",
            Scaling::Linear2 => "linear2",
        }
    }
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "loglinear" => Ok(Scaling::Loglinear),
            "linear15" => Ok(Scaling::Linear15),
            "linear2" => Ok(Scaling::Linear2),
            _ => Err(Error::InvalidConfig(format!("unknown scaling `{s}`"))),
        }
    }
}

pub fn m_from_scaling(rule: Scaling, n: usize) -> usize {
    assert!(n >= 1, "scaling needs n >= 1");
    match rule {
        Scaling::Loglinear => {
            let nf = n as f64;
            (n + 1).max((nf * nf.ln()).ceil() as usize)
        }
        Scaling::Linear15 => (3 * n).div_ceil(2),
        Scaling::Linear2 => 2 * n,
    }
}

/// Additive perturbation of sample values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "eta", rename_all = "lowercase")]
pub enum Noise {
    None,
    /// `e_i ~ U[-eta, eta]`.
    Uniform(f64),
    /// `e_i = +-eta` with random sign.
    Sign(f64),
}

impl Noise {
    pub fn draw(&self, rng: &mut StreamRng) -> f64 {
        match *self {
            Noise::None => 0.0,
            Noise::Uniform(eta) => eta * (2.0 * rng.gen::<f64>() - 1.0),
            Noise::Sign(eta) => {
                if rng.gen::<bool>() {
                    eta
                } else {
                    -eta
                }
            }
        }
    }

    pub fn bound(&self) -> f64 {
        match *self {
            Noise::None => 0.0,
            Noise::Uniform(eta) | Noise::Sign(eta) => eta.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlsSampling {
    #[serde(rename = "mc")]
    MonteCarlo,
    #[serde(rename = "optimal")]
    NearOptimal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlsConfig {
    pub family: BasisFamily,
    pub sampling: AlsSampling,
    pub scaling: Scaling,
    pub beta: f64,
    /// Stop before any step whose sample count would exceed this.
    pub max_m: Option<usize>,
    /// Stop after this many steps.
    pub max_steps: Option<usize>,
    /// Admit at most one dimension beyond the active ones per step.
    pub anchored_growth: bool,
    pub noise: Noise,
}

impl AlsConfig {
    pub fn new(family: BasisFamily, sampling: AlsSampling, scaling: Scaling) -> Self {
        Self {
            family,
            sampling,
            scaling,
            beta: 0.5,
            max_m: None,
            max_steps: None,
            anchored_growth: false,
            noise: Noise::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_m.is_none() && self.max_steps.is_none() {
            return Err(Error::InvalidConfig("ALS needs max_m or max_steps".into()));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidConfig(format!("beta = {} outside (0, 1]", self.beta)));
        }
        Ok(())
    }
}

/// One adaptive step: the set used, its solve and the grid metrics.
#[derive(Clone, Debug)]
pub struct AlsStep {
    pub set: IndexSet,
    pub n: usize,
    pub m: usize,
    pub result: LsResult,
    pub error_l2: f64,
    pub error_linf: f64,
    /// `kappa(P_S)` for the step's set.
    pub kappa: f64,
    /// Milliseconds from the start of the run to the end of this step.
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, Default)]
pub struct AlsTrace {
    pub steps: Vec<AlsStep>,
}

/// A trace plus the error that ended the run early, if any.
#[derive(Debug)]
pub struct AlsOutcome {
    pub trace: AlsTrace,
    pub failure: Option<Error>,
}

/// Grid values of the basis columns seen so far, in insertion order.
struct ColumnCache<'a> {
    grid: &'a Grid,
    columns: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
    phi: Mat<f64>,
    phi_capacity: usize,
    tables: UnivariateTables,
}

impl<'a> ColumnCache<'a> {
    fn new(grid: &'a Grid, family: BasisFamily) -> Self {
        Self {
            grid,
            columns: Vec::new(),
            position: HashMap::new(),
            phi: Mat::zeros(grid.len(), 0),
            phi_capacity: 0,
            tables: UnivariateTables::new(family, grid.dim(), grid.len()),
        }
    }

    /// Adds missing members of `set`; returns the new columns and their block.
    fn extend(&mut self, set: &IndexSet) -> Result<(Vec<MultiIndex>, Mat<f64>)> {
        let new: Vec<MultiIndex> = set.iter().filter(|nu| !self.position.contains_key(nu)).cloned().collect();
        for nu in &new {
            self.tables.ensure(self.grid.points(), nu)?;
        }
        let block = Mat::<f64>::from_fn(self.grid.len(), new.len(), |i, c| self.tables.eval(&new[c], i));
        append_columns(&mut self.phi, &mut self.phi_capacity, block.as_ref());
        for nu in &new {
            self.position.insert(nu.clone(), self.columns.len());
            self.columns.push(nu.clone());
        }
        Ok((new, block))
    }

    /// `sum_nu c_nu Psi_nu(z_i)` over the whole grid.
    fn evaluate(&self, coef: &CoefVector) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (nu, c) in coef.iter() {
            let col = self.position[nu];
            for (o, p) in out.iter_mut().zip(self.phi.col(col).iter()) {
                *o += c * p;
            }
        }
        out
    }
}

/// Estimator `e(nu) = |<f - f_hat, Psi_nu>_{disc,w}|^2` for each candidate,
/// from the unscaled residuals `r_i = f(y_i) + e_i - f_hat(y_i)`.
pub fn margin_estimator(
    family: BasisFamily,
    candidates: &[MultiIndex],
    points: Points<'_>,
    weights: &[f64],
    residuals: &[f64],
) -> Result<Vec<f64>> {
    let m = points.len();
    let phi = basis_matrix(family, candidates, points)?;
    let wr: Vec<f64> = (0..m).map(|i| weights[i] * residuals[i] / m as f64).collect();
    Ok((0..candidates.len())
        .map(|c| {
            let ip: f64 = phi.col(c).iter().zip(&wr).map(|(p, r)| p * r).sum();
            ip * ip
        })
        .collect())
}

/// Runs adaptive least squares from `S = {0}`.
///
/// `target` holds the function on `grid`. Samples are grid points, so their
/// values come from `target`. Errors are measured on `eval` when supplied and
/// on `grid` otherwise. Each step draws fresh samples, solves, records metrics
/// and then grows the set by bulk chasing on the reduced margin.
pub fn als_run(
    grid: &Grid,
    target: &[f64],
    config: &AlsConfig,
    rng: &mut StreamRng,
    eval: Option<(&Grid, &[f64])>,
) -> AlsOutcome {
    let mut trace = AlsTrace::default();
    let failure = als_loop(grid, target, config, rng, eval, &mut trace).err();
    AlsOutcome { trace, failure }
}

fn als_loop(
    grid: &Grid,
    target: &[f64],
    config: &AlsConfig,
    rng: &mut StreamRng,
    eval: Option<(&Grid, &[f64])>,
    trace: &mut AlsTrace,
) -> Result<()> {
    config.validate()?;
    if target.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: target.len(),
        });
    }
    if let Some((g, t)) = eval {
        if g.dim() != grid.dim() || t.len() != g.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: g.dim(),
            });
        }
    }
    let family = config.family;
    let d = grid.dim();
    let mut cache = ColumnCache::new(grid, family);
    let mut eval_cache = eval.map(|(g, _)| ColumnCache::new(g, family));
    let mut orth = match config.sampling {
        AlsSampling::NearOptimal => Some(GridOrthonormalizer::new(grid, family)),
        AlsSampling::MonteCarlo => None,
    };
    let mut set = IndexSet::origin();
    let start = std::time::Instant::now();
    for step in 1usize.. {
        if config.max_steps.is_some_and(|s| step > s) {
            break;
        }
        let n = set.len();
        let m = m_from_scaling(config.scaling, n);
        if config.max_m.is_some_and(|mm| m > mm) {
            break;
        }
        let (new, block) = cache.extend(&set)?;
        if let Some(ec) = eval_cache.as_mut() {
            ec.extend(&set)?;
        }
        let samples: SampleSet = match orth.as_mut() {
            Some(o) => {
                o.extend_with(new, block)?;
                draw_near_optimal(&o.distribution()?, m, rng)?
            }
            None => draw_mc(grid, m, rng)?,
        };
        let columns = set.to_vec();
        let perm: Vec<usize> = columns.iter().map(|nu| cache.position[nu]).collect();
        let scales: Vec<f64> = samples.weights.iter().map(|w| (w / m as f64).sqrt()).collect();
        let values = Mat::<f64>::from_fn(m, n, |i, c| cache.phi[(samples.indices[i], perm[c])] * scales[i]);
        let design = DesignMatrix {
            values,
            row_weights: samples.weights.clone(),
            columns: columns.clone(),
        };
        let fvals: Vec<f64> = samples.indices.iter().map(|&i| target[i] + config.noise.draw(rng)).collect();
        let result = solve_wls(&design, &fvals)?;

        let (approx, reference) = match (eval_cache.as_ref(), eval) {
            (Some(ec), Some((_, t))) => (ec.evaluate(&result.coefficients), t),
            _ => (cache.evaluate(&result.coefficients), target),
        };
        let error_l2 = relative_error(&approx, reference, ErrorNorm::L2)?;
        let error_linf = relative_error(&approx, reference, ErrorNorm::Linf)?;

        // residuals at the samples for the estimator
        let coef = result.coefficients.values();
        let residuals: Vec<f64> = (0..m)
            .map(|i| {
                let fit: f64 = (0..n).map(|c| cache.phi[(samples.indices[i], perm[c])] * coef[c]).sum();
                fvals[i] - fit
            })
            .collect();

        trace.steps.push(AlsStep {
            set: set.clone(),
            n,
            m,
            kappa: family.kappa(&set),
            result,
            error_l2,
            error_linf,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });

        let limit = if config.anchored_growth {
            d.min(set.max_dim() + 1)
        } else {
            d
        };
        let margin = set.reduced_margin(Some(limit))?.to_vec();
        assert!(!margin.is_empty(), "reduced margin of a finite lower set is never empty");
        let sample_points = grid.gather(&samples.indices);
        let energy = margin_estimator(
            family,
            &margin,
            Points::new(&sample_points, d)?,
            &samples.weights,
            &residuals,
        )?;
        let pairs: Vec<(MultiIndex, f64)> = margin.into_iter().zip(energy).collect();
        set.extend(bulk(&pairs, config.beta)?);
    }
    Ok(())
}
