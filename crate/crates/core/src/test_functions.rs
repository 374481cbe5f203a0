//! Benchmark target functions on `[-1, 1]^d`, addressable by string id.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::Grid;

/// Rule for the `f3` offsets `delta_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaRule {
    /// `delta_i = i`.
    Linear,
    /// `delta_i = i^2`.
    Square,
    /// `delta_i = c` for every `i`.
    Constant(f64),
}

impl DeltaRule {
    /// `delta_i` for 1-based `i`.
    pub fn delta(self, i: usize) -> f64 {
        match self {
            DeltaRule::Linear => i as f64,
            DeltaRule::Square => (i * i) as f64,
            DeltaRule::Constant(c) => c,
        }
    }
}

/// Physical models rescaled from their native parameter boxes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VirtualModel {
    Borehole,
    Circuit,
    Piston,
    Robot,
    Wing,
}

impl VirtualModel {
    pub const ALL: [VirtualModel; 5] = [
        VirtualModel::Borehole,
        VirtualModel::Circuit,
        VirtualModel::Piston,
        VirtualModel::Robot,
        VirtualModel::Wing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VirtualModel::Borehole => "borehole",
            VirtualModel::Circuit => "circuit",
            VirtualModel::Piston => "piston",
            VirtualModel::Robot => "robot",
            VirtualModel::Wing => "wing",
        }
    }

    /// Native parameter ranges, one `(min, max)` per input.
    pub fn ranges(self) -> &'static [(f64, f64)] {
        match self {
            VirtualModel::Borehole => &[
                (0.05, 0.15),
                (100.0, 50_000.0),
                (63_070.0, 115_600.0),
                (990.0, 1110.0),
                (63.1, 116.0),
                (700.0, 820.0),
                (1120.0, 1680.0),
                (9855.0, 12_045.0),
            ],
            VirtualModel::Circuit => &[
                (50.0, 150.0),
                (25.0, 70.0),
                (0.5, 3.0),
                (1.2, 2.5),
                (0.25, 1.2),
                (50.0, 300.0),
            ],
            VirtualModel::Piston => &[
                (30.0, 60.0),
                (0.005, 0.020),
                (0.002, 0.010),
                (1000.0, 5000.0),
                (90_000.0, 110_000.0),
                (290.0, 296.0),
                (340.0, 360.0),
            ],
            VirtualModel::Robot => &[
                (0.0, 2.0 * PI),
                (0.0, 2.0 * PI),
                (0.0, 2.0 * PI),
                (0.0, 2.0 * PI),
                (0.0, 1.0),
                (0.0, 1.0),
                (0.0, 1.0),
                (0.0, 1.0),
            ],
            VirtualModel::Wing => &[
                (150.0, 200.0),
                (220.0, 300.0),
                (6.0, 10.0),
                (-10.0, 10.0),
                (16.0, 45.0),
                (0.5, 1.0),
                (0.08, 0.18),
                (2.5, 6.0),
                (1700.0, 2500.0),
                (0.025, 0.08),
            ],
        }
    }

    /// Native input dimension.
    pub fn native_dim(self) -> usize {
        self.ranges().len()
    }

    /// The model at native parameters `theta`.
    pub fn physical(self, theta: &[f64]) -> f64 {
        match self {
            VirtualModel::Borehole => borehole(theta),
            VirtualModel::Circuit => otl_circuit(theta),
            VirtualModel::Piston => piston(theta),
            VirtualModel::Robot => robot_arm(theta),
            VirtualModel::Wing => wing_weight(theta),
        }
    }

    /// Evaluates at `y` in `[-1, 1]^d`, pinning inputs `d+1..` to the right
    /// end of their range.
    pub fn eval(self, y: &[f64]) -> f64 {
        let mut theta = [0.0; 10];
        for (k, &(lo, hi)) in self.ranges().iter().enumerate() {
            let t = y.get(k).copied().unwrap_or(1.0);
            theta[k] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
        }
        self.physical(&theta[..self.native_dim()])
    }
}

/// Water flow through a borehole, inputs `(r_w, r, T_u, H_u, T_l, H_l, L, K_w)`:
/// `2 pi T_u (H_u - H_l) / (ln(r/r_w) (1 + 2 L T_u / (ln(r/r_w) r_w^2 K_w) + T_u/T_l))`.
fn borehole(t: &[f64]) -> f64 {
    let (rw, r, tu, hu, tl, hl, l, kw) = (t[0], t[1], t[2], t[3], t[4], t[5], t[6], t[7]);
    let lr = (r / rw).ln();
    2.0 * PI * tu * (hu - hl) / (lr * (1.0 + 2.0 * l * tu / (lr * rw * rw * kw) + tu / tl))
}

/// Midpoint voltage of an output transformerless push-pull circuit, inputs
/// `(R_b1, R_b2, R_f, R_c1, R_c2, beta)`, with `V_b1 = 12 R_b2 / (R_b1 + R_b2)`
/// and `D = beta (R_c2 + 9) + R_f`:
/// `(V_b1 + 0.74) beta (R_c2 + 9) / D + 11.35 R_f / D + 0.74 R_f beta (R_c2 + 9) / (D R_c1)`.
fn otl_circuit(t: &[f64]) -> f64 {
    let (rb1, rb2, rf, rc1, rc2, beta) = (t[0], t[1], t[2], t[3], t[4], t[5]);
    let vb1 = 12.0 * rb2 / (rb1 + rb2);
    let bc = beta * (rc2 + 9.0);
    let den = bc + rf;
    (vb1 + 0.74) * bc / den + 11.35 * rf / den + 0.74 * rf * bc / (den * rc1)
}

/// Piston cycle time, inputs `(M, S, V_0, k, P_0, T_a, T_0)`:
/// `A = P_0 S + 19.62 M - k V_0 / S`,
/// `V = S / (2k) (sqrt(A^2 + 4 k P_0 V_0 T_a / T_0) - A)`,
/// `C = 2 pi sqrt(M / (k + S^2 P_0 V_0 T_a / (T_0 V^2)))`.
fn piston(t: &[f64]) -> f64 {
    let (m, s, v0, k, p0, ta, t0) = (t[0], t[1], t[2], t[3], t[4], t[5], t[6]);
    let a = p0 * s + 19.62 * m - k * v0 / s;
    let v = s / (2.0 * k) * ((a * a + 4.0 * k * p0 * v0 * ta / t0).sqrt() - a);
    2.0 * PI * (m / (k + s * s * p0 * v0 * ta / (t0 * v * v))).sqrt()
}

/// Distance of a four-segment planar arm's end from the origin, inputs
/// `(theta_1..theta_4, L_1..L_4)`: `sqrt(u^2 + v^2)` with
/// `u = sum_i L_i cos(sum_{j<=i} theta_j)`, `v = sum_i L_i sin(sum_{j<=i} theta_j)`.
fn robot_arm(t: &[f64]) -> f64 {
    let mut angle = 0.0;
    let (mut u, mut v) = (0.0, 0.0);
    for i in 0..4 {
        angle += t[i];
        u += t[4 + i] * angle.cos();
        v += t[4 + i] * angle.sin();
    }
    (u * u + v * v).sqrt()
}

/// Light aircraft wing weight, inputs `(S_w, W_fw, A, Lambda [deg], q, lambda,
/// t_c, N_z, W_dg, W_p)`:
/// `0.036 S_w^0.758 W_fw^0.0035 (A / cos^2 Lambda)^0.6 q^0.006 lambda^0.04
/// (100 t_c / cos Lambda)^-0.3 (N_z W_dg)^0.49 + S_w W_p`.
fn wing_weight(t: &[f64]) -> f64 {
    let (sw, wfw, a, sweep, q, taper, tc, nz, wdg, wp) = (t[0], t[1], t[2], t[3], t[4], t[5], t[6], t[7], t[8], t[9]);
    let c = sweep.to_radians().cos();
    0.036
        * sw.powf(0.758)
        * wfw.powf(0.0035)
        * (a / (c * c)).powf(0.6)
        * q.powf(0.006)
        * taper.powf(0.04)
        * (100.0 * tc / c).powf(-0.3)
        * (nz * wdg).powf(0.49)
        + sw * wp
}

/// Default number of elements for [`FemSolver1D`].
pub const FEM_ELEMENTS: usize = 1024;
/// Correlation length of the diffusion coefficient.
pub const PDE_BETA_C: f64 = 0.125;

type Forcing = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Piecewise-linear finite elements for `-(a u')' = F` on `[0, 1]` with
/// `u(0) = u(1) = 0` on a uniform mesh.
#[derive(Clone)]
pub struct FemSolver1D {
    elements: usize,
    forcing: Forcing,
    /// Load vector on interior nodes.
    load: Vec<f64>,
}

impl fmt::Debug for FemSolver1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FemSolver1D").field("elements", &self.elements).finish()
    }
}

impl Default for FemSolver1D {
    fn default() -> Self {
        FemSolver1D::new(FEM_ELEMENTS).expect("default mesh is valid")
    }
}

impl FemSolver1D {
    /// `elements` must be even so that `x = 0.5` is a node. Forcing `F = 1`.
    pub fn new(elements: usize) -> Result<Self> {
        Self::with_forcing(elements, Arc::new(|_| 1.0))
    }

    pub fn with_forcing(elements: usize, forcing: Forcing) -> Result<Self> {
        if elements < 2 || elements % 2 != 0 {
            return Err(Error::InvalidConfig(format!("FEM needs an even element count >= 2, got {elements}")));
        }
        let h = 1.0 / elements as f64;
        // three-point rule on each hat support, exact for affine forcing
        let load = (1..elements)
            .map(|k| {
                let x = k as f64 * h;
                h / 3.0 * (forcing(x - 0.5 * h) + forcing(x) + forcing(x + 0.5 * h))
            })
            .collect();
        Ok(FemSolver1D { elements, forcing, load })
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    /// Number of interior nodes.
    pub fn dofs(&self) -> usize {
        self.elements - 1
    }

    pub fn forcing(&self, x: f64) -> f64 {
        (self.forcing)(x)
    }

    /// Element midpoints `(e + 1/2) h`.
    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        let h = 1.0 / self.elements as f64;
        (0..self.elements).map(move |e| (e as f64 + 0.5) * h)
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    /// Interior nodal values for element-wise coefficients `a_e > 0`.
    pub fn solve(&self, coef: &[f64]) -> Result<Vec<f64>> {
        if coef.len() != self.elements {
            return Err(Error::DimensionMismatch {
                expected: self.elements,
                got: coef.len(),
            });
        }
        if let Some(bad) = coef.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidConfig(format!("diffusion coefficient {bad} is not positive")));
        }
        // Eliminating K u = F through the element fluxes
        // sigma_e = a_e (u_{e+1} - u_e) / h, which satisfy sigma_{k-1} - sigma_k = F_k
        // and sum_e h sigma_e / a_e = 0. Avoids the cancellation in K u.
        let h = 1.0 / self.elements as f64;
        let mut partial = Vec::with_capacity(self.elements);
        let mut acc = 0.0;
        partial.push(0.0);
        for f in &self.load {
            acc += f;
            partial.push(acc);
        }
        let compliance: Vec<f64> = coef.iter().map(|a| h / a).collect();
        let total: f64 = compliance.iter().sum();
        let moment: f64 = compliance.iter().zip(&partial).map(|(c, s)| c * s).sum();
        let sigma0 = moment / total;
        let mut u = Vec::with_capacity(self.dofs());
        let mut acc = 0.0;
        for e in 0..self.dofs() {
            acc += compliance[e] * (sigma0 - partial[e]);
            u.push(acc);
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("finite element solution".into()));
        }
        Ok(u)
    }

    /// `K u` on interior nodes.
    pub fn apply(&self, coef: &[f64], u: &[f64]) -> Vec<f64> {
        let n = self.dofs();
        let inv_h = self.elements as f64;
        (0..n)
            .map(|k| {
                let left = if k > 0 { u[k - 1] } else { 0.0 };
                let right = if k + 1 < n { u[k + 1] } else { 0.0 };
                inv_h * ((coef[k] + coef[k + 1]) * u[k] - coef[k] * left - coef[k + 1] * right)
            })
            .collect()
    }

    /// `u^T K u` for element coefficients `coef`.
    pub fn energy(&self, coef: &[f64], u: &[f64]) -> f64 {
        let inv_h = self.elements as f64;
        (0..self.elements)
            .map(|e| {
                let left = if e == 0 { 0.0 } else { u[e - 1] };
                let right = if e + 1 == self.elements { 0.0 } else { u[e] };
                coef[e] * inv_h * (right - left) * (right - left)
            })
            .sum()
    }

    /// `u(1/2)`.
    pub fn midpoint_value(&self, coef: &[f64]) -> Result<f64> {
        Ok(self.solve(coef)?[self.elements / 2 - 1])
    }
}

/// Lognormal diffusion problem whose output is `u(1/2, y)`.
#[derive(Clone, Debug)]
pub struct ParametricDe {
    d: usize,
    solver: FemSolver1D,
    /// Row-major `elements x d` table of `zeta_i theta_i(x_e)`.
    modes: Vec<f64>,
}

impl ParametricDe {
    pub fn new(d: usize, solver: FemSolver1D) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConfig("parametric DE needs d >= 1".into()));
        }
        let beta_p = (2.0 * PDE_BETA_C).max(1.0);
        let beta = PDE_BETA_C / beta_p;
        let first = (PI.sqrt() * beta / 2.0).sqrt();
        let mut modes = Vec::with_capacity(solver.elements() * d);
        for x in solver.midpoints() {
            for i in 1..=d {
                let v = if i == 1 {
                    first
                } else {
                    let k = (i / 2) as f64;
                    let zeta = (PI.sqrt() * beta).sqrt() * (-(k * PI * beta).powi(2) / 8.0).exp();
                    let arg = k * PI * x / beta_p;
                    zeta * if i % 2 == 0 { arg.sin() } else { arg.cos() }
                };
                modes.push(v);
            }
        }
        Ok(ParametricDe { d, solver, modes })
    }

    pub fn solver(&self) -> &FemSolver1D {
        &self.solver
    }

    /// `a(x_e, y)` at every element midpoint.
    pub fn coefficient(&self, y: &[f64]) -> Vec<f64> {
        self.modes
            .chunks_exact(self.d)
            .map(|row| (1.0 + row.iter().zip(y).map(|(m, v)| m * v).sum::<f64>()).exp())
            .collect()
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        self.solver.midpoint_value(&self.coefficient(y))
    }
}

/// Identifies a member of the suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetKind {
    /// `exp(sum_i y_i / (2 i))`.
    F1,
    /// `(1 + (2d)^-1 sum_i q_i y_i)^-1`, `q_i = 10^(-3 (i-1)/(d-1))`.
    F2,
    /// `prod_i sqrt(2 delta_i + delta_i^2) / (y_i + 1 + delta_i)`.
    F3 { delta: DeltaRule },
    Virtual { model: VirtualModel },
    /// `sum_i 0.3 + sin(16/15 y_i - 0.7) + sin^2(16/15 y_i - 0.7)`.
    AdditiveSine,
    /// `(10 - 9 y_1)^-1`.
    LowDim,
    /// `sum_j b_j y_j` with `b_j = ((j+1) ln^2(j+1))^(-1/p)`.
    Linear { p: f64 },
    /// `u(1/2, y)` of the lognormal diffusion problem.
    Pde,
}

/// How a target decomposes over coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    /// `f(y) = prod_i g_i(y_i)`.
    Product,
    /// `f(y) = sum_i g_i(y_i)`.
    Additive,
    General,
}

/// A suite member fixed to dimension `d`.
#[derive(Clone, Debug)]
pub struct Target {
    kind: TargetKind,
    d: usize,
    pde: Option<Arc<ParametricDe>>,
}

impl Target {
    pub fn new(kind: TargetKind, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConfig("target dimension must be >= 1".into()));
        }
        match &kind {
            TargetKind::Virtual { model } if d > model.native_dim() => {
                return Err(Error::InvalidConfig(format!(
                    "{} accepts at most {} inputs, got d = {d}",
                    model.name(),
                    model.native_dim()
                )));
            }
            TargetKind::F3 { delta: DeltaRule::Constant(c) } if !(*c > 0.0 && c.is_finite()) => {
                return Err(Error::InvalidConfig(format!("f3 offset must be positive, got {c}")));
            }
            TargetKind::Linear { p } if !(*p > 0.0 && *p < 1.0) => {
                return Err(Error::InvalidConfig(format!("linear target needs 0 < p < 1, got {p}")));
            }
            _ => {}
        }
        let pde = match kind {
            TargetKind::Pde => Some(Arc::new(ParametricDe::new(d, FemSolver1D::default())?)),
            _ => None,
        };
        Ok(Target { kind, d, pde })
    }

    /// Parses an id such as `f3:isq`, `borehole` or `linear:0.5`.
    pub fn parse(id: &str, d: usize) -> Result<Self> {
        let unknown = || Error::UnknownFunction(id.to_string());
        let kind = match id {
            "f1" => TargetKind::F1,
            "f2" => TargetKind::F2,
            "f3:i" => TargetKind::F3 { delta: DeltaRule::Linear },
            "f3:isq" => TargetKind::F3 { delta: DeltaRule::Square },
            "f4" | "borehole" => TargetKind::Virtual {
                model: VirtualModel::Borehole,
            },
            "circuit" => TargetKind::Virtual {
                model: VirtualModel::Circuit,
            },
            "piston" => TargetKind::Virtual {
                model: VirtualModel::Piston,
            },
            "robot" => TargetKind::Virtual {
                model: VirtualModel::Robot,
            },
            "wing" => TargetKind::Virtual { model: VirtualModel::Wing },
            "additive-sine" => TargetKind::AdditiveSine,
            "low-dim" => TargetKind::LowDim,
            "pde" => TargetKind::Pde,
            _ => {
                if let Some(v) = id.strip_prefix("f3:") {
                    TargetKind::F3 {
                        delta: DeltaRule::Constant(v.parse().map_err(|_| unknown())?),
                    }
                } else if let Some(v) = id.strip_prefix("linear:") {
                    TargetKind::Linear {
                        p: v.parse().map_err(|_| unknown())?,
                    }
                } else {
                    return Err(unknown());
                }
            }
        };
        Target::new(kind, d)
    }

    /// Canonical id accepted by [`Target::parse`].
    pub fn id(&self) -> String {
        match &self.kind {
            TargetKind::F1 => "f1".into(),
            TargetKind::F2 => "f2".into(),
            TargetKind::F3 { delta } => match delta {
                DeltaRule::Linear => "f3:i".into(),
                DeltaRule::Square => "f3:isq".into(),
                DeltaRule::Constant(c) => format!("f3:{c}"),
            },
            TargetKind::Virtual { model } => model.name().into(),
            TargetKind::AdditiveSine => "additive-sine".into(),
            TargetKind::LowDim => "low-dim".into(),
            TargetKind::Linear { p } => format!("linear:{p}"),
            TargetKind::Pde => "pde".into(),
        }
    }

    pub fn kind(&self) -> &TargetKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn structure(&self) -> Structure {
        match self.kind {
            TargetKind::F1 | TargetKind::F3 { .. } | TargetKind::LowDim => Structure::Product,
            TargetKind::AdditiveSine | TargetKind::Linear { .. } => Structure::Additive,
            _ => Structure::General,
        }
    }

    /// The univariate factor `g_i` (1-based `i`) of a [`Structure::Product`] or
    /// [`Structure::Additive`] target. Product factors of unused coordinates
    /// are 1 and additive ones are 0.
    pub fn factor(&self, i: usize, t: f64) -> Option<f64> {
        if i == 0 || i > self.d {
            return None;
        }
        match self.kind {
            TargetKind::F1 => Some((t / (2.0 * i as f64)).exp()),
            TargetKind::F3 { delta } => {
                let dl = delta.delta(i);
                Some((2.0 * dl + dl * dl).sqrt() / (t + 1.0 + dl))
            }
            TargetKind::LowDim => Some(if i == 1 { 1.0 / (10.0 - 9.0 * t) } else { 1.0 }),
            TargetKind::AdditiveSine => {
                let s = (16.0 / 15.0 * t - 0.7).sin();
                Some(0.3 + s + s * s)
            }
            TargetKind::Linear { p } => Some(linear_coefficient(i, p) * t),
            _ => None,
        }
    }

    /// Evaluates at `y`, which must have length `d`.
    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: y.len(),
            });
        }
        let d = self.d;
        Ok(match &self.kind {
            TargetKind::F1 => y.iter().enumerate().map(|(i, v)| v / (2.0 * (i + 1) as f64)).sum::<f64>().exp(),
            TargetKind::F2 => {
                let s: f64 = y.iter().enumerate().map(|(i, v)| f2_weight(i + 1, d) * v).sum();
                1.0 / (1.0 + s / (2.0 * d as f64))
            }
            TargetKind::F3 { .. } | TargetKind::LowDim => {
                (1..=d).map(|i| self.factor(i, y[i - 1]).expect("product factor")).product()
            }
            TargetKind::AdditiveSine | TargetKind::Linear { .. } => {
                (1..=d).map(|i| self.factor(i, y[i - 1]).expect("additive factor")).sum()
            }
            TargetKind::Virtual { model } => model.eval(y),
            TargetKind::Pde => self.pde.as_ref().expect("pde model").eval(y)?,
        })
    }

    /// Values at every grid point, in grid order.
    pub fn eval_grid(&self, grid: &Grid) -> Result<Vec<f64>> {
        if grid.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: grid.dim(),
            });
        }
        let values: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|i| self.eval(grid.point(i)))
            .collect::<Result<_>>()?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} at grid point {i}", self.id())));
        }
        Ok(values)
    }
}

/// `q_i = 10^(-3 (i-1)/(d-1))`, with `q_1 = 1` when `d = 1`.
pub fn f2_weight(i: usize, d: usize) -> f64 {
    if d == 1 {
        1.0
    } else {
        10f64.powf(-3.0 * (i - 1) as f64 / (d - 1) as f64)
    }
}

/// `b_j = ((j+1) ln^2(j+1))^(-1/p)`.
pub fn linear_coefficient(j: usize, p: f64) -> f64 {
    let x = (j + 1) as f64;
    (x * x.ln().powi(2)).powf(-1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    use crate::rng::StreamRng;

    fn uniform(rng: &mut StreamRng, d: usize) -> Vec<f64> {
        (0..d).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect()
    }

    fn t(id: &str, d: usize) -> Target {
        Target::parse(id, d).unwrap()
    }

    #[test]
    fn f1_examples() {
        assert_eq!(t("f1", 7).eval(&[0.0; 7]).unwrap(), 1.0);
        assert!((t("f1", 1).eval(&[1.0]).unwrap() - 0.5f64.exp()).abs() < 1e-15);
        for d in [1, 3, 16] {
            let f = t("f1", d);
            let prod = f.eval(&vec![1.0; d]).unwrap() * f.eval(&vec![-1.0; d]).unwrap();
            assert!((prod - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn f2_examples_and_bounds() {
        assert_eq!(t("f2", 5).eval(&[0.0; 5]).unwrap(), 1.0);
        let v = t("f2", 2).eval(&[1.0, 1.0]).unwrap();
        assert!((v - 1.0 / (1.0 + 1.001 / 4.0)).abs() < 1e-15);
        assert_eq!(f2_weight(1, 1), 1.0);
        let f = t("f2", 32);
        let mut rng = StreamRng::seed_from_u64(1);
        for _ in 0..100_000 {
            let v = f.eval(&uniform(&mut rng, 32)).unwrap();
            assert!((0.9..=1.1).contains(&v), "{v}");
        }
    }

    #[test]
    fn f3_examples() {
        assert!((t("f3:1", 1).eval(&[1.0]).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(DeltaRule::Square.delta(3), 9.0);
        assert_eq!(t("f3:isq", 2).id(), "f3:isq");
        // unit norm under the uniform probability measure, by Gauss-Legendre
        let (x, w) = crate::poly_basis::gauss_rule(crate::BasisFamily::Legendre, 40);
        let f = t("f3:i", 4);
        for i in 1..=4 {
            let sq: f64 = x.iter().zip(&w).map(|(t, w)| w * f.factor(i, *t).unwrap().powi(2)).sum();
            assert!((sq - 1.0).abs() < 1e-10, "factor {i}: {sq}");
        }
        // Monte Carlo on the full product
        let mut rng = StreamRng::seed_from_u64(2);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| f.eval(&uniform(&mut rng, 4)).unwrap().powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn product_structure_holds() {
        let mut rng = StreamRng::seed_from_u64(3);
        for id in ["f1", "f3:i", "f3:isq", "low-dim"] {
            let f = t(id, 6);
            assert_eq!(f.structure(), Structure::Product);
            for _ in 0..50 {
                let y = uniform(&mut rng, 6);
                let prod: f64 = (1..=6).map(|i| f.factor(i, y[i - 1]).unwrap()).product();
                assert!((f.eval(&y).unwrap() - prod).abs() <= 1e-14 * prod.abs());
            }
        }
    }

    #[test]
    fn additive_sine_examples() {
        let s = (-0.7f64).sin();
        assert!((t("additive-sine", 1).eval(&[0.0]).unwrap() - (0.3 + s + s * s)).abs() < 1e-15);
        assert!((t("additive-sine", 1).eval(&[0.0]).unwrap() - 0.070_798).abs() < 1e-6);
        let f1 = t("additive-sine", 1);
        let f2 = t("additive-sine", 2);
        let y = [0.3, -0.8];
        let sum = f1.eval(&y[..1]).unwrap() + f1.eval(&y[1..]).unwrap();
        assert!((f2.eval(&y).unwrap() - sum).abs() < 1e-15);
    }

    #[test]
    fn low_dim_examples() {
        let f = t("low-dim", 3);
        assert!((f.eval(&[0.0, 0.5, 0.5]).unwrap() - 0.1).abs() < 1e-16);
        assert_eq!(f.eval(&[1.0, -1.0, 0.2]).unwrap(), 1.0);
        assert!((f.eval(&[-1.0, 0.0, 0.0]).unwrap() - 1.0 / 19.0).abs() < 1e-16);
    }

    #[test]
    fn linear_examples() {
        let f = t("linear:0.5", 10);
        assert_eq!(f.eval(&[0.0; 10]).unwrap(), 0.0);
        // b_1 = (2 ln^2 2)^-2
        assert!((linear_coefficient(1, 0.5) - (2.0 * 2f64.ln().powi(2)).powi(-2)).abs() < 1e-15);
        let mut y = [0.0; 10];
        y[3] = 1.0;
        assert!((f.eval(&y).unwrap() - linear_coefficient(4, 0.5)).abs() < 1e-16);
        // Legendre coefficient of e_j is b_j / sqrt(3)
        let (x, w) = crate::poly_basis::gauss_rule(crate::BasisFamily::Legendre, 4);
        let c: f64 = x
            .iter()
            .zip(&w)
            .map(|(t, w)| {
                let mut y = [0.0; 10];
                y[3] = *t;
                w * f.eval(&y).unwrap() * 3f64.sqrt() * t
            })
            .sum();
        assert!((c - 3f64.sqrt() * linear_coefficient(4, 0.5) / 3.0).abs() < 1e-15);
        assert!((c - linear_coefficient(4, 0.5) / 3f64.sqrt()).abs() < 1e-15);
        assert!(Target::parse("linear:1.5", 3).is_err());
    }

    #[test]
    fn registry_round_trip() {
        for id in [
            "f1", "f2", "f3:i", "f3:isq", "f3:0.5", "borehole", "circuit", "piston", "robot", "wing",
            "additive-sine", "low-dim", "linear:0.5", "pde",
        ] {
            let f = t(id, 2);
            assert_eq!(Target::parse(&f.id(), 2).unwrap().id(), f.id());
        }
        assert_eq!(t("f4", 3).id(), "borehole");
        assert!(matches!(Target::parse("f9", 2), Err(Error::UnknownFunction(_))));
        assert!(Target::parse("f3:-1", 2).is_err());
        assert!(Target::parse("circuit", 7).is_err());
        assert!(t("f1", 3).eval(&[0.0; 2]).is_err());
    }

    // Straight-line transcriptions of the physical models at native inputs.
    fn borehole_ref(x: [f64; 8]) -> f64 {
        let [rw, r, tu, hu, tl, hl, l, kw] = x;
        let frac1 = 2.0 * PI * tu * (hu - hl);
        let frac2a = 2.0 * l * tu / ((r / rw).ln() * rw.powi(2) * kw);
        let frac2b = tu / tl;
        let frac2 = (r / rw).ln() * (1.0 + frac2a + frac2b);
        frac1 / frac2
    }

    fn circuit_ref(x: [f64; 6]) -> f64 {
        let [rb1, rb2, rf, rc1, rc2, beta] = x;
        let vb1 = 12.0 * rb2 / (rb1 + rb2);
        let term1a = (vb1 + 0.74) * beta * (rc2 + 9.0);
        let term1b = beta * (rc2 + 9.0) + rf;
        let term2a = 11.35 * rf;
        let term3a = 0.74 * rf * beta * (rc2 + 9.0);
        let term3b = (beta * (rc2 + 9.0) + rf) * rc1;
        term1a / term1b + term2a / term1b + term3a / term3b
    }

    fn piston_ref(x: [f64; 7]) -> f64 {
        let [m, s, v0, k, p0, ta, t0] = x;
        let aa = p0 * s + 19.62 * m - k * v0 / s;
        let vfact1 = s / (2.0 * k);
        let vfact2 = (aa.powi(2) + 4.0 * k * (p0 * v0 / t0) * ta).sqrt();
        let v = vfact1 * (vfact2 - aa);
        let fact1 = m;
        let fact2 = k + s.powi(2) * (p0 * v0 / t0) * (ta / v.powi(2));
        2.0 * PI * (fact1 / fact2).sqrt()
    }

    fn robot_ref(x: [f64; 8]) -> f64 {
        let th = &x[..4];
        let l = &x[4..];
        let mut u = 0.0;
        let mut v = 0.0;
        for i in 0..4 {
            let s: f64 = th[..=i].iter().sum();
            u += l[i] * s.cos();
            v += l[i] * s.sin();
        }
        (u.powi(2) + v.powi(2)).sqrt()
    }

    fn wing_ref(x: [f64; 10]) -> f64 {
        let [sw, wfw, a, ls, q, l, tc, nz, wdg, wp] = x;
        let ls = ls * PI / 180.0;
        let fact1 = 0.036 * sw.powf(0.758) * wfw.powf(0.0035);
        let fact2 = (a / ls.cos().powi(2)).powf(0.6);
        let fact3 = q.powf(0.006) * l.powf(0.04);
        let fact4 = (100.0 * tc / ls.cos()).powf(-0.3);
        let fact5 = (nz * wdg).powf(0.49);
        let term1 = sw * wp;
        fact1 * fact2 * fact3 * fact4 * fact5 + term1
    }

    fn native(model: VirtualModel, y: &[f64]) -> Vec<f64> {
        model
            .ranges()
            .iter()
            .zip(y)
            .map(|(&(lo, hi), t)| lo + (hi - lo) * (t + 1.0) / 2.0)
            .collect()
    }

    #[test]
    fn virtual_models_match_independent_transcriptions() {
        let mut rng = StreamRng::seed_from_u64(4);
        for _ in 0..200 {
            for model in VirtualModel::ALL {
                let y = uniform(&mut rng, model.native_dim());
                let x = native(model, &y);
                let want = match model {
                    VirtualModel::Borehole => borehole_ref(x.try_into().unwrap()),
                    VirtualModel::Circuit => circuit_ref(x.try_into().unwrap()),
                    VirtualModel::Piston => piston_ref(x.try_into().unwrap()),
                    VirtualModel::Robot => robot_ref(x.try_into().unwrap()),
                    VirtualModel::Wing => wing_ref(x.try_into().unwrap()),
                };
                let got = model.eval(&y);
                assert!((got - want).abs() <= 1e-12 * want.abs(), "{}: {got} vs {want}", model.name());
            }
        }
    }

    #[test]
    fn virtual_spot_values() {
        // frozen values at the box centre
        let centre = |m: VirtualModel| m.eval(&vec![0.0; m.native_dim()]);
        let spots = [
            (VirtualModel::Borehole, 70.872_912_637),
            (VirtualModel::Circuit, 5.310_616_942),
            (VirtualModel::Piston, 0.464_397_022),
            (VirtualModel::Robot, 0.0),
            (VirtualModel::Wing, 267.624_692_570),
        ];
        for (m, v) in spots {
            assert!((centre(m) - v).abs() <= 1e-8 * v.abs().max(1.0), "{}: {}", m.name(), centre(m));
        }
    }

    #[test]
    fn borehole_is_positive() {
        let f = t("borehole", 8);
        let mut rng = StreamRng::seed_from_u64(5);
        for _ in 0..100_000 {
            let v = f.eval(&uniform(&mut rng, 8)).unwrap();
            assert!(v.is_finite() && v > 0.0);
        }
    }

    #[test]
    fn robot_in_two_dimensions() {
        let f = t("robot", 2);
        let mut rng = StreamRng::seed_from_u64(6);
        for _ in 0..1000 {
            let y = uniform(&mut rng, 2);
            let v = f.eval(&y).unwrap();
            let w = f.eval(&[-y[0] * 0.5, y[1]]).unwrap();
            assert!((v - w).abs() < 1e-12);
            assert!((v - (10.0 - 6.0 * (PI * y[1]).cos()).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn pinning_is_consistent() {
        let mut rng = StreamRng::seed_from_u64(7);
        for model in VirtualModel::ALL {
            let full = Target::new(TargetKind::Virtual { model }, model.native_dim()).unwrap();
            for d in 1..model.native_dim() {
                let part = Target::new(TargetKind::Virtual { model }, d).unwrap();
                let y = uniform(&mut rng, d);
                let mut padded = y.clone();
                padded.resize(model.native_dim(), 1.0);
                assert_eq!(part.eval(&y).unwrap(), full.eval(&padded).unwrap());
            }
        }
    }

    #[test]
    fn fem_constant_coefficient_matches_closed_form() {
        let pde = t("pde", 1);
        let v = pde.eval(&[0.0]).unwrap();
        let exact = 1.0 / (8.0 * 1f64.exp());
        assert!((v - exact).abs() < 1e-6, "{v} vs {exact}");
        assert!((exact - 0.045_99).abs() < 1e-5);
        // nodal exactness of linear elements for constant data
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn fem_symmetric_solution_peaks_at_midpoint() {
        let solver = FemSolver1D::default();
        let coef = vec![1f64.exp(); solver.elements()];
        let u = solver.solve(&coef).unwrap();
        let mid = u[solver.elements() / 2 - 1];
        assert!(u.iter().all(|v| *v <= mid));
        for k in 0..u.len() {
            assert!((u[k] - u[u.len() - 1 - k]).abs() < 1e-14);
        }
    }

    #[test]
    fn fem_energy_identity() {
        let model = ParametricDe::new(6, FemSolver1D::default()).unwrap();
        let mut rng = StreamRng::seed_from_u64(8);
        for _ in 0..20 {
            let coef = model.coefficient(&uniform(&mut rng, 6));
            let u = model.solver().solve(&coef).unwrap();
            let lhs = model.solver().energy(&coef, &u);
            let rhs: f64 = u.iter().zip(model.solver().load()).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs(), "{lhs} {rhs} {}", (lhs - rhs) / rhs);
        }
    }

    #[test]
    fn fem_solution_satisfies_stiffness_system() {
        let model = ParametricDe::new(3, FemSolver1D::new(64).unwrap()).unwrap();
        let coef = model.coefficient(&[0.4, -0.9, 0.7]);
        let u = model.solver().solve(&coef).unwrap();
        let ku = model.solver().apply(&coef, &u);
        for (a, b) in ku.iter().zip(model.solver().load()) {
            assert!((a - b).abs() <= 1e-12 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn fem_mesh_refinement() {
        let coarse = ParametricDe::new(4, FemSolver1D::new(FEM_ELEMENTS).unwrap()).unwrap();
        let fine = ParametricDe::new(4, FemSolver1D::new(2 * FEM_ELEMENTS).unwrap()).unwrap();
        let mut rng = StreamRng::seed_from_u64(9);
        for _ in 0..20 {
            let y = uniform(&mut rng, 4);
            let a = coarse.eval(&y).unwrap();
            let b = fine.eval(&y).unwrap();
            assert!((a - b).abs() < 1e-6 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn fem_rejects_bad_input() {
        assert!(FemSolver1D::new(7).is_err());
        let s = FemSolver1D::new(8).unwrap();
        assert!(s.solve(&[1.0; 7]).is_err());
        assert!(s.solve(&[1.0, 1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn custom_forcing_changes_load() {
        let s = FemSolver1D::with_forcing(16, Arc::new(|x| 2.0 * x)).unwrap();
        let h = 1.0 / 16.0;
        assert!((s.load()[0] - 2.0 * h * h).abs() < 1e-15);
        assert_eq!(s.forcing(0.25), 0.5);
    }

    #[test]
    fn grid_evaluation_is_deterministic() {
        let grid = Grid::draw(3, 500, crate::BasisFamily::Legendre, 10).unwrap();
        for id in ["f2", "pde", "piston"] {
            let f = t(id, 3);
            let a = f.eval_grid(&grid).unwrap();
            let b = f.eval_grid(&grid).unwrap();
            assert_eq!(a, b);
            assert_eq!(a[17], f.eval(grid.point(17)).unwrap());
        }
    }
}
