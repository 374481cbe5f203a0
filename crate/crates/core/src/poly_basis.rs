//! Orthonormal polynomial bases on `[-1, 1]` and their tensor products.
//!
//! Each [`BasisFamily`] fixes a probability measure and the matching
//! orthonormal sequence `psi_0 = 1, psi_1, ...`:
//!
//! | family       | measure                         | `psi_k`          |
//! |--------------|---------------------------------|------------------|
//! | `Legendre`   | `dy / 2`                        | `sqrt(2k+1) P_k` |
//! | `Chebyshev1` | `dy / (pi sqrt(1 - y^2))`       | `sqrt(2) T_k`    |
//! | `Chebyshev2` | `(2 / pi) sqrt(1 - y^2) dy`     | `U_k`            |
//!
//! All three attain `max |psi_k|` at `y = +-1`, so the Christoffel function of
//! any index set is maximal at the all-ones point.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_index::{IndexSet, MultiIndex};

/// Slack allowed beyond `[-1, 1]` before a coordinate is rejected.
pub const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisFamily {
    Legendre,
    #[serde(rename = "cheb1")]
    Chebyshev1,
    #[serde(rename = "cheb2")]
    Chebyshev2,
}

impl BasisFamily {
    pub const ALL: [BasisFamily; 3] = [
        BasisFamily::Legendre,
        BasisFamily::Chebyshev1,
        BasisFamily::Chebyshev2,
    ];

    /// Short identifier used on the command line and in files.
    pub fn id(self) -> &'static str {
        match self {
            BasisFamily::Legendre => "legendre",
            BasisFamily::Chebyshev1 => "cheb1",
            BasisFamily::Chebyshev2 => "cheb2",
        }
    }

    /// One-byte tag used in the grid file header.
    pub fn tag(self) -> u8 {
        match self {
            BasisFamily::Legendre => 0,
            BasisFamily::Chebyshev1 => 1,
            BasisFamily::Chebyshev2 => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(BasisFamily::Legendre),
            1 => Ok(BasisFamily::Chebyshev1),
            2 => Ok(BasisFamily::Chebyshev2),
            _ => Err(Error::Format(format!("unknown measure tag {tag}"))),
        }
    }

    /// Writes `psi_0(y), ..., psi_{out.len()-1}(y)` into `out`. `y` must already
    /// lie in `[-1, 1]`.
    pub fn fill_univariate(self, y: f64, out: &mut [f64]) {
        let n = out.len();
        if n == 0 {
            return;
        }
        out[0] = 1.0;
        if n == 1 {
            return;
        }
        match self {
            BasisFamily::Legendre => {
                out[1] = 3f64.sqrt() * y;
                for k in 1..n - 1 {
                    let kf = k as f64;
                    let a = ((2.0 * kf + 1.0) * (2.0 * kf + 3.0)).sqrt() / (kf + 1.0);
                    let b = kf / (kf + 1.0) * ((2.0 * kf + 3.0) / (2.0 * kf - 1.0)).sqrt();
                    out[k + 1] = a * y * out[k] - b * out[k - 1];
                }
            }
            BasisFamily::Chebyshev1 => {
                let r2 = std::f64::consts::SQRT_2;
                out[1] = r2 * y;
                if n > 2 {
                    out[2] = 2.0 * y * out[1] - r2;
                }
                for k in 2..n - 1 {
                    out[k + 1] = 2.0 * y * out[k] - out[k - 1];
                }
            }
            BasisFamily::Chebyshev2 => {
                out[1] = 2.0 * y;
                for k in 1..n - 1 {
                    out[k + 1] = 2.0 * y * out[k] - out[k - 1];
                }
            }
        }
    }

    /// `psi_nu(y)`.
    pub fn eval_univariate(self, nu: usize, y: f64) -> Result<f64> {
        let y = clamp_coordinate(y)?;
        let mut buf = vec![0.0; nu + 1];
        self.fill_univariate(y, &mut buf);
        Ok(buf[nu])
    }

    /// `Psi_nu(y) = prod_{j in supp(nu)} psi_{nu_j}(y_j)`.
    pub fn eval_tensor(self, nu: &MultiIndex, y: &[f64]) -> Result<f64> {
        if nu.max_dim() > y.len() {
            return Err(Error::DimensionMismatch {
                expected: nu.max_dim(),
                got: y.len(),
            });
        }
        let mut prod = 1.0;
        for (j, k) in nu.iter() {
            prod *= self.eval_univariate(k as usize, y[j - 1])?;
        }
        Ok(prod)
    }

    /// `u_nu^2 = ||Psi_nu||_inf^2`, an integer for all three families.
    pub fn intrinsic_weight_sq(self, nu: &MultiIndex) -> f64 {
        match self {
            BasisFamily::Legendre => nu.iter().map(|(_, k)| 2.0 * k as f64 + 1.0).product(),
            BasisFamily::Chebyshev1 => (1u64 << nu.support_size().min(1023)) as f64,
            BasisFamily::Chebyshev2 => nu
                .iter()
                .map(|(_, k)| {
                    let v = k as f64 + 1.0;
                    v * v
                })
                .product(),
        }
    }

    /// `u_nu = ||Psi_nu||_inf`.
    pub fn intrinsic_weight(self, nu: &MultiIndex) -> f64 {
        match self {
            BasisFamily::Chebyshev2 => nu.iter().map(|(_, k)| k as f64 + 1.0).product(),
            _ => self.intrinsic_weight_sq(nu).sqrt(),
        }
    }

    /// Christoffel function `sum_{nu in S} Psi_nu(y)^2`.
    pub fn christoffel(self, set: &IndexSet, y: &[f64]) -> Result<f64> {
        let table = PointTable::new(self, set, y)?;
        Ok(set
            .iter()
            .map(|nu| {
                let v = table.eval(nu);
                v * v
            })
            .sum())
    }

    /// `kappa(P_S) = sup_y K(P_S)(y)`, evaluated at the maximizing point
    /// `y = 1` where it equals the weighted cardinality.
    pub fn kappa(self, set: &IndexSet) -> f64 {
        set.weighted_cardinality(self)
    }

    /// Draws one coordinate from the family's measure given `u ~ U[0, 1)`.
    pub fn inverse_cdf(self, u: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            BasisFamily::Legendre => 2.0 * u - 1.0,
            BasisFamily::Chebyshev1 => (PI * u).cos(),
            BasisFamily::Chebyshev2 => {
                // theta has density (2/pi) sin^2(theta) on [0, pi],
                // CDF (2 theta - sin 2 theta) / (2 pi).
                let target = 2.0 * PI * u;
                let (mut lo, mut hi) = (0.0, PI);
                let mut theta = PI * u;
                for _ in 0..200 {
                    let g = 2.0 * theta - (2.0 * theta).sin() - target;
                    if g > 0.0 {
                        hi = theta;
                    } else {
                        lo = theta;
                    }
                    let dg = 2.0 - 2.0 * (2.0 * theta).cos();
                    let newton = theta - g / dg;
                    // safeguarded Newton: bisect whenever the step leaves the bracket
                    let next = if dg > 0.0 && newton > lo && newton < hi {
                        newton
                    } else {
                        0.5 * (lo + hi)
                    };
                    if (next - theta).abs() <= 1e-15 * PI {
                        theta = next;
                        break;
                    }
                    theta = next;
                }
                theta.cos()
            }
        }
    }
}

impl fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for BasisFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "legendre" | "uniform" => Ok(BasisFamily::Legendre),
            "cheb1" | "chebyshev1" | "chebyshev" => Ok(BasisFamily::Chebyshev1),
            "cheb2" | "chebyshev2" => Ok(BasisFamily::Chebyshev2),
            _ => Err(Error::InvalidConfig(format!("unknown basis family `{s}`"))),
        }
    }
}

/// Clamps a coordinate within [`DOMAIN_SLACK`] of the domain onto `[-1, 1]`.
pub fn clamp_coordinate(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::NonFinite(format!("coordinate {y}")));
    }
    if y.abs() > 1.0 + DOMAIN_SLACK {
        return Err(Error::OutOfDomain(y));
    }
    Ok(y.clamp(-1.0, 1.0))
}

/// Univariate values `psi_k(y_j)` for one point, for every dimension and
/// degree needed by an index set. Shared across all columns of a row.
#[derive(Clone, Debug)]
pub struct PointTable {
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl PointTable {
    pub fn new(family: BasisFamily, set: &IndexSet, y: &[f64]) -> Result<Self> {
        let d = y.len();
        if set.max_dim() > d {
            return Err(Error::DimensionMismatch {
                expected: set.max_dim(),
                got: d,
            });
        }
        Self::with_degrees(family, &set.max_degrees(d), y)
    }

    /// `max_deg[j]` is the largest degree needed in dimension `j + 1`.
    pub fn with_degrees(family: BasisFamily, max_deg: &[u32], y: &[f64]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(max_deg.len() + 1);
        let mut total = 0;
        for &k in max_deg {
            offsets.push(total);
            total += k as usize + 1;
        }
        offsets.push(total);
        let mut values = vec![0.0; total];
        for (j, &k) in max_deg.iter().enumerate() {
            let yj = clamp_coordinate(y[j])?;
            family.fill_univariate(yj, &mut values[offsets[j]..offsets[j] + k as usize + 1]);
        }
        Ok(Self { offsets, values })
    }

    /// `Psi_nu` at the tabulated point.
    #[inline]
    pub fn eval(&self, nu: &MultiIndex) -> f64 {
        let mut prod = 1.0;
        for (j, k) in nu.iter() {
            prod *= self.values[self.offsets[j - 1] + k as usize];
        }
        prod
    }
}

/// Univariate values `psi_k(z_ij)` at every point of a fixed point set, per
/// dimension, grown on demand. Column values are bitwise equal to
/// [`basis_matrix`] on the same points.
#[derive(Clone, Debug)]
pub struct UnivariateTables {
    family: BasisFamily,
    len: usize,
    /// `degrees[j]` is one past the largest degree stored for dimension `j + 1`.
    degrees: Vec<usize>,
    /// Point-major: `values[j][i * degrees[j] + k] = psi_k(z_i,j+1)`.
    values: Vec<Vec<f64>>,
}

impl UnivariateTables {
    pub fn new(family: BasisFamily, d: usize, len: usize) -> Self {
        Self {
            family,
            len,
            degrees: vec![0; d],
            values: vec![Vec::new(); d],
        }
    }

    /// Makes every degree of `nu` available. Storage at least doubles when a
    /// dimension has to grow.
    pub fn ensure(&mut self, points: Points<'_>, nu: &MultiIndex) -> Result<()> {
        if points.len() != self.len || points.dim() != self.degrees.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                got: points.len(),
            });
        }
        if nu.max_dim() > points.dim() {
            return Err(Error::DimensionMismatch {
                expected: nu.max_dim(),
                got: points.dim(),
            });
        }
        for (j, k) in nu.iter() {
            let have = self.degrees[j - 1];
            let need = k as usize + 1;
            if need <= have {
                continue;
            }
            let deg = need.max(2 * have);
            let mut v = vec![0.0; self.len * deg];
            for (i, y) in points.iter().enumerate() {
                let yj = clamp_coordinate(y[j - 1])?;
                self.family.fill_univariate(yj, &mut v[i * deg..(i + 1) * deg]);
            }
            self.degrees[j - 1] = deg;
            self.values[j - 1] = v;
        }
        Ok(())
    }

    /// `Psi_nu` at point `i`; the degrees of `nu` must have been ensured.
    #[inline]
    pub fn eval(&self, nu: &MultiIndex, i: usize) -> f64 {
        let mut prod = 1.0;
        for (j, k) in nu.iter() {
            prod *= self.values[j - 1][i * self.degrees[j - 1] + k as usize];
        }
        prod
    }
}

/// Row-major view of `m` points in `d` dimensions.
#[derive(Clone, Copy, Debug)]
pub struct Points<'a> {
    data: &'a [f64],
    d: usize,
}

impl<'a> Points<'a> {
    pub fn new(data: &'a [f64], d: usize) -> Result<Self> {
        if d == 0 || data.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: data.len(),
            });
        }
        Ok(Self { data, d })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a [f64]> + 'a {
        self.data.chunks_exact(self.d)
    }
}

/// The weighted least-squares matrix with entries
/// `sqrt(w_i / m) * Psi_{nu_j}(y_i)`.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    pub values: Mat<f64>,
    pub row_weights: Vec<f64>,
    pub columns: Vec<MultiIndex>,
}

impl DesignMatrix {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Row scale `sqrt(w_i / m)`.
    pub fn row_scale(&self, i: usize) -> f64 {
        (self.row_weights[i] / self.nrows() as f64).sqrt()
    }
}

/// Unscaled evaluation matrix `(Psi_{nu_j}(y_i))`, columns in `columns` order.
pub fn basis_matrix(family: BasisFamily, columns: &[MultiIndex], points: Points<'_>) -> Result<Mat<f64>> {
    let d = points.dim();
    let mut max_deg = vec![0u32; d];
    for nu in columns {
        if nu.max_dim() > d {
            return Err(Error::DimensionMismatch {
                expected: nu.max_dim(),
                got: d,
            });
        }
        for (j, k) in nu.iter() {
            max_deg[j - 1] = max_deg[j - 1].max(k);
        }
    }
    let mut out = Mat::<f64>::zeros(points.len(), columns.len());
    for (i, y) in points.iter().enumerate() {
        let table = PointTable::with_degrees(family, &max_deg, y)?;
        for (c, nu) in columns.iter().enumerate() {
            out[(i, c)] = table.eval(nu);
        }
    }
    Ok(out)
}

/// Assembles the weighted least-squares matrix for `set` at `points`.
pub fn build_design_matrix(
    family: BasisFamily,
    set: &IndexSet,
    points: Points<'_>,
    weights: &[f64],
) -> Result<DesignMatrix> {
    let m = points.len();
    if m == 0 {
        return Err(Error::InvalidConfig("design matrix needs at least one point".into()));
    }
    if weights.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: weights.len(),
        });
    }
    if let Some((index, &value)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(**w > 0.0) || !w.is_finite())
    {
        return Err(Error::NonPositiveWeight { index, value });
    }
    let columns = set.to_vec();
    let mut values = basis_matrix(family, &columns, points)?;
    for i in 0..m {
        let s = (weights[i] / m as f64).sqrt();
        for c in 0..columns.len() {
            let v = values[(i, c)] * s;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("design matrix entry ({i}, {c})")));
            }
            values[(i, c)] = v;
        }
    }
    Ok(DesignMatrix {
        values,
        row_weights: weights.to_vec(),
        columns,
    })
}

/// A sparse coefficient vector keyed by multi-index, kept in canonical order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoefVector {
    indices: Vec<MultiIndex>,
    values: Vec<f64>,
}

impl CoefVector {
    /// Coefficients for the members of `set` in canonical order.
    pub fn new(set: &IndexSet, values: Vec<f64>) -> Result<Self> {
        if set.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: set.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            indices: set.to_vec(),
            values,
        })
    }

    /// Builds from pairs in any order; repeated indices are rejected.
    pub fn from_pairs<I: IntoIterator<Item = (MultiIndex, f64)>>(pairs: I) -> Result<Self> {
        let mut v: Vec<(MultiIndex, f64)> = pairs.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        if v.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidIndex("repeated index in coefficient vector".into()));
        }
        let (indices, values) = v.into_iter().unzip();
        Ok(Self { indices, values })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.indices.iter().zip(self.values.iter().copied())
    }

    /// Coefficient of `nu`, zero when absent.
    pub fn get(&self, nu: &MultiIndex) -> f64 {
        match self.indices.binary_search(nu) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn index_set(&self) -> IndexSet {
        self.indices.iter().cloned().collect()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `sum_nu c_nu Psi_nu(y)`.
    pub fn eval(&self, family: BasisFamily, y: &[f64]) -> Result<f64> {
        let mut max_deg = vec![0u32; y.len()];
        for nu in &self.indices {
            if nu.max_dim() > y.len() {
                return Err(Error::DimensionMismatch {
                    expected: nu.max_dim(),
                    got: y.len(),
                });
            }
            for (j, k) in nu.iter() {
                max_deg[j - 1] = max_deg[j - 1].max(k);
            }
        }
        let table = PointTable::with_degrees(family, &max_deg, y)?;
        Ok(self.iter().map(|(nu, c)| c * table.eval(nu)).sum())
    }

    /// Values at every point of `points`, one point at a time so memory stays
    /// `O(len)` regardless of the number of points.
    pub fn eval_many(&self, family: BasisFamily, points: Points<'_>) -> Result<Vec<f64>> {
        let d = points.dim();
        let mut max_deg = vec![0u32; d];
        for nu in &self.indices {
            if nu.max_dim() > d {
                return Err(Error::DimensionMismatch {
                    expected: nu.max_dim(),
                    got: d,
                });
            }
            for (j, k) in nu.iter() {
                max_deg[j - 1] = max_deg[j - 1].max(k);
            }
        }
        points
            .iter()
            .map(|y| {
                let table = PointTable::with_degrees(family, &max_deg, y)?;
                Ok(self.iter().map(|(nu, c)| c * table.eval(nu)).sum())
            })
            .collect()
    }
}

/// `N`-point Gauss rule for the family's probability measure; exact for
/// polynomials of degree `2N - 1`.
pub fn gauss_rule(family: BasisFamily, n: usize) -> (Vec<f64>, Vec<f64>) {
    use std::f64::consts::PI;
    assert!(n >= 1);
    let nf = n as f64;
    match family {
        BasisFamily::Chebyshev1 => {
            let nodes = (1..=n)
                .map(|k| ((2.0 * k as f64 - 1.0) * PI / (2.0 * nf)).cos())
                .collect();
            (nodes, vec![1.0 / nf; n])
        }
        BasisFamily::Chebyshev2 => {
            let mut nodes = Vec::with_capacity(n);
            let mut weights = Vec::with_capacity(n);
            for k in 1..=n {
                let t = k as f64 * PI / (nf + 1.0);
                nodes.push(t.cos());
                weights.push(2.0 / (nf + 1.0) * t.sin().powi(2));
            }
            (nodes, weights)
        }
        BasisFamily::Legendre => {
            let mut nodes = vec![0.0; n];
            let mut weights = vec![0.0; n];
            for i in 0..n.div_ceil(2) {
                let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (p, dpn) = legendre_with_derivative(n, x);
                    dp = dpn;
                    let dx = p / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                let (_, dpn) = legendre_with_derivative(n, x);
                dp = if dpn != 0.0 { dpn } else { dp };
                // weights for dy/2
                let w = 1.0 / ((1.0 - x * x) * dp * dp);
                nodes[i] = x;
                nodes[n - 1 - i] = -x;
                weights[i] = w;
                weights[n - 1 - i] = w;
            }
            if n % 2 == 1 {
                nodes[n / 2] = 0.0;
            }
            (nodes, weights)
        }
    }
}

// Classical P_n(x) and P_n'(x).
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multi_index::{tensor_set, total_degree_set};

    const FAMS: [BasisFamily; 3] = BasisFamily::ALL;

    fn idx(pairs: &[(usize, usize)]) -> MultiIndex {
        MultiIndex::from_pairs(pairs.iter().copied()).unwrap()
    }

    fn line(n: usize) -> IndexSet {
        (0..n).map(|k| MultiIndex::axis(1, k).unwrap()).collect()
    }

    #[test]
    fn univariate_examples() {
        for y in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            let v = BasisFamily::Legendre.eval_univariate(1, y).unwrap();
            assert!((v - 3f64.sqrt() * y).abs() < 1e-15);
            for f in FAMS {
                assert_eq!(f.eval_univariate(0, y).unwrap(), 1.0);
            }
        }
        assert!((BasisFamily::Chebyshev2.eval_univariate(3, 1.0).unwrap() - 4.0).abs() < 1e-14);
        assert!(BasisFamily::Legendre.eval_univariate(2, 1.1).is_err());
        assert!(BasisFamily::Legendre.eval_univariate(2, 1.0 + 1e-13).is_ok());
    }

    #[test]
    fn chebyshev1_matches_cosine_form() {
        for k in 1..30 {
            for y in [-0.9, -0.2, 0.35, 0.8] {
                let exact = std::f64::consts::SQRT_2 * (k as f64 * f64::acos(y)).cos();
                let v = BasisFamily::Chebyshev1.eval_univariate(k, y).unwrap();
                assert!((v - exact).abs() < 1e-12, "k={k} y={y}");
            }
        }
    }

    #[test]
    fn tensor_examples() {
        let y = [1.0, 1.0, 1.0];
        assert_eq!(BasisFamily::Legendre.eval_tensor(&MultiIndex::zero(), &y).unwrap(), 1.0);
        let v = BasisFamily::Legendre.eval_tensor(&idx(&[(1, 1), (2, 1)]), &y).unwrap();
        assert!((v - 3.0).abs() < 1e-14);
        for k in 0..=3 {
            let nu = MultiIndex::from_pairs((1..=k).map(|j| (j, j))).unwrap();
            let v = BasisFamily::Chebyshev1.eval_tensor(&nu, &y).unwrap();
            assert!((v - 2f64.powf(k as f64 / 2.0)).abs() < 1e-13);
        }
        assert!(BasisFamily::Legendre.eval_tensor(&idx(&[(4, 1)]), &y).is_err());
    }

    #[test]
    fn intrinsic_weight_examples() {
        for f in FAMS {
            assert_eq!(f.intrinsic_weight(&MultiIndex::zero()), 1.0);
        }
        assert!((BasisFamily::Legendre.intrinsic_weight(&idx(&[(1, 3)])) - 7f64.sqrt()).abs() < 1e-15);
        assert!((BasisFamily::Chebyshev1.intrinsic_weight(&idx(&[(1, 1), (4, 1)])) - 2.0).abs() < 1e-15);
        assert_eq!(BasisFamily::Chebyshev2.intrinsic_weight(&idx(&[(1, 2), (2, 1)])), 6.0);
    }

    #[test]
    fn christoffel_examples() {
        let y = [0.3, -0.4];
        for f in FAMS {
            assert_eq!(f.christoffel(&IndexSet::origin(), &y).unwrap(), 1.0);
        }
        let k = BasisFamily::Legendre.christoffel(&line(3), &[0.0]).unwrap();
        assert!((k - 2.25).abs() < 1e-14);
        let s = total_degree_set(3, 2).unwrap();
        for f in [BasisFamily::Legendre, BasisFamily::Chebyshev1] {
            let at_one = f.christoffel(&s, &[1.0, 1.0]).unwrap();
            assert!((at_one - s.weighted_cardinality(f)).abs() < 1e-10);
        }
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(BasisFamily::Legendre.kappa(&line(7)), 49.0);
        let box2 = tensor_set(1, 2).unwrap();
        assert_eq!(BasisFamily::Chebyshev1.kappa(&box2), 9.0);
        assert!((9f64 - 4f64.powf(3f64.ln() / 2f64.ln())).abs() < 1e-12);
        let k = BasisFamily::Chebyshev2.kappa(&line(4));
        assert_eq!(k, 30.0);
        assert!(64.0 / 3.0 <= k && k <= 64.0);
    }

    #[test]
    fn orthonormality_by_gauss_quadrature() {
        for f in FAMS {
            let (x, w) = gauss_rule(f, 25);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let mut tab = vec![vec![0.0; 21]; x.len()];
            for (i, &xi) in x.iter().enumerate() {
                f.fill_univariate(xi, &mut tab[i]);
            }
            for j in 0..=20 {
                for k in 0..=20 {
                    let g: f64 = (0..x.len()).map(|i| w[i] * tab[i][j] * tab[i][k]).sum();
                    let expect = if j == k { 1.0 } else { 0.0 };
                    assert!((g - expect).abs() < 1e-12, "{f} j={j} k={k} g={g}");
                }
            }
        }
    }

    #[test]
    fn endpoint_maximality() {
        use std::f64::consts::PI;
        let grid: Vec<f64> = (0..10_000).map(|i| (i as f64 * PI / 9_999.0).cos()).collect();
        for f in FAMS {
            let mut buf = vec![0.0; 51];
            let mut best = vec![0.0f64; 51];
            for &y in &grid {
                f.fill_univariate(y, &mut buf);
                for k in 0..=50 {
                    best[k] = best[k].max(buf[k].abs());
                }
            }
            let mut at_one = vec![0.0; 51];
            f.fill_univariate(1.0, &mut at_one);
            let mut at_minus = vec![0.0; 51];
            f.fill_univariate(-1.0, &mut at_minus);
            for k in 0..=50 {
                let u = f.intrinsic_weight(&MultiIndex::axis(1, k).unwrap());
                assert!((best[k] - u).abs() < 1e-10 * u, "{f} k={k}");
                assert!((at_one[k].abs() - u).abs() < 1e-10 * u);
                assert!((at_minus[k].abs() - u).abs() < 1e-10 * u);
            }
        }
    }

    #[test]
    fn christoffel_integrates_to_cardinality() {
        // tensor Gauss rule integrates the Christoffel function exactly
        let s = total_degree_set(4, 2).unwrap();
        for f in FAMS {
            let (x, w) = gauss_rule(f, 8);
            let mut total = 0.0;
            for (a, &xa) in x.iter().enumerate() {
                for (b, &xb) in x.iter().enumerate() {
                    let k = f.christoffel(&s, &[xa, xb]).unwrap();
                    assert!(k >= 1.0 - 1e-12);
                    total += w[a] * w[b] * k;
                }
            }
            assert!((total - s.len() as f64).abs() < 1e-10, "{f}: {total}");
            assert!(f.kappa(&s) >= s.len() as f64);
        }
    }

    #[test]
    fn kappa_matches_dense_maximization() {
        use std::f64::consts::PI;
        let sets = [
            IndexSet::origin(),
            line(4),
            tensor_set(1, 2).unwrap(),
            total_degree_set(2, 2).unwrap(),
        ];
        let pts: Vec<f64> = (0..=200).map(|i| (i as f64 * PI / 200.0).cos()).collect();
        for f in FAMS {
            for s in &sets {
                let mut best = 0.0f64;
                for &a in &pts {
                    for &b in &pts {
                        best = best.max(f.christoffel(s, &[a, b]).unwrap());
                    }
                }
                assert!((best - f.kappa(s)).abs() < 1e-8, "{f} {s:?}");
            }
        }
    }

    #[test]
    fn design_matrix_examples() {
        let pts = [0.1, -0.5, 0.9];
        let a = build_design_matrix(
            BasisFamily::Legendre,
            &IndexSet::origin(),
            Points::new(&pts, 1).unwrap(),
            &[1.0; 3],
        )
        .unwrap();
        assert_eq!((a.nrows(), a.ncols()), (3, 1));
        for i in 0..3 {
            assert!((a.values[(i, 0)] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
        let bad = build_design_matrix(
            BasisFamily::Legendre,
            &IndexSet::origin(),
            Points::new(&pts, 1).unwrap(),
            &[1.0, 0.0, 1.0],
        );
        assert!(matches!(bad, Err(Error::NonPositiveWeight { index: 1, .. })));
    }

    #[test]
    fn monte_carlo_gram_approaches_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let m = 100_000;
        let pts: Vec<f64> = (0..2 * m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let s = total_degree_set(2, 2).unwrap();
        assert_eq!(s.len(), 6);
        let a = build_design_matrix(BasisFamily::Legendre, &s, Points::new(&pts, 2).unwrap(), &vec![1.0; m]).unwrap();
        let g = a.values.transpose() * &a.values;
        let diff = &g - Mat::<f64>::identity(6, 6);
        let sv = diff.singular_values().unwrap();
        assert!(sv[0] < 0.05, "{}", sv[0]);
    }

    #[test]
    fn univariate_tables_match_basis_matrix() {
        let mut rng = crate::rng::child_rng(3, "tables", 0);
        let pts: Vec<f64> = (0..3 * 50).map(|_| rand::Rng::gen_range(&mut rng, -1.0..=1.0)).collect();
        let points = Points::new(&pts, 3).unwrap();
        let set = crate::multi_index::total_degree_set(6, 3).unwrap();
        for family in BasisFamily::ALL {
            let mut t = UnivariateTables::new(family, 3, 50);
            let direct = basis_matrix(family, &set.to_vec(), points).unwrap();
            for (c, nu) in set.iter().enumerate() {
                t.ensure(points, nu).unwrap();
                for i in 0..50 {
                    assert_eq!(t.eval(nu, i).to_bits(), direct[(i, c)].to_bits());
                }
            }
        }
        let mut t = UnivariateTables::new(BasisFamily::Legendre, 2, 50);
        assert!(t.ensure(points, &MultiIndex::zero()).is_err());
    }
}
