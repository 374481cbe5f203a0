//! The discrete grid measure, Monte Carlo draws and near-optimal
//! (discrete Christoffel) sampling.
//!
//! A [`Grid`] of `K` i.i.d. points stands in for the continuous measure. All
//! sampling draws grid indices with replacement. Near-optimal sampling uses a
//! thin QR factorization `Phi / sqrt(K) = Q R` of the grid basis matrix and
//! draws index `i` with probability `pi_i = |Q_i.|^2 / n`, weighting the draw
//! by `w_i = 1 / (K pi_i)`.

use std::io::{Read, Write};
use std::path::Path;

use faer::{Mat, MatRef};
use rand::Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::multi_index::{IndexSet, MultiIndex};
use crate::poly_basis::{basis_matrix, BasisFamily, Points};
use crate::rng::StreamRng;

const GRID_MAGIC: &[u8; 7] = b"HPGRID1";

/// Probabilities below this are floored before weights are inverted.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Relative singular-value threshold below which the grid basis matrix is
/// treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// `K` points in `[-1, 1]^d` drawn i.i.d. from a family's measure.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    d: usize,
    measure: BasisFamily,
    seed: u64,
}

impl Grid {
    /// Draws `k` points from `measure` using a generator seeded by `seed`.
    pub fn draw(d: usize, k: usize, measure: BasisFamily, seed: u64) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::InvalidConfig("grid needs d >= 1 and K >= 1".into()));
        }
        let mut rng = StreamRng::seed_from_u64(seed);
        let points = (0..k * d)
            .map(|_| measure.inverse_cdf(rng.gen::<f64>()))
            .collect();
        Ok(Self {
            points,
            d,
            measure,
            seed,
        })
    }

    /// Wraps explicit points. The seed is recorded for provenance only.
    pub fn from_points(points: Vec<f64>, d: usize, measure: BasisFamily, seed: u64) -> Result<Self> {
        if d == 0 || points.is_empty() || points.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: points.len(),
            });
        }
        if let Some(&y) = points.iter().find(|y| !(y.abs() <= 1.0)) {
            return Err(Error::OutOfDomain(y));
        }
        Ok(Self {
            points,
            d,
            measure,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn measure(&self) -> BasisFamily {
        self.measure
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn points(&self) -> Points<'_> {
        Points::new(&self.points, self.d).expect("grid shape checked at construction")
    }

    pub fn raw(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    /// Row-major coordinates of the listed grid points.
    pub fn gather(&self, indices: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            out.extend_from_slice(self.point(i));
        }
        out
    }

    /// Serializes as magic, `d: u32`, `K: u64`, measure tag `u8`, seed `u64`,
    /// then `K * d` row-major `f64` values, all little-endian.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(GRID_MAGIC)?;
        w.write_all(&(self.d as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&[self.measure.tag()])?;
        w.write_all(&self.seed.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.points.len() * 8);
        for v in &self.points {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 7];
        r.read_exact(&mut magic)?;
        if &magic != GRID_MAGIC {
            return Err(Error::Format("not a grid file".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        let mut b1 = [0u8; 1];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let k = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b1)?;
        let measure = BasisFamily::from_tag(b1[0])?;
        r.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        let count = k
            .checked_mul(d)
            .ok_or_else(|| Error::Format("grid header overflows".into()))?;
        let mut raw = vec![0u8; count * 8];
        r.read_exact(&mut raw)?;
        let points = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::from_points(points, d, measure, seed)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingStrategy {
    MonteCarlo,
    NearOptimal,
    Christoffel,
}

/// Drawn grid indices (0-based, repeats allowed) with their weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub strategy: SamplingStrategy,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `m` uniform draws with replacement, unit weights.
pub fn draw_mc(grid: &Grid, m: usize, rng: &mut StreamRng) -> Result<SampleSet> {
    if m == 0 {
        return Err(Error::InvalidConfig("m must be positive".into()));
    }
    let k = grid.len();
    let indices = (0..m).map(|_| rng.gen_range(0..k)).collect();
    Ok(SampleSet {
        indices,
        weights: vec![1.0; m],
        strategy: SamplingStrategy::MonteCarlo,
    })
}

/// A probability vector over the grid with its weights `w_i = 1 / (K pi_i)`.
#[derive(Clone, Debug)]
pub struct GridDistribution {
    pub pi: Vec<f64>,
    pub weights: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridDistribution {
    /// Validates `pi` (finite, nonnegative, summing to one within `1e-8`).
    pub fn from_pi(pi: Vec<f64>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::InvalidProbability("empty vector".into()));
        }
        if let Some((i, p)) = pi.iter().enumerate().find(|(_, p)| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidProbability(format!("entry {i} is {p}")));
        }
        let mut cdf = Vec::with_capacity(pi.len());
        let mut acc = 0.0;
        for &p in &pi {
            acc += p;
            cdf.push(acc);
        }
        if (acc - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidProbability(format!("sums to {acc}")));
        }
        let k = pi.len() as f64;
        let weights = pi.iter().map(|&p| 1.0 / (k * p.max(PROBABILITY_FLOOR))).collect();
        Ok(Self { pi, weights, cdf })
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// One index by inverse CDF. Entries with `pi_i = 0` are never returned.
    pub fn sample_index(&self, rng: &mut StreamRng) -> usize {
        let total = *self.cdf.last().expect("nonempty");
        let u = rng.gen::<f64>() * total;
        let mut i = self.cdf.partition_point(|&c| c <= u).min(self.len() - 1);
        while self.pi[i] == 0.0 && i > 0 {
            i -= 1;
        }
        i
    }
}

/// `m` i.i.d. draws from `dist`, each weighted by `1 / (K pi_i)`.
pub fn draw_near_optimal(dist: &GridDistribution, m: usize, rng: &mut StreamRng) -> Result<SampleSet> {
    draw_from(dist, m, rng, SamplingStrategy::NearOptimal)
}

pub(crate) fn draw_from(
    dist: &GridDistribution,
    m: usize,
    rng: &mut StreamRng,
    strategy: SamplingStrategy,
) -> Result<SampleSet> {
    if m == 0 {
        return Err(Error::InvalidConfig("m must be positive".into()));
    }
    let indices: Vec<usize> = (0..m).map(|_| dist.sample_index(rng)).collect();
    let weights = indices.iter().map(|&i| dist.weights[i]).collect();
    Ok(SampleSet {
        indices,
        weights,
        strategy,
    })
}

/// Near-optimal distribution for `set` on `grid`, by one Householder QR of
/// the full `K x n` matrix `Phi / sqrt(K)`.
pub fn near_optimal_distribution(grid: &Grid, family: BasisFamily, set: &IndexSet) -> Result<GridDistribution> {
    let k = grid.len();
    let n = set.len();
    if n == 0 || k < n {
        return Err(Error::InvalidConfig(format!("need 1 <= |S| = {n} <= K = {k}")));
    }
    let mut b = basis_matrix(family, &set.to_vec(), grid.points())?;
    let scale = 1.0 / (k as f64).sqrt();
    for j in 0..n {
        for v in b.col_mut(j).iter_mut() {
            *v *= scale;
        }
    }
    let qr = b.qr();
    let sv = qr
        .thin_R()
        .singular_values()
        .map_err(|_| Error::NonFinite("SVD of triangular factor did not converge".into()))?;
    let (smax, smin) = (sv[0], sv[sv.len() - 1]);
    if !(smin >= RANK_TOLERANCE * smax) {
        return Err(Error::DegenerateGrid {
            sigma_min: smin,
            sigma_max: smax,
        });
    }
    let q = qr.compute_thin_Q();
    GridDistribution::from_pi(row_energy(&q, n))
}

fn row_energy(q: &Mat<f64>, n: usize) -> Vec<f64> {
    let mut pi = vec![0.0; q.nrows()];
    for j in 0..q.ncols() {
        for (p, v) in pi.iter_mut().zip(q.col(j).iter()) {
            *p += v * v;
        }
    }
    let inv = 1.0 / n as f64;
    pi.iter_mut().for_each(|p| *p *= inv);
    pi
}

/// Distribution `pi_i ∝ K(P_S)(z_i)` built from the un-orthonormalized basis,
/// the grid analogue of `N^{-1} K(P_S) d rho`.
pub fn christoffel_distribution(grid: &Grid, family: BasisFamily, set: &IndexSet) -> Result<GridDistribution> {
    let d = grid.dim();
    let columns = set.to_vec();
    let max_deg = set.max_degrees(d);
    if set.max_dim() > d {
        return Err(Error::DimensionMismatch {
            expected: set.max_dim(),
            got: d,
        });
    }
    let mut kv = Vec::with_capacity(grid.len());
    for y in grid.points().iter() {
        let table = crate::poly_basis::PointTable::with_degrees(family, &max_deg, y)?;
        kv.push(columns.iter().map(|nu| table.eval(nu).powi(2)).sum::<f64>());
    }
    let total: f64 = kv.iter().sum();
    GridDistribution::from_pi(kv.into_iter().map(|v| v / total).collect())
}

/// Appends `block` to the columns of `m`. Reserved column capacity doubles
/// whenever it is exhausted.
pub(crate) fn append_columns(m: &mut Mat<f64>, capacity: &mut usize, block: MatRef<'_, f64>) {
    let old = m.ncols();
    let new = old + block.ncols();
    if new > *capacity {
        *capacity = new.max(2 * *capacity);
        m.reserve(m.nrows(), *capacity);
    }
    m.resize_with(m.nrows(), new, |_, _| 0.0);
    m.as_mut().get_mut(.., old..).copy_from(block);
}

/// Grows an orthonormal basis of `span(Phi_S) / sqrt(K)` one block of columns
/// at a time, so a nested sequence of index sets costs one QR of the final
/// size rather than one per set.
///
/// New columns are orthogonalized against the current basis by two passes of
/// block Gram-Schmidt and then factored by Householder QR.
#[derive(Clone, Debug)]
pub struct GridOrthonormalizer {
    family: BasisFamily,
    q: Mat<f64>,
    q_capacity: usize,
    row_sq: Vec<f64>,
    members: IndexSet,
    max_norm: f64,
}

impl GridOrthonormalizer {
    pub fn new(grid: &Grid, family: BasisFamily) -> Self {
        Self {
            family,
            q: Mat::zeros(grid.len(), 0),
            q_capacity: 0,
            row_sq: vec![0.0; grid.len()],
            members: IndexSet::new(),
            max_norm: 0.0,
        }
    }

    pub fn members(&self) -> &IndexSet {
        &self.members
    }

    pub fn ncols(&self) -> usize {
        self.q.ncols()
    }

    /// Extends the basis to cover `set`, which must contain the current members.
    pub fn extend_to(&mut self, grid: &Grid, set: &IndexSet) -> Result<()> {
        if !self.members.is_subset(set) {
            return Err(Error::InvalidConfig("orthonormalizer sets must be nested".into()));
        }
        let new: Vec<MultiIndex> = set.iter().filter(|nu| !self.members.contains(nu)).cloned().collect();
        if new.is_empty() {
            return Ok(());
        }
        let block = basis_matrix(self.family, &new, grid.points())?;
        self.extend_with(new, block)
    }

    /// Adds columns whose unscaled grid values `Psi_nu(z_i)` are already known.
    pub fn extend_with(&mut self, new: Vec<MultiIndex>, mut c: Mat<f64>) -> Result<()> {
        let k = self.row_sq.len();
        if c.nrows() != k || c.ncols() != new.len() {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: c.nrows(),
            });
        }
        if new.is_empty() {
            return Ok(());
        }
        if new.iter().any(|nu| self.members.contains(nu)) {
            return Err(Error::InvalidConfig("column already in basis".into()));
        }
        if self.ncols() + new.len() > k {
            return Err(Error::InvalidConfig(format!(
                "|S| = {} exceeds K = {k}",
                self.ncols() + new.len()
            )));
        }
        let scale = 1.0 / (k as f64).sqrt();
        for j in 0..new.len() {
            let mut norm = 0.0;
            for v in c.col_mut(j).iter_mut() {
                *v *= scale;
                norm += *v * *v;
            }
            self.max_norm = self.max_norm.max(norm.sqrt());
        }
        if self.ncols() > 0 {
            for _ in 0..2 {
                let h = self.q.transpose() * &c;
                c -= &self.q * &h;
            }
        }
        let qr = c.qr();
        let sv = qr
            .thin_R()
            .singular_values()
            .map_err(|_| Error::NonFinite("SVD of triangular factor did not converge".into()))?;
        let smin = sv[sv.len() - 1];
        if !(smin >= RANK_TOLERANCE * self.max_norm) {
            return Err(Error::DegenerateGrid {
                sigma_min: smin,
                sigma_max: self.max_norm,
            });
        }
        let qb = qr.compute_thin_Q();
        append_columns(&mut self.q, &mut self.q_capacity, qb.as_ref());
        for j in 0..qb.ncols() {
            for (p, v) in self.row_sq.iter_mut().zip(qb.col(j).iter()) {
                *p += v * v;
            }
        }
        self.members.extend(new);
        Ok(())
    }

    /// The near-optimal distribution for the current members.
    pub fn distribution(&self) -> Result<GridDistribution> {
        let n = self.ncols();
        if n == 0 {
            return Err(Error::InvalidConfig("empty basis".into()));
        }
        let inv = 1.0 / n as f64;
        GridDistribution::from_pi(self.row_sq.iter().map(|v| v * inv).collect())
    }

    /// The orthonormal factor, `K x n`.
    pub fn q(&self) -> &Mat<f64> {
        &self.q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multi_index::total_degree_set;
    use crate::poly_basis::build_design_matrix;

    fn rng(seed: u64) -> StreamRng {
        StreamRng::seed_from_u64(seed)
    }

    #[test]
    fn uniform_grid_mean_in_clt_band() {
        let g = Grid::draw(1, 100_000, BasisFamily::Legendre, 11).unwrap();
        let mean = g.raw().iter().sum::<f64>() / g.len() as f64;
        assert!(mean.abs() < 3.0 * (1.0 / 3f64.sqrt()) / (1e5f64).sqrt());
    }

    #[test]
    fn chebyshev_grids_are_symmetric() {
        for f in [BasisFamily::Chebyshev1, BasisFamily::Chebyshev2] {
            let g = Grid::draw(1, 100_000, f, 5).unwrap();
            let below = g.raw().iter().filter(|&&y| y <= 0.0).count() as f64 / 1e5;
            assert!((below - 0.5).abs() < 0.01, "{f}: {below}");
        }
    }

    #[test]
    fn chebyshev2_grid_matches_semicircle_moments() {
        // E[y^2] = 1/4 under (2/pi) sqrt(1 - y^2)
        let g = Grid::draw(1, 100_000, BasisFamily::Chebyshev2, 9).unwrap();
        let m2 = g.raw().iter().map(|y| y * y).sum::<f64>() / 1e5;
        assert!((m2 - 0.25).abs() < 0.005, "{m2}");
    }

    #[test]
    fn grid_replay_is_bitwise() {
        let a = Grid::draw(3, 1000, BasisFamily::Chebyshev1, 77).unwrap();
        let b = Grid::draw(3, 1000, BasisFamily::Chebyshev1, 77).unwrap();
        assert_eq!(a, b);
        let mut bytes = Vec::new();
        a.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 7 + 4 + 8 + 1 + 8 + 3000 * 8);
        assert_eq!(Grid::read_from(&bytes[..]).unwrap(), a);
        assert!(Grid::read_from(&b"NOTGRID"[..]).is_err());
    }

    #[test]
    fn mc_draws() {
        let g = Grid::draw(2, 100, BasisFamily::Legendre, 1).unwrap();
        let s = draw_mc(&g, 1, &mut rng(0)).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.indices[0] < 100);
        assert_eq!(s.weights, vec![1.0]);
        assert_eq!(s.strategy, SamplingStrategy::MonteCarlo);

        let m = 1_000_000;
        let s = draw_mc(&g, m, &mut rng(3)).unwrap();
        assert!(s.weights.iter().all(|&w| w == 1.0));
        let mut counts = vec![0usize; 100];
        s.indices.iter().for_each(|&i| counts[i] += 1);
        let (mean, sd) = (m as f64 / 100.0, (m as f64 * 0.01 * 0.99).sqrt());
        assert!(counts.iter().all(|&c| (c as f64 - mean).abs() < 5.0 * sd));
    }

    #[test]
    fn near_optimal_for_constant_basis_is_uniform() {
        let g = Grid::draw(2, 500, BasisFamily::Legendre, 3).unwrap();
        let dist = near_optimal_distribution(&g, BasisFamily::Legendre, &IndexSet::origin()).unwrap();
        for i in 0..500 {
            assert!((dist.pi[i] - 1.0 / 500.0).abs() < 1e-15);
            assert!((dist.weights[i] - 1.0).abs() < 1e-12);
        }
    }

    fn random_lower_set(d: usize, n: usize, r: &mut StreamRng) -> IndexSet {
        let mut s = IndexSet::origin();
        while s.len() < n {
            let rm = s.reduced_margin(Some(d)).unwrap().to_vec();
            s.insert(rm[r.gen_range(0..rm.len())].clone());
        }
        s
    }

    #[test]
    fn near_optimal_sums_to_one_and_matches_christoffel() {
        let g = Grid::draw(4, 2000, BasisFamily::Legendre, 8).unwrap();
        let s = random_lower_set(4, 20, &mut rng(2));
        let dist = near_optimal_distribution(&g, BasisFamily::Legendre, &s).unwrap();
        assert!((dist.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(dist.pi.iter().all(|&p| p >= 0.0));
        // w_i * K_disc(z_i) / n = 1 with K_disc = K * sum_j q_ij^2
        for i in 0..g.len() {
            let kdisc = g.len() as f64 * dist.pi[i] * s.len() as f64;
            assert!((dist.weights[i] * kdisc / s.len() as f64 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn full_grid_gram_is_identity() {
        // sum_i pi_i w_i phi(z_i) phi(z_i)^T with the grid-orthonormal basis
        // phi = sqrt(K) q is the expectation of A^T A under near-optimal draws
        let g = Grid::draw(3, 3000, BasisFamily::Chebyshev1, 21).unwrap();
        let s = total_degree_set(3, 3).unwrap();
        let fam = BasisFamily::Chebyshev1;
        let dist = near_optimal_distribution(&g, fam, &s).unwrap();
        let mut b = basis_matrix(fam, &s.to_vec(), g.points()).unwrap();
        b *= faer::Scale(1.0 / (g.len() as f64).sqrt());
        let q = b.qr().compute_thin_Q();
        let k = g.len() as f64;
        let mut a = q.clone();
        for i in 0..g.len() {
            let sc = (dist.pi[i] * dist.weights[i] * k).sqrt();
            for j in 0..s.len() {
                a[(i, j)] = q[(i, j)] * sc;
            }
        }
        let gram = a.transpose() * &a;
        let err = (&gram - Mat::<f64>::identity(s.len(), s.len())).norm_max();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn point_mass_distribution() {
        let mut pi = vec![0.0; 10];
        pi[6] = 1.0;
        let dist = GridDistribution::from_pi(pi).unwrap();
        let s = draw_near_optimal(&dist, 1000, &mut rng(4)).unwrap();
        assert!(s.indices.iter().all(|&i| i == 6));
        assert!(s.weights.iter().all(|&w| (w - 0.1).abs() < 1e-15));
        assert!(dist.weights[0] > 1e290);
    }

    #[test]
    fn near_optimal_frequencies() {
        let k = 50;
        let raw: Vec<f64> = (1..=k).map(|i| i as f64).collect();
        let total: f64 = raw.iter().sum();
        let dist = GridDistribution::from_pi(raw.iter().map(|v| v / total).collect()).unwrap();
        let m = 1_000_000;
        let s = draw_near_optimal(&dist, m, &mut rng(10)).unwrap();
        let mut counts = vec![0usize; k];
        s.indices.iter().for_each(|&i| counts[i] += 1);
        for i in 0..k {
            let p = dist.pi[i];
            let sd = (m as f64 * p * (1.0 - p)).sqrt();
            assert!((counts[i] as f64 - m as f64 * p).abs() < 5.0 * sd, "i={i}");
        }
        for (&i, &w) in s.indices.iter().zip(&s.weights) {
            assert_eq!(w, 1.0 / (k as f64 * dist.pi[i]));
        }
    }

    #[test]
    fn invalid_probability_vectors_rejected() {
        assert!(GridDistribution::from_pi(vec![0.5, 0.4]).is_err());
        assert!(GridDistribution::from_pi(vec![1.5, -0.5]).is_err());
        assert!(GridDistribution::from_pi(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn degenerate_pairing_detected() {
        // two distinct points cannot support three 1-D polynomials
        let g = Grid::from_points(vec![0.5, -0.25, 0.5, -0.25], 1, BasisFamily::Legendre, 0).unwrap();
        let s: IndexSet = (0..3).map(|k| MultiIndex::axis(1, k).unwrap()).collect();
        assert!(matches!(
            near_optimal_distribution(&g, BasisFamily::Legendre, &s),
            Err(Error::DegenerateGrid { .. })
        ));
    }

    #[test]
    fn incremental_matches_full_qr() {
        let g = Grid::draw(3, 4000, BasisFamily::Legendre, 30).unwrap();
        let fam = BasisFamily::Legendre;
        let mut r = rng(12);
        let mut orth = GridOrthonormalizer::new(&g, fam);
        let mut s = IndexSet::origin();
        for target in [1, 4, 9, 15, 30, 45] {
            while s.len() < target {
                let rm = s.reduced_margin(Some(3)).unwrap().to_vec();
                s.insert(rm[r.gen_range(0..rm.len())].clone());
            }
            orth.extend_to(&g, &s).unwrap();
            let inc = orth.distribution().unwrap();
            let full = near_optimal_distribution(&g, fam, &s).unwrap();
            for i in 0..g.len() {
                assert!((inc.pi[i] - full.pi[i]).abs() < 1e-10 * full.pi[i].max(1.0 / g.len() as f64));
            }
        }
        let q = orth.q();
        let gram = q.transpose() * q;
        for a in 0..s.len() {
            for b in 0..s.len() {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((gram[(a, b)] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_grid_weighted_design_equals_grid_gram() {
        // each grid point once with MC weights: A^T A is the grid Gram
        let g = Grid::draw(2, 1000, BasisFamily::Legendre, 13).unwrap();
        let s = total_degree_set(2, 2).unwrap();
        let a = build_design_matrix(BasisFamily::Legendre, &s, g.points(), &vec![1.0; g.len()]).unwrap();
        let phi = basis_matrix(BasisFamily::Legendre, &s.to_vec(), g.points()).unwrap();
        let gram = phi.transpose() * &phi * faer::Scale(1.0 / g.len() as f64);
        let ata = a.values.transpose() * &a.values;
        assert!((&ata - &gram).norm_max() < 1e-12);
    }
}
