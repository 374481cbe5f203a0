//! Brute-force and closed-form reference quantities: best n-term errors,
//! Stechkin-type bounds, univariate expansions and exhaustive kappa maxima.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use crate::error::{Error, Result};
use crate::multi_index::{IndexSet, MultiIndex};
use crate::poly_basis::{gauss_rule, BasisFamily, CoefVector};

/// Nonincreasing rearrangement of absolute values.
#[derive(Clone, Debug, PartialEq)]
pub struct SortedCoefSeq {
    values: Vec<f64>,
    origin: Option<Vec<MultiIndex>>,
}

impl SortedCoefSeq {
    pub fn from_values(c: &[f64]) -> Result<Self> {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficient sequence".into()));
        }
        let mut values: Vec<f64> = c.iter().map(|v| v.abs()).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(SortedCoefSeq { values, origin: None })
    }

    /// Keeps the multi-index of each entry; ties stay in canonical order.
    pub fn from_coefs(c: &CoefVector) -> Result<Self> {
        if c.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficient sequence".into()));
        }
        let mut order: Vec<usize> = (0..c.len()).collect();
        order.sort_by(|&i, &j| c.values()[j].abs().total_cmp(&c.values()[i].abs()).then(i.cmp(&j)));
        Ok(SortedCoefSeq {
            values: order.iter().map(|&i| c.values()[i].abs()).collect(),
            origin: Some(order.iter().map(|&i| c.indices()[i].clone()).collect()),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origin(&self) -> Option<&[MultiIndex]> {
        self.origin.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(sum_i (c*_i)^p)^(1/p)`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        tail_norm(&self.values, p)
    }

    /// `(sum_{j > n} (c*_j)^q)^(1/q)`.
    pub fn sigma_n(&self, n: usize, q: f64) -> f64 {
        tail_norm(&self.values[n.min(self.values.len())..], q)
    }

    /// `max_i i^(1/p) c*_i`.
    pub fn weak_lp_norm(&self, p: f64) -> f64 {
        self.weak_lp_norm_from(1, p)
    }

    /// `max_{i >= start} i^(1/p) c*_i` with 1-based `i`.
    pub fn weak_lp_norm_from(&self, start: usize, p: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .skip(start.saturating_sub(1))
            .map(|(i, c)| ((i + 1) as f64).powf(1.0 / p) * c)
            .fold(0.0, f64::max)
    }
}

/// Sums from the smallest term up.
fn tail_norm(v: &[f64], q: f64) -> f64 {
    let m = v.iter().copied().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    m * v.iter().rev().map(|c| (c / m).powf(q)).sum::<f64>().powf(1.0 / q)
}

fn check_exponents(p: f64, q: f64, strict: bool) -> Result<()> {
    let ok = p > 0.0 && q.is_finite() && if strict { p < q } else { p <= q };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("need 0 < p {} q < inf, got p = {p}, q = {q}", if strict { "<" } else { "<=" })))
    }
}

/// `(sigma_n(c)_q, ||c||_p (n+1)^(1/q - 1/p))`.
pub fn stechkin_bound(c: &SortedCoefSeq, n: usize, p: f64, q: f64) -> Result<(f64, f64)> {
    check_exponents(p, q, false)?;
    Ok((c.sigma_n(n, q), c.lp_norm(p) * ((n + 1) as f64).powf(1.0 / q - 1.0 / p)))
}

/// `(sigma_n(c)_q, ||c||_{p,inf} (q/p - 1)^(-1/q) n^(1/q - 1/p))` for `n >= 1`.
pub fn stechkin_weak_bound(c: &SortedCoefSeq, n: usize, p: f64, q: f64) -> Result<(f64, f64)> {
    check_exponents(p, q, true)?;
    if n == 0 {
        return Err(Error::InvalidConfig("weak Stechkin bound needs n >= 1".into()));
    }
    let rhs = c.weak_lp_norm(p) / (q / p - 1.0).powf(1.0 / q) * (n as f64).powf(1.0 / q - 1.0 / p);
    Ok((c.sigma_n(n, q), rhs))
}

/// `(||c||_{p,inf}, 2^(1/p + 1/q) C)` with `C = sup_{n >= 1} sigma_n(c)_q n^(1/p - 1/q)`.
/// `C` does not see `c*_1`, so only `max_{i >= 2} i^(1/p) c*_i` is bounded
/// by the second entry in general.
pub fn weak_lp_converse(c: &SortedCoefSeq, p: f64, q: f64) -> Result<(f64, f64)> {
    check_exponents(p, q, true)?;
    let big_c = (1..=c.len())
        .map(|n| c.sigma_n(n, q) * (n as f64).powf(1.0 / p - 1.0 / q))
        .fold(0.0, f64::max);
    Ok((c.weak_lp_norm(p), 2f64.powf(1.0 / p + 1.0 / q) * big_c))
}

/// `(sum_i u_i^(2-q) |c_i|^q)^(1/q)`.
pub fn weighted_norm(c: &[f64], u: &[f64], q: f64) -> f64 {
    c.iter()
        .zip(u)
        .map(|(c, u)| u.powf(2.0 - q) * c.abs().powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

/// Upper bound on the weighted best `(k, u)`-term error: greedily keeps
/// entries by `|c_i|^q u_i^(2-q) / u_i^2` while `sum u_i^2 <= k`.
pub fn weighted_sigma_k_upper(c: &[f64], u: &[f64], k: f64, q: f64) -> Result<f64> {
    if c.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            got: u.len(),
        });
    }
    if u.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidConfig("weights must be positive".into()));
    }
    let gain = |i: usize| u[i].powf(2.0 - q) * c[i].abs().powf(q) / (u[i] * u[i]);
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&i, &j| gain(j).total_cmp(&gain(i)).then(i.cmp(&j)));
    let mut used = 0.0;
    let mut kept = vec![false; c.len()];
    for i in order {
        if used + u[i] * u[i] <= k {
            used += u[i] * u[i];
            kept[i] = true;
        }
    }
    let rest: Vec<f64> = c.iter().zip(&kept).map(|(v, k)| if *k { 0.0 } else { *v }).collect();
    Ok(weighted_norm(&rest, u, q))
}

/// `(greedy upper bound on sigma_k(c)_{q,u}, ||c||_{p,u} k^(1/q - 1/p))`.
pub fn weighted_stechkin_bound(c: &[f64], u: &[f64], k: f64, p: f64, q: f64) -> Result<(f64, f64)> {
    check_exponents(p, q, false)?;
    if q > 2.0 || k <= 0.0 {
        return Err(Error::InvalidConfig(format!("need q <= 2 and k > 0, got q = {q}, k = {k}")));
    }
    let lhs = weighted_sigma_k_upper(c, u, k, q)?;
    Ok((lhs, weighted_norm(c, u, p) * k.powf(1.0 / q - 1.0 / p)))
}

/// Coefficients of a univariate function in an orthonormal family.
#[derive(Clone, Debug)]
pub struct UnivariateExpansion {
    pub coeffs: Vec<f64>,
    /// `sqrt(||g||^2 - sum_k d_k^2)`, floored at zero.
    pub tail_estimate: f64,
    /// Doubling the quadrature moved every coefficient by at most 1e-12.
    pub converged: bool,
}

/// Absolute change in any coefficient under node doubling that flags
/// non-convergence.
pub const QUADRATURE_TOLERANCE: f64 = 1e-12;

/// `d_k = int g psi_k d rho` for `k = 0..=max_degree`, by the family's Gauss
/// rule with `max_degree + 17` nodes.
pub fn univariate_coeffs(g: impl Fn(f64) -> f64, family: BasisFamily, max_degree: usize) -> UnivariateExpansion {
    let n = max_degree + 17;
    let project = |nodes: usize| -> (Vec<f64>, f64) {
        let (x, w) = gauss_rule(family, nodes);
        let gx: Vec<f64> = x.iter().map(|t| g(*t)).collect();
        let mut psi = vec![0.0; max_degree + 1];
        let mut d = vec![0.0; max_degree + 1];
        for ((t, wt), gt) in x.iter().zip(&w).zip(&gx) {
            family.fill_univariate(*t, &mut psi);
            for (dk, pk) in d.iter_mut().zip(&psi) {
                *dk += wt * gt * pk;
            }
        }
        let norm_sq = w.iter().zip(&gx).map(|(w, g)| w * g * g).sum();
        (d, norm_sq)
    };
    let (coeffs, _) = project(n);
    let (fine, norm_sq) = project(2 * n);
    let converged = coeffs.iter().zip(&fine).all(|(a, b)| (a - b).abs() <= QUADRATURE_TOLERANCE);
    let kept: f64 = fine.iter().map(|d| d * d).sum();
    UnivariateExpansion {
        coeffs,
        tail_estimate: (norm_sq - kept).max(0.0).sqrt(),
        converged,
    }
}

/// Selected indices and the resulting `L^2` error of a best n-term search.
#[derive(Clone, Debug)]
pub struct BestNTerm {
    pub set: IndexSet,
    /// Selection order, largest first.
    pub terms: Vec<(MultiIndex, f64)>,
    pub error: f64,
}

/// Relative cut below which univariate coefficients are dropped.
pub const LATTICE_CUTOFF: f64 = 1e-18;

#[derive(PartialEq)]
struct Entry {
    value: f64,
    ranks: Reverse<Vec<u32>>,
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.total_cmp(&other.value).then_with(|| self.ranks.cmp(&other.ranks))
    }
}

/// Best n-term selection for `f(y) = prod_i g_i(y_i)` given the univariate
/// coefficient lists `per_dim[i]` of `g_{i+1}`, so `c_nu = prod_i d^(i)_{nu_i}`.
/// Searches best-first over the lattice of per-dimension magnitude ranks.
pub fn best_n_term_product(per_dim: &[Vec<f64>], n: usize) -> Result<BestNTerm> {
    if per_dim.is_empty() || per_dim.iter().any(|d| d.is_empty()) {
        return Err(Error::InvalidConfig("need at least one coefficient per dimension".into()));
    }
    // per-dimension degrees sorted by decreasing magnitude, truncated
    let ranked: Vec<Vec<(u32, f64)>> = per_dim
        .iter()
        .map(|d| {
            let top = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut r: Vec<(u32, f64)> = d
                .iter()
                .enumerate()
                .filter(|(_, v)| v.abs() >= LATTICE_CUTOFF * top && **v != 0.0)
                .map(|(k, v)| (k as u32, *v))
                .collect();
            r.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
            r
        })
        .collect();
    if ranked.iter().any(|r| r.is_empty()) {
        // a zero factor makes the product vanish
        return Ok(BestNTerm {
            set: IndexSet::new(),
            terms: Vec::new(),
            error: 0.0,
        });
    }
    let total_sq: f64 = per_dim.iter().map(|d| d.iter().map(|v| v * v).sum::<f64>()).product();
    let value = |ranks: &[u32]| -> f64 { ranks.iter().zip(&ranked).map(|(&r, dim)| dim[r as usize].1).product() };
    let to_index = |ranks: &[u32]| -> Result<MultiIndex> {
        let dense: Vec<u32> = ranks.iter().zip(&ranked).map(|(&r, dim)| dim[r as usize].0).collect();
        MultiIndex::from_dense(&dense)
    };
    let start = vec![0u32; per_dim.len()];
    let mut heap = BinaryHeap::new();
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    heap.push(Entry {
        value: value(&start).abs(),
        ranks: Reverse(start.clone()),
    });
    seen.insert(start);
    let mut terms = Vec::with_capacity(n);
    while terms.len() < n {
        let Some(Entry { ranks: Reverse(ranks), .. }) = heap.pop() else {
            return Err(Error::QueueExhausted {
                found: terms.len(),
                wanted: n,
            });
        };
        terms.push((to_index(&ranks)?, value(&ranks)));
        for j in 0..ranks.len() {
            if (ranks[j] as usize) + 1 < ranked[j].len() {
                let mut next = ranks.clone();
                next[j] += 1;
                if seen.insert(next.clone()) {
                    heap.push(Entry {
                        value: value(&next).abs(),
                        ranks: Reverse(next),
                    });
                }
            }
        }
    }
    let kept: f64 = terms.iter().rev().map(|(_, v)| v * v).sum();
    Ok(BestNTerm {
        set: terms.iter().map(|(nu, _)| nu.clone()).collect(),
        error: (total_sq - kept).max(0.0).sqrt(),
        terms,
    })
}

/// Best n-term selection for `f(y) = sum_i g_i(y_i)`: `c_0 = sum_i d^(i)_0`
/// and `c_{k e_j} = d^(j)_k` for `k >= 1`.
pub fn best_n_term_additive(per_dim: &[Vec<f64>], n: usize) -> Result<BestNTerm> {
    if per_dim.is_empty() {
        return Err(Error::InvalidConfig("need at least one dimension".into()));
    }
    let mut all: Vec<(MultiIndex, f64)> = vec![(MultiIndex::zero(), per_dim.iter().filter_map(|d| d.first()).sum())];
    for (j, d) in per_dim.iter().enumerate() {
        for (k, v) in d.iter().enumerate().skip(1) {
            all.push((MultiIndex::axis(j + 1, k)?, *v));
        }
    }
    all.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    let mut terms = all;
    if terms.len() < n {
        return Err(Error::QueueExhausted {
            found: terms.len(),
            wanted: n,
        });
    }
    let rest: Vec<f64> = terms.split_off(n).iter().map(|(_, v)| *v).collect();
    Ok(BestNTerm {
        set: terms.iter().map(|(nu, _)| nu.clone()).collect(),
        error: tail_norm(&rest, 2.0),
        terms,
    })
}

/// Cap on visited lower sets in [`kappa_max_lower`].
pub const KAPPA_SEARCH_BUDGET: usize = 2_000_000;

/// Maximum of `kappa` over all lower sets in `d` dimensions with at most `n`
/// elements, with a maximizing set.
pub fn kappa_max_lower(family: BasisFamily, d: usize, n: usize) -> Result<(f64, IndexSet)> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidConfig("kappa search needs d >= 1 and n >= 1".into()));
    }
    let mut visited: HashSet<Vec<MultiIndex>> = HashSet::new();
    let mut frontier = vec![IndexSet::origin()];
    let mut best = (family.kappa(&frontier[0]), frontier[0].clone());
    visited.insert(frontier[0].to_vec());
    while let Some(set) = frontier.pop() {
        let k = family.kappa(&set);
        if k > best.0 {
            best = (k, set.clone());
        }
        if set.len() == n {
            continue;
        }
        for nu in set.reduced_margin(Some(d))?.iter() {
            let mut next = set.clone();
            next.insert(nu.clone());
            if visited.insert(next.to_vec()) {
                if visited.len() > KAPPA_SEARCH_BUDGET {
                    return Err(Error::BudgetExceeded(format!(
                        "more than {KAPPA_SEARCH_BUDGET} lower sets for d = {d}, n = {n}"
                    )));
                }
                frontier.push(next);
            }
        }
    }
    Ok(best)
}

/// Every lower set in `d` dimensions with exactly `n` elements.
pub fn lower_sets(d: usize, n: usize) -> Result<Vec<IndexSet>> {
    let mut layer: BTreeSet<Vec<MultiIndex>> = BTreeSet::from([IndexSet::origin().to_vec()]);
    for _ in 1..n {
        let mut next = BTreeSet::new();
        for s in &layer {
            let set: IndexSet = s.iter().cloned().collect();
            for nu in set.reduced_margin(Some(d))?.iter() {
                let mut grown = set.clone();
                grown.insert(nu.clone());
                next.insert(grown.to_vec());
            }
            if next.len() > KAPPA_SEARCH_BUDGET {
                return Err(Error::BudgetExceeded(format!("lower sets of size {n} in {d} dimensions")));
            }
        }
        layer = next;
    }
    Ok(layer.into_iter().map(|v| v.into_iter().collect()).collect())
}
