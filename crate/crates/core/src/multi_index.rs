//! Sparse multi-indices and finite multi-index sets.
//!
//! A [`MultiIndex`] is a finitely supported map from a 1-based dimension to a
//! positive degree. Dimensions that are not stored have degree zero, so the
//! same value represents an index in any ambient dimension `d` at least as
//! large as its largest supported dimension.
//!
//! [`IndexSet`] keeps its members in graded lexicographic order: total degree
//! ascending, ties broken by comparing the dense coordinate vectors
//! lexicographically starting from dimension 1.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::poly_basis::BasisFamily;

/// Largest admissible degree in any single dimension.
pub const MAX_DEGREE: u32 = 1 << 20;
/// Largest admissible (1-based) dimension index.
pub const MAX_DIMENSION: u32 = 1 << 16;

/// A multi-index with finite support, stored as sorted `(dimension, degree)`
/// pairs. Degrees are always at least one.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    entries: SmallVec<[(u32, u32); 4]>,
}

impl MultiIndex {
    /// The zero multi-index.
    pub fn zero() -> Self {
        Self::default()
    }

    /// The canonical index `e_j` (1-based `j`).
    pub fn unit(j: usize) -> Result<Self> {
        Self::from_pairs([(j, 1)])
    }

    /// `k * e_j`.
    pub fn axis(j: usize, k: usize) -> Result<Self> {
        Self::from_pairs([(j, k)])
    }

    /// Builds an index from `(dimension, degree)` pairs in any order. Zero
    /// degrees are dropped; repeated dimensions are rejected.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut entries: SmallVec<[(u32, u32); 4]> = SmallVec::new();
        for (dim, deg) in pairs {
            if deg == 0 {
                continue;
            }
            check_dim(dim)?;
            check_degree(deg)?;
            entries.push((dim as u32, deg as u32));
        }
        entries.sort_unstable_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidIndex("repeated dimension".into()));
        }
        Ok(Self { entries })
    }

    /// Builds an index from dense coordinates `(nu_1, ..., nu_d)`.
    pub fn from_dense(dense: &[u32]) -> Result<Self> {
        Self::from_pairs(
            dense
                .iter()
                .enumerate()
                .map(|(i, &k)| (i + 1, k as usize)),
        )
    }

    /// Degree in dimension `j` (1-based).
    pub fn degree(&self, j: usize) -> u32 {
        match self.entries.binary_search_by_key(&(j as u32), |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0,
        }
    }

    /// Number of nonzero entries, `||nu||_0`.
    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_degree(&self) -> u64 {
        self.entries.iter().map(|e| e.1 as u64).sum()
    }

    /// Largest dimension with a nonzero degree, or 0 for the zero index.
    pub fn max_dim(&self) -> usize {
        self.entries.last().map_or(0, |e| e.0 as usize)
    }

    /// Iterates `(dimension, degree)` over the support in increasing dimension.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.entries.iter().map(|&(j, k)| (j as usize, k))
    }

    /// Dense coordinates in dimension `d`. Panics if the support exceeds `d`.
    pub fn to_dense(&self, d: usize) -> Vec<u32> {
        assert!(self.max_dim() <= d, "support exceeds dimension {d}");
        let mut out = vec![0; d];
        for (j, k) in self.iter() {
            out[j - 1] = k;
        }
        out
    }

    /// `nu + e_j`.
    pub fn plus_unit(&self, j: usize) -> Result<Self> {
        check_dim(j)?;
        let mut entries = self.entries.clone();
        match entries.binary_search_by_key(&(j as u32), |e| e.0) {
            Ok(pos) => {
                check_degree(entries[pos].1 as usize + 1)?;
                entries[pos].1 += 1;
            }
            Err(pos) => entries.insert(pos, (j as u32, 1)),
        }
        Ok(Self { entries })
    }

    /// `nu - e_j`, or `None` when `nu_j = 0`.
    pub fn minus_unit(&self, j: usize) -> Option<Self> {
        let pos = self
            .entries
            .binary_search_by_key(&(j as u32), |e| e.0)
            .ok()?;
        let mut entries = self.entries.clone();
        if entries[pos].1 == 1 {
            entries.remove(pos);
        } else {
            entries[pos].1 -= 1;
        }
        Some(Self { entries })
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.iter().all(|(j, k)| other.degree(j) >= k)
    }

    /// `prod_j (nu_j + 1)`, saturating.
    pub fn hyperbolic_weight(&self) -> u64 {
        self.entries
            .iter()
            .fold(1u64, |acc, e| acc.saturating_mul(e.1 as u64 + 1))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIMENSION as usize {
        return Err(Error::InvalidIndex(format!(
            "dimension {dim} outside 1..={MAX_DIMENSION}"
        )));
    }
    Ok(())
}

fn check_degree(deg: usize) -> Result<()> {
    if deg > MAX_DEGREE as usize {
        return Err(Error::InvalidIndex(format!(
            "degree {deg} exceeds {MAX_DEGREE}"
        )));
    }
    Ok(())
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.total_degree().cmp(&other.total_degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let mut a = self.entries.iter();
        let mut b = other.entries.iter();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(da, ga)), Some(&(db, gb))) => {
                    // The first dimension where the dense vectors differ decides.
                    if da < db {
                        return Ordering::Greater;
                    }
                    if da > db {
                        return Ordering::Less;
                    }
                    if ga != gb {
                        return ga.cmp(&gb);
                    }
                }
            }
        }
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (j, k)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{j}:{k}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiIndex({self})")
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    /// Parses the line format `"dim:degree,dim:degree"`; `"0"` is the zero index.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(Self::zero());
        }
        let mut pairs = Vec::new();
        let mut last_dim = 0usize;
        for tok in s.split(',') {
            let (j, k) = tok
                .split_once(':')
                .ok_or_else(|| Error::Format(format!("expected dim:degree, got `{tok}`")))?;
            let j: usize = j
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad dimension in `{tok}`")))?;
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad degree in `{tok}`")))?;
            if k == 0 {
                return Err(Error::Format(format!("zero degree stored in `{tok}`")));
            }
            if j <= last_dim {
                return Err(Error::Format("dimensions must be strictly increasing".into()));
            }
            last_dim = j;
            pairs.push((j, k));
        }
        Self::from_pairs(pairs)
    }
}

/// A finite, duplicate-free set of multi-indices in canonical order.
#[derive(Clone, Default)]
pub struct IndexSet {
    members: BTreeSet<MultiIndex>,
    lower: OnceLock<bool>,
}

impl PartialEq for IndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members
    }
}

impl Eq for IndexSet {}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members.iter()).finish()
    }
}

impl FromIterator<MultiIndex> for IndexSet {
    fn from_iter<I: IntoIterator<Item = MultiIndex>>(iter: I) -> Self {
        Self {
            members: iter.into_iter().collect(),
            lower: OnceLock::new(),
        }
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a MultiIndex;
    type IntoIter = std::collections::btree_set::Iter<'a, MultiIndex>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

impl IndexSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// The singleton `{0}`.
    pub fn origin() -> Self {
        std::iter::once(MultiIndex::zero()).collect()
    }

    /// Builds a set from dense coordinate rows.
    pub fn from_dense_rows(rows: &[&[u32]]) -> Result<Self> {
        rows.iter().map(|r| MultiIndex::from_dense(r)).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, nu: &MultiIndex) -> bool {
        self.members.contains(nu)
    }

    /// Inserts `nu`; returns whether it was new.
    pub fn insert(&mut self, nu: MultiIndex) -> bool {
        let added = self.members.insert(nu);
        if added {
            self.lower = OnceLock::new();
        }
        added
    }

    pub fn extend<I: IntoIterator<Item = MultiIndex>>(&mut self, iter: I) {
        for nu in iter {
            self.insert(nu);
        }
    }

    /// Members in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> + '_ {
        self.members.iter()
    }

    pub fn to_vec(&self) -> Vec<MultiIndex> {
        self.members.iter().cloned().collect()
    }

    /// Largest supported dimension over all members.
    pub fn max_dim(&self) -> usize {
        self.members.iter().map(MultiIndex::max_dim).max().unwrap_or(0)
    }

    /// Largest degree per dimension, indexed `0..d` for dimensions `1..=d`.
    pub fn max_degrees(&self, d: usize) -> Vec<u32> {
        let mut out = vec![0; d];
        for nu in &self.members {
            for (j, k) in nu.iter() {
                if j <= d {
                    out[j - 1] = out[j - 1].max(k);
                }
            }
        }
        out
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        self.members.union(&other.members).cloned().collect()
    }

    /// Whether the set is downward closed: for every member and every `j` in
    /// its support, `nu - e_j` is also a member.
    pub fn is_lower(&self) -> bool {
        *self.lower.get_or_init(|| {
            self.members.iter().all(|nu| {
                nu.iter()
                    .all(|(j, _)| self.contains(&nu.minus_unit(j).expect("j in support")))
            })
        })
    }

    /// Lower, and `e_j` present implies `e_1, ..., e_j` present.
    pub fn is_anchored(&self) -> bool {
        if !self.is_lower() {
            return false;
        }
        let mut max_unit = 0usize;
        let mut units = 0usize;
        for nu in &self.members {
            if nu.support_size() == 1 && nu.total_degree() == 1 {
                units += 1;
                max_unit = max_unit.max(nu.max_dim());
            }
        }
        units == max_unit
    }

    fn dimension_limit(&self, max_dim: Option<usize>) -> usize {
        match max_dim {
            Some(d) => d,
            None => self.max_dim() + 1,
        }
    }

    /// Forward neighbours not in the set: `{nu not in S : nu - e_j in S for some j}`.
    ///
    /// With `max_dim = Some(d)` the neighbours range over dimensions `1..=d`.
    /// With `None` the set is treated as living in infinitely many dimensions
    /// and one fresh dimension beyond its active ones is admitted.
    pub fn margin(&self, max_dim: Option<usize>) -> IndexSet {
        let limit = self.dimension_limit(max_dim);
        let mut out = IndexSet::new();
        for nu in &self.members {
            for j in 1..=limit {
                if let Ok(next) = nu.plus_unit(j) {
                    if !self.contains(&next) {
                        out.insert(next);
                    }
                }
            }
        }
        out
    }

    /// Margin members all of whose backward neighbours lie in the set. Adding
    /// any one of them keeps the set lower.
    pub fn reduced_margin(&self, max_dim: Option<usize>) -> Result<IndexSet> {
        if !self.is_lower() {
            return Err(Error::NotLower);
        }
        let margin = self.margin(max_dim);
        Ok(margin
            .members
            .into_iter()
            .filter(|nu| {
                nu.iter()
                    .all(|(j, _)| self.contains(&nu.minus_unit(j).expect("j in support")))
            })
            .collect())
    }

    /// Sum of squared intrinsic weights `u_nu^2` over the set.
    pub fn weighted_cardinality(&self, family: BasisFamily) -> f64 {
        self.members
            .iter()
            .map(|nu| family.intrinsic_weight_sq(nu))
            .sum()
    }

    /// One index per line in `dim:degree` form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for nu in &self.members {
            s.push_str(&nu.to_string());
            s.push('\n');
        }
        s
    }

    /// Parses the line format written by [`IndexSet::to_text`]. Blank lines
    /// are ignored; duplicates are rejected.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut set = IndexSet::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let nu: MultiIndex = line.parse()?;
            if !set.insert(nu) {
                return Err(Error::Format(format!("duplicate index `{}`", line.trim())));
            }
        }
        Ok(set)
    }
}

/// Tensor-product set `{nu : max_j nu_j <= level}` in `d` dimensions.
pub fn tensor_set(level: usize, d: usize) -> Result<IndexSet> {
    if d == 0 {
        return Err(Error::InvalidConfig("dimension must be positive".into()));
    }
    let size = (level + 1)
        .checked_pow(d as u32)
        .filter(|&s| s <= 1 << 28)
        .ok_or_else(|| Error::SetTooLarge(format!("(l+1)^d with l={level}, d={d}")))?;
    let mut dense = vec![0u32; d];
    let mut out = Vec::with_capacity(size);
    loop {
        out.push(MultiIndex::from_dense(&dense)?);
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == d {
                return Ok(out.into_iter().collect());
            }
            if (dense[pos] as usize) < level {
                dense[pos] += 1;
                break;
            }
            dense[pos] = 0;
            pos += 1;
        }
    }
}

/// Exact binomial coefficient, or `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Total-degree set `{nu : |nu|_1 <= level}` in `d` dimensions.
pub fn total_degree_set(level: usize, d: usize) -> Result<IndexSet> {
    if d == 0 {
        return Err(Error::InvalidConfig("dimension must be positive".into()));
    }
    binomial((level + d) as u64, d as u64)
        .filter(|&s| s <= 1 << 28)
        .ok_or_else(|| Error::SetTooLarge(format!("C(l+d, d) with l={level}, d={d}")))?;
    let mut out = Vec::new();
    let mut dense = vec![0u32; d];
    fill_total_degree(&mut dense, 0, level as u32, &mut out)?;
    Ok(out.into_iter().collect())
}

fn fill_total_degree(
    dense: &mut Vec<u32>,
    pos: usize,
    remaining: u32,
    out: &mut Vec<MultiIndex>,
) -> Result<()> {
    if pos == dense.len() {
        out.push(MultiIndex::from_dense(dense)?);
        return Ok(());
    }
    for k in 0..=remaining {
        dense[pos] = k;
        fill_total_degree(dense, pos + 1, remaining - k, out)?;
    }
    dense[pos] = 0;
    Ok(())
}

/// The anchored hyperbolic-cross set
/// `{nu : prod_{k<n} (nu_k + 1) <= n, nu_k = 0 for k >= n}`, which contains
/// every anchored set of cardinality at most `n`.
pub fn hyperbolic_cross_anchored(n: usize) -> Result<IndexSet> {
    hyperbolic_cross_anchored_in(n, usize::MAX)
}

/// [`hyperbolic_cross_anchored`] with the active dimensions further limited
/// to `1..=max_dim`.
pub fn hyperbolic_cross_anchored_in(n: usize, max_dim: usize) -> Result<IndexSet> {
    if n == 0 {
        return Err(Error::InvalidConfig("hyperbolic cross order must be >= 1".into()));
    }
    let dims = (n - 1).min(max_dim);
    let mut out = vec![MultiIndex::zero()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    hc_fill(n as u64, 1, dims, &mut pairs, &mut out)?;
    Ok(out.into_iter().collect())
}

fn hc_fill(
    budget: u64,
    first_dim: usize,
    dims: usize,
    pairs: &mut Vec<(usize, usize)>,
    out: &mut Vec<MultiIndex>,
) -> Result<()> {
    for j in first_dim..=dims {
        // smallest nonzero factor is 2
        if budget < 2 {
            break;
        }
        let mut k = 1u64;
        while (k + 1) <= budget {
            pairs.push((j, k as usize));
            out.push(MultiIndex::from_pairs(pairs.iter().copied())?);
            hc_fill(budget / (k + 1), j + 1, dims, pairs, out)?;
            pairs.pop();
            k += 1;
        }
    }
    Ok(())
}

/// Cardinality of [`hyperbolic_cross_anchored_in`] without materializing it.
pub fn hyperbolic_cross_size(n: usize, max_dim: usize) -> u64 {
    if n == 0 {
        return 0;
    }
    let dims = (n - 1).min(max_dim);
    let mut memo = HashMap::new();
    hc_count(dims, n as u64, &mut memo)
}

// Tuples (a_1..a_dims), a_k >= 1, with product <= budget.
fn hc_count(dims: usize, budget: u64, memo: &mut HashMap<(usize, u64), u64>) -> u64 {
    if dims == 0 || budget < 2 {
        return 1;
    }
    if let Some(&v) = memo.get(&(dims, budget)) {
        return v;
    }
    let mut total = 0u64;
    let mut a = 1u64;
    while a <= budget {
        let q = budget / a;
        // all a' with the same quotient contribute equally
        let a_hi = budget / q;
        let count = a_hi - a + 1;
        total = total.saturating_add(count.saturating_mul(hc_count(dims - 1, q, memo)));
        a = a_hi + 1;
    }
    memo.insert((dims, budget), total);
    total
}

/// Largest `n` with `|hyperbolic_cross_anchored_in(n, max_dim)| <= budget`.
pub fn largest_hyperbolic_order(budget: u64, max_dim: usize) -> usize {
    assert!(budget >= 1);
    let fits = |n: usize| hyperbolic_cross_size(n, max_dim) <= budget;
    let mut lo = 1usize;
    let mut hi = 2usize;
    while fits(hi) {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[&[u32]]) -> IndexSet {
        IndexSet::from_dense_rows(rows).unwrap()
    }

    #[test]
    fn lower_examples() {
        assert!(set(&[&[0, 0]]).is_lower());
        assert!(set(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]]).is_lower());
        assert!(!set(&[&[0, 0], &[1, 1]]).is_lower());
    }

    #[test]
    fn lower_total_degree_matches_brute_force() {
        let s = total_degree_set(2, 3).unwrap();
        assert_eq!(s.len(), 10);
        // every mu <= nu componentwise must be a member
        for nu in &s {
            let dense = nu.to_dense(3);
            for a in 0..=dense[0] {
                for b in 0..=dense[1] {
                    for c in 0..=dense[2] {
                        assert!(s.contains(&MultiIndex::from_dense(&[a, b, c]).unwrap()));
                    }
                }
            }
        }
        assert!(s.is_lower());
    }

    #[test]
    fn anchored_examples() {
        let e1 = MultiIndex::unit(1).unwrap();
        let e2 = MultiIndex::unit(2).unwrap();
        let s: IndexSet = [MultiIndex::zero(), e1, e2.clone()].into_iter().collect();
        assert!(s.is_anchored());
        let s: IndexSet = [MultiIndex::zero(), e2].into_iter().collect();
        assert!(!s.is_anchored());
        for n in 1..=20 {
            assert!(hyperbolic_cross_anchored(n).unwrap().is_anchored(), "n = {n}");
        }
    }

    #[test]
    fn margin_examples() {
        let s = set(&[&[0, 0]]);
        assert_eq!(s.margin(Some(2)), set(&[&[1, 0], &[0, 1]]));
        let s = set(&[&[0], &[1]]);
        assert_eq!(s.margin(Some(1)), set(&[&[2]]));
        // fresh-dimension policy
        assert_eq!(IndexSet::origin().margin(None), set(&[&[1]]));
        let s = set(&[&[0, 0], &[1, 0]]);
        assert_eq!(s.margin(None), set(&[&[2, 0], &[0, 1], &[1, 1]]));
    }

    #[test]
    fn reduced_margin_examples() {
        let s = set(&[&[0, 0]]);
        assert_eq!(s.reduced_margin(Some(2)).unwrap(), set(&[&[1, 0], &[0, 1]]));
        let s = set(&[&[0, 0], &[1, 0]]);
        let m = s.margin(Some(2));
        assert!(m.contains(&MultiIndex::from_dense(&[1, 1]).unwrap()));
        assert_eq!(s.reduced_margin(Some(2)).unwrap(), set(&[&[2, 0], &[0, 1]]));
        assert!(matches!(
            set(&[&[0, 0], &[1, 1]]).reduced_margin(Some(2)),
            Err(Error::NotLower)
        ));
    }

    #[test]
    fn reduced_margin_of_tensor_set_matches_oracle() {
        let s = tensor_set(1, 2).unwrap();
        let rm = s.reduced_margin(Some(2)).unwrap();
        // oracle: margin members whose addition keeps the set lower
        let oracle: IndexSet = s
            .margin(Some(2))
            .iter()
            .filter(|nu| {
                let mut t = s.clone();
                t.insert((*nu).clone());
                t.is_lower()
            })
            .cloned()
            .collect();
        assert_eq!(rm, oracle);
        assert_eq!(rm, set(&[&[2, 0], &[0, 2]]));
    }

    #[test]
    fn classical_set_sizes() {
        assert_eq!(tensor_set(0, 5).unwrap().len(), 1);
        assert_eq!(tensor_set(2, 3).unwrap().len(), 27);
        let t = tensor_set(3, 2).unwrap();
        assert_eq!(t.len(), 16);
        assert!(t.is_lower());
        assert_eq!(total_degree_set(1, 4).unwrap().len(), 5);
        assert_eq!(total_degree_set(2, 2).unwrap().len(), 6);
        assert_eq!(total_degree_set(4, 3).unwrap().len(), 35);
        for l in 0..=5 {
            for d in 1..=6 {
                assert_eq!(tensor_set(l, d).unwrap().len(), (l + 1).pow(d as u32));
                assert_eq!(
                    total_degree_set(l, d).unwrap().len() as u64,
                    binomial((l + d) as u64, d as u64).unwrap()
                );
            }
        }
        assert!(matches!(tensor_set(10, 40), Err(Error::SetTooLarge(_))));
    }

    #[test]
    fn hyperbolic_cross_small_orders() {
        assert_eq!(hyperbolic_cross_anchored(1).unwrap(), IndexSet::origin());
        assert_eq!(hyperbolic_cross_anchored(2).unwrap(), set(&[&[0], &[1]]));
        // brute force over the box {0..3}^3 for n = 4
        let mut brute = IndexSet::new();
        for a in 0..4u32 {
            for b in 0..4u32 {
                for c in 0..4u32 {
                    if (a + 1) * (b + 1) * (c + 1) <= 4 {
                        brute.insert(MultiIndex::from_dense(&[a, b, c]).unwrap());
                    }
                }
            }
        }
        let hc = hyperbolic_cross_anchored(4).unwrap();
        assert_eq!(hc, brute);
        assert_eq!(hc.len(), 13);
    }

    #[test]
    fn hyperbolic_cross_count_matches_enumeration() {
        for n in 1..=40 {
            for dims in [1, 2, 3, 5, usize::MAX] {
                assert_eq!(
                    hyperbolic_cross_size(n, dims),
                    hyperbolic_cross_anchored_in(n, dims).unwrap().len() as u64,
                    "n={n} dims={dims}"
                );
            }
        }
        let n = largest_hyperbolic_order(500, 4);
        assert!(hyperbolic_cross_size(n, 4) <= 500);
        assert!(hyperbolic_cross_size(n + 1, 4) > 500);
    }

    #[test]
    fn weighted_cardinality_examples() {
        for fam in BasisFamily::ALL {
            assert_eq!(IndexSet::origin().weighted_cardinality(fam), 1.0);
        }
        let s = tensor_set(1, 2).unwrap();
        assert_eq!(s.weighted_cardinality(BasisFamily::Chebyshev1), 9.0);
        let line: IndexSet = (0..9).map(|k| MultiIndex::axis(1, k).unwrap()).collect();
        assert_eq!(line.weighted_cardinality(BasisFamily::Legendre), 81.0);
    }

    #[test]
    fn text_format() {
        let nu = MultiIndex::from_pairs([(3, 1), (1, 2)]).unwrap();
        assert_eq!(nu.to_string(), "1:2,3:1");
        assert_eq!("1:2,3:1".parse::<MultiIndex>().unwrap(), nu);
        assert_eq!("0".parse::<MultiIndex>().unwrap(), MultiIndex::zero());
        assert!("3:1,1:2".parse::<MultiIndex>().is_err());
        assert!("1:0".parse::<MultiIndex>().is_err());
        let s = total_degree_set(2, 3).unwrap();
        assert_eq!(IndexSet::from_text(&s.to_text()).unwrap(), s);
        assert!(IndexSet::from_text("0\n0\n").is_err());
    }

    #[test]
    fn canonical_order_is_graded_lex() {
        let s = total_degree_set(2, 2).unwrap();
        let dense: Vec<Vec<u32>> = s.iter().map(|nu| nu.to_dense(2)).collect();
        assert_eq!(
            dense,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![1, 0],
                vec![0, 2],
                vec![1, 1],
                vec![2, 0]
            ]
        );
    }

    #[test]
    fn construction_ceilings() {
        assert!(MultiIndex::unit(0).is_err());
        assert!(MultiIndex::unit(MAX_DIMENSION as usize + 1).is_err());
        assert!(MultiIndex::axis(1, MAX_DEGREE as usize + 1).is_err());
        assert!(MultiIndex::from_pairs([(2, 1), (2, 3)]).is_err());
    }
}
