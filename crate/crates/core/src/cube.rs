//! Combinatorics of the hypercube `Q_n`.
//!
//! A vertex of `Q_n` is an `n`-bit index: coordinate `i` (0-based here, the
//! `(i+1)`-th coordinate in one-based notation) is bit `i` of the index. The
//! same index also names a subset of `[n]`, which is how the Harper order and
//! the weight layers are phrased.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Largest supported dimension. Full-cube tables hold `2^n` entries.
pub const MAX_DIM: u32 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeDim(u32);

impl CubeDim {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::domain(format!(
                "dimension {n} outside 1..={MAX_DIM}"
            )));
        }
        Ok(CubeDim(n))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// Number of vertices, `2^n`.
    #[inline]
    pub fn order(self) -> usize {
        1usize << self.0
    }

    /// Bit mask with the low `n` bits set (the all-ones vertex).
    #[inline]
    pub fn full_mask(self) -> u32 {
        ((1u64 << self.0) - 1) as u32
    }

    #[inline]
    pub fn contains(self, v: Vertex) -> bool {
        (v.0 as u64) < (1u64 << self.0)
    }

    pub fn check(self, v: Vertex) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "vertex {} is not a vertex of Q_{}",
                v.0, self.0
            )))
        }
    }

    pub fn vertices(self) -> impl Iterator<Item = Vertex> {
        (0..self.order() as u32).map(Vertex)
    }
}

impl fmt::Display for CubeDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A point of `{0,1}^n` stored as its index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Vertex(pub u32);

impl Vertex {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Hamming weight, i.e. the size of the corresponding subset of `[n]`.
    #[inline]
    pub fn weight(self) -> u32 {
        self.0.count_ones()
    }

    /// `v + e_i` for the 0-based coordinate `i`.
    #[inline]
    pub fn flip(self, i: u32) -> Vertex {
        Vertex(self.0 ^ (1 << i))
    }

    #[inline]
    pub fn xor(self, other: Vertex) -> Vertex {
        Vertex(self.0 ^ other.0)
    }

    #[inline]
    pub fn distance(self, other: Vertex) -> u32 {
        (self.0 ^ other.0).count_ones()
    }

    #[inline]
    pub fn coordinate(self, i: u32) -> bool {
        self.0 >> i & 1 == 1
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of vertices of a fixed cube, kept sorted by index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexSet {
    dim: CubeDim,
    members: Vec<Vertex>,
}

impl VertexSet {
    pub fn new<I: IntoIterator<Item = Vertex>>(dim: CubeDim, members: I) -> Result<Self> {
        let mut members: Vec<Vertex> = members.into_iter().collect();
        for &v in &members {
            dim.check(v)?;
        }
        members.sort_unstable();
        members.dedup();
        Ok(VertexSet { dim, members })
    }

    pub fn empty(dim: CubeDim) -> Self {
        VertexSet {
            dim,
            members: Vec::new(),
        }
    }

    /// Builds a set from indices already known to be valid.
    pub(crate) fn from_sorted(dim: CubeDim, members: Vec<Vertex>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        VertexSet { dim, members }
    }

    pub(crate) fn from_unsorted(dim: CubeDim, mut members: Vec<Vertex>) -> Self {
        members.sort_unstable();
        members.dedup();
        VertexSet { dim, members }
    }

    #[inline]
    pub fn dim(&self) -> CubeDim {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.members.iter().copied()
    }

    pub fn as_slice(&self) -> &[Vertex] {
        &self.members
    }

    pub fn intersection_len(&self, other: &VertexSet) -> usize {
        self.iter().filter(|&v| other.contains(v)).count()
    }
}

impl<'a> IntoIterator for &'a VertexSet {
    type Item = &'a Vertex;
    type IntoIter = std::slice::Iter<'a, Vertex>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

/// Exact binomial coefficient; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// All `n`-bit masks of popcount `k`, in increasing numeric order.
pub fn masks_of_weight(n: u32, k: u32) -> impl Iterator<Item = u32> {
    let limit = 1u64 << n;
    let mut next = if k > n {
        None
    } else {
        Some((1u64 << k) - 1)
    };
    std::iter::from_fn(move || {
        let cur = next?;
        if cur >= limit {
            next = None;
            return None;
        }
        next = if cur == 0 {
            None
        } else {
            // Gosper's hack.
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            Some((((r ^ cur) >> 2) / c) | r)
        };
        Some(cur as u32)
    })
}

/// The vertices of the weight-`w` layer `[n]^{(w)}` in index order.
pub fn weight_layer(dim: CubeDim, w: u32) -> impl Iterator<Item = Vertex> {
    masks_of_weight(dim.get(), w).map(Vertex)
}

/// `Γ(v) = { v + e_i }`.
pub fn neighbours(v: Vertex, dim: CubeDim) -> Result<VertexSet> {
    dim.check(v)?;
    let members = (0..dim.get()).map(|i| v.flip(i)).collect();
    Ok(VertexSet::from_unsorted(dim, members))
}

/// `Γ^k(v)`: vertices at Hamming distance exactly `k`. Empty when `k > n`.
pub fn kth_shell(v: Vertex, k: u32, dim: CubeDim) -> Result<VertexSet> {
    dim.check(v)?;
    let members = masks_of_weight(dim.get(), k)
        .map(|m| Vertex(v.0 ^ m))
        .collect();
    Ok(VertexSet::from_unsorted(dim, members))
}

/// `B_r(v)`: vertices at distance at most `r`.
pub fn ball(v: Vertex, r: u32, dim: CubeDim) -> Result<VertexSet> {
    dim.check(v)?;
    if r > dim.get() {
        return Err(Error::domain(format!(
            "radius {r} exceeds dimension {dim}"
        )));
    }
    let members = (0..=r)
        .flat_map(|k| masks_of_weight(dim.get(), k))
        .map(|m| Vertex(v.0 ^ m))
        .collect();
    Ok(VertexSet::from_unsorted(dim, members))
}

/// `Γ(A) = ⋃_{v∈A} Γ(v)`. The result may intersect `A`.
pub fn set_neighbourhood(a: &VertexSet) -> Result<VertexSet> {
    if a.is_empty() {
        return Err(Error::domain("neighbourhood of an empty set"));
    }
    let n = a.dim().get();
    let members = a.iter().flat_map(|v| (0..n).map(move |i| v.flip(i))).collect();
    Ok(VertexSet::from_unsorted(a.dim(), members))
}

/// `{ w : dist(w, A) = r }`, computed by breadth-first layering from `A`.
pub fn set_shell(a: &VertexSet, r: u32) -> Result<VertexSet> {
    if a.is_empty() {
        return Err(Error::domain("shell of an empty set"));
    }
    let n = a.dim().get();
    let mut seen: HashSet<u32> = a.iter().map(|v| v.0).collect();
    let mut frontier: Vec<u32> = a.iter().map(|v| v.0).collect();
    for _ in 0..r {
        let mut next = Vec::new();
        for &x in &frontier {
            for i in 0..n {
                let y = x ^ (1 << i);
                if seen.insert(y) {
                    next.push(y);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(VertexSet::from_unsorted(
        a.dim(),
        frontier.into_iter().map(Vertex).collect(),
    ))
}

/// Simplicial order on subsets of `[n]`: smaller sets first, and among sets
/// of equal size, `A < B` when the smallest element of the symmetric
/// difference lies in `A`.
pub fn harper_compare(a: Vertex, b: Vertex) -> Ordering {
    match a.weight().cmp(&b.weight()) {
        Ordering::Equal => {}
        other => return other,
    }
    let diff = a.0 ^ b.0;
    if diff == 0 {
        return Ordering::Equal;
    }
    if a.coordinate(diff.trailing_zeros()) {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// The first `len` vertices of `Q_n` under [`harper_compare`].
pub fn harper_initial_segment(dim: CubeDim, len: usize) -> Result<VertexSet> {
    if len > dim.order() {
        return Err(Error::domain(format!(
            "segment length {len} exceeds 2^{dim}"
        )));
    }
    let mut members = Vec::with_capacity(len);
    for w in 0..=dim.get() {
        if members.len() == len {
            break;
        }
        let mut layer: Vec<Vertex> = weight_layer(dim, w).collect();
        layer.sort_by(|&a, &b| harper_compare(a, b));
        let take = (len - members.len()).min(layer.len());
        members.extend_from_slice(&layer[..take]);
    }
    Ok(VertexSet::from_unsorted(dim, members))
}

/// `|Γ(S) ∪ S|`, the closed neighbourhood size.
pub fn closed_neighbourhood_len(a: &VertexSet) -> usize {
    if a.is_empty() {
        return 0;
    }
    let nb = set_neighbourhood(a).expect("nonempty");
    nb.len() + a.iter().filter(|&v| !nb.contains(v)).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryReport {
    /// `|Γ(A)|`.
    pub actual: u64,
    /// `C(n,2) − C(n−|A|,2)`, only claimed for `|A| ≤ n`.
    pub harper_lower_bound: Option<u64>,
}

impl BoundaryReport {
    pub fn holds(&self) -> bool {
        self.harper_lower_bound.is_none_or(|b| self.actual >= b)
    }
}

pub fn vertex_boundary_bound(a: &VertexSet) -> Result<BoundaryReport> {
    let actual = set_neighbourhood(a)?.len() as u64;
    let n = a.dim().get() as u64;
    let size = a.len() as u64;
    let harper_lower_bound = (size <= n).then(|| binomial(n, 2) - binomial(n - size, 2));
    Ok(BoundaryReport {
        actual,
        harper_lower_bound,
    })
}

/// Parameters of a family of spread subsets of a weight layer.
#[derive(Clone, Copy, Debug)]
pub struct SpreadSpec {
    pub weight: u32,
    /// Minimum pairwise Hamming distance inside each set.
    pub spread: u32,
    pub family_count: usize,
    pub set_size: usize,
}

/// Greedy family of pairwise-disjoint `t`-spread subsets of `[n]^{(w)}`.
///
/// Each set is filled by scanning the layer in index order and keeping a
/// vertex when it is unused and at distance at least `spread` from every
/// member chosen so far.
pub fn spread_set_family(dim: CubeDim, spec: SpreadSpec) -> Result<Vec<VertexSet>> {
    if spec.weight > dim.get() {
        return Err(Error::domain(format!(
            "weight {} exceeds dimension {dim}",
            spec.weight
        )));
    }
    let layer: Vec<Vertex> = weight_layer(dim, spec.weight).collect();
    let mut used = vec![false; layer.len()];
    let mut family = Vec::with_capacity(spec.family_count);
    for set_index in 0..spec.family_count {
        let mut chosen: Vec<Vertex> = Vec::with_capacity(spec.set_size);
        for (slot, &v) in layer.iter().enumerate() {
            if chosen.len() == spec.set_size {
                break;
            }
            if used[slot] || chosen.iter().any(|&u| u.distance(v) < spec.spread) {
                continue;
            }
            used[slot] = true;
            chosen.push(v);
        }
        if chosen.len() < spec.set_size {
            return Err(Error::Capacity {
                set_index,
                filled: chosen.len(),
                wanted: spec.set_size,
            });
        }
        family.push(VertexSet::from_sorted(dim, chosen));
    }
    Ok(family)
}

/// Pairwise distance of all members is at least `t`.
pub fn is_spread(set: &VertexSet, t: u32) -> bool {
    let m = set.as_slice();
    m.iter()
        .enumerate()
        .all(|(i, &a)| m[i + 1..].iter().all(|&b| a.distance(b) >= t))
}
