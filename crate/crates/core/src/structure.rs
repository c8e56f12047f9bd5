//! Bijections of `V(Q_n)` and how far they are from automorphisms.
//!
//! A bijection `f` is `s`-approximately local when every image `f(Γ(v))` of
//! a neighbourhood meets some neighbourhood `Γ(g(v))` in at least `n − s`
//! points; `g` is a dual of `f`. Duals here are always the argmax choice,
//! ties going to the smallest vertex index.

use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::canon::ball_signature;
use crate::colouring::{ball_distance_r2, permute_bits, BallDistanceMode, Colouring, Seed};
use crate::cube::{binomial, masks_of_weight, set_neighbourhood, CubeDim, Vertex, VertexSet};
use crate::error::{Error, Result};

/// A permutation of `V(Q_n)` stored with its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BijectionTable {
    dim: CubeDim,
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl BijectionTable {
    pub fn new(dim: CubeDim, forward: Vec<u32>) -> Result<Self> {
        if forward.len() != dim.order() {
            return Err(Error::domain(format!(
                "table has {} entries, Q_{dim} has {}",
                forward.len(),
                dim.order()
            )));
        }
        let mut inverse = vec![u32::MAX; forward.len()];
        for (v, &fv) in forward.iter().enumerate() {
            if fv as usize >= forward.len() || inverse[fv as usize] != u32::MAX {
                return Err(Error::domain(format!("table is not a permutation (entry {v} = {fv})")));
            }
            inverse[fv as usize] = v as u32;
        }
        Ok(BijectionTable { dim, forward, inverse })
    }

    pub fn identity(dim: CubeDim) -> Self {
        let forward: Vec<u32> = (0..dim.order() as u32).collect();
        BijectionTable {
            dim,
            inverse: forward.clone(),
            forward,
        }
    }

    /// Fixes even-weight vertices and sends odd-weight vertices to their
    /// antipodes. A bijection only for even `n`.
    pub fn antipodal_odd(dim: CubeDim) -> Result<Self> {
        if !dim.get().is_multiple_of(2) {
            return Err(Error::domain("antipodal-odd map needs an even dimension"));
        }
        let full = dim.full_mask();
        let forward = dim
            .vertices()
            .map(|v| if v.weight() % 2 == 1 { v.0 ^ full } else { v.0 })
            .collect();
        BijectionTable::new(dim, forward)
    }

    /// `x ↦ perm(x) ⊕ shift`.
    pub fn from_automorphism(dim: CubeDim, perm: &[u32], shift: Vertex) -> Result<Self> {
        let mut seen = vec![false; dim.get() as usize];
        if perm.len() != seen.len() || perm.iter().any(|&p| (p as usize) >= seen.len() || std::mem::replace(&mut seen[p as usize], true)) {
            return Err(Error::domain("coordinate map is not a permutation of [n]"));
        }
        dim.check(shift)?;
        let forward = dim.vertices().map(|x| permute_bits(x.0, perm) ^ shift.0).collect();
        BijectionTable::new(dim, forward)
    }

    /// A uniformly random automorphism.
    pub fn random_automorphism(dim: CubeDim, seed: Seed) -> Self {
        let mut rng = seed.rng();
        let mut perm: Vec<u32> = (0..dim.get()).collect();
        perm.shuffle(&mut rng);
        let shift = Vertex(rng.gen_range(0..dim.order() as u32));
        BijectionTable::from_automorphism(dim, &perm, shift).expect("valid automorphism")
    }

    #[inline]
    pub fn dim(&self) -> CubeDim {
        self.dim
    }

    #[inline]
    pub fn apply(&self, v: Vertex) -> Vertex {
        Vertex(self.forward[v.index()])
    }

    #[inline]
    pub fn apply_inverse(&self, v: Vertex) -> Vertex {
        Vertex(self.inverse[v.index()])
    }

    pub fn forward(&self) -> &[u32] {
        &self.forward
    }

    pub fn inverse_table(&self) -> &[u32] {
        &self.inverse
    }

    pub fn inverse(&self) -> BijectionTable {
        BijectionTable {
            dim: self.dim,
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &BijectionTable) -> Result<BijectionTable> {
        if self.dim != other.dim {
            return Err(Error::domain("cannot compose bijections of different cubes"));
        }
        let forward = other.forward.iter().map(|&x| self.forward[x as usize]).collect();
        BijectionTable::new(self.dim, forward)
    }

    /// This map followed by swapping the images of `a` and `b`.
    pub fn with_swap(&self, a: Vertex, b: Vertex) -> Result<BijectionTable> {
        self.dim.check(a)?;
        self.dim.check(b)?;
        let mut forward = self.forward.clone();
        let (ia, ib) = (self.inverse[a.index()] as usize, self.inverse[b.index()] as usize);
        forward.swap(ia, ib);
        BijectionTable::new(self.dim, forward)
    }

    pub fn is_automorphism(&self) -> bool {
        let n = self.dim.get();
        self.dim.vertices().all(|v| {
            (0..n).all(|i| {
                let w = v.flip(i);
                w.0 < v.0 || self.apply(v).distance(self.apply(w)) == 1
            })
        })
    }

    /// `f(Γ(v))`.
    pub fn image_of_neighbourhood(&self, v: Vertex) -> Vec<Vertex> {
        (0..self.dim.get()).map(|i| self.apply(v.flip(i))).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("bij {}\n", self.dim);
        let body: Vec<String> = self.forward.iter().map(|x| x.to_string()).collect();
        s.push_str(&body.join(" "));
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, "empty bijection file"))?;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 2 || f[0] != "bij" {
            return Err(Error::parse(1, "expected header `bij <n>`"));
        }
        let n: u32 = f[1].parse().map_err(|_| Error::parse(1, "bad dimension"))?;
        let dim = CubeDim::new(n)?;
        let mut forward = Vec::with_capacity(dim.order());
        for (i, line) in lines.enumerate() {
            for tok in line.split_whitespace() {
                forward.push(tok.parse::<u32>().map_err(|_| Error::parse(i + 2, format!("bad entry `{tok}`")))?);
            }
        }
        BijectionTable::new(dim, forward)
    }
}

/// Best centre for a set of points: the `w` maximising `|X ∩ Γ(w)|`, the
/// overlap, and whether another `w` attains the same overlap.
fn best_centre(dim: CubeDim, points: &[Vertex]) -> (Vertex, u32, bool) {
    let n = dim.get();
    let mut cands: Vec<u32> = Vec::with_capacity(points.len() * n as usize);
    for &x in points {
        for i in 0..n {
            cands.push(x.0 ^ 1 << i);
        }
    }
    cands.sort_unstable();
    let mut best = (Vertex(0), 0u32, false);
    let mut i = 0;
    while i < cands.len() {
        let mut j = i;
        while j < cands.len() && cands[j] == cands[i] {
            j += 1;
        }
        let run = (j - i) as u32;
        if run > best.1 {
            best = (Vertex(cands[i]), run, false);
        } else if run == best.1 {
            best.2 = true;
        }
        i = j;
    }
    if points.is_empty() {
        best.2 = dim.order() > 1;
    }
    best
}

/// Number of `w` with `|X ∩ Γ(w)| ≥ threshold`.
fn centres_reaching(dim: CubeDim, points: &[Vertex], threshold: u32) -> Vec<Vertex> {
    let n = dim.get();
    let mut cands: Vec<u32> = points.iter().flat_map(|x| (0..n).map(move |i| x.0 ^ 1 << i)).collect();
    cands.sort_unstable();
    let mut out = Vec::new();
    for run in cands.chunk_by(|a, b| a == b) {
        if run.len() as u32 >= threshold {
            out.push(Vertex(run[0]));
        }
    }
    out
}

/// Argmax dual of an arbitrary vertex map given as a table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualMap {
    pub g: Vec<u32>,
    /// `n − |f(Γ(v)) ∩ Γ(g(v))|`.
    pub defect: Vec<u32>,
    /// First vertex where another centre ties the argmax.
    pub tie: Option<Vertex>,
}

impl DualMap {
    pub fn of_map(dim: CubeDim, map: &[u32]) -> DualMap {
        let n = dim.get();
        let rows: Vec<(u32, u32, bool)> = (0..dim.order() as u32)
            .into_par_iter()
            .map(|v| {
                let image: Vec<Vertex> = (0..n).map(|i| Vertex(map[(v ^ 1 << i) as usize])).collect();
                let (w, overlap, tie) = best_centre(dim, &image);
                (w.0, n - overlap, tie)
            })
            .collect();
        DualMap {
            g: rows.iter().map(|r| r.0).collect(),
            defect: rows.iter().map(|r| r.1).collect(),
            tie: rows.iter().position(|r| r.2).map(|v| Vertex(v as u32)),
        }
    }

    pub fn max_defect(&self) -> u32 {
        self.defect.iter().copied().max().unwrap_or(0)
    }

    pub fn is_bijective(&self) -> bool {
        let mut seen = vec![false; self.g.len()];
        self.g.iter().all(|&w| !std::mem::replace(&mut seen[w as usize], true))
    }

    pub fn apply(&self, v: Vertex) -> Vertex {
        Vertex(self.g[v.index()])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DualVerdict {
    /// `f ∈ Local_s`. `unique` holds when no vertex has a second centre
    /// reaching overlap `n − s`.
    Local { dual: DualMap, unique: bool },
    NotLocal { vertex: Vertex, defect: u32 },
}

pub fn compute_dual(f: &BijectionTable, s: u32) -> DualVerdict {
    let dim = f.dim();
    let n = dim.get();
    let dual = DualMap::of_map(dim, f.forward());
    if let Some(v) = dual.defect.iter().position(|&d| d > s) {
        return DualVerdict::NotLocal {
            vertex: Vertex(v as u32),
            defect: dual.defect[v],
        };
    }
    let threshold = n.saturating_sub(s);
    let unique = dim
        .vertices()
        .collect::<Vec<_>>()
        .par_iter()
        .all(|&v| centres_reaching(dim, &f.image_of_neighbourhood(v), threshold).len() <= 1);
    DualVerdict::Local { dual, unique }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterVerdict {
    pub member: bool,
    /// First vertex in index order whose shell is too large, with that size.
    pub violator: Option<(Vertex, usize)>,
}

/// Size of `{w : dist(w, X) = r}`.
fn shell_size(dim: CubeDim, points: &[Vertex], r: u32) -> usize {
    let mut seen = std::collections::HashSet::new();
    let mut layer: Vec<u32> = points.iter().map(|v| v.0).collect();
    seen.extend(layer.iter().copied());
    for _ in 0..r {
        let mut next = Vec::new();
        for &x in &layer {
            for i in 0..dim.get() {
                let y = x ^ 1 << i;
                if seen.insert(y) {
                    next.push(y);
                }
            }
        }
        layer = next;
    }
    layer.len()
}

/// `f ∈ Cluster^r_R`: `|Γ^r(f(Γ(v)))| ≤ C(n, r+1) + R` for all `v`, with
/// `Γ^r` of a set read as the set of points at distance exactly `r`.
pub fn cluster_membership(f: &BijectionTable, r: u32, slack: u64) -> Result<ClusterVerdict> {
    if !(1..=2).contains(&r) {
        return Err(Error::domain(format!("cluster radius must be 1 or 2, got {r}")));
    }
    let dim = f.dim();
    let cap = binomial(dim.get() as u64, r as u64 + 1) + slack;
    let violator = (0..dim.order() as u32).into_par_iter().find_map_first(|v| {
        let size = shell_size(dim, &f.image_of_neighbourhood(Vertex(v)), r);
        (size as u64 > cap).then_some((Vertex(v), size))
    });
    Ok(ClusterVerdict {
        member: violator.is_none(),
        violator,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MonoVerdict {
    Member,
    NotInCluster { vertex: Vertex, shell: usize },
    Violator { v: Vertex, w1: Vertex, w2: Vertex },
}

/// `f ∈ Mono^t_s`.
pub fn mono_membership(f: &BijectionTable, s: u64, t: u32) -> Result<MonoVerdict> {
    let cluster = cluster_membership(f, 1, s)?;
    if let Some((vertex, shell)) = cluster.violator {
        return Ok(MonoVerdict::NotInCluster { vertex, shell });
    }
    let dim = f.dim();
    let found = (0..dim.order() as u32).into_par_iter().find_map_first(|v| {
        let heavy = centres_reaching(dim, &f.image_of_neighbourhood(Vertex(v)), t + 1);
        (heavy.len() >= 2).then(|| MonoVerdict::Violator {
            v: Vertex(v),
            w1: heavy[0],
            w2: heavy[1],
        })
    });
    Ok(found.unwrap_or(MonoVerdict::Member))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChainVerdict {
    NotLocal { vertex: Vertex },
    /// A dual along the chain is not unique at `vertex`.
    Indeterminate { vertex: Vertex },
    Determined { is_diagonal: bool, is_self_dual: bool },
}

/// `f_⋆` and `f_⋆⋆`, provided both are unique.
pub fn dual_chain(f: &BijectionTable, s: u32) -> std::result::Result<(DualMap, DualMap), ChainVerdict> {
    let first = match compute_dual(f, s) {
        DualVerdict::NotLocal { vertex, .. } => return Err(ChainVerdict::NotLocal { vertex }),
        DualVerdict::Local { dual, unique } => {
            if !unique || dual.tie.is_some() {
                let vertex = dual.tie.unwrap_or_else(|| first_non_unique(f, s));
                return Err(ChainVerdict::Indeterminate { vertex });
            }
            dual
        }
    };
    let second = DualMap::of_map(f.dim(), &first.g);
    if let Some(vertex) = second.tie {
        return Err(ChainVerdict::Indeterminate { vertex });
    }
    Ok((first, second))
}

fn first_non_unique(f: &BijectionTable, s: u32) -> Vertex {
    let dim = f.dim();
    let threshold = dim.get().saturating_sub(s);
    dim.vertices()
        .find(|&v| centres_reaching(dim, &f.image_of_neighbourhood(v), threshold).len() > 1)
        .unwrap_or(Vertex(0))
}

/// Diagonal means `f_⋆⋆ = f`; self-dual means `f_⋆ = f`.
pub fn diagonal_and_self(f: &BijectionTable, s: u32) -> ChainVerdict {
    match dual_chain(f, s) {
        Err(v) => v,
        Ok((first, second)) => ChainVerdict::Determined {
            is_diagonal: second.g == f.forward(),
            is_self_dual: first.g == f.forward(),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InverseDualVerdict {
    Pass,
    NotLocal { vertex: Vertex },
    DualNotBijective,
    /// `|f^{-1}(Γ(v)) ∩ Γ(g^{-1}(v))| < n − s` at `vertex`.
    Counterexample { vertex: Vertex, overlap: u32 },
}

/// For `f ∈ Local_s` with bijective dual `g`, checks that `g^{-1}` is a dual
/// of `f^{-1}` with defect at most `s` everywhere.
pub fn inverse_dual_check(f: &BijectionTable, s: u32) -> InverseDualVerdict {
    let dual = match compute_dual(f, s) {
        DualVerdict::NotLocal { vertex, .. } => return InverseDualVerdict::NotLocal { vertex },
        DualVerdict::Local { dual, .. } => dual,
    };
    if !dual.is_bijective() {
        return InverseDualVerdict::DualNotBijective;
    }
    let dim = f.dim();
    let n = dim.get();
    let mut g_inv = vec![0u32; dual.g.len()];
    for (v, &w) in dual.g.iter().enumerate() {
        g_inv[w as usize] = v as u32;
    }
    let inv = f.inverse();
    let bad = (0..dim.order() as u32).into_par_iter().find_map_first(|v| {
        let centre = Vertex(g_inv[v as usize]);
        let overlap = inv
            .image_of_neighbourhood(Vertex(v))
            .iter()
            .filter(|x| x.distance(centre) == 1)
            .count() as u32;
        (overlap + s < n).then_some((Vertex(v), overlap))
    });
    match bad {
        Some((vertex, overlap)) => InverseDualVerdict::Counterexample { vertex, overlap },
        None => InverseDualVerdict::Pass,
    }
}

/// Largest defect of the dual `f_⋆` viewed as a map with its own argmax
/// dual, or `None` when `f ∉ Local_s`.
pub fn dual_locality_measure(f: &BijectionTable, s: u32) -> Option<u32> {
    match compute_dual(f, s) {
        DualVerdict::NotLocal { .. } => None,
        DualVerdict::Local { dual, .. } => Some(DualMap::of_map(f.dim(), &dual.g).max_defect()),
    }
}

/// The `w` maximising `|Γ(w) ∩ A|`, with that overlap.
pub fn stability_witness(a: &VertexSet) -> (Vertex, u32) {
    let (w, overlap, _) = best_centre(a.dim(), a.as_slice());
    (w, overlap)
}

#[derive(Clone, Debug, PartialEq)]
pub enum TwoClusterVerdict {
    WrongSize { size: usize },
    BoundaryTooLarge { boundary: usize, allowed: u64 },
    TwoClusters { w1: Vertex, w2: Vertex },
    Checked(TwoClusterReport),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoClusterReport {
    pub witness: Vertex,
    pub overlap: u32,
    /// `n · sqrt(max(0, 1 − 2s/n − 14 sqrt(t/n)))`.
    pub bound: f64,
    /// The expression under the outer root was negative, so the bound is 0.
    pub radicand_negative: bool,
    pub holds: bool,
}

impl TwoClusterReport {
    pub fn margin(&self) -> f64 {
        self.overlap as f64 - self.bound
    }
}

/// For `|A| = n`, `|Γ(A)| ≤ C(n,2) + s·n` and at most one heavily loaded
/// neighbourhood, checks `|Γ(w) ∩ A| ≥ n (1 − 2s/n − 14 sqrt(t/n))^{1/2}`.
pub fn two_cluster_stability(a: &VertexSet, s: u32, t: u32) -> Result<TwoClusterVerdict> {
    let dim = a.dim();
    let n = dim.get() as u64;
    if a.len() as u64 != n {
        return Ok(TwoClusterVerdict::WrongSize { size: a.len() });
    }
    let boundary = set_neighbourhood(a)?.len();
    let allowed = binomial(n, 2) + s as u64 * n;
    if boundary as u64 > allowed {
        return Ok(TwoClusterVerdict::BoundaryTooLarge { boundary, allowed });
    }
    let heavy = centres_reaching(dim, a.as_slice(), t + 1);
    if heavy.len() >= 2 {
        return Ok(TwoClusterVerdict::TwoClusters { w1: heavy[0], w2: heavy[1] });
    }
    let (witness, overlap) = stability_witness(a);
    let nf = n as f64;
    let radicand = 1.0 - 2.0 * s as f64 / nf - 14.0 * (t as f64 / nf).sqrt();
    let bound = nf * radicand.max(0.0).sqrt();
    Ok(TwoClusterVerdict::Checked(TwoClusterReport {
        witness,
        overlap,
        bound,
        radicand_negative: radicand < 0.0,
        holds: overlap as f64 >= bound,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HarperCorollaryVerdict {
    NotApplicable { boundary: u64, allowed: u64 },
    Holds { size: u64, bound: u64 },
    Violated { size: u64, bound: u64 },
}

/// If `|Γ(A)| ≤ C(n,r) + n^{r−1} s`, checks `|A| ≤ C(n,r−1) + C n^{r−2} s`
/// with `C = 2(r + 2)`.
pub fn corollary_harper_check(a: &VertexSet, r: u32, s: u64) -> Result<HarperCorollaryVerdict> {
    if r < 2 {
        return Err(Error::domain("the layer bound needs r ≥ 2"));
    }
    let n = a.dim().get() as u64;
    let boundary = set_neighbourhood(a)?.len() as u64;
    let allowed = binomial(n, r as u64) + n.pow(r - 1) * s;
    if boundary > allowed {
        return Ok(HarperCorollaryVerdict::NotApplicable { boundary, allowed });
    }
    let c = 2 * (r as u64 + 2);
    let bound = binomial(n, r as u64 - 1) + c * n.pow(r - 2) * s;
    let size = a.len() as u64;
    Ok(if size <= bound {
        HarperCorollaryVerdict::Holds { size, bound }
    } else {
        HarperCorollaryVerdict::Violated { size, bound }
    })
}

/// A spanning subgraph of `Q_n`: for each vertex, the bitmask of directions
/// whose edge is present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeSubgraph {
    dim: CubeDim,
    dirs: Vec<u32>,
}

impl CubeSubgraph {
    pub fn full(dim: CubeDim) -> Self {
        CubeSubgraph {
            dim,
            dirs: vec![dim.full_mask(); dim.order()],
        }
    }

    pub fn dim(&self) -> CubeDim {
        self.dim
    }

    pub fn has_edge(&self, u: Vertex, i: u32) -> bool {
        self.dirs[u.index()] >> i & 1 == 1
    }

    pub fn remove_edge(&mut self, u: Vertex, i: u32) {
        self.dirs[u.index()] &= !(1 << i);
        self.dirs[u.flip(i).index()] &= !(1 << i);
    }

    pub fn degree(&self, u: Vertex) -> u32 {
        self.dirs[u.index()].count_ones()
    }

    pub fn min_degree(&self) -> u32 {
        self.dirs.iter().map(|d| d.count_ones()).min().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.dirs.iter().map(|d| d.count_ones() as usize).sum::<usize>() / 2
    }

    /// Random deletions keeping every degree at least `n − s`. Vertices are
    /// visited in random order and each drops random edges while both ends
    /// stay above the floor.
    pub fn random_with_min_degree(dim: CubeDim, s: u32, seed: Seed) -> Self {
        let mut rng = seed.rng();
        let mut g = CubeSubgraph::full(dim);
        let floor = dim.get().saturating_sub(s);
        let mut order: Vec<u32> = (0..dim.order() as u32).collect();
        order.shuffle(&mut rng);
        for v in order {
            let v = Vertex(v);
            let mut dirs: Vec<u32> = (0..dim.get()).collect();
            dirs.shuffle(&mut rng);
            let want = rng.gen_range(0..=s);
            for i in dirs.into_iter().take(want as usize) {
                let w = v.flip(i);
                if g.has_edge(v, i) && g.degree(v) > floor && g.degree(w) > floor {
                    g.remove_edge(v, i);
                }
            }
        }
        g
    }
}

/// `E' = {uv : f(u) ~ f_⋆(v) and f(v) ~ f_⋆(u)}`.
pub fn invariant_edge_graph(f: &BijectionTable, dual: &DualMap) -> CubeSubgraph {
    let dim = f.dim();
    let n = dim.get();
    let dirs = dim
        .vertices()
        .map(|u| {
            (0..n).fold(0u32, |acc, i| {
                let v = u.flip(i);
                let keep = f.apply(u).distance(dual.apply(v)) == 1 && f.apply(v).distance(dual.apply(u)) == 1;
                if keep {
                    acc | 1 << i
                } else {
                    acc
                }
            })
        })
        .collect();
    CubeSubgraph { dim, dirs }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RigidLayers {
    pub base: Vertex,
    pub layers: Vec<VertexSet>,
}

/// `R_0 = {v}`; `w` at distance `i` lies in `R_i` when every cube edge from
/// `w` down towards `v` is in `G` and ends in `R_{i−1}`.
pub fn rigid_layers(g: &CubeSubgraph, base: Vertex, k_max: u32) -> Result<RigidLayers> {
    let dim = g.dim();
    dim.check(base)?;
    let n = dim.get();
    let mut rigid = vec![false; dim.order()];
    rigid[base.index()] = true;
    let mut layers = vec![VertexSet::new(dim, [base])?];
    for i in 1..=k_max.min(n) {
        let mut layer = Vec::new();
        for m in masks_of_weight(n, i) {
            let w = Vertex(base.0 ^ m);
            let ok = (0..n)
                .filter(|&j| m >> j & 1 == 1)
                .all(|j| g.has_edge(w, j) && rigid[w.flip(j).index()]);
            if ok {
                layer.push(w);
            }
        }
        for &w in &layer {
            rigid[w.index()] = true;
        }
        layers.push(VertexSet::new(dim, layer)?);
    }
    Ok(RigidLayers { base, layers })
}

/// `|R_k| ≥ C(n,k) − e n^{k−1} s` for each `k ≥ 1` present.
pub fn rigid_layer_bound_holds(layers: &RigidLayers, n: u32, s: u32) -> bool {
    layers.layers.iter().enumerate().skip(1).all(|(k, r)| {
        let bound = binomial(n as u64, k as u64) as f64 - std::f64::consts::E * (n as f64).powi(k as i32 - 1) * s as f64;
        r.len() as f64 >= bound
    })
}

/// First `v` with `χ^{(r)}(v) ≇ χ_f^{(r)}(f(v))`, if any.
pub fn isom_membership(chi: &Colouring, f: &BijectionTable, r: u32) -> Result<Option<Vertex>> {
    if chi.dim() != f.dim() {
        return Err(Error::domain("colouring and bijection live on different cubes"));
    }
    let chi_f = chi.relabel(f.forward());
    let dim = chi.dim();
    let found = (0..dim.order() as u32)
        .into_par_iter()
        .map(|v| -> Result<Option<Vertex>> {
            let v = Vertex(v);
            let same = ball_signature(chi, v, r)? == ball_signature(&chi_f, f.apply(v), r)?;
            Ok((!same).then_some(v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(found.into_iter().flatten().next())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DriftVerdict {
    NotIsometric { vertex: Vertex },
    Chain(ChainVerdict),
    /// `f_⋆⋆` is not a bijection, so its inverse at `f(v)` is undefined.
    NotInvertible,
    Drift { target: Vertex, distance: u32 },
}

/// `d(χ^{(2)}(v), χ^{(2)}(f_⋆⋆^{-1}(f(v))))` for `f ∈ Local_s ∩ Isom^{(2)}(χ)`.
pub fn local_equiv_drift(chi: &Colouring, f: &BijectionTable, v: Vertex, s: u32) -> Result<DriftVerdict> {
    if let Some(vertex) = isom_membership(chi, f, 2)? {
        return Ok(DriftVerdict::NotIsometric { vertex });
    }
    let (_, second) = match dual_chain(f, s) {
        Ok(pair) => pair,
        Err(v) => return Ok(DriftVerdict::Chain(v)),
    };
    if !second.is_bijective() {
        return Ok(DriftVerdict::NotInvertible);
    }
    let fv = f.apply(v).0;
    let target = Vertex(second.g.iter().position(|&x| x == fv).expect("bijective") as u32);
    let distance = ball_distance_r2(chi, v, target, BallDistanceMode::Exact)?;
    Ok(DriftVerdict::Drift { target, distance })
}

/// Key/value summary of where a bijection sits among the classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationReport {
    pub n: u32,
    pub s: u32,
    pub t: u32,
    pub automorphism: bool,
    pub cluster1: bool,
    pub cluster2: bool,
    pub local: bool,
    pub max_defect: u32,
    pub dual_unique: Option<bool>,
    pub dual_bijective: Option<bool>,
    pub mono: bool,
    pub diagonal: Option<bool>,
    pub self_dual: Option<bool>,
    pub inverse_dual: Option<bool>,
    pub dual_max_defect: Option<u32>,
    pub invariant_min_degree: Option<u32>,
}

impl ClassificationReport {
    pub fn to_text(&self) -> String {
        fn opt<T: fmt::Display>(x: &Option<T>) -> String {
            x.as_ref().map_or_else(|| "n/a".to_string(), |v| v.to_string())
        }
        let mut s = String::new();
        let _ = writeln!(s, "n {}", self.n);
        let _ = writeln!(s, "s {}", self.s);
        let _ = writeln!(s, "t {}", self.t);
        let _ = writeln!(s, "automorphism {}", self.automorphism);
        let _ = writeln!(s, "cluster1 {}", self.cluster1);
        let _ = writeln!(s, "cluster2 {}", self.cluster2);
        let _ = writeln!(s, "local {}", self.local);
        let _ = writeln!(s, "max_defect {}", self.max_defect);
        let _ = writeln!(s, "dual_unique {}", opt(&self.dual_unique));
        let _ = writeln!(s, "dual_bijective {}", opt(&self.dual_bijective));
        let _ = writeln!(s, "mono {}", self.mono);
        let _ = writeln!(s, "diagonal {}", opt(&self.diagonal));
        let _ = writeln!(s, "self_dual {}", opt(&self.self_dual));
        let _ = writeln!(s, "inverse_dual {}", opt(&self.inverse_dual));
        let _ = writeln!(s, "dual_max_defect {}", opt(&self.dual_max_defect));
        let _ = writeln!(s, "invariant_min_degree {}", opt(&self.invariant_min_degree));
        s
    }
}

/// Classifies `f` with slack `s` for locality and `Cluster^1`, `s·n` for
/// `Cluster^2`, and threshold `t` for `Mono`.
pub fn classify(f: &BijectionTable, s: u32, t: u32) -> Result<ClassificationReport> {
    let n = f.dim().get();
    let verdict = compute_dual(f, s);
    let argmax = DualMap::of_map(f.dim(), f.forward());
    let (local, dual_unique, dual_bijective, dual) = match verdict {
        DualVerdict::Local { dual, unique } => (true, Some(unique), Some(dual.is_bijective()), Some(dual)),
        DualVerdict::NotLocal { .. } => (false, None, None, None),
    };
    let chain = diagonal_and_self(f, s);
    let (diagonal, self_dual) = match chain {
        ChainVerdict::Determined { is_diagonal, is_self_dual } => (Some(is_diagonal), Some(is_self_dual)),
        _ => (None, None),
    };
    let inverse_dual = match inverse_dual_check(f, s) {
        InverseDualVerdict::Pass => Some(true),
        InverseDualVerdict::Counterexample { .. } => Some(false),
        _ => None,
    };
    Ok(ClassificationReport {
        n,
        s,
        t,
        automorphism: f.is_automorphism(),
        cluster1: cluster_membership(f, 1, s as u64)?.member,
        cluster2: cluster_membership(f, 2, s as u64 * n as u64)?.member,
        local,
        max_defect: argmax.max_defect(),
        dual_unique,
        dual_bijective,
        mono: mono_membership(f, s as u64, t)? == MonoVerdict::Member,
        diagonal,
        self_dual,
        inverse_dual,
        dual_max_defect: dual.as_ref().map(|d| DualMap::of_map(f.dim(), &d.g).max_defect()),
        invariant_min_degree: dual.as_ref().map(|d| invariant_edge_graph(f, d).min_degree()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colouring::{sample_colouring, ColourDistribution};
    use crate::cube::{ball, kth_shell, neighbours};

    fn dim(n: u32) -> CubeDim {
        CubeDim::new(n).unwrap()
    }

    fn random_bijection(d: CubeDim, seed: u64) -> BijectionTable {
        let mut rng = Seed::new(seed).rng();
        let mut f: Vec<u32> = (0..d.order() as u32).collect();
        f.shuffle(&mut rng);
        BijectionTable::new(d, f).unwrap()
    }

    #[test]
    fn table_basics() {
        let d = dim(4);
        assert!(BijectionTable::new(d, vec![0; 16]).is_err());
        let f = random_bijection(d, 3);
        assert_eq!(f.compose(&f.inverse()).unwrap(), BijectionTable::identity(d));
        let text = f.to_text();
        assert!(text.starts_with("bij 4\n"));
        assert_eq!(BijectionTable::from_text(&text).unwrap(), f);
        assert!(BijectionTable::from_text("bij 2\n0 1 2 2\n").is_err());
        assert!(BijectionTable::antipodal_odd(dim(5)).is_err());
    }

    #[test]
    fn cluster_identity_conventions() {
        let id = BijectionTable::identity(dim(6));
        assert!(cluster_membership(&id, 2, 0).unwrap().member);
        assert!(cluster_membership(&id, 1, 1).unwrap().member);
        let v = cluster_membership(&id, 1, 0).unwrap();
        assert_eq!(v.violator, Some((Vertex(0), 16)));
    }

    #[test]
    fn cluster_matches_recount() {
        let d = dim(6);
        for seed in 0..5 {
            let f = random_bijection(d, seed);
            for r in 1..=2 {
                let slack = 300;
                let direct = d.vertices().find(|&v| {
                    let image = VertexSet::new(d, f.image_of_neighbourhood(v)).unwrap();
                    let size = d
                        .vertices()
                        .filter(|&w| image.iter().map(|x| x.distance(w)).min() == Some(r))
                        .count();
                    size as u64 > binomial(6, r as u64 + 1) + slack
                });
                assert_eq!(cluster_membership(&f, r, slack).unwrap().violator.map(|x| x.0), direct);
            }
        }
    }

    #[test]
    fn identity_and_automorphism_duals() {
        let d = dim(5);
        match compute_dual(&BijectionTable::identity(d), 0) {
            DualVerdict::Local { dual, unique } => {
                assert!(unique);
                assert_eq!(dual.max_defect(), 0);
                assert_eq!(dual.g, (0..32).collect::<Vec<u32>>());
            }
            other => panic!("{other:?}"),
        }
        for seed in 0..5 {
            let sigma = BijectionTable::random_automorphism(d, Seed::new(seed));
            assert!(sigma.is_automorphism());
            match compute_dual(&sigma, 0) {
                DualVerdict::Local { dual, .. } => assert_eq!(dual.g, sigma.forward()),
                other => panic!("{other:?}"),
            }
            assert_eq!(
                diagonal_and_self(&sigma, 1),
                ChainVerdict::Determined { is_diagonal: true, is_self_dual: true }
            );
        }
    }

    #[test]
    fn antipodal_odd_example() {
        let d = dim(4);
        let f = BijectionTable::antipodal_odd(d).unwrap();
        assert!(!f.is_automorphism());
        let dual = match compute_dual(&f, 0) {
            DualVerdict::Local { dual, unique } => {
                assert!(unique);
                dual
            }
            other => panic!("{other:?}"),
        };
        for v in d.vertices() {
            let expected = if v.weight() % 2 == 0 { v.0 ^ 0xf } else { v.0 };
            assert_eq!(dual.g[v.index()], expected);
        }
        assert_eq!(
            diagonal_and_self(&f, 0),
            ChainVerdict::Determined { is_diagonal: true, is_self_dual: false }
        );
        assert_eq!(inverse_dual_check(&f, 0), InverseDualVerdict::Pass);
        assert_eq!(dual_locality_measure(&f, 0), Some(0));
        assert_eq!(mono_membership(&f, 1, 2).unwrap(), MonoVerdict::Member);
        assert_eq!(invariant_edge_graph(&f, &dual).min_degree(), 4);
    }

    #[test]
    fn mono_thresholds_for_identity() {
        let id = BijectionTable::identity(dim(5));
        assert_eq!(mono_membership(&id, 1, 2).unwrap(), MonoVerdict::Member);
        assert!(matches!(mono_membership(&id, 1, 1).unwrap(), MonoVerdict::Violator { .. }));
        assert!(matches!(mono_membership(&id, 0, 2).unwrap(), MonoVerdict::NotInCluster { .. }));
    }

    #[test]
    fn swap_localises_defects() {
        let d = dim(4);
        let f = BijectionTable::identity(d).with_swap(Vertex(0), Vertex(15)).unwrap();
        let dual = DualMap::of_map(d, f.forward());
        for v in d.vertices() {
            let touched = v.distance(Vertex(0)) == 1 || v.distance(Vertex(15)) == 1;
            assert_eq!(dual.defect[v.index()], touched as u32, "vertex {v}");
        }
    }

    #[test]
    fn inverse_dual_on_perturbed_automorphisms() {
        let d = dim(5);
        for seed in 0..100u64 {
            let sigma = BijectionTable::random_automorphism(d, Seed::new(seed));
            let f = sigma.with_swap(Vertex((seed % 32) as u32), Vertex(((seed * 7 + 3) % 32) as u32)).unwrap();
            let s = DualMap::of_map(d, f.forward()).max_defect();
            match inverse_dual_check(&f, s) {
                InverseDualVerdict::Pass | InverseDualVerdict::DualNotBijective => {}
                other => panic!("seed {seed}: {other:?}"),
            }
        }
    }

    #[test]
    fn conjugation_invariance() {
        let d = dim(5);
        for seed in 0..10u64 {
            let f = BijectionTable::random_automorphism(d, Seed::new(seed))
                .with_swap(Vertex(1), Vertex(30))
                .unwrap();
            let sigma = BijectionTable::random_automorphism(d, Seed::new(seed + 99));
            let conj = sigma.compose(&f).unwrap().compose(&sigma.inverse()).unwrap();
            for s in 0..3 {
                assert_eq!(
                    matches!(compute_dual(&f, s), DualVerdict::Local { .. }),
                    matches!(compute_dual(&conj, s), DualVerdict::Local { .. })
                );
                assert_eq!(
                    cluster_membership(&f, 2, s as u64).unwrap().member,
                    cluster_membership(&conj, 2, s as u64).unwrap().member
                );
            }
        }
    }

    #[test]
    fn stability_witness_exact() {
        let d = dim(8);
        let w0 = Vertex(0b1011_0010);
        let a = neighbours(w0, d).unwrap();
        assert_eq!(stability_witness(&a), (w0, 8));
        // Swap three members for far-away points.
        let mut members: Vec<Vertex> = a.iter().skip(3).collect();
        members.extend([Vertex(w0.0 ^ 0b0111_0000 ^ 0xff), Vertex(w0.0 ^ 0xff), Vertex(w0.0 ^ 0b1110_1111)]);
        let b = VertexSet::new(d, members).unwrap();
        assert_eq!(stability_witness(&b), (w0, 5));
        for seed in 0..20 {
            let mut rng = Seed::new(seed).rng();
            let pts: Vec<Vertex> = (0..10).map(|_| Vertex(rng.gen_range(0..1024))).collect();
            let set = VertexSet::new(dim(10), pts).unwrap();
            let (w, overlap) = stability_witness(&set);
            let brute = dim(10)
                .vertices()
                .map(|w| (set.iter().filter(|x| x.distance(w) == 1).count() as u32, std::cmp::Reverse(w.0)))
                .max()
                .unwrap();
            assert_eq!((overlap, w.0), (brute.0, brute.1 .0));
        }
    }

    #[test]
    fn two_cluster_examples() {
        let d = dim(10);
        let w0 = Vertex(5);
        let a = neighbours(w0, d).unwrap();
        match two_cluster_stability(&a, 1, 2).unwrap() {
            TwoClusterVerdict::Checked(rep) => {
                assert_eq!((rep.witness, rep.overlap), (w0, 10));
                assert!(rep.holds);
            }
            other => panic!("{other:?}"),
        }
        let w1 = Vertex(0);
        let w2 = Vertex(0b11_1111_1111);
        let mut pts: Vec<Vertex> = (0..5).map(|i| w1.flip(i)).collect();
        pts.extend((5..10).map(|i| w2.flip(i)));
        let split = VertexSet::new(d, pts).unwrap();
        assert!(matches!(
            two_cluster_stability(&split, 10, 4).unwrap(),
            TwoClusterVerdict::TwoClusters { .. }
        ));
        assert!(matches!(
            two_cluster_stability(&VertexSet::new(d, [w0]).unwrap(), 1, 2).unwrap(),
            TwoClusterVerdict::WrongSize { size: 1 }
        ));
    }

    #[test]
    fn harper_corollary_examples() {
        let d = dim(8);
        let a = ball(Vertex(0), 1, d).unwrap();
        assert!(matches!(corollary_harper_check(&a, 2, 2).unwrap(), HarperCorollaryVerdict::Holds { .. }));
        let a = ball(Vertex(0), 2, d).unwrap();
        assert!(matches!(corollary_harper_check(&a, 3, 2).unwrap(), HarperCorollaryVerdict::Holds { .. }));
        let big = ball(Vertex(0), 3, d).unwrap();
        assert!(matches!(
            corollary_harper_check(&big, 2, 0).unwrap(),
            HarperCorollaryVerdict::NotApplicable { .. }
        ));
        let d5 = dim(5);
        for seed in 0..300 {
            let mut rng = Seed::new(seed).rng();
            let k = rng.gen_range(1..12);
            let pts: Vec<Vertex> = (0..k).map(|_| Vertex(rng.gen_range(0..32))).collect();
            let set = VertexSet::new(d5, pts).unwrap();
            for s in 0..3 {
                assert!(!matches!(
                    corollary_harper_check(&set, 2, s).unwrap(),
                    HarperCorollaryVerdict::Violated { .. }
                ));
            }
        }
    }

    fn all_paths_present(g: &CubeSubgraph, from: Vertex, to: Vertex) -> bool {
        let dirs: Vec<u32> = (0..g.dim().get()).filter(|&i| (from.0 ^ to.0) >> i & 1 == 1).collect();
        let perms = crate::shotgun::coordinate_permutations(dirs.len());
        perms.iter().all(|p| {
            let mut cur = from;
            p.iter().all(|&k| {
                let i = dirs[k as usize];
                let ok = g.has_edge(cur, i);
                cur = cur.flip(i);
                ok
            })
        })
    }

    #[test]
    fn rigid_layers_match_path_oracle() {
        let d = dim(6);
        for seed in 0..6u64 {
            let g = CubeSubgraph::random_with_min_degree(d, 2, Seed::new(seed));
            assert!(g.min_degree() >= 4);
            let base = Vertex((seed * 11 % 64) as u32);
            let layers = rigid_layers(&g, base, 6).unwrap();
            for (k, layer) in layers.layers.iter().enumerate() {
                let expected: Vec<Vertex> = kth_shell(base, k as u32, d)
                    .unwrap()
                    .iter()
                    .filter(|&w| all_paths_present(&g, base, w))
                    .collect();
                assert_eq!(layer.as_slice(), expected.as_slice(), "seed {seed} layer {k}");
            }
        }
    }

    #[test]
    fn rigid_layers_simple_cases() {
        let d = dim(7);
        let full = CubeSubgraph::full(d);
        let layers = rigid_layers(&full, Vertex(9), 7).unwrap();
        for (k, l) in layers.layers.iter().enumerate() {
            assert_eq!(l.len() as u64, binomial(7, k as u64));
        }
        let mut g = full.clone();
        g.remove_edge(Vertex(9), 2);
        assert_eq!(rigid_layers(&g, Vertex(9), 1).unwrap().layers[1].len(), 6);
        assert!(rigid_layer_bound_holds(&rigid_layers(&g, Vertex(9), 4).unwrap(), 7, 1));
    }

    #[test]
    fn isometry_membership() {
        let d = dim(5);
        let chi = sample_colouring(d, &ColourDistribution::TwoPoint(0.5), Seed::new(4)).unwrap();
        let sigma = BijectionTable::random_automorphism(d, Seed::new(1));
        for r in 1..=3 {
            assert_eq!(isom_membership(&chi, &sigma, r).unwrap(), None);
        }
        let (a, b) = d
            .vertices()
            .flat_map(|a| d.vertices().map(move |b| (a, b)))
            .find(|&(a, b)| chi.get(a) != chi.get(b))
            .unwrap();
        let f = BijectionTable::identity(d).with_swap(a, b).unwrap();
        assert!(isom_membership(&chi, &f, 1).unwrap().is_some());
    }

    #[test]
    fn drift_of_automorphism_is_zero() {
        let d = dim(6);
        let chi = sample_colouring(d, &ColourDistribution::TwoPoint(0.5), Seed::new(2)).unwrap();
        for f in [BijectionTable::identity(d), BijectionTable::random_automorphism(d, Seed::new(8))] {
            for v in [Vertex(0), Vertex(33)] {
                match local_equiv_drift(&chi, &f, v, 1).unwrap() {
                    DriftVerdict::Drift { target, distance } => {
                        assert_eq!(target, v);
                        assert_eq!(distance, 0);
                    }
                    other => panic!("{other:?}"),
                }
            }
        }
    }

    #[test]
    fn classification_report_lines() {
        let f = BijectionTable::antipodal_odd(dim(4)).unwrap();
        let rep = classify(&f, 0, 2).unwrap();
        assert!(rep.local && !rep.automorphism);
        assert_eq!(rep.diagonal, Some(true));
        assert_eq!(rep.self_dual, Some(false));
        let text = rep.to_text();
        assert!(text.contains("diagonal true\n"));
        assert!(text.lines().all(|l| l.split(' ').count() == 2));
    }
}
