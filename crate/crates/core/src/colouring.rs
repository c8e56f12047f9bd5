//! Random colourings of `Q_n` and distances between colourings and balls.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cube::{CubeDim, Vertex};
use crate::error::{Error, Result};

pub type Colour = u32;

/// Per-vertex colour law. `TwoPoint(p)` gives colour 0 with probability `p`
/// and colour 1 with probability `1 − p`.
#[derive(Clone, Debug, PartialEq)]
pub enum ColourDistribution {
    TwoPoint(f64),
    Uniform(u32),
    Explicit(Vec<f64>),
}

impl ColourDistribution {
    pub fn validate(&self) -> Result<()> {
        match self {
            ColourDistribution::TwoPoint(p) => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(Error::domain(format!("two-point mass {p} outside (0,1]")));
                }
            }
            ColourDistribution::Uniform(q) => {
                if *q == 0 {
                    return Err(Error::domain("uniform palette must be nonempty"));
                }
            }
            ColourDistribution::Explicit(m) => {
                if m.is_empty() || m.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                    return Err(Error::domain("explicit masses must be finite and nonnegative"));
                }
                let total: f64 = m.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::domain(format!("explicit masses sum to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    pub fn palette_size(&self) -> u32 {
        match self {
            ColourDistribution::TwoPoint(_) => 2,
            ColourDistribution::Uniform(q) => *q,
            ColourDistribution::Explicit(m) => m.len() as u32,
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Colour {
        match self {
            ColourDistribution::TwoPoint(p) => {
                if rng.gen::<f64>() < *p {
                    0
                } else {
                    1
                }
            }
            ColourDistribution::Uniform(q) => rng.gen_range(0..*q),
            ColourDistribution::Explicit(m) => {
                let u = rng.gen::<f64>();
                let mut acc = 0.0;
                let mut last = 0;
                for (c, &x) in m.iter().enumerate() {
                    if x > 0.0 {
                        last = c;
                    }
                    acc += x;
                    if u < acc {
                        return c as Colour;
                    }
                }
                last as Colour
            }
        }
    }
}

/// Master seed. Trial `i` runs on [`Seed::for_trial`], a SplitMix64 mix of
/// `master + (i + 1)·φ` where `φ = 0x9E3779B97F4A7C15`; every draw then comes
/// from a ChaCha8 stream keyed by that 64-bit value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Seed {
    pub master: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    pub fn new(master: u64) -> Self {
        Seed { master }
    }

    pub fn for_trial(self, trial: u64) -> Seed {
        Seed {
            master: splitmix64(self.master.wrapping_add(trial.wrapping_add(1).wrapping_mul(GOLDEN))),
        }
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.master)
    }
}

/// A total map from `V(Q_n)` to colour ids `0..palette`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Colouring {
    dim: CubeDim,
    colours: Vec<Colour>,
    palette: u32,
}

impl Colouring {
    pub fn new(dim: CubeDim, colours: Vec<Colour>, palette: u32) -> Result<Self> {
        if colours.len() != dim.order() {
            return Err(Error::domain(format!(
                "colouring has {} entries, Q_{dim} has {}",
                colours.len(),
                dim.order()
            )));
        }
        if let Some(&bad) = colours.iter().find(|&&c| c >= palette) {
            return Err(Error::domain(format!("colour {bad} outside palette of size {palette}")));
        }
        Ok(Colouring { dim, colours, palette })
    }

    pub fn constant(dim: CubeDim, colour: Colour, palette: u32) -> Result<Self> {
        Colouring::new(dim, vec![colour; dim.order()], palette)
    }

    /// Two-colouring whose vertex `v` takes bit `v` of `bits` (`n ≤ 6`).
    pub fn from_bits(dim: CubeDim, bits: u64) -> Result<Self> {
        if dim.get() > 6 {
            return Err(Error::domain("bit-packed colourings need n ≤ 6"));
        }
        let colours = (0..dim.order()).map(|v| (bits >> v & 1) as Colour).collect();
        Colouring::new(dim, colours, 2)
    }

    /// Inverse of [`Colouring::from_bits`] for two-colourings with `n ≤ 6`.
    pub fn to_bits(&self) -> Option<u64> {
        if self.dim.get() > 6 || self.palette > 2 {
            return None;
        }
        Some(
            self.colours
                .iter()
                .enumerate()
                .fold(0u64, |acc, (v, &c)| acc | (c as u64) << v),
        )
    }

    #[inline]
    pub fn dim(&self) -> CubeDim {
        self.dim
    }

    #[inline]
    pub fn palette(&self) -> u32 {
        self.palette
    }

    #[inline]
    pub fn get(&self, v: Vertex) -> Colour {
        self.colours[v.index()]
    }

    #[inline]
    pub fn colours(&self) -> &[Colour] {
        &self.colours
    }

    pub fn colour_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.palette as usize];
        for &c in &self.colours {
            counts[c as usize] += 1;
        }
        counts
    }

    /// `χ_f`, defined by `χ_f(f(v)) = χ(v)`, for a vertex permutation `f`
    /// given as its forward table.
    pub fn relabel(&self, forward: &[u32]) -> Colouring {
        let mut out = vec![0; self.colours.len()];
        for (v, &fv) in forward.iter().enumerate() {
            out[fv as usize] = self.colours[v];
        }
        Colouring {
            dim: self.dim,
            colours: out,
            palette: self.palette,
        }
    }

    /// The colouring carried along the cube automorphism
    /// `x ↦ perm(x) ⊕ shift`, where `perm[i]` is the image of coordinate `i`.
    pub fn under_automorphism(&self, perm: &[u32], shift: Vertex) -> Colouring {
        let forward: Vec<u32> = self
            .dim
            .vertices()
            .map(|x| permute_bits(x.0, perm) ^ shift.0)
            .collect();
        self.relabel(&forward)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.colours.len() * 2 + 16);
        let _ = writeln!(s, "cube {} {}", self.dim, self.palette);
        for (i, c) in self.colours.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{c}");
        }
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, "empty colouring file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "cube" {
            return Err(Error::parse(1, "expected header `cube <n> <q>`"));
        }
        let n: u32 = fields[1].parse().map_err(|_| Error::parse(1, "bad dimension"))?;
        let q: u32 = fields[2].parse().map_err(|_| Error::parse(1, "bad palette size"))?;
        let dim = CubeDim::new(n)?;
        let mut colours = Vec::with_capacity(dim.order());
        for (offset, line) in lines.enumerate() {
            for tok in line.split_whitespace() {
                colours.push(
                    tok.parse::<Colour>()
                        .map_err(|_| Error::parse(offset + 2, format!("bad colour `{tok}`")))?,
                );
            }
        }
        Colouring::new(dim, colours, q)
    }
}

/// Applies a coordinate permutation: bit `i` of `x` moves to bit `perm[i]`.
pub fn permute_bits(x: u32, perm: &[u32]) -> u32 {
    let mut out = 0;
    let mut rest = x;
    while rest != 0 {
        let i = rest.trailing_zeros();
        out |= 1 << perm[i as usize];
        rest &= rest - 1;
    }
    out
}

/// `2^n` independent draws from `dist`, reproducible from `seed`.
pub fn sample_colouring(dim: CubeDim, dist: &ColourDistribution, seed: Seed) -> Result<Colouring> {
    dist.validate()?;
    let mut rng = seed.rng();
    let colours = (0..dim.order()).map(|_| dist.draw(&mut rng)).collect();
    Colouring::new(dim, colours, dist.palette_size())
}

fn same_dim(a: &Colouring, b: &Colouring) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::domain(format!(
            "dimension mismatch: {} vs {}",
            a.dim, b.dim
        )));
    }
    Ok(())
}

/// `D(χ, λ)`: number of vertices coloured differently.
pub fn raw_distance(a: &Colouring, b: &Colouring) -> Result<u64> {
    same_dim(a, b)?;
    Ok(a.colours
        .iter()
        .zip(&b.colours)
        .filter(|(x, y)| x != y)
        .count() as u64)
}

/// Size of the multiset intersection of two sorted slices.
pub(crate) fn sorted_overlap(a: &[Colour], b: &[Colour]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    common
}

fn sorted_neighbour_colours(chi: &Colouring, v: Vertex) -> Vec<Colour> {
    let mut cs: Vec<Colour> = (0..chi.dim.get()).map(|i| chi.get(v.flip(i))).collect();
    cs.sort_unstable();
    cs
}

/// `d(χ^{(1)}(u), χ^{(1)}(v))`. For `n ≥ 2` every isomorphism of 1-balls
/// fixes the centre, so the minimum over neighbour bijections is the
/// centre mismatch plus `n` minus the colour-multiset overlap.
pub fn ball_distance_r1(chi: &Colouring, u: Vertex, v: Vertex) -> Result<u32> {
    chi.dim.check(u)?;
    chi.dim.check(v)?;
    if chi.dim.get() < 2 {
        return Err(Error::domain("1-ball distance needs n ≥ 2"));
    }
    let n = chi.dim.get() as usize;
    let overlap = sorted_overlap(
        &sorted_neighbour_colours(chi, u),
        &sorted_neighbour_colours(chi, v),
    );
    Ok((chi.get(u) != chi.get(v)) as u32 + (n - overlap) as u32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallDistanceMode {
    Exact,
    LowerBound,
}

/// Largest dimension for exact 2-ball distances (`8! = 40320` permutations).
pub const EXACT_R2_MAX_DIM: u32 = 8;

/// Centred 2-ball colours in coordinate form.
struct Ball2 {
    n: usize,
    centre: Colour,
    singles: Vec<Colour>,
    pairs: Vec<Colour>,
}

impl Ball2 {
    fn new(chi: &Colouring, v: Vertex) -> Self {
        let n = chi.dim.get() as usize;
        let singles = (0..n as u32).map(|i| chi.get(v.flip(i))).collect();
        let mut pairs = vec![0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let c = chi.get(v.flip(i as u32).flip(j as u32));
                pairs[i * n + j] = c;
                pairs[j * n + i] = c;
            }
        }
        Ball2 {
            n,
            centre: chi.get(v),
            singles,
            pairs,
        }
    }

    #[inline]
    fn pair(&self, i: usize, j: usize) -> Colour {
        self.pairs[i * self.n + j]
    }

    fn profile(&self, i: usize) -> Vec<Colour> {
        let mut p: Vec<Colour> = (0..self.n).filter(|&j| j != i).map(|j| self.pair(i, j)).collect();
        p.sort_unstable();
        p
    }

    fn all_pairs_sorted(&self) -> Vec<Colour> {
        let mut p = Vec::with_capacity(self.n * (self.n.saturating_sub(1)) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                p.push(self.pair(i, j));
            }
        }
        p.sort_unstable();
        p
    }

    fn sorted_singles(&self) -> Vec<Colour> {
        let mut s = self.singles.clone();
        s.sort_unstable();
        s
    }
}

/// Distance between coloured 2-balls minimised over centre-fixing
/// isomorphisms, i.e. coordinate permutations.
///
/// `Exact` runs branch and bound over all `n!` permutations and is limited to
/// `n ≤ 8`. `LowerBound` adds three independent bounds: centre mismatch, the
/// colour-multiset bound on shell 1, and on shell 2 the larger of the
/// multiset bound and half an optimal assignment between per-coordinate pair
/// profiles (each pair lies in two profiles).
pub fn ball_distance_r2(chi: &Colouring, u: Vertex, v: Vertex, mode: BallDistanceMode) -> Result<u32> {
    chi.dim.check(u)?;
    chi.dim.check(v)?;
    let a = Ball2::new(chi, u);
    let b = Ball2::new(chi, v);
    match mode {
        BallDistanceMode::Exact => {
            if chi.dim.get() > EXACT_R2_MAX_DIM {
                return Err(Error::budget(format!(
                    "exact 2-ball distance limited to n ≤ {EXACT_R2_MAX_DIM}, got {}",
                    chi.dim
                )));
            }
            Ok(exact_r2(&a, &b))
        }
        BallDistanceMode::LowerBound => Ok(lower_bound_r2(&a, &b)),
    }
}

fn lower_bound_r2(a: &Ball2, b: &Ball2) -> u32 {
    let n = a.n;
    let centre = (a.centre != b.centre) as usize;
    let shell1 = n - sorted_overlap(&a.sorted_singles(), &b.sorted_singles());
    let total_pairs = n * n.saturating_sub(1) / 2;
    let multiset2 = total_pairs - sorted_overlap(&a.all_pairs_sorted(), &b.all_pairs_sorted());
    let pa: Vec<Vec<Colour>> = (0..n).map(|i| a.profile(i)).collect();
    let pb: Vec<Vec<Colour>> = (0..n).map(|i| b.profile(i)).collect();
    let cost: Vec<Vec<i64>> = pa
        .iter()
        .map(|x| {
            pb.iter()
                .map(|y| (n - 1 - sorted_overlap(x, y)) as i64)
                .collect()
        })
        .collect();
    let assign = min_cost_assignment(&cost) as usize;
    let shell2 = multiset2.max(assign.div_ceil(2));
    (centre + shell1 + shell2) as u32
}

fn exact_r2(a: &Ball2, b: &Ball2) -> u32 {
    let n = a.n;
    let identity: Vec<usize> = (0..n).collect();
    let mut best = r2_cost(a, b, &identity);
    let mut perm = vec![0usize; n];
    let mut used = vec![false; n];
    let base = (a.centre != b.centre) as u32;
    exact_r2_search(a, b, 0, base, &mut perm, &mut used, &mut best);
    best
}

fn r2_cost(a: &Ball2, b: &Ball2, perm: &[usize]) -> u32 {
    let n = a.n;
    let mut cost = (a.centre != b.centre) as u32;
    for i in 0..n {
        cost += (a.singles[i] != b.singles[perm[i]]) as u32;
        for j in (i + 1)..n {
            cost += (a.pair(i, j) != b.pair(perm[i], perm[j])) as u32;
        }
    }
    cost
}

fn exact_r2_search(
    a: &Ball2,
    b: &Ball2,
    k: usize,
    cost: u32,
    perm: &mut [usize],
    used: &mut [bool],
    best: &mut u32,
) {
    if cost >= *best {
        return;
    }
    let n = a.n;
    if k == n {
        *best = cost;
        return;
    }
    // Remaining singles must be matched somehow: multiset bound.
    let mut rest_a: Vec<Colour> = a.singles[k..].to_vec();
    let mut rest_b: Vec<Colour> = (0..n).filter(|&j| !used[j]).map(|j| b.singles[j]).collect();
    rest_a.sort_unstable();
    rest_b.sort_unstable();
    let bound = (rest_a.len() - sorted_overlap(&rest_a, &rest_b)) as u32;
    if cost + bound >= *best {
        return;
    }
    for j in 0..n {
        if used[j] {
            continue;
        }
        let mut step = (a.singles[k] != b.singles[j]) as u32;
        for l in 0..k {
            step += (a.pair(l, k) != b.pair(perm[l], j)) as u32;
        }
        perm[k] = j;
        used[j] = true;
        exact_r2_search(a, b, k + 1, cost + step, perm, used, best);
        used[j] = false;
    }
}

/// Minimum-cost perfect matching on a square matrix (Hungarian method with
/// potentials, `O(n^3)`).
pub(crate) fn min_cost_assignment(cost: &[Vec<i64>]) -> i64 {
    let n = cost.len();
    if n == 0 {
        return 0;
    }
    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut matched = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        matched[0] = row;
        let mut col0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = matched[col0];
            let mut delta = INF;
            let mut col1 = 0;
            for col in 1..=n {
                if !used[col] {
                    let cur = cost[r0 - 1][col - 1] - u[r0] - v[col];
                    if cur < minv[col] {
                        minv[col] = cur;
                        way[col] = col0;
                    }
                    if minv[col] < delta {
                        delta = minv[col];
                        col1 = col;
                    }
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[matched[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if matched[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            matched[col0] = matched[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|col| cost[matched[col] - 1][col - 1]).sum()
}

/// Merges colours into two classes: colour `c` becomes `partition[c]`.
pub fn coarsen(chi: &Colouring, partition: &[u8]) -> Result<Colouring> {
    if partition.len() < chi.palette as usize {
        return Err(Error::domain(format!(
            "partition covers {} colours, palette has {}",
            partition.len(),
            chi.palette
        )));
    }
    if let Some(bad) = partition.iter().find(|&&x| x > 1) {
        return Err(Error::domain(format!("partition class {bad} is not 0 or 1")));
    }
    let colours = chi.colours.iter().map(|&c| partition[c as usize] as Colour).collect();
    Colouring::new(chi.dim, colours, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dim(n: u32) -> CubeDim {
        CubeDim::new(n).unwrap()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn brute_r1(chi: &Colouring, u: Vertex, v: Vertex) -> u32 {
        let n = chi.dim().get() as usize;
        permutations(n)
            .iter()
            .map(|p| {
                (chi.get(u) != chi.get(v)) as u32
                    + (0..n)
                        .filter(|&i| chi.get(u.flip(i as u32)) != chi.get(v.flip(p[i] as u32)))
                        .count() as u32
            })
            .min()
            .unwrap()
    }

    fn brute_r2(chi: &Colouring, u: Vertex, v: Vertex) -> u32 {
        let n = chi.dim().get() as usize;
        let perm_vertex = |x: u32, p: &[usize]| -> u32 {
            (0..n).filter(|&i| x >> i & 1 == 1).fold(0, |acc, i| acc | 1 << p[i])
        };
        permutations(n)
            .iter()
            .map(|p| {
                (0u32..1 << n)
                    .filter(|m| m.count_ones() <= 2)
                    .filter(|&m| chi.get(Vertex(u.0 ^ m)) != chi.get(Vertex(v.0 ^ perm_vertex(m, p))))
                    .count() as u32
            })
            .min()
            .unwrap()
    }

    #[test]
    fn degenerate_distributions() {
        let d = dim(6);
        let all0 = sample_colouring(d, &ColourDistribution::TwoPoint(1.0), Seed::new(3)).unwrap();
        assert!(all0.colours().iter().all(|&c| c == 0));
        let q1 = sample_colouring(d, &ColourDistribution::Uniform(1), Seed::new(3)).unwrap();
        assert!(q1.colours().iter().all(|&c| c == 0));
        assert!(ColourDistribution::TwoPoint(0.0).validate().is_err());
        assert!(ColourDistribution::Explicit(vec![0.5, 0.4]).validate().is_err());
        assert!(ColourDistribution::Explicit(vec![0.25, 0.75]).validate().is_ok());
    }

    #[test]
    fn sampling_is_reproducible_and_calibrated() {
        let d = dim(14);
        let dist = ColourDistribution::TwoPoint(0.3);
        let a = sample_colouring(d, &dist, Seed::new(11)).unwrap();
        let b = sample_colouring(d, &dist, Seed::new(11)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_colouring(d, &dist, Seed::new(12)).unwrap());
        let n = d.order() as f64;
        let zeros = a.colour_counts()[0] as f64;
        let sigma = (n * 0.3 * 0.7).sqrt();
        assert!((zeros - 0.3 * n).abs() < 3.0 * sigma, "zeros = {zeros}");
    }

    #[test]
    fn explicit_distribution_frequencies() {
        let d = dim(14);
        let dist = ColourDistribution::Explicit(vec![0.5, 0.0, 0.25, 0.25]);
        let chi = sample_colouring(d, &dist, Seed::new(5)).unwrap();
        let counts = chi.colour_counts();
        assert_eq!(counts[1], 0);
        let n = d.order() as f64;
        for (c, m) in [(0usize, 0.5), (2, 0.25), (3, 0.25)] {
            let sigma = (n * m * (1.0 - m)).sqrt();
            assert!((counts[c] as f64 - m * n).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let s = Seed::new(42);
        let subs: std::collections::HashSet<u64> = (0..1000).map(|i| s.for_trial(i).master).collect();
        assert_eq!(subs.len(), 1000);
        assert_eq!(s.for_trial(7), Seed::new(42).for_trial(7));
    }

    #[test]
    fn raw_distance_examples() {
        let d = dim(5);
        let zero = Colouring::constant(d, 0, 2).unwrap();
        let one = Colouring::constant(d, 1, 2).unwrap();
        assert_eq!(raw_distance(&zero, &zero).unwrap(), 0);
        assert_eq!(raw_distance(&zero, &one).unwrap(), 32);
        let mut cs = zero.colours().to_vec();
        cs[7] = 1;
        let flipped = Colouring::new(d, cs, 2).unwrap();
        assert_eq!(raw_distance(&zero, &flipped).unwrap(), 1);
        let other = Colouring::constant(dim(4), 0, 2).unwrap();
        assert!(raw_distance(&zero, &other).is_err());
    }

    #[test]
    fn r1_distance_examples() {
        // n = 3: vertex 0 has neighbours 1,2,4 and vertex 7 has 6,5,3.
        let d = dim(3);
        let chi = Colouring::new(d, vec![0, 0, 1, 2, 1, 0, 2, 0], 3).unwrap();
        // Neighbour colours of 0: {0,1,1}; of 7: {2,0,2}.
        assert_eq!(ball_distance_r1(&chi, Vertex(0), Vertex(7)).unwrap(), 2);
        assert_eq!(ball_distance_r1(&chi, Vertex(0), Vertex(0)).unwrap(), 0);
        // Disjoint palettes around equal centres give n.
        let chi = Colouring::new(d, vec![0, 1, 1, 2, 1, 2, 2, 0], 3).unwrap();
        assert_eq!(ball_distance_r1(&chi, Vertex(0), Vertex(7)).unwrap(), 3);
    }

    #[test]
    fn r1_closed_form_matches_permutation_minimum() {
        for seed in 0..40 {
            for q in [2, 3, 5] {
                let chi = sample_colouring(dim(4), &ColourDistribution::Uniform(q), Seed::new(seed)).unwrap();
                for u in 0..16 {
                    for v in 0..16 {
                        assert_eq!(
                            ball_distance_r1(&chi, Vertex(u), Vertex(v)).unwrap(),
                            brute_r1(&chi, Vertex(u), Vertex(v))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn r2_exact_matches_brute_force_and_bounds_it() {
        for seed in 0..200u64 {
            let chi = sample_colouring(dim(5), &ColourDistribution::TwoPoint(0.5), Seed::new(seed)).unwrap();
            let u = Vertex((seed % 32) as u32);
            let v = Vertex(((seed * 7 + 3) % 32) as u32);
            let exact = ball_distance_r2(&chi, u, v, BallDistanceMode::Exact).unwrap();
            let lb = ball_distance_r2(&chi, u, v, BallDistanceMode::LowerBound).unwrap();
            assert!(lb <= exact, "seed {seed}: lb {lb} > exact {exact}");
            if seed < 40 {
                assert_eq!(exact, brute_r2(&chi, u, v), "seed {seed}");
            }
        }
    }

    #[test]
    fn r2_identical_balls() {
        let chi = sample_colouring(dim(6), &ColourDistribution::TwoPoint(0.5), Seed::new(9)).unwrap();
        for mode in [BallDistanceMode::Exact, BallDistanceMode::LowerBound] {
            assert_eq!(ball_distance_r2(&chi, Vertex(5), Vertex(5), mode).unwrap(), 0);
        }
        let big = sample_colouring(dim(9), &ColourDistribution::TwoPoint(0.5), Seed::new(9)).unwrap();
        assert!(matches!(
            ball_distance_r2(&big, Vertex(0), Vertex(1), BallDistanceMode::Exact),
            Err(Error::Budget(_))
        ));
        assert!(ball_distance_r2(&big, Vertex(0), Vertex(1), BallDistanceMode::LowerBound).is_ok());
    }

    #[test]
    fn hungarian_small_cases() {
        let cost = vec![vec![4, 1, 3], vec![2, 0, 5], vec![3, 2, 2]];
        assert_eq!(min_cost_assignment(&cost), 5);
        let cost = vec![vec![7]];
        assert_eq!(min_cost_assignment(&cost), 7);
    }

    #[test]
    fn coarsen_examples() {
        let d = dim(8);
        let two = sample_colouring(d, &ColourDistribution::TwoPoint(0.5), Seed::new(1)).unwrap();
        assert_eq!(coarsen(&two, &[0, 1]).unwrap(), two);
        assert!(coarsen(&two, &[0, 0]).unwrap().colours().iter().all(|&c| c == 0));
        let four = sample_colouring(d, &ColourDistribution::Uniform(4), Seed::new(2)).unwrap();
        let split = coarsen(&four, &[0, 0, 1, 1]).unwrap();
        let c4 = four.colour_counts();
        let c2 = split.colour_counts();
        assert_eq!(c2[0], c4[0] + c4[1]);
        assert_eq!(c2[1], c4[2] + c4[3]);
        assert!(coarsen(&four, &[0, 1]).is_err());
        assert!(coarsen(&two, &[0, 2]).is_err());
    }

    #[test]
    fn text_format_round_trip() {
        let chi = sample_colouring(dim(3), &ColourDistribution::Uniform(3), Seed::new(4)).unwrap();
        let text = chi.to_text();
        assert!(text.starts_with("cube 3 3\n"));
        assert_eq!(text.lines().nth(1).unwrap().split(' ').count(), 8);
        let back = Colouring::from_text(&text).unwrap();
        assert_eq!(back, chi);
        assert_eq!(back.to_text(), text);
        assert!(Colouring::from_text("cube 3 2\n0 1 0").is_err());
        assert!(Colouring::from_text("cube 2 2\n0 1 0 5").is_err());
        assert!(Colouring::from_text("balls 2 2\n0 1 0 1").is_err());
    }

    #[test]
    fn automorphism_relabel_preserves_counts() {
        let chi = sample_colouring(dim(5), &ColourDistribution::Uniform(3), Seed::new(8)).unwrap();
        let img = chi.under_automorphism(&[4, 2, 0, 1, 3], Vertex(13));
        assert_eq!(img.colour_counts(), chi.colour_counts());
        // x ↦ perm(x) ⊕ shift sends 0 to the shift.
        assert_eq!(img.get(Vertex(13)), chi.get(Vertex(0)));
    }

    proptest! {
        #[test]
        fn raw_distance_is_a_metric(s1 in 0u64..1000, s2 in 0u64..1000, s3 in 0u64..1000) {
            let d = dim(6);
            let dist = ColourDistribution::Uniform(3);
            let a = sample_colouring(d, &dist, Seed::new(s1)).unwrap();
            let b = sample_colouring(d, &dist, Seed::new(s2)).unwrap();
            let c = sample_colouring(d, &dist, Seed::new(s3)).unwrap();
            let ab = raw_distance(&a, &b).unwrap();
            prop_assert_eq!(ab, raw_distance(&b, &a).unwrap());
            prop_assert!(raw_distance(&a, &c).unwrap() <= ab + raw_distance(&b, &c).unwrap());
            prop_assert_eq!(ab == 0, a == b);
        }

        #[test]
        fn coarsening_never_increases_distance(s1 in 0u64..1000, s2 in 0u64..1000, split in 0u8..16) {
            let d = dim(6);
            let dist = ColourDistribution::Uniform(4);
            let a = sample_colouring(d, &dist, Seed::new(s1)).unwrap();
            let b = sample_colouring(d, &dist, Seed::new(s2)).unwrap();
            let part: Vec<u8> = (0..4).map(|i| split >> i & 1).collect();
            let ca = coarsen(&a, &part).unwrap();
            let cb = coarsen(&b, &part).unwrap();
            prop_assert!(raw_distance(&ca, &cb).unwrap() <= raw_distance(&a, &b).unwrap());
        }
    }
}
