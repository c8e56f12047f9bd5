//! Canonical signatures of coloured balls.
//!
//! A coloured `r`-ball around `v` is stored by offset: the subset `S ⊆ [n]`
//! with `|S| ≤ r` stands for the vertex `v + Σ_{i∈S} e_i`. Two centred balls
//! are isomorphic exactly when some permutation of the coordinates carries
//! one offset colouring onto the other, so a canonical form under `S_n` is a
//! complete isomorphism invariant.
//!
//! Signature bytes are `[r, n, w]` followed by every colour as a `w`-byte
//! big-endian integer (`w ∈ {1,2,4}` is the width of the largest colour in
//! the ball). Colours are listed in block order: the centre, then for each
//! coordinate `k` in canonical order the sets whose largest element is `k`
//! (`{k}`, then `{j,k}` for `j < k`, then `{i,j,k}` for `i < j < k`).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::colouring::{Colour, Colouring};
use crate::cube::{CubeDim, Vertex};
use crate::error::{Error, Result};

pub const MAX_RADIUS: u32 = 3;
/// Dimension caps for canonical forms of radius 2 and 3.
pub const R2_MAX_DIM: u32 = 16;
pub const R3_MAX_DIM: u32 = 12;
/// Search-tree nodes allowed for a single canonical form.
pub const CANON_NODE_BUDGET: usize = 200_000;

/// A coloured ball in offset coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallView {
    centre: Vertex,
    n: usize,
    radius: u32,
    centre_colour: Colour,
    singles: Vec<Colour>,
    pairs: Vec<Colour>,
    triples: Vec<Colour>,
}

impl BallView {
    fn blank(n: usize, radius: u32, centre: Vertex) -> Self {
        BallView {
            centre,
            n,
            radius,
            centre_colour: 0,
            singles: vec![0; n],
            pairs: if radius >= 2 { vec![0; n * n] } else { Vec::new() },
            triples: if radius >= 3 { vec![0; n * n * n] } else { Vec::new() },
        }
    }

    fn check_radius(radius: u32) -> Result<()> {
        if radius == 0 || radius > MAX_RADIUS {
            return Err(Error::domain(format!("ball radius {radius} outside 1..={MAX_RADIUS}")));
        }
        Ok(())
    }

    /// `χ^{(r)}(v)`.
    pub fn from_colouring(chi: &Colouring, centre: Vertex, radius: u32) -> Result<Self> {
        Self::check_radius(radius)?;
        chi.dim().check(centre)?;
        let n = chi.dim().get() as usize;
        let mut ball = BallView::blank(n, radius, centre);
        ball.centre_colour = chi.get(centre);
        for i in 0..n {
            let vi = centre.flip(i as u32);
            ball.singles[i] = chi.get(vi);
            if radius < 2 {
                continue;
            }
            for j in (i + 1)..n {
                let vij = vi.flip(j as u32);
                ball.set_pair(i, j, chi.get(vij));
                if radius < 3 {
                    continue;
                }
                for k in (j + 1)..n {
                    ball.set_triple(i, j, k, chi.get(vij.flip(k as u32)));
                }
            }
        }
        Ok(ball)
    }

    /// Builds a ball from `(offset mask, colour)` pairs. The offsets must be
    /// exactly the subsets of `[n]` of size at most `radius`.
    pub fn from_offsets<I>(dim: CubeDim, radius: u32, centre: Vertex, offsets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, Colour)>,
    {
        Self::check_radius(radius)?;
        let n = dim.get() as usize;
        let mut ball = BallView::blank(n, radius, centre);
        let mut seen = std::collections::HashSet::new();
        for (mask, c) in offsets {
            if (mask as u64) >= 1u64 << n || mask.count_ones() > radius {
                return Err(Error::domain(format!("offset {mask:#b} is not inside B_{radius}")));
            }
            if !seen.insert(mask) {
                return Err(Error::domain(format!("offset {mask:#b} given twice")));
            }
            let bits: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            match bits.as_slice() {
                [] => ball.centre_colour = c,
                [i] => ball.singles[*i] = c,
                [i, j] => ball.set_pair(*i, *j, c),
                [i, j, k] => ball.set_triple(*i, *j, *k, c),
                _ => unreachable!(),
            }
        }
        let expected: u64 = (0..=radius.min(n as u32))
            .map(|k| crate::cube::binomial(n as u64, k as u64))
            .sum();
        if seen.len() as u64 != expected {
            return Err(Error::domain(format!(
                "ball has {} offsets, B_{radius} in Q_{n} has {expected}",
                seen.len()
            )));
        }
        Ok(ball)
    }

    #[inline]
    pub fn centre(&self) -> Vertex {
        self.centre
    }

    #[inline]
    pub fn radius(&self) -> u32 {
        self.radius
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn centre_colour(&self) -> Colour {
        self.centre_colour
    }

    #[inline]
    pub fn single(&self, i: usize) -> Colour {
        self.singles[i]
    }

    #[inline]
    pub fn pair(&self, i: usize, j: usize) -> Colour {
        self.pairs[i * self.n + j]
    }

    #[inline]
    pub fn triple(&self, i: usize, j: usize, k: usize) -> Colour {
        self.triples[(i * self.n + j) * self.n + k]
    }

    fn set_pair(&mut self, i: usize, j: usize, c: Colour) {
        let n = self.n;
        self.pairs[i * n + j] = c;
        self.pairs[j * n + i] = c;
    }

    fn set_triple(&mut self, i: usize, j: usize, k: usize, c: Colour) {
        let n = self.n;
        for (a, b, d) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
            self.triples[(a * n + b) * n + d] = c;
        }
    }

    /// Colour at an offset mask, if the offset lies in the ball.
    pub fn colour_of(&self, mask: u32) -> Option<Colour> {
        if (mask as u64) >= 1u64 << self.n || mask.count_ones() > self.radius {
            return None;
        }
        let bits: Vec<usize> = (0..self.n).filter(|&i| mask >> i & 1 == 1).collect();
        Some(match bits.as_slice() {
            [] => self.centre_colour,
            [i] => self.single(*i),
            [i, j] => self.pair(*i, *j),
            [i, j, k] => self.triple(*i, *j, *k),
            _ => unreachable!(),
        })
    }

    /// All `(offset mask, colour)` pairs in block order.
    pub fn offsets(&self) -> Vec<(u32, Colour)> {
        let mut out = vec![(0, self.centre_colour)];
        for k in 0..self.n {
            out.push((1 << k, self.single(k)));
            if self.radius >= 2 {
                for j in 0..k {
                    out.push((1 << j | 1 << k, self.pair(j, k)));
                }
            }
            if self.radius >= 3 {
                for j in 0..k {
                    for i in 0..j {
                        out.push((1 << i | 1 << j | 1 << k, self.triple(i, j, k)));
                    }
                }
            }
        }
        out
    }

    /// Relabels coordinates: offset `S` moves to `perm(S)`.
    pub fn permuted(&self, perm: &[usize]) -> BallView {
        let mut out = BallView::blank(self.n, self.radius, self.centre);
        out.centre_colour = self.centre_colour;
        for i in 0..self.n {
            out.singles[perm[i]] = self.single(i);
            if self.radius >= 2 {
                for j in (i + 1)..self.n {
                    out.set_pair(perm[i], perm[j], self.pair(i, j));
                    if self.radius >= 3 {
                        for k in (j + 1)..self.n {
                            out.set_triple(perm[i], perm[j], perm[k], self.triple(i, j, k));
                        }
                    }
                }
            }
        }
        out
    }

    /// The concentric ball of smaller radius.
    pub fn restrict(&self, radius: u32) -> Result<BallView> {
        Self::check_radius(radius)?;
        if radius > self.radius {
            return Err(Error::domain("cannot restrict to a larger radius"));
        }
        let mut out = self.clone();
        out.radius = radius;
        if radius < 3 {
            out.triples.clear();
        }
        if radius < 2 {
            out.pairs.clear();
        }
        Ok(out)
    }

    /// The ball of radius `r − 1` around the neighbour `centre + e_i`, which
    /// sits inside this ball. Its offsets are taken relative to the neighbour.
    pub fn neighbour_ball(&self, i: usize) -> Result<BallView> {
        if self.radius < 2 {
            return Err(Error::domain("neighbour balls need radius at least 2"));
        }
        let radius = self.radius - 1;
        let n = self.n;
        let mut out = BallView::blank(n, radius, self.centre.flip(i as u32));
        out.centre_colour = self.single(i);
        for j in 0..n {
            out.singles[j] = if j == i { self.centre_colour } else { self.pair(i, j) };
            if radius < 2 {
                continue;
            }
            for k in (j + 1)..n {
                let c = if j == i {
                    self.single(k)
                } else if k == i {
                    self.single(j)
                } else {
                    self.triple(i, j, k)
                };
                out.set_pair(j, k, c);
            }
        }
        Ok(out)
    }

    fn check_budget(&self) -> Result<()> {
        let n = self.n as u32;
        let cap = match self.radius {
            1 => crate::cube::MAX_DIM,
            2 => R2_MAX_DIM,
            _ => R3_MAX_DIM,
        };
        if n > cap {
            return Err(Error::budget(format!(
                "canonical form of radius {} limited to n ≤ {cap}, got {n}",
                self.radius
            )));
        }
        Ok(())
    }
}

/// Canonical bytes of a coloured ball; equal exactly for isomorphic balls.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BallSignature {
    bytes: Vec<u8>,
}

impl BallSignature {
    fn encode(radius: u32, n: usize, colours: &[Colour]) -> Self {
        let max = colours.iter().copied().max().unwrap_or(0);
        let width: u8 = if max <= 0xff {
            1
        } else if max <= 0xffff {
            2
        } else {
            4
        };
        let mut bytes = Vec::with_capacity(3 + colours.len() * width as usize);
        bytes.extend_from_slice(&[radius as u8, n as u8, width]);
        for &c in colours {
            bytes.extend_from_slice(&c.to_be_bytes()[4 - width as usize..]);
        }
        BallSignature { bytes }
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        let sig = BallSignature { bytes };
        sig.decode()?;
        Ok(sig)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::domain(format!("bad signature hex: {e}")))?;
        BallSignature::from_bytes(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    pub fn radius(&self) -> u32 {
        self.bytes[0] as u32
    }

    pub fn n(&self) -> u32 {
        self.bytes[1] as u32
    }

    /// The ball in canonical coordinates, centred at vertex 0.
    pub fn decode(&self) -> Result<BallView> {
        if self.bytes.len() < 3 {
            return Err(Error::domain("signature shorter than its header"));
        }
        let (radius, n, width) = (self.bytes[0] as u32, self.bytes[1] as usize, self.bytes[2] as usize);
        BallView::check_radius(radius)?;
        if ![1, 2, 4].contains(&width) || n == 0 || n > crate::cube::MAX_DIM as usize {
            return Err(Error::domain("malformed signature header"));
        }
        let body = &self.bytes[3..];
        if !body.len().is_multiple_of(width) {
            return Err(Error::domain("signature body not a whole number of colours"));
        }
        let colours: Vec<Colour> = body
            .chunks(width)
            .map(|ch| ch.iter().fold(0u32, |acc, &b| acc << 8 | b as u32))
            .collect();
        let dim = CubeDim::new(n as u32)?;
        let template = BallView::blank(n, radius, Vertex(0));
        let masks: Vec<u32> = template.offsets().into_iter().map(|(m, _)| m).collect();
        if masks.len() != colours.len() {
            return Err(Error::domain(format!(
                "signature carries {} colours, B_{radius} in Q_{n} needs {}",
                colours.len(),
                masks.len()
            )));
        }
        BallView::from_offsets(dim, radius, Vertex(0), masks.into_iter().zip(colours))
    }
}

/// Signature of a 1-ball: centre colour then sorted neighbour colours. The
/// bytes agree with [`signature_general`] on radius-1 balls.
pub fn signature_r1(ball: &BallView) -> Result<BallSignature> {
    if ball.radius != 1 {
        return Err(Error::domain(format!("expected a 1-ball, got radius {}", ball.radius)));
    }
    let mut colours = Vec::with_capacity(ball.n + 1);
    colours.push(ball.centre_colour);
    let mut s = ball.singles.clone();
    s.sort_unstable();
    colours.extend(s);
    Ok(BallSignature::encode(1, ball.n, &colours))
}

/// Canonical signature under coordinate permutations.
pub fn signature_general(ball: &BallView) -> Result<BallSignature> {
    Ok(canonical_form(ball)?.0)
}

/// Canonical signature together with the canonical coordinate order
/// `order`, where canonical coordinate `k` is original coordinate `order[k]`.
pub fn canonical_form(ball: &BallView) -> Result<(BallSignature, Vec<usize>)> {
    ball.check_budget()?;
    let mut search = CanonSearch {
        ball,
        best: None,
        best_order: Vec::new(),
        nodes: 0,
    };
    let start = vec![(0..ball.n).collect::<Vec<usize>>()];
    search.descend(start)?;
    let best = search.best.expect("search reaches at least one leaf");
    Ok((BallSignature::encode(ball.radius, ball.n, &best), search.best_order))
}

struct CanonSearch<'a> {
    ball: &'a BallView,
    best: Option<Vec<Colour>>,
    best_order: Vec<usize>,
    nodes: usize,
}

impl CanonSearch<'_> {
    fn descend(&mut self, mut cells: Vec<Vec<usize>>) -> Result<()> {
        self.nodes += 1;
        if self.nodes > CANON_NODE_BUDGET {
            return Err(Error::budget(format!(
                "canonical search exceeded {CANON_NODE_BUDGET} nodes (n = {}, radius {}, {} cells at abort)",
                self.ball.n,
                self.ball.radius,
                cells.len()
            )));
        }
        refine(self.ball, &mut cells);
        let fixed = cells.iter().take_while(|c| c.len() == 1).count();
        let order: Vec<usize> = cells[..fixed].iter().map(|c| c[0]).collect();
        let prefix = encode_prefix(self.ball, &order);
        if let Some(best) = &self.best {
            if prefix.as_slice() > &best[..prefix.len()] {
                return Ok(());
            }
        }
        if fixed == cells.len() {
            let better = match &self.best {
                None => true,
                Some(best) => prefix < *best,
            };
            if better {
                self.best = Some(prefix);
                self.best_order = order;
            }
            return Ok(());
        }
        let target = fixed;
        let mut reps: Vec<usize> = Vec::new();
        for &x in &cells[target] {
            if reps.iter().all(|&y| !transposition_is_automorphism(self.ball, x, y)) {
                reps.push(x);
            }
        }
        for x in reps {
            let mut child = cells.clone();
            let rest: Vec<usize> = child[target].iter().copied().filter(|&y| y != x).collect();
            child[target] = vec![x];
            child.insert(target + 1, rest);
            self.descend(child)?;
        }
        Ok(())
    }
}

/// Colours of the blocks for the fixed coordinates `order[0..m]`.
fn encode_prefix(ball: &BallView, order: &[usize]) -> Vec<Colour> {
    let mut out = Vec::with_capacity(1 + order.len() * (1 + order.len()));
    out.push(ball.centre_colour);
    for (k, &ck) in order.iter().enumerate() {
        out.push(ball.single(ck));
        if ball.radius >= 2 {
            for &cj in &order[..k] {
                out.push(ball.pair(cj, ck));
            }
        }
        if ball.radius >= 3 {
            for j in 0..k {
                for i in 0..j {
                    out.push(ball.triple(order[i], order[j], ck));
                }
            }
        }
    }
    out
}

/// Whether swapping coordinates `x` and `y` maps the ball onto itself.
pub(crate) fn transposition_is_automorphism(ball: &BallView, x: usize, y: usize) -> bool {
    if ball.single(x) != ball.single(y) {
        return false;
    }
    if ball.radius < 2 {
        return true;
    }
    let n = ball.n;
    for z in (0..n).filter(|&z| z != x && z != y) {
        if ball.pair(x, z) != ball.pair(y, z) {
            return false;
        }
    }
    if ball.radius < 3 {
        return true;
    }
    for z in (0..n).filter(|&z| z != x && z != y) {
        for w in (z + 1..n).filter(|&w| w != x && w != y) {
            if ball.triple(x, z, w) != ball.triple(y, z, w) {
                return false;
            }
        }
    }
    true
}

/// Splits cells of an ordered partition of the coordinates until stable.
/// A coordinate's key is its singleton colour, then the sorted multiset of
/// (cell, pair colour) against all other coordinates, then the sorted
/// multiset of (cells, triple colour) against all other pairs. Cells keep
/// their relative order and split by ascending key, so the result depends
/// only on the coloured ball up to relabelling.
fn refine(ball: &BallView, cells: &mut Vec<Vec<usize>>) {
    let n = ball.n;
    let mut cell_of = vec![0u64; n];
    loop {
        for (ci, cell) in cells.iter().enumerate() {
            for &x in cell {
                cell_of[x] = ci as u64;
            }
        }
        let mut changed = false;
        let mut next: Vec<Vec<usize>> = Vec::with_capacity(n);
        for cell in cells.iter() {
            if cell.len() == 1 {
                next.push(cell.clone());
                continue;
            }
            let mut keyed: Vec<(Vec<u64>, usize)> = cell
                .iter()
                .map(|&x| (coordinate_key(ball, x, &cell_of), x))
                .collect();
            keyed.sort();
            let mut start = next.len();
            next.push(vec![keyed[0].1]);
            for w in 1..keyed.len() {
                if keyed[w].0 != keyed[w - 1].0 {
                    next.push(Vec::new());
                    start += 1;
                    changed = true;
                }
                next[start].push(keyed[w].1);
            }
        }
        *cells = next;
        if !changed {
            break;
        }
    }
}

fn coordinate_key(ball: &BallView, x: usize, cell_of: &[u64]) -> Vec<u64> {
    let n = ball.n;
    let mut key = vec![ball.single(x) as u64];
    if ball.radius >= 2 {
        let mut pairs: Vec<u64> = (0..n)
            .filter(|&y| y != x)
            .map(|y| cell_of[y] << 32 | ball.pair(x, y) as u64)
            .collect();
        pairs.sort_unstable();
        key.extend(pairs);
    }
    if ball.radius >= 3 {
        let mut triples: Vec<u64> = Vec::with_capacity(n * n / 2);
        for y in (0..n).filter(|&y| y != x) {
            for z in (y + 1..n).filter(|&z| z != x) {
                let (a, b) = if cell_of[y] <= cell_of[z] {
                    (cell_of[y], cell_of[z])
                } else {
                    (cell_of[z], cell_of[y])
                };
                triples.push(a << 48 | b << 32 | ball.triple(x, y, z) as u64);
            }
        }
        triples.sort_unstable();
        key.extend(triples);
    }
    key
}

/// Signature of `χ^{(r)}(v)`.
pub fn ball_signature(chi: &Colouring, v: Vertex, radius: u32) -> Result<BallSignature> {
    let ball = BallView::from_colouring(chi, v, radius)?;
    if radius == 1 {
        signature_r1(&ball)
    } else {
        signature_general(&ball)
    }
}

/// Counted multiset of ball signatures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallMultiset {
    n: u32,
    q: u32,
    r: u32,
    entries: BTreeMap<BallSignature, u64>,
}

impl BallMultiset {
    pub fn new(n: u32, q: u32, r: u32, entries: BTreeMap<BallSignature, u64>) -> Result<Self> {
        let dim = CubeDim::new(n)?;
        BallView::check_radius(r)?;
        if entries.values().any(|&c| c == 0) {
            return Err(Error::domain("multiset counts must be positive"));
        }
        let total: u64 = entries.values().sum();
        if total != dim.order() as u64 {
            return Err(Error::domain(format!(
                "multiset holds {total} balls, Q_{n} has {}",
                dim.order()
            )));
        }
        if let Some(sig) = entries.keys().find(|s| s.n() != n || s.radius() != r) {
            return Err(Error::domain(format!(
                "signature for n = {}, r = {} in a multiset for n = {n}, r = {r}",
                sig.n(),
                sig.radius()
            )));
        }
        Ok(BallMultiset { n, q, r, entries })
    }

    pub fn dim(&self) -> CubeDim {
        CubeDim::new(self.n).expect("validated")
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn palette(&self) -> u32 {
        self.q
    }

    pub fn radius(&self) -> u32 {
        self.r
    }

    pub fn entries(&self) -> &BTreeMap<BallSignature, u64> {
        &self.entries
    }

    pub fn count(&self, sig: &BallSignature) -> u64 {
        self.entries.get(sig).copied().unwrap_or(0)
    }

    /// Number of distinct signatures.
    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "balls {} {} {}", self.n, self.q, self.r);
        // Hex preserves byte order, so map order is already ascending by hex.
        for (sig, count) in &self.entries {
            let _ = writeln!(s, "{count} {}", sig.to_hex());
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, "empty multiset file"))?;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 4 || f[0] != "balls" {
            return Err(Error::parse(1, "expected header `balls <n> <q> <r>`"));
        }
        let parse = |s: &str, what: &str| s.parse::<u32>().map_err(|_| Error::parse(1, format!("bad {what}")));
        let (n, q, r) = (parse(f[1], "n")?, parse(f[2], "q")?, parse(f[3], "r")?);
        let mut entries = BTreeMap::new();
        let mut prev: Option<String> = None;
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let count: u64 = parts
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| Error::parse(lineno, "bad count"))?;
            let hex = parts.next().ok_or_else(|| Error::parse(lineno, "missing signature"))?;
            if parts.next().is_some() {
                return Err(Error::parse(lineno, "trailing fields"));
            }
            if let Some(p) = &prev {
                if p.as_str() >= hex {
                    return Err(Error::parse(lineno, "signatures not strictly ascending"));
                }
            }
            prev = Some(hex.to_string());
            let sig = BallSignature::from_hex(hex).map_err(|e| Error::parse(lineno, e.to_string()))?;
            entries.insert(sig, count);
        }
        BallMultiset::new(n, q, r, entries)
    }
}

/// Multiset of coloured `r`-balls over all `2^n` centres.
pub fn extract_multiset(chi: &Colouring, radius: u32) -> Result<BallMultiset> {
    let sigs: Vec<BallSignature> = chi
        .dim()
        .vertices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|v| ball_signature(chi, v, radius))
        .collect::<Result<_>>()?;
    let mut entries = BTreeMap::new();
    for s in sigs {
        *entries.entry(s).or_insert(0) += 1;
    }
    BallMultiset::new(chi.dim().get(), chi.palette(), radius, entries)
}
