//! Reconstruction of colourings from ball multisets, equivalence up to cube
//! automorphism, and exhaustive indistinguishability search for tiny cubes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;

use crate::canon::{
    ball_signature, extract_multiset, signature_general, transposition_is_automorphism, BallMultiset,
    BallSignature, BallView,
};
use crate::colouring::{permute_bits, Colour, Colouring};
use crate::cube::{CubeDim, Vertex};
use crate::error::{Error, Result};

pub const RECONSTRUCT_R2_MAX_DIM: u32 = 12;
pub const EXACT_EQUIVALENCE_MAX_DIM: u32 = 8;
pub const ATLAS_MAX_DIM: u32 = 4;
/// Search nodes granted to the anchored search in fingerprint mode.
pub const FINGERPRINT_NODE_BUDGET: u64 = 5_000_000;
pub const DEFAULT_ASSEMBLY_BUDGET: u64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReconstructionStatus {
    Success,
    Ambiguous,
    Failed,
}

impl fmt::Display for ReconstructionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReconstructionStatus::Success => "success",
            ReconstructionStatus::Ambiguous => "ambiguous",
            ReconstructionStatus::Failed => "failed",
        })
    }
}

/// One placement on the path to the returned colouring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlacementRecord {
    pub step: usize,
    pub vertex: Vertex,
    pub signature: BallSignature,
    pub alternatives: usize,
}

impl fmt::Display for PlacementRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {} place {} sig {} alternatives {}",
            self.step,
            self.vertex.0,
            self.signature.to_hex(),
            self.alternatives
        )
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub status: ReconstructionStatus,
    pub colouring: Option<Colouring>,
    pub placements_tried: u64,
    pub log: Vec<PlacementRecord>,
    /// Two ball types whose embedded 2-balls coincide, when the direct
    /// 3-ball method could not be used.
    pub collision: Option<(BallSignature, BallSignature)>,
}

impl ReconstructionResult {
    pub fn log_text(&self) -> String {
        self.log.iter().map(|r| format!("{r}\n")).collect()
    }
}

fn check_multiset_radius(ms: &BallMultiset, r: u32) -> Result<()> {
    if ms.radius() != r {
        return Err(Error::domain(format!("expected a multiset of {r}-balls, got radius {}", ms.radius())));
    }
    Ok(())
}

/// The single ball type of a monochromatic colouring, if that is what `ms` is.
fn monochrome(ms: &BallMultiset) -> Result<Option<Colouring>> {
    if ms.distinct() != 1 {
        return Ok(None);
    }
    let sig = ms.entries().keys().next().expect("one entry");
    let view = sig.decode()?;
    let colours: BTreeSet<Colour> = view.offsets().into_iter().map(|(_, c)| c).collect();
    if colours.len() != 1 {
        return Ok(None);
    }
    let c = *colours.iter().next().expect("nonempty");
    Ok(Some(Colouring::constant(ms.dim(), c, ms.palette().max(c + 1))?))
}

/// Rebuilds a colouring from its multiset of 3-balls.
///
/// When every vertex has its own 2-ball, each 3-ball names the 2-balls of
/// its neighbours, which recovers the cube graph directly; the graph is then
/// labelled breadth first from an anchor. Otherwise the backtracking
/// assembler runs with `budget` search nodes, and running out of budget is
/// reported as ambiguous.
pub fn reconstruct_r3(ms: &BallMultiset, budget: u64) -> Result<ReconstructionResult> {
    check_multiset_radius(ms, 3)?;
    if let Some(chi) = monochrome(ms)? {
        return Ok(ReconstructionResult {
            status: ReconstructionStatus::Success,
            colouring: Some(chi),
            placements_tried: 0,
            log: Vec::new(),
            collision: None,
        });
    }
    let collision = match direct_r3(ms)? {
        DirectOutcome::Done(result) => return Ok(result),
        DirectOutcome::Collision(a, b) => Some((a, b)),
        DirectOutcome::Inconsistent => None,
    };
    let (mut result, exhausted) = Assembler::new(ms, budget)?.run()?;
    if exhausted {
        result.status = ReconstructionStatus::Ambiguous;
    }
    result.collision = collision;
    Ok(result)
}

/// Rebuilds a colouring from its multiset of 2-balls by backtracking.
pub fn reconstruct_r2(ms: &BallMultiset, budget: u64) -> Result<ReconstructionResult> {
    check_multiset_radius(ms, 2)?;
    if ms.n() > RECONSTRUCT_R2_MAX_DIM {
        return Err(Error::budget(format!(
            "2-ball reconstruction limited to n ≤ {RECONSTRUCT_R2_MAX_DIM}, got {}",
            ms.n()
        )));
    }
    if let Some(chi) = monochrome(ms)? {
        return Ok(ReconstructionResult {
            status: ReconstructionStatus::Success,
            colouring: Some(chi),
            placements_tried: 0,
            log: Vec::new(),
            collision: None,
        });
    }
    Ok(Assembler::new(ms, budget)?.run()?.0)
}

enum DirectOutcome {
    Done(ReconstructionResult),
    Collision(BallSignature, BallSignature),
    Inconsistent,
}

fn direct_r3(ms: &BallMultiset) -> Result<DirectOutcome> {
    let dim = ms.dim();
    let n = dim.get() as usize;
    let types: Vec<(&BallSignature, u64)> = ms.entries().iter().map(|(s, &c)| (s, c)).collect();
    if let Some((s, _)) = types.iter().find(|(_, c)| *c > 1) {
        return Ok(DirectOutcome::Collision((*s).clone(), (*s).clone()));
    }
    // Centre 2-ball and the n neighbour 2-balls of every type.
    let inner: Vec<(BallSignature, Vec<BallSignature>)> = types
        .par_iter()
        .map(|(s, _)| -> Result<_> {
            let view = s.decode()?;
            let centre = signature_general(&view.restrict(2)?)?;
            let around = (0..n)
                .map(|i| signature_general(&view.neighbour_ball(i)?))
                .collect::<Result<Vec<_>>>()?;
            Ok((centre, around))
        })
        .collect::<Result<_>>()?;
    let mut by_centre: HashMap<&BallSignature, usize> = HashMap::with_capacity(types.len());
    for (t, (c, _)) in inner.iter().enumerate() {
        if let Some(&other) = by_centre.get(c) {
            return Ok(DirectOutcome::Collision(types[other].0.clone(), types[t].0.clone()));
        }
        by_centre.insert(c, t);
    }
    let mut adj: Vec<Vec<usize>> = Vec::with_capacity(types.len());
    for (_, around) in &inner {
        let mut row = Vec::with_capacity(n);
        for s in around {
            match by_centre.get(s) {
                Some(&t) => row.push(t),
                None => return Ok(DirectOutcome::Inconsistent),
            }
        }
        adj.push(row);
    }

    // Breadth-first labelling: the anchor is 0, its neighbours are the unit
    // vectors, and anything further out is the union of its lower neighbours.
    let anchor = 0;
    let mut label: Vec<Option<u32>> = vec![None; types.len()];
    let mut depth: Vec<u32> = vec![u32::MAX; types.len()];
    label[anchor] = Some(0);
    depth[anchor] = 0;
    let mut log = vec![PlacementRecord {
        step: 0,
        vertex: Vertex(0),
        signature: types[anchor].0.clone(),
        alternatives: 1,
    }];
    for (i, &t) in adj[anchor].iter().enumerate() {
        if depth[t] != u32::MAX {
            return Ok(DirectOutcome::Inconsistent);
        }
        depth[t] = 1;
        label[t] = Some(1 << i);
    }
    let mut layer: Vec<usize> = adj[anchor].clone();
    for &t in &layer {
        log.push(PlacementRecord {
            step: log.len(),
            vertex: Vertex(label[t].expect("set")),
            signature: types[t].0.clone(),
            alternatives: 1,
        });
    }
    let mut d = 1;
    while !layer.is_empty() {
        let mut next = Vec::new();
        for &t in &layer {
            for &u in &adj[t] {
                if depth[u] == u32::MAX {
                    depth[u] = d + 1;
                    next.push(u);
                }
            }
        }
        next.sort_unstable();
        next.dedup();
        for &u in &next {
            let x = adj[u]
                .iter()
                .filter(|&&w| depth[w] == d)
                .fold(0u32, |acc, &w| acc | label[w].expect("lower layer labelled"));
            if x.count_ones() != d + 1 {
                return Ok(DirectOutcome::Inconsistent);
            }
            label[u] = Some(x);
            log.push(PlacementRecord {
                step: log.len(),
                vertex: Vertex(x),
                signature: types[u].0.clone(),
                alternatives: 1,
            });
        }
        layer = next;
        d += 1;
    }
    let mut colours: Vec<Option<Colour>> = vec![None; dim.order()];
    for (t, l) in label.iter().enumerate() {
        let Some(x) = *l else {
            return Ok(DirectOutcome::Inconsistent);
        };
        if colours[x as usize].is_some() {
            return Ok(DirectOutcome::Inconsistent);
        }
        let centre_colour = types[t].0.decode()?.centre_colour();
        colours[x as usize] = Some(centre_colour);
        if adj[t].iter().any(|&u| label[u].map(|y| (y ^ x).count_ones()) != Some(1)) {
            return Ok(DirectOutcome::Inconsistent);
        }
    }
    let colours: Vec<Colour> = colours.into_iter().map(|c| c.expect("bijective labelling")).collect();
    let chi = match Colouring::new(dim, colours, ms.palette()) {
        Ok(chi) => chi,
        Err(_) => return Ok(DirectOutcome::Inconsistent),
    };
    if extract_multiset(&chi, 3)? != *ms {
        return Ok(DirectOutcome::Inconsistent);
    }
    let placements = log.len() as u64;
    Ok(DirectOutcome::Done(ReconstructionResult {
        status: ReconstructionStatus::Success,
        colouring: Some(chi),
        placements_tried: placements,
        log,
        collision: None,
    }))
}

struct BallType {
    sig: BallSignature,
    centre: Colour,
    /// Canonical offsets grouped by their largest coordinate.
    blocks: Vec<Vec<(u32, Colour)>>,
    /// Nearest earlier canonical coordinate that the ball cannot tell apart
    /// from this one; orientations are taken increasing along such runs.
    class_prev: Vec<Option<usize>>,
    key: Vec<Colour>,
}

impl BallType {
    fn new(sig: BallSignature) -> Result<Self> {
        let view = sig.decode()?;
        let n = view.n();
        let mut blocks = vec![Vec::new(); n];
        for (mask, c) in view.offsets() {
            if mask != 0 {
                blocks[31 - mask.leading_zeros() as usize].push((mask, c));
            }
        }
        let class_prev = (0..n)
            .map(|k| (0..k).rev().find(|&j| transposition_is_automorphism(&view, j, k)))
            .collect();
        Ok(BallType {
            centre: view.centre_colour(),
            key: r1_key(&view),
            sig,
            blocks,
            class_prev,
        })
    }
}

fn r1_key(view: &BallView) -> Vec<Colour> {
    let mut s: Vec<Colour> = (0..view.n()).map(|i| view.single(i)).collect();
    s.sort_unstable();
    s.insert(0, view.centre_colour());
    s
}

struct Choice {
    ty: usize,
    fill: Vec<(u32, Colour)>,
}

struct Frame {
    vertex: u32,
    choices: Vec<Choice>,
    next: usize,
    applied: bool,
}

struct OutOfBudget;

/// Backtracking assembler shared by both radii.
struct Assembler<'a> {
    ms: &'a BallMultiset,
    dim: CubeDim,
    n: usize,
    r: u32,
    types: Vec<BallType>,
    remaining: Vec<u64>,
    index: HashMap<BallSignature, usize>,
    by_key: HashMap<Vec<Colour>, Vec<usize>>,
    masks: Vec<u32>,
    colours: Vec<Option<Colour>>,
    known: Vec<u32>,
    assigned: Vec<Option<usize>>,
    unassigned: usize,
    nodes: u64,
    budget: u64,
    placements: u64,
}

impl<'a> Assembler<'a> {
    fn new(ms: &'a BallMultiset, budget: u64) -> Result<Self> {
        let dim = ms.dim();
        let n = dim.get() as usize;
        let r = ms.radius();
        let sigs: Vec<(BallSignature, u64)> = ms.entries().iter().map(|(s, &c)| (s.clone(), c)).collect();
        let types: Vec<BallType> = sigs
            .par_iter()
            .map(|(s, _)| BallType::new(s.clone()))
            .collect::<Result<_>>()?;
        let remaining = sigs.iter().map(|(_, c)| *c).collect();
        let index = sigs.iter().enumerate().map(|(i, (s, _))| (s.clone(), i)).collect();
        let mut by_key: HashMap<Vec<Colour>, Vec<usize>> = HashMap::new();
        for (i, t) in types.iter().enumerate() {
            by_key.entry(t.key.clone()).or_default().push(i);
        }
        let masks = (0u32..1 << n).filter(|m| m.count_ones() <= r).collect();
        Ok(Assembler {
            ms,
            dim,
            n,
            r,
            types,
            remaining,
            index,
            by_key,
            masks,
            colours: vec![None; dim.order()],
            known: vec![0; dim.order()],
            assigned: vec![None; dim.order()],
            unassigned: dim.order(),
            nodes: 0,
            budget,
            placements: 0,
        })
    }

    fn set_colour(&mut self, w: u32, c: Colour) {
        self.colours[w as usize] = Some(c);
        for &m in &self.masks {
            self.known[(w ^ m) as usize] += 1;
        }
    }

    fn unset_colour(&mut self, w: u32) {
        self.colours[w as usize] = None;
        for &m in &self.masks {
            self.known[(w ^ m) as usize] -= 1;
        }
    }

    fn tick(&mut self) -> std::result::Result<(), OutOfBudget> {
        self.nodes += 1;
        if self.nodes > self.budget {
            Err(OutOfBudget)
        } else {
            Ok(())
        }
    }

    /// Unassigned vertex whose ball has the most known colours.
    fn most_constrained(&self) -> u32 {
        let mut best = (0u32, u32::MAX);
        for v in 0..self.assigned.len() {
            if self.assigned[v].is_none() && (best.1 == u32::MAX || self.known[v] > best.0) {
                best = (self.known[v], v as u32);
            }
        }
        best.1
    }

    fn ball_key(&self, v: u32) -> Option<Vec<Colour>> {
        let mut s = Vec::with_capacity(self.n + 1);
        for i in 0..self.n {
            s.push(self.colours[(v ^ 1 << i) as usize]?);
        }
        s.sort_unstable();
        s.insert(0, self.colours[v as usize]?);
        Some(s)
    }

    fn choices_at(&mut self, v: u32) -> Result<std::result::Result<Vec<Choice>, OutOfBudget>> {
        if self.known[v as usize] as usize == self.masks.len() {
            let colours = &self.colours;
            let offsets = self
                .masks
                .iter()
                .map(|&m| (m, colours[(v ^ m) as usize].expect("ball fully known")));
            let view = BallView::from_offsets(self.dim, self.r, Vertex(v), offsets)?;
            let sig = signature_general(&view)?;
            if self.tick().is_err() {
                return Ok(Err(OutOfBudget));
            }
            return Ok(Ok(match self.index.get(&sig) {
                Some(&t) if self.remaining[t] > 0 => vec![Choice { ty: t, fill: Vec::new() }],
                _ => Vec::new(),
            }));
        }
        let mut candidates: Vec<usize> = match self.ball_key(v) {
            Some(key) => self.by_key.get(&key).cloned().unwrap_or_default(),
            None => (0..self.types.len()).collect(),
        };
        candidates.retain(|&t| self.remaining[t] > 0);
        candidates.sort_by_key(|&t| (self.remaining[t], t));
        let mut out = Vec::new();
        for t in candidates {
            let ty = &self.types[t];
            if let Some(c) = self.colours[v as usize] {
                if c != ty.centre {
                    continue;
                }
            }
            let mut fills = BTreeSet::new();
            let mut sigma = Vec::with_capacity(self.n);
            let mut search = Orient {
                ty,
                colours: &self.colours,
                v,
                n: self.n,
                nodes: &mut self.nodes,
                budget: self.budget,
            };
            if search.descend(&mut sigma, 0, &mut fills).is_err() {
                return Ok(Err(OutOfBudget));
            }
            out.extend(fills.into_iter().map(|fill| Choice { ty: t, fill }));
        }
        Ok(Ok(out))
    }

    fn apply(&mut self, v: u32, choice: &Choice) {
        self.assigned[v as usize] = Some(choice.ty);
        self.unassigned -= 1;
        self.remaining[choice.ty] -= 1;
        if let Some(&(w, c)) = choice.fill.iter().find(|(w, _)| *w == v) {
            self.set_colour(w, c);
        }
        for &(w, c) in &choice.fill {
            if w != v {
                self.set_colour(w, c);
            }
        }
        self.placements += 1;
    }

    fn undo(&mut self, v: u32, choice: &Choice) {
        for &(w, _) in &choice.fill {
            self.unset_colour(w);
        }
        self.remaining[choice.ty] += 1;
        self.assigned[v as usize] = None;
        self.unassigned += 1;
    }

    fn finish(&self, status: ReconstructionStatus, colouring: Option<Colouring>, log: Vec<PlacementRecord>) -> ReconstructionResult {
        ReconstructionResult {
            status,
            colouring,
            placements_tried: self.placements,
            log,
            collision: None,
        }
    }

    fn run(mut self) -> Result<(ReconstructionResult, bool)> {
        // Any ball can sit at vertex 0 in canonical orientation, so the
        // anchor is never revisited. The rarest type is used.
        let anchor = (0..self.types.len())
            .min_by_key(|&t| (self.remaining[t], t))
            .ok_or_else(|| Error::domain("empty multiset"))?;
        let anchor_fill: Vec<(u32, Colour)> = std::iter::once((0, self.types[anchor].centre))
            .chain(self.types[anchor].blocks.iter().flatten().copied())
            .collect();
        let anchor_choice = Choice { ty: anchor, fill: anchor_fill };
        self.apply(0, &anchor_choice);
        let mut log = vec![PlacementRecord {
            step: 0,
            vertex: Vertex(0),
            signature: self.types[anchor].sig.clone(),
            alternatives: self.types.len(),
        }];
        let mut stack: Vec<Frame> = Vec::new();
        loop {
            if self.unassigned == 0 {
                let colours: Vec<Colour> = self.colours.iter().map(|c| c.expect("all placed")).collect();
                if let Ok(chi) = Colouring::new(self.dim, colours, self.ms.palette()) {
                    if extract_multiset(&chi, self.r)? == *self.ms {
                        return Ok((self.finish(ReconstructionStatus::Success, Some(chi), log), false));
                    }
                }
            } else {
                let v = self.most_constrained();
                match self.choices_at(v)? {
                    Ok(choices) => stack.push(Frame {
                        vertex: v,
                        choices,
                        next: 0,
                        applied: false,
                    }),
                    Err(OutOfBudget) => {
                        return Ok((self.finish(ReconstructionStatus::Failed, None, Vec::new()), true));
                    }
                }
            }
            // Advance to the next untried choice, unwinding exhausted frames.
            loop {
                let Some(top) = stack.last_mut() else {
                    return Ok((self.finish(ReconstructionStatus::Failed, None, Vec::new()), false));
                };
                let v = top.vertex;
                if top.applied {
                    top.applied = false;
                    let idx = top.next - 1;
                    let choice = std::mem::replace(&mut top.choices[idx], Choice { ty: 0, fill: Vec::new() });
                    self.undo(v, &choice);
                    stack.last_mut().expect("frame").choices[idx] = choice;
                    log.pop();
                }
                let top = stack.last_mut().expect("frame");
                if top.next < top.choices.len() {
                    let idx = top.next;
                    top.next += 1;
                    top.applied = true;
                    let alternatives = top.choices.len();
                    let choice = std::mem::replace(&mut top.choices[idx], Choice { ty: 0, fill: Vec::new() });
                    self.apply(v, &choice);
                    log.push(PlacementRecord {
                        step: log.len(),
                        vertex: Vertex(v),
                        signature: self.types[choice.ty].sig.clone(),
                        alternatives,
                    });
                    stack.last_mut().expect("frame").choices[idx] = choice;
                    if self.tick().is_err() {
                        return Ok((self.finish(ReconstructionStatus::Failed, None, Vec::new()), true));
                    }
                    break;
                }
                stack.pop();
            }
        }
    }
}

/// Enumerates placements of a canonical ball onto the partially known ball
/// around `v`. `sigma[k]` is the cube coordinate of canonical coordinate `k`.
struct Orient<'b> {
    ty: &'b BallType,
    colours: &'b [Option<Colour>],
    v: u32,
    n: usize,
    nodes: &'b mut u64,
    budget: u64,
}

impl Orient<'_> {
    fn map(sigma: &[usize], mask: u32) -> u32 {
        let mut out = 0;
        let mut m = mask;
        while m != 0 {
            let k = m.trailing_zeros() as usize;
            out |= 1 << sigma[k];
            m &= m - 1;
        }
        out
    }

    fn descend(
        &mut self,
        sigma: &mut Vec<usize>,
        used: u32,
        fills: &mut BTreeSet<Vec<(u32, Colour)>>,
    ) -> std::result::Result<(), OutOfBudget> {
        *self.nodes += 1;
        if *self.nodes > self.budget {
            return Err(OutOfBudget);
        }
        let k = sigma.len();
        if k == self.n {
            let mut fill = Vec::new();
            if self.colours[self.v as usize].is_none() {
                fill.push((self.v, self.ty.centre));
            }
            for block in &self.ty.blocks {
                for &(mask, c) in block {
                    let w = self.v ^ Self::map(sigma, mask);
                    if self.colours[w as usize].is_none() {
                        fill.push((w, c));
                    }
                }
            }
            fill.sort_unstable();
            fills.insert(fill);
            return Ok(());
        }
        let lo = self.ty.class_prev[k].map_or(0, |p| sigma[p] + 1);
        for x in lo..self.n {
            if used >> x & 1 == 1 {
                continue;
            }
            sigma.push(x);
            let consistent = self.ty.blocks[k].iter().all(|&(mask, c)| {
                let w = self.v ^ Self::map(sigma, mask);
                self.colours[w as usize].is_none_or(|known| known == c)
            });
            if consistent {
                self.descend(sigma, used | 1 << x, fills)?;
            }
            sigma.pop();
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquivalenceMode {
    Exact,
    Fingerprint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    Inequivalent,
    Unknown,
}

impl fmt::Display for Equivalence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equivalence::Equivalent => "equivalent",
            Equivalence::Inequivalent => "inequivalent",
            Equivalence::Unknown => "unknown",
        })
    }
}

/// Result of searching for an automorphism `x ↦ perm(x) ⊕ shift` carrying
/// one colouring onto another.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AutomorphismSearch {
    Found { perm: Vec<u32>, shift: Vertex },
    NoneExists,
    OutOfBudget,
}

/// Decides `χ ≅ λ`. Exact mode needs `n ≤ 8` and always decides; fingerprint
/// mode compares 1- and 2-ball multisets and then runs the anchored search
/// under a node budget, answering unknown if the budget runs out.
pub fn verify_equivalence(chi: &Colouring, lambda: &Colouring, mode: EquivalenceMode) -> Result<Equivalence> {
    if chi.dim() != lambda.dim() {
        return Ok(Equivalence::Inequivalent);
    }
    let n = chi.dim().get();
    let budget = match mode {
        EquivalenceMode::Exact => {
            if n > EXACT_EQUIVALENCE_MAX_DIM {
                return Err(Error::budget(format!(
                    "exact equivalence limited to n ≤ {EXACT_EQUIVALENCE_MAX_DIM}, got {n}"
                )));
            }
            None
        }
        EquivalenceMode::Fingerprint => Some(FINGERPRINT_NODE_BUDGET),
    };
    Ok(match find_automorphism(chi, lambda, budget)? {
        AutomorphismSearch::Found { .. } => Equivalence::Equivalent,
        AutomorphismSearch::NoneExists => Equivalence::Inequivalent,
        AutomorphismSearch::OutOfBudget => Equivalence::Unknown,
    })
}

/// Anchored backtracking over automorphisms, pruned by ball signatures.
pub fn find_automorphism(chi: &Colouring, lambda: &Colouring, budget: Option<u64>) -> Result<AutomorphismSearch> {
    if chi.dim() != lambda.dim() {
        return Ok(AutomorphismSearch::NoneExists);
    }
    let dim = chi.dim();
    let n = dim.get() as usize;
    let pad = |mut v: Vec<u64>, len: usize| {
        v.resize(len, 0);
        v
    };
    let width = chi.palette().max(lambda.palette()) as usize;
    if pad(chi.colour_counts(), width) != pad(lambda.colour_counts(), width) {
        return Ok(AutomorphismSearch::NoneExists);
    }
    let radius = if n >= 2 && dim.get() <= crate::canon::R2_MAX_DIM { 2 } else { 1 };
    let sigs = |c: &Colouring| -> Result<Vec<BallSignature>> {
        dim.vertices()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|v| ball_signature(c, v, radius))
            .collect()
    };
    let (sa, sb) = (sigs(chi)?, sigs(lambda)?);
    let mut ids: BTreeMap<&BallSignature, u32> = BTreeMap::new();
    for s in sa.iter().chain(&sb) {
        let next = ids.len() as u32;
        ids.entry(s).or_insert(next);
    }
    let ia: Vec<u32> = sa.iter().map(|s| ids[s]).collect();
    let ib: Vec<u32> = sb.iter().map(|s| ids[s]).collect();
    let count = |xs: &[u32]| {
        let mut m = BTreeMap::new();
        for &x in xs {
            *m.entry(x).or_insert(0u64) += 1;
        }
        m
    };
    let (ca, cb) = (count(&ia), count(&ib));
    if ca != cb {
        return Ok(AutomorphismSearch::NoneExists);
    }
    let anchor = (0..ia.len())
        .min_by_key(|&x| (ca[&ia[x]], x))
        .expect("cube is nonempty") as u32;
    let mut search = IsoSearch {
        ia: &ia,
        ib: &ib,
        n,
        a: anchor,
        b: 0,
        perm: Vec::with_capacity(n),
        nodes: 0,
        budget,
    };
    for b in (0..ib.len() as u32).filter(|&b| ib[b as usize] == ia[anchor as usize]) {
        search.b = b;
        search.perm.clear();
        match search.descend(0) {
            Err(OutOfBudget) => return Ok(AutomorphismSearch::OutOfBudget),
            Ok(true) => {
                let perm: Vec<u32> = search.perm.iter().map(|&j| j as u32).collect();
                let shift = Vertex(permute_bits(anchor, &perm) ^ b);
                debug_assert!(dim
                    .vertices()
                    .all(|x| lambda.get(Vertex(permute_bits(x.0, &perm) ^ shift.0)) == chi.get(x)));
                return Ok(AutomorphismSearch::Found { perm, shift });
            }
            Ok(false) => {}
        }
    }
    Ok(AutomorphismSearch::NoneExists)
}

/// Looks for `perm` with `x ↦ perm(x ⊕ a) ⊕ b` preserving signature ids.
struct IsoSearch<'a> {
    ia: &'a [u32],
    ib: &'a [u32],
    n: usize,
    a: u32,
    b: u32,
    perm: Vec<usize>,
    nodes: u64,
    budget: Option<u64>,
}

impl IsoSearch<'_> {
    fn descend(&mut self, used: u32) -> std::result::Result<bool, OutOfBudget> {
        self.nodes += 1;
        if self.budget.is_some_and(|b| self.nodes > b) {
            return Err(OutOfBudget);
        }
        let i = self.perm.len();
        if i == self.n {
            return Ok(true);
        }
        for j in 0..self.n {
            if used >> j & 1 == 1 {
                continue;
            }
            self.perm.push(j);
            // Offsets whose highest coordinate is i are now fully mapped.
            let ok = (0u32..1 << i).all(|low| {
                let x = low | 1 << i;
                let mut y = 0u32;
                let mut m = x;
                while m != 0 {
                    y |= 1 << self.perm[m.trailing_zeros() as usize];
                    m &= m - 1;
                }
                self.ia[(x ^ self.a) as usize] == self.ib[(y ^ self.b) as usize]
            });
            if ok && self.descend(used | 1 << j)? {
                return Ok(true);
            }
            self.perm.pop();
        }
        Ok(false)
    }
}

/// Every coordinate permutation of `[n]`, in lexicographic order.
pub fn coordinate_permutations(n: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur: Vec<u32> = (0..n as u32).collect();
    loop {
        out.push(cur.clone());
        // Next permutation.
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).expect("successor exists");
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

/// Forward tables of all `2^n · n!` automorphisms of `Q_n` (`n ≤ 5`).
pub fn automorphism_tables(dim: CubeDim) -> Result<Vec<Vec<u32>>> {
    if dim.get() > 5 {
        return Err(Error::budget("automorphism tables limited to n ≤ 5"));
    }
    let mut out = Vec::new();
    for perm in coordinate_permutations(dim.get() as usize) {
        for shift in dim.vertices() {
            out.push(dim.vertices().map(|x| permute_bits(x.0, &perm) ^ shift.0).collect());
        }
    }
    Ok(out)
}

/// Result of the exhaustive search over all 2-colourings of a tiny cube.
#[derive(Clone, Debug)]
pub struct IndistinguishabilityAtlas {
    pub n: u32,
    pub r: u32,
    /// Equivalence-class representatives (least bit pattern) of inequivalent
    /// colourings with equal `r`-ball multisets, one entry per unordered pair
    /// of classes.
    pub witnesses: Vec<(Colouring, Colouring)>,
    pub classes: usize,
    /// Share of all `2^(2^n)` colourings that are `r`-distinguishable.
    pub distinguishable_fraction: f64,
}

pub fn indistinguishability_search(dim: CubeDim, r: u32) -> Result<IndistinguishabilityAtlas> {
    let n = dim.get();
    if n > ATLAS_MAX_DIM {
        return Err(Error::budget(format!("exhaustive search limited to n ≤ {ATLAS_MAX_DIM}, got {n}")));
    }
    if r == 0 {
        return Err(Error::domain("radius must be positive"));
    }
    let tables = automorphism_tables(dim)?;
    let total = 1u64 << dim.order();
    let image = |bits: u64, table: &[u32]| {
        table
            .iter()
            .enumerate()
            .fold(0u64, |acc, (v, &fv)| acc | (bits >> v & 1) << fv)
    };
    // Orbit representatives and orbit sizes.
    let mut seen = vec![false; total as usize];
    let mut classes: Vec<(u64, u64)> = Vec::new();
    for bits in 0..total {
        if seen[bits as usize] {
            continue;
        }
        let mut size = 0;
        for t in &tables {
            let img = image(bits, t);
            if !seen[img as usize] {
                seen[img as usize] = true;
                size += 1;
            }
        }
        classes.push((bits, size));
    }
    if r >= n {
        return Ok(IndistinguishabilityAtlas {
            n,
            r,
            witnesses: Vec::new(),
            classes: classes.len(),
            distinguishable_fraction: 1.0,
        });
    }
    let multisets: Vec<BallMultiset> = classes
        .par_iter()
        .map(|&(bits, _)| extract_multiset(&Colouring::from_bits(dim, bits)?, r))
        .collect::<Result<_>>()?;
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, ms) in multisets.iter().enumerate() {
        groups.entry(ms.to_text()).or_default().push(i);
    }
    let mut witnesses = Vec::new();
    let mut distinguishable = 0u64;
    for members in groups.values() {
        if members.len() == 1 {
            distinguishable += classes[members[0]].1;
            continue;
        }
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                witnesses.push((
                    Colouring::from_bits(dim, classes[i].0)?,
                    Colouring::from_bits(dim, classes[j].0)?,
                ));
            }
        }
    }
    Ok(IndistinguishabilityAtlas {
        n,
        r,
        witnesses,
        classes: classes.len(),
        distinguishable_fraction: distinguishable as f64 / total as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colouring::{sample_colouring, ColourDistribution, Seed};

    fn dim(n: u32) -> CubeDim {
        CubeDim::new(n).unwrap()
    }

    fn fair(n: u32, seed: u64) -> Colouring {
        sample_colouring(dim(n), &ColourDistribution::TwoPoint(0.5), Seed::new(seed)).unwrap()
    }

    fn brute_equivalent(a: &Colouring, b: &Colouring) -> bool {
        automorphism_tables(a.dim())
            .unwrap()
            .iter()
            .any(|t| a.relabel(t) == *b)
    }

    fn single_one(n: u32, at: u32) -> Colouring {
        let mut c = vec![0; 1 << n];
        c[at as usize] = 1;
        Colouring::new(dim(n), c, 2).unwrap()
    }

    #[test]
    fn r3_constant_colouring() {
        let chi = Colouring::constant(dim(6), 0, 2).unwrap();
        let res = reconstruct_r3(&extract_multiset(&chi, 3).unwrap(), 1000).unwrap();
        assert_eq!(res.status, ReconstructionStatus::Success);
        assert_eq!(res.colouring.unwrap(), chi);
    }

    #[test]
    fn r3_single_marked_vertex() {
        let chi = single_one(6, 37);
        let ms = extract_multiset(&chi, 3).unwrap();
        let res = reconstruct_r3(&ms, DEFAULT_ASSEMBLY_BUDGET).unwrap();
        assert_eq!(res.status, ReconstructionStatus::Success);
        assert!(res.collision.is_some());
        let out = res.colouring.unwrap();
        assert_eq!(extract_multiset(&out, 3).unwrap(), ms);
        assert_eq!(verify_equivalence(&chi, &out, EquivalenceMode::Exact).unwrap(), Equivalence::Equivalent);
    }

    #[test]
    fn r3_random_round_trip() {
        for seed in 1..=10 {
            let chi = fair(7, seed);
            let ms = extract_multiset(&chi, 3).unwrap();
            let res = reconstruct_r3(&ms, DEFAULT_ASSEMBLY_BUDGET).unwrap();
            assert_eq!(res.status, ReconstructionStatus::Success, "seed {seed}");
            let out = res.colouring.unwrap();
            assert_eq!(extract_multiset(&out, 3).unwrap(), ms);
            assert_eq!(verify_equivalence(&chi, &out, EquivalenceMode::Exact).unwrap(), Equivalence::Equivalent);
            assert_eq!(res.log.len(), 128);
        }
    }

    #[test]
    fn r2_round_trip_small() {
        for seed in 1..=6 {
            let chi = fair(6, seed);
            let ms = extract_multiset(&chi, 2).unwrap();
            let res = reconstruct_r2(&ms, DEFAULT_ASSEMBLY_BUDGET).unwrap();
            if res.status == ReconstructionStatus::Success {
                let out = res.colouring.unwrap();
                assert_eq!(extract_multiset(&out, 2).unwrap(), ms);
                assert_eq!(verify_equivalence(&chi, &out, EquivalenceMode::Exact).unwrap(), Equivalence::Equivalent);
            }
        }
        let zero = Colouring::constant(dim(8), 0, 2).unwrap();
        let res = reconstruct_r2(&extract_multiset(&zero, 2).unwrap(), 10).unwrap();
        assert_eq!(res.colouring.unwrap(), zero);
    }

    #[test]
    fn r2_colour_swap() {
        let chi = fair(5, 4);
        let swapped = Colouring::new(chi.dim(), chi.colours().iter().map(|&c| 1 - c).collect(), 2).unwrap();
        let res = reconstruct_r2(&extract_multiset(&swapped, 2).unwrap(), DEFAULT_ASSEMBLY_BUDGET).unwrap();
        assert_eq!(res.status, ReconstructionStatus::Success);
        let out = res.colouring.unwrap();
        assert!(brute_equivalent(&out, &swapped));
    }

    #[test]
    fn r2_rejects_large_and_wrong_radius() {
        let chi = Colouring::constant(dim(13), 0, 2).unwrap();
        let ms = extract_multiset(&chi, 2).unwrap();
        assert!(matches!(reconstruct_r2(&ms, 10), Err(Error::Budget(_))));
        let ms1 = extract_multiset(&fair(4, 1), 1).unwrap();
        assert!(reconstruct_r3(&ms1, 10).is_err());
    }

    #[test]
    fn exhausted_budget_is_reported() {
        let chi = single_one(6, 0);
        let ms = extract_multiset(&chi, 3).unwrap();
        let res = reconstruct_r3(&ms, 5).unwrap();
        assert_eq!(res.status, ReconstructionStatus::Ambiguous);
        assert!(res.colouring.is_none());
        let ms2 = extract_multiset(&chi, 2).unwrap();
        let res = reconstruct_r2(&ms2, 5).unwrap();
        assert_eq!(res.status, ReconstructionStatus::Failed);
    }

    #[test]
    fn log_lines_have_fixed_shape() {
        let chi = fair(6, 3);
        let res = reconstruct_r3(&extract_multiset(&chi, 3).unwrap(), DEFAULT_ASSEMBLY_BUDGET).unwrap();
        for line in res.log_text().lines() {
            let f: Vec<&str> = line.split(' ').collect();
            assert_eq!(f.len(), 8);
            assert_eq!((f[0], f[2], f[4], f[6]), ("step", "place", "sig", "alternatives"));
            assert!(hex::decode(f[5]).is_ok());
        }
    }

    #[test]
    fn exact_matches_brute_force_n4() {
        for seed in 0..150u64 {
            let a = fair(4, seed);
            let b = if seed % 3 == 0 {
                let tables = automorphism_tables(dim(4)).unwrap();
                a.relabel(&tables[(seed as usize * 37) % tables.len()])
            } else {
                fair(4, seed + 500)
            };
            let exact = verify_equivalence(&a, &b, EquivalenceMode::Exact).unwrap();
            let expected = if brute_equivalent(&a, &b) {
                Equivalence::Equivalent
            } else {
                Equivalence::Inequivalent
            };
            assert_eq!(exact, expected, "seed {seed}");
        }
    }

    #[test]
    fn automorphism_witness_is_correct() {
        let a = fair(7, 9);
        let b = a.under_automorphism(&[6, 2, 4, 0, 1, 3, 5], Vertex(0b1010011));
        match find_automorphism(&a, &b, None).unwrap() {
            AutomorphismSearch::Found { perm, shift } => {
                assert_eq!(a.under_automorphism(&perm, shift), b);
            }
            other => panic!("expected an automorphism, got {other:?}"),
        }
    }

    #[test]
    fn counts_and_modes() {
        let a = fair(9, 1);
        let mut c = a.colours().to_vec();
        c[0] = 1 - c[0];
        let b = Colouring::new(a.dim(), c, 2).unwrap();
        assert_eq!(verify_equivalence(&a, &b, EquivalenceMode::Fingerprint).unwrap(), Equivalence::Inequivalent);
        assert!(verify_equivalence(&a, &b, EquivalenceMode::Exact).is_err());
        let img = a.under_automorphism(&[8, 7, 6, 5, 4, 3, 2, 1, 0], Vertex(300));
        assert_eq!(verify_equivalence(&a, &img, EquivalenceMode::Fingerprint).unwrap(), Equivalence::Equivalent);
    }

    #[test]
    fn permutation_and_table_counts() {
        assert_eq!(coordinate_permutations(4).len(), 24);
        assert_eq!(coordinate_permutations(0).len(), 1);
        let t = automorphism_tables(dim(3)).unwrap();
        assert_eq!(t.len(), 48);
        let distinct: BTreeSet<_> = t.iter().collect();
        assert_eq!(distinct.len(), 48);
    }

    #[test]
    fn atlas_far_pair_witness_n4() {
        // All colour 1 except two colour-0 points at distance n or n - 1.
        let far = Colouring::from_bits(dim(4), 0xffff & !(1 | 1 << 15)).unwrap();
        let near = Colouring::from_bits(dim(4), 0xffff & !(1 | 1 << 7)).unwrap();
        let atlas = indistinguishability_search(dim(4), 1).unwrap();
        let found = atlas.witnesses.iter().any(|(x, y)| {
            (brute_equivalent(x, &far) && brute_equivalent(y, &near))
                || (brute_equivalent(x, &near) && brute_equivalent(y, &far))
        });
        assert!(found);
        assert_eq!(extract_multiset(&far, 1).unwrap(), extract_multiset(&near, 1).unwrap());
        assert!(atlas.distinguishable_fraction < 1.0);
    }

    #[test]
    fn atlas_trivial_when_ball_covers_cube() {
        let atlas = indistinguishability_search(dim(3), 3).unwrap();
        assert!(atlas.witnesses.is_empty());
        assert_eq!(atlas.distinguishable_fraction, 1.0);
        assert!(matches!(indistinguishability_search(dim(5), 1), Err(Error::Budget(_))));
    }
}
