//! Binomial tails, the `ψ` neighbourhood statistic and seeded Monte Carlo
//! experiments over random colourings.

use std::fmt::Write as _;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::canon::{ball_signature, extract_multiset};
use crate::colouring::{
    ball_distance_r1, ball_distance_r2, sample_colouring, BallDistanceMode, ColourDistribution, Colouring, Seed,
};
use crate::cube::{spread_set_family, CubeDim, SpreadSpec, Vertex, VertexSet};
use crate::error::{Error, Result};
use crate::shotgun::{reconstruct_r2, reconstruct_r3, verify_equivalence, Equivalence, EquivalenceMode, ReconstructionStatus};

/// `exp(−ε² n p / 2)`, an upper bound on `P[Bin(n,p) ≤ np(1−ε)]`.
pub fn chernoff_upper(n: u64, p: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::domain("ε must be positive"));
    }
    check_p(p)?;
    Ok((-eps * eps * n as f64 * p / 2.0).exp())
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability {p} outside (0,1)")));
    }
    Ok(())
}

/// Neumaier-compensated sum.
fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    compensated_sum((1..=k).flat_map(|i| [((n - k + i) as f64).ln(), -(i as f64).ln()]))
}

/// `P[Bin(n,p) = k]`, evaluated in log space.
pub fn binomial_point(n: u64, p: f64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("k = {k} exceeds n = {n}")));
    }
    if p == 0.0 || p == 1.0 {
        let hit = if p == 0.0 { k == 0 } else { k == n };
        return Ok(if hit { 1.0 } else { 0.0 });
    }
    check_p(p)?;
    let ln = compensated_sum([ln_binomial(n, k), k as f64 * p.ln(), (n - k) as f64 * (-p).ln_1p()]);
    Ok(ln.exp())
}

/// `P[Bin(n,p) ≤ x]`.
pub fn binomial_lower_tail(n: u64, p: f64, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Ok(0.0);
    }
    let top = (x.floor() as u64).min(n);
    let terms = (0..=top).map(|k| binomial_point(n, p, k)).collect::<Result<Vec<_>>>()?;
    Ok(compensated_sum(terms))
}

/// `P[Bin(n,p) ≥ k]`.
pub fn binomial_upper_tail(n: u64, p: f64, k: u64) -> Result<f64> {
    let terms = (k.min(n + 1)..=n).map(|j| binomial_point(n, p, j)).collect::<Result<Vec<_>>>()?;
    Ok(compensated_sum(terms))
}

/// Exact point probability at `np + c sqrt(np ln np)` against
/// `(np)^{−(1/2 + c²/(2(1−p)))}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsReport {
    pub n: u64,
    pub p: f64,
    pub c: f64,
    pub raw_target: f64,
    /// `raw_target` rounded to the nearest integer.
    pub target: u64,
    pub point: f64,
    pub theta: f64,
    pub ratio: f64,
    pub upper_tail: f64,
    /// `upper_tail / (point · (np)^{1/3})`.
    pub tail_ratio: f64,
}

/// `None` when the rounded target falls outside `[0, n]`.
pub fn bounds_asymptotic_ratio(n: u64, p: f64, c: f64) -> Result<Option<BoundsReport>> {
    check_p(p)?;
    let np = n as f64 * p;
    if np <= 1.0 {
        return Err(Error::domain("np must exceed 1 so that ln(np) is positive"));
    }
    let raw_target = np + c * (np * np.ln()).sqrt();
    let rounded = raw_target.round();
    if !(0.0..=n as f64).contains(&rounded) {
        return Ok(None);
    }
    let target = rounded as u64;
    let point = binomial_point(n, p, target)?;
    let theta = np.powf(-(0.5 + c * c / (2.0 * (1.0 - p))));
    let upper_tail = binomial_upper_tail(n, p, target)?;
    Ok(Some(BoundsReport {
        n,
        p,
        c,
        raw_target,
        target,
        point,
        theta,
        ratio: point / theta,
        upper_tail,
        tail_ratio: upper_tail / (point * np.cbrt()),
    }))
}

/// Least-squares slope of `ys` against `xs`.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::domain("regression needs two or more paired points"));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("regression abscissae are all equal"));
    }
    Ok(sxy / sxx)
}

fn check_two_colour(chi: &Colouring) -> Result<()> {
    if chi.palette() > 2 {
        return Err(Error::domain(format!("ψ needs at most two colours, palette is {}", chi.palette())));
    }
    Ok(())
}

fn neighbour_sum(chi: &Colouring, w: Vertex) -> u32 {
    (0..chi.dim().get()).map(|i| chi.get(w.flip(i))).sum()
}

/// `ψ(w) = Σ_{x∈Γ(w)} χ(x) − n(1−p)`.
pub fn psi(chi: &Colouring, w: Vertex, p: f64) -> Result<f64> {
    check_two_colour(chi)?;
    chi.dim().check(w)?;
    Ok(neighbour_sum(chi, w) as f64 - chi.dim().get() as f64 * (1.0 - p))
}

/// `Ψ(w) = {ψ(x) : x ∈ Γ(w)}` as a sorted multiset.
pub fn psi_set(chi: &Colouring, w: Vertex, p: f64) -> Result<Vec<f64>> {
    check_two_colour(chi)?;
    chi.dim().check(w)?;
    let offset = chi.dim().get() as f64 * (1.0 - p);
    let mut sums: Vec<u32> = (0..chi.dim().get()).map(|i| neighbour_sum(chi, w.flip(i))).collect();
    sums.sort_unstable();
    Ok(sums.into_iter().map(|s| s as f64 - offset).collect())
}

/// `ψ(a) ∈ Ψ(b)`, compared on integer neighbour sums.
fn compatible(chi: &Colouring, a: Vertex, b: Vertex) -> bool {
    let target = neighbour_sum(chi, a);
    (0..chi.dim().get()).any(|i| neighbour_sum(chi, b.flip(i)) == target)
}

fn permute_mask(mask: u32, perm: &[u32]) -> u32 {
    crate::colouring::permute_bits(mask, perm)
}

/// Events `B_S = {ψ(u + Σ_{ℓ∈S} e_{π1(ℓ)}) ∈ Ψ(v + Σ_{ℓ∈S} e_{π2(ℓ)})}` for
/// the sets `S` of a family (each member vertex of each family set is read
/// as the index set `S`).
#[derive(Clone, Debug)]
pub struct CompatibilityConfig {
    pub dim: CubeDim,
    pub p: f64,
    pub u: Vertex,
    pub v: Vertex,
    pub pi1: Vec<u32>,
    pub pi2: Vec<u32>,
    pub family: Vec<VertexSet>,
    pub trials: u64,
    pub seed: Seed,
}

#[derive(Clone, Debug)]
pub struct CompatibilityReport {
    /// `indicators[trial][event]`.
    pub indicators: Vec<Vec<bool>>,
    /// Per trial, the indicator of the first event and the share of events
    /// that occurred.
    pub summary: TrialSummary,
    /// Share of (trial, event) pairs where the event occurred.
    pub single_rate: f64,
    pub warnings: Vec<String>,
}

impl CompatibilityReport {
    /// Share of trials in which every event of `events` occurred.
    pub fn joint_rate(&self, events: &[usize]) -> f64 {
        let hits = self.indicators.iter().filter(|row| events.iter().all(|&e| row[e])).count();
        hits as f64 / self.indicators.len().max(1) as f64
    }
}

pub fn compatibility_event_rate(config: &CompatibilityConfig) -> Result<CompatibilityReport> {
    let dim = config.dim;
    let n = dim.get() as usize;
    for perm in [&config.pi1, &config.pi2] {
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&x| x as usize >= n || std::mem::replace(&mut seen[x as usize], true)) {
            return Err(Error::domain("π1 and π2 must be permutations of [n]"));
        }
    }
    dim.check(config.u)?;
    dim.check(config.v)?;
    let sets: Vec<u32> = config.family.iter().flat_map(|s| s.iter().map(|x| x.0)).collect();
    if sets.is_empty() {
        return Err(Error::domain("empty event family"));
    }
    let mut warnings = Vec::new();
    let min_gap = sets
        .iter()
        .enumerate()
        .flat_map(|(i, a)| sets[i + 1..].iter().map(move |b| (a ^ b).count_ones()))
        .min();
    if let Some(gap) = min_gap {
        if gap < 6 {
            warnings.push(format!("family is only {gap}-spread; events may be correlated"));
        }
    }
    let dist = ColourDistribution::TwoPoint(config.p);
    let rows: Vec<(u64, Vec<bool>)> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<_> {
            let seed = config.seed.for_trial(t);
            let chi = sample_colouring(dim, &dist, seed)?;
            let row = sets
                .iter()
                .map(|&s| {
                    let a = Vertex(config.u.0 ^ permute_mask(s, &config.pi1));
                    let b = Vertex(config.v.0 ^ permute_mask(s, &config.pi2));
                    compatible(&chi, a, b)
                })
                .collect();
            Ok((seed.master, row))
        })
        .collect::<Result<_>>()?;
    let records = rows
        .iter()
        .enumerate()
        .map(|(t, (seed, row))| TrialRecord {
            trial: t as u64,
            seed: *seed,
            outcome: row[0],
            value: Some(row.iter().filter(|&&b| b).count() as f64 / row.len() as f64),
        })
        .collect();
    let indicators: Vec<Vec<bool>> = rows.into_iter().map(|(_, r)| r).collect();
    let total = indicators.len() * sets.len();
    let hits: usize = indicators.iter().map(|r| r.iter().filter(|&&b| b).count()).sum();
    Ok(CompatibilityReport {
        summary: TrialSummary::new(config.seed, records),
        single_rate: hits as f64 / total.max(1) as f64,
        indicators,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub p_value: f64,
}

/// Pearson test of independence on the 2×2 table of two indicator series.
pub fn chi_square_independence(a: &[bool], b: &[bool]) -> Result<ChiSquare> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::domain("indicator series must be nonempty and of equal length"));
    }
    let mut table = [[0f64; 2]; 2];
    for (&x, &y) in a.iter().zip(b) {
        table[x as usize][y as usize] += 1.0;
    }
    let total = a.len() as f64;
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    if rows.contains(&0.0) || cols.contains(&0.0) {
        // A constant series is independent of everything.
        return Ok(ChiSquare { statistic: 0.0, p_value: 1.0 });
    }
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = rows[i] * cols[j] / total;
            stat += (table[i][j] - expected).powi(2) / expected;
        }
    }
    let dist = ChiSquared::new(1.0).expect("one degree of freedom");
    Ok(ChiSquare {
        statistic: stat,
        p_value: 1.0 - dist.cdf(stat),
    })
}

/// Permutation test of pairwise independence of the columns of
/// `indicators[trial][event]`. The statistic is the summed absolute gap
/// between joint and product frequencies over all column pairs; each round
/// shuffles every column independently. Returns the p-value.
pub fn shuffle_independence_test(indicators: &[Vec<bool>], rounds: usize, seed: Seed) -> Result<f64> {
    let trials = indicators.len();
    let events = indicators.first().map_or(0, |r| r.len());
    if trials == 0 || events < 2 || indicators.iter().any(|r| r.len() != events) {
        return Err(Error::domain("need a rectangular table with at least two events"));
    }
    let mut cols: Vec<Vec<bool>> = (0..events).map(|e| indicators.iter().map(|r| r[e]).collect()).collect();
    let statistic = |cols: &[Vec<bool>]| {
        let t = trials as f64;
        let freq: Vec<f64> = cols.iter().map(|c| c.iter().filter(|&&b| b).count() as f64 / t).collect();
        let mut s = 0.0;
        for i in 0..events {
            for j in i + 1..events {
                let joint = cols[i].iter().zip(&cols[j]).filter(|(a, b)| **a && **b).count() as f64 / t;
                s += (joint - freq[i] * freq[j]).abs();
            }
        }
        s
    };
    let observed = statistic(&cols);
    let mut rng = seed.rng();
    let mut at_least = 0usize;
    for _ in 0..rounds {
        for c in cols.iter_mut() {
            c.shuffle(&mut rng);
        }
        if statistic(&cols) >= observed - 1e-12 {
            at_least += 1;
        }
    }
    Ok((at_least + 1) as f64 / (rounds + 1) as f64)
}

/// `q · C(n + q − 1, q − 1)`: colourings of a 1-ball up to permuting the
/// neighbours.
pub fn count_ball_types(n: u64, q: u64) -> BigUint {
    if q == 0 {
        return BigUint::from(0u32);
    }
    // C(n + q − 1, q − 1) by the multiplicative formula, exact at each step.
    let mut c = BigUint::from(1u32);
    for i in 1..q {
        c = c * BigUint::from(n + i) / BigUint::from(i);
    }
    c * BigUint::from(q)
}

/// One row of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub outcome: bool,
    pub value: Option<f64>,
}

/// Trial outcomes with their success rate and Wilson 95% interval.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialSummary {
    pub master: Seed,
    pub records: Vec<TrialRecord>,
    pub mean: f64,
    pub ci: (f64, f64),
}

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = Z95 * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

impl TrialSummary {
    pub fn new(master: Seed, mut records: Vec<TrialRecord>) -> Self {
        records.sort_by_key(|r| r.trial);
        let successes = records.iter().filter(|r| r.outcome).count() as u64;
        let trials = records.len() as u64;
        TrialSummary {
            master,
            mean: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
            ci: wilson_interval(successes, trials),
            records,
        }
    }

    pub fn successes(&self) -> u64 {
        self.records.iter().filter(|r| r.outcome).count() as u64
    }

    /// `trial,seed,outcome,value` rows, then `summary,<master>,<mean>,<lo>:<hi>`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,seed,outcome,value\n");
        for r in &self.records {
            let value = r.value.map(|v| format!("{v}")).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{}", r.trial, r.seed, r.outcome as u8, value);
        }
        let _ = writeln!(
            s,
            "summary,{},{:.6},{:.6}:{:.6}",
            self.master.master, self.mean, self.ci.0, self.ci.1
        );
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    MinPairwiseBallDistance,
    AllSignaturesDistinct,
    ReconstructionSuccess,
    PsiEventRate,
}

/// Largest `n` for which all pairwise 2-ball distances are computed.
pub const PAIRWISE_R2_MAX_DIM: u32 = 8;
/// Largest `n` for which all pairwise 1-ball distances are computed.
pub const PAIRWISE_R1_MAX_DIM: u32 = 12;

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub dim: CubeDim,
    pub dist: ColourDistribution,
    pub r: u32,
    pub trials: u64,
    pub seed: Seed,
    pub statistic: Statistic,
    /// `K` in the 1-ball threshold `n − nK/ln n`.
    pub k_const: f64,
    /// Node budget for reconstruction.
    pub budget: u64,
}

impl ExperimentConfig {
    pub fn new(dim: CubeDim, dist: ColourDistribution, r: u32, trials: u64, seed: Seed, statistic: Statistic) -> Self {
        ExperimentConfig {
            dim,
            dist,
            r,
            trials,
            seed,
            statistic,
            k_const: 1.0,
            budget: crate::shotgun::DEFAULT_ASSEMBLY_BUDGET,
        }
    }
}

fn two_point_mass(dist: &ColourDistribution) -> Option<f64> {
    match dist {
        ColourDistribution::TwoPoint(p) => Some(*p),
        ColourDistribution::Explicit(m) if m.len() == 2 => Some(m[0]),
        ColourDistribution::Uniform(2) => Some(0.5),
        _ => None,
    }
}

/// Minimum over distinct pairs of the ball distance at radius `r`.
fn min_pairwise_distance(chi: &Colouring, r: u32) -> Result<u32> {
    let order = chi.dim().order() as u32;
    let per_u: Vec<u32> = (0..order)
        .into_par_iter()
        .map(|u| -> Result<u32> {
            let mut best = u32::MAX;
            for v in u + 1..order {
                let d = match r {
                    1 => ball_distance_r1(chi, Vertex(u), Vertex(v))?,
                    _ => ball_distance_r2(chi, Vertex(u), Vertex(v), BallDistanceMode::LowerBound)?,
                };
                best = best.min(d);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(per_u.into_iter().min().unwrap_or(u32::MAX))
}

/// Uniqueness of coloured balls per trial. With `AllSignaturesDistinct`
/// the outcome is that no two centres share a signature. With
/// `MinPairwiseBallDistance` it is that the least pairwise distance exceeds
/// `n²p(1−p)/2` (radius 2, lower-bound distance) or `n − nK/ln n` (radius 1,
/// exact distance); the value column holds that least distance.
pub fn unique_balls_rate(config: &ExperimentConfig) -> Result<TrialSummary> {
    config.dist.validate()?;
    let n = config.dim.get();
    let r = config.r;
    if !(1..=3).contains(&r) {
        return Err(Error::domain(format!("radius must be 1, 2 or 3, got {r}")));
    }
    let pairwise = match config.statistic {
        Statistic::AllSignaturesDistinct => false,
        Statistic::MinPairwiseBallDistance => {
            let cap = match r {
                1 => PAIRWISE_R1_MAX_DIM,
                2 => PAIRWISE_R2_MAX_DIM,
                _ => return Err(Error::domain("pairwise distances are defined for radius 1 and 2")),
            };
            if n > cap {
                return Err(Error::budget(format!("pairwise {r}-ball distances limited to n ≤ {cap}")));
            }
            if n < 2 {
                return Err(Error::domain("pairwise ball distances need n ≥ 2"));
            }
            true
        }
        other => return Err(Error::domain(format!("{other:?} is not a uniqueness statistic"))),
    };
    let threshold = if r == 2 {
        let p = two_point_mass(&config.dist)
            .ok_or_else(|| Error::domain("the 2-ball threshold needs a two-colour distribution"))
            .or_else(|e| if pairwise { Err(e) } else { Ok(0.0) })?;
        (n * n) as f64 * p * (1.0 - p) / 2.0
    } else {
        n as f64 - n as f64 * config.k_const / (n as f64).ln()
    };
    let records = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<TrialRecord> {
            let seed = config.seed.for_trial(t);
            let chi = sample_colouring(config.dim, &config.dist, seed)?;
            let (outcome, value) = if pairwise {
                let d = min_pairwise_distance(&chi, r)?;
                (d as f64 > threshold, Some(d as f64))
            } else {
                let ms = extract_multiset(&chi, r)?;
                (ms.distinct() as u64 == ms.total(), Some(ms.distinct() as f64))
            };
            Ok(TrialRecord {
                trial: t,
                seed: seed.master,
                outcome,
                value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialSummary::new(config.seed, records))
}

/// Reconstruction from the `r`-ball multiset of each sampled colouring.
/// A trial succeeds when the assembler succeeds and its output is
/// equivalent to the source (exact check up to `n = 8`, fingerprint beyond).
pub fn reconstruction_rate(config: &ExperimentConfig) -> Result<TrialSummary> {
    config.dist.validate()?;
    let mode = if config.dim.get() <= crate::shotgun::EXACT_EQUIVALENCE_MAX_DIM {
        EquivalenceMode::Exact
    } else {
        EquivalenceMode::Fingerprint
    };
    let records = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<TrialRecord> {
            let seed = config.seed.for_trial(t);
            let chi = sample_colouring(config.dim, &config.dist, seed)?;
            let ms = extract_multiset(&chi, config.r)?;
            let result = match config.r {
                2 => reconstruct_r2(&ms, config.budget)?,
                3 => reconstruct_r3(&ms, config.budget)?,
                r => return Err(Error::domain(format!("reconstruction needs radius 2 or 3, got {r}"))),
            };
            let outcome = match (&result.status, &result.colouring) {
                (ReconstructionStatus::Success, Some(out)) => verify_equivalence(&chi, out, mode)? == Equivalence::Equivalent,
                _ => false,
            };
            Ok(TrialRecord {
                trial: t,
                seed: seed.master,
                outcome,
                value: Some(result.placements_tried as f64),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialSummary::new(config.seed, records))
}

/// A spread family of single weight-`w` index sets with `w ≈ n/3`, used when
/// an experiment asks for `ψ` events without naming a family.
pub fn default_event_family(dim: CubeDim) -> Result<Vec<VertexSet>> {
    let n = dim.get();
    let weight = (n / 3).max(1);
    let spread = (2 * weight).min(6);
    for set_size in (2..=6).rev() {
        let spec = SpreadSpec {
            weight,
            spread,
            family_count: 1,
            set_size,
        };
        if let Ok(f) = spread_set_family(dim, spec) {
            return Ok(f);
        }
    }
    Err(Error::domain(format!("no spread event family fits in Q_{n}")))
}

/// Runs the experiment named by `config.statistic`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<TrialSummary> {
    match config.statistic {
        Statistic::AllSignaturesDistinct | Statistic::MinPairwiseBallDistance => unique_balls_rate(config),
        Statistic::ReconstructionSuccess => reconstruction_rate(config),
        Statistic::PsiEventRate => {
            let p = two_point_mass(&config.dist).ok_or_else(|| Error::domain("ψ events need a two-colour distribution"))?;
            let n = config.dim.get();
            let identity: Vec<u32> = (0..n).collect();
            let cc = CompatibilityConfig {
                dim: config.dim,
                p,
                u: Vertex(0),
                v: Vertex(config.dim.full_mask()),
                pi1: identity.clone(),
                pi2: identity,
                family: default_event_family(config.dim)?,
                trials: config.trials,
                seed: config.seed,
            };
            Ok(compatibility_event_rate(&cc)?.summary)
        }
    }
}

/// Whether every centre has its own `r`-ball signature.
pub fn all_signatures_distinct(chi: &Colouring, r: u32) -> Result<bool> {
    let mut sigs = chi
        .dim()
        .vertices()
        .map(|v| ball_signature(chi, v, r))
        .collect::<Result<Vec<_>>>()?;
    sigs.sort();
    Ok(sigs.windows(2).all(|w| w[0] != w[1]))
}
