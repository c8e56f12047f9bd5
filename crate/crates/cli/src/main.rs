//! Command-line front end for cubeshot.
//!
//! Exit codes: 0 success, 1 negative verdict, 2 input or usage error,
//! 3 budget exceeded.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cubeshot::canon::extract_multiset;
use cubeshot::colouring::sample_colouring;
use cubeshot::cube::{closed_neighbourhood_len, harper_initial_segment, set_neighbourhood, binomial};
use cubeshot::probability::{count_ball_types, run_experiment, ExperimentConfig, Statistic};
use cubeshot::shotgun::{
    reconstruct_r2, reconstruct_r3, verify_equivalence, Equivalence, EquivalenceMode, ReconstructionStatus,
    DEFAULT_ASSEMBLY_BUDGET, EXACT_EQUIVALENCE_MAX_DIM,
};
use cubeshot::structure::classify;
use cubeshot::{BallMultiset, BijectionTable, ColourDistribution, Colouring, CubeDim, Error, Seed};

#[derive(Parser)]
#[command(name = "cubeshot", version, about = "Shotgun reconstruction of hypercube colourings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random colouring of Q_n.
    Gen(GenArgs),
    /// Write the multiset of coloured r-balls of a colouring.
    Balls(BallsArgs),
    /// Rebuild a colouring from a ball multiset.
    Reconstruct(ReconstructArgs),
    /// Decide whether two colourings are equivalent under a cube automorphism.
    Verify(VerifyArgs),
    /// Classify a vertex bijection of Q_n.
    Classify(ClassifyArgs),
    /// Print closed and open neighbourhood sizes of Harper initial segments.
    Harper(HarperArgs),
    /// Run a seeded Monte Carlo experiment and write CSV.
    ///
    /// Columns are `trial,seed,outcome,value`: the trial index, its derived
    /// seed, 1 or 0 for the indicator, and the per-trial value (empty when
    /// not computed). The last row is `summary,<seed>,<mean>,<lo>:<hi>` with
    /// a Wilson 95% interval.
    Experiment(ExperimentArgs),
    /// Count colourings of a 1-ball up to permuting the neighbours.
    CountTypes(CountArgs),
}

#[derive(Args)]
struct DistArgs {
    /// Probability of colour 0 in a two-colour sample.
    #[arg(long, conflicts_with = "q")]
    p: Option<f64>,
    /// Number of equally likely colours.
    #[arg(long)]
    q: Option<u32>,
}

impl DistArgs {
    fn distribution(&self) -> anyhow::Result<ColourDistribution> {
        match (self.p, self.q) {
            (Some(p), None) => Ok(ColourDistribution::TwoPoint(p)),
            (None, Some(q)) => Ok(ColourDistribution::Uniform(q)),
            _ => Err(Error::InputDomain("give exactly one of --p and --q".into()).into()),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: u32,
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BallsArgs {
    /// Colouring file.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    r: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Fingerprint,
}

impl From<Mode> for EquivalenceMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => EquivalenceMode::Exact,
            Mode::Fingerprint => EquivalenceMode::Fingerprint,
        }
    }
}

#[derive(Args)]
struct ReconstructArgs {
    /// Ball multiset file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Expected radius; must match the file when given.
    #[arg(long)]
    r: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_ASSEMBLY_BUDGET)]
    budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Placement log destination.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Source colouring to compare the result against.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Defaults to exact up to n = 8 and fingerprint beyond.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Identity,
    AntipodalOdd,
    RandomAutomorphism,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Bijection file.
    #[arg(long = "in", conflicts_with = "builtin", required_unless_present = "builtin")]
    input: Option<PathBuf>,
    #[arg(long, value_enum, requires = "n")]
    builtin: Option<Builtin>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Locality slack.
    #[arg(long, default_value_t = 0)]
    s: u32,
    /// Mono threshold.
    #[arg(long, default_value_t = 0)]
    t: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HarperArgs {
    #[arg(long)]
    n: u32,
    /// Largest segment length; defaults to 2^n.
    #[arg(long)]
    len: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatisticArg {
    Distinct,
    MinDistance,
    Reconstruct,
    Psi,
}

impl From<StatisticArg> for Statistic {
    fn from(s: StatisticArg) -> Self {
        match s {
            StatisticArg::Distinct => Statistic::AllSignaturesDistinct,
            StatisticArg::MinDistance => Statistic::MinPairwiseBallDistance,
            StatisticArg::Reconstruct => Statistic::ReconstructionSuccess,
            StatisticArg::Psi => Statistic::PsiEventRate,
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    n: u32,
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, default_value_t = 2)]
    r: u32,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum)]
    statistic: StatisticArg,
    /// Constant K in the 1-ball distance threshold n − nK/ln n.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = DEFAULT_ASSEMBLY_BUDGET)]
    budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    q: u64,
}

/// A scientific outcome that is not an error.
enum Verdict {
    Positive,
    Negative,
    Undecided,
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn default_mode(dim: CubeDim) -> EquivalenceMode {
    if dim.get() <= EXACT_EQUIVALENCE_MAX_DIM {
        EquivalenceMode::Exact
    } else {
        EquivalenceMode::Fingerprint
    }
}

fn equivalence_verdict(e: Equivalence) -> Verdict {
    match e {
        Equivalence::Equivalent => Verdict::Positive,
        Equivalence::Inequivalent => Verdict::Negative,
        Equivalence::Unknown => Verdict::Undecided,
    }
}

fn run(cli: Cli) -> anyhow::Result<Verdict> {
    match cli.command {
        Command::Gen(a) => {
            let chi = sample_colouring(CubeDim::new(a.n)?, &a.dist.distribution()?, Seed::new(a.seed))?;
            emit(a.out.as_deref(), &chi.to_text())?;
        }
        Command::Balls(a) => {
            let chi = Colouring::from_text(&read(&a.input)?)?;
            emit(a.out.as_deref(), &extract_multiset(&chi, a.r)?.to_text())?;
        }
        Command::Reconstruct(a) => {
            let ms = BallMultiset::from_text(&read(&a.input)?)?;
            if let Some(r) = a.r {
                if r != ms.radius() {
                    bail!(Error::InputDomain(format!("--r {r} but the file holds {}-balls", ms.radius())));
                }
            }
            let result = match ms.radius() {
                2 => reconstruct_r2(&ms, a.budget)?,
                3 => reconstruct_r3(&ms, a.budget)?,
                r => bail!(Error::InputDomain(format!("reconstruction needs radius 2 or 3, got {r}"))),
            };
            if let Some(log) = &a.log {
                fs::write(log, result.log_text()).with_context(|| format!("writing {}", log.display()))?;
            }
            eprintln!("status {}", result.status);
            let chi = match (result.status, result.colouring) {
                (ReconstructionStatus::Success, Some(chi)) => chi,
                (ReconstructionStatus::Ambiguous, _) => return Ok(Verdict::Undecided),
                _ => return Ok(Verdict::Negative),
            };
            emit(a.out.as_deref(), &chi.to_text())?;
            if let Some(path) = &a.reference {
                let source = Colouring::from_text(&read(path)?)?;
                let mode = a.mode.map_or_else(|| default_mode(source.dim()), Into::into);
                let e = verify_equivalence(&source, &chi, mode)?;
                eprintln!("equivalence {e}");
                return Ok(equivalence_verdict(e));
            }
        }
        Command::Verify(a) => {
            let chi = Colouring::from_text(&read(&a.input)?)?;
            let lambda = Colouring::from_text(&read(&a.reference)?)?;
            let mode = a.mode.map_or_else(|| default_mode(chi.dim()), Into::into);
            let e = verify_equivalence(&chi, &lambda, mode)?;
            println!("{e}");
            return Ok(equivalence_verdict(e));
        }
        Command::Classify(a) => {
            let f = match (a.builtin, &a.input) {
                (Some(b), _) => {
                    let dim = CubeDim::new(a.n.expect("clap enforces --n"))?;
                    match b {
                        Builtin::Identity => BijectionTable::identity(dim),
                        Builtin::AntipodalOdd => BijectionTable::antipodal_odd(dim)?,
                        Builtin::RandomAutomorphism => {
                            let seed = a.seed.ok_or_else(|| Error::InputDomain("random-automorphism needs --seed".into()))?;
                            BijectionTable::random_automorphism(dim, Seed::new(seed))
                        }
                    }
                }
                (None, Some(path)) => BijectionTable::from_text(&read(path)?)?,
                (None, None) => unreachable!("clap enforces --in or --builtin"),
            };
            emit(a.out.as_deref(), &classify(&f, a.s, a.t)?.to_text())?;
        }
        Command::Harper(a) => {
            let dim = CubeDim::new(a.n)?;
            let top = a.len.unwrap_or(dim.order());
            if top > dim.order() {
                bail!(Error::InputDomain(format!("--len {top} exceeds 2^{}", a.n)));
            }
            let n = a.n as u64;
            let mut text = String::from("len closed open bound\n");
            for l in 0..=top {
                let seg = harper_initial_segment(dim, l)?;
                let open = if seg.is_empty() { 0 } else { set_neighbourhood(&seg)?.len() };
                let bound = if (l as u64) <= n {
                    (binomial(n, 2) - binomial(n - l as u64, 2)).to_string()
                } else {
                    "-".to_string()
                };
                text.push_str(&format!("{l} {} {open} {bound}\n", closed_neighbourhood_len(&seg)));
            }
            emit(a.out.as_deref(), &text)?;
        }
        Command::Experiment(a) => {
            let mut cfg = ExperimentConfig::new(
                CubeDim::new(a.n)?,
                a.dist.distribution()?,
                a.r,
                a.trials,
                Seed::new(a.seed),
                a.statistic.into(),
            );
            cfg.k_const = a.k;
            cfg.budget = a.budget;
            emit(a.out.as_deref(), &run_experiment(&cfg)?.to_csv())?;
        }
        Command::CountTypes(a) => {
            println!("{}", count_ball_types(a.n, a.q));
        }
    }
    Ok(Verdict::Positive)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Verdict::Positive) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) => ExitCode::from(1),
        Ok(Verdict::Undecided) => ExitCode::from(3),
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<Error>() {
                Some(Error::Budget(_)) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
