//! Command-line front end: JSON run configurations in, JSON reports and CSV
//! sweeps out.
//!
//! Exit codes: 0 when everything passes or is feasible, 2 for a domain
//! negative (infeasible point, failed certification), 1 for errors.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::Distribution;
use crate::numerics::{Mode, NumericsError, Rational, Tolerance};
use crate::ratio::{self, format_rational, parse_rational, to_decimal};
use crate::region::{self, DofPoint, MessageId, RegionError, SigmaConfig, DEFAULT_SUBSET_CAP};
use crate::verify::{self, Lemma1Summary, VerificationReport, VerifyError};

pub const SEED_ENV: &str = "SIGMA_ALIGN_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("output failed: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(VerifyError::InfeasiblePoint(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NSpec {
    Single(u64),
    Range { from: u64, to: u64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolOverrides {
    pub rel_rank_tol: Option<f64>,
    pub col_match_tol: Option<f64>,
}

/// Configuration document as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: SigmaConfig,
    #[serde(default)]
    pub dof: DofPoint,
    #[serde(default)]
    pub n: Option<NSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub tol: TolOverrides,
    #[serde(default)]
    pub subset_cap: Option<u64>,
    /// Objective weights for `region max-sum`, shaped like `dof`.
    #[serde(default)]
    pub weights: Option<DofPoint>,
    /// Re-run failed Float trials exactly on the same draws.
    #[serde(default)]
    pub replay_float_failures: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Parse { path: path.display().to_string(), message: e.to_string() })?;
        cfg.network.validate()?;
        Ok(cfg)
    }
}

/// Configuration after flags, file and defaults are merged; embedded in every
/// report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub network: SigmaConfig,
    pub dof: DofPoint,
    pub n_from: u64,
    pub n_to: u64,
    pub seed: u64,
    pub trials: usize,
    pub mode: Mode,
    pub tolerance: Tolerance,
    pub subset_cap: u64,
    pub distribution: Distribution,
    pub distribution_text: String,
    pub replay_float_failures: bool,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Float,
    Rational,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Float => Mode::Float,
            ModeArg::Rational => Mode::Rational,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sigma-align", version, about = "DoF region and interference-alignment certification for the Sigma uplink channel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Region membership and weighted-sum extremes.
    #[command(subcommand)]
    Region(RegionCommand),
    /// Build and certify the alignment scheme.
    #[command(subcommand)]
    Ia(IaCommand),
    /// Full-rank property test for random monomial matrices.
    Lemma1(Lemma1Args),
}

#[derive(Debug, Subcommand)]
pub enum RegionCommand {
    /// Checks whether the configured DoF point lies in the region.
    Check(Common),
    /// Maximizes a weighted DoF sum over the region.
    MaxSum {
        #[command(flatten)]
        common: Common,
        /// Comma-separated rationals in message order (a, b1, b2, c).
        #[arg(long)]
        weights: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum IaCommand {
    /// Runs the construction for one n over several seeds; JSON report.
    Run(Common),
    /// Runs every n of a range; one CSV row per (n, trial).
    Sweep(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long = "tol-rank")]
    pub tol_rank: Option<f64>,
    #[arg(long = "tol-match")]
    pub tol_match: Option<f64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long = "n-max")]
    pub n_max: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Do not replay failed Float trials in exact arithmetic.
    #[arg(long = "no-replay")]
    pub no_replay: bool,
}

#[derive(Debug, Clone, Args)]
pub struct Lemma1Args {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "float")]
    pub mode: ModeArg,
    #[arg(long = "tol-rank")]
    pub tol_rank: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={s} is not a 64-bit unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn resolve_tolerance(file: TolOverrides, rank: Option<f64>, matching: Option<f64>) -> Result<Tolerance> {
    let d = Tolerance::default();
    Ok(Tolerance::new(
        rank.or(file.rel_rank_tol).unwrap_or(d.rel_rank_tol),
        matching.or(file.col_match_tol).unwrap_or(d.col_match_tol),
    )?)
}

pub fn resolve(common: &Common) -> Result<ResolvedConfig> {
    let file = RunConfig::load(&common.config)?;
    file.dof.check_dims(&file.network)?;
    let (mut n_from, mut n_to) = match file.n {
        Some(NSpec::Single(n)) => (n, n),
        Some(NSpec::Range { from, to }) => (from, to),
        None => (1, 1),
    };
    if let Some(n) = common.n {
        n_from = n;
        n_to = n.max(common.n_max.unwrap_or(n));
    } else if let Some(max) = common.n_max {
        n_to = max;
    }
    if n_from == 0 || n_to < n_from {
        return Err(CliError::Usage(format!("n range {n_from}..={n_to} must be nonempty and start at 1 or more")));
    }
    let trials = common.trials.or(file.trials).unwrap_or(1);
    if trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    let seed = match common.seed.or(file.seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let mode = common.mode.map(Mode::from).or(file.mode).unwrap_or(Mode::Float);
    let distribution = Distribution::default_for(mode);
    Ok(ResolvedConfig {
        network: file.network,
        dof: file.dof,
        n_from,
        n_to,
        seed,
        trials,
        mode,
        tolerance: resolve_tolerance(file.tol, common.tol_rank, common.tol_match)?,
        subset_cap: file.subset_cap.unwrap_or(DEFAULT_SUBSET_CAP),
        distribution,
        distribution_text: distribution.describe(),
        replay_float_failures: !common.no_replay && file.replay_float_failures.unwrap_or(true),
        jobs: common.jobs,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Output(e.to_string()))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        b = b.num_threads(j);
    }
    b.build().map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCheckReport {
    pub config: ResolvedConfig,
    pub feasible: bool,
    pub violated: Vec<String>,
    pub mu0: String,
}

pub fn region_check(common: &Common) -> Result<(RegionCheckReport, i32)> {
    let config = resolve(common)?;
    let verdict = region::check_point(&config.network, &config.dof)?;
    let code = if verdict.feasible { 0 } else { 2 };
    let report = RegionCheckReport {
        mu0: region::mu0(&config.dof).to_string(),
        feasible: verdict.feasible,
        violated: verdict.violated.into_iter().map(|c| c.label).collect(),
        config,
    };
    Ok((report, code))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxSumReport {
    pub config: ResolvedConfig,
    #[serde(with = "ratio::vec_as_string")]
    pub weights: Vec<Rational>,
    #[serde(with = "ratio::as_string")]
    pub value: Rational,
    pub value_decimal: f64,
    pub point: DofPoint,
    pub tight: Vec<String>,
}

pub fn parse_weights(text: &str) -> Result<Vec<Rational>> {
    text.split(',')
        .map(|w| parse_rational(w).map_err(|e| CliError::Usage(format!("--weights: {e}"))))
        .collect()
}

pub fn region_max_sum(common: &Common, weights: Option<&str>) -> Result<MaxSumReport> {
    let config = resolve(common)?;
    let file_weights = RunConfig::load(&common.config)?.weights;
    let cfg = &config.network;
    let weights = match (weights, file_weights) {
        (Some(w), _) => parse_weights(w)?,
        (None, Some(w)) => {
            w.check_dims(cfg)?;
            w.flat()
        }
        (None, None) => vec![Rational::from_integer(1.into()); cfg.message_count()],
    };
    let best = region::max_sum_dof(cfg, &weights, config.subset_cap)?;
    Ok(MaxSumReport {
        value_decimal: to_decimal(&best.value),
        value: best.value,
        point: best.point,
        tight: best.tight,
        weights,
        config,
    })
}

/// One seed of `ia run` / `ia sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial: usize,
    pub report: VerificationReport,
    /// Exact rerun of a failed Float trial on the same draws.
    pub replay: Option<VerificationReport>,
    /// `report.pass`, or the replay's verdict when one was run.
    pub certified: bool,
}

fn run_trial(config: &ResolvedConfig, n: u64, trial: usize) -> Result<Trial> {
    let seed = config.seed.wrapping_add(trial as u64);
    let report = verify::run_experiment(&config.network, &config.dof, n, seed, config.mode, &config.tolerance)?;
    let replay = if !report.pass && config.mode == Mode::Float && config.replay_float_failures {
        Some(verify::replay_exact(&config.network, &config.dof, n, seed, &config.tolerance)?)
    } else {
        None
    };
    let certified = replay.as_ref().map_or(report.pass, |r| r.pass);
    Ok(Trial { trial, report, replay, certified })
}

fn run_trials(config: &ResolvedConfig, ns: &[u64]) -> Result<Vec<(u64, Trial)>> {
    let tasks: Vec<(u64, usize)> = ns.iter().flat_map(|&n| (0..config.trials).map(move |t| (n, t))).collect();
    pool(config.jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(n, t)| run_trial(config, n, t).map(|r| (n, r)))
            .collect::<Result<Vec<_>>>()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ResolvedConfig,
    pub n: u64,
    pub passed: usize,
    pub certified: usize,
    pub total: usize,
    pub trials: Vec<Trial>,
}

pub fn ia_run(common: &Common) -> Result<(RunReport, i32)> {
    let config = resolve(common)?;
    if config.n_from != config.n_to {
        return Err(CliError::Usage("ia run takes a single n; use ia sweep for ranges".into()));
    }
    let n = config.n_from;
    // Region gate before any construction.
    let verdict = region::check_point(&config.network, &config.dof)?;
    if !verdict.feasible {
        return Err(VerifyError::InfeasiblePoint(verdict.violated.into_iter().map(|c| c.label).collect()).into());
    }
    let trials: Vec<Trial> = run_trials(&config, &[n])?.into_iter().map(|(_, t)| t).collect();
    let report = RunReport {
        passed: trials.iter().filter(|t| t.report.pass).count(),
        certified: trials.iter().filter(|t| t.certified).count(),
        total: trials.len(),
        n,
        trials,
        config,
    };
    let code = if report.certified == report.total { 0 } else { 2 };
    Ok((report, code))
}

/// CSV rows of a sweep plus the verdicts checked before exit.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub csv: String,
    pub rows: Vec<(u64, Trial)>,
    pub all_certified: bool,
    /// Every ratio equals its closed form.
    pub closed_forms_ok: bool,
    /// Ratios with a positive exponent increase strictly in n; the others
    /// stay at one.
    pub monotone: bool,
}

fn message_columns(cfg: &SigmaConfig) -> Vec<MessageId> {
    cfg.messages()
}

pub fn ia_sweep(common: &Common) -> Result<(SweepOutcome, i32)> {
    let config = resolve(common)?;
    let verdict = region::check_point(&config.network, &config.dof)?;
    if !verdict.feasible {
        return Err(VerifyError::InfeasiblePoint(verdict.violated.into_iter().map(|c| c.label).collect()).into());
    }
    let ns: Vec<u64> = (config.n_from..=config.n_to).collect();
    let rows = run_trials(&config, &ns)?;
    let msgs = message_columns(&config.network);

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["n".to_string(), "trial".into(), "seed".into(), "mu_n".into(), "sum_per_slot".into(), "sum_per_slot_decimal".into()];
    for m in &msgs {
        header.push(format!("ratio_{m}"));
        header.push(format!("ratio_{m}_decimal"));
    }
    header.extend(["pass".to_string(), "certified".into()]);
    let csv_err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(&header).map_err(csv_err)?;

    let mut closed_forms_ok = true;
    for (n, t) in &rows {
        let r = &t.report;
        let mut rec = vec![
            n.to_string(),
            t.trial.to_string(),
            r.seed.to_string(),
            r.plan.mu_n.to_string(),
            format_rational(&r.sum_per_slot),
            to_decimal(&r.sum_per_slot).to_string(),
        ];
        for m in &msgs {
            let a = &r.achieved[m];
            match &a.ratio {
                Some(q) => {
                    closed_forms_ok &= *q == a.closed_form;
                    rec.push(format_rational(q));
                    rec.push(to_decimal(q).to_string());
                }
                None => rec.extend([String::new(), String::new()]),
            }
        }
        rec.push(r.pass.to_string());
        rec.push(t.certified.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| CliError::Output(e.to_string()))?)
        .map_err(|e| CliError::Output(e.to_string()))?;

    // Ratios depend on n only, so compare the first trial of consecutive n.
    let mut per_n: BTreeMap<u64, &VerificationReport> = BTreeMap::new();
    for (n, t) in &rows {
        per_n.entry(*n).or_insert(&t.report);
    }
    let reports: Vec<&VerificationReport> = per_n.values().copied().collect();
    let monotone = reports.windows(2).all(|w| {
        msgs.iter().all(|m| {
            let (prev, next) = (&w[0].achieved[m], &w[1].achieved[m]);
            match (&prev.ratio, &next.ratio) {
                (Some(p), Some(q)) if next.ratio_exponent > 0 => p < q,
                (Some(p), Some(q)) => p == q,
                _ => true,
            }
        })
    });
    let all_certified = rows.iter().all(|(_, t)| t.certified);
    let code = if all_certified && closed_forms_ok && monotone { 0 } else { 2 };
    Ok((SweepOutcome { csv, rows, all_certified, closed_forms_ok, monotone }, code))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    #[serde(flatten)]
    pub summary: Lemma1Summary,
    pub tolerance: Tolerance,
    pub distribution_text: String,
    pub valid_rate: f64,
    pub negative_rate: Option<f64>,
}

pub fn lemma1(args: &Lemma1Args) -> Result<(Lemma1Report, i32)> {
    if args.trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let tol = resolve_tolerance(TolOverrides::default(), args.tol_rank, None)?;
    let mode = Mode::from(args.mode);
    let summary = verify::lemma1_suite(args.m, args.k, args.trials, seed, mode, &tol)?;
    let dist = match mode {
        Mode::Float => Distribution::LogUniform,
        Mode::Rational => Distribution::Grid { denominator: verify::LEMMA1_GRID_DENOMINATOR },
    };
    let trials = summary.trials as f64;
    let negative_rate = (args.m >= 2).then(|| summary.negative_rank_deficient as f64 / trials);
    let ok = summary.valid_full_rank == summary.trials && negative_rate.is_none_or(|r| r == 1.0);
    let report = Lemma1Report {
        valid_rate: summary.valid_full_rank as f64 / trials,
        negative_rate,
        tolerance: tol,
        distribution_text: dist.describe(),
        summary,
    };
    Ok((report, if ok { 0 } else { 2 }))
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Region(RegionCommand::Check(common)) => {
            let (report, code) = region_check(&common)?;
            emit(common.out.as_deref(), &to_json(&report)?)?;
            Ok(code)
        }
        Command::Region(RegionCommand::MaxSum { common, weights }) => {
            let report = region_max_sum(&common, weights.as_deref())?;
            emit(common.out.as_deref(), &to_json(&report)?)?;
            Ok(0)
        }
        Command::Ia(IaCommand::Run(common)) => {
            let (report, code) = ia_run(&common)?;
            emit(common.out.as_deref(), &to_json(&report)?)?;
            Ok(code)
        }
        Command::Ia(IaCommand::Sweep(common)) => {
            let (outcome, code) = ia_sweep(&common)?;
            emit(common.out.as_deref(), &outcome.csv)?;
            if !outcome.monotone {
                eprintln!("ratios are not monotone in n");
            }
            if !outcome.closed_forms_ok {
                eprintln!("some ratio differs from its closed form");
            }
            if !outcome.all_certified {
                eprintln!("some trials failed certification");
            }
            Ok(code)
        }
        Command::Lemma1(args) => {
            let (report, code) = lemma1(&args)?;
            emit(args.out.as_deref(), &to_json(&report)?)?;
            Ok(code)
        }
    }
}
