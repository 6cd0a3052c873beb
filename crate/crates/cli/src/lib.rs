//! Harness around the optimizer and the verification lab: configuration,
//! replicated experiments, CSV/SVG output and the `bmopt` command line.

pub mod config;
pub mod experiment;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use bmopt::rng::{stream_key, tag};
use bmopt::{recommend, score, EpochUcb, NoisyOracle, Optimizer, Path, RecommendMode};
use bmopt_lab::lowerbound::{hypothesis_test_regret, HypothesisConfig, PairPolicy};
use bmopt_lab::{run_lemma_suite, CheckRow, SuiteConfig};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use config::{ConfigError, ExperimentConfig, Preset};
use experiment::run_experiment;
use output::{regret_svg, write_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bmopt", version, about = "Noisy optimization of Brownian motion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the algorithm once and print its regret report as JSON.
    Simulate(Common),
    /// Replicated runs over the budget grid; writes runs.csv,
    /// aggregates.csv and regret.svg.
    Experiment(Common),
    /// Run the Monte Carlo verification suite; writes verify.csv.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Small sample sizes, for a fast smoke run.
        #[arg(long)]
        quick: bool,
    },
    /// Shifted-pair hypothesis tests against the regret floor; writes
    /// lowerbound.csv.
    Lowerbound {
        #[command(flatten)]
        common: Common,
        /// Seeds per budget and policy.
        #[arg(long, default_value_t = 500)]
        seeds: u64,
        /// Budgets to sweep, unless `--T` is given.
        #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000")]
        budgets: Vec<u64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON file with experiment settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base settings the config file and flags are applied on top of.
    #[arg(long, default_value = "desk")]
    pub preset: String,
    /// Path seed (simulate) or base seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Query budget.
    #[arg(long = "T")]
    pub budget: Option<u64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Replaces the default failure probability T^(-1/2).
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub truth_depth: Option<u32>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Record wall-clock times (makes the runs CSV non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

impl Common {
    /// Preset, then config file, then flags.
    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let preset: Preset = self.preset.parse()?;
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path, preset)?,
            None => ExperimentConfig::preset(preset),
        };
        if let Some(t) = self.budget {
            cfg.t_grid = vec![t];
        }
        if let Some(s) = self.sigma2 {
            cfg.sigma2 = s;
        }
        if self.delta.is_some() {
            cfg.delta_override = self.delta;
        }
        if let Some(d) = self.truth_depth {
            cfg.truth_depth = d;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(j) = self.jobs {
            cfg.parallelism = j;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn base_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// Runs the command line and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Experiment(c) => experiment(c),
        Command::Verify { common, quick } => verify(common, *quick),
        Command::Lowerbound { common, seeds, budgets } => lowerbound(common, *seeds, budgets),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Config(e)) => {
            eprintln!("bmopt: {e}");
            EXIT_USAGE
        }
        Err(Failure::Run(msg)) => {
            eprintln!("bmopt: {msg}");
            EXIT_CHECK_FAILED
        }
    }
}

enum Failure {
    Config(ConfigError),
    Run(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<bmopt::Error> for Failure {
    fn from(e: bmopt::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(format!("i/o error: {e}"))
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Run(format!("thread pool: {e}")))
}

#[derive(Serialize)]
struct SimulateReport {
    path_seed: u64,
    noise_seed: u64,
    budget: u64,
    sigma2: f64,
    delta: f64,
    epochs_completed: u32,
    truncated: bool,
    #[serde(rename = "R_T")]
    cumulative: f64,
    #[serde(rename = "r_T")]
    simple: f64,
    recommendation: bmopt::DyadicPoint,
    truth: bmopt::MaxRecord<f64>,
    discretization_bound: f64,
}

fn simulate(c: &Common) -> Result<i32, Failure> {
    let cfg = c.resolve()?;
    let budget = cfg.t_grid[0];
    let path_seed = c.base_seed();
    let noise_seed = experiment::noise_seed(path_seed, 0);
    let path = Path::standard(path_seed);
    let mut oracle = NoisyOracle::new(path.clone(), cfg.sigma2, budget, noise_seed)?;
    let trace = EpochUcb::with_delta(cfg.delta_override).optimize(&mut oracle)?;
    let rec = recommend(&trace, stream_key(&[tag::RECOMMEND, path_seed, noise_seed, budget]), RecommendMode::Multiset)?;
    let report = score(&trace, rec, &path, cfg.truth_depth)?;
    let out = SimulateReport {
        path_seed,
        noise_seed,
        budget,
        sigma2: cfg.sigma2,
        delta: trace.delta.unwrap_or(f64::NAN),
        epochs_completed: trace.epochs_completed,
        truncated: report.truncated,
        cumulative: report.cumulative,
        simple: report.simple,
        recommendation: report.recommendation,
        truth: report.truth,
        discretization_bound: report.discretization_bound,
    };
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&out).expect("report serializes"));
    Ok(EXIT_OK)
}

fn experiment(c: &Common) -> Result<i32, Failure> {
    let cfg = c.resolve()?;
    let seed = c.base_seed();
    let out = run_experiment(&cfg, seed, c.timing)?;
    if out.shallow_truth_runs > 0 {
        eprintln!(
            "bmopt: warning: {} runs reached within 4 levels of truth_depth {}; regrets may be understated",
            out.shallow_truth_runs, cfg.truth_depth
        );
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    let hash = cfg.hash(seed);
    write_csv(&cfg.output_dir.join("runs.csv"), &hash, &out.records)?;
    write_csv(&cfg.output_dir.join("aggregates.csv"), &hash, &out.aggregates)?;
    std::fs::write(
        cfg.output_dir.join("regret.svg"),
        regret_svg(&out.aggregates, &format!("sigma2 = {}, {} runs per T", cfg.sigma2, cfg.path_seeds * cfg.noise_seeds_per_path)),
    )?;
    println!("{:>10} {:>12} {:>12} {:>12} {:>12}", "T", "mean R_T", "R_T/sqrtT", "sd", "r_T*sqrtT");
    for a in &out.aggregates {
        println!(
            "{:>10} {:>12.3} {:>12.4} {:>12.4} {:>12.4}",
            a.t, a.mean_cumulative, a.mean_normalized, a.std_normalized, a.mean_simple_times_sqrt_t
        );
    }
    Ok(EXIT_OK)
}

/// Prints the rows as a table; returns whether all passed.
pub fn print_rows(rows: &[CheckRow]) -> bool {
    println!("{:<48} {:>5} {:>12} {:>12} {:>10} {:>12}", "check", "pass", "bound", "estimate", "se", "margin");
    for r in rows {
        println!(
            "{:<48} {:>5} {:>12.6} {:>12.6} {:>10.6} {:>12.6}",
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.bound,
            r.estimate,
            r.se,
            r.margin
        );
    }
    rows.iter().all(|r| r.pass)
}

fn json_hash<T: Serialize>(value: &T) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(value).expect("serializes")))
}

fn verify(c: &Common, quick: bool) -> Result<i32, Failure> {
    let cfg = c.resolve()?;
    let mut suite = if quick { SuiteConfig::quick() } else { SuiteConfig::default() };
    if let Some(s) = c.seed {
        suite.base_seed = s;
    }
    let rows = pool(cfg.parallelism)?.install(|| run_lemma_suite(&suite))?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    write_csv(&cfg.output_dir.join("verify.csv"), &json_hash(&suite), &rows)?;
    Ok(if print_rows(&rows) { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(Debug, Serialize)]
struct LowerboundRow {
    #[serde(rename = "T")]
    budget: u64,
    shift: f64,
    policy: &'static str,
    seeds: usize,
    certified: usize,
    #[serde(rename = "mean_r_T")]
    mean_simple: f64,
    #[serde(rename = "se_r_T")]
    se_simple: f64,
    mean_mi: f64,
    floor: f64,
    floor_respected: bool,
    cap_violations: usize,
}

fn lowerbound(c: &Common, seeds: u64, budgets: &[u64]) -> Result<i32, Failure> {
    let cfg = c.resolve()?;
    let budgets = match c.budget {
        Some(t) => vec![t],
        None => budgets.to_vec(),
    };
    if seeds == 0 || budgets.iter().any(|&t| t < 3) {
        return Err(ConfigError("lowerbound needs seeds >= 1 and budgets >= 3".into()).into());
    }
    if !(cfg.sigma2 > 0.0) {
        return Err(ConfigError("lowerbound needs sigma2 > 0".into()).into());
    }
    let base = c.base_seed();
    let policies = [
        PairPolicy::EpochUcb(EpochUcb::with_delta(cfg.delta_override)),
        PairPolicy::RandomSearch { depth: 10 },
        PairPolicy::Genie,
    ];
    let workers = pool(cfg.parallelism)?;
    let mut rows = Vec::new();
    for &t in &budgets {
        let hc = HypothesisConfig::scheduled(t, cfg.sigma2)?;
        for policy in policies {
            let s = workers.install(|| hypothesis_test_regret(policy, &hc, base..base + seeds))?;
            rows.push(LowerboundRow {
                budget: t,
                shift: hc.shift.to_f64(),
                policy: s.policy,
                seeds: s.seeds,
                certified: s.certified,
                mean_simple: s.simple_regret.mean,
                se_simple: s.simple_regret.se(),
                mean_mi: s.mean_mi,
                floor: s.floor,
                floor_respected: s.floor_respected(),
                cap_violations: s.cap_violations,
            });
        }
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    let hash = json_hash(&(&budgets, seeds, base, cfg.sigma2, cfg.delta_override));
    write_csv(&cfg.output_dir.join("lowerbound.csv"), &hash, &rows)?;
    println!("{:>8} {:>14} {:>9} {:>12} {:>12} {:>10} {:>6}", "T", "policy", "certified", "mean r_T", "floor", "mean MI", "ok");
    for r in &rows {
        println!(
            "{:>8} {:>14} {:>9} {:>12.3e} {:>12.3e} {:>10.3e} {:>6}",
            r.budget, r.policy, r.certified, r.mean_simple, r.floor, r.mean_mi, r.floor_respected
        );
    }
    // The genie knows the label, so only the blind policies are held to the floor.
    let ok = rows
        .iter()
        .filter(|r| r.policy != "genie")
        .all(|r| r.floor_respected && r.cap_violations == 0);
    Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}
