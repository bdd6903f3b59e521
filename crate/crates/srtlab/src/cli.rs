//! Argument definitions and the three subcommands.
//!
//! Exit codes: 0 success, 1 bad arguments, config or input files, 2 a
//! failure while running, 3 a fixture check failed.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use srtlab_core::cascade::{analyze_network, run_cascade_traced};
use srtlab_core::contracts::exogenous_default_probs;
use srtlab_core::fixtures::{self, FixtureReport, ThreeLenderExample};
use srtlab_core::sim::ScenarioOutput;
use srtlab_core::tax::{optimize_srt, SrtParams};
use srtlab_core::{BankId, NetExposureMatrix, Policy, Simulation};

use crate::config::{self, ConfigError};
use crate::export;
use crate::manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_FIXTURE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "srtlab", version, about = "Interbank network simulation under systemic risk taxes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario under one or more tax policies and write CSVs.
    Run(RunArgs),
    /// Check the built-in worked examples.
    Fixtures(FixtureArgs),
    /// Systemic impact and ESL of an exposure matrix read from CSV.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Notax,
    Tobin,
    Srt,
    All,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file in key = value format.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Repeat the run described by a manifest.json.
    #[arg(long, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
    /// RNG seed; overrides the config file and SRTLAB_SEED
    #[arg(long)]
    pub seed: Option<u64>,
    /// Policies to simulate; repeatable.
    #[arg(long, value_enum)]
    pub policy: Vec<PolicyArg>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override one setting, e.g. `--set steps=100`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Also write each policy's final loan book and exposure matrix.
    #[arg(long)]
    pub export_network: bool,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// Print the reports as a JSON array
    #[arg(long)]
    pub json: bool,
    /// Write the example market, its SRT schedule and the golden matrix here.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Square antisymmetric matrix, one row per line.
    #[arg(long)]
    pub exposure: PathBuf,
    /// Equity per bank, as one row or one column.
    #[arg(long)]
    pub equity: PathBuf,
    /// Hazard rates per bank; without them every bank is equally likely to
    /// fail first.
    #[arg(long)]
    pub hazards: Option<PathBuf>,
    /// Size of the hypothetical loans in the ESL change table.
    #[arg(long, default_value_t = 1.0)]
    pub loan_size: f64,
    /// Print a JSON object instead of tables
    #[arg(long)]
    pub json: bool,
    /// Write a per-step cascade trace for every seed bank as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

/// Error carrying the exit code it should produce.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

fn input(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        error: error.into(),
    }
}

fn runtime(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        error: error.into(),
    }
}

/// Runs a parsed command, writing reports to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    match cli.command {
        Command::Run(args) => run(&args, out),
        Command::Fixtures(args) => run_fixtures(&args, out),
        Command::Analyze(args) => analyze(&args, out),
    }
}

fn policies(args: &[PolicyArg]) -> Vec<Policy> {
    let mut out = Vec::new();
    for p in args {
        match p {
            PolicyArg::Notax => out.push(Policy::NoTax),
            PolicyArg::Tobin => out.push(Policy::Tobin),
            PolicyArg::Srt => out.push(Policy::Srt),
            PolicyArg::All => out.extend(Policy::ALL),
        }
    }
    if out.is_empty() {
        out.extend(Policy::ALL);
    }
    out.sort();
    out.dedup();
    out
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(runtime)
}

fn resolve_run(args: &RunArgs) -> Result<RunManifest, Failure> {
    if let Some(path) = &args.manifest {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read manifest {}", path.display()))
            .map_err(input)?;
        let mut m = RunManifest::parse(&text)
            .with_context(|| format!("malformed manifest {}", path.display()))
            .map_err(input)?;
        for o in &args.set {
            let (k, v) = config::split_assignment(o, "--set").map_err(input)?;
            config::apply(&mut m.config, &k, &v, "--set").map_err(input)?;
        }
        if let Some(seed) = args.seed {
            m.config.seed = seed;
        }
        m.config.validate().map_err(|e| input(ConfigError::from(e)))?;
        if !args.policy.is_empty() {
            m.policies = policies(&args.policy);
        }
        return Ok(RunManifest::new(
            m.config_path.as_deref(),
            m.config,
            m.policies,
            &args.out,
        ));
    }
    let mut cfg = config::load(args.config.as_deref(), &args.set).map_err(input)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(RunManifest::new(
        args.config.as_deref(),
        cfg,
        policies(&args.policy),
        &args.out,
    ))
}

fn run(args: &RunArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let manifest = resolve_run(args)?;
    let dir = &manifest.output_dir;
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
        .map_err(runtime)?;

    let started = Instant::now();
    let mut sim = Simulation::new(manifest.config.clone(), &manifest.policies).map_err(runtime)?;
    while !sim.is_finished() {
        sim.step()
            .with_context(|| format!("simulation failed in period {}", sim.period() + 1))
            .map_err(runtime)?;
    }
    if args.export_network {
        for &p in &manifest.policies {
            if let Some(book) = sim.book(p) {
                let name = p.label();
                export::write_loan_book(create(&dir.join(format!("{name}_loans.csv")))?, book)
                    .map_err(runtime)?;
                export::write_exposure(
                    create(&dir.join(format!("{name}_exposure.csv")))?,
                    &book.net_exposure(),
                )
                .map_err(runtime)?;
            }
        }
    }
    let output = sim.finish().map_err(runtime)?;
    let elapsed = started.elapsed();

    write_outputs(dir, &output)?;
    if let Some(srt) = output.run(Policy::Srt) {
        let mut log = create(&dir.join("srt_optimizer.log"))?;
        let s = srt.optimizer;
        writeln!(
            log,
            "periods {}\ncandidates {}\nmax_candidates {}\nvolume_shortfalls {}\nwall_seconds {:.3}",
            s.periods,
            s.candidates,
            s.max_candidates,
            s.volume_shortfalls,
            elapsed.as_secs_f64()
        )
        .map_err(runtime)?;
    }
    fs::write(dir.join("manifest.json"), manifest.render())
        .context("cannot write manifest")
        .map_err(runtime)?;

    for r in &output.runs {
        let last = r.records.last();
        writeln!(
            out,
            "{:<6} mean_esl {} cum_volume {}",
            r.policy.label(),
            export::fmt(r.mean_esl()),
            last.map_or(0, |x| x.cum_volume)
        )
        .map_err(runtime)?;
    }
    Ok(EXIT_OK)
}

fn write_outputs(dir: &Path, output: &ScenarioOutput) -> Result<(), Failure> {
    for r in &output.runs {
        let name = r.policy.label();
        export::write_timeseries(create(&dir.join(format!("{name}.csv")))?, &r.records)
            .map_err(runtime)?;
        export::write_distributions(
            create(&dir.join(format!("{name}_distributions.csv")))?,
            &r.distributions,
        )
        .map_err(runtime)?;
        export::write_probabilities(
            create(&dir.join(format!("{name}_probabilities.csv")))?,
            &r.probabilities,
        )
        .map_err(runtime)?;
    }
    Ok(())
}

fn dump_fixtures(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    let ex = ThreeLenderExample::new();
    export::write_market(BufWriter::new(File::create(dir.join("example_market.json"))?), &ex.market)?;
    let sol = optimize_srt(&ex.market, &ex.context(), 2, &SrtParams::default())?;
    export::write_tax_schedule(File::create(dir.join("example_srt_tax.csv"))?, &sol.tax)?;
    export::write_exposure(
        File::create(dir.join("golden_exposure.csv"))?,
        &fixtures::golden_exposure_matrix(),
    )?;
    Ok(())
}

fn run_fixtures(args: &FixtureArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let reports: Vec<FixtureReport> = fixtures::run_all();
    if args.json {
        serde_json::to_writer_pretty(&mut *out, &reports).map_err(runtime)?;
        writeln!(out).map_err(runtime)?;
    } else {
        for r in &reports {
            let tag = if r.passed { "PASS" } else { "FAIL" };
            writeln!(out, "{tag} {}: {}", r.name, r.detail).map_err(runtime)?;
        }
    }
    if let Some(dir) = &args.dump {
        dump_fixtures(dir).map_err(runtime)?;
    }
    Ok(if reports.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_FIXTURE
    })
}

fn read_file<T>(path: &Path, parse: impl Fn(File) -> Result<T, String>) -> Result<T, Failure> {
    let file = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(input)?;
    parse(file).map_err(|e| input(anyhow!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct AnalyzeReport {
    rho_1: Vec<f64>,
    #[serde(flatten)]
    report: srtlab_core::cascade::NetworkReport,
}

fn analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let rows = read_file(&args.exposure, export::read_matrix)?;
    let a = NetExposureMatrix::from_rows(&rows)
        .with_context(|| format!("{}", args.exposure.display()))
        .map_err(input)?;
    let n = a.size();
    let equities = read_file(&args.equity, export::read_vector)?;
    if equities.len() != n {
        return Err(input(anyhow!(
            "{}: {} equities for {n} banks",
            args.equity.display(),
            equities.len()
        )));
    }
    let rho_1 = match &args.hazards {
        Some(path) => {
            let h = read_file(path, export::read_vector)?;
            if h.len() != n {
                return Err(input(anyhow!("{}: {} hazard rates for {n} banks", path.display(), h.len())));
            }
            exogenous_default_probs(&h, 1).map_err(input)?
        }
        None => vec![1.0 / n.max(1) as f64; n],
    };
    if !(args.loan_size.is_finite() && args.loan_size > 0.0) {
        return Err(input(anyhow!("loan size must be positive, got {}", args.loan_size)));
    }
    let report = analyze_network(&a, &equities, &rho_1, args.loan_size).map_err(input)?;

    if let Some(path) = &args.trace {
        let mut w = create(path)?;
        for s in 0..n {
            let (_, trace) = run_cascade_traced(&a, &equities, &[BankId(s)]).map_err(runtime)?;
            export::write_cascade_trace(&mut w, BankId(s), &trace).map_err(runtime)?;
        }
        w.flush().map_err(runtime)?;
    }

    let io = |e: io::Error| runtime(e);
    if args.json {
        serde_json::to_writer_pretty(&mut *out, &AnalyzeReport { rho_1, report }).map_err(runtime)?;
        writeln!(out).map_err(io)?;
        return Ok(EXIT_OK);
    }
    writeln!(out, "bank,systemic_impact,rho_1").map_err(io)?;
    for (i, (si, p)) in report.systemic_impact.iter().zip(&rho_1).enumerate() {
        writeln!(out, "{i},{},{}", export::fmt(*si), export::fmt(*p)).map_err(io)?;
    }
    writeln!(out, "esl,{}", export::fmt(report.esl)).map_err(io)?;
    writeln!(out, "lender,borrower,delta_esl").map_err(io)?;
    for e in &report.edges {
        writeln!(out, "{},{},{}", e.lender, e.borrower, export::fmt(e.delta_esl)).map_err(io)?;
    }
    Ok(EXIT_OK)
}
