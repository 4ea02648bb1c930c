//! Command-line front end.
//!
//! Seven subcommands: `simulate` (seeded sampling to CSV), `stats` (moment
//! summary), `estimate` (tail index), `growth` (prefix kurtosis curve with
//! slope and linearity reports), `test` (bootstrap test of `alpha < 2`),
//! `experiment` (Monte Carlo harness), and `ingest` (price CSV to the
//! log-return workflow).
//!
//! Conventions: every artifact embeds its fully resolved configuration
//! (sample CSVs as a `# config=...` header line, JSON documents as a
//! `"config"` field), so any output can be reproduced from the artifact
//! alone. Seeds are always explicit — there is no implicit or
//! environment-supplied default. stdout carries exactly one machine-readable
//! document; progress goes to stderr. Exit codes: 0 success, 1 usage error,
//! 2 data/numeric error.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::distributions::{
    sample_gaussian, sample_student_t, sample_symmetric_stable, SeedSpec, StableParams,
    StudentTParams,
};
use crate::error::{Error, Result};
use crate::experiments::{ExperimentConfig, ExperimentKind, FamilySpec, SizeSpec};
use crate::moments;
use crate::returns_ingest::{self, WindowEstimates};
use crate::tail_inference::{
    alpha_from_kurtosis, bootstrap_alpha_test, fit_growth_slope, kogon_williams,
    linearity_diagnostic_with_threshold, AlphaEstimate, BootstrapResult, LinearityReport, SlopeFit,
    DEFAULT_LINEARITY_THRESHOLD,
};

#[derive(Parser)]
#[command(
    name = "stabletail",
    version,
    about = "Kurtosis-based tail-index diagnostics for heavy-tailed samples"
)]
struct Cli {
    /// Worker threads for parallel sections (results are identical at any
    /// thread count).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a seeded sample and emit it as CSV (one value per line).
    Simulate(SimulateArgs),
    /// Moment summary (mean, m2..m4, b2, g2, g1, c) of a sample CSV.
    Stats(StatsArgs),
    /// Tail-index estimate from a sample CSV.
    Estimate(EstimateArgs),
    /// Prefix kurtosis curve with slope fit and linearity diagnostic.
    Growth(GrowthArgs),
    /// Percentile-bootstrap test of alpha < 2.
    Test(TestArgs),
    /// Run a Monte Carlo experiment and write its report files.
    Experiment(ExperimentArgs),
    /// Load a price CSV and run the log-return workflow.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Distribution family: stable | t | gaussian.
    #[arg(long)]
    dist: String,
    /// Tail index (stable family).
    #[arg(long)]
    alpha: Option<f64>,
    /// Degrees of freedom (t family).
    #[arg(long)]
    nu: Option<f64>,
    /// Scale (stable: characteristic-function scale; gaussian: standard
    /// deviation).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Location (stable family).
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Sample size.
    #[arg(long)]
    n: usize,
    /// Master seed (explicit for provenance).
    #[arg(long)]
    seed: u64,
    /// Stream id under the master seed.
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Sample CSV (`-` for stdin).
    input: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Sample CSV (`-` for stdin).
    input: String,
    /// kurtosis (g2/n inversion) | kw (characteristic function).
    #[arg(long, default_value = "kurtosis")]
    method: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GrowthArgs {
    /// Sample CSV (`-` for stdin).
    input: String,
    /// Comma-separated prefix checkpoints, e.g. 50,100,150.
    #[arg(long)]
    checkpoints: String,
    /// Linearity cut on the quadratic R^2 gain.
    #[arg(long, default_value_t = DEFAULT_LINEARITY_THRESHOLD)]
    threshold: f64,
    /// Also write the curve as `n,g2` CSV to this file.
    #[arg(long)]
    out_curve: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    /// Sample CSV (`-` for stdin).
    input: String,
    /// Number of bootstrap resamples.
    #[arg(long = "bootstrap", default_value_t = 1000)]
    b: usize,
    /// Test level in (0, 0.5).
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// Master seed (explicit for provenance).
    #[arg(long)]
    seed: u64,
    /// Stream id under the master seed.
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment kind (required unless --config provides it).
    #[arg(long)]
    kind: Option<String>,
    /// Config file (.toml or .json) instead of the kind's preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (required without --config).
    #[arg(long)]
    seed: Option<u64>,
    /// Override: sampled family (stable | student-t | gaussian).
    #[arg(long)]
    family: Option<String>,
    /// Override: comma-separated tail indices.
    #[arg(long)]
    alphas: Option<String>,
    /// Override: comma-separated degrees of freedom.
    #[arg(long)]
    nus: Option<String>,
    /// Override: replicates per grid cell.
    #[arg(long)]
    m: Option<usize>,
    /// Override: comma-separated checkpoints.
    #[arg(long)]
    checkpoints: Option<String>,
    /// Override: sample sizes — fixed:N | uniform:LO:HI | grid:N1,N2,...
    #[arg(long)]
    size: Option<String>,
    /// Directory for rows.csv, summary.json, meta.json and figure CSVs.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// Price CSV with a header row.
    input: PathBuf,
    /// Date column name.
    #[arg(long, default_value = "date")]
    date_col: String,
    /// Close column name.
    #[arg(long, default_value = "close")]
    close_col: String,
    /// Rolling-kurtosis step (observations per checkpoint).
    #[arg(long, default_value_t = 10)]
    step: usize,
    /// Half-open return windows START:END, comma-separated.
    #[arg(long)]
    windows: Option<String>,
    /// Linearity cut on the quadratic R^2 gain.
    #[arg(long, default_value_t = DEFAULT_LINEARITY_THRESHOLD)]
    threshold: f64,
    /// Also write the rolling curve as `n,g2` CSV to this file.
    #[arg(long)]
    out_curve: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point: parse, dispatch, map errors to exit codes.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    let threads = cli.threads;
    let result = match threads {
        Some(0) => Err(Error::Parameter("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(cli.command))),
        None => dispatch(cli.command),
    };

    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parameter(_) | Error::Config(_) => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Stats(args) => stats(args),
        Command::Estimate(args) => estimate(args),
        Command::Growth(args) => growth(args),
        Command::Test(args) => test(args),
        Command::Experiment(args) => experiment(args),
        Command::Ingest(args) => ingest(args),
    }
}

/// Write `text` to `out` when given, else to stdout — identical bytes either
/// way.
fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Read a sample CSV: one value per line, `#` comment lines and blank lines
/// skipped. `-` reads stdin.
fn read_sample(input: &str) -> Result<Vec<f64>> {
    let text = if input == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        std::fs::read_to_string(input)
            .map_err(|e| Error::Ingest(format!("cannot read {input}: {e}")))?
    };
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        // Tolerate a lone `value` header from foreign tools.
        if i == 0 && line == "value" {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Ingest(format!("line {}: `{line}` is not a number", i + 1)))?;
        values.push(v);
    }
    Ok(values)
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad {what} value `{s}`")))
        })
        .collect()
}

fn parse_usize_list(text: &str, what: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad {what} value `{s}`")))
        })
        .collect()
}

fn parse_size_spec(text: &str) -> Result<SizeSpec> {
    let err = || {
        Error::Parameter(format!(
            "bad size spec `{text}`; expected fixed:N, uniform:LO:HI or grid:N1,N2,..."
        ))
    };
    let (tag, rest) = text.split_once(':').ok_or_else(err)?;
    match tag {
        "fixed" => Ok(SizeSpec::Fixed(rest.parse().map_err(|_| err())?)),
        "uniform" => {
            let (lo, hi) = rest.split_once(':').ok_or_else(err)?;
            Ok(SizeSpec::UniformRandom {
                lo: lo.parse().map_err(|_| err())?,
                hi: hi.parse().map_err(|_| err())?,
            })
        }
        "grid" => Ok(SizeSpec::Grid(parse_usize_list(rest, "grid size")?)),
        _ => Err(err()),
    }
}

fn parse_windows(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(|w| {
            let bad = || Error::Parameter(format!("bad window `{w}`; expected START:END"));
            let (s, e) = w.trim().split_once(':').ok_or_else(bad)?;
            Ok((s.parse().map_err(|_| bad())?, e.parse().map_err(|_| bad())?))
        })
        .collect()
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn simulate(args: SimulateArgs) -> Result<()> {
    #[derive(Serialize)]
    struct Echo<'a> {
        command: &'a str,
        dist: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        nu: Option<f64>,
        sigma: f64,
        mu: f64,
        n: usize,
        master_seed: u64,
        stream_id: u64,
    }

    let seed = SeedSpec::new(args.seed, args.stream);
    let (xs, echo) = match args.dist.as_str() {
        "stable" => {
            let alpha = args
                .alpha
                .ok_or_else(|| Error::Parameter("--dist stable requires --alpha".into()))?;
            let params = StableParams::new(alpha, args.sigma, args.mu)?;
            let xs = sample_symmetric_stable(&params, args.n, seed);
            (
                xs,
                Echo {
                    command: "simulate",
                    dist: "stable",
                    alpha: Some(alpha),
                    nu: None,
                    sigma: args.sigma,
                    mu: args.mu,
                    n: args.n,
                    master_seed: args.seed,
                    stream_id: args.stream,
                },
            )
        }
        "t" => {
            let nu = args
                .nu
                .ok_or_else(|| Error::Parameter("--dist t requires --nu".into()))?;
            if args.sigma != 1.0 || args.mu != 0.0 {
                return Err(Error::Parameter(
                    "--sigma/--mu do not apply to the t family".into(),
                ));
            }
            let params = StudentTParams::new(nu)?;
            let xs = sample_student_t(&params, args.n, seed);
            (
                xs,
                Echo {
                    command: "simulate",
                    dist: "t",
                    alpha: None,
                    nu: Some(nu),
                    sigma: 1.0,
                    mu: 0.0,
                    n: args.n,
                    master_seed: args.seed,
                    stream_id: args.stream,
                },
            )
        }
        "gaussian" => {
            if args.mu != 0.0 {
                return Err(Error::Parameter(
                    "--mu does not apply to the gaussian family".into(),
                ));
            }
            let xs = sample_gaussian(args.sigma, args.n, seed)?;
            (
                xs,
                Echo {
                    command: "simulate",
                    dist: "gaussian",
                    alpha: None,
                    nu: None,
                    sigma: args.sigma,
                    mu: 0.0,
                    n: args.n,
                    master_seed: args.seed,
                    stream_id: args.stream,
                },
            )
        }
        other => {
            return Err(Error::Parameter(format!(
                "unknown distribution `{other}`; expected stable, t or gaussian"
            )))
        }
    };

    let mut text = format!(
        "# config={}\n",
        serde_json::to_string(&echo).expect("echo serializes")
    );
    for x in &xs {
        text.push_str(&x.to_string());
        text.push('\n');
    }
    emit(&text, args.out.as_deref())
}

fn stats(args: StatsArgs) -> Result<()> {
    #[derive(Serialize)]
    struct Echo<'a> {
        command: &'a str,
        input: &'a str,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        config: Echo<'a>,
        stats: moments::SampleStats,
    }

    let xs = read_sample(&args.input)?;
    let out = Out {
        config: Echo {
            command: "stats",
            input: &args.input,
        },
        stats: moments::compute_stats(&xs)?,
    };
    emit(&to_pretty_json(&out), args.out.as_deref())
}

fn estimate(args: EstimateArgs) -> Result<()> {
    #[derive(Serialize)]
    struct Echo<'a> {
        command: &'a str,
        input: &'a str,
        method: &'a str,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        config: Echo<'a>,
        estimate: AlphaEstimate,
    }

    let xs = read_sample(&args.input)?;
    let estimate = match args.method.as_str() {
        "kurtosis" | "kurtosis-ratio" => {
            let stats = moments::compute_stats(&xs)?;
            alpha_from_kurtosis(stats.g2, stats.n)?
        }
        "kw" | "kogon-williams" => kogon_williams(&xs)?,
        other => {
            return Err(Error::Parameter(format!(
                "unknown method `{other}`; expected kurtosis or kw"
            )))
        }
    };
    let out = Out {
        config: Echo {
            command: "estimate",
            input: &args.input,
            method: &args.method,
        },
        estimate,
    };
    emit(&to_pretty_json(&out), args.out.as_deref())
}

fn growth(args: GrowthArgs) -> Result<()> {
    #[derive(Serialize)]
    struct Echo<'a> {
        command: &'a str,
        input: &'a str,
        checkpoints: &'a [usize],
        threshold: f64,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        config: Echo<'a>,
        curve: &'a [(usize, f64)],
        slope_fit: Option<SlopeFit>,
        linearity: Option<LinearityReport>,
    }

    let checkpoints = parse_usize_list(&args.checkpoints, "checkpoint")?;
    let xs = read_sample(&args.input)?;
    let curve = moments::growth_curve(&xs, &checkpoints)?;
    let slope_fit = if curve.len() >= 3 {
        Some(fit_growth_slope(&curve)?)
    } else {
        None
    };
    let linearity = if curve.len() >= 5 {
        Some(linearity_diagnostic_with_threshold(&curve, args.threshold)?)
    } else {
        None
    };

    if let Some(path) = &args.out_curve {
        let mut buf = Vec::new();
        curve.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
    }

    let out = Out {
        config: Echo {
            command: "growth",
            input: &args.input,
            checkpoints: &checkpoints,
            threshold: args.threshold,
        },
        curve: curve.points(),
        slope_fit,
        linearity,
    };
    emit(&to_pretty_json(&out), args.out.as_deref())
}

fn test(args: TestArgs) -> Result<()> {
    #[derive(Serialize)]
    struct Echo<'a> {
        command: &'a str,
        input: &'a str,
        #[serde(rename = "B")]
        b: usize,
        level: f64,
        master_seed: u64,
        stream_id: u64,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        config: Echo<'a>,
        bootstrap: BootstrapResult,
    }

    let xs = read_sample(&args.input)?;
    let seed = SeedSpec::new(args.seed, args.stream);
    let out = Out {
        config: Echo {
            command: "test",
            input: &args.input,
            b: args.b,
            level: args.level,
            master_seed: args.seed,
            stream_id: args.stream,
        },
        bootstrap: bootstrap_alpha_test(&xs, args.b, args.level, seed)?,
    };
    emit(&to_pretty_json(&out), args.out.as_deref())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            match path.extension().and_then(|e| e.to_str()) {
                Some("toml") => ExperimentConfig::from_toml_str(&text)?,
                Some("json") => ExperimentConfig::from_json_str(&text)?,
                _ => {
                    return Err(Error::Config(format!(
                        "config file {} must end in .toml or .json",
                        path.display()
                    )))
                }
            }
        }
        None => {
            let kind_text = args
                .kind
                .as_deref()
                .ok_or_else(|| Error::Parameter("provide --kind or --config".into()))?;
            let kind: ExperimentKind = kind_text.parse()?;
            let seed = args.seed.ok_or_else(|| {
                Error::Parameter("--seed is required when running without --config".into())
            })?;
            ExperimentConfig::preset(kind, seed)
        }
    };

    // Explicit flags override whatever the preset or file provided.
    if let (Some(kind_text), Some(_)) = (&args.kind, &args.config) {
        let kind: ExperimentKind = kind_text.parse()?;
        if kind != config.kind {
            return Err(Error::Parameter(format!(
                "--kind {kind} conflicts with the config file's {}",
                config.kind
            )));
        }
    }
    if args.config.is_some() {
        if let Some(seed) = args.seed {
            config.master_seed = seed;
        }
    }
    if let Some(family) = &args.family {
        config.family = family.parse()?;
        if config.family != FamilySpec::Stable {
            config.alphas = Vec::new();
        }
        if config.family == FamilySpec::StudentT && config.nus.is_empty() {
            config.nus = vec![3.0, 4.0, 5.0];
        }
    }
    if let Some(alphas) = &args.alphas {
        config.alphas = parse_f64_list(alphas, "alpha")?;
    }
    if let Some(nus) = &args.nus {
        config.nus = parse_f64_list(nus, "nu")?;
    }
    if let Some(m) = args.m {
        config.m = m;
    }
    if let Some(checkpoints) = &args.checkpoints {
        config.checkpoints = parse_usize_list(checkpoints, "checkpoint")?;
    }
    if let Some(size) = &args.size {
        config.size = parse_size_spec(size)?;
    }
    config.validate()?;

    eprintln!(
        "running {} (family {}, m = {}, master seed {})",
        config.kind, config.family, config.m, config.master_seed
    );
    let report = crate::experiments::run_experiment(&config)?;
    eprintln!(
        "done in {:.2}s on {} thread(s)",
        report.runtime.wall_seconds, report.runtime.threads
    );

    std::fs::create_dir_all(&args.out_dir)?;
    let mut rows = Vec::new();
    report.write_rows_csv(&mut rows)?;
    std::fs::write(args.out_dir.join("rows.csv"), rows)?;
    let summary = report.summary_json();
    std::fs::write(args.out_dir.join("summary.json"), &summary)?;
    std::fs::write(args.out_dir.join("meta.json"), report.meta_json())?;
    for (name, text) in report.figure_csvs() {
        std::fs::write(args.out_dir.join(name), text)?;
    }
    print!("{summary}");
    Ok(())
}

fn ingest(args: IngestArgs) -> Result<()> {
    #[derive(Serialize)]
    struct Echo<'a> {
        command: &'a str,
        input: String,
        date_col: &'a str,
        close_col: &'a str,
        step: usize,
        windows: &'a [(usize, usize)],
        threshold: f64,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        config: Echo<'a>,
        warnings: &'a [String],
        n_prices: usize,
        n_returns: usize,
        curve: &'a [(usize, f64)],
        slope_fit: Option<SlopeFit>,
        linearity: Option<LinearityReport>,
        windows: Vec<WindowEstimates>,
    }

    let windows = match &args.windows {
        Some(text) => parse_windows(text)?,
        None => Vec::new(),
    };
    let prices = returns_ingest::load_price_csv(&args.input, &args.date_col, &args.close_col)?;
    for w in prices.warnings() {
        eprintln!("warning: {w}");
    }
    let returns = returns_ingest::log_returns(&prices)?;
    let curve = returns_ingest::rolling_kurtosis(&returns, args.step)?;
    let slope_fit = if curve.len() >= 3 {
        Some(fit_growth_slope(&curve)?)
    } else {
        None
    };
    let linearity = if curve.len() >= 5 {
        Some(linearity_diagnostic_with_threshold(&curve, args.threshold)?)
    } else {
        None
    };
    let window_reports = returns_ingest::window_estimates(&returns, &windows)?;

    if let Some(path) = &args.out_curve {
        let mut buf = Vec::new();
        curve.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
    }

    let out = Out {
        config: Echo {
            command: "ingest",
            input: args.input.display().to_string(),
            date_col: &args.date_col,
            close_col: &args.close_col,
            step: args.step,
            windows: &windows,
            threshold: args.threshold,
        },
        warnings: prices.warnings(),
        n_prices: prices.len(),
        n_returns: returns.len(),
        curve: curve.points(),
        slope_fit,
        linearity,
        windows: window_reports,
    };
    emit(&to_pretty_json(&out), args.out.as_deref())
}
