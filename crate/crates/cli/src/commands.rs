//! Subcommand definitions and implementations.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hsicts::bootstrap::{aligned_residuals, bootstrap_tests, BootstrapConfig, EstimatorMode};
use hsicts::crosscorr::{
    auto_var_order, bandwidth_rule, chi2_isf, chi2_sf, g_test, l_test, single_lag_scan, t_test, w_test, SquaredFamily,
};
use hsicts::hsic::{Direction, LagConfig};
use hsicts::kernels::KernelSpec;
use hsicts::models::{FitResult, ModelSpec, DEFAULT_BURN_IN};
use hsicts::outcome::DEFAULT_ALPHAS;
use hsicts::rng::{self, Purpose};
use hsicts::simlab::{self, egp_innovations, Dgp, EgpSpec, McConfig, TestSpec};
use hsicts::MultiSeries;
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use crate::failure::{CoreContext, Failure};
use crate::io::{log_returns, read_csv, write_csv_file, Table};
use crate::report::{self, emit, FitSummary, LagRow, Provenance, Report};

#[derive(Debug, Parser)]
#[command(name = "hsicts", version, about = "HSIC-based independence tests between two multivariate time series")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "HSICTS_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit both working models and test their residuals for independence.
    Test(TestArgs),
    /// Fit a working model to one series.
    Fit(FitArgs),
    /// Monte Carlo size/power study on a simulated design.
    Simulate(SimulateArgs),
    /// Single-lag statistics with one-sided 95% bounds for each lag and direction.
    Lagscan(LagscanArgs),
    /// Write a simulated pair of series to CSV files.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

impl DirectionArg {
    fn directions(self) -> Vec<Direction> {
        match self {
            DirectionArg::One => vec![Direction::One],
            DirectionArg::Two => vec![Direction::Two],
            DirectionArg::Both => vec![Direction::One, Direction::Two],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Auto,
    Refit,
    OneStep,
}

impl From<ModeArg> for EstimatorMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Auto => EstimatorMode::Auto,
            ModeArg::Refit => EstimatorMode::FullRefit,
            ModeArg::OneStep => EstimatorMode::OneStep,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Input series shared by `test` and `lagscan`.
#[derive(Debug, Args)]
pub struct PairInput {
    /// CSV file for the first series (or both, with --split).
    #[arg(long)]
    pub data1: PathBuf,
    /// CSV file for the second series.
    #[arg(long)]
    pub data2: Option<PathBuf>,
    /// Without --data2: number of leading columns of --data1 forming series 1.
    #[arg(long)]
    pub split: Option<usize>,
    /// Treat inputs as prices and analyse their log returns.
    #[arg(long)]
    pub log_returns: bool,
    #[arg(long, default_value = "var:1")]
    pub model1: ModelSpec,
    #[arg(long, default_value = "var:1")]
    pub model2: ModelSpec,
}

/// Bootstrap flags shared by `test` and `lagscan`.
#[derive(Debug, Args)]
pub struct BootArgs {
    /// Kernel for series 1 (gaussian:s | laplace:s | imq:a:b | fbm:h).
    #[arg(long, default_value = "gaussian:1")]
    pub kernel: KernelSpec,
    /// Kernel for series 2; defaults to --kernel.
    #[arg(long)]
    pub kernel2: Option<KernelSpec>,
    #[arg(short = 'B', long = "replicates", default_value_t = 199)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub estimator_mode: ModeArg,
    /// Resample centered residuals without whitening.
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: PairInput,
    #[command(flatten)]
    pub boot: BootArgs,
    /// Single-lag statistic at lag m (repeatable).
    #[arg(long = "lag")]
    pub lags: Vec<usize>,
    /// Joint statistic over lags 0..=M (repeatable).
    #[arg(long = "max-lag")]
    pub max_lags: Vec<usize>,
    #[arg(long, value_enum, default_value_t = DirectionArg::Both)]
    pub direction: DirectionArg,
    /// Significance level (repeatable).
    #[arg(long = "alpha")]
    pub alphas: Vec<f64>,
    /// Cross-correlation competitor, e.g. g1:3, w1:h1, l2:6, t1:3 (repeatable).
    #[arg(long = "competitor")]
    pub competitors: Vec<TestSpec>,
    /// VAR order for the W tests (default: 3 below 150 observations, else 6).
    #[arg(long)]
    pub w_order: Option<usize>,
    /// Keep every bootstrap replicate statistic in the report.
    #[arg(long)]
    pub emit_replicates: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "var:1")]
    pub model: ModelSpec,
    #[arg(long)]
    pub log_returns: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the residuals to this CSV file.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DgpArg {
    #[value(name = "model-5-1")]
    Model51,
    #[value(name = "model-5-2")]
    Model52,
}

impl From<DgpArg> for Dgp {
    fn from(d: DgpArg) -> Self {
        match d {
            DgpArg::Model51 => Dgp::Model51,
            DgpArg::Model52 => Dgp::Model52,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = DgpArg::Model51)]
    pub dgp: DgpArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=6))]
    pub egp: u8,
    #[arg(short = 'n', long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub replications: usize,
    /// Test to evaluate, e.g. s1:0, j2:6, g1:3, w1:h1, l1:3 (repeatable; default: the full battery).
    #[arg(long = "test")]
    pub tests: Vec<TestSpec>,
    #[arg(long, default_value = "gaussian:1")]
    pub kernel: KernelSpec,
    #[arg(short = 'B', long = "replicates", default_value_t = 199)]
    pub replicates: usize,
    #[arg(long = "alpha")]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub estimator_mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
    /// 1000 replications with B = 1000.
    #[arg(long)]
    pub full_scale: bool,
    /// CSV of rejection rates (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON report with the configuration echo.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SquaredArg {
    L,
    T,
}

#[derive(Debug, Args)]
pub struct LagscanArgs {
    #[command(flatten)]
    pub input: PairInput,
    #[command(flatten)]
    pub boot: BootArgs,
    #[arg(long, default_value_t = 10)]
    pub max_lag: usize,
    /// Add single-lag squared-residual statistics (repeatable).
    #[arg(long = "squared", value_enum)]
    pub squared: Vec<SquaredArg>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenerateDgp {
    WhiteNoise,
    #[value(name = "model-5-1")]
    Model51,
    #[value(name = "model-5-2")]
    Model52,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = GenerateDgp::Model51)]
    pub dgp: GenerateDgp,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=6))]
    pub egp: u8,
    #[arg(short = 'n', long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
    #[arg(long)]
    pub out1: PathBuf,
    #[arg(long)]
    pub out2: PathBuf,
}

fn load(path: &Path, log: bool) -> Result<Table, Failure> {
    let mut t = read_csv(path)?;
    if log {
        t.data = log_returns(&t.data)?;
    }
    Ok(t)
}

fn load_pair(input: &PairInput) -> Result<(MultiSeries, MultiSeries), Failure> {
    let first = load(&input.data1, input.log_returns)?;
    let (a, b) = match &input.data2 {
        Some(p) => {
            if input.split.is_some() {
                return Err(Failure::usage("--split only applies without --data2"));
            }
            (first.data, load(p, input.log_returns)?.data)
        }
        None => {
            let d = first.data.ncols();
            let k = input.split.unwrap_or(d / 2);
            if k == 0 || k >= d {
                return Err(Failure::usage(format!("--split {k} must leave columns for both series (file has {d})")));
            }
            (first.data.slice_cols(0, k).ctx("splitting columns")?, first.data.slice_cols(k, d).ctx("splitting columns")?)
        }
    };
    if a.nrows() != b.nrows() {
        return Err(Failure::data(format!("series have {} and {} rows; align them first", a.nrows(), b.nrows())));
    }
    Ok((a, b))
}

fn fit_series(spec: &ModelSpec, data: &MultiSeries, seed: u64, label: &str) -> Result<FitResult, Failure> {
    spec.fit(data, seed).ctx(format!("fitting {spec} to {label}"))
}

fn fit_pair(input: &PairInput, seed: u64) -> Result<(MultiSeries, MultiSeries, FitResult, FitResult), Failure> {
    let (a, b) = load_pair(input)?;
    let f1 = fit_series(&input.model1, &a, rng::derive_seed(seed, Purpose::MultiStart, 0), "series 1")?;
    let f2 = fit_series(&input.model2, &b, rng::derive_seed(seed, Purpose::MultiStart, 1), "series 2")?;
    Ok((a, b, f1, f2))
}

fn boot_config(b: &BootArgs, alphas: Vec<f64>, keep: bool) -> BootstrapConfig {
    BootstrapConfig {
        replicates: b.replicates,
        alphas,
        estimator: b.estimator_mode.into(),
        master_seed: b.seed,
        standardize: !b.no_standardize,
        burn_in: b.burn_in,
        keep_replicates: keep,
    }
}

fn resolved_alphas(alphas: &[f64]) -> Vec<f64> {
    if alphas.is_empty() {
        DEFAULT_ALPHAS.to_vec()
    } else {
        alphas.to_vec()
    }
}

fn input_echo(i: &PairInput) -> serde_json::Value {
    json!({
        "data1": i.data1,
        "data2": i.data2,
        "split": i.split,
        "log_returns": i.log_returns,
        "model1": i.model1.to_string(),
        "model2": i.model2.to_string(),
    })
}

fn boot_echo(b: &BootArgs, cfg: &BootstrapConfig) -> serde_json::Value {
    json!({
        "kernel": b.kernel.to_string(),
        "kernel2": b.kernel2.unwrap_or(b.kernel).to_string(),
        "replicates": cfg.replicates,
        "alphas": cfg.alphas,
        "estimator_mode": cfg.estimator,
        "standardize": cfg.standardize,
        "burn_in": cfg.burn_in,
        "seed": cfg.master_seed,
    })
}

fn write_report(report: &Report, output: Option<&Path>, format: Format) -> Result<(), Failure> {
    report.check_finite()?;
    let bytes = match format {
        Format::Json => report.to_json().into_bytes(),
        Format::Csv if !report.lagscan.is_empty() => report::lagscan_csv(&report.lagscan).map_err(Failure::Data)?,
        Format::Csv => report::tests_csv(&report.tests).map_err(Failure::Data)?,
    };
    emit(&bytes, output)
}

pub fn cmd_test(args: &TestArgs) -> Result<Report, Failure> {
    let alphas = resolved_alphas(&args.alphas);
    let cfg = boot_config(&args.boot, alphas.clone(), args.emit_replicates);
    cfg.validate().ctx("bootstrap configuration")?;
    if let Some(c) = args.competitors.iter().find(|c| matches!(c, TestSpec::Hsic { .. })) {
        return Err(Failure::usage(format!("{} is an HSIC statistic; use --lag/--max-lag", c.label())));
    }
    let mut stats = Vec::new();
    for dir in args.direction.directions() {
        let lags = if args.lags.is_empty() && args.max_lags.is_empty() { vec![0] } else { args.lags.clone() };
        stats.extend(lags.iter().map(|&m| LagConfig::single(m, dir)));
        stats.extend(args.max_lags.iter().map(|&m| LagConfig::joint(m, dir)));
    }
    let (a, b, f1, f2) = fit_pair(&args.input, args.boot.seed)?;
    let kl = args.boot.kernel2.unwrap_or(args.boot.kernel);
    let boots = bootstrap_tests(&f1, &f2, &stats, &args.boot.kernel, &kl, &cfg).ctx("bootstrap")?;

    let mut tests: Vec<_> = boots.into_iter().map(|r| r.outcome).collect();
    let res = aligned_residuals(&f1, &f2).ctx("aligning residuals")?;
    for c in &args.competitors {
        let out = match *c {
            TestSpec::G { max_lag, variant } => g_test(&res, max_lag, variant),
            TestSpec::L { max_lag, variant } => l_test(&res, max_lag, variant),
            TestSpec::T { max_lag, variant } => t_test(&res, max_lag, variant),
            TestSpec::W { rule, variant } => {
                let order = args.w_order.unwrap_or_else(|| auto_var_order(a.nrows()));
                w_test(&a, &b, order, true, bandwidth_rule(rule, a.nrows()).max(1), variant)
            }
            TestSpec::Hsic { .. } => unreachable!("rejected above"),
        };
        tests.push(out.ctx(c.label())?);
    }

    let mut config = json!({
        "input": input_echo(&args.input),
        "bootstrap": boot_echo(&args.boot, &cfg),
        "statistics": stats.iter().map(|s| s.label()).collect::<Vec<_>>(),
        "competitors": args.competitors.iter().map(|c| c.label()).collect::<Vec<_>>(),
        "emit_replicates": args.emit_replicates,
    });
    if args.competitors.iter().any(|c| matches!(c, TestSpec::W { .. })) {
        config["w_order"] = json!(args.w_order.unwrap_or_else(|| auto_var_order(a.nrows())));
    }
    let mut report = Report::new("test", Provenance::new(args.boot.seed, config));
    report.fits = vec![FitSummary::new("series1", &f1), FitSummary::new("series2", &f2)];
    report.tests = tests;
    Ok(report)
}

pub fn run_test(args: &TestArgs) -> Result<(), Failure> {
    write_report(&cmd_test(args)?, args.output.as_deref(), args.format)
}

pub fn cmd_fit(args: &FitArgs) -> Result<(Report, FitResult), Failure> {
    let t = load(&args.data, args.log_returns)?;
    let fit = fit_series(&args.model, &t.data, rng::derive_seed(args.seed, Purpose::MultiStart, 0), "data")?;
    let config = json!({ "data": args.data, "model": args.model.to_string(), "log_returns": args.log_returns });
    let mut report = Report::new("fit", Provenance::new(args.seed, config));
    report.fits.push(FitSummary::new("series", &fit));
    Ok((report, fit))
}

pub fn run_fit(args: &FitArgs) -> Result<(), Failure> {
    let (report, fit) = cmd_fit(args)?;
    if let Some(p) = &args.residuals {
        let cols: Vec<String> = (1..=fit.dim()).map(|j| format!("eta{j}")).collect();
        write_csv_file(p, &cols, &fit.effective_residuals())?;
    }
    write_report(&report, args.output.as_deref(), Format::Json)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Report, Failure> {
    let dgp: Dgp = args.dgp.into();
    let tests = if args.tests.is_empty() { dgp.default_tests() } else { args.tests.clone() };
    let (replications, b) = if args.full_scale { (1000, 1000) } else { (args.replications, args.replicates) };
    let mut cfg = McConfig::new(dgp, EgpSpec::new(args.egp).ctx("EGP")?, args.n, replications, tests);
    cfg.kernel = args.kernel;
    cfg.master_seed = args.seed;
    cfg.burn_in = args.burn_in;
    cfg.bootstrap = BootstrapConfig {
        replicates: b,
        alphas: resolved_alphas(&args.alphas),
        estimator: args.estimator_mode.into(),
        master_seed: args.seed,
        burn_in: args.burn_in,
        ..BootstrapConfig::default()
    };
    let summary = simlab::run_monte_carlo(&cfg).ctx("Monte Carlo study")?;
    let config = json!({
        "dgp": cfg.dgp,
        "egp": cfg.egp,
        "n": cfg.n,
        "replications": cfg.replications,
        "tests": cfg.tests.iter().map(|t| t.label()).collect::<Vec<_>>(),
        "kernel": cfg.kernel.to_string(),
        "replicates": cfg.bootstrap.replicates,
        "alphas": cfg.bootstrap.alphas,
        "estimator_mode": cfg.bootstrap.estimator,
        "burn_in": cfg.burn_in,
    });
    let mut report = Report::new("simulate", Provenance::new(args.seed, config));
    report.monte_carlo = Some(summary);
    Ok(report)
}

pub fn run_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let report = cmd_simulate(args)?;
    let summary = report.monte_carlo.as_ref().expect("simulate fills the summary");
    emit(&report::monte_carlo_csv(summary).map_err(Failure::Data)?, args.output.as_deref())?;
    if let Some(p) = &args.json {
        emit(report.to_json().as_bytes(), Some(p))?;
    }
    Ok(())
}

pub fn cmd_lagscan(args: &LagscanArgs) -> Result<Report, Failure> {
    let level = 0.05;
    let cfg = boot_config(&args.boot, vec![level], false);
    cfg.validate().ctx("bootstrap configuration")?;
    let (_, _, f1, f2) = fit_pair(&args.input, args.boot.seed)?;
    let dirs = [Direction::One, Direction::Two];
    let stats: Vec<LagConfig> =
        dirs.iter().flat_map(|&d| (0..=args.max_lag).map(move |m| LagConfig::single(m, d))).collect();
    let kl = args.boot.kernel2.unwrap_or(args.boot.kernel);
    let boots = bootstrap_tests(&f1, &f2, &stats, &args.boot.kernel, &kl, &cfg).ctx("bootstrap")?;
    let dir_index = |d: Direction| if d == Direction::One { 1 } else { 2 };
    let mut rows: Vec<LagRow> = stats
        .iter()
        .zip(&boots)
        .map(|(s, b)| LagRow {
            test_name: format!("S{}", dir_index(s.direction())),
            lag: s.max_lag(),
            direction: dir_index(s.direction()),
            statistic: b.outcome.scaled,
            bound_95: b.outcome.critical_values[0].value,
            p_value: b.outcome.p_value,
        })
        .collect();
    let res = aligned_residuals(&f1, &f2).ctx("aligning residuals")?;
    for fam in &args.squared {
        let (family, name, df) = match fam {
            SquaredArg::L => (SquaredFamily::L, "L", 1),
            SquaredArg::T => {
                let ds = |d: usize| d * (d + 1) / 2;
                (SquaredFamily::T, "T", ds(res.eta1().ncols()) * ds(res.eta2().ncols()))
            }
        };
        let bound = chi2_isf(level, df).ctx("chi-square quantile")?;
        for &d in &dirs {
            let values = single_lag_scan(&res, args.max_lag, family, d).ctx(format!("{name} scan"))?;
            for (m, v) in values.into_iter().enumerate() {
                rows.push(LagRow {
                    test_name: format!("{name}{}", dir_index(d)),
                    lag: m,
                    direction: dir_index(d),
                    statistic: v,
                    bound_95: Some(bound),
                    p_value: chi2_sf(v, df).ctx("chi-square tail")?,
                });
            }
        }
    }
    let config = json!({
        "input": input_echo(&args.input),
        "bootstrap": boot_echo(&args.boot, &cfg),
        "max_lag": args.max_lag,
        "squared": args.squared.iter().map(|s| format!("{s:?}")).collect::<Vec<_>>(),
    });
    let mut report = Report::new("lagscan", Provenance::new(args.boot.seed, config));
    report.fits = vec![FitSummary::new("series1", &f1), FitSummary::new("series2", &f2)];
    report.lagscan = rows;
    Ok(report)
}

pub fn run_lagscan(args: &LagscanArgs) -> Result<(), Failure> {
    write_report(&cmd_lagscan(args)?, args.output.as_deref(), args.format)
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<(MultiSeries, MultiSeries), Failure> {
    if args.n == 0 {
        return Err(Failure::usage("-n must be positive"));
    }
    let total = args.n + args.burn_in;
    match args.dgp {
        GenerateDgp::WhiteNoise => {
            let draw = |s| {
                let mut r = rng::stream(args.seed, Purpose::Generate, 0, s);
                let v: Vec<f64> = (0..2 * args.n).map(|_| r.sample(StandardNormal)).collect();
                MultiSeries::new(args.n, 2, v).ctx("generating")
            };
            Ok((draw(0)?, draw(1)?))
        }
        GenerateDgp::Model51 | GenerateDgp::Model52 => {
            let mut r = rng::stream(args.seed, Purpose::Generate, 0, 0);
            let egp = EgpSpec::new(args.egp).ctx("EGP")?;
            let (e1, e2) = egp_innovations(&egp, total, &mut r).ctx("drawing innovations")?;
            if args.dgp == GenerateDgp::Model51 {
                simlab::gen_model_5_1(&e1, &e2, args.burn_in).ctx("simulating")
            } else {
                simlab::gen_model_5_2(&e1, &e2, args.burn_in).ctx("simulating")
            }
        }
    }
}

pub fn run_generate(args: &GenerateArgs) -> Result<(), Failure> {
    let (a, b) = cmd_generate(args)?;
    let cols = |p: &str| vec![format!("{p}1"), format!("{p}2")];
    write_csv_file(&args.out1, &cols("x"), &a)?;
    write_csv_file(&args.out2, &cols("y"), &b)
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Test(a) => run_test(a),
        Command::Fit(a) => run_fit(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Lagscan(a) => run_lagscan(a),
        Command::Generate(a) => run_generate(a),
    }
}
