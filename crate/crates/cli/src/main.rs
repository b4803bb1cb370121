//! `circex` — command-line front end for the waste-oil recovery analytics
//! toolkit.
//!
//! Configuration precedence, highest first: command-line flags, then the
//! `--config` key-value file, then environment variables
//! (`CIRCEX_CACHE_DIR`, `CIRCEX_EUROSTAT_ENDPOINT`), then built-in
//! defaults.
//!
//! Exit codes: `0` success, `1` data or validation failure, `2`
//! configuration or usage error.

use circex_core::baselines::{
    institutional_social_cost, neoclassical_social_cost, price_alignment_diagnosis,
    recycling_optimality_gap, BaselineError,
};
use circex_core::eurostat::{fetch_indicator, FetchConfig, FetchError, KNOWN_DATASETS};
use circex_core::registry::{
    parse_indicator_table, parse_registry_tables, parse_series_table, totals_checks,
    IndicatorSeries, RegistryError, TotalsCheck,
};
use circex_core::report::{
    compare_indicators, parse_key_values, rounded_correlation, rounded_descriptive, run_analysis,
    write_report_files, AnalysisReport, ReportError, RunConfig,
};
use circex_core::spc::UnitBridge;
use circex_core::stats::{
    describe, kendall_tau, pearson, spearman_rho, CorrelationMethod, CorrelationReport, StatsError,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "circex",
    version,
    about = "Recovery-scheme cost analytics and circular-economy indicator comparisons",
    propagate_version = true
)]
struct Cli {
    /// Flat `key = value` configuration file applied before flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check declared annual totals against recomputed organization sums.
    Validate(ValidateArgs),
    /// Run the recovery-scheme model: SPC, cost rollups, balance test,
    /// period averages and utilization ratios.
    Model(ModelArgs),
    /// Descriptive statistics and correlations over the SPC series.
    Stats(StatsArgs),
    /// Cross-country indicator comparison: ratio matrices, laggard
    /// ranking, trends.
    Compare(CompareArgs),
    /// Textbook cost identities and the price-alignment diagnosis.
    #[command(subcommand)]
    Baseline(BaselineCommand),
    /// Full analysis run; writes report.json and plot data when an output
    /// directory is configured, otherwise prints the report.
    Report(ReportArgs),
}

/// Output rendering for tabular results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct InputArgs {
    /// Recovery-registry CSV (default data/registry.csv).
    #[arg(long, value_name = "FILE")]
    registry: Option<PathBuf>,
    /// Licensed-capacity CSV (default data/capacity.csv).
    #[arg(long, value_name = "FILE")]
    capacity: Option<PathBuf>,
    /// Market-demand CSV (default data/demand.csv).
    #[arg(long, value_name = "FILE")]
    demand: Option<PathBuf>,
    /// Transaction-cost ledger CSV (enables the cost block).
    #[arg(long, value_name = "FILE")]
    ledger: Option<PathBuf>,
    /// Indicator table CSV (enables the comparison block).
    #[arg(long, value_name = "FILE")]
    indicators: Option<PathBuf>,
}

impl InputArgs {
    fn apply(&self, config: &mut RunConfig) {
        if let Some(path) = &self.registry {
            config.registry_path = path.clone();
        }
        if let Some(path) = &self.capacity {
            config.capacity_path = path.clone();
        }
        if let Some(path) = &self.demand {
            config.demand_path = path.clone();
        }
        if let Some(path) = &self.ledger {
            config.ledger_path = Some(path.clone());
        }
        if let Some(path) = &self.indicators {
            config.indicators_path = Some(path.clone());
        }
    }
}

#[derive(Args)]
struct ValidateArgs {
    /// Recovery-registry CSV (default data/registry.csv).
    #[arg(long, value_name = "FILE")]
    registry: Option<PathBuf>,
    /// Absolute tolerance in tons for totals reconciliation.
    #[arg(long, value_name = "TONS")]
    tolerance: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    inputs: InputArgs,
    /// Money units per ton for the SPC/TrC balance test.
    #[arg(long, value_name = "RATE", conflicts_with = "dimensionless")]
    conversion_rate: Option<f64>,
    /// Treat SPC tons and cost totals as directly comparable magnitudes.
    #[arg(long)]
    dimensionless: bool,
    /// Tolerance on the balance log-residual.
    #[arg(long, value_name = "EPS")]
    balance_tolerance: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    inputs: InputArgs,
    /// Analyse two named columns of this CSV instead of the SPC series.
    #[arg(long, value_name = "FILE", requires = "x", requires = "y")]
    series: Option<PathBuf>,
    /// Column holding the x values (with --series).
    #[arg(long, value_name = "COLUMN", requires = "series")]
    x: Option<String>,
    /// Column holding the y values (with --series).
    #[arg(long, value_name = "COLUMN", requires = "series")]
    y: Option<String>,
    /// Correlation methods to report, comma separated (default: all).
    #[arg(long, value_enum, value_delimiter = ',', value_name = "METHODS")]
    methods: Vec<MethodArg>,
    /// Correlate signed SPC values instead of magnitudes.
    #[arg(long)]
    signed: bool,
    /// Correlate against the index axis 1..=n instead of years.
    #[arg(long)]
    index_axis: bool,
    /// Confidence level for correlation intervals.
    #[arg(long, value_name = "LEVEL")]
    confidence: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// Correlation method selector for `stats --methods`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Pearson,
    Kendall,
    Spearman,
}

impl MethodArg {
    fn matches(self, method: CorrelationMethod) -> bool {
        matches!(
            (self, method),
            (MethodArg::Pearson, CorrelationMethod::Pearson)
                | (MethodArg::Kendall, CorrelationMethod::Kendall)
                | (MethodArg::Spearman, CorrelationMethod::Spearman)
        )
    }
}

#[derive(Args)]
struct CompareArgs {
    /// Read indicators from a local table instead of fetching.
    #[arg(long, value_name = "FILE")]
    indicators: Option<PathBuf>,
    /// Dataset codes, comma separated (default: all available).
    #[arg(long, value_delimiter = ',', value_name = "CODES")]
    datasets: Vec<String>,
    /// Country codes, comma separated (default: all available).
    #[arg(long, value_delimiter = ',', value_name = "CODES")]
    countries: Vec<String>,
    /// Reference country for the comparison frames.
    #[arg(long, value_name = "CODE")]
    reference: Option<String>,
    /// Base URL serving `{dataset}.csv` downloads
    /// (default: $CIRCEX_EUROSTAT_ENDPOINT).
    #[arg(long, value_name = "URL")]
    endpoint: Option<String>,
    /// Never touch the network; serve cached downloads only.
    #[arg(long)]
    offline: bool,
    /// Download cache directory (default: $CIRCEX_CACHE_DIR, then
    /// .circex-cache).
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Keep only years >= this.
    #[arg(long, value_name = "YEAR")]
    year_start: Option<u16>,
    /// Keep only years <= this.
    #[arg(long, value_name = "YEAR")]
    year_end: Option<u16>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum BaselineCommand {
    /// Social cost as the sum of private and external cost.
    Social {
        #[arg(long, value_name = "COST")]
        private: f64,
        #[arg(long, value_name = "COST")]
        external: f64,
    },
    /// Institutional social cost: opportunity cost minus private cost.
    Institutional {
        #[arg(long, value_name = "COST")]
        opportunity: f64,
        #[arg(long, value_name = "COST")]
        private: f64,
    },
    /// Recycling optimality gap from marginal social costs.
    Gap {
        /// Marginal social cost of recycling.
        #[arg(long, value_name = "COST")]
        recycling: f64,
        /// Marginal social cost of virgin production.
        #[arg(long, value_name = "COST")]
        virgin: f64,
        /// Marginal social cost of disposal.
        #[arg(long, value_name = "COST")]
        disposal: f64,
        #[arg(long, value_name = "EPS", default_value_t = 0.0)]
        tolerance: f64,
    },
    /// Price-alignment diagnosis against marginal costs.
    Price {
        #[arg(long, value_name = "PRICE")]
        price: f64,
        /// Marginal private cost.
        #[arg(long, value_name = "COST")]
        mpc: f64,
        /// Marginal social cost.
        #[arg(long, value_name = "COST")]
        msc: f64,
        /// Willingness to pay.
        #[arg(long, value_name = "PRICE")]
        wtp: f64,
    },
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    inputs: InputArgs,
    /// Write report.json and plot files here instead of printing.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

/// Top-level CLI error with an exit-code mapping.
#[derive(Debug)]
enum CliError {
    Report(ReportError),
    Fetch(FetchError),
    Registry(RegistryError),
    Baseline(BaselineError),
    Stats(StatsError),
    ValidationFailed { failures: usize, total: usize },
    Io { path: PathBuf, source: std::io::Error },
    Config(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Report(e) => e.fmt(f),
            CliError::Fetch(e) => e.fmt(f),
            CliError::Registry(e) => e.fmt(f),
            CliError::Baseline(e) => e.fmt(f),
            CliError::Stats(e) => e.fmt(f),
            CliError::ValidationFailed { failures, total } => write!(
                f,
                "totals validation failed: {failures} of {total} checks outside tolerance"
            ),
            CliError::Io { path, source } => {
                write!(f, "cannot read {}: {source}", path.display())
            }
            CliError::Config(problem) => write!(f, "configuration error: {problem}"),
        }
    }
}

impl CliError {
    /// `1` for data problems, `2` for configuration problems.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Report(e) => match e {
                ReportError::Config { .. } | ReportError::Io { .. } => 2,
                _ => 1,
            },
            CliError::Fetch(e) => match e {
                FetchError::UnknownDataset { .. } | FetchError::InvalidYearRange { .. } => 2,
                _ => 1,
            },
            CliError::Registry(_) => 1,
            CliError::Baseline(_) => 2,
            CliError::Stats(_) => 1,
            CliError::ValidationFailed { .. } => 1,
            CliError::Io { .. } => 2,
            CliError::Config(_) => 2,
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Report(e)
    }
}

impl From<FetchError> for CliError {
    fn from(e: FetchError) -> Self {
        CliError::Fetch(e)
    }
}

impl From<RegistryError> for CliError {
    fn from(e: RegistryError) -> Self {
        CliError::Registry(e)
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        CliError::Baseline(e)
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Stats(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}

fn read_file(path: &PathBuf) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })
}

fn base_config(config_file: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::new(
        "data/registry.csv",
        "data/capacity.csv",
        "data/demand.csv",
    );
    if let Some(path) = config_file {
        let text = String::from_utf8(read_file(path)?).map_err(|_| {
            CliError::Config(format!("{} is not valid UTF-8", path.display()))
        })?;
        let values = parse_key_values(&text)?;
        config.apply_key_values(&values)?;
    }
    Ok(config)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report types serialize")
    );
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = base_config(cli.config.as_ref())?;
    match cli.command {
        Command::Validate(args) => cmd_validate(&mut config, args),
        Command::Model(args) => cmd_model(&mut config, args),
        Command::Stats(args) => cmd_stats(&mut config, args),
        Command::Compare(args) => cmd_compare(&mut config, args),
        Command::Baseline(args) => cmd_baseline(args),
        Command::Report(args) => cmd_report(&mut config, args),
    }
}

fn render_checks_csv(checks: &[TotalsCheck]) -> String {
    let mut out = String::from("year,column,declared,computed,delta,within_tolerance\n");
    for check in checks {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            check.year,
            check.column,
            check.declared,
            check.computed,
            check.delta,
            check.within_tolerance
        ));
    }
    out
}

fn cmd_validate(config: &mut RunConfig, args: ValidateArgs) -> Result<(), CliError> {
    if let Some(path) = args.registry {
        config.registry_path = path;
    }
    if let Some(tolerance) = args.tolerance {
        config.totals_tolerance = tolerance;
    }
    let bytes = read_file(&config.registry_path)?;
    let aggregates = parse_registry_tables(&bytes)?;
    let checks = totals_checks(&aggregates, config.totals_tolerance);
    match args.format {
        Format::Json => print_json(&serde_json::json!({
            "tolerance": config.totals_tolerance,
            "checks": checks,
        })),
        Format::Csv => print!("{}", render_checks_csv(&checks)),
    }
    let failures = checks.iter().filter(|c| !c.within_tolerance).count();
    if failures > 0 {
        return Err(CliError::ValidationFailed {
            failures,
            total: checks.len(),
        });
    }
    Ok(())
}

fn analyse(config: &RunConfig) -> Result<AnalysisReport, CliError> {
    run_analysis(config).map_err(CliError::from)
}

fn cmd_model(config: &mut RunConfig, args: ModelArgs) -> Result<(), CliError> {
    args.inputs.apply(config);
    if let Some(rate) = args.conversion_rate {
        config.unit_bridge = Some(UnitBridge::ConversionRate(rate));
    }
    if args.dimensionless {
        config.unit_bridge = Some(UnitBridge::Dimensionless);
    }
    if let Some(tolerance) = args.balance_tolerance {
        config.balance_tolerance = tolerance;
    }
    let report = analyse(config)?;
    match args.format {
        Format::Json => print_json(&report.model),
        Format::Csv => {
            let mut out =
                String::from("year,spc_capacity,spc_demand,spc_average,magnitude\n");
            for row in &report.model.spc {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.year, row.spc_capacity, row.spc_demand, row.spc_average, row.magnitude
                ));
            }
            print!("{out}");
        }
    }
    Ok(())
}

fn wanted_methods(selection: &[MethodArg]) -> Vec<MethodArg> {
    if selection.is_empty() {
        vec![MethodArg::Pearson, MethodArg::Kendall, MethodArg::Spearman]
    } else {
        selection.to_vec()
    }
}

fn print_correlations_csv(correlations: &[CorrelationReport]) {
    let mut out = String::from("method,coefficient,n,ci_lower,ci_upper,confidence,p_value\n");
    for c in correlations {
        let (lower, upper, level) = c
            .confidence_interval
            .map(|ci| {
                (
                    ci.lower.to_string(),
                    ci.upper.to_string(),
                    ci.confidence.to_string(),
                )
            })
            .unwrap_or_default();
        let p = c.p_value.map(|p| p.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.method, c.coefficient, c.n, lower, upper, level, p
        ));
    }
    print!("{out}");
}

/// Stats over an arbitrary two-column CSV given via `--series`. The Fisher
/// interval and t-test p-value are attached to the Pearson coefficient
/// only, matching the report pipeline.
fn stats_from_file(
    path: &PathBuf,
    x_column: &str,
    y_column: &str,
    methods: &[MethodArg],
    confidence: f64,
    format: Format,
) -> Result<(), CliError> {
    let bytes = read_file(path)?;
    let series = parse_series_table(&bytes, x_column, y_column)?;
    let descriptive = describe(&series)?;
    let mut correlations = Vec::new();
    for method in methods {
        correlations.push(match method {
            MethodArg::Pearson => pearson(&series)?.with_inference(confidence)?,
            MethodArg::Kendall => kendall_tau(&series)?,
            MethodArg::Spearman => spearman_rho(&series)?,
        });
    }
    let rounded: Vec<CorrelationReport> = correlations.iter().map(rounded_correlation).collect();
    match format {
        Format::Json => print_json(&serde_json::json!({
            "series_label": series.label,
            "x_axis": x_column,
            "points": series.points,
            "descriptive": rounded_descriptive(&descriptive),
            "correlations": rounded,
        })),
        Format::Csv => print_correlations_csv(&rounded),
    }
    Ok(())
}

fn cmd_stats(config: &mut RunConfig, args: StatsArgs) -> Result<(), CliError> {
    if let Some(confidence) = args.confidence {
        config.confidence = confidence;
    }
    let methods = wanted_methods(&args.methods);
    if let Some(path) = &args.series {
        let x = args.x.as_deref().expect("clap requires --x with --series");
        let y = args.y.as_deref().expect("clap requires --y with --series");
        return stats_from_file(path, x, y, &methods, config.confidence, args.format);
    }
    args.inputs.apply(config);
    if args.signed {
        config.signed_stats = true;
    }
    if args.index_axis {
        config.index_axis = true;
    }
    let report = analyse(config)?;
    let correlations: Vec<CorrelationReport> = report
        .stats
        .correlations
        .iter()
        .filter(|c| methods.iter().any(|m| m.matches(c.method)))
        .cloned()
        .collect();
    match args.format {
        Format::Json => {
            let mut stats = report.stats.clone();
            stats.correlations = correlations;
            print_json(&stats);
        }
        Format::Csv => print_correlations_csv(&correlations),
    }
    Ok(())
}

fn env_path(name: &str) -> Option<PathBuf> {
    std::env::var_os(name).map(PathBuf::from)
}

fn load_indicator_pool(
    config: &RunConfig,
    args: &CompareArgs,
) -> Result<Vec<IndicatorSeries>, CliError> {
    let year_range = match (args.year_start, args.year_end) {
        (None, None) => None,
        (start, end) => Some((start.unwrap_or(0), end.unwrap_or(u16::MAX))),
    };
    let local = args
        .indicators
        .clone()
        .or_else(|| config.indicators_path.clone());
    if let Some(path) = local {
        let bytes = read_file(&path)?;
        let mut pool = parse_indicator_table(&bytes)?;
        if let Some((start, end)) = year_range {
            for series in &mut pool {
                series.points.retain(|p| p.year >= start && p.year <= end);
            }
            pool.retain(|s| !s.points.is_empty());
        }
        return Ok(pool);
    }

    // No local table: fetch each requested dataset.
    let datasets: Vec<String> = if config.datasets.is_empty() {
        KNOWN_DATASETS.iter().map(|(code, _, _)| code.to_string()).collect()
    } else {
        config.datasets.clone()
    };
    let endpoint = args
        .endpoint
        .clone()
        .or_else(|| std::env::var("CIRCEX_EUROSTAT_ENDPOINT").ok());
    let cache_dir = args
        .cache_dir
        .clone()
        .or_else(|| env_path("CIRCEX_CACHE_DIR"))
        .unwrap_or_else(|| PathBuf::from(".circex-cache"));
    let fetch_config = FetchConfig {
        endpoint,
        cache_dir,
        offline: args.offline,
    };
    let mut pool = Vec::new();
    for dataset in &datasets {
        pool.extend(fetch_indicator(
            &fetch_config,
            dataset,
            &config.countries,
            year_range,
        )?);
    }
    Ok(pool)
}

fn cmd_compare(config: &mut RunConfig, args: CompareArgs) -> Result<(), CliError> {
    if !args.datasets.is_empty() {
        config.datasets = args.datasets.clone();
    }
    if !args.countries.is_empty() {
        config.countries = args.countries.clone();
    }
    if let Some(reference) = &args.reference {
        config.reference_country = reference.clone();
    }
    let pool = load_indicator_pool(config, &args)?;
    let section = compare_indicators(&pool, config)?;
    match args.format {
        Format::Json => print_json(&section),
        Format::Csv => {
            let mut out = String::from("country,mean_rank,frames_counted\n");
            for entry in &section.laggard.composite {
                out.push_str(&format!(
                    "{},{},{}\n",
                    entry.country, entry.mean_rank, entry.frames_counted
                ));
            }
            print!("{out}");
        }
    }
    Ok(())
}

fn cmd_baseline(command: BaselineCommand) -> Result<(), CliError> {
    match command {
        BaselineCommand::Social { private, external } => {
            let social = neoclassical_social_cost(private, external)?;
            print_json(&serde_json::json!({
                "private_cost": private,
                "external_cost": external,
                "social_cost": social,
            }));
        }
        BaselineCommand::Institutional {
            opportunity,
            private,
        } => {
            let result = institutional_social_cost(opportunity, private)?;
            print_json(&serde_json::json!({
                "opportunity_cost": opportunity,
                "private_cost": private,
                "institutional_cost": result,
            }));
        }
        BaselineCommand::Gap {
            recycling,
            virgin,
            disposal,
            tolerance,
        } => {
            let gap = recycling_optimality_gap(recycling, virgin, disposal, tolerance)?;
            print_json(&gap);
        }
        BaselineCommand::Price {
            price,
            mpc,
            msc,
            wtp,
        } => {
            let assessment = price_alignment_diagnosis(price, mpc, msc, wtp)?;
            print_json(&assessment);
        }
    }
    Ok(())
}

fn cmd_report(config: &mut RunConfig, args: ReportArgs) -> Result<(), CliError> {
    args.inputs.apply(config);
    if let Some(out) = args.out {
        config.output_dir = Some(out);
    }
    let report = analyse(config)?;
    if config.output_dir.is_some() {
        let written = write_report_files(config, &report)?;
        for path in written {
            println!("{}", path.display());
        }
    } else {
        print_json(&report);
    }
    Ok(())
}
