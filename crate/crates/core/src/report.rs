//! End-to-end analysis runs: configuration, orchestration of parsing,
//! validation, modelling, statistics and comparisons, and deterministic
//! report emission.
//!
//! Determinism contract: [`run_analysis`] and the emitters below are pure
//! functions of the input files and the configuration. Two runs over the
//! same inputs produce byte-identical JSON and plot files. Derived values
//! are rounded to six decimals for display; ingested values are echoed
//! verbatim.

use crate::compare::{
    build_frame, default_directions, laggard_report, ratio_matrix, trend_summary, CompareError,
    ComparisonFrame, Direction, LaggardReport, RatioMatrix, TrendSummary,
};
use crate::registry::{
    parse_capacity_table, parse_demand_table, parse_indicator_table, parse_ledger_table,
    parse_registry_tables, totals_checks, IndicatorSeries, LedgerOptions, RegistryError,
    TotalsCheck, DEFAULT_TOTALS_TOLERANCE,
};
use crate::spc::{
    balance, compute_spc, compute_trc, period_averages, utilization_ratios, BalanceReport,
    ModelError, PeriodAverages, SpcInputs, SpcResult, TrcResult, UnitBridge, UtilizationRatios,
    DEFAULT_BALANCE_TOLERANCE,
};
use crate::stats::{
    describe, kendall_tau, pearson, spearman_rho, CorrelationReport, DescriptiveSummary, Series,
    StatsError,
};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Errors raised while running a full analysis.
#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("i/o failure at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(
        "annual totals validation failed: {} of {} checks outside tolerance",
        .checks.iter().filter(|c| !c.within_tolerance).count(),
        .checks.len()
    )]
    Validation { checks: Vec<TotalsCheck> },
    #[error("input files are inconsistent: {problem}")]
    Inconsistent { problem: String },
    #[error("configuration error: {problem}")]
    Config { problem: String },
}

impl ReportError {
    fn config(problem: impl Into<String>) -> Self {
        ReportError::Config {
            problem: problem.into(),
        }
    }
}

/// Everything a full analysis run needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub registry_path: PathBuf,
    pub capacity_path: PathBuf,
    pub demand_path: PathBuf,
    /// Transaction-cost ledger; without it the cost block is skipped.
    pub ledger_path: Option<PathBuf>,
    /// Indicator table for cross-country comparisons; optional.
    pub indicators_path: Option<PathBuf>,
    /// Datasets to compare; empty means every dataset in the file.
    pub datasets: Vec<String>,
    /// Countries to compare; empty means every country in the dataset.
    pub countries: Vec<String>,
    pub reference_country: String,
    /// Ranking directions per dataset.
    pub directions: BTreeMap<String, Direction>,
    /// Confidence level for correlation intervals.
    pub confidence: f64,
    pub totals_tolerance: f64,
    pub balance_tolerance: f64,
    /// Tons-to-money bridge for the balance test; `None` leaves the sides
    /// non-comparable.
    pub unit_bridge: Option<UnitBridge>,
    /// Correlate signed values instead of magnitudes.
    pub signed_stats: bool,
    /// Correlate against the index axis `1..=n` instead of years.
    pub index_axis: bool,
    /// Externally expected values, keyed by computed-quantity name.
    pub expected: BTreeMap<String, f64>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// A configuration with default knobs and the three mandatory tables.
    pub fn new(
        registry: impl Into<PathBuf>,
        capacity: impl Into<PathBuf>,
        demand: impl Into<PathBuf>,
    ) -> Self {
        RunConfig {
            registry_path: registry.into(),
            capacity_path: capacity.into(),
            demand_path: demand.into(),
            ledger_path: None,
            indicators_path: None,
            datasets: Vec::new(),
            countries: Vec::new(),
            reference_country: "BG".to_string(),
            directions: default_directions(),
            confidence: 0.95,
            totals_tolerance: DEFAULT_TOTALS_TOLERANCE,
            balance_tolerance: DEFAULT_BALANCE_TOLERANCE,
            unit_bridge: None,
            signed_stats: false,
            index_axis: false,
            expected: BTreeMap::new(),
            output_dir: None,
        }
    }

    /// Applies a parsed `key=value` map on top of the current settings.
    /// Unrecognised keys are rejected so that typos fail loudly.
    pub fn apply_key_values(
        &mut self,
        values: &BTreeMap<String, String>,
    ) -> Result<(), ReportError> {
        let mut saw_conversion_rate = false;
        let mut saw_dimensionless = false;
        for (key, value) in values {
            match key.as_str() {
                "registry" => self.registry_path = value.into(),
                "capacity" => self.capacity_path = value.into(),
                "demand" => self.demand_path = value.into(),
                "ledger" => self.ledger_path = Some(value.into()),
                "indicators" => self.indicators_path = Some(value.into()),
                "datasets" => self.datasets = split_list(value),
                "countries" => self.countries = split_list(value),
                "reference_country" => self.reference_country = value.clone(),
                "confidence" => self.confidence = parse_f64(key, value)?,
                "totals_tolerance" => self.totals_tolerance = parse_f64(key, value)?,
                "balance_tolerance" => self.balance_tolerance = parse_f64(key, value)?,
                "conversion_rate" => {
                    saw_conversion_rate = true;
                    self.unit_bridge = Some(UnitBridge::ConversionRate(parse_f64(key, value)?));
                }
                "dimensionless" => {
                    if parse_bool(key, value)? {
                        saw_dimensionless = true;
                        self.unit_bridge = Some(UnitBridge::Dimensionless);
                    }
                }
                "signed" => self.signed_stats = parse_bool(key, value)?,
                "index_axis" => self.index_axis = parse_bool(key, value)?,
                "output_dir" => self.output_dir = Some(value.into()),
                _ => {
                    if let Some(name) = key.strip_prefix("expected_") {
                        self.expected
                            .insert(name.to_string(), parse_f64(key, value)?);
                    } else if let Some(dataset) = key.strip_prefix("direction_") {
                        self.directions
                            .insert(dataset.to_string(), parse_direction(key, value)?);
                    } else {
                        return Err(ReportError::config(format!(
                            "unknown configuration key `{key}`"
                        )));
                    }
                }
            }
        }
        if saw_conversion_rate && saw_dimensionless {
            return Err(ReportError::config(
                "conversion_rate and dimensionless are mutually exclusive",
            ));
        }
        Ok(())
    }
}

fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ReportError> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| ReportError::config(format!("key `{key}`: `{value}` is not a number")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ReportError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ReportError::config(format!(
            "key `{key}`: `{value}` is not a boolean"
        ))),
    }
}

fn parse_direction(key: &str, value: &str) -> Result<Direction, ReportError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "high_is_bad" | "bad" => Ok(Direction::HighIsBad),
        "high_is_good" | "good" => Ok(Direction::HighIsGood),
        _ => Err(ReportError::config(format!(
            "key `{key}`: `{value}` is not a direction (high_is_bad | high_is_good)"
        ))),
    }
}

/// Parses a flat `key = value` configuration file. Blank lines and lines
/// starting with `#` are skipped; duplicate keys are an error.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, ReportError> {
    let mut map = BTreeMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let line_no = index + 1;
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ReportError::config(format!("line {line_no}: expected `key = value`, got `{line}`"))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(ReportError::config(format!("line {line_no}: empty key")));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ReportError::config(format!(
                "line {line_no}: duplicate key `{key}`"
            )));
        }
    }
    Ok(map)
}

/// Rounds a derived value to six decimal places for display.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// SHA-256 of a byte slice as lowercase hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest.iter() {
        write!(out, "{byte:02x}").expect("writing to a string cannot fail");
    }
    out
}

/// Provenance record for one input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub tool: String,
    pub version: String,
    pub inputs: Vec<InputDigest>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSection {
    pub tolerance: f64,
    pub checks: Vec<TotalsCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSection {
    pub years: Vec<u16>,
    pub spc: Vec<SpcResult>,
    pub trc: Vec<TrcResult>,
    pub balance: Vec<BalanceReport>,
    pub period_averages: PeriodAverages,
    pub utilization: UtilizationRatios,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsSection {
    pub series_label: String,
    pub x_axis: String,
    pub signed: bool,
    pub points: Vec<(f64, f64)>,
    pub descriptive: DescriptiveSummary,
    pub correlations: Vec<CorrelationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonSection {
    pub datasets: Vec<String>,
    pub frames: Vec<ComparisonFrame>,
    pub ratios: Vec<RatioMatrix>,
    pub laggard: LaggardReport,
    pub trends: Vec<TrendSummary>,
    /// The selected series, echoed for plotting.
    pub series: Vec<IndicatorSeries>,
}

/// One expected-versus-computed comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyNote {
    pub key: String,
    pub expected: f64,
    pub computed: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub matches: bool,
}

/// The complete result of an analysis run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub meta: ReportMeta,
    pub validation: ValidationSection,
    pub model: ModelSection,
    pub stats: StatsSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparisons: Option<ComparisonSection>,
    pub discrepancy_notes: Vec<DiscrepancyNote>,
}

/// Computed quantities that `expected_*` configuration keys may reference.
pub const EXPECTED_KEYS: [&str; 8] = [
    "spc_mean",
    "spc_variance",
    "spc_std_dev",
    "spc_pearson",
    "spc_kendall",
    "spc_spearman",
    "trc_mean",
    "trc_spc_pearson",
];

fn read_input(path: &Path) -> Result<Vec<u8>, ReportError> {
    fs::read(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn rounded_spc(r: &SpcResult) -> SpcResult {
    SpcResult {
        year: r.year,
        spc_capacity: round6(r.spc_capacity),
        spc_demand: round6(r.spc_demand),
        spc_average: round6(r.spc_average),
        magnitude: round6(r.magnitude),
    }
}

fn rounded_trc(r: &TrcResult) -> TrcResult {
    TrcResult {
        year: r.year,
        administrative: round6(r.administrative),
        market: round6(r.market),
        fixed: round6(r.fixed),
        performance: round6(r.performance),
        alternative: round6(r.alternative),
        variable: round6(r.variable),
        total: round6(r.total),
    }
}

fn rounded_balance(r: &BalanceReport) -> BalanceReport {
    BalanceReport {
        year: r.year,
        spc_magnitude_tons: round6(r.spc_magnitude_tons),
        trc_total: round6(r.trc_total),
        spc_money_value: r.spc_money_value.map(round6),
        comparable: r.comparable,
        ratio: r.ratio.map(round6),
        log_residual: r.log_residual.map(round6),
        holds: r.holds,
        advisory: r.advisory.clone(),
    }
}

/// Copy of a descriptive summary with every derived field rounded to six
/// decimals for display.
pub fn rounded_descriptive(d: &DescriptiveSummary) -> DescriptiveSummary {
    DescriptiveSummary {
        n: d.n,
        mean: round6(d.mean),
        variance: d.variance.map(round6),
        std_dev: d.std_dev.map(round6),
        min: round6(d.min),
        max: round6(d.max),
    }
}

/// Copy of a correlation report with every derived field rounded to six
/// decimals for display.
pub fn rounded_correlation(c: &CorrelationReport) -> CorrelationReport {
    CorrelationReport {
        method: c.method,
        coefficient: round6(c.coefficient),
        n: c.n,
        confidence_interval: c.confidence_interval.map(|ci| {
            crate::stats::ConfidenceInterval {
                lower: round6(ci.lower),
                upper: round6(ci.upper),
                confidence: ci.confidence,
            }
        }),
        p_value: c.p_value.map(round6),
    }
}

struct Tables {
    digests: Vec<InputDigest>,
    aggregates: Vec<crate::registry::AnnualAggregate>,
    capacity: Vec<crate::registry::CapacityRecord>,
    demand: Vec<crate::registry::DemandEstimate>,
    ledgers: Option<Vec<crate::registry::CostLedger>>,
    indicators: Option<Vec<IndicatorSeries>>,
}

fn load_tables(config: &RunConfig) -> Result<Tables, ReportError> {
    let mut digests = Vec::new();
    let mut digest = |role: &str, path: &Path, bytes: &[u8]| {
        digests.push(InputDigest {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
    };

    let registry_bytes = read_input(&config.registry_path)?;
    digest("registry", &config.registry_path, &registry_bytes);
    let aggregates = parse_registry_tables(&registry_bytes)?;

    let capacity_bytes = read_input(&config.capacity_path)?;
    digest("capacity", &config.capacity_path, &capacity_bytes);
    let capacity = parse_capacity_table(&capacity_bytes)?;

    let demand_bytes = read_input(&config.demand_path)?;
    digest("demand", &config.demand_path, &demand_bytes);
    let demand = parse_demand_table(&demand_bytes)?;

    let ledgers = match &config.ledger_path {
        Some(path) => {
            let bytes = read_input(path)?;
            digest("ledger", path, &bytes);
            Some(parse_ledger_table(&bytes, LedgerOptions::default())?)
        }
        None => None,
    };

    let indicators = match &config.indicators_path {
        Some(path) => {
            let bytes = read_input(path)?;
            digest("indicators", path, &bytes);
            Some(parse_indicator_table(&bytes)?)
        }
        None => None,
    };

    Ok(Tables {
        digests,
        aggregates,
        capacity,
        demand,
        ledgers,
        indicators,
    })
}

/// Joins per-year registry aggregates with their capacity and demand
/// baselines. Every registry year must have at least one licensed
/// processor and a demand estimate.
pub fn build_spc_inputs(
    aggregates: &[crate::registry::AnnualAggregate],
    capacity: &[crate::registry::CapacityRecord],
    demand: &[crate::registry::DemandEstimate],
) -> Result<Vec<SpcInputs>, ReportError> {
    let mut rows = Vec::with_capacity(aggregates.len());
    for aggregate in aggregates {
        let year = aggregate.year;
        let capacity_rows: Vec<&crate::registry::CapacityRecord> =
            capacity.iter().filter(|c| c.year == year).collect();
        if capacity_rows.is_empty() {
            return Err(ReportError::Inconsistent {
                problem: format!("no licensed capacity records for year {year}"),
            });
        }
        let capacity_baseline_tons = capacity_rows
            .iter()
            .map(|c| c.licensed_capacity_tons_per_year)
            .sum();
        let demand_baseline_tons = demand
            .iter()
            .find(|d| d.year == year)
            .map(|d| d.demand_tons)
            .ok_or_else(|| ReportError::Inconsistent {
                problem: format!("no demand estimate for year {year}"),
            })?;
        rows.push(SpcInputs {
            year,
            released_tons: aggregate.total_released_tons,
            regenerated_with_systems_tons: aggregate.total_regenerated_tons,
            capacity_baseline_tons,
            demand_baseline_tons,
        });
    }
    Ok(rows)
}

fn stats_series(results: &[SpcResult], signed: bool, index_axis: bool) -> Series {
    let label = if signed { "spc_average" } else { "spc_magnitude" };
    let points: Vec<(f64, f64)> = results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let x = if index_axis {
                (i + 1) as f64
            } else {
                f64::from(r.year)
            };
            let y = if signed { r.spc_average } else { r.magnitude };
            (x, y)
        })
        .collect();
    Series::from_pairs(label, points)
}

/// Builds the full comparison block (frames, ratio matrices, laggard
/// ranking, trends) from an indicator pool and the selection in `config`.
pub fn compare_indicators(
    pool: &[IndicatorSeries],
    config: &RunConfig,
) -> Result<ComparisonSection, ReportError> {
    let datasets: Vec<String> = if config.datasets.is_empty() {
        let set: BTreeSet<String> = pool.iter().map(|s| s.dataset.clone()).collect();
        set.into_iter().collect()
    } else {
        config.datasets.clone()
    };
    if datasets.is_empty() {
        return Err(ReportError::Inconsistent {
            problem: "the indicator table holds no datasets".to_string(),
        });
    }

    let mut frames = Vec::with_capacity(datasets.len());
    let mut ratios = Vec::with_capacity(datasets.len());
    let mut selected_series: Vec<IndicatorSeries> = Vec::new();
    for dataset in &datasets {
        let countries: Vec<String> = if config.countries.is_empty() {
            let set: BTreeSet<String> = pool
                .iter()
                .filter(|s| &s.dataset == dataset)
                .map(|s| s.country.clone())
                .collect();
            set.into_iter().collect()
        } else {
            config.countries.clone()
        };
        if countries.is_empty() {
            return Err(ReportError::Compare(CompareError::DatasetNotFound {
                dataset: dataset.clone(),
            }));
        }
        let frame = build_frame(pool, dataset, &countries, &config.reference_country)?;
        ratios.push(ratio_matrix(&frame)?);
        for country in &countries {
            if let Some(series) = pool
                .iter()
                .find(|s| &s.dataset == dataset && &s.country == country)
            {
                selected_series.push(series.clone());
            }
        }
        frames.push(frame);
    }

    let laggard = laggard_report(&frames, &config.directions)?;
    let mut trends = Vec::with_capacity(selected_series.len());
    for series in &selected_series {
        // A trend needs two points; shorter series stay in the frames but
        // have no start-to-end change to report.
        if series.points.len() >= 2 {
            trends.push(trend_summary(series)?);
        }
    }
    trends.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(ComparisonSection {
        datasets,
        frames,
        ratios,
        laggard,
        trends,
        series: selected_series,
    })
}

struct ComputedQuantities {
    values: BTreeMap<&'static str, Option<f64>>,
}

impl ComputedQuantities {
    fn get(&self, key: &str) -> Option<Option<f64>> {
        self.values.get(key).copied()
    }
}

fn discrepancy_notes(
    expected: &BTreeMap<String, f64>,
    computed: &ComputedQuantities,
) -> Result<Vec<DiscrepancyNote>, ReportError> {
    let mut notes = Vec::with_capacity(expected.len());
    for (key, &expected_value) in expected {
        let slot = computed.get(key).ok_or_else(|| {
            ReportError::config(format!(
                "unknown expected key `expected_{key}`; known keys: {}",
                EXPECTED_KEYS.join(", ")
            ))
        })?;
        let computed_value = slot.ok_or_else(|| ReportError::Inconsistent {
            problem: format!(
                "`expected_{key}` was supplied but the run does not compute `{key}` \
                 (is the ledger configured?)"
            ),
        })?;
        let tolerance = f64::max(1e-7, 1e-5 * expected_value.abs());
        let delta = computed_value - expected_value;
        notes.push(DiscrepancyNote {
            key: key.clone(),
            expected: expected_value,
            computed: round6(computed_value),
            delta: round6(delta),
            tolerance,
            matches: delta.abs() <= tolerance,
        });
    }
    Ok(notes)
}

/// Runs the full pipeline over the configured inputs.
pub fn run_analysis(config: &RunConfig) -> Result<AnalysisReport, ReportError> {
    if !(config.confidence > 0.0 && config.confidence < 1.0) {
        return Err(ReportError::config(format!(
            "confidence {} must lie strictly between 0 and 1",
            config.confidence
        )));
    }
    for key in config.expected.keys() {
        if !EXPECTED_KEYS.contains(&key.as_str()) {
            return Err(ReportError::config(format!(
                "unknown expected key `expected_{key}`; known keys: {}",
                EXPECTED_KEYS.join(", ")
            )));
        }
    }

    let tables = load_tables(config)?;

    // Totals validation over every year; a failure reports the complete
    // check table, not just the first bad year.
    let checks = totals_checks(&tables.aggregates, config.totals_tolerance);
    if checks.iter().any(|c| !c.within_tolerance) {
        return Err(ReportError::Validation { checks });
    }

    // Model block.
    let inputs = build_spc_inputs(&tables.aggregates, &tables.capacity, &tables.demand)?;
    let mut spc_results = Vec::with_capacity(inputs.len());
    for row in &inputs {
        spc_results.push(compute_spc(row)?);
    }
    let trc_results: Vec<TrcResult> = tables
        .ledgers
        .as_ref()
        .map(|ledgers| ledgers.iter().map(compute_trc).collect())
        .unwrap_or_default();
    let mut balance_reports = Vec::new();
    for trc in &trc_results {
        if let Some(spc) = spc_results.iter().find(|s| s.year == trc.year) {
            balance_reports.push(balance(
                spc,
                trc,
                config.unit_bridge,
                config.balance_tolerance,
            )?);
        }
    }
    let averages = period_averages(&inputs)?;
    let utilization = utilization_ratios(&averages)?;

    // Statistics block. Fisher interval and t-test p-value apply to the
    // Pearson coefficient only; the rank coefficients are reported bare.
    let series = stats_series(&spc_results, config.signed_stats, config.index_axis);
    let descriptive = describe(&series)?;
    let correlations = vec![
        pearson(&series)?.with_inference(config.confidence)?,
        kendall_tau(&series)?,
        spearman_rho(&series)?,
    ];

    // Comparison block.
    let comparisons = match &tables.indicators {
        Some(pool) => Some(compare_indicators(pool, config)?),
        None => None,
    };

    // Expected-versus-computed notes.
    let trc_mean = if trc_results.is_empty() {
        None
    } else {
        Some(trc_results.iter().map(|t| t.total).sum::<f64>() / trc_results.len() as f64)
    };
    let trc_spc_pairs: Vec<(f64, f64)> = trc_results
        .iter()
        .filter_map(|t| {
            spc_results
                .iter()
                .find(|s| s.year == t.year)
                .map(|s| (t.total, s.magnitude))
        })
        .collect();
    let trc_spc_pearson = if trc_spc_pairs.len() >= 3 {
        Some(
            pearson(&Series::from_pairs("trc_vs_spc", trc_spc_pairs))?
                .coefficient,
        )
    } else {
        None
    };
    let computed = ComputedQuantities {
        values: BTreeMap::from([
            ("spc_mean", Some(descriptive.mean)),
            ("spc_variance", descriptive.variance),
            ("spc_std_dev", descriptive.std_dev),
            ("spc_pearson", Some(correlations[0].coefficient)),
            ("spc_kendall", Some(correlations[1].coefficient)),
            ("spc_spearman", Some(correlations[2].coefficient)),
            ("trc_mean", trc_mean),
            ("trc_spc_pearson", trc_spc_pearson),
        ]),
    };
    let notes = discrepancy_notes(&config.expected, &computed)?;

    Ok(AnalysisReport {
        meta: ReportMeta {
            tool: "circex".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: tables.digests,
        },
        validation: ValidationSection {
            tolerance: config.totals_tolerance,
            checks,
        },
        model: ModelSection {
            years: inputs.iter().map(|i| i.year).collect(),
            spc: spc_results.iter().map(rounded_spc).collect(),
            trc: trc_results.iter().map(rounded_trc).collect(),
            balance: balance_reports.iter().map(rounded_balance).collect(),
            period_averages: PeriodAverages {
                n_years: averages.n_years,
                released_tons: round6(averages.released_tons),
                regenerated_tons: round6(averages.regenerated_tons),
                capacity_tons: round6(averages.capacity_tons),
                demand_tons: round6(averages.demand_tons),
            },
            utilization: UtilizationRatios {
                capacity_to_regenerated: round6(utilization.capacity_to_regenerated),
                demand_to_regenerated: round6(utilization.demand_to_regenerated),
            },
        },
        stats: StatsSection {
            series_label: series.label.clone(),
            x_axis: if config.index_axis { "index" } else { "year" }.to_string(),
            signed: config.signed_stats,
            points: series
                .points
                .iter()
                .map(|&(x, y)| (x, round6(y)))
                .collect(),
            descriptive: rounded_descriptive(&descriptive),
            correlations: correlations.iter().map(rounded_correlation).collect(),
        },
        comparisons,
        discrepancy_notes: notes,
    })
}

/// Formats a plot value. Rust's shortest-roundtrip `Display` for `f64`
/// already prints integral values without a fractional part, which keeps
/// year axes readable and ingested values verbatim.
fn format_axis(value: f64) -> String {
    format!("{value}")
}

/// Renders a two-column tab-separated plot file with a
/// `# x_label<TAB>y_label` header line. Put units into the labels where
/// they are known, e.g. `spc_magnitude [tons]`.
pub fn emit_plot_series(x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let mut out = format!("# {x_label}\t{y_label}\n");
    for &(x, y) in points {
        out.push_str(&format_axis(x));
        out.push('\t');
        out.push_str(&format_axis(y));
        out.push('\n');
    }
    out
}

/// Renders one dataset's multi-country plot file over the years every
/// selected country reports. The first header line names the dataset and
/// unit, the second the year axis and one column per country.
fn emit_dataset_plot(series: &[&IndicatorSeries]) -> String {
    let mut common: Option<BTreeSet<u16>> = None;
    for s in series {
        let years: BTreeSet<u16> = s.points.iter().map(|p| p.year).collect();
        common = Some(match common {
            None => years,
            Some(acc) => acc.intersection(&years).copied().collect(),
        });
    }
    let years = common.unwrap_or_default();
    let mut out = format!("# {} [{}]\n", series[0].dataset, series[0].unit);
    out.push_str("# year");
    for s in series {
        out.push('\t');
        out.push_str(&s.country);
    }
    out.push('\n');
    for year in years {
        out.push_str(&year.to_string());
        for s in series {
            let value = s
                .value_in(year)
                .expect("year chosen from the intersection");
            out.push('\t');
            out.push_str(&format_axis(value));
        }
        out.push('\n');
    }
    out
}

/// Serialises the report as pretty-printed JSON with a trailing newline.
pub fn render_report_json(report: &AnalysisReport) -> String {
    let mut text =
        serde_json::to_string_pretty(report).expect("report serialisation cannot fail");
    text.push('\n');
    text
}

/// Writes `report.json` plus plot data files into the configured output
/// directory and returns the paths written (sorted).
pub fn write_report_files(
    config: &RunConfig,
    report: &AnalysisReport,
) -> Result<Vec<PathBuf>, ReportError> {
    let dir = config
        .output_dir
        .clone()
        .ok_or_else(|| ReportError::config("no output_dir configured"))?;
    fs::create_dir_all(&dir).map_err(|source| ReportError::Io {
        path: dir.clone(),
        source,
    })?;
    let write = |path: PathBuf, text: &str| -> Result<PathBuf, ReportError> {
        fs::write(&path, text).map_err(|source| ReportError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    };

    let mut written = Vec::new();
    written.push(write(dir.join("report.json"), &render_report_json(report))?);
    written.push(write(
        dir.join(format!("{}.dat", report.stats.series_label)),
        &emit_plot_series(
            &report.stats.x_axis,
            &format!("{} [tons]", report.stats.series_label),
            &report.stats.points,
        ),
    )?);
    if let Some(comparisons) = &report.comparisons {
        for dataset in &comparisons.datasets {
            let series: Vec<&IndicatorSeries> = comparisons
                .series
                .iter()
                .filter(|s| &s.dataset == dataset)
                .collect();
            if series.is_empty() {
                continue;
            }
            written.push(write(
                dir.join(format!("compare_{dataset}.dat")),
                &emit_dataset_plot(&series),
            )?);
        }
    }
    written.sort();
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_parser_basics() {
        let text = "\n# comment\nregistry = data/r.csv\nconfidence=0.99\n";
        let map = parse_key_values(text).unwrap();
        assert_eq!(map.get("registry").unwrap(), "data/r.csv");
        assert_eq!(map.get("confidence").unwrap(), "0.99");
    }

    #[test]
    fn key_values_parser_rejects_garbage_and_duplicates() {
        assert!(matches!(
            parse_key_values("just words\n"),
            Err(ReportError::Config { .. })
        ));
        assert!(matches!(
            parse_key_values("a=1\na=2\n"),
            Err(ReportError::Config { .. })
        ));
        assert!(matches!(
            parse_key_values("=5\n"),
            Err(ReportError::Config { .. })
        ));
    }

    #[test]
    fn apply_key_values_updates_config() {
        let mut config = RunConfig::new("r.csv", "c.csv", "d.csv");
        let map = parse_key_values(
            "ledger = l.csv\nsigned = true\nconfidence = 0.99\n\
             countries = BG, DE ,EU27\nexpected_spc_mean = 80755.3496\n\
             direction_env_wasgen = high_is_bad\nconversion_rate = 172.6\n",
        )
        .unwrap();
        config.apply_key_values(&map).unwrap();
        assert_eq!(config.ledger_path.as_deref(), Some(Path::new("l.csv")));
        assert!(config.signed_stats);
        assert_eq!(config.confidence, 0.99);
        assert_eq!(config.countries, vec!["BG", "DE", "EU27"]);
        assert_eq!(config.expected.get("spc_mean"), Some(&80755.3496));
        assert_eq!(
            config.unit_bridge,
            Some(UnitBridge::ConversionRate(172.6))
        );
    }

    #[test]
    fn apply_key_values_rejects_unknown_and_conflicts() {
        let mut config = RunConfig::new("r.csv", "c.csv", "d.csv");
        let unknown = parse_key_values("mystery = 5\n").unwrap();
        assert!(matches!(
            config.apply_key_values(&unknown),
            Err(ReportError::Config { .. })
        ));
        let conflict =
            parse_key_values("conversion_rate = 10\ndimensionless = true\n").unwrap();
        assert!(matches!(
            config.apply_key_values(&conflict),
            Err(ReportError::Config { .. })
        ));
    }

    #[test]
    fn round6_behaviour() {
        assert_eq!(round6(1.2345678), 1.234568);
        assert_eq!(round6(-42492.684), -42492.684);
        assert_eq!(round6(0.0000001), 0.0);
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn plot_series_format() {
        let text = emit_plot_series(
            "year",
            "spc_magnitude [tons]",
            &[(2016.0, 79992.5), (2017.0, 79785.0)],
        );
        assert_eq!(
            text,
            "# year\tspc_magnitude [tons]\n2016\t79992.5\n2017\t79785\n"
        );
    }

    #[test]
    fn unknown_expected_key_is_config_error() {
        let mut config = RunConfig::new(
            "data/registry.csv",
            "data/capacity.csv",
            "data/demand.csv",
        );
        config.expected.insert("bogus".to_string(), 1.0);
        assert!(matches!(
            run_analysis(&config),
            Err(ReportError::Config { .. })
        ));
    }
}
