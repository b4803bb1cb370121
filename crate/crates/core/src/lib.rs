//! Analytics for extended-producer-responsibility (EPR) waste-oil recovery
//! schemes and EU circular-economy indicators.
//!
//! The crate covers five areas:
//!
//! * [`registry`] — ingestion and validation of annual recovery-registry
//!   tables, processor capacity licences, market-demand estimates,
//!   transaction-cost ledgers, and country indicator tables (CSV, with
//!   comma- or dot-decimal cells).
//! * [`baselines`] — textbook cost identities: social cost as private plus
//!   external cost, institutional (opportunity-based) social cost, the
//!   recycling optimality gap, and price-alignment diagnosis.
//! * [`spc`] — the recovery-scheme model: social public cost (SPC) of
//!   collective recovery systems measured against licensed-capacity and
//!   market-demand baselines, transaction-cost (TrC) rollups, and the
//!   SPC/TrC balance test.
//! * [`stats`] — a small, exactly-specified correlation toolkit: descriptive
//!   summaries, Pearson / Kendall / Spearman coefficients, Fisher-z
//!   confidence intervals, and a Student-t significance test.
//! * [`compare`] — cross-country indicator comparisons: pairwise ratio
//!   matrices, direction-aware laggard rankings, and trend summaries.
//!
//! [`report`] ties the areas together into a reproducible analysis run:
//! deterministic JSON reports, tab-separated plot data, and discrepancy
//! notes against externally published reference values. [`eurostat`]
//! fetches indicator tables over HTTP with a local file cache and an
//! offline fallback.
//!
//! All parsing is strict: malformed cells, duplicate keys, inconsistent
//! totals, and unknown columns are reported as typed errors that name the
//! offending table, line, and column. Derived numbers are plain `f64`;
//! every published tolerance used by the crate is a named constant on the
//! module that owns it.

pub mod baselines;
pub mod compare;
pub mod eurostat;
pub mod numeric;
pub mod registry;
pub mod report;
pub mod spc;
pub mod stats;

pub use baselines::{
    institutional_social_cost, neoclassical_social_cost, price_alignment_diagnosis,
    recycling_optimality_gap, BaselineError, CostAdvisory, InstitutionalCost, PriceAssessment,
    PriceDiagnosis, RecyclingGap, RecyclingRegime,
};
pub use compare::{
    build_frame, default_directions, laggard_report, ratio_matrix, trend_summary, CompareError,
    ComparisonFrame, CompositeEntry, DatasetRanking, Direction, LaggardReport, RatioMatrix,
    TrendSummary,
};
pub use eurostat::{fetch_indicator, is_known_dataset, FetchConfig, FetchError, KNOWN_DATASETS};
pub use registry::{
    parse_capacity_table, parse_decimal, parse_demand_table, parse_indicator_table,
    parse_ledger_table, parse_registry_table, parse_registry_tables, parse_series_table,
    serialize_indicator_table, serialize_registry_tables, totals_checks, validate_annual_totals,
    AnnualAggregate,
    CapacityRecord, CostCategory, CostLedger, DemandEstimate, IndicatorPoint, IndicatorSeries,
    IndicatorUnit, LedgerEntry, LedgerOptions, OrganizationRecord, RegistryError, RouteAllocation,
    RouteKind, TotalsCheck, TotalsColumn, DEFAULT_TOTALS_TOLERANCE, ROUTE_SUM_TOLERANCE,
};
pub use report::{
    compare_indicators, emit_plot_series, parse_key_values, round6, rounded_correlation,
    rounded_descriptive, run_analysis, write_report_files, AnalysisReport, ComparisonSection,
    DiscrepancyNote, ReportError, RunConfig,
};
pub use spc::{
    balance, compute_spc, compute_trc, period_averages, utilization_ratios, BalanceReport,
    ModelError, PeriodAverages, SpcInputs, SpcResult, TrcResult, UnitBridge,
    UtilizationRatios, DEFAULT_BALANCE_TOLERANCE,
};
pub use stats::{
    correlation_significance, describe, fisher_interval, kendall_tau, pearson, spearman_rho,
    ConfidenceInterval, CorrelationMethod, CorrelationReport, DescriptiveSummary, Series,
    StatsError,
};
