//! Ingestion and validation of the CSV tables the analysis runs on.
//!
//! Five table schemas are supported, all UTF-8 CSV with a header row:
//!
//! | table      | columns |
//! |------------|---------|
//! | registry   | `year,organization,released_tons,regenerated_tons,processor,route_tons,route_kind` |
//! | capacity   | `year,processor,licensed_capacity_tons_per_year,license_id` |
//! | demand     | `year,demand_tons,source` |
//! | ledger     | `year,category,amount` |
//! | indicators | `dataset,country,year,value,unit` |
//!
//! Numeric cells accept either a dot or a comma as the decimal separator
//! (`4297.418` and `4297,418` are the same number). Thousands separators
//! are rejected. Parsing is strict: unknown or missing columns, malformed
//! cells, duplicate keys, and inconsistent rows are errors that name the
//! table, line, and column involved.
//!
//! # Registry table shape
//!
//! The registry table is denormalized: one row per organization *route*
//! (delivery of collected oil to a processor). An organization with several
//! routes repeats its `organization`, `released_tons`, and
//! `regenerated_tons` cells on consecutive rows; an organization with no
//! recorded routes leaves the three route columns empty. Rows belonging to
//! one year must be contiguous, rows of one organization must be contiguous
//! within the year, and each year ends with a sentinel row whose
//! `organization` cell is `TOTAL` carrying the declared annual totals.
//! Routes are tagged `regeneration` (counted toward regenerated output) or
//! `recovery_only` (energy/material recovery, never counted as
//! regeneration).

use serde::Serialize;
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// Tolerance, in tons, for reconciling declared annual totals against the
/// sum of organization rows. Registry values are published at three
/// decimals, so 0.001 is the print precision of the source tables.
pub const DEFAULT_TOTALS_TOLERANCE: f64 = 0.001;

/// Tolerance, in tons, allowed when the regeneration routes of one
/// organization are compared against its regenerated total. Routes may sum
/// to *less* than the total (not every delivery is itemized) but never to
/// more than the total plus this print-precision allowance.
pub const ROUTE_SUM_TOLERANCE: f64 = 0.001;

/// How collected oil handed to a processor is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteKind {
    /// Regenerated into base oil; counts toward regenerated output.
    Regeneration,
    /// Energy or material recovery; excluded from regenerated output.
    RecoveryOnly,
}

impl FromStr for RouteKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "regeneration" => Ok(RouteKind::Regeneration),
            "recovery_only" => Ok(RouteKind::RecoveryOnly),
            other => Err(format!(
                "unknown route kind `{other}` (expected `regeneration` or `recovery_only`)"
            )),
        }
    }
}

impl fmt::Display for RouteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RouteKind::Regeneration => "regeneration",
            RouteKind::RecoveryOnly => "recovery_only",
        })
    }
}

/// One delivery of collected oil from an organization to a processor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteAllocation {
    /// Receiving processor, verbatim from the table.
    pub processor: String,
    /// Tons delivered on this route.
    pub tons: f64,
    /// Whether the delivery counts as regeneration.
    pub kind: RouteKind,
}

/// One collective-recovery organization's annual row group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrganizationRecord {
    /// Organization name, verbatim from the table.
    pub name: String,
    /// Waste oil released to market by the organization's members, tons.
    pub released_tons: f64,
    /// Waste oil regenerated on the organization's account, tons.
    pub regenerated_tons: f64,
    /// Recorded processor routes (possibly empty).
    pub routes: Vec<RouteAllocation>,
}

impl OrganizationRecord {
    /// Sum of this organization's `regeneration` routes, in tons.
    /// `recovery_only` routes are excluded.
    pub fn regeneration_route_tons(&self) -> f64 {
        self.routes
            .iter()
            .filter(|r| r.kind == RouteKind::Regeneration)
            .map(|r| r.tons)
            .sum()
    }
}

/// One year of the recovery registry: organization rows plus the declared
/// annual totals from the year's `TOTAL` sentinel row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnualAggregate {
    pub year: u16,
    pub organizations: Vec<OrganizationRecord>,
    /// Declared total of released tons (from the `TOTAL` row).
    pub total_released_tons: f64,
    /// Declared total of regenerated tons (from the `TOTAL` row).
    pub total_regenerated_tons: f64,
}

impl AnnualAggregate {
    /// Sum of organization `released_tons` cells.
    pub fn computed_released_tons(&self) -> f64 {
        self.organizations.iter().map(|o| o.released_tons).sum()
    }

    /// Sum of organization `regenerated_tons` cells.
    pub fn computed_regenerated_tons(&self) -> f64 {
        self.organizations.iter().map(|o| o.regenerated_tons).sum()
    }
}

/// A processor's licensed regeneration capacity for one year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityRecord {
    pub year: u16,
    pub processor: String,
    pub licensed_capacity_tons_per_year: f64,
    pub license_id: String,
}

/// The market-demand estimate for one year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandEstimate {
    pub year: u16,
    pub demand_tons: f64,
    /// Free-text provenance of the estimate.
    pub source: String,
}

/// Transaction-cost ledger categories.
///
/// The first five are fixed costs (three administrative, two market);
/// `performance` and `alternative` are variable costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostCategory {
    AdminBankGuarantee,
    AdminAudit,
    AdminDocumentation,
    MarketContractorControl,
    MarketCommunication,
    Performance,
    Alternative,
}

impl CostCategory {
    /// All categories, in ledger order.
    pub const ALL: [CostCategory; 7] = [
        CostCategory::AdminBankGuarantee,
        CostCategory::AdminAudit,
        CostCategory::AdminDocumentation,
        CostCategory::MarketContractorControl,
        CostCategory::MarketCommunication,
        CostCategory::Performance,
        CostCategory::Alternative,
    ];
}

impl FromStr for CostCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "admin_bank_guarantee" => Ok(CostCategory::AdminBankGuarantee),
            "admin_audit" => Ok(CostCategory::AdminAudit),
            "admin_documentation" => Ok(CostCategory::AdminDocumentation),
            "market_contractor_control" => Ok(CostCategory::MarketContractorControl),
            "market_communication" => Ok(CostCategory::MarketCommunication),
            "performance" => Ok(CostCategory::Performance),
            "alternative" => Ok(CostCategory::Alternative),
            other => Err(format!("unknown cost category `{other}`")),
        }
    }
}

impl fmt::Display for CostCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostCategory::AdminBankGuarantee => "admin_bank_guarantee",
            CostCategory::AdminAudit => "admin_audit",
            CostCategory::AdminDocumentation => "admin_documentation",
            CostCategory::MarketContractorControl => "market_contractor_control",
            CostCategory::MarketCommunication => "market_communication",
            CostCategory::Performance => "performance",
            CostCategory::Alternative => "alternative",
        })
    }
}

/// One ledger posting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub category: CostCategory,
    pub amount: f64,
}

/// All transaction-cost postings of one year, in file order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostLedger {
    pub year: u16,
    pub entries: Vec<LedgerEntry>,
}

/// Parsing options for ledger tables.
#[derive(Debug, Clone, Copy, Default)]
pub struct LedgerOptions {
    /// Permit negative posting amounts (e.g. rebates). Off by default:
    /// a negative amount is normally a data-entry error.
    pub allow_negative: bool,
}

/// Measurement unit of an indicator series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorUnit {
    KgPerCapita,
    EurPerKg,
}

impl FromStr for IndicatorUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kg_per_capita" => Ok(IndicatorUnit::KgPerCapita),
            "eur_per_kg" => Ok(IndicatorUnit::EurPerKg),
            other => Err(format!(
                "unknown unit `{other}` (expected `kg_per_capita` or `eur_per_kg`)"
            )),
        }
    }
}

impl fmt::Display for IndicatorUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndicatorUnit::KgPerCapita => "kg_per_capita",
            IndicatorUnit::EurPerKg => "eur_per_kg",
        })
    }
}

/// One (year, value) observation of an indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndicatorPoint {
    pub year: u16,
    pub value: f64,
}

/// One country's time series for one indicator dataset.
///
/// Points are strictly year-increasing; duplicate years are rejected at
/// parse time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorSeries {
    pub dataset: String,
    pub country: String,
    pub unit: IndicatorUnit,
    pub points: Vec<IndicatorPoint>,
}

impl IndicatorSeries {
    /// Value observed in `year`, if present.
    pub fn value_in(&self, year: u16) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.year == year)
            .map(|p| p.value)
    }
}

/// Which declared annual total a [`TotalsCheck`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TotalsColumn {
    Released,
    Regenerated,
}

impl fmt::Display for TotalsColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TotalsColumn::Released => "released",
            TotalsColumn::Regenerated => "regenerated",
        })
    }
}

/// Outcome of reconciling one declared annual total against the sum of the
/// year's organization rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TotalsCheck {
    pub year: u16,
    pub column: TotalsColumn,
    /// Total declared on the `TOTAL` row, verbatim.
    pub declared: f64,
    /// Sum of the organization rows.
    pub computed: f64,
    /// `computed - declared`.
    pub delta: f64,
    pub within_tolerance: bool,
}

/// Errors raised while parsing or validating tables.
#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("csv structure error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{table} table: missing required column `{column}`")]
    MissingColumn { table: &'static str, column: String },
    #[error("{table} table: unexpected column `{column}`")]
    UnexpectedColumn { table: &'static str, column: String },
    #[error("{table} table, line {line}, column `{column}`: {problem}")]
    Cell {
        table: &'static str,
        line: u64,
        column: &'static str,
        problem: String,
    },
    #[error("{table} table, line {line}: {problem}")]
    Row {
        table: &'static str,
        line: u64,
        problem: String,
    },
    #[error("{table} table, line {line}: duplicate key {key}")]
    DuplicateKey {
        table: &'static str,
        line: u64,
        key: String,
    },
    #[error("{table} table has no data rows")]
    EmptyTable { table: &'static str },
    #[error(
        "annual totals validation failed: {} of {} checks outside tolerance",
        .checks.iter().filter(|c| !c.within_tolerance).count(),
        .checks.len()
    )]
    TotalsMismatch { checks: Vec<TotalsCheck> },
}

/// Parses a decimal cell that may use either `.` or `,` as the decimal
/// separator. Thousands separators (and mixed separators) are rejected, as
/// are empty cells and non-finite values.
///
/// ```
/// use circex_core::registry::parse_decimal;
/// assert_eq!(parse_decimal("4297.418").unwrap(), 4297.418);
/// assert_eq!(parse_decimal("4297,418").unwrap(), 4297.418);
/// assert!(parse_decimal("1,234,567").is_err());
/// assert!(parse_decimal("1,234.5").is_err());
/// ```
pub fn parse_decimal(raw: &str) -> Result<f64, String> {
    let s = raw.trim();
    if s.is_empty() {
        return Err("empty numeric cell".to_string());
    }
    let commas = s.matches(',').count();
    let dots = s.matches('.').count();
    let normalized = match (commas, dots) {
        (0, 0) | (0, 1) => s.to_string(),
        (1, 0) => s.replace(',', "."),
        _ => {
            return Err(format!(
                "`{s}` mixes or repeats separators; thousands separators are not supported"
            ))
        }
    };
    let value: f64 = normalized
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if !value.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(value)
}

/// Column lookup for one table, built from the header row.
struct Columns {
    table: &'static str,
    index: BTreeMap<String, usize>,
}

impl Columns {
    fn new(
        table: &'static str,
        headers: &csv::StringRecord,
        expected: &[&str],
    ) -> Result<Self, RegistryError> {
        let mut index = BTreeMap::new();
        for (i, name) in headers.iter().enumerate() {
            if !expected.contains(&name) {
                return Err(RegistryError::UnexpectedColumn {
                    table,
                    column: name.to_string(),
                });
            }
            if index.insert(name.to_string(), i).is_some() {
                return Err(RegistryError::UnexpectedColumn {
                    table,
                    column: format!("{name} (repeated)"),
                });
            }
        }
        for want in expected {
            if !index.contains_key(*want) {
                return Err(RegistryError::MissingColumn {
                    table,
                    column: want.to_string(),
                });
            }
        }
        Ok(Columns { table, index })
    }

    fn get<'r>(&self, record: &'r csv::StringRecord, column: &'static str) -> &'r str {
        record.get(self.index[column]).unwrap_or("")
    }

    fn decimal(
        &self,
        record: &csv::StringRecord,
        line: u64,
        column: &'static str,
    ) -> Result<f64, RegistryError> {
        parse_decimal(self.get(record, column)).map_err(|problem| RegistryError::Cell {
            table: self.table,
            line,
            column,
            problem,
        })
    }

    fn year(
        &self,
        record: &csv::StringRecord,
        line: u64,
        column: &'static str,
    ) -> Result<u16, RegistryError> {
        let raw = self.get(record, column).trim();
        raw.parse::<u16>().map_err(|_| RegistryError::Cell {
            table: self.table,
            line,
            column,
            problem: format!("`{raw}` is not a year"),
        })
    }

    fn non_empty(
        &self,
        record: &csv::StringRecord,
        line: u64,
        column: &'static str,
    ) -> Result<String, RegistryError> {
        let raw = self.get(record, column).trim();
        if raw.is_empty() {
            return Err(RegistryError::Cell {
                table: self.table,
                line,
                column,
                problem: "cell must not be empty".to_string(),
            });
        }
        Ok(raw.to_string())
    }
}

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

const REGISTRY_TABLE: &str = "registry";
const TOTAL_SENTINEL: &str = "TOTAL";

struct YearBlock {
    aggregate: AnnualAggregate,
    total_seen: bool,
    last_line: u64,
    seen_orgs: BTreeSet<String>,
}

/// Parses a registry table that may hold several years (each year a
/// contiguous block ending in its `TOTAL` row). Returns one aggregate per
/// year, in file order.
pub fn parse_registry_tables(bytes: &[u8]) -> Result<Vec<AnnualAggregate>, RegistryError> {
    let mut rdr = reader(bytes);
    let headers = rdr.headers()?.clone();
    let cols = Columns::new(
        REGISTRY_TABLE,
        &headers,
        &[
            "year",
            "organization",
            "released_tons",
            "regenerated_tons",
            "processor",
            "route_tons",
            "route_kind",
        ],
    )?;

    let mut blocks: Vec<YearBlock> = Vec::new();
    let mut closed_years: BTreeSet<u16> = BTreeSet::new();

    for result in rdr.records() {
        let record = result?;
        let line = record_line(&record);
        let year = cols.year(&record, line, "year")?;
        let organization = cols.non_empty(&record, line, "organization")?;

        let start_new_block = match blocks.last() {
            Some(block) if block.aggregate.year == year => false,
            _ => true,
        };
        if start_new_block {
            if let Some(previous) = blocks.last() {
                if !previous.total_seen {
                    return Err(RegistryError::Row {
                        table: REGISTRY_TABLE,
                        line: previous.last_line,
                        problem: format!(
                            "year {} block ended without a TOTAL row",
                            previous.aggregate.year
                        ),
                    });
                }
            }
            if closed_years.contains(&year) {
                return Err(RegistryError::Row {
                    table: REGISTRY_TABLE,
                    line,
                    problem: format!("rows for year {year} must be contiguous"),
                });
            }
            closed_years.insert(year);
            blocks.push(YearBlock {
                aggregate: AnnualAggregate {
                    year,
                    organizations: Vec::new(),
                    total_released_tons: 0.0,
                    total_regenerated_tons: 0.0,
                },
                total_seen: false,
                last_line: line,
                seen_orgs: BTreeSet::new(),
            });
        }
        let block = blocks.last_mut().expect("block exists");
        block.last_line = line;

        if block.total_seen {
            return Err(RegistryError::Row {
                table: REGISTRY_TABLE,
                line,
                problem: format!("row after the TOTAL row of year {year}"),
            });
        }

        let released = cols.decimal(&record, line, "released_tons")?;
        let regenerated = cols.decimal(&record, line, "regenerated_tons")?;
        check_tonnage(line, "released_tons", released)?;
        check_tonnage(line, "regenerated_tons", regenerated)?;
        if regenerated > released {
            return Err(RegistryError::Row {
                table: REGISTRY_TABLE,
                line,
                problem: format!(
                    "regenerated_tons {regenerated} exceeds released_tons {released}"
                ),
            });
        }

        let processor = cols.get(&record, "processor").trim().to_string();
        let route_tons_raw = cols.get(&record, "route_tons").trim().to_string();
        let route_kind_raw = cols.get(&record, "route_kind").trim().to_string();
        let has_route = !(processor.is_empty() && route_tons_raw.is_empty() && route_kind_raw.is_empty());
        let route = if has_route {
            if processor.is_empty() || route_tons_raw.is_empty() || route_kind_raw.is_empty() {
                return Err(RegistryError::Row {
                    table: REGISTRY_TABLE,
                    line,
                    problem: "route columns must be all empty or all filled".to_string(),
                });
            }
            let tons = cols.decimal(&record, line, "route_tons")?;
            check_tonnage(line, "route_tons", tons)?;
            let kind =
                route_kind_raw
                    .parse::<RouteKind>()
                    .map_err(|problem| RegistryError::Cell {
                        table: REGISTRY_TABLE,
                        line,
                        column: "route_kind",
                        problem,
                    })?;
            Some(RouteAllocation {
                processor,
                tons,
                kind,
            })
        } else {
            None
        };

        if organization == TOTAL_SENTINEL {
            if route.is_some() {
                return Err(RegistryError::Row {
                    table: REGISTRY_TABLE,
                    line,
                    problem: "TOTAL row must not carry route columns".to_string(),
                });
            }
            if block.aggregate.organizations.is_empty() {
                return Err(RegistryError::Row {
                    table: REGISTRY_TABLE,
                    line,
                    problem: format!("TOTAL row of year {year} precedes any organization row"),
                });
            }
            block.aggregate.total_released_tons = released;
            block.aggregate.total_regenerated_tons = regenerated;
            block.total_seen = true;
            continue;
        }

        let continues_current = block
            .aggregate
            .organizations
            .last()
            .map(|o| o.name == organization)
            .unwrap_or(false);
        if continues_current {
            let current = block
                .aggregate
                .organizations
                .last_mut()
                .expect("current organization exists");
            if current.released_tons != released || current.regenerated_tons != regenerated {
                return Err(RegistryError::Row {
                    table: REGISTRY_TABLE,
                    line,
                    problem: format!(
                        "organization `{organization}` repeats with different totals"
                    ),
                });
            }
            match route {
                Some(r) => current.routes.push(r),
                None => {
                    return Err(RegistryError::Row {
                        table: REGISTRY_TABLE,
                        line,
                        problem: format!(
                            "continuation row for `{organization}` carries no route"
                        ),
                    })
                }
            }
        } else {
            if block.seen_orgs.contains(&organization) {
                return Err(RegistryError::DuplicateKey {
                    table: REGISTRY_TABLE,
                    line,
                    key: format!("organization `{organization}` in year {year}"),
                });
            }
            block.seen_orgs.insert(organization.clone());
            block.aggregate.organizations.push(OrganizationRecord {
                name: organization,
                released_tons: released,
                regenerated_tons: regenerated,
                routes: route.into_iter().collect(),
            });
        }
    }

    if blocks.is_empty() {
        return Err(RegistryError::EmptyTable {
            table: REGISTRY_TABLE,
        });
    }
    if let Some(last) = blocks.last() {
        if !last.total_seen {
            return Err(RegistryError::Row {
                table: REGISTRY_TABLE,
                line: last.last_line,
                problem: format!(
                    "year {} block ended without a TOTAL row",
                    last.aggregate.year
                ),
            });
        }
    }

    for block in &blocks {
        for org in &block.aggregate.organizations {
            let route_sum = org.regeneration_route_tons();
            if route_sum > org.regenerated_tons + ROUTE_SUM_TOLERANCE {
                return Err(RegistryError::Row {
                    table: REGISTRY_TABLE,
                    line: block.last_line,
                    problem: format!(
                        "organization `{}` (year {}): regeneration routes sum to {route_sum} \
                         tons, exceeding the regenerated total {}",
                        org.name, block.aggregate.year, org.regenerated_tons
                    ),
                });
            }
        }
    }

    Ok(blocks.into_iter().map(|b| b.aggregate).collect())
}

fn check_tonnage(line: u64, column: &'static str, value: f64) -> Result<(), RegistryError> {
    if value < 0.0 {
        return Err(RegistryError::Cell {
            table: REGISTRY_TABLE,
            line,
            column,
            problem: format!("tonnage must be non-negative, got {value}"),
        });
    }
    Ok(())
}

/// Parses a registry table that must hold exactly one year.
pub fn parse_registry_table(bytes: &[u8]) -> Result<AnnualAggregate, RegistryError> {
    let mut aggregates = parse_registry_tables(bytes)?;
    if aggregates.len() != 1 {
        return Err(RegistryError::Row {
            table: REGISTRY_TABLE,
            line: 0,
            problem: format!(
                "expected exactly one year in the table, found {}",
                aggregates.len()
            ),
        });
    }
    Ok(aggregates.remove(0))
}

/// Serializes aggregates back to the registry CSV schema. Numbers are
/// written with `.` decimals in the shortest round-trip form, so
/// `parse_registry_tables(serialize_registry_tables(x).as_bytes()) == x`.
pub fn serialize_registry_tables(aggregates: &[AnnualAggregate]) -> String {
    let mut out = String::from(
        "year,organization,released_tons,regenerated_tons,processor,route_tons,route_kind\n",
    );
    let mut push_row = |cells: [&str; 7]| {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        writer.write_record(cells).expect("in-memory csv write");
        let inner = writer.into_inner().expect("in-memory csv flush");
        out.push_str(std::str::from_utf8(&inner).expect("csv output is utf-8"));
    };
    for aggregate in aggregates {
        let year = aggregate.year.to_string();
        for org in &aggregate.organizations {
            let released = org.released_tons.to_string();
            let regenerated = org.regenerated_tons.to_string();
            if org.routes.is_empty() {
                push_row([&year, &org.name, &released, &regenerated, "", "", ""]);
            } else {
                for route in &org.routes {
                    push_row([
                        &year,
                        &org.name,
                        &released,
                        &regenerated,
                        &route.processor,
                        &route.tons.to_string(),
                        &route.kind.to_string(),
                    ]);
                }
            }
        }
        push_row([
            &year,
            TOTAL_SENTINEL,
            &aggregate.total_released_tons.to_string(),
            &aggregate.total_regenerated_tons.to_string(),
            "",
            "",
            "",
        ]);
    }
    out
}

/// Reconciles the declared annual totals of `aggregate` against the sums of
/// its organization rows.
///
/// Returns both checks (released and regenerated) when they pass; fails
/// with [`RegistryError::TotalsMismatch`] carrying all checks when either
/// deviates by more than `tolerance` tons.
pub fn validate_annual_totals(
    aggregate: &AnnualAggregate,
    tolerance: f64,
) -> Result<Vec<TotalsCheck>, RegistryError> {
    let make = |column: TotalsColumn, declared: f64, computed: f64| {
        let delta = computed - declared;
        TotalsCheck {
            year: aggregate.year,
            column,
            declared,
            computed,
            delta,
            within_tolerance: delta.abs() <= tolerance,
        }
    };
    let checks = vec![
        make(
            TotalsColumn::Released,
            aggregate.total_released_tons,
            aggregate.computed_released_tons(),
        ),
        make(
            TotalsColumn::Regenerated,
            aggregate.total_regenerated_tons,
            aggregate.computed_regenerated_tons(),
        ),
    ];
    if checks.iter().all(|c| c.within_tolerance) {
        Ok(checks)
    } else {
        Err(RegistryError::TotalsMismatch { checks })
    }
}

/// Reconciles every aggregate's totals, returning the full check table
/// regardless of outcome. Callers inspect
/// [`TotalsCheck::within_tolerance`] to decide pass or fail; this never
/// short-circuits on the first bad year.
pub fn totals_checks(aggregates: &[AnnualAggregate], tolerance: f64) -> Vec<TotalsCheck> {
    aggregates
        .iter()
        .flat_map(|aggregate| match validate_annual_totals(aggregate, tolerance) {
            Ok(checks) | Err(RegistryError::TotalsMismatch { checks }) => checks,
            Err(_) => unreachable!("validate_annual_totals only fails with TotalsMismatch"),
        })
        .collect()
}

const CAPACITY_TABLE: &str = "capacity";

/// Parses the processor capacity table. Records are sorted by
/// `(year, processor)`; duplicate `(year, processor)` pairs are rejected.
pub fn parse_capacity_table(bytes: &[u8]) -> Result<Vec<CapacityRecord>, RegistryError> {
    let mut rdr = reader(bytes);
    let headers = rdr.headers()?.clone();
    let cols = Columns::new(
        CAPACITY_TABLE,
        &headers,
        &[
            "year",
            "processor",
            "licensed_capacity_tons_per_year",
            "license_id",
        ],
    )?;
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for result in rdr.records() {
        let record = result?;
        let line = record_line(&record);
        let year = cols.year(&record, line, "year")?;
        let processor = cols.non_empty(&record, line, "processor")?;
        let capacity = cols.decimal(&record, line, "licensed_capacity_tons_per_year")?;
        if capacity <= 0.0 {
            return Err(RegistryError::Cell {
                table: CAPACITY_TABLE,
                line,
                column: "licensed_capacity_tons_per_year",
                problem: format!("licensed capacity must be positive, got {capacity}"),
            });
        }
        let license_id = cols.non_empty(&record, line, "license_id")?;
        if !seen.insert((year, processor.clone())) {
            return Err(RegistryError::DuplicateKey {
                table: CAPACITY_TABLE,
                line,
                key: format!("processor `{processor}` in year {year}"),
            });
        }
        records.push(CapacityRecord {
            year,
            processor,
            licensed_capacity_tons_per_year: capacity,
            license_id,
        });
    }
    if records.is_empty() {
        return Err(RegistryError::EmptyTable {
            table: CAPACITY_TABLE,
        });
    }
    records.sort_by(|a, b| (a.year, &a.processor).cmp(&(b.year, &b.processor)));
    Ok(records)
}

const DEMAND_TABLE: &str = "demand";

/// Parses the market-demand table. One row per year; duplicate years are
/// rejected; estimates are sorted by year.
pub fn parse_demand_table(bytes: &[u8]) -> Result<Vec<DemandEstimate>, RegistryError> {
    let mut rdr = reader(bytes);
    let headers = rdr.headers()?.clone();
    let cols = Columns::new(DEMAND_TABLE, &headers, &["year", "demand_tons", "source"])?;
    let mut estimates = Vec::new();
    let mut seen = BTreeSet::new();
    for result in rdr.records() {
        let record = result?;
        let line = record_line(&record);
        let year = cols.year(&record, line, "year")?;
        let demand = cols.decimal(&record, line, "demand_tons")?;
        if demand <= 0.0 {
            return Err(RegistryError::Cell {
                table: DEMAND_TABLE,
                line,
                column: "demand_tons",
                problem: format!("demand must be positive, got {demand}"),
            });
        }
        let source = cols.non_empty(&record, line, "source")?;
        if !seen.insert(year) {
            return Err(RegistryError::DuplicateKey {
                table: DEMAND_TABLE,
                line,
                key: format!("year {year}"),
            });
        }
        estimates.push(DemandEstimate {
            year,
            demand_tons: demand,
            source,
        });
    }
    if estimates.is_empty() {
        return Err(RegistryError::EmptyTable {
            table: DEMAND_TABLE,
        });
    }
    estimates.sort_by_key(|e| e.year);
    Ok(estimates)
}

const LEDGER_TABLE: &str = "ledger";

/// Parses a transaction-cost ledger. Postings are grouped into one
/// [`CostLedger`] per year (years sorted ascending, postings in file
/// order). Negative amounts are rejected unless
/// [`LedgerOptions::allow_negative`] is set.
pub fn parse_ledger_table(
    bytes: &[u8],
    options: LedgerOptions,
) -> Result<Vec<CostLedger>, RegistryError> {
    let mut rdr = reader(bytes);
    let headers = rdr.headers()?.clone();
    let cols = Columns::new(LEDGER_TABLE, &headers, &["year", "category", "amount"])?;
    let mut by_year: BTreeMap<u16, Vec<LedgerEntry>> = BTreeMap::new();
    let mut any = false;
    for result in rdr.records() {
        let record = result?;
        let line = record_line(&record);
        let year = cols.year(&record, line, "year")?;
        let category = cols
            .non_empty(&record, line, "category")?
            .parse::<CostCategory>()
            .map_err(|problem| RegistryError::Cell {
                table: LEDGER_TABLE,
                line,
                column: "category",
                problem,
            })?;
        let amount = cols.decimal(&record, line, "amount")?;
        if amount < 0.0 && !options.allow_negative {
            return Err(RegistryError::Cell {
                table: LEDGER_TABLE,
                line,
                column: "amount",
                problem: format!(
                    "negative amount {amount} (enable allow_negative to permit rebates)"
                ),
            });
        }
        by_year
            .entry(year)
            .or_default()
            .push(LedgerEntry { category, amount });
        any = true;
    }
    if !any {
        return Err(RegistryError::EmptyTable {
            table: LEDGER_TABLE,
        });
    }
    Ok(by_year
        .into_iter()
        .map(|(year, entries)| CostLedger { year, entries })
        .collect())
}

const INDICATORS_TABLE: &str = "indicators";

/// Parses an indicator table into per-`(dataset, country)` series sorted by
/// `(dataset, country)`, each with strictly year-increasing points.
pub fn parse_indicator_table(bytes: &[u8]) -> Result<Vec<IndicatorSeries>, RegistryError> {
    let mut rdr = reader(bytes);
    let headers = rdr.headers()?.clone();
    let cols = Columns::new(
        INDICATORS_TABLE,
        &headers,
        &["dataset", "country", "year", "value", "unit"],
    )?;
    struct Building {
        unit: IndicatorUnit,
        unit_line: u64,
        points: BTreeMap<u16, f64>,
    }
    let mut series: BTreeMap<(String, String), Building> = BTreeMap::new();
    let mut any = false;
    for result in rdr.records() {
        let record = result?;
        let line = record_line(&record);
        let dataset = cols.non_empty(&record, line, "dataset")?;
        let country = cols.non_empty(&record, line, "country")?;
        let year = cols.year(&record, line, "year")?;
        let value = cols.decimal(&record, line, "value")?;
        let unit = cols
            .non_empty(&record, line, "unit")?
            .parse::<IndicatorUnit>()
            .map_err(|problem| RegistryError::Cell {
                table: INDICATORS_TABLE,
                line,
                column: "unit",
                problem,
            })?;
        any = true;
        let key = (dataset.clone(), country.clone());
        let entry = series.entry(key).or_insert_with(|| Building {
            unit,
            unit_line: line,
            points: BTreeMap::new(),
        });
        if entry.unit != unit {
            return Err(RegistryError::Row {
                table: INDICATORS_TABLE,
                line,
                problem: format!(
                    "unit `{unit}` conflicts with `{}` declared on line {} for {dataset}/{country}",
                    entry.unit, entry.unit_line
                ),
            });
        }
        if entry.points.insert(year, value).is_some() {
            return Err(RegistryError::DuplicateKey {
                table: INDICATORS_TABLE,
                line,
                key: format!("{dataset}/{country} year {year}"),
            });
        }
    }
    if !any {
        return Err(RegistryError::EmptyTable {
            table: INDICATORS_TABLE,
        });
    }
    Ok(series
        .into_iter()
        .map(|((dataset, country), building)| IndicatorSeries {
            dataset,
            country,
            unit: building.unit,
            points: building
                .points
                .into_iter()
                .map(|(year, value)| IndicatorPoint { year, value })
                .collect(),
        })
        .collect())
}

const SERIES_TABLE: &str = "series";

/// Parses two named columns of an arbitrary CSV file into a
/// [`crate::stats::Series`] labelled after the `y` column. Extra columns
/// are ignored; rows are kept in file order. Numeric cells follow the same
/// decimal rules as every other table ([`parse_decimal`]).
pub fn parse_series_table(
    bytes: &[u8],
    x_column: &str,
    y_column: &str,
) -> Result<crate::stats::Series, RegistryError> {
    let mut rdr = reader(bytes);
    let headers = rdr.headers()?.clone();
    let position = |name: &str| -> Result<usize, RegistryError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| RegistryError::MissingColumn {
                table: SERIES_TABLE,
                column: name.to_string(),
            })
    };
    let x_index = position(x_column)?;
    let y_index = position(y_column)?;
    let mut points = Vec::new();
    for result in rdr.records() {
        let record = result?;
        let line = record_line(&record);
        let cell = |index: usize, name: &str| -> Result<f64, RegistryError> {
            parse_decimal(record.get(index).unwrap_or("")).map_err(|problem| {
                RegistryError::Row {
                    table: SERIES_TABLE,
                    line,
                    problem: format!("column `{name}`: {problem}"),
                }
            })
        };
        let x = cell(x_index, x_column)?;
        let y = cell(y_index, y_column)?;
        points.push((x, y));
    }
    if points.is_empty() {
        return Err(RegistryError::EmptyTable {
            table: SERIES_TABLE,
        });
    }
    Ok(crate::stats::Series::from_pairs(y_column, points))
}

/// Serializes indicator series back to the indicators CSV schema, rows
/// sorted by `(dataset, country, year)`.
pub fn serialize_indicator_table(series: &[IndicatorSeries]) -> String {
    let mut out = String::from("dataset,country,year,value,unit\n");
    for s in series {
        for p in &s.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.dataset, s.country, p.year, p.value, s.unit
            ));
        }
    }
    out
}
