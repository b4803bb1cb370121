//! The recovery-scheme model: social public cost (SPC) of collective
//! recovery systems against two baselines, transaction-cost (TrC) rollups,
//! the SPC/TrC balance test, and period summaries.
//!
//! SPC is measured in tons as "regenerated with collective systems minus
//! baseline", once with the licensed processing capacity as the baseline
//! (`spc_capacity`) and once with market demand (`spc_demand`). The two
//! variants are averaged into `spc_average`; its absolute value is the
//! `magnitude` used by the statistics layer. TrC totals come from ledger
//! postings in money units. Because tons and money are never silently
//! equated, the balance test requires an explicit [`UnitBridge`].

use crate::registry::{CostCategory, CostLedger};
use serde::Serialize;

/// Default tolerance on `|ln(ratio)|` under which the SPC/TrC balance
/// hypothesis is flagged as holding.
pub const DEFAULT_BALANCE_TOLERANCE: f64 = 1e-6;

/// Errors raised by the recovery-scheme model.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("year {year}: {quantity} must be finite, got {value}")]
    NonFinite {
        year: u16,
        quantity: &'static str,
        value: f64,
    },
    #[error("year {year}: {quantity} must be positive, got {value}")]
    NonPositiveBaseline {
        year: u16,
        quantity: &'static str,
        value: f64,
    },
    #[error("year {year}: regenerated tonnage must be non-negative, got {value}")]
    NegativeRegenerated { year: u16, value: f64 },
    #[error("period averages need at least one year of inputs")]
    EmptyPeriod,
    #[error("utilization ratios are undefined: mean regenerated tonnage is {value}")]
    NonPositiveRegeneratedMean { value: f64 },
    #[error(
        "year {year}: transaction-cost total {total} is not positive; the balance ratio is undefined"
    )]
    NonPositiveTransactionCosts { year: u16, total: f64 },
    #[error("conversion rate must be finite and positive, got {value}")]
    InvalidConversionRate { value: f64 },
    #[error("balance tolerance must be finite and non-negative, got {value}")]
    InvalidTolerance { value: f64 },
    #[error("SPC is for year {spc_year} but TrC is for year {trc_year}")]
    YearMismatch { spc_year: u16, trc_year: u16 },
}

/// One year of model inputs, as assembled from the registry, capacity, and
/// demand tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpcInputs {
    pub year: u16,
    /// Waste oil released to market (annual registry total), tons.
    pub released_tons: f64,
    /// Waste oil regenerated through collective recovery systems, tons.
    pub regenerated_with_systems_tons: f64,
    /// Licensed regeneration capacity baseline, tons.
    pub capacity_baseline_tons: f64,
    /// Market demand baseline, tons.
    pub demand_baseline_tons: f64,
}

/// One year of social-public-cost results, in tons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpcResult {
    pub year: u16,
    /// Regenerated minus the capacity baseline.
    pub spc_capacity: f64,
    /// Regenerated minus the demand baseline.
    pub spc_demand: f64,
    /// Mean of the two variants.
    pub spc_average: f64,
    /// `|spc_average|`.
    pub magnitude: f64,
}

/// Social public cost of one year against both baselines.
///
/// ```
/// use circex_core::spc::{compute_spc, SpcInputs};
/// let result = compute_spc(&SpcInputs {
///     year: 2016,
///     released_tons: 31223.806,
///     regenerated_with_systems_tons: 12507.316,
///     capacity_baseline_tons: 55000.0,
///     demand_baseline_tons: 130000.0,
/// })
/// .unwrap();
/// assert_eq!(result.spc_capacity, -42492.684);
/// assert_eq!(result.spc_demand, -117492.684);
/// assert_eq!(result.spc_average, -79992.684);
/// assert_eq!(result.magnitude, 79992.684);
/// ```
pub fn compute_spc(inputs: &SpcInputs) -> Result<SpcResult, ModelError> {
    let year = inputs.year;
    for (quantity, value) in [
        ("released_tons", inputs.released_tons),
        (
            "regenerated_with_systems_tons",
            inputs.regenerated_with_systems_tons,
        ),
        ("capacity_baseline_tons", inputs.capacity_baseline_tons),
        ("demand_baseline_tons", inputs.demand_baseline_tons),
    ] {
        if !value.is_finite() {
            return Err(ModelError::NonFinite {
                year,
                quantity,
                value,
            });
        }
    }
    if inputs.regenerated_with_systems_tons < 0.0 {
        return Err(ModelError::NegativeRegenerated {
            year,
            value: inputs.regenerated_with_systems_tons,
        });
    }
    for (quantity, value) in [
        ("capacity_baseline_tons", inputs.capacity_baseline_tons),
        ("demand_baseline_tons", inputs.demand_baseline_tons),
    ] {
        if value <= 0.0 {
            return Err(ModelError::NonPositiveBaseline {
                year,
                quantity,
                value,
            });
        }
    }
    let spc_capacity = inputs.regenerated_with_systems_tons - inputs.capacity_baseline_tons;
    let spc_demand = inputs.regenerated_with_systems_tons - inputs.demand_baseline_tons;
    let spc_average = (spc_capacity + spc_demand) / 2.0;
    Ok(SpcResult {
        year,
        spc_capacity,
        spc_demand,
        spc_average,
        magnitude: spc_average.abs(),
    })
}

/// One year of transaction-cost rollups, in the ledger's money unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrcResult {
    pub year: u16,
    /// Bank guarantee + audit + documentation postings.
    pub administrative: f64,
    /// Contractor control + communication postings.
    pub market: f64,
    /// `administrative + market`.
    pub fixed: f64,
    /// Performance postings.
    pub performance: f64,
    /// Alternative (next-best-use) postings.
    pub alternative: f64,
    /// `performance + alternative`.
    pub variable: f64,
    /// `fixed + variable`.
    pub total: f64,
}

/// Rolls one year's ledger postings up into the fixed/variable
/// transaction-cost partition.
///
/// ```
/// use circex_core::registry::{parse_ledger_table, LedgerOptions};
/// use circex_core::spc::compute_trc;
/// let table = "year,category,amount\n\
///     2016,admin_bank_guarantee,10\n2016,admin_audit,5\n2016,admin_documentation,2\n\
///     2016,market_contractor_control,3\n2016,market_communication,1\n\
///     2016,performance,7\n2016,alternative,4\n";
/// let ledgers = parse_ledger_table(table.as_bytes(), LedgerOptions::default()).unwrap();
/// let trc = compute_trc(&ledgers[0]);
/// assert_eq!(trc.administrative, 17.0);
/// assert_eq!(trc.market, 4.0);
/// assert_eq!(trc.fixed, 21.0);
/// assert_eq!(trc.variable, 11.0);
/// assert_eq!(trc.total, 32.0);
/// ```
pub fn compute_trc(ledger: &CostLedger) -> TrcResult {
    let mut sums = [0.0f64; 7];
    for entry in &ledger.entries {
        let slot = CostCategory::ALL
            .iter()
            .position(|c| *c == entry.category)
            .expect("category list is exhaustive");
        sums[slot] += entry.amount;
    }
    let administrative = sums[0] + sums[1] + sums[2];
    let market = sums[3] + sums[4];
    let fixed = administrative + market;
    let performance = sums[5];
    let alternative = sums[6];
    let variable = performance + alternative;
    TrcResult {
        year: ledger.year,
        administrative,
        market,
        fixed,
        performance,
        alternative,
        variable,
        total: fixed + variable,
    }
}

/// How SPC tons are brought into the TrC money unit for the balance test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitBridge {
    /// Money per ton of social public cost.
    ConversionRate(f64),
    /// Caller declares both sides dimensionless and directly comparable.
    Dimensionless,
}

/// Outcome of the SPC/TrC balance test for one year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub year: u16,
    /// SPC magnitude, tons.
    pub spc_magnitude_tons: f64,
    /// TrC total, money units.
    pub trc_total: f64,
    /// SPC magnitude expressed in money units via the bridge, when one is
    /// configured.
    pub spc_money_value: Option<f64>,
    /// Whether the two sides were made comparable.
    pub comparable: bool,
    /// `spc_money_value / trc_total`, when comparable.
    pub ratio: Option<f64>,
    /// `ln(ratio)`, when comparable and the ratio is positive.
    pub log_residual: Option<f64>,
    /// Whether `|log_residual| <= tolerance`; `None` when undefined.
    pub holds: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advisory: Option<String>,
}

/// Tests the hypothesis that social public costs and transaction costs
/// balance: `ratio = SPC/TrC` should sit at 1, i.e. `ln(ratio)` at 0,
/// within `tolerance`.
///
/// Tons and money are never silently equated: with `bridge == None` the
/// report comes back `comparable: false` and carries no ratio. A
/// transaction-cost total of zero (or below) is an error because the ratio
/// is undefined. A zero SPC magnitude yields a zero ratio whose logarithm
/// is undefined; this is reported with an advisory instead of an error.
///
/// ```
/// use circex_core::registry::CostLedger;
/// use circex_core::spc::*;
/// let spc = SpcResult { year: 1, spc_capacity: -5.0, spc_demand: -5.0, spc_average: -5.0, magnitude: 5.0 };
/// let trc = compute_trc(&CostLedger { year: 1, entries: vec![] });
/// assert!(balance(&spc, &trc, Some(UnitBridge::Dimensionless), 1e-6).is_err());
/// ```
pub fn balance(
    spc: &SpcResult,
    trc: &TrcResult,
    bridge: Option<UnitBridge>,
    tolerance: f64,
) -> Result<BalanceReport, ModelError> {
    if spc.year != trc.year {
        return Err(ModelError::YearMismatch {
            spc_year: spc.year,
            trc_year: trc.year,
        });
    }
    if !tolerance.is_finite() || tolerance < 0.0 {
        return Err(ModelError::InvalidTolerance { value: tolerance });
    }
    let mut report = BalanceReport {
        year: spc.year,
        spc_magnitude_tons: spc.magnitude,
        trc_total: trc.total,
        spc_money_value: None,
        comparable: false,
        ratio: None,
        log_residual: None,
        holds: None,
        advisory: None,
    };
    let money_value = match bridge {
        None => {
            report.advisory = Some(
                "no unit bridge configured; SPC (tons) and TrC (money) were not compared"
                    .to_string(),
            );
            return Ok(report);
        }
        Some(UnitBridge::ConversionRate(rate)) => {
            if !rate.is_finite() || rate <= 0.0 {
                return Err(ModelError::InvalidConversionRate { value: rate });
            }
            spc.magnitude * rate
        }
        Some(UnitBridge::Dimensionless) => spc.magnitude,
    };
    if trc.total <= 0.0 {
        return Err(ModelError::NonPositiveTransactionCosts {
            year: trc.year,
            total: trc.total,
        });
    }
    report.spc_money_value = Some(money_value);
    report.comparable = true;
    let ratio = money_value / trc.total;
    report.ratio = Some(ratio);
    if ratio > 0.0 {
        let log_residual = ratio.ln();
        report.log_residual = Some(log_residual);
        report.holds = Some(log_residual.abs() <= tolerance);
    } else {
        report.advisory =
            Some("SPC magnitude is zero; ln(ratio) is undefined".to_string());
    }
    Ok(report)
}

/// Per-column means over the modelled period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodAverages {
    pub n_years: usize,
    pub released_tons: f64,
    pub regenerated_tons: f64,
    pub capacity_tons: f64,
    pub demand_tons: f64,
}

/// Arithmetic means of each input column over the period.
pub fn period_averages(rows: &[SpcInputs]) -> Result<PeriodAverages, ModelError> {
    if rows.is_empty() {
        return Err(ModelError::EmptyPeriod);
    }
    let n = rows.len() as f64;
    Ok(PeriodAverages {
        n_years: rows.len(),
        released_tons: rows.iter().map(|r| r.released_tons).sum::<f64>() / n,
        regenerated_tons: rows
            .iter()
            .map(|r| r.regenerated_with_systems_tons)
            .sum::<f64>()
            / n,
        capacity_tons: rows.iter().map(|r| r.capacity_baseline_tons).sum::<f64>() / n,
        demand_tons: rows.iter().map(|r| r.demand_baseline_tons).sum::<f64>() / n,
    })
}

/// How far mean capacity and mean demand sit above mean regenerated output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtilizationRatios {
    /// Mean capacity baseline over mean regenerated tons.
    pub capacity_to_regenerated: f64,
    /// Mean demand baseline over mean regenerated tons.
    pub demand_to_regenerated: f64,
}

/// Capacity and demand as multiples of regenerated output, from period
/// means.
pub fn utilization_ratios(averages: &PeriodAverages) -> Result<UtilizationRatios, ModelError> {
    if averages.regenerated_tons <= 0.0 {
        return Err(ModelError::NonPositiveRegeneratedMean {
            value: averages.regenerated_tons,
        });
    }
    Ok(UtilizationRatios {
        capacity_to_regenerated: averages.capacity_tons / averages.regenerated_tons,
        demand_to_regenerated: averages.demand_tons / averages.regenerated_tons,
    })
}
