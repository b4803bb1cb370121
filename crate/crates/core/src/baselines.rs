//! Textbook cost identities used as baselines for the recovery-scheme
//! model: the private-plus-external social cost, the opportunity-cost
//! (institutional) variant, the recycling optimality gap, and a
//! price-alignment diagnosis.

use serde::Serialize;

/// Relative tolerance used when the price diagnosis tests
/// `price = marginal private cost = marginal social cost` for equality.
pub const PRICE_EQUALITY_REL_TOL: f64 = 1e-9;

/// Errors raised by baseline computations.
#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("{quantity} must be finite, got {value}")]
    NonFinite { quantity: &'static str, value: f64 },
    #[error("{quantity} must be non-negative, got {value}")]
    NegativeComponent { quantity: &'static str, value: f64 },
    #[error("tolerance must be finite and non-negative, got {value}")]
    InvalidTolerance { value: f64 },
}

fn require_finite(quantity: &'static str, value: f64) -> Result<(), BaselineError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(BaselineError::NonFinite { quantity, value })
    }
}

fn require_non_negative(quantity: &'static str, value: f64) -> Result<(), BaselineError> {
    require_finite(quantity, value)?;
    if value < 0.0 {
        Err(BaselineError::NegativeComponent { quantity, value })
    } else {
        Ok(())
    }
}

/// Social cost as the sum of private and external costs.
///
/// ```
/// use circex_core::baselines::neoclassical_social_cost;
/// assert_eq!(neoclassical_social_cost(120.0, 30.0).unwrap(), 150.0);
/// ```
pub fn neoclassical_social_cost(
    private_costs: f64,
    external_costs: f64,
) -> Result<f64, BaselineError> {
    require_finite("private_costs", private_costs)?;
    require_finite("external_costs", external_costs)?;
    Ok(private_costs + external_costs)
}

/// Advisory attached to an [`InstitutionalCost`] whose value is negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostAdvisory {
    /// Private costs exceed the social opportunity costs, so the
    /// institutional social cost came out negative. The value is reported
    /// unchanged; interpret with care.
    NegativeInstitutionalCost,
}

/// Result of [`institutional_social_cost`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstitutionalCost {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advisory: Option<CostAdvisory>,
}

/// Social cost measured as social opportunity costs net of private costs.
///
/// A negative result is allowed but flagged:
///
/// ```
/// use circex_core::baselines::institutional_social_cost;
/// let cost = institutional_social_cost(100.0, 120.0).unwrap();
/// assert_eq!(cost.value, -20.0);
/// assert!(cost.advisory.is_some());
/// ```
pub fn institutional_social_cost(
    social_opportunity_costs: f64,
    private_costs: f64,
) -> Result<InstitutionalCost, BaselineError> {
    require_finite("social_opportunity_costs", social_opportunity_costs)?;
    require_finite("private_costs", private_costs)?;
    let value = social_opportunity_costs - private_costs;
    Ok(InstitutionalCost {
        value,
        advisory: (value < 0.0).then_some(CostAdvisory::NegativeInstitutionalCost),
    })
}

/// Classification of the recycling optimality gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecyclingRegime {
    /// Gap below `-tolerance`: recycling is socially cheaper at the margin
    /// than virgin production plus disposal, so society recycles too
    /// little.
    UnderRecycling,
    /// Gap within `±tolerance` of zero.
    Optimal,
    /// Gap above `+tolerance`: recycling is socially dearer at the margin,
    /// so society recycles too much.
    OverRecycling,
}

/// Result of [`recycling_optimality_gap`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecyclingGap {
    /// `msc_recycling - (msc_virgin + msc_disposal)`.
    pub gap: f64,
    pub regime: RecyclingRegime,
}

/// Gap between the marginal social cost of recycling and the marginal
/// social cost of virgin production plus disposal. All three cost
/// components must be non-negative.
///
/// ```
/// use circex_core::baselines::{recycling_optimality_gap, RecyclingRegime};
/// let gap = recycling_optimality_gap(10.0, 6.0, 4.0, 0.0).unwrap();
/// assert_eq!(gap.gap, 0.0);
/// assert_eq!(gap.regime, RecyclingRegime::Optimal);
/// ```
pub fn recycling_optimality_gap(
    msc_recycling: f64,
    msc_virgin: f64,
    msc_disposal: f64,
    tolerance: f64,
) -> Result<RecyclingGap, BaselineError> {
    require_non_negative("msc_recycling", msc_recycling)?;
    require_non_negative("msc_virgin", msc_virgin)?;
    require_non_negative("msc_disposal", msc_disposal)?;
    if !tolerance.is_finite() || tolerance < 0.0 {
        return Err(BaselineError::InvalidTolerance { value: tolerance });
    }
    let gap = msc_recycling - (msc_virgin + msc_disposal);
    let regime = if gap < -tolerance {
        RecyclingRegime::UnderRecycling
    } else if gap > tolerance {
        RecyclingRegime::OverRecycling
    } else {
        RecyclingRegime::Optimal
    };
    Ok(RecyclingGap { gap, regime })
}

/// Outcome of the price-alignment diagnosis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceDiagnosis {
    /// Price sits below the marginal private cost: production is propped
    /// up by a hidden subsidy.
    HiddenSubsidy,
    /// Price covers the marginal private cost but the marginal social cost
    /// exceeds it: external costs are not passed through.
    UncoveredExternalCosts,
    /// Price, marginal private cost, and marginal social cost coincide
    /// (within [`PRICE_EQUALITY_REL_TOL`]) and willingness to pay supports
    /// the price.
    Efficient,
    /// None of the above patterns applies.
    Other,
}

/// Inputs and outcome of [`price_alignment_diagnosis`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceAssessment {
    pub price: f64,
    pub marginal_private_cost: f64,
    pub marginal_social_cost: f64,
    pub willingness_to_pay: f64,
    pub diagnosis: PriceDiagnosis,
}

fn approx_equal(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= PRICE_EQUALITY_REL_TOL * a.abs().max(b.abs())
}

/// Diagnoses how a market price relates to marginal private and social
/// costs. Exactly one diagnosis is returned for any finite inputs.
///
/// ```
/// use circex_core::baselines::{price_alignment_diagnosis, PriceDiagnosis};
/// let a = price_alignment_diagnosis(5.0, 8.0, 12.0, 9.0).unwrap();
/// assert_eq!(a.diagnosis, PriceDiagnosis::HiddenSubsidy);
/// ```
pub fn price_alignment_diagnosis(
    price: f64,
    marginal_private_cost: f64,
    marginal_social_cost: f64,
    willingness_to_pay: f64,
) -> Result<PriceAssessment, BaselineError> {
    require_finite("price", price)?;
    require_finite("marginal_private_cost", marginal_private_cost)?;
    require_finite("marginal_social_cost", marginal_social_cost)?;
    require_finite("willingness_to_pay", willingness_to_pay)?;

    let diagnosis = if approx_equal(price, marginal_private_cost)
        && approx_equal(marginal_private_cost, marginal_social_cost)
        && approx_equal(price, marginal_social_cost)
        && willingness_to_pay >= price
    {
        PriceDiagnosis::Efficient
    } else if price < marginal_private_cost {
        PriceDiagnosis::HiddenSubsidy
    } else if marginal_social_cost > marginal_private_cost {
        PriceDiagnosis::UncoveredExternalCosts
    } else {
        PriceDiagnosis::Other
    };
    Ok(PriceAssessment {
        price,
        marginal_private_cost,
        marginal_social_cost,
        willingness_to_pay,
        diagnosis,
    })
}
