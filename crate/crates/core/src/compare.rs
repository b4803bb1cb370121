//! Cross-country indicator comparisons: aligning series on a common year,
//! pairwise ratio matrices, laggard rankings, and trend summaries.

use crate::registry::{IndicatorSeries, IndicatorUnit};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Errors raised while building comparisons.
#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error("no indicator series were given")]
    EmptyInput,
    #[error("no series at all for dataset `{dataset}` among the selected countries")]
    DatasetNotFound { dataset: String },
    #[error("dataset `{dataset}`: no year is shared by all selected countries")]
    NoCommonYear { dataset: String },
    #[error("dataset `{dataset}`: reference country `{reference}` is not among the entries")]
    ReferenceMissing { dataset: String, reference: String },
    #[error(
        "dataset `{dataset}`: unit {found:?} for `{country}` conflicts with {expected:?}"
    )]
    UnitMismatch {
        dataset: String,
        country: String,
        expected: IndicatorUnit,
        found: IndicatorUnit,
    },
    #[error(
        "dataset `{dataset}`: `{country}` has non-positive value {value} in {year}; \
         ratios need positive values"
    )]
    NonPositiveValue {
        dataset: String,
        country: String,
        year: u16,
        value: f64,
    },
    #[error("no ranking direction is configured for dataset `{dataset}`")]
    MissingDirection { dataset: String },
    #[error("series `{label}` has {n} point(s); a trend needs at least 2")]
    TooFewPoints { label: String, n: usize },
}

/// A single dataset aligned across countries at one year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonFrame {
    pub dataset: String,
    pub year: u16,
    pub unit: IndicatorUnit,
    pub reference: String,
    /// `(country, value)` pairs sorted by country code.
    pub entries: Vec<(String, f64)>,
    /// Countries requested but absent from the dataset at the frame year.
    pub absent: Vec<String>,
}

impl ComparisonFrame {
    pub fn value_of(&self, country: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(c, _)| c == country)
            .map(|&(_, v)| v)
    }
}

/// Aligns one dataset across the selected countries at the latest year all
/// of them report.
///
/// `series` is the pool of available series (typically every country/unit
/// combination parsed from an indicator table); only those matching
/// `dataset` and `countries` participate. Every participating series must
/// agree on the unit. Countries with no series for the dataset are listed
/// in the frame's `absent` field and excluded from the alignment; it is an
/// error only when *no* requested country has the dataset. Countries
/// present in the pool are aligned on the latest year common to all of
/// them.
pub fn build_frame(
    series: &[IndicatorSeries],
    dataset: &str,
    countries: &[String],
    reference: &str,
) -> Result<ComparisonFrame, CompareError> {
    if series.is_empty() || countries.is_empty() {
        return Err(CompareError::EmptyInput);
    }
    let mut selected: Vec<&IndicatorSeries> = Vec::new();
    let mut absent: Vec<String> = Vec::new();
    for country in countries {
        match series
            .iter()
            .find(|s| s.dataset == dataset && &s.country == country)
        {
            Some(found) => selected.push(found),
            None => absent.push(country.clone()),
        }
    }
    if selected.is_empty() {
        return Err(CompareError::DatasetNotFound {
            dataset: dataset.to_string(),
        });
    }
    absent.sort();
    absent.dedup();
    let unit = selected[0].unit;
    for s in &selected {
        if s.unit != unit {
            return Err(CompareError::UnitMismatch {
                dataset: dataset.to_string(),
                country: s.country.clone(),
                expected: unit,
                found: s.unit,
            });
        }
    }

    // Latest year present in every selected series.
    let mut common: Option<BTreeSet<u16>> = None;
    for s in &selected {
        let years: BTreeSet<u16> = s.points.iter().map(|p| p.year).collect();
        common = Some(match common {
            None => years,
            Some(acc) => acc.intersection(&years).copied().collect(),
        });
    }
    let year = common
        .and_then(|set| set.into_iter().next_back())
        .ok_or_else(|| CompareError::NoCommonYear {
            dataset: dataset.to_string(),
        })?;

    let mut entries: Vec<(String, f64)> = selected
        .iter()
        .map(|s| {
            let value = s
                .points
                .iter()
                .find(|p| p.year == year)
                .map(|p| p.value)
                .expect("year chosen from the intersection");
            (s.country.clone(), value)
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));

    if !entries.iter().any(|(c, _)| c == reference) {
        return Err(CompareError::ReferenceMissing {
            dataset: dataset.to_string(),
            reference: reference.to_string(),
        });
    }
    Ok(ComparisonFrame {
        dataset: dataset.to_string(),
        year,
        unit,
        reference: reference.to_string(),
        entries,
        absent,
    })
}

/// A square matrix of pairwise ratios `value_i / value_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioMatrix {
    pub dataset: String,
    pub year: u16,
    pub countries: Vec<String>,
    /// `values[i][j] = value(countries[i]) / value(countries[j])`.
    pub values: Vec<Vec<f64>>,
}

impl RatioMatrix {
    pub fn ratio(&self, numerator: &str, denominator: &str) -> Option<f64> {
        let i = self.countries.iter().position(|c| c == numerator)?;
        let j = self.countries.iter().position(|c| c == denominator)?;
        Some(self.values[i][j])
    }
}

/// Pairwise ratio matrix over a frame's entries. Every value must be
/// strictly positive.
pub fn ratio_matrix(frame: &ComparisonFrame) -> Result<RatioMatrix, CompareError> {
    for (country, value) in &frame.entries {
        if !(*value > 0.0) {
            return Err(CompareError::NonPositiveValue {
                dataset: frame.dataset.clone(),
                country: country.clone(),
                year: frame.year,
                value: *value,
            });
        }
    }
    let countries: Vec<String> = frame.entries.iter().map(|(c, _)| c.clone()).collect();
    let values: Vec<Vec<f64>> = frame
        .entries
        .iter()
        .map(|&(_, vi)| frame.entries.iter().map(|&(_, vj)| vi / vj).collect())
        .collect();
    Ok(RatioMatrix {
        dataset: frame.dataset.clone(),
        year: frame.year,
        countries,
        values,
    })
}

/// Whether a high indicator value is unfavourable or favourable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Higher is worse (e.g. waste generated per unit of activity).
    HighIsBad,
    /// Higher is better (e.g. resource productivity).
    HighIsGood,
}

/// Built-in ranking directions for the bundled datasets.
pub fn default_directions() -> BTreeMap<String, Direction> {
    BTreeMap::from([
        ("env_wasgen".to_string(), Direction::HighIsBad),
        ("env_wastrt".to_string(), Direction::HighIsBad),
        ("env_ac_rp".to_string(), Direction::HighIsGood),
    ])
}

/// Ranks within one dataset: rank 1 is the most lagging country.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetRanking {
    pub dataset: String,
    pub year: u16,
    pub direction: Direction,
    /// `(country, value, rank)` sorted by rank then country. Competition
    /// ranking: ties share the smallest rank and the following rank skips.
    pub entries: Vec<(String, f64, usize)>,
}

/// One row of the composite ranking.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeEntry {
    pub country: String,
    /// Mean per-dataset laggard rank; smaller means more lagging overall.
    pub mean_rank: f64,
    /// How many frames the country appeared in.
    pub frames_counted: usize,
}

/// Laggard analysis across several frames.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaggardReport {
    pub rankings: Vec<DatasetRanking>,
    /// Sorted ascending by mean rank (most lagging first), ties broken by
    /// country code.
    pub composite: Vec<CompositeEntry>,
}

fn rank_frame(
    frame: &ComparisonFrame,
    direction: Direction,
) -> DatasetRanking {
    // "Badness" order: descending value when high is bad, ascending when
    // high is good, so the most lagging country always comes first.
    let mut ordered: Vec<(String, f64)> = frame.entries.clone();
    ordered.sort_by(|a, b| {
        let by_value = match direction {
            Direction::HighIsBad => b.1.partial_cmp(&a.1).expect("finite values"),
            Direction::HighIsGood => a.1.partial_cmp(&b.1).expect("finite values"),
        };
        by_value.then_with(|| a.0.cmp(&b.0))
    });
    let mut entries = Vec::with_capacity(ordered.len());
    let mut rank = 0usize;
    let mut previous: Option<f64> = None;
    for (position, (country, value)) in ordered.into_iter().enumerate() {
        if previous != Some(value) {
            rank = position + 1;
            previous = Some(value);
        }
        entries.push((country, value, rank));
    }
    DatasetRanking {
        dataset: frame.dataset.clone(),
        year: frame.year,
        direction,
        entries,
    }
}

/// Ranks every frame by its configured direction (rank 1 = most lagging)
/// and aggregates a composite ordering by mean rank.
pub fn laggard_report(
    frames: &[ComparisonFrame],
    directions: &BTreeMap<String, Direction>,
) -> Result<LaggardReport, CompareError> {
    if frames.is_empty() {
        return Err(CompareError::EmptyInput);
    }
    let mut rankings = Vec::with_capacity(frames.len());
    let mut rank_sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for frame in frames {
        let direction = directions.get(&frame.dataset).copied().ok_or_else(|| {
            CompareError::MissingDirection {
                dataset: frame.dataset.clone(),
            }
        })?;
        let ranking = rank_frame(frame, direction);
        for (country, _, rank) in &ranking.entries {
            let slot = rank_sums.entry(country.clone()).or_insert((0.0, 0));
            slot.0 += *rank as f64;
            slot.1 += 1;
        }
        rankings.push(ranking);
    }
    let mut composite: Vec<CompositeEntry> = rank_sums
        .into_iter()
        .map(|(country, (sum, count))| CompositeEntry {
            country,
            mean_rank: sum / count as f64,
            frames_counted: count,
        })
        .collect();
    composite.sort_by(|a, b| {
        a.mean_rank
            .partial_cmp(&b.mean_rank)
            .expect("finite ranks")
            .then_with(|| a.country.cmp(&b.country))
    });
    Ok(LaggardReport {
        rankings,
        composite,
    })
}

/// Start-to-end change summary of one indicator series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendSummary {
    pub label: String,
    pub start_year: u16,
    pub start_value: f64,
    pub end_year: u16,
    pub end_value: f64,
    pub absolute_change: f64,
    /// `(end - start) / start`; `None` when the start value is zero.
    pub relative_change: Option<f64>,
    /// True when the year-ordered values never decrease or never increase.
    pub monotone: bool,
}

/// Summarises a series' first-to-last change. The series needs at least
/// two points; they are evaluated in year order.
pub fn trend_summary(series: &IndicatorSeries) -> Result<TrendSummary, CompareError> {
    if series.points.len() < 2 {
        return Err(CompareError::TooFewPoints {
            label: format!("{}_{}", series.dataset, series.country),
            n: series.points.len(),
        });
    }
    let mut points = series.points.clone();
    points.sort_by_key(|p| p.year);
    let first = &points[0];
    let last = &points[points.len() - 1];
    let absolute_change = last.value - first.value;
    let relative_change = if first.value == 0.0 {
        None
    } else {
        Some(absolute_change / first.value)
    };
    let deltas: Vec<f64> = points.windows(2).map(|w| w[1].value - w[0].value).collect();
    let monotone =
        deltas.iter().all(|&d| d >= 0.0) || deltas.iter().all(|&d| d <= 0.0);
    Ok(TrendSummary {
        label: format!("{}_{}", series.dataset, series.country),
        start_year: first.year,
        start_value: first.value,
        end_year: last.year,
        end_value: last.value,
        absolute_change,
        relative_change,
        monotone,
    })
}
