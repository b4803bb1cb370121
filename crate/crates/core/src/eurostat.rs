//! Indicator retrieval with a local file cache.
//!
//! Datasets are fetched as CSV from a configurable HTTP endpoint and cached
//! under `{cache_dir}/{dataset}.csv`. With no endpoint configured, or in
//! offline mode, only the cache is consulted; a missing cache entry is a
//! hard error rather than a silent empty result.

use crate::registry::{parse_indicator_table, IndicatorSeries, RegistryError};
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

/// Datasets the client knows how to interpret: `(code, description, unit)`.
pub const KNOWN_DATASETS: [(&str, &str, &str); 3] = [
    (
        "env_wasgen",
        "waste generated per unit of economic activity",
        "kg_per_capita",
    ),
    (
        "env_wastrt",
        "waste sent to disposal per unit of economic activity",
        "kg_per_capita",
    ),
    (
        "env_ac_rp",
        "resource productivity",
        "eur_per_kg",
    ),
];

/// Whether the client recognises a dataset code.
pub fn is_known_dataset(code: &str) -> bool {
    KNOWN_DATASETS.iter().any(|(known, _, _)| *known == code)
}

/// Connection and cache settings for [`fetch_indicator`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchConfig {
    /// Base URL; dataset CSVs are expected at `{endpoint}/{dataset}.csv`.
    /// `None` means cache-only operation.
    pub endpoint: Option<String>,
    /// Directory holding `{dataset}.csv` cache files.
    pub cache_dir: PathBuf,
    /// When true, never touch the network even if an endpoint is set.
    pub offline: bool,
}

impl FetchConfig {
    /// Cache-only configuration rooted at `cache_dir`.
    pub fn offline_at(cache_dir: impl Into<PathBuf>) -> Self {
        FetchConfig {
            endpoint: None,
            cache_dir: cache_dir.into(),
            offline: true,
        }
    }

    /// The cache file path for a dataset.
    pub fn cache_path(&self, dataset: &str) -> PathBuf {
        self.cache_dir.join(format!("{dataset}.csv"))
    }
}

/// Errors raised while fetching indicator data.
#[derive(Debug)]
pub enum FetchError {
    /// The dataset code is not in [`KNOWN_DATASETS`].
    UnknownDataset { dataset: String },
    /// Offline (or endpoint-less) operation found no cache file.
    OfflineNoCache { dataset: String, path: PathBuf },
    /// Transport-level failure (DNS, refused connection, timeout).
    Network { dataset: String, detail: String },
    /// The endpoint answered with a non-success HTTP status.
    Http { dataset: String, status: u16 },
    /// Reading or writing the cache failed.
    CacheIo {
        path: PathBuf,
        source: std::io::Error,
    },
    /// The payload was not a valid indicator table.
    Payload(RegistryError),
    /// `year_range` was inverted.
    InvalidYearRange { start: u16, end: u16 },
}

impl fmt::Display for FetchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FetchError::UnknownDataset { dataset } => {
                write!(f, "unknown dataset `{dataset}`; known datasets: ")?;
                let codes: Vec<&str> = KNOWN_DATASETS.iter().map(|(c, _, _)| *c).collect();
                f.write_str(&codes.join(", "))
            }
            FetchError::OfflineNoCache { dataset, path } => write!(
                f,
                "offline and no cached copy of `{dataset}` at {}",
                path.display()
            ),
            FetchError::Network { dataset, detail } => {
                write!(f, "network failure fetching `{dataset}`: {detail}")
            }
            FetchError::Http { dataset, status } => {
                write!(f, "endpoint returned HTTP {status} for `{dataset}`")
            }
            FetchError::CacheIo { path, .. } => {
                write!(f, "cache i/o failure at {}", path.display())
            }
            FetchError::Payload(e) => write!(f, "invalid indicator payload: {e}"),
            FetchError::InvalidYearRange { start, end } => {
                write!(f, "invalid year range {start}..={end}")
            }
        }
    }
}

impl std::error::Error for FetchError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            FetchError::CacheIo { source, .. } => Some(source),
            FetchError::Payload(e) => Some(e),
            _ => None,
        }
    }
}

impl FetchError {
    /// True for transient failures where a retry could succeed, false for
    /// configuration and data errors where it cannot.
    pub fn is_retryable(&self) -> bool {
        matches!(self, FetchError::Network { .. })
            || matches!(
                self,
                FetchError::Http { status, .. } if *status >= 500 || *status == 429
            )
    }
}

fn read_cache(path: &Path) -> Result<Option<String>, FetchError> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(Some(text)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(FetchError::CacheIo {
            path: path.to_path_buf(),
            source,
        }),
    }
}

fn write_cache(path: &Path, body: &str) -> Result<(), FetchError> {
    let io_err = |source| FetchError::CacheIo {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    // Write-then-rename so a failed download never truncates a good cache.
    let tmp = path.with_extension("csv.tmp");
    fs::write(&tmp, body).map_err(|source| FetchError::CacheIo {
        path: tmp.clone(),
        source,
    })?;
    fs::rename(&tmp, path).map_err(io_err)
}

fn download(endpoint: &str, dataset: &str) -> Result<String, FetchError> {
    let url = format!("{}/{dataset}.csv", endpoint.trim_end_matches('/'));
    let response = ureq::get(&url).call().map_err(|error| match error {
        ureq::Error::StatusCode(status) => FetchError::Http {
            dataset: dataset.to_string(),
            status,
        },
        other => FetchError::Network {
            dataset: dataset.to_string(),
            detail: other.to_string(),
        },
    })?;
    let mut body = String::new();
    response
        .into_body()
        .into_reader()
        .read_to_string(&mut body)
        .map_err(|e| FetchError::Network {
            dataset: dataset.to_string(),
            detail: format!("reading response body: {e}"),
        })?;
    Ok(body)
}

/// Fetches one dataset, filtered to `countries` (all countries when empty)
/// and an optional inclusive year range.
///
/// Resolution order:
///
/// 1. unknown dataset codes fail immediately;
/// 2. offline mode or a missing endpoint serves the cache, and a missing
///    cache file is [`FetchError::OfflineNoCache`];
/// 3. otherwise the endpoint is queried, the raw payload is cached, and
///    parsing happens on the fetched bytes. Network failures surface as
///    retryable errors; they never fall back to a stale cache silently.
pub fn fetch_indicator(
    config: &FetchConfig,
    dataset: &str,
    countries: &[String],
    year_range: Option<(u16, u16)>,
) -> Result<Vec<IndicatorSeries>, FetchError> {
    if !is_known_dataset(dataset) {
        return Err(FetchError::UnknownDataset {
            dataset: dataset.to_string(),
        });
    }
    if let Some((start, end)) = year_range {
        if start > end {
            return Err(FetchError::InvalidYearRange { start, end });
        }
    }

    let cache_path = config.cache_path(dataset);
    let body = if config.offline || config.endpoint.is_none() {
        read_cache(&cache_path)?.ok_or_else(|| FetchError::OfflineNoCache {
            dataset: dataset.to_string(),
            path: cache_path.clone(),
        })?
    } else {
        let endpoint = config.endpoint.as_deref().expect("checked above");
        let fetched = download(endpoint, dataset)?;
        write_cache(&cache_path, &fetched)?;
        fetched
    };

    let all = parse_indicator_table(body.as_bytes()).map_err(FetchError::Payload)?;
    let mut filtered: Vec<IndicatorSeries> = all
        .into_iter()
        .filter(|s| s.dataset == dataset)
        .filter(|s| countries.is_empty() || countries.contains(&s.country))
        .map(|mut s| {
            if let Some((start, end)) = year_range {
                s.points.retain(|p| p.year >= start && p.year <= end);
            }
            s
        })
        .filter(|s| !s.points.is_empty())
        .collect();
    filtered.sort_by(|a, b| a.country.cmp(&b.country));
    Ok(filtered)
}
