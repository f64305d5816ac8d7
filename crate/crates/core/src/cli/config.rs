//! TOML configuration file. Every key is optional and every key can be
//! overridden by a command-line flag.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Deserialize;

use crate::domain::DistanceKind;
use crate::error::{Result, SspError};
use crate::ingestion::DayGroup;
use crate::predictor::{KernelKind, ShapeNormalization, WeightingPool};
use crate::reference::{DeltaRule, ReferenceMode};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub ingestion: IngestionSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub predictor: PredictorSection,
    #[serde(default)]
    pub backtest: BacktestSection,
    #[serde(default)]
    pub simulate: SimulateSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub load: Option<PathBuf>,
    #[serde(default)]
    pub temperature: Vec<PathBuf>,
    pub holidays: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestionSection {
    pub max_gap: Option<usize>,
    pub max_rejected: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub mode: Option<ReferenceMode>,
    /// `min`, `quantile:<q>` or `fixed:<value>`.
    pub delta_rule: Option<String>,
    /// Window length for every group.
    pub window: Option<usize>,
    /// Per-group window lengths, keyed `G1` to `G4` and `HOLIDAY`.
    #[serde(default)]
    pub windows: BTreeMap<DayGroup, usize>,
    pub temp_distance: Option<DistanceKind>,
    /// Group searched when a holiday has too few holiday candidates, or
    /// `none`.
    pub holiday_fallback: Option<String>,
    pub min_holiday_candidates: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorSection {
    pub kernel: Option<KernelKind>,
    /// A positive number, or `auto` for selection by empirical risk.
    pub bandwidth: Option<BandwidthSetting>,
    pub validation_days: Option<usize>,
    pub distance: Option<DistanceKind>,
    pub normalization: Option<ShapeNormalization>,
    pub pool: Option<WeightingPool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestSection {
    pub methods: Option<Vec<String>>,
    pub sample: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub lengths: Option<Vec<usize>>,
    pub replications: Option<usize>,
    pub sigma: Option<f64>,
    pub jitter: Option<f64>,
    pub seed: Option<u64>,
    pub bandwidth_constant: Option<f64>,
    pub delta_constant: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum BandwidthSetting {
    Fixed(f64),
    #[serde(deserialize_with = "auto")]
    Auto,
}

fn auto<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<(), D::Error> {
    let s = String::deserialize(d)?;
    if s == "auto" {
        Ok(())
    } else {
        Err(serde::de::Error::custom(format!(
            "expected a number or \"auto\", got \"{s}\""
        )))
    }
}

impl std::str::FromStr for BandwidthSetting {
    type Err = SspError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        s.parse::<f64>().map(Self::Fixed).map_err(|_| {
            SspError::InvalidConfig(format!("bandwidth must be a number or 'auto', got '{s}'"))
        })
    }
}

pub fn parse_delta_rule(s: &str) -> Result<DeltaRule> {
    let bad = || SspError::InvalidConfig(format!("invalid delta rule '{s}'"));
    let rule = match s.split_once(':') {
        None if s == "min" => DeltaRule::Min,
        Some(("quantile", q)) => DeltaRule::Quantile(q.parse().map_err(|_| bad())?),
        Some(("fixed", v)) => DeltaRule::Fixed(v.parse().map_err(|_| bad())?),
        _ => return Err(bad()),
    };
    rule.validate()?;
    Ok(rule)
}

pub fn parse_fallback(s: &str) -> Result<Option<DayGroup>> {
    if s == "none" {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

/// `G1=14` sets one group, a bare number sets every group.
pub fn parse_window(s: &str) -> Result<(Option<DayGroup>, usize)> {
    let bad = || SspError::InvalidConfig(format!("invalid window '{s}'"));
    match s.split_once('=') {
        Some((g, n)) => Ok((Some(g.parse()?), n.parse().map_err(|_| bad())?)),
        None => Ok((None, s.parse().map_err(|_| bad())?)),
    }
}

impl AppConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SspError::InvalidConfig(e.to_string()))
    }
}
