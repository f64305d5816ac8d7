//! Candidate days and the reference segment.
//!
//! The candidate set is the target's day group within the last `n_L` days.
//! Among the candidates, those whose temperature curve lies within `delta` of
//! the forecast (compared only on the forecast's observed points) are averaged
//! into the reference segment. In argmin mode `delta` is the minimum distance,
//! so the reference is the closest day, or the mean of several tied days.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::domain::{convex_combination, distance, DistanceSpec, TemperatureSegment};
use crate::error::{Result, SspError};
use crate::ingestion::{DailyRecord, DayGroup, HistoryWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    #[default]
    Argmin,
    Threshold,
}

/// How the closeness threshold `delta` is set from the candidate distances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum DeltaRule {
    /// `delta` = smallest candidate distance.
    #[default]
    Min,
    /// `delta` = nearest-rank `q`-quantile of the candidate distances.
    Quantile(f64),
    /// Fixed `delta`, raised to the smallest distance when below it so the
    /// selection is never empty.
    Fixed(f64),
}

impl DeltaRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DeltaRule::Min => Ok(()),
            DeltaRule::Quantile(q) if q > 0.0 && q <= 1.0 => Ok(()),
            DeltaRule::Fixed(v) if v >= 0.0 && v.is_finite() => Ok(()),
            other => Err(SspError::InvalidConfig(format!(
                "invalid delta rule {other:?}"
            ))),
        }
    }

    fn delta(&self, sorted: &[f64]) -> f64 {
        let min = sorted[0];
        match *self {
            DeltaRule::Min => min,
            DeltaRule::Quantile(q) => {
                let rank = (q * sorted.len() as f64).ceil() as usize;
                sorted[rank.clamp(1, sorted.len()) - 1]
            }
            DeltaRule::Fixed(v) => v.max(min),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    pub n_l_by_group: BTreeMap<DayGroup, usize>,
    pub mode: ReferenceMode,
    pub delta_rule: DeltaRule,
    /// Distance between temperature curves. Without an explicit subset the
    /// forecast's mask is used.
    pub temp_distance: DistanceSpec,
    /// Group searched instead when a holiday has too few holiday candidates.
    pub holiday_fallback: Option<DayGroup>,
    pub min_holiday_candidates: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        let n_l_by_group = DayGroup::ALL
            .iter()
            .map(|&g| (g, if g == DayGroup::G1 { 14 } else { 28 }))
            .collect();
        Self {
            n_l_by_group,
            mode: ReferenceMode::Argmin,
            delta_rule: DeltaRule::Min,
            temp_distance: DistanceSpec::default(),
            holiday_fallback: Some(DayGroup::G4),
            min_holiday_candidates: 2,
        }
    }
}

impl ReferenceConfig {
    /// Same window length for every group.
    pub fn with_uniform_window(mut self, n_l: usize) -> Self {
        for v in self.n_l_by_group.values_mut() {
            *v = n_l;
        }
        self
    }

    pub fn window(&self, group: DayGroup) -> usize {
        self.n_l_by_group.get(&group).copied().unwrap_or(28)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((g, _)) = self.n_l_by_group.iter().find(|(_, &n)| n == 0) {
            return Err(SspError::InvalidConfig(format!(
                "n_L for {g} must be at least 1"
            )));
        }
        self.delta_rule.validate()
    }
}

/// A candidate day as seen by the reference selection.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub date: NaiveDate,
    pub shape: &'a [f64],
    pub temperature: Option<&'a TemperatureSegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceResult {
    /// Coordinate-wise mean of the selected shapes.
    pub reference: Vec<f64>,
    pub c_star: Vec<NaiveDate>,
    pub temp_distances: BTreeMap<NaiveDate, f64>,
    pub delta: f64,
    /// Candidates skipped for lack of temperature data on the mask.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<NaiveDate>,
}

/// Indices of the records of `group` among the last `n_l` records, oldest first.
pub fn candidate_indices(
    history: &HistoryWindow,
    group: DayGroup,
    n_l: usize,
) -> Result<Vec<usize>> {
    if history.is_empty() {
        return Err(SspError::InsufficientHistory("empty history".into()));
    }
    let records = history.records();
    let start = records.len().saturating_sub(n_l);
    let idx: Vec<usize> = (start..records.len())
        .filter(|&i| records[i].meta.group == group)
        .collect();
    if idx.is_empty() {
        return Err(SspError::NoCandidates {
            group: group.to_string(),
            window: n_l,
        });
    }
    Ok(idx)
}

pub fn candidate_set(
    history: &HistoryWindow,
    group: DayGroup,
    n_l: usize,
) -> Result<Vec<&DailyRecord>> {
    let records = history.records();
    Ok(candidate_indices(history, group, n_l)?
        .into_iter()
        .map(|i| &records[i])
        .collect())
}

/// Candidate indices for a target group, applying the holiday fallback.
pub fn resolve_candidates(
    history: &HistoryWindow,
    group: DayGroup,
    cfg: &ReferenceConfig,
) -> Result<Vec<usize>> {
    let own = candidate_indices(history, group, cfg.window(group));
    match (group, cfg.holiday_fallback) {
        (DayGroup::Holiday, Some(fallback)) => {
            let enough = own
                .as_ref()
                .is_ok_and(|c| c.len() >= cfg.min_holiday_candidates);
            if enough {
                own
            } else {
                tracing::warn!("too few holiday candidates, searching {fallback} instead");
                candidate_indices(history, fallback, cfg.window(fallback))
            }
        }
        _ => own,
    }
}

/// Builds the reference segment from candidates and a temperature forecast.
pub fn select_reference(
    candidates: &[Candidate<'_>],
    forecast: &TemperatureSegment,
    cfg: &ReferenceConfig,
) -> Result<ReferenceResult> {
    if candidates.is_empty() {
        return Err(SspError::NoCandidates {
            group: "target".into(),
            window: 0,
        });
    }
    cfg.delta_rule.validate()?;
    let spec = match &cfg.temp_distance.point_subset {
        Some(subset) => {
            if let Some(&missing) = subset.iter().find(|i| !forecast.covers(&[**i])) {
                return Err(SspError::ForecastMaskMismatch(missing));
            }
            cfg.temp_distance.clone()
        }
        None => DistanceSpec::restricted(cfg.temp_distance.kind, forecast.mask().to_vec()),
    };
    let mask = spec.point_subset.as_deref().unwrap_or_default();

    let mut usable = Vec::with_capacity(candidates.len());
    let mut dropped = Vec::new();
    for c in candidates {
        match c.temperature.filter(|t| t.covers(mask)) {
            Some(t) => {
                let d = distance(t.values(), forecast.values(), &spec)?;
                usable.push((c, d));
            }
            None => {
                tracing::warn!(
                    "candidate {} lacks temperature on the forecast mask",
                    c.date
                );
                dropped.push(c.date);
            }
        }
    }
    if usable.is_empty() {
        return Err(SspError::NoTemperatureCoverage);
    }

    let mut sorted: Vec<f64> = usable.iter().map(|(_, d)| *d).collect();
    sorted.sort_by(f64::total_cmp);
    let delta = match cfg.mode {
        ReferenceMode::Argmin => sorted[0],
        ReferenceMode::Threshold => cfg.delta_rule.delta(&sorted),
    };

    let selected: Vec<&Candidate<'_>> = usable
        .iter()
        .filter(|(_, d)| *d <= delta)
        .map(|(c, _)| *c)
        .collect();
    let rows: Vec<&[f64]> = selected.iter().map(|c| c.shape).collect();
    let weights = vec![1.0 / rows.len() as f64; rows.len()];
    let reference = convex_combination(&rows, &weights)?;

    Ok(ReferenceResult {
        reference,
        c_star: selected.iter().map(|c| c.date).collect(),
        temp_distances: usable.iter().map(|(c, d)| (c.date, *d)).collect(),
        delta,
        dropped,
    })
}

/// Quantities tracked by the consistency experiment for the threshold schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleDiagnostic {
    pub history_len: usize,
    pub n_l: usize,
    pub delta: f64,
    pub c_star_size: usize,
    /// `|C*| * delta`, which should grow with the history length.
    pub effective_count: f64,
    pub degenerate: bool,
}

pub fn delta_schedule_check(
    history_len: usize,
    n_l: usize,
    delta: f64,
    c_star_size: usize,
) -> ScheduleDiagnostic {
    ScheduleDiagnostic {
        history_len,
        n_l,
        delta,
        c_star_size,
        effective_count: c_star_size as f64 * delta,
        degenerate: c_star_size == 0 || delta <= 0.0,
    }
}
