//! The similar-shape predictor.
//!
//! A prediction is a kernel-weighted average of past daily shapes, weighted by
//! closeness to a reference segment built from recent same-group days with
//! temperatures close to the forecast. Shapes are normally the days divided by
//! their maximum; the predicted shape is multiplied back by a provided
//! next-day maximum.

mod bandwidth;
mod kernel;
mod weights;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use bandwidth::{
    default_bandwidth_grid, median_pairwise_distance, select_bandwidth, BandwidthRisk,
    BandwidthSelection, MIN_TRAINING_DAYS,
};
pub use kernel::{KernelKind, KernelSpec};
pub use weights::{
    compute_weights, nearest_weights, predict_shape, segment_distances, weights_from_distances,
    weights_or_nearest, WeightVector,
};

use crate::domain::{
    distance, rescale_day, unscale, DistanceSpec, LoadSegment, TemperatureSegment, TimeGrid,
};
use crate::error::{Result, SspError};
use crate::ingestion::{default_forecast_mask, CalendarMeta, DailyRecord, DayGroup, HistoryWindow};
use crate::reference::{
    resolve_candidates, select_reference, Candidate, ReferenceConfig, ReferenceResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeNormalization {
    /// Divide each day by its maximum.
    #[default]
    DailyMax,
    /// Use the segments as they are.
    None,
}

/// Which past days enter the weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingPool {
    #[default]
    AllDays,
    SameGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub reference: ReferenceConfig,
    pub kernel: KernelSpec,
    /// Distance between load shapes.
    pub distance: DistanceSpec,
    pub normalization: ShapeNormalization,
    pub pool: WeightingPool,
    /// Grid points of the temperature forecast used when realized temperatures
    /// stand in for forecasts. Defaults to 08:00, 12:00, 16:00 and 20:00.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forecast_mask: Option<Vec<usize>>,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            reference: ReferenceConfig::default(),
            kernel: KernelSpec {
                kind: KernelKind::Gaussian,
                bandwidth: 0.1,
            },
            distance: DistanceSpec::default(),
            normalization: ShapeNormalization::DailyMax,
            pool: WeightingPool::AllDays,
            forecast_mask: None,
        }
    }
}

impl PredictorConfig {
    pub fn with_bandwidth(mut self, h: f64) -> Self {
        self.kernel.bandwidth = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.reference.validate()
    }

    /// Mask used for realized-temperature forecast stand-ins.
    pub fn stand_in_mask(&self, grid: &TimeGrid) -> Vec<usize> {
        match &self.forecast_mask {
            Some(m) => m.clone(),
            None => default_forecast_mask(grid).unwrap_or_else(|_| (0..grid.points()).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub date: NaiveDate,
    pub group: DayGroup,
    /// Weighted average of shapes (megawatts when normalization is off).
    pub shape: LoadSegment,
    /// Shape times the provided next-day maximum.
    pub scaled: Option<LoadSegment>,
    pub weights: WeightVector,
    /// Dates aligned with `weights`.
    pub weight_dates: Vec<NaiveDate>,
    pub reference: ReferenceResult,
    pub used_nearest_fallback: bool,
    pub config: PredictorConfig,
}

impl Prediction {
    /// Prediction on the load scale: the scaled curve when present.
    pub fn load_values(&self) -> &[f64] {
        self.scaled.as_ref().unwrap_or(&self.shape).values()
    }

    /// Distance from the prediction to its reference segment.
    pub fn distance_to_reference(&self, dist: &DistanceSpec) -> Result<f64> {
        distance(self.shape.values(), &self.reference.reference, dist)
    }
}

/// Per-day shapes under a normalization, in history order.
pub fn history_shapes(
    history: &HistoryWindow,
    normalization: ShapeNormalization,
) -> Result<Vec<Vec<f64>>> {
    history
        .records()
        .iter()
        .map(|r| day_shape(r, normalization))
        .collect()
}

pub(crate) fn day_shape(
    record: &DailyRecord,
    normalization: ShapeNormalization,
) -> Result<Vec<f64>> {
    match normalization {
        ShapeNormalization::DailyMax => Ok(rescale_day(&record.load)?.into_values()),
        ShapeNormalization::None => Ok(record.load.values().to_vec()),
    }
}

/// Everything that does not depend on the bandwidth.
pub(crate) struct PreparedDay {
    pub reference: ReferenceResult,
    pub pool: Vec<usize>,
    pub distances: Vec<f64>,
}

pub(crate) fn prepare_day(
    history: &HistoryWindow,
    shapes: &[Vec<f64>],
    target: &CalendarMeta,
    forecast: &TemperatureSegment,
    cfg: &PredictorConfig,
) -> Result<PreparedDay> {
    let records = history.records();
    let cand_idx = resolve_candidates(history, target.group, &cfg.reference)?;
    let candidates: Vec<Candidate<'_>> = cand_idx
        .iter()
        .map(|&i| Candidate {
            date: records[i].date(),
            shape: &shapes[i],
            temperature: records[i].temperature.as_ref(),
        })
        .collect();
    let reference = select_reference(&candidates, forecast, &cfg.reference)?;

    let pool: Vec<usize> = match cfg.pool {
        WeightingPool::AllDays => (0..records.len()).collect(),
        WeightingPool::SameGroup => {
            let group = records[cand_idx[0]].meta.group;
            (0..records.len())
                .filter(|&i| records[i].meta.group == group)
                .collect()
        }
    };
    cfg.distance.validate(reference.reference.len())?;
    let distances = pool
        .iter()
        .map(|&i| distance(&shapes[i], &reference.reference, &cfg.distance))
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedDay {
        reference,
        pool,
        distances,
    })
}

/// One-day-ahead prediction for `target` from a history ending before it.
pub fn predict_day(
    history: &HistoryWindow,
    target: &CalendarMeta,
    forecast: &TemperatureSegment,
    next_day_max: Option<f64>,
    cfg: &PredictorConfig,
) -> Result<Prediction> {
    let shapes = history_shapes(history, cfg.normalization)?;
    predict_with_shapes(history, &shapes, target, forecast, next_day_max, cfg)
}

pub(crate) fn predict_with_shapes(
    history: &HistoryWindow,
    shapes: &[Vec<f64>],
    target: &CalendarMeta,
    forecast: &TemperatureSegment,
    next_day_max: Option<f64>,
    cfg: &PredictorConfig,
) -> Result<Prediction> {
    cfg.validate()?;
    let last = history
        .last_date()
        .ok_or_else(|| SspError::InsufficientHistory("empty history".into()))?;
    if last >= target.date {
        return Err(SspError::InsufficientHistory(format!(
            "history must end before {}, but runs to {last}",
            target.date
        )));
    }
    let grid = history.records()[0].load.grid().clone();
    if forecast.grid().as_ref() != grid.as_ref() {
        return Err(SspError::InvalidGrid(
            "forecast grid differs from history grid".into(),
        ));
    }
    if next_day_max.is_some() && cfg.normalization == ShapeNormalization::None {
        return Err(SspError::InvalidConfig(
            "a next-day maximum needs daily-max normalization".into(),
        ));
    }

    let prepared = prepare_day(history, shapes, target, forecast, cfg)?;
    let (weights, used_nearest_fallback) = weights_or_nearest(&prepared.distances, &cfg.kernel)?;
    let rows: Vec<&[f64]> = prepared
        .pool
        .iter()
        .map(|&i| shapes[i].as_slice())
        .collect();
    let values = predict_shape(&rows, &weights)?;
    let shape = LoadSegment::new(grid, values)?;
    let scaled = next_day_max.map(|m| unscale(&shape, m)).transpose()?;
    let records = history.records();

    Ok(Prediction {
        date: target.date,
        group: target.group,
        shape,
        scaled,
        weights,
        weight_dates: prepared.pool.iter().map(|&i| records[i].date()).collect(),
        reference: prepared.reference,
        used_nearest_fallback,
        config: cfg.clone(),
    })
}
