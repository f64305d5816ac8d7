//! Bandwidth choice by rolling one-day-ahead empirical risk.

use rayon::prelude::*;
use serde::Serialize;

use super::{history_shapes, prepare_day, weights_or_nearest, PredictorConfig, ShapeNormalization};
use crate::domain::{convex_combination, distance, unscale, DistanceSpec, LoadSegment};
use crate::error::{Result, SspError};
use crate::evaluation::rmae;
use crate::ingestion::HistoryWindow;

/// Fewest days of history in front of the first validation day.
pub const MIN_TRAINING_DAYS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandwidthRisk {
    pub bandwidth: f64,
    pub mean_rmae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthSelection {
    pub chosen: f64,
    /// One row per grid value, in grid order.
    pub risks: Vec<BandwidthRisk>,
}

/// Median distance over all pairs of segments.
pub fn median_pairwise_distance(shapes: &[Vec<f64>], dist: &DistanceSpec) -> Result<f64> {
    let mut d = Vec::with_capacity(shapes.len() * shapes.len().saturating_sub(1) / 2);
    for (i, a) in shapes.iter().enumerate() {
        for b in &shapes[i + 1..] {
            d.push(distance(a, b, dist)?);
        }
    }
    if d.is_empty() {
        return Err(SspError::InsufficientHistory(
            "need two segments for a median distance".into(),
        ));
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    Ok(if n % 2 == 1 {
        d[n / 2]
    } else {
        0.5 * (d[n / 2 - 1] + d[n / 2])
    })
}

/// 25 log-spaced values from `0.01 * scale` to `10 * scale`.
pub fn default_bandwidth_grid(scale: f64) -> Result<Vec<f64>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(SspError::NonPositiveScale(scale));
    }
    let (lo, hi) = (0.01f64.ln(), 10f64.ln());
    Ok((0..25)
        .map(|k| scale * (lo + (hi - lo) * k as f64 / 24.0).exp())
        .collect())
}

/// Mean RMAE of one-day-ahead predictions over the last `validation_days`
/// days, for every bandwidth in `grid`; the smallest risk wins and ties go to
/// the smaller bandwidth.
///
/// Each validation day is predicted from strictly earlier days, with its own
/// realized temperatures (on the stand-in mask) as the forecast and its own
/// realized maximum as the next-day maximum.
pub fn select_bandwidth(
    history: &HistoryWindow,
    cfg: &PredictorConfig,
    grid: &[f64],
    validation_days: usize,
) -> Result<BandwidthSelection> {
    if grid.is_empty() {
        return Err(SspError::InvalidConfig("empty bandwidth grid".into()));
    }
    if validation_days == 0 {
        return Err(SspError::InvalidConfig(
            "validation_days must be positive".into(),
        ));
    }
    for &h in grid {
        cfg.clone().with_bandwidth(h).validate()?;
    }
    let len = history.len();
    if len <= validation_days + MIN_TRAINING_DAYS {
        return Err(SspError::InsufficientHistory(format!(
            "{len} days cannot hold {validation_days} validation days after {MIN_TRAINING_DAYS} training days"
        )));
    }

    let shapes = history_shapes(history, cfg.normalization)?;
    let records = history.records();
    let mask = cfg.stand_in_mask(records[0].load.grid());
    let first = len - validation_days;

    let prepared = (first..len)
        .into_par_iter()
        .map(|idx| {
            let rec = &records[idx];
            let temp = rec.temperature.as_ref().ok_or_else(|| {
                SspError::InsufficientHistory(format!("no temperatures on {}", rec.date()))
            })?;
            let forecast = temp.restrict(&mask)?;
            let prior = history.prefix(idx);
            let day = prepare_day(&prior, &shapes[..idx], &rec.meta, &forecast, cfg)?;
            Ok((idx, day))
        })
        .collect::<Result<Vec<_>>>()?;

    let risks = grid
        .par_iter()
        .map(|&h| {
            let kernel = cfg.clone().with_bandwidth(h).kernel;
            let mut total = 0.0;
            for (idx, day) in &prepared {
                let actual = &records[*idx].load;
                let (w, _) = weights_or_nearest(&day.distances, &kernel)?;
                let rows: Vec<&[f64]> = day.pool.iter().map(|&i| shapes[i].as_slice()).collect();
                let values = convex_combination(&rows, w.as_slice())?;
                let pred = LoadSegment::new(actual.grid().clone(), values)?;
                let pred = match cfg.normalization {
                    ShapeNormalization::DailyMax => unscale(&pred, actual.max())?,
                    ShapeNormalization::None => pred,
                };
                total += rmae(pred.values(), actual.values())?;
            }
            Ok(BandwidthRisk {
                bandwidth: h,
                mean_rmae: total / prepared.len() as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let best = risks
        .iter()
        .min_by(|a, b| {
            a.mean_rmae
                .total_cmp(&b.mean_rmae)
                .then(a.bandwidth.total_cmp(&b.bandwidth))
        })
        .expect("grid is nonempty");
    Ok(BandwidthSelection {
        chosen: best.bandwidth,
        risks,
    })
}
