use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{generate, SyntheticSpec};
use crate::domain::{distance, DistanceSpec};
use crate::error::{Result, SspError};
use crate::evaluation::rmae;
use crate::predictor::{
    predict_day, KernelKind, KernelSpec, PredictorConfig, ShapeNormalization, WeightingPool,
};
use crate::reference::{delta_schedule_check, DeltaRule, ReferenceConfig, ReferenceMode};

/// Retry budget per replication; also the stride between replication stream
/// families.
const RETRY_STRIDE: u32 = 64;

/// `constant * L^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSchedule {
    pub constant: f64,
    pub exponent: f64,
}

impl PowerSchedule {
    pub fn at(&self, l: usize) -> f64 {
        self.constant * (l as f64).powf(self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum WindowSchedule {
    /// `n_L = ceil(L^exponent)`.
    Power(f64),
    /// The whole history.
    Full,
}

impl WindowSchedule {
    pub fn at(&self, l: usize) -> usize {
        match *self {
            WindowSchedule::Power(e) => ((l as f64).powf(e).ceil() as usize).clamp(1, l.max(1)),
            WindowSchedule::Full => l.max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum DeltaSchedule {
    /// Closest candidate only.
    Argmin,
    Quantile(f64),
    /// Fixed threshold shrinking with `L`.
    Power(PowerSchedule),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub lengths: Vec<usize>,
    pub replications: usize,
    pub bandwidth: PowerSchedule,
    pub window: WindowSchedule,
    pub delta: DeltaSchedule,
    pub kernel: KernelKind,
    pub distance: DistanceSpec,
    pub pool: WeightingPool,
    pub max_retries: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lengths: vec![64, 128, 256, 512],
            replications: 50,
            bandwidth: PowerSchedule {
                constant: 1.0,
                exponent: -0.2,
            },
            window: WindowSchedule::Power(2.0 / 3.0),
            delta: DeltaSchedule::Power(PowerSchedule {
                constant: 6.0,
                exponent: -0.2,
            }),
            kernel: KernelKind::Gaussian,
            distance: DistanceSpec::default(),
            pool: WeightingPool::AllDays,
            max_retries: 5,
        }
    }
}

impl ExperimentConfig {
    /// Noiseless setting where the closest candidate matches the target
    /// exactly: whole-history window, argmin reference and a bandwidth far
    /// below the gap between distinct curves.
    pub fn exact_recovery(lengths: Vec<usize>, replications: usize) -> Self {
        Self {
            lengths,
            replications,
            bandwidth: PowerSchedule {
                constant: 1e-3,
                exponent: 0.0,
            },
            window: WindowSchedule::Full,
            delta: DeltaSchedule::Argmin,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SspError::InvalidConfig(m.into()));
        if self.lengths.is_empty() || self.lengths[0] == 0 {
            return bad("lengths must be positive and nonempty");
        }
        if self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return bad("lengths must be strictly increasing");
        }
        if self.replications == 0 {
            return bad("at least one replication is required");
        }
        if self.max_retries >= RETRY_STRIDE {
            return bad("too many retries");
        }
        for &l in &self.lengths {
            self.predictor_config(l).validate()?;
        }
        Ok(())
    }

    /// Predictor settings used at history length `l`.
    pub fn predictor_config(&self, l: usize) -> PredictorConfig {
        let (mode, delta_rule) = match self.delta {
            DeltaSchedule::Argmin => (ReferenceMode::Argmin, DeltaRule::Min),
            DeltaSchedule::Quantile(q) => (ReferenceMode::Threshold, DeltaRule::Quantile(q)),
            DeltaSchedule::Power(s) => (ReferenceMode::Threshold, DeltaRule::Fixed(s.at(l))),
        };
        PredictorConfig {
            reference: ReferenceConfig {
                mode,
                delta_rule,
                ..ReferenceConfig::default().with_uniform_window(self.window.at(l))
            },
            kernel: KernelSpec {
                kind: self.kernel,
                bandwidth: self.bandwidth.at(l),
            },
            distance: self.distance.clone(),
            normalization: ShapeNormalization::None,
            pool: self.pool,
            forecast_mask: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub replication: usize,
    /// Distance from the prediction to `f_m(T_{L+1})`.
    pub err_pred: f64,
    /// Distance from the reference segment to `f_m(T_{L+1})`.
    pub err_ref: f64,
    /// Distance from the prediction to the reference segment.
    pub err_pred_ref: f64,
    pub h: f64,
    #[serde(rename = "n_L")]
    pub n_l: usize,
    pub c_star_size: usize,
    #[serde(skip)]
    pub rmae_pred: f64,
    #[serde(skip)]
    pub attempts: u32,
}

impl ExperimentRow {
    /// `|err_pred - err_ref| <= err_pred_ref`, up to the rounding of the three
    /// distances.
    pub fn coupling_holds(&self) -> bool {
        let slack = 4.0 * f64::EPSILON * (self.err_pred + self.err_ref + self.err_pred_ref);
        (self.err_pred - self.err_ref).abs() <= self.err_pred_ref + slack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthSummary {
    #[serde(rename = "L")]
    pub l: usize,
    pub mean_err_pred: f64,
    pub sd_err_pred: f64,
    pub median_err_pred: f64,
    pub mean_err_ref: f64,
    pub mean_err_pred_ref: f64,
    pub mean_c_star_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
    pub summary: Vec<LengthSummary>,
}

fn retryable(e: &SspError) -> bool {
    matches!(
        e,
        SspError::NoCandidates { .. }
            | SspError::NoTemperatureCoverage
            | SspError::InsufficientHistory(_)
    )
}

fn run_one(
    template: &SyntheticSpec,
    cfg: &ExperimentConfig,
    l: usize,
    rep: usize,
) -> Result<ExperimentRow> {
    let pcfg = cfg.predictor_config(l);
    let mut last_error = String::new();
    for attempt in 0..=cfg.max_retries {
        let target_date = template.start + chrono::Duration::days((rep % 7) as i64);
        let spec = SyntheticSpec {
            days: l + 1,
            replication: rep as u32 * RETRY_STRIDE + attempt,
            start: target_date - chrono::Duration::days(l as i64),
            ..template.clone()
        };
        let data = generate(&spec)?;
        let target = &data.history.records()[l];
        let truth = &data.truth[l].clean;
        let history = data.history.prefix(l);
        let forecast = target
            .temperature
            .as_ref()
            .expect("generated days carry temperatures")
            .restrict(&pcfg.stand_in_mask(target.load.grid()))?;

        match predict_day(&history, &target.meta, &forecast, None, &pcfg) {
            Ok(p) => {
                let diag = delta_schedule_check(
                    l,
                    pcfg.reference.window(target.meta.group),
                    p.reference.delta,
                    p.reference.c_star.len(),
                );
                if diag.degenerate {
                    tracing::debug!(l, rep, "degenerate reference threshold {:?}", diag);
                }
                let shape = p.shape.values();
                return Ok(ExperimentRow {
                    l,
                    replication: rep,
                    err_pred: distance(shape, truth, &cfg.distance)?,
                    err_ref: distance(&p.reference.reference, truth, &cfg.distance)?,
                    err_pred_ref: distance(shape, &p.reference.reference, &cfg.distance)?,
                    h: pcfg.kernel.bandwidth,
                    n_l: diag.n_l,
                    c_star_size: diag.c_star_size,
                    rmae_pred: rmae(shape, truth)?,
                    attempts: attempt + 1,
                });
            }
            Err(e) if retryable(&e) => {
                tracing::warn!(l, rep, attempt, "degenerate candidate set, retrying: {e}");
                last_error = e.to_string();
            }
            Err(e) => return Err(e),
        }
    }
    Err(SspError::RetriesExhausted {
        attempts: cfg.max_retries as usize + 1,
        reason: last_error,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn summarize(l: usize, rows: &[ExperimentRow]) -> LengthSummary {
    let err: Vec<f64> = rows.iter().map(|r| r.err_pred).collect();
    let m = mean(&err);
    let sd = if err.len() > 1 {
        (err.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (err.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = err.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    LengthSummary {
        l,
        mean_err_pred: m,
        sd_err_pred: sd,
        median_err_pred: median,
        mean_err_ref: mean(&rows.iter().map(|r| r.err_ref).collect::<Vec<_>>()),
        mean_err_pred_ref: mean(&rows.iter().map(|r| r.err_pred_ref).collect::<Vec<_>>()),
        mean_c_star_size: mean(
            &rows
                .iter()
                .map(|r| r.c_star_size as f64)
                .collect::<Vec<_>>(),
        ),
    }
}

/// For every length `L` and replication, predicts day `L + 1` from the first
/// `L` generated days, using its exact temperatures as the forecast, and
/// measures the prediction and the reference segment against `f_m(T_{L+1})`.
///
/// The target day of replication `r` falls `r mod 7` days after
/// `template.start`, so every length sees the same mix of target weekdays.
///
/// A replication whose candidate set comes out empty is regenerated from a
/// fresh stream family, at most `max_retries` times.
pub fn consistency_experiment(
    template: &SyntheticSpec,
    cfg: &ExperimentConfig,
) -> Result<ExperimentTable> {
    cfg.validate()?;
    template.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .lengths
        .iter()
        .flat_map(|&l| (0..cfg.replications).map(move |r| (l, r)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(l, rep)| run_one(template, cfg, l, rep))
        .collect::<Result<Vec<_>>>()?;
    let summary = rows
        .chunks(cfg.replications)
        .zip(&cfg.lengths)
        .map(|(chunk, &l)| summarize(l, chunk))
        .collect();
    Ok(ExperimentTable { rows, summary })
}

/// `L,replication,err_pred,err_ref,err_pred_ref,h,n_L,c_star_size`
pub fn experiment_csv(rows: &[ExperimentRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "L",
        "replication",
        "err_pred",
        "err_ref",
        "err_pred_ref",
        "h",
        "n_L",
        "c_star_size",
    ])
    .expect("writing to memory");
    for r in rows {
        w.write_record([
            r.l.to_string(),
            r.replication.to_string(),
            r.err_pred.to_string(),
            r.err_ref.to_string(),
            r.err_pred_ref.to_string(),
            r.h.to_string(),
            r.n_l.to_string(),
            r.c_star_size.to_string(),
        ])
        .expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}
