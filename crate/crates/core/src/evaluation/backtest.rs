use chrono::NaiveDate;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{score_values, DayMetrics};
use crate::baselines::conditional_kernel;
use crate::domain::DistanceSpec;
use crate::error::{Result, SspError};
use crate::ingestion::{DayGroup, HistoryWindow};
use crate::predictor::{
    history_shapes, predict_with_shapes, KernelSpec, PredictorConfig, ShapeNormalization,
};

/// Label for backtests that feed realized temperatures and the realized daily
/// maximum in place of forecasts.
pub const PERFECT_TEMPERATURE_PROTOCOL: &str = "perfect-temperature";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ssp,
    Persistence,
    ConditionalKernel,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ssp, Method::Persistence, Method::ConditionalKernel];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ssp => "ssp",
            Method::Persistence => "persistence",
            Method::ConditionalKernel => "conditional-kernel",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = SspError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| SspError::InvalidConfig(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub predictor: PredictorConfig,
    /// Kernel and distance of the conditional-kernel baseline.
    pub baseline_kernel: KernelSpec,
    pub baseline_distance: DistanceSpec,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        let predictor = PredictorConfig::default();
        Self {
            baseline_kernel: predictor.kernel,
            baseline_distance: predictor.distance.clone(),
            predictor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayScore {
    pub date: NaiveDate,
    pub method: Method,
    pub rmae: f64,
    pub maxdiff: f64,
    pub mindiff: f64,
}

impl DayScore {
    fn new(date: NaiveDate, method: Method, m: DayMetrics) -> Self {
        Self {
            date,
            method,
            rmae: m.rmae,
            maxdiff: m.maxdiff,
            mindiff: m.mindiff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub days: usize,
    pub mean_rmae: f64,
    pub median_rmae: f64,
    /// Dates on which the method had the lowest RMAE; tied methods all win.
    pub wins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateFailure {
    pub date: NaiveDate,
    pub method: Method,
    pub error: String,
}

/// Realized and predicted curves of one backtest day, on the load scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayCurves {
    pub date: NaiveDate,
    pub actual: Vec<f64>,
    pub predictions: Vec<(Method, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub protocol: &'static str,
    pub methods: Vec<Method>,
    pub scores: Vec<DayScore>,
    pub summary: Vec<MethodSummary>,
    pub failures: Vec<DateFailure>,
    pub config: BacktestConfig,
    #[serde(skip)]
    pub curves: Vec<DayCurves>,
}

impl BacktestReport {
    pub fn summary_for(&self, method: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == method)
    }
}

/// Index of the most recent day of `group`, or of the holiday fallback group
/// when a holiday has no predecessor.
fn persistence_source(
    history: &HistoryWindow,
    group: DayGroup,
    cfg: &PredictorConfig,
) -> Result<usize> {
    let records = history.records();
    let find = |g: DayGroup| records.iter().rposition(|r| r.meta.group == g);
    find(group)
        .or_else(|| match (group, cfg.reference.holiday_fallback) {
            (DayGroup::Holiday, Some(fb)) => find(fb),
            _ => None,
        })
        .ok_or_else(|| SspError::NoCandidates {
            group: group.to_string(),
            window: records.len(),
        })
}

struct DayOutcome {
    scores: Vec<DayScore>,
    failures: Vec<DateFailure>,
    curves: DayCurves,
}

fn run_day(
    history: &HistoryWindow,
    shapes: &[Vec<f64>],
    idx: usize,
    methods: &[Method],
    cfg: &BacktestConfig,
) -> DayOutcome {
    let records = history.records();
    let target = &records[idx];
    let actual = target.load.values();
    let to_load = |shape: Vec<f64>| -> Vec<f64> {
        match cfg.predictor.normalization {
            ShapeNormalization::DailyMax => {
                let m = target.load.max();
                shape.into_iter().map(|v| v * m).collect()
            }
            ShapeNormalization::None => shape,
        }
    };
    let prior = history.prefix(idx);
    let prior_shapes = &shapes[..idx];

    let mut out = DayOutcome {
        scores: Vec::new(),
        failures: Vec::new(),
        curves: DayCurves {
            date: target.date(),
            actual: actual.to_vec(),
            predictions: Vec::new(),
        },
    };
    for &method in methods {
        let predicted = (|| -> Result<Vec<f64>> {
            if idx == 0 {
                return Err(SspError::InsufficientHistory(format!(
                    "no days before {}",
                    target.date()
                )));
            }
            let shape = match method {
                Method::Ssp => {
                    let temp = target.temperature.as_ref().ok_or_else(|| {
                        SspError::InsufficientHistory(format!(
                            "no temperatures on {}",
                            target.date()
                        ))
                    })?;
                    let forecast =
                        temp.restrict(&cfg.predictor.stand_in_mask(target.load.grid()))?;
                    predict_with_shapes(
                        &prior,
                        prior_shapes,
                        &target.meta,
                        &forecast,
                        None,
                        &cfg.predictor,
                    )?
                    .shape
                    .into_values()
                }
                Method::Persistence => prior_shapes
                    [persistence_source(&prior, target.meta.group, &cfg.predictor)?]
                .clone(),
                Method::ConditionalKernel => {
                    let rows: Vec<&[f64]> = prior_shapes.iter().map(Vec::as_slice).collect();
                    conditional_kernel(&rows, &cfg.baseline_kernel, &cfg.baseline_distance)?.0
                }
            };
            Ok(to_load(shape))
        })();
        match predicted.and_then(|p| score_values(&p, actual).map(|m| (p, m))) {
            Ok((p, m)) => {
                out.scores.push(DayScore::new(target.date(), method, m));
                out.curves.predictions.push((method, p));
            }
            Err(e) => out.failures.push(DateFailure {
                date: target.date(),
                method,
                error: e.to_string(),
            }),
        }
    }
    out
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn summarize(methods: &[Method], scores: &[DayScore]) -> Vec<MethodSummary> {
    let mut summary: Vec<MethodSummary> = methods
        .iter()
        .map(|&method| {
            let mut r: Vec<f64> = scores
                .iter()
                .filter(|s| s.method == method)
                .map(|s| s.rmae)
                .collect();
            let mean = if r.is_empty() {
                f64::NAN
            } else {
                r.iter().sum::<f64>() / r.len() as f64
            };
            MethodSummary {
                method,
                days: r.len(),
                mean_rmae: mean,
                median_rmae: median(&mut r),
                wins: 0,
            }
        })
        .collect();
    // scores are grouped by date, methods in request order
    for day in scores.chunk_by(|a, b| a.date == b.date) {
        let best = day.iter().map(|s| s.rmae).fold(f64::INFINITY, f64::min);
        for s in day.iter().filter(|s| s.rmae == best) {
            if let Some(m) = summary.iter_mut().find(|m| m.method == s.method) {
                m.wins += 1;
            }
        }
    }
    summary
}

/// Rolling one-day-ahead evaluation of each method on each date.
///
/// Every prediction for a date sees only the days before it. Realized
/// temperatures on the stand-in mask replace the forecast and the realized
/// daily maximum replaces the next-day maximum. Per-method failures are
/// recorded in the report rather than aborting the run.
pub fn backtest(
    history: &HistoryWindow,
    dates: &[NaiveDate],
    methods: &[Method],
    cfg: &BacktestConfig,
) -> Result<BacktestReport> {
    cfg.predictor.validate()?;
    cfg.baseline_kernel.validate()?;
    let positions = dates
        .iter()
        .map(|&d| history.position(d).ok_or(SspError::DateOutOfRange(d)))
        .collect::<Result<Vec<_>>>()?;
    let mut methods_dedup = Vec::with_capacity(methods.len());
    for &m in methods {
        if !methods_dedup.contains(&m) {
            methods_dedup.push(m);
        }
    }

    let shapes = if positions.is_empty() {
        Vec::new()
    } else {
        history_shapes(history, cfg.predictor.normalization)?
    };
    let outcomes: Vec<DayOutcome> = positions
        .par_iter()
        .map(|&idx| run_day(history, &shapes, idx, &methods_dedup, cfg))
        .collect();

    let mut scores = Vec::new();
    let mut failures = Vec::new();
    let mut curves = Vec::new();
    for o in outcomes {
        scores.extend(o.scores);
        failures.extend(o.failures);
        curves.push(o.curves);
    }
    let summary = summarize(&methods_dedup, &scores);
    Ok(BacktestReport {
        protocol: PERFECT_TEMPERATURE_PROTOCOL,
        methods: methods_dedup,
        scores,
        summary,
        failures,
        config: cfg.clone(),
        curves,
    })
}

/// `n` distinct dates drawn uniformly from the days that have at least
/// `min_prior` earlier days, sorted. Deterministic in `seed`.
pub fn sample_dates(
    history: &HistoryWindow,
    n: usize,
    seed: u64,
    min_prior: usize,
) -> Result<Vec<NaiveDate>> {
    let eligible: Vec<NaiveDate> = history
        .records()
        .iter()
        .skip(min_prior)
        .map(|r| r.date())
        .collect();
    if n > eligible.len() {
        return Err(SspError::InsufficientHistory(format!(
            "cannot sample {n} dates from {} eligible days",
            eligible.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<NaiveDate> = index::sample(&mut rng, eligible.len(), n)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    picked.sort();
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::domain::{LoadSegment, TemperatureSegment, TimeGrid};
    use crate::ingestion::{annotate_calendar, DailyRecord, Holidays, Quality};

    fn history(days: usize) -> HistoryWindow {
        let grid = Arc::new(TimeGrid::daily(24).unwrap());
        let start = NaiveDate::from_ymd_opt(2012, 5, 7).unwrap();
        let records = (0..days)
            .map(|i| {
                let load = (0..24)
                    .map(|t| {
                        400.0
                            + 50.0 * ((t as f64 + i as f64) / 4.0).sin()
                            + ((i * 31 + t * 7) % 11) as f64
                    })
                    .collect();
                DailyRecord {
                    meta: annotate_calendar(
                        start + chrono::Duration::days(i as i64),
                        &Holidays::new(),
                    ),
                    load: LoadSegment::new(grid.clone(), load).unwrap(),
                    temperature: Some(
                        TemperatureSegment::full(
                            grid.clone(),
                            (0..24).map(|t| 15.0 + ((i + t) % 9) as f64).collect(),
                        )
                        .unwrap(),
                    ),
                    quality: Quality::Complete,
                }
            })
            .collect();
        HistoryWindow::new(records).unwrap()
    }

    #[test]
    fn one_date_one_method() {
        let h = history(20);
        let d = h.records()[15].date();
        let r = backtest(&h, &[d], &[Method::Ssp], &BacktestConfig::default()).unwrap();
        assert_eq!(r.scores.len(), 1);
        assert_eq!(r.summary[0].wins, 1);
        assert!(r.failures.is_empty());
    }

    #[test]
    fn win_counts_match_rows() {
        let h = history(30);
        let dates: Vec<NaiveDate> = h.records()[20..25].iter().map(|r| r.date()).collect();
        let r = backtest(
            &h,
            &dates,
            &[Method::Ssp, Method::Persistence],
            &BacktestConfig::default(),
        )
        .unwrap();
        assert_eq!(r.scores.len(), 10);
        let mut wins = [0usize; 2];
        for pair in r.scores.chunks(2) {
            let best = pair[0].rmae.min(pair[1].rmae);
            for (k, s) in pair.iter().enumerate() {
                if s.rmae == best {
                    wins[k] += 1;
                }
            }
        }
        assert_eq!(r.summary[0].wins, wins[0]);
        assert_eq!(r.summary[1].wins, wins[1]);
        let mean = r
            .scores
            .iter()
            .filter(|s| s.method == Method::Ssp)
            .map(|s| s.rmae)
            .sum::<f64>()
            / 5.0;
        assert!((r.summary[0].mean_rmae - mean).abs() < 1e-15);
    }

    #[test]
    fn empty_dates() {
        let r = backtest(&history(5), &[], &Method::ALL, &BacktestConfig::default()).unwrap();
        assert!(r.scores.is_empty() && r.failures.is_empty());
        assert_eq!(r.summary.len(), 3);
    }

    #[test]
    fn out_of_range_and_first_day() {
        let h = history(10);
        let late = NaiveDate::from_ymd_opt(2030, 1, 1).unwrap();
        assert_eq!(
            backtest(&h, &[late], &[Method::Ssp], &BacktestConfig::default()).unwrap_err(),
            SspError::DateOutOfRange(late)
        );
        let r = backtest(
            &h,
            &[h.records()[0].date()],
            &[Method::Persistence],
            &BacktestConfig::default(),
        )
        .unwrap();
        assert_eq!(r.failures.len(), 1);
    }

    #[test]
    fn future_days_are_never_read() {
        let h = history(30);
        let d = h.records()[20].date();
        let base = backtest(&h, &[d], &Method::ALL, &BacktestConfig::default()).unwrap();

        let mut records = h.clone().into_records();
        for r in &mut records[21..] {
            let v: Vec<f64> = r.load.values().iter().map(|x| x * 3.0 + 17.0).collect();
            r.load = LoadSegment::new(r.load.grid().clone(), v).unwrap();
            r.temperature = None;
        }
        let tripped = HistoryWindow::new(records).unwrap();
        let again = backtest(&tripped, &[d], &Method::ALL, &BacktestConfig::default()).unwrap();
        assert_eq!(base.scores, again.scores);
    }

    #[test]
    fn sampling_is_deterministic() {
        let h = history(60);
        let a = sample_dates(&h, 30, 7, 7).unwrap();
        assert_eq!(a, sample_dates(&h, 30, 7, 7).unwrap());
        assert_eq!(a.len(), 30);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a[0] >= h.records()[7].date());
        assert!(sample_dates(&h, 60, 7, 7).is_err());
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("wkp".parse::<Method>().is_err());
    }
}
