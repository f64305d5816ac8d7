use std::sync::Arc;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{LoadSegment, TemperatureSegment, TimeGrid};
use crate::error::{Result, SspError};
use crate::ingestion::{
    annotate_calendar, DailyRecord, DayGroup, HistoryWindow, Holidays, Quality,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    /// `0.5 + 0.4 sin(pi u / 40) + 0.1 u / 40`
    SineRamp,
    /// `0.6 + 0.3 cos(pi u / 40)`
    Cosine,
}

/// Pointwise map from temperature to load, used on the days of its groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFunction {
    pub id: usize,
    pub kind: ShapeKind,
    pub groups: Vec<DayGroup>,
}

impl ShapeFunction {
    /// Value at temperature `u`, clipped to `(0, 1]`.
    pub fn eval(&self, u: f64) -> f64 {
        let x = std::f64::consts::PI * u / 40.0;
        let v = match self.kind {
            ShapeKind::SineRamp => 0.5 + 0.4 * x.sin() + 0.1 * u / 40.0,
            ShapeKind::Cosine => 0.6 + 0.3 * x.cos(),
        };
        v.clamp(f64::MIN_POSITIVE, 1.0)
    }

    pub fn apply(&self, temperatures: &[f64]) -> Vec<f64> {
        temperatures.iter().map(|&u| self.eval(u)).collect()
    }
}

/// Weekdays follow the sine-ramp curve, weekends and holidays the cosine.
pub fn default_shape_functions() -> Vec<ShapeFunction> {
    vec![
        ShapeFunction {
            id: 1,
            kind: ShapeKind::SineRamp,
            groups: vec![DayGroup::G1, DayGroup::G2],
        },
        ShapeFunction {
            id: 2,
            kind: ShapeKind::Cosine,
            groups: vec![DayGroup::G3, DayGroup::G4, DayGroup::Holiday],
        },
    ]
}

/// Five diurnal profiles with daily means 6, 12, 18, 24 and 30 degrees and a
/// 5-degree swing peaking at 15:00.
pub fn default_temperature_pool(grid: &TimeGrid) -> Vec<Vec<f64>> {
    [6.0, 12.0, 18.0, 24.0, 30.0]
        .iter()
        .map(|base| {
            (0..grid.points())
                .map(|i| {
                    let hours = grid.offset_secs(i) as f64 / 3600.0;
                    base + 5.0 * (2.0 * std::f64::consts::PI * (hours - 9.0) / 24.0).sin()
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub points: usize,
    pub shapes: Vec<ShapeFunction>,
    pub temperature_pool: Vec<Vec<f64>>,
    /// Standard deviation of a per-day offset added to the drawn profile.
    pub jitter_sigma: f64,
    pub noise_sigma: f64,
    pub days: usize,
    pub seed: u64,
    /// Selects the family of random streams; each day draws from its own
    /// stream within the family.
    pub replication: u32,
    pub start: NaiveDate,
    #[serde(default)]
    pub holidays: Vec<NaiveDate>,
}

impl SyntheticSpec {
    pub fn new(points: usize, days: usize, noise_sigma: f64, seed: u64) -> Result<Self> {
        let grid = TimeGrid::daily(points)?;
        Ok(Self {
            points,
            shapes: default_shape_functions(),
            temperature_pool: default_temperature_pool(&grid),
            jitter_sigma: 0.5,
            noise_sigma,
            days,
            seed,
            replication: 0,
            start: NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date"),
            holidays: Vec::new(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SspError::InvalidConfig(m));
        if self.shapes.is_empty() {
            return bad("at least one shape function is required".into());
        }
        if self.temperature_pool.is_empty() {
            return bad("empty temperature pool".into());
        }
        if let Some(p) = self
            .temperature_pool
            .iter()
            .find(|p| p.len() != self.points)
        {
            return Err(SspError::LengthMismatch {
                expected: self.points,
                actual: p.len(),
            });
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "noise sigma must be nonnegative, got {}",
                self.noise_sigma
            ));
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return bad(format!(
                "jitter sigma must be nonnegative, got {}",
                self.jitter_sigma
            ));
        }
        if let Some(g) = DayGroup::ALL.iter().find(|g| self.shape_for(**g).is_none()) {
            return bad(format!("no shape function covers group {g}"));
        }
        Ok(())
    }

    pub fn shape_for(&self, group: DayGroup) -> Option<&ShapeFunction> {
        self.shapes.iter().find(|s| s.groups.contains(&group))
    }
}

/// What generated one day.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayTruth {
    pub date: NaiveDate,
    pub shape_id: usize,
    pub profile: usize,
    pub offset: f64,
    /// `f_m(T_n)` on the grid.
    pub clean: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub history: HistoryWindow,
    pub truth: Vec<DayTruth>,
}

/// Random stream of one day: the master seed picks the key, and the stream id
/// combines the replication family with the day index.
pub fn day_rng(seed: u64, replication: u32, day: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(replication) << 32) | day as u64);
    rng
}

/// Draws `spec.days` days of `S_n = f_m(T_n) + eps_n`.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let grid = Arc::new(TimeGrid::daily(spec.points)?);
    let holidays: Holidays = spec.holidays.iter().copied().collect();
    let noise =
        Normal::new(0.0, spec.noise_sigma).map_err(|e| SspError::InvalidConfig(e.to_string()))?;
    let jitter =
        Normal::new(0.0, spec.jitter_sigma).map_err(|e| SspError::InvalidConfig(e.to_string()))?;

    let mut records = Vec::with_capacity(spec.days);
    let mut truth = Vec::with_capacity(spec.days);
    for n in 0..spec.days {
        let mut rng = day_rng(spec.seed, spec.replication, n);
        let date = spec.start + chrono::Duration::days(n as i64);
        let meta = annotate_calendar(date, &holidays);
        let shape = spec.shape_for(meta.group).expect("validated");

        let profile = rng.random_range(0..spec.temperature_pool.len());
        let offset = jitter.sample(&mut rng);
        let temps: Vec<f64> = spec.temperature_pool[profile]
            .iter()
            .map(|t| t + offset)
            .collect();
        let clean = shape.apply(&temps);
        let load: Vec<f64> = clean.iter().map(|c| c + noise.sample(&mut rng)).collect();

        records.push(DailyRecord {
            meta,
            load: LoadSegment::new(grid.clone(), load)?,
            temperature: Some(TemperatureSegment::full(grid.clone(), temps)?),
            quality: Quality::Complete,
        });
        truth.push(DayTruth {
            date,
            shape_id: shape.id,
            profile,
            offset,
            clean,
        });
    }
    Ok(SyntheticData {
        history: HistoryWindow::new(records)?,
        truth,
    })
}
