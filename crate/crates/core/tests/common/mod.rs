//! Shared fixtures: random histories, csv writers and a brute-force predictor
//! that does not use any of the crate's pipeline code.

#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use loadshape::domain::{LoadSegment, TemperatureSegment, TimeGrid};
use loadshape::ingestion::{annotate_calendar, DailyRecord, HistoryWindow, Holidays, Quality};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `days` consecutive days with positive random loads and full temperatures.
pub fn random_history(
    rng: &mut ChaCha8Rng,
    days: usize,
    points: usize,
    start: NaiveDate,
) -> HistoryWindow {
    let grid = Arc::new(TimeGrid::daily(points).unwrap());
    let holidays = Holidays::new();
    let records = (0..days)
        .map(|n| {
            let level = rng.random_range(200.0..800.0);
            let load = (0..points)
                .map(|_| level * rng.random_range(0.3..1.0))
                .collect();
            let temps = (0..points).map(|_| rng.random_range(-5.0..35.0)).collect();
            DailyRecord {
                meta: annotate_calendar(start + Duration::days(n as i64), &holidays),
                load: LoadSegment::new(grid.clone(), load).unwrap(),
                temperature: Some(TemperatureSegment::full(grid.clone(), temps).unwrap()),
                quality: Quality::Complete,
            }
        })
        .collect();
    HistoryWindow::new(records).unwrap()
}

fn group_of(date: NaiveDate) -> u8 {
    match date.weekday() {
        Weekday::Mon | Weekday::Tue | Weekday::Thu | Weekday::Fri => 1,
        Weekday::Wed => 2,
        Weekday::Sat => 3,
        Weekday::Sun => 4,
    }
}

/// Plain day-ahead predictor written directly from the formulas: candidates
/// are the target's weekday group among the last `n_l` days, the reference is
/// the mean shape of the candidates at the smallest Euclidean temperature
/// distance on `mask`, and the prediction is the Gaussian-kernel weighted mean
/// of all daily-max shapes. `None` when the window holds no candidate.
pub struct Day<'a> {
    pub date: NaiveDate,
    pub load: &'a [f64],
    pub temps: &'a [f64],
}

pub fn brute_force(
    days: &[Day<'_>],
    target: NaiveDate,
    forecast: &[f64],
    mask: &[usize],
    n_l: usize,
    h: f64,
) -> Option<Vec<f64>> {
    let shapes: Vec<Vec<f64>> = days
        .iter()
        .map(|d| {
            let m = d.load.iter().cloned().fold(f64::MIN, f64::max);
            d.load.iter().map(|v| v / m).collect()
        })
        .collect();
    let start = days.len().saturating_sub(n_l);
    let candidates: Vec<usize> = (start..days.len())
        .filter(|&i| group_of(days[i].date) == group_of(target))
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let tdist = |i: usize| -> f64 {
        mask.iter()
            .map(|&k| (days[i].temps[k] - forecast[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let best = candidates
        .iter()
        .map(|&i| tdist(i))
        .fold(f64::INFINITY, f64::min);
    let chosen: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&i| tdist(i) == best)
        .collect();
    let p = shapes[0].len();
    let reference: Vec<f64> = (0..p)
        .map(|k| chosen.iter().map(|&i| shapes[i][k]).sum::<f64>() / chosen.len() as f64)
        .collect();

    let gauss = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let kernel: Vec<f64> = shapes
        .iter()
        .map(|s| {
            let d = s
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            gauss(d / h) / h
        })
        .collect();
    let total: f64 = kernel.iter().sum();
    Some(
        (0..p)
            .map(|k| {
                shapes
                    .iter()
                    .zip(&kernel)
                    .map(|(s, w)| w / total * s[k])
                    .sum()
            })
            .collect(),
    )
}

pub fn as_days(history: &HistoryWindow) -> Vec<Day<'_>> {
    history
        .records()
        .iter()
        .map(|r| Day {
            date: r.date(),
            load: r.load.values(),
            temps: r.temperature.as_ref().unwrap().values(),
        })
        .collect()
}

/// Writes `load.csv` and `temperature.csv` covering the whole history.
pub fn write_raw_csvs(dir: &Path, history: &HistoryWindow) {
    let mut load = String::from("timestamp,load_mw\n");
    let mut temp = String::from("timestamp,temp_c\n");
    for r in history.records() {
        let grid = r.load.grid();
        for (i, label) in grid.labels().iter().enumerate() {
            let ts = r.date().and_time(*label).format("%Y-%m-%dT%H:%M");
            load.push_str(&format!("{ts},{}\n", r.load.values()[i]));
            if let Some(t) = &r.temperature {
                temp.push_str(&format!("{ts},{}\n", t.values()[i]));
            }
        }
    }
    std::fs::write(dir.join("load.csv"), load).unwrap();
    std::fs::write(dir.join("temperature.csv"), temp).unwrap();
}

/// Forecast file with the four standard forecast hours for one date.
pub fn write_forecast(path: &Path, date: NaiveDate, values: [f64; 4]) {
    let text = format!(
        "date,t0800,t1200,t1600,t2000\n{date},{},{},{},{}\n",
        values[0], values[1], values[2], values[3]
    );
    std::fs::write(path, text).unwrap();
}
