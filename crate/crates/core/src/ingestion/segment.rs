//! Cutting a reading stream into fixed-grid daily segments.
//!
//! Short gaps are filled by linear interpolation; days with a gap longer than
//! the policy allows are rejected. Days whose readings carry two different UTC
//! offsets (DST transitions, 23 or 25 hours long) are resampled onto the grid
//! in absolute time. Every input reading ends up in exactly one place: a
//! segment, a rejected day, or the discard list.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::Serialize;

use super::calendar::{annotate_calendar, Holidays};
use super::history::{DailyRecord, HistoryWindow, Quality};
use super::readings::Reading;
use crate::domain::{LoadSegment, TemperatureSegment, TimeGrid};
use crate::error::{Result, SspError};

pub const DEFAULT_MAX_GAP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GapPolicy {
    /// Longest run of consecutive missing points that is still filled.
    pub max_gap: usize,
}

impl Default for GapPolicy {
    fn default() -> Self {
        Self {
            max_gap: DEFAULT_MAX_GAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillKind {
    Interpolated,
    /// Leading or trailing gap, held at the nearest observed value.
    EdgeHold,
    /// Whole day resampled from a DST-length day.
    DstResampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapFill {
    pub date: NaiveDate,
    pub kind: FillKind,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub date: NaiveDate,
    pub reason: String,
    pub readings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscardReason {
    OffGrid,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscardedReading {
    pub line: usize,
    pub timestamp: NaiveDateTime,
    pub reason: DiscardReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GapReport {
    pub fills: Vec<GapFill>,
    pub rejections: Vec<Rejection>,
    pub discarded: Vec<DiscardedReading>,
    pub readings_used: usize,
}

impl GapReport {
    /// Number of input readings this report accounts for.
    pub fn accounted(&self) -> usize {
        self.readings_used
            + self.rejections.iter().map(|r| r.readings).sum::<usize>()
            + self.discarded.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct DaySeries {
    date: NaiveDate,
    values: Vec<f64>,
    quality: Quality,
}

/// Segments load readings into a history window of annotated days.
pub fn segmentize(
    readings: &[Reading],
    grid: Arc<TimeGrid>,
    policy: &GapPolicy,
    holidays: &Holidays,
) -> Result<(HistoryWindow, GapReport)> {
    let (days, report) = segment_series(readings, &grid, policy)?;
    let records = days
        .into_iter()
        .map(|d| {
            Ok(DailyRecord {
                meta: annotate_calendar(d.date, holidays),
                load: LoadSegment::new(grid.clone(), d.values)?,
                temperature: None,
                quality: d.quality,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((HistoryWindow::new(records)?, report))
}

/// Segments historical temperature readings into fully observed daily curves.
pub fn segment_temperatures(
    readings: &[Reading],
    grid: Arc<TimeGrid>,
    policy: &GapPolicy,
) -> Result<(BTreeMap<NaiveDate, TemperatureSegment>, GapReport)> {
    let (days, report) = segment_series(readings, &grid, policy)?;
    let map = days
        .into_iter()
        .map(|d| Ok((d.date, TemperatureSegment::full(grid.clone(), d.values)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok((map, report))
}

fn segment_series(
    readings: &[Reading],
    grid: &TimeGrid,
    policy: &GapPolicy,
) -> Result<(Vec<DaySeries>, GapReport)> {
    let mut report = GapReport::default();

    let mut sorted: Vec<&Reading> = readings.iter().collect();
    sorted.sort_by_key(|r| (r.instant(), r.line));
    let mut unique: Vec<&Reading> = Vec::with_capacity(sorted.len());
    for r in sorted {
        match unique.last() {
            Some(prev) if prev.instant() == r.instant() => {
                if prev.value != r.value {
                    return Err(SspError::ConflictingDuplicate {
                        timestamp: r.timestamp.to_string(),
                        first: prev.value,
                        second: r.value,
                    });
                }
                report.discarded.push(DiscardedReading {
                    line: r.line,
                    timestamp: r.timestamp,
                    reason: DiscardReason::Duplicate,
                });
            }
            _ => unique.push(r),
        }
    }

    let mut by_day: BTreeMap<NaiveDate, Vec<&Reading>> = BTreeMap::new();
    for r in unique {
        by_day.entry(r.timestamp.date()).or_default().push(r);
    }
    let (Some(&first), Some(&last)) = (by_day.keys().next(), by_day.keys().next_back()) else {
        return Ok((Vec::new(), report));
    };

    let mut days = Vec::new();
    for date in first.iter_days().take_while(|d| *d <= last) {
        let Some(day) = by_day.get(&date) else {
            report.rejections.push(Rejection {
                date,
                reason: "no readings".into(),
                readings: 0,
            });
            continue;
        };
        let is_dst = {
            let mut offsets = day.iter().filter_map(|r| r.utc_offset_secs);
            let first_off = offsets.next();
            first_off.is_some() && offsets.any(|o| Some(o) != first_off)
        };
        let outcome = if is_dst {
            dst_day(date, day, grid, policy, &mut report)
        } else {
            regular_day(date, day, grid, policy, &mut report)
        };
        match outcome {
            Ok((values, used, fills)) => {
                report.readings_used += used;
                let quality = if fills.is_empty() {
                    Quality::Complete
                } else {
                    Quality::GapFilled
                };
                report.fills.extend(fills);
                days.push(DaySeries {
                    date,
                    values,
                    quality,
                });
            }
            Err((reason, readings)) => report.rejections.push(Rejection {
                date,
                reason,
                readings,
            }),
        }
    }
    Ok((days, report))
}

type DayOutcome = std::result::Result<(Vec<f64>, usize, Vec<GapFill>), (String, usize)>;

fn regular_day(
    date: NaiveDate,
    day: &[&Reading],
    grid: &TimeGrid,
    policy: &GapPolicy,
    report: &mut GapReport,
) -> DayOutcome {
    let mut slots = vec![None; grid.points()];
    let mut used = 0;
    for r in day {
        match grid.index_of(r.timestamp.time()) {
            Some(i) => {
                slots[i] = Some(r.value);
                used += 1;
            }
            None => report.discarded.push(DiscardedReading {
                line: r.line,
                timestamp: r.timestamp,
                reason: DiscardReason::OffGrid,
            }),
        }
    }
    let (values, runs) = fill_gaps(&slots, policy.max_gap).map_err(|reason| (reason, used))?;
    let fills = runs
        .into_iter()
        .map(|(start, len, kind)| GapFill {
            date,
            kind,
            start,
            len,
        })
        .collect();
    Ok((values, used, fills))
}

fn dst_day(
    date: NaiveDate,
    day: &[&Reading],
    grid: &TimeGrid,
    policy: &GapPolicy,
    report: &mut GapReport,
) -> DayOutcome {
    let step = i64::from(grid.step_secs());
    let first_off = i64::from(day[0].utc_offset_secs.unwrap_or(0));
    let last_off = i64::from(day[day.len() - 1].utc_offset_secs.unwrap_or(0));
    let day_secs = 86_400 + first_off - last_off;
    let n_abs = ((day_secs - i64::from(grid.start_secs())) / step).max(2) as usize;
    let start = date.and_hms_opt(0, 0, 0).expect("midnight exists")
        + chrono::Duration::seconds(i64::from(grid.start_secs()) - first_off);

    let mut slots = vec![None; n_abs];
    let mut used = 0;
    for r in day {
        let delta = (r.instant() - start).num_seconds();
        let on_grid = r.timestamp.nanosecond() == 0 && delta >= 0 && delta % step == 0;
        match on_grid
            .then(|| (delta / step) as usize)
            .filter(|&k| k < n_abs)
        {
            Some(k) => {
                slots[k] = Some(r.value);
                used += 1;
            }
            None => report.discarded.push(DiscardedReading {
                line: r.line,
                timestamp: r.timestamp,
                reason: DiscardReason::OffGrid,
            }),
        }
    }
    let (abs_values, runs) = fill_gaps(&slots, policy.max_gap).map_err(|reason| (reason, used))?;

    let p = grid.points();
    let values = (0..p)
        .map(|j| {
            let x = j as f64 * n_abs as f64 / p as f64;
            let i0 = (x.floor() as usize).min(n_abs - 1);
            let i1 = (i0 + 1).min(n_abs - 1);
            let frac = x - i0 as f64;
            abs_values[i0] + frac * (abs_values[i1] - abs_values[i0])
        })
        .collect();
    let mut fills: Vec<GapFill> = runs
        .into_iter()
        .map(|(start, len, kind)| GapFill {
            date,
            kind,
            start,
            len,
        })
        .collect();
    fills.push(GapFill {
        date,
        kind: FillKind::DstResampled,
        start: 0,
        len: p,
    });
    Ok((values, used, fills))
}

type FillRun = (usize, usize, FillKind);

/// Fills missing slots; fails with a reason when a run exceeds `max_gap`.
fn fill_gaps(
    slots: &[Option<f64>],
    max_gap: usize,
) -> std::result::Result<(Vec<f64>, Vec<FillRun>), String> {
    if slots.iter().all(Option::is_none) {
        return Err("no on-grid readings".into());
    }
    let n = slots.len();
    let mut values: Vec<f64> = slots.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
    let mut runs = Vec::new();
    let mut i = 0;
    while i < n {
        if slots[i].is_some() {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && slots[i].is_none() {
            i += 1;
        }
        let len = i - start;
        if len > max_gap {
            return Err(format!(
                "gap of {len} points at index {start} exceeds max_gap {max_gap}"
            ));
        }
        let left = start.checked_sub(1).and_then(|k| slots[k]);
        let right = slots.get(i).copied().flatten();
        match (left, right) {
            (Some(l), Some(r)) => {
                for k in 0..len {
                    let frac = (k + 1) as f64 / (len + 1) as f64;
                    values[start + k] = l + (r - l) * frac;
                }
                runs.push((start, len, FillKind::Interpolated));
            }
            (Some(v), None) | (None, Some(v)) => {
                values[start..i].fill(v);
                runs.push((start, len, FillKind::EdgeHold));
            }
            (None, None) => unreachable!("day has at least one reading"),
        }
    }
    Ok((values, runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day_readings(date: NaiveDate, values: &[f64]) -> Vec<Reading> {
        let midnight = date.and_hms_opt(0, 0, 0).unwrap();
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| Reading {
                timestamp: midnight + chrono::Duration::minutes(15 * i as i64),
                utc_offset_secs: None,
                value: v,
                line: i + 2,
            })
            .collect()
    }

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2010, 6, 9).unwrap()
    }

    fn grid() -> Arc<TimeGrid> {
        Arc::new(TimeGrid::quarter_hourly())
    }

    #[test]
    fn clean_day() {
        let values: Vec<f64> = (0..96).map(|i| 400.0 + i as f64).collect();
        let (h, report) = segmentize(
            &day_readings(date(), &values),
            grid(),
            &GapPolicy::default(),
            &Holidays::new(),
        )
        .unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.records()[0].quality, Quality::Complete);
        assert_eq!(h.records()[0].load.values(), values.as_slice());
        assert!(report.fills.is_empty());
        assert_eq!(report.accounted(), 96);
    }

    #[test]
    fn interior_gap_is_interpolated() {
        let values: Vec<f64> = (0..96).map(|i| 400.0 + 2.0 * i as f64).collect();
        let mut readings = day_readings(date(), &values);
        readings.remove(50);
        let (h, report) =
            segmentize(&readings, grid(), &GapPolicy::default(), &Holidays::new()).unwrap();
        let rec = &h.records()[0];
        assert_eq!(rec.quality, Quality::GapFilled);
        assert_eq!(rec.load.values()[50], (values[49] + values[51]) / 2.0);
        assert_eq!(report.fills.len(), 1);
        assert_eq!(report.fills[0].kind, FillKind::Interpolated);
        assert_eq!(report.accounted(), 95);
    }

    #[test]
    fn sparse_day_is_rejected() {
        let values = vec![500.0; 96];
        let readings: Vec<Reading> = day_readings(date(), &values).into_iter().take(40).collect();
        let (h, report) = segmentize(
            &readings,
            grid(),
            &GapPolicy { max_gap: 4 },
            &Holidays::new(),
        )
        .unwrap();
        assert!(h.is_empty());
        assert_eq!(report.rejections.len(), 1);
        assert_eq!(report.rejections[0].readings, 40);
        assert_eq!(report.accounted(), 40);
    }

    #[test]
    fn zero_max_gap_rejects_any_gap() {
        let mut readings = day_readings(date(), &[500.0; 96]);
        readings.remove(10);
        let (h, report) = segmentize(
            &readings,
            grid(),
            &GapPolicy { max_gap: 0 },
            &Holidays::new(),
        )
        .unwrap();
        assert!(h.is_empty());
        assert_eq!(report.rejections[0].date, date());
    }

    #[test]
    fn edge_gap_holds_nearest() {
        let values: Vec<f64> = (0..96).map(|i| i as f64).collect();
        let readings: Vec<Reading> = day_readings(date(), &values).into_iter().skip(2).collect();
        let (h, report) =
            segmentize(&readings, grid(), &GapPolicy::default(), &Holidays::new()).unwrap();
        assert_eq!(&h.records()[0].load.values()[..3], &[2.0, 2.0, 2.0]);
        assert_eq!(report.fills[0].kind, FillKind::EdgeHold);
    }

    #[test]
    fn duplicates() {
        let mut readings = day_readings(date(), &[500.0; 96]);
        readings.push(readings[3].clone());
        let (_, report) =
            segmentize(&readings, grid(), &GapPolicy::default(), &Holidays::new()).unwrap();
        assert_eq!(report.discarded.len(), 1);
        assert_eq!(report.accounted(), 97);

        let mut conflicting = readings[3].clone();
        conflicting.value = 1.0;
        readings.push(conflicting);
        assert!(matches!(
            segmentize(&readings, grid(), &GapPolicy::default(), &Holidays::new()),
            Err(SspError::ConflictingDuplicate { .. })
        ));
    }

    #[test]
    fn missing_calendar_day_is_rejected() {
        let d2 = date() + chrono::Duration::days(2);
        let mut readings = day_readings(date(), &[1.0; 96]);
        readings.extend(day_readings(d2, &[2.0; 96]));
        let (h, report) =
            segmentize(&readings, grid(), &GapPolicy::default(), &Holidays::new()).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h.rejected(), &[date().succ_opt().unwrap()]);
        assert_eq!(report.rejections[0].reason, "no readings");
    }

    #[test]
    fn off_grid_readings_are_discarded() {
        let mut readings = day_readings(date(), &[1.0; 96]);
        readings.push(Reading {
            timestamp: date().and_hms_opt(3, 7, 0).unwrap(),
            utc_offset_secs: None,
            value: 9.0,
            line: 999,
        });
        let (h, report) =
            segmentize(&readings, grid(), &GapPolicy::default(), &Holidays::new()).unwrap();
        assert_eq!(h.records()[0].load.values(), &[1.0; 96]);
        assert_eq!(report.discarded[0].reason, DiscardReason::OffGrid);
        assert_eq!(report.accounted(), 97);
    }

    /// Readings stamped with offsets around a DST switch at 04:00 local.
    fn dst_readings(date: NaiveDate, before: i32, after: i32) -> Vec<Reading> {
        let start = date.and_hms_opt(0, 0, 0).unwrap() - chrono::Duration::seconds(before as i64);
        let day_len = 86_400 + before - after;
        let n = day_len / 900;
        (0..n)
            .map(|k| {
                let instant = start + chrono::Duration::seconds(900 * k as i64);
                let off = if instant < start + chrono::Duration::hours(4) {
                    before
                } else {
                    after
                };
                Reading {
                    timestamp: instant + chrono::Duration::seconds(off as i64),
                    utc_offset_secs: Some(off),
                    value: 100.0 + k as f64,
                    line: k as usize + 2,
                }
            })
            .collect()
    }

    #[test]
    fn dst_days_are_resampled() {
        // spring forward: 92 readings; fall back: 100 readings with repeated local times
        for (before, after, n) in [(7200, 10800, 92usize), (10800, 7200, 100)] {
            let readings = dst_readings(date(), before, after);
            assert_eq!(readings.len(), n);
            let (h, report) =
                segmentize(&readings, grid(), &GapPolicy::default(), &Holidays::new()).unwrap();
            assert_eq!(h.len(), 1);
            let rec = &h.records()[0];
            assert_eq!(rec.quality, Quality::GapFilled);
            assert_eq!(rec.load.len(), 96);
            // linear ramp in absolute time stays linear after resampling
            let v = rec.load.values();
            let slope = n as f64 / 96.0;
            for (j, &x) in v.iter().enumerate().take(95) {
                assert!((x - (100.0 + slope * j as f64)).abs() < 1e-9);
            }
            assert!(report
                .fills
                .iter()
                .any(|f| f.kind == FillKind::DstResampled));
            assert_eq!(report.accounted(), n);
        }
    }

    #[test]
    fn temperatures_segment_to_full_mask() {
        let values: Vec<f64> = (0..96).map(|i| 10.0 + 0.1 * i as f64).collect();
        let (map, _) = segment_temperatures(
            &day_readings(date(), &values),
            grid(),
            &GapPolicy::default(),
        )
        .unwrap();
        let t = &map[&date()];
        assert_eq!(t.mask().len(), 96);
        assert_eq!(t.values()[32], values[32]);
    }

    proptest! {
        #[test]
        fn every_reading_accounted_once(
            drop in prop::collection::vec(any::<bool>(), 288),
            dup in prop::collection::vec(0usize..288, 0..5),
            max_gap in 0usize..6,
        ) {
            let mut readings = Vec::new();
            for d in 0..3 {
                let day = date() + chrono::Duration::days(d);
                let vals: Vec<f64> = (0..96).map(|i| 300.0 + i as f64 + d as f64).collect();
                readings.extend(day_readings(day, &vals));
            }
            let mut kept: Vec<Reading> = readings
                .iter()
                .zip(&drop)
                .filter(|(_, &d)| !d)
                .map(|(r, _)| r.clone())
                .collect();
            for &i in &dup {
                if i < kept.len() {
                    kept.push(kept[i].clone());
                }
            }
            let (h, report) =
                segmentize(&kept, grid(), &GapPolicy { max_gap }, &Holidays::new()).unwrap();
            prop_assert_eq!(report.accounted(), kept.len());
            prop_assert!(h.len() <= 3);
        }

        #[test]
        fn segmentize_is_idempotent(
            missing in prop::collection::vec(0usize..192, 0..6),
        ) {
            let mut readings = Vec::new();
            for d in 0..2 {
                let day = date() + chrono::Duration::days(d);
                let vals: Vec<f64> = (0..96).map(|i| 250.0 + (i as f64 * 0.3).sin() * 40.0).collect();
                readings.extend(day_readings(day, &vals));
            }
            let kept: Vec<Reading> = readings
                .into_iter()
                .enumerate()
                .filter(|(i, _)| !missing.contains(i))
                .map(|(_, r)| r)
                .collect();
            let policy = GapPolicy::default();
            let (first, _) = segmentize(&kept, grid(), &policy, &Holidays::new()).unwrap();
            let (second, report) =
                segmentize(&first.to_readings(), grid(), &policy, &Holidays::new()).unwrap();
            prop_assert!(report.fills.is_empty());
            prop_assert_eq!(first.len(), second.len());
            for (a, b) in first.records().iter().zip(second.records()) {
                prop_assert_eq!(a.date(), b.date());
                prop_assert_eq!(a.load.values(), b.load.values());
            }
        }
    }
}
