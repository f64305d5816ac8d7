//! Daily records and the ordered history window.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::calendar::CalendarMeta;
use super::readings::Reading;
use crate::domain::{LoadSegment, TemperatureSegment};
use crate::error::{Result, SspError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quality {
    Complete,
    GapFilled,
    Rejected,
}

/// One calendar day: raw load, optional temperature and calendar metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub meta: CalendarMeta,
    pub load: LoadSegment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<TemperatureSegment>,
    pub quality: Quality,
}

impl DailyRecord {
    pub fn date(&self) -> NaiveDate {
        self.meta.date
    }
}

/// Accepted days in ascending date order.
///
/// Dates between the first and last record that have no record are the
/// rejected days; they are kept in `rejected` so contiguity can be checked.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HistoryWindow {
    records: Vec<DailyRecord>,
    rejected: Vec<NaiveDate>,
}

impl HistoryWindow {
    pub fn new(records: Vec<DailyRecord>) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| r.quality == Quality::Rejected) {
            return Err(SspError::InvalidSegment(format!(
                "rejected day {} cannot enter the history",
                r.date()
            )));
        }
        for w in records.windows(2) {
            if w[0].date() >= w[1].date() {
                return Err(SspError::InvalidSegment(format!(
                    "history dates must be strictly ascending ({} then {})",
                    w[0].date(),
                    w[1].date()
                )));
            }
        }
        if let Some(first) = records.first() {
            let grid = first.load.grid();
            if let Some(r) = records.iter().find(|r| r.load.grid() != grid) {
                return Err(SspError::InvalidGrid(format!(
                    "day {} uses a different grid",
                    r.date()
                )));
            }
        }
        let mut rejected = Vec::new();
        for w in records.windows(2) {
            let mut d = w[0].date().succ_opt();
            while let Some(day) = d.filter(|&day| day < w[1].date()) {
                rejected.push(day);
                d = day.succ_opt();
            }
        }
        Ok(Self { records, rejected })
    }

    pub fn records(&self) -> &[DailyRecord] {
        &self.records
    }

    pub fn rejected(&self) -> &[NaiveDate] {
        &self.rejected
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.records.first().map(DailyRecord::date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.records.last().map(DailyRecord::date)
    }

    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.records
            .binary_search_by_key(&date, DailyRecord::date)
            .ok()
    }

    /// Records strictly before `date`.
    pub fn before(&self, date: NaiveDate) -> HistoryWindow {
        let end = self.records.partition_point(|r| r.date() < date);
        self.prefix(end)
    }

    /// The first `len` records.
    pub fn prefix(&self, len: usize) -> HistoryWindow {
        let records = self.records[..len].to_vec();
        let last = records.last().map(DailyRecord::date);
        let rejected = self
            .rejected
            .iter()
            .copied()
            .filter(|d| last.is_some_and(|l| *d < l))
            .collect();
        HistoryWindow { records, rejected }
    }

    /// Replaces temperatures with the given per-day segments.
    pub fn attach_temperatures(&mut self, temps: &BTreeMap<NaiveDate, TemperatureSegment>) {
        for r in &mut self.records {
            r.temperature = temps.get(&r.date()).cloned();
        }
    }

    /// Back to per-point readings in local time, for re-segmentation.
    pub fn to_readings(&self) -> Vec<Reading> {
        let mut out = Vec::with_capacity(self.records.len() * 96);
        for r in &self.records {
            let grid = r.load.grid();
            let midnight = r.date().and_hms_opt(0, 0, 0).expect("midnight exists");
            for (i, &v) in r.load.values().iter().enumerate() {
                let ts = midnight + chrono::Duration::seconds(i64::from(grid.offset_secs(i)));
                out.push(Reading::local(ts, v));
            }
        }
        out
    }

    pub fn into_records(self) -> Vec<DailyRecord> {
        self.records
    }
}

/// Writes one JSON object per record.
pub fn write_jsonl(history: &HistoryWindow, mut out: impl Write) -> std::io::Result<()> {
    for r in history.records() {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(input: impl BufRead) -> Result<HistoryWindow> {
    let mut records = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| SspError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DailyRecord = serde_json::from_str(&line).map_err(|e| SspError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        // Deserialization bypasses the constructors' checks.
        LoadSegment::new(record.load.grid().clone(), record.load.values().to_vec()).map_err(
            |e| SspError::Parse {
                line: line_no,
                message: e.to_string(),
            },
        )?;
        records.push(record);
    }
    HistoryWindow::new(records)
}
