//! Temperature forecast files: `date,t0800,t1200,t1600,t2000`.
//!
//! Each `tHHMM` column must fall on a grid point; the resulting segments are
//! masked to exactly those points.

use std::collections::BTreeMap;
use std::io::Read;
use std::sync::Arc;

use chrono::{NaiveDate, NaiveTime};

use crate::domain::{TemperatureSegment, TimeGrid};
use crate::error::{Result, SspError};

/// Forecast clock times used by default: 08:00, 12:00, 16:00 and 20:00.
pub const FORECAST_HOURS: [u32; 4] = [8, 12, 16, 20];

/// Grid indices of the default forecast times.
pub fn default_forecast_mask(grid: &TimeGrid) -> Result<Vec<usize>> {
    FORECAST_HOURS
        .iter()
        .map(|&h| {
            let t = NaiveTime::from_hms_opt(h, 0, 0).expect("valid hour");
            grid.index_of(t)
                .ok_or_else(|| SspError::InvalidGrid(format!("grid has no point at {t}")))
        })
        .collect()
}

fn column_index(name: &str, grid: &TimeGrid) -> Option<usize> {
    let digits = name.strip_prefix('t')?;
    if digits.len() != 4 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let time = NaiveTime::parse_from_str(digits, "%H%M").ok()?;
    grid.index_of(time)
}

pub fn parse_temperature_forecast(
    input: impl Read,
    grid: Arc<TimeGrid>,
) -> Result<BTreeMap<NaiveDate, TemperatureSegment>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| SspError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.get(0) != Some("date") {
        return Err(SspError::Parse {
            line: 1,
            message: "first column must be 'date'".into(),
        });
    }
    let mut columns = Vec::with_capacity(headers.len() - 1);
    for name in headers.iter().skip(1) {
        let idx = column_index(name, &grid).ok_or_else(|| SspError::Parse {
            line: 1,
            message: format!("unknown column '{name}'"),
        })?;
        if columns.contains(&idx) {
            return Err(SspError::Parse {
                line: 1,
                message: format!("column '{name}' repeats a time point"),
            });
        }
        columns.push(idx);
    }
    if columns.is_empty() {
        return Err(SspError::Parse {
            line: 1,
            message: "no forecast columns".into(),
        });
    }

    let mut out = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| SspError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let date = NaiveDate::parse_from_str(&row[0], "%Y-%m-%d").map_err(|e| SspError::Parse {
            line,
            message: format!("invalid date '{}': {e}", &row[0]),
        })?;
        let mut values = vec![0.0; grid.points()];
        for (field, &idx) in row.iter().skip(1).zip(&columns) {
            let v: f64 = field.parse().map_err(|_| SspError::Parse {
                line,
                message: format!("temperature '{field}' is not a number"),
            })?;
            values[idx] = v;
        }
        let seg = TemperatureSegment::new(grid.clone(), values, columns.clone()).map_err(|e| {
            SspError::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        if out.insert(date, seg).is_some() {
            return Err(SspError::Parse {
                line,
                message: format!("duplicate date {date}"),
            });
        }
    }
    Ok(out)
}
