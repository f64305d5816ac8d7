//! Day groups and holiday calendars.

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SspError};

/// Calendar equivalence class of days with similar load shapes.
///
/// `G1` = Mon/Tue/Thu/Fri, `G2` = Wed, `G3` = Sat, `G4` = Sun. Holidays form
/// their own group regardless of weekday.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DayGroup {
    G1,
    G2,
    G3,
    G4,
    #[serde(rename = "HOLIDAY")]
    Holiday,
}

impl DayGroup {
    pub const ALL: [DayGroup; 5] = [
        DayGroup::G1,
        DayGroup::G2,
        DayGroup::G3,
        DayGroup::G4,
        DayGroup::Holiday,
    ];

    pub fn classify(weekday: Weekday, is_holiday: bool) -> Self {
        if is_holiday {
            return DayGroup::Holiday;
        }
        match weekday {
            Weekday::Mon | Weekday::Tue | Weekday::Thu | Weekday::Fri => DayGroup::G1,
            Weekday::Wed => DayGroup::G2,
            Weekday::Sat => DayGroup::G3,
            Weekday::Sun => DayGroup::G4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DayGroup::G1 => "G1",
            DayGroup::G2 => "G2",
            DayGroup::G3 => "G3",
            DayGroup::G4 => "G4",
            DayGroup::Holiday => "HOLIDAY",
        }
    }
}

impl fmt::Display for DayGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DayGroup {
    type Err = SspError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "G1" => Ok(DayGroup::G1),
            "G2" => Ok(DayGroup::G2),
            "G3" => Ok(DayGroup::G3),
            "G4" => Ok(DayGroup::G4),
            "HOLIDAY" => Ok(DayGroup::Holiday),
            other => Err(SspError::InvalidConfig(format!(
                "unknown day group '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarMeta {
    pub date: NaiveDate,
    pub weekday: Weekday,
    pub is_holiday: bool,
    pub group: DayGroup,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Holidays(BTreeSet<NaiveDate>);

impl Holidays {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.0.contains(&date)
    }

    pub fn insert(&mut self, date: NaiveDate) {
        self.0.insert(date);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<NaiveDate> for Holidays {
    fn from_iter<I: IntoIterator<Item = NaiveDate>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Weekday is always computed from the date; any label in the source data is ignored.
pub fn annotate_calendar(date: NaiveDate, holidays: &Holidays) -> CalendarMeta {
    let weekday = date.weekday();
    let is_holiday = holidays.contains(date);
    CalendarMeta {
        date,
        weekday,
        is_holiday,
        group: DayGroup::classify(weekday, is_holiday),
    }
}

/// One ISO date per line; `#` starts a comment, blank lines are skipped.
pub fn parse_holidays(reader: impl BufRead) -> Result<Holidays> {
    let mut out = Holidays::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| SspError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let date = NaiveDate::parse_from_str(content, "%Y-%m-%d").map_err(|e| SspError::Parse {
            line: line_no,
            message: format!("invalid date '{content}': {e}"),
        })?;
        out.insert(date);
    }
    Ok(out)
}
