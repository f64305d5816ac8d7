//! Timestamped CSV readings (`timestamp,load_mw` and `timestamp,temp_c`).

use std::io::Read;

use chrono::{DateTime, NaiveDateTime};

use crate::error::{Result, SspError};

/// A single timestamped value.
///
/// `timestamp` is local civil time. When the source carried a UTC offset it is
/// kept in `utc_offset_secs`, which lets DST transition days be ordered in
/// absolute time.
#[derive(Debug, Clone, PartialEq)]
pub struct Reading {
    pub timestamp: NaiveDateTime,
    pub utc_offset_secs: Option<i32>,
    pub value: f64,
    /// 1-based line in the source file, 0 for synthesized readings.
    pub line: usize,
}

impl Reading {
    pub fn local(timestamp: NaiveDateTime, value: f64) -> Self {
        Self {
            timestamp,
            utc_offset_secs: None,
            value,
            line: 0,
        }
    }

    /// Ordering key in absolute time; local time when no offset is known.
    pub(crate) fn instant(&self) -> NaiveDateTime {
        match self.utc_offset_secs {
            Some(off) => self.timestamp - chrono::Duration::seconds(i64::from(off)),
            None => self.timestamp,
        }
    }
}

pub fn parse_timestamp(s: &str) -> Option<(NaiveDateTime, Option<i32>)> {
    let s = s.trim();
    for fmt in ["%Y-%m-%dT%H:%M", "%Y-%m-%dT%H:%M:%S"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some((t, None));
        }
    }
    let with_offset = match s.strip_suffix('Z') {
        Some(rest) => format!("{rest}+00:00"),
        None => s.to_string(),
    };
    for fmt in ["%Y-%m-%dT%H:%M%:z", "%Y-%m-%dT%H:%M:%S%:z"] {
        if let Ok(t) = DateTime::parse_from_str(&with_offset, fmt) {
            return Some((t.naive_local(), Some(t.offset().local_minus_utc())));
        }
    }
    None
}

/// Parses a `timestamp,load_mw` file. Loads must be finite and nonnegative.
pub fn parse_load_file(input: impl Read) -> Result<Vec<Reading>> {
    parse_timestamped(input, "load_mw", true)
}

/// Parses a `timestamp,temp_c` file of historical temperatures.
pub fn parse_temperature_history(input: impl Read) -> Result<Vec<Reading>> {
    parse_timestamped(input, "temp_c", false)
}

fn parse_timestamped(
    input: impl Read,
    value_column: &str,
    nonnegative: bool,
) -> Result<Vec<Reading>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    let expected = ["timestamp", value_column];
    if headers.len() != 2 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(SspError::Parse {
            line: 1,
            message: format!(
                "expected header 'timestamp,{value_column}', found '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(e, 0))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let (timestamp, utc_offset_secs) =
            parse_timestamp(&row[0]).ok_or_else(|| SspError::Parse {
                line,
                message: format!("timestamp '{}' is not ISO-8601 (YYYY-MM-DDTHH:MM)", &row[0]),
            })?;
        let value: f64 = row[1].parse().map_err(|_| SspError::Parse {
            line,
            message: format!("{value_column} '{}' is not a number", &row[1]),
        })?;
        if !value.is_finite() || (nonnegative && value < 0.0) {
            return Err(SspError::Parse {
                line,
                message: format!("{value_column} {value} out of range"),
            });
        }
        out.push(Reading {
            timestamp,
            utc_offset_secs,
            value,
            line,
        });
    }
    Ok(out)
}

fn csv_error(err: csv::Error, fallback_line: usize) -> SspError {
    let line = err.position().map_or(fallback_line, |p| p.line() as usize);
    SspError::Parse {
        line,
        message: err.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_valid_row() {
        let r = parse_load_file("timestamp,load_mw\n2010-06-09T00:15,512.5\n".as_bytes()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].value, 512.5);
        assert_eq!(r[0].line, 2);
        assert_eq!(r[0].utc_offset_secs, None);
    }

    #[test]
    fn empty_body() {
        assert!(parse_load_file("timestamp,load_mw\n".as_bytes())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn non_numeric_load_names_line() {
        let text = "timestamp,load_mw\n2010-06-09T00:00,1\n2010-06-09T00:15,abc\n";
        match parse_load_file(text.as_bytes()) {
            Err(SspError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_header_and_timestamp() {
        assert!(matches!(
            parse_load_file("time,load\n".as_bytes()),
            Err(SspError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_load_file("timestamp,load_mw\n09/06/2010 00:00,1\n".as_bytes()),
            Err(SspError::Parse { line: 2, .. })
        ));
        assert!(parse_load_file("timestamp,load_mw\n2010-06-09T00:00,-1\n".as_bytes()).is_err());
    }

    #[test]
    fn timestamps_with_offsets() {
        let (t, off) = parse_timestamp("2010-10-31T03:15+03:00").unwrap();
        assert_eq!(t.to_string(), "2010-10-31 03:15:00");
        assert_eq!(off, Some(3 * 3600));
        assert_eq!(parse_timestamp("2010-10-31T03:15:00Z").unwrap().1, Some(0));
        assert!(parse_timestamp("2010-10-31").is_none());
    }

    #[test]
    fn temperature_header() {
        let r = parse_temperature_history("timestamp,temp_c\n2010-06-09T00:00,-2.5\n".as_bytes())
            .unwrap();
        assert_eq!(r[0].value, -2.5);
    }
}
