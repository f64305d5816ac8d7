use std::io::Read;

use serde::{Deserialize, Serialize};

use super::backtest::{BacktestReport, DayCurves, DayScore};
use crate::domain::TimeGrid;
use crate::error::{Result, SspError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = SspError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(SspError::InvalidConfig(format!(
                "unknown report format '{other}'"
            ))),
        }
    }
}

const SCORE_HEADER: [&str; 5] = ["date", "method", "rmae", "maxdiff", "mindiff"];

fn csv_error(e: csv::Error) -> SspError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    SspError::Parse {
        line,
        message: e.to_string(),
    }
}

/// Per-day scores as csv, or the whole report (with summary) as json.
pub fn emit_report(report: &BacktestReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(SCORE_HEADER).expect("writing to memory");
            for s in &report.scores {
                w.write_record([
                    s.date.to_string(),
                    s.method.to_string(),
                    s.rmae.to_string(),
                    s.maxdiff.to_string(),
                    s.mindiff.to_string(),
                ])
                .expect("writing to memory");
            }
            w.into_inner().expect("writing to memory")
        }
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            out
        }
    }
}

/// Reads back the csv written by [`emit_report`].
pub fn read_scores_csv(input: impl Read) -> Result<Vec<DayScore>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(SCORE_HEADER) {
        return Err(SspError::Parse {
            line: 1,
            message: format!("expected header {}", SCORE_HEADER.join(",")),
        });
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

/// Curve data for one day: `t,actual,<method>...`, one row per grid point.
pub fn emit_curves(curves: &DayCurves, grid: &TimeGrid) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string(), "actual".to_string()];
    header.extend(curves.predictions.iter().map(|(m, _)| m.to_string()));
    w.write_record(&header).expect("writing to memory");
    for (i, label) in grid.labels().iter().enumerate().take(curves.actual.len()) {
        let mut row = vec![
            label.format("%H:%M").to_string(),
            curves.actual[i].to_string(),
        ];
        row.extend(curves.predictions.iter().map(|(_, p)| p[i].to_string()));
        w.write_record(&row).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;
    use crate::evaluation::{BacktestConfig, Method, MethodSummary};

    fn report(scores: Vec<DayScore>) -> BacktestReport {
        BacktestReport {
            protocol: "perfect-temperature",
            methods: vec![Method::Ssp],
            summary: vec![MethodSummary {
                method: Method::Ssp,
                days: scores.len(),
                mean_rmae: 0.0,
                median_rmae: 0.0,
                wins: 0,
            }],
            scores,
            failures: vec![],
            config: BacktestConfig::default(),
            curves: vec![],
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let out = emit_report(&report(vec![]), ReportFormat::Csv);
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "date,method,rmae,maxdiff,mindiff\n"
        );
    }

    #[test]
    fn csv_roundtrip() {
        let row = DayScore {
            date: NaiveDate::from_ymd_opt(2010, 8, 25).unwrap(),
            method: Method::ConditionalKernel,
            rmae: 0.012_345_678_901_234_5,
            maxdiff: 37.125,
            mindiff: 11.020_000_000_000_001,
        };
        let out = emit_report(&report(vec![row.clone()]), ReportFormat::Csv);
        let back = read_scores_csv(out.as_slice()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].date, row.date);
        assert_eq!(back[0].method, row.method);
        assert!((back[0].rmae - row.rmae).abs() <= 1e-12);
        assert!((back[0].maxdiff - row.maxdiff).abs() <= 1e-12);
        assert!((back[0].mindiff - row.mindiff).abs() <= 1e-12);
    }

    #[test]
    fn malformed_csv() {
        assert!(read_scores_csv("a,b\n".as_bytes()).is_err());
        let bad = "date,method,rmae,maxdiff,mindiff\n2010-01-01,ssp,x,1,1\n";
        assert!(matches!(
            read_scores_csv(bad.as_bytes()),
            Err(SspError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn curves_layout() {
        let grid = TimeGrid::daily(2).unwrap();
        let c = DayCurves {
            date: NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
            actual: vec![1.0, 2.0],
            predictions: vec![
                (Method::Ssp, vec![1.5, 2.5]),
                (Method::Persistence, vec![1.0, 1.0]),
            ],
        };
        let text = String::from_utf8(emit_curves(&c, &grid)).unwrap();
        assert_eq!(
            text,
            "t,actual,ssp,persistence\n00:00,1,1.5,1\n12:00,2,2.5,1\n"
        );
    }

    #[test]
    fn format_names() {
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
