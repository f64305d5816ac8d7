//! Day metrics, rolling backtests and report files.

mod backtest;
mod metrics;
mod report;

pub use backtest::{
    backtest, sample_dates, BacktestConfig, BacktestReport, DateFailure, DayCurves, DayScore,
    Method, MethodSummary, PERFECT_TEMPERATURE_PROTOCOL,
};
pub use metrics::{rmae, score_day, score_values, DayMetrics};
pub use report::{emit_curves, emit_report, read_scores_csv, ReportFormat};
