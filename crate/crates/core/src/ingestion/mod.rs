//! Raw load and temperature files to annotated daily records.

mod calendar;
mod forecast;
mod history;
mod readings;
mod segment;

pub use calendar::{annotate_calendar, parse_holidays, CalendarMeta, DayGroup, Holidays};
pub use forecast::{default_forecast_mask, parse_temperature_forecast, FORECAST_HOURS};
pub use history::{read_jsonl, write_jsonl, DailyRecord, HistoryWindow, Quality};
pub use readings::{parse_load_file, parse_temperature_history, parse_timestamp, Reading};
pub use segment::{
    segment_temperatures, segmentize, DiscardReason, DiscardedReading, FillKind, GapFill,
    GapPolicy, GapReport, Rejection, DEFAULT_MAX_GAP,
};
