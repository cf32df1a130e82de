//! Run configuration, BLAB1 snapshots and CSV result streams.

mod config;
mod results;
mod snapshot;

pub use config::{parse_config, Kind, RunConfig, Subcommand, Value, KEYS};
pub use results::{emit_csv, format_float, ResultRow, ResultWriter, CSV_HEADER};
pub use snapshot::{read_snapshot, read_state, write_snapshot, write_state, Snapshot};
