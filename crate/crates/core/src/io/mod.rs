//! Run configuration, snapshot files and diagnostic CSV output.

pub mod config;
pub mod csv;
pub mod snapshot;

pub use config::{parse_config, RunConfig};
pub use csv::{write_diagnostics, CsvSink, CSV_HEADER};
pub use snapshot::{read_snapshot, write_snapshot};
