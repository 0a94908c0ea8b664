//! Benchmark programs over the simulator: multi-seed run grids, summary
//! tables with derived reports, calibration search, export and persistence.

pub mod battery;
pub mod calibrate;
pub mod error;
pub mod spec;
pub mod store;
pub mod summary;

pub use battery::{battery_id, execute, run_battery, BatteryOutput};
pub use calibrate::{search, CalibrationReport, SearchSpec};
pub use error::{BenchError, Result};
pub use spec::{default_seeds, BatterySpec, Program, RowKey};
pub use summary::{export, Format, SummaryRow, SummaryTable};
