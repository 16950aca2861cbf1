//! The subcommands, as library functions so they can be tested directly.

mod analyze;
mod paper;
mod route;
mod simulate;

pub use analyze::{cmd_analyze, load_datasets, scaling_table, AnalyzeOptions, AnalyzeOutcome};
pub use paper::{
    cmd_reproduce_paper, CalibrationRow, IntervalComparison, ModelComparison, PaperReport,
    VariantComparison, CI_TOLERANCE, R_SQUARED_TOLERANCE,
};
pub use route::{cmd_route, RouteReport};
pub use simulate::{
    cmd_simulate, dataset_file_name, Manifest, ManifestEntry, SimulateOutcome, MANIFEST,
};
