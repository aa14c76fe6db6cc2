//! Experiment harness: datasets, stratified cross-validation, grid search
//! over model and system parameters, and decision-boundary rasters.

mod cv;
mod dataset;
mod grid;
mod raster;
mod synthetic;

pub use cv::{accuracy, confusion, stratified_kfold, Fold, LinearBaseline};
pub use dataset::{load_csv, read_csv, read_feature_rows, CsvLoad, Dataset};
pub use grid::{
    learner_from_params, system_from_params, ComboResult, EvalReport, GridSearch, GridSpec, Stage, AGENT_EPOCHS,
    DEFAULT_FOLDS, DEFAULT_STANDALONE_EPOCHS, REPORT_VERSION,
};
pub use raster::{boundary_raster, default_ranges, Raster, DEFAULT_MARGIN, DEFAULT_RESOLUTION};
pub use synthetic::{make_synthetic, SyntheticKind};
