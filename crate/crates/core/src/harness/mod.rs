//! Experiment engine: seeded multi-run simulations, CSV and SVG output,
//! parameter sweeps and the acceptance suite.

pub mod acceptance;
mod config;
mod engine;
mod summary;
mod sweep;

pub use acceptance::{accept, run_criterion, AcceptanceReport, CriterionResult, Scale, Suite, Verdict};
pub use config::{geometric_checkpoints, Component, ExperimentConfig, InitRule, ProblemDescriptor, WStarRule};
pub use engine::{run_experiment, run_seed, series_names, ExperimentResult};
pub use summary::{read_summary_csv, render_svg, write_rows, RunSummary, SeriesMetadata, Stats, SummaryRow};
pub use sweep::{
    apply_cell, cell_name, grid_cells, grid_from_json_str, set_path, sweep, Grid, SweepCell, SweepIndex,
    DEFAULT_MAX_CELLS,
};
