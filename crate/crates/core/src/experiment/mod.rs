//! Seeded batch studies of the approximation error, plus landscape and
//! resource tables. Samples run in parallel and are folded in index order, so
//! every output is reproducible from the config alone.

mod config;
mod dumps;
mod output;
mod study;

pub use config::{ExperimentConfig, Study, DESK_SAMPLES, FULL_SCALE_SAMPLES};
pub use dumps::{dump_landscapes, dump_resources, LandscapeDump};
pub use output::{
    write_gap_bins_csv, write_landscape_dump, write_metric_csv, write_resources_csv,
    write_samples_csv, write_study_outputs, Manifest,
};
pub use study::{
    r_star, run_constrained_study, run_gap_binning, run_generic_study, run_partition_study,
    run_study, GapBin, GapBinning, MetricRow, MetricsReport, SampleRecord, Stat,
};
