//! Configuration, the outer adaptive loop, and report files.

mod config;
mod report;
mod run;

pub use config::{DarcyConfig, ExperimentConfig, MeshConfig, ProblemKind, ProfileConfig};
pub use report::{
    read_cgls_csv, read_report, write_cgls_csv, write_comparison_csv, write_energy_csv,
    write_field_csv, write_mesh_stats_csv, write_metric_csv, write_reports, write_tables,
};
pub use run::{
    build_forward, compare_anisotropy, effective_sigma, prepare_problem, run_outer_loop,
    run_problem, sample_field, CglsEntry, Comparison, ComparisonRow, EnergyEntry, ErrorMeter,
    IterationArtifacts, IterationReport, Problem, RunFailure, RunOutput, RunReport, StageTimes,
};
