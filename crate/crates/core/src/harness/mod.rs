//! Experiment orchestration: inputs, width schedules, seeded Monte Carlo
//! sweeps and CSV output.

pub mod config;
pub mod inputs;
pub mod output;
pub mod schedule;
pub mod seeds;
pub mod structure;
pub mod sweeps;

pub use config::{ExperimentKind, SweepConfig};
pub use inputs::{gen_pair_with_cosine, gen_unit_input};
pub use output::{Cell, Table, VERSION};
pub use schedule::{width_schedule, ScheduleKind, WidthSchedule};
pub use seeds::{derive_seed, CellSeeds};
pub use structure::{gaussian_blobs, run_structure_experiment, train_and_track, Dataset, Snapshot};
pub use sweeps::{
    run, run_dispersion_sweep, run_gd_step_experiment, run_nondiag_sweep, run_theory_eval, sample_diagonal,
    sample_gd_change, sample_pair,
};
