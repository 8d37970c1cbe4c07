//! Problem generation and seeded recovery sweeps, with their file formats.

mod io;
mod problem;
mod sweep;

pub use io::{
    format_matrix, format_real, format_vector, parse_matrix, parse_vector, read_json, read_matrix, read_vector,
    write_json, write_matrix, write_vector,
};
pub use problem::{generate_problem, generate_problem_with, Ensemble, ProblemSpec, TruthModel};
pub use sweep::{
    env_seed, rows_to_csv, run_sweep, trial_seed, Grid, RegularizerRef, SweepConfig, SweepRow, CSV_HEADER, SEED_ENV,
};
