//! Config-driven experiments: rank sweeps and convergence traces.

pub mod config;
pub mod csv;
pub mod runner;

pub use config::{parse_config, parse_echo, ReceiverKind, SimConfig};
pub use csv::{render_csv, write_csv, HEADER};
pub use runner::{
    paired_post_training_ber, run_convergence, run_rank_sweep, to_db, Experiment, ResultRow,
};
