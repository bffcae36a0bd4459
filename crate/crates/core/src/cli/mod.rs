//! Run configuration, built-in scenarios, field files and the proximal map.

pub mod config;
pub mod io;
pub mod prox;
pub mod run;
pub mod scenario;

pub use config::RunConfig;
pub use io::{read_field, write_field, FieldFormat, FieldMeta, Quantity};
pub use prox::{wasserstein_prox, ProxOutcome};
pub use run::{run_scenario, RunReport};
pub use scenario::Scenario;
