pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod run;

pub use config::SimConfig;
pub use error::CliError;
pub use run::run_experiment;
