//! Configuration, orchestration and table output for the `spatial-witness`
//! binary.

pub mod config;
pub mod error;
pub mod figures;
pub mod run;
pub mod table;

pub use config::RunConfig;
pub use error::CliError;
pub use run::run;
pub use table::Table;
