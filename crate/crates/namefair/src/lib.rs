//! File formats, data pipelines and the `namefair` command line on top of
//! `namefair-core`.

pub mod cli;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod spec;

pub use error::{CliError, Result};
pub use spec::ExperimentSpec;
