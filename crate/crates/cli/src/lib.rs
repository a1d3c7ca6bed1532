//! File formats, experiment harnesses and the command line for `mixgm`.

pub mod error;
pub mod experiments;
pub mod graphs;
pub mod io;
pub mod model_file;

pub use error::{CliError, Result};
