//! Configuration, file formats and command implementations behind the
//! `calderon` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod selftest;

pub use commands::{cmd_forward, cmd_reconstruct, cmd_scatter, cmd_stability, load_or_forward, ForwardData};
pub use config::{Overrides, RunConfig};
pub use error::{LabError, LabResult};
pub use selftest::cmd_selftest;
