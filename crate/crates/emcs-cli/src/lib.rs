//! Text-format parsing and report generation for the `emcs` command-line
//! driver. The binary in `main.rs` is a thin clap layer over these modules
//! and `emcs-core`.

pub mod parse;
pub mod report;

pub use parse::{observations_to_text, parse_observations, parse_system, ParseError, SystemDescription};
