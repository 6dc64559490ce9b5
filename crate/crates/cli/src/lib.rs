//! Library side of the `pfkit` command: matrix literal parsing, the analysis
//! report, the randomized verification suite and parameter sweeps.

pub mod analyze;
pub mod parse;
pub mod report;
pub mod sweep;
pub mod verify;
