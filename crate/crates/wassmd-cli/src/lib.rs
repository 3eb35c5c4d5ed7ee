//! Library side of the experiment runner: config parsing, execution and
//! the runtime verification suite. The `wassmd` binary is a thin shell
//! around these modules.

pub mod config;
pub mod runner;
pub mod table;
pub mod verify;
