pub mod bdg;
pub mod config;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod meanfield;
pub mod modes;
pub mod oracles;
pub mod units;

pub use error::{Error, Result};
