pub mod error;
pub mod agent;
pub mod cli;
pub mod env;
pub mod harness;
pub mod nn;
pub mod replay;

pub use error::{Error, Result};
