pub mod analyze;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod mem;
pub mod model;
pub mod oracle;
pub mod prior;
pub mod report;
pub mod sim;
pub mod validate;

pub use error::{Error, Result};
