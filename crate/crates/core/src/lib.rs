pub mod basis;
pub mod error;
pub mod models;
pub mod numeric;
pub mod opinf;
pub mod snapshots;

pub use error::{Error, Result};
pub mod regsearch;
pub mod rom;
pub mod active;
pub mod experiment;
