pub mod cli;
pub mod constraints;
pub mod error;
pub mod geometry;
pub mod homotopy;
pub mod optimize;
mod parallel;
pub mod polysys;
pub mod pomdp;

pub use error::{Error, Result};
