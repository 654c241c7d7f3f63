pub mod cli;
pub mod designs;
pub mod error;
pub mod geometry;
pub mod global_stat;
pub mod gof;
pub mod projdist;
pub mod radar;
pub mod render;
mod seed;

pub use error::{Error, Result};
