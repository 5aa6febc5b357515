pub mod analysis;
pub mod error;
pub mod geometry;
pub mod noise;
pub mod operator;
pub mod spin_model;

pub use error::{Error, Result};
