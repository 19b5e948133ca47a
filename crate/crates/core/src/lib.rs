pub mod arith;
pub mod characters;
pub mod circle;
pub mod error;
pub mod experiments;
pub mod goldbach;
pub mod lemmas;
pub mod moments;
pub mod report;
pub mod step;
pub mod sum;
pub mod zeros;

pub use error::{Error, Result};
