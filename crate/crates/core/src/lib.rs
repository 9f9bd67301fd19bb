pub mod asymptotics;
pub mod chain;
pub mod cost;
pub mod error;
pub mod games;
pub mod montecarlo;
pub mod phase;
pub mod poly;
pub mod ratfn;
pub mod roots;
pub mod validation;

pub use error::{Error, Result};
