pub mod error;
pub mod estimate;
pub mod intset;
pub mod porosity0;
pub mod porosity_inf;
pub mod pretangent;
pub mod report;
pub mod scalar;
pub mod scaling;
pub mod setkit;
pub mod spec;
pub mod structure;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Exact, Log2, Magnitude, Mode, Scalar};
