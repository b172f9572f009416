pub mod billiard;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod group;
pub mod harmonics;
pub mod io;
pub mod mass;
pub mod polynomial;
pub mod quadrature;
pub mod stats;

pub use error::{Error, Result};
