pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod fe_spaces;
pub mod interp;
pub mod mesh;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};

/// A point or vector in the plane.
pub type Point = [f64; 2];
