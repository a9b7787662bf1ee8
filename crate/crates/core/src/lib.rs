//! Comb graphs over planar base graphs and the random-walk machinery used to
//! study collisions of two independent walkers on them: exact heat and Green
//! kernels, effective resistances, percolation clusters and seeded Monte
//! Carlo.

pub mod collisions;
pub mod error;
pub mod graph;
pub mod kernels;
pub mod linalg;
pub mod percolation;
pub mod resistance;
pub mod stats;
pub mod walker;

pub use error::{Error, Result};
