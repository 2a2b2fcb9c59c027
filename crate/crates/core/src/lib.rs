//! Exact finite models of projection lattices, the posets of their small
//! Boolean subalgebras, and presheaf computations over those posets.

pub mod automorphisms;
pub mod bsub;
pub mod cli;
pub mod daseinisation;
pub mod datasets;
pub mod error;
pub mod logic;
pub mod io;
pub mod matrix;
pub mod measures;
pub mod oml;
pub mod poset;
pub mod presheaf;
pub mod scalar;

pub use error::{Error, Result};
