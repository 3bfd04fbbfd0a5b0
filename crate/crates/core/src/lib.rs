//! Impedance-based small-signal stability analysis of converter/grid interconnections.

pub mod analysis;
pub mod config;
pub mod criteria;
pub mod cli;
pub mod error;
pub mod frames;
pub mod io;
pub mod logderiv;
pub mod models;
pub mod ratfun;
pub mod ratmatrix;
pub mod schur;
pub mod smform;
pub mod statespace;
pub mod synth;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
