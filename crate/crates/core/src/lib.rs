//! Desk-scale numerical laboratory for the compressible isentropic
//! Euler–Boltzmann equations with vacuum.

pub mod blowup;
pub mod coefficients;
pub mod error;
pub mod grid;
pub mod hydro;
pub mod io;
pub mod picard;
pub mod quadrature;
pub mod run;
pub mod scenarios;
pub mod symhyp;
pub mod transport;

pub use error::{Error, Result};
