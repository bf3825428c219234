//! UL/DL electromagnetic-field exposure and SINR coverage in Poisson-Voronoi
//! cellular networks with fractional uplink power control.
//!
//! The [`analytic`] module evaluates the metrics in closed form up to one
//! characteristic-function inversion, and [`simulate`] estimates the same
//! metrics by Monte-Carlo sampling of whole networks. [`scenarios`] sweeps
//! them over BS or UE density, and [`metric`] names them for front ends.
//!
//! ```
//! use emf_sg::analytic::{Analytic, AnalyticOptions};
//! use emf_sg::units::{db_to_linear, NetworkParams};
//!
//! let a = Analytic::new(&NetworkParams::default(), AnalyticOptions::default()).unwrap();
//! let p = a.coverage_dl(&[db_to_linear(0.0)]).unwrap();
//! assert!(p.values[0] > 0.0 && p.values[0] < 1.0);
//! ```
//!
//! The guide in `book/` walks through each part; its examples run as doctests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod curve;
pub mod error;
pub mod geometry;
pub mod metric;
pub mod gilpelaez;
pub mod quadrature;
pub mod scenarios;
pub mod simulate;
pub mod special;
pub mod analytic;
pub mod cli;
pub mod units;

pub use error::{Error, Result};

/// Complex scalar used for characteristic-function values.
pub type Complex = num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/analytic.md")]
    mod analytic {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    mod numerics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
