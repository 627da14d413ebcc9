//! Finite-difference solver for the time-tempered fractional Feynman-Kac
//! equation: convolution-quadrature coefficients, the Riesz operator, the
//! time stepper, and analytic oracles for verification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fracops;
pub mod par;
pub mod problems;
pub mod riesz;
pub mod solver;
pub mod spectral;
pub mod substantial;

pub use error::{Error, Result};
pub use fracops::{SchemeOrder, WeightKind, WeightTable};
pub use problems::{ProblemSpec, Source, SourceExponent};
pub use riesz::{assemble_riesz, RieszOperator};
pub use solver::{FunctionalWeight, Grid, PhysicalParams, TimeGrid};
