//! Deep thermalization in brick-wall random circuits: exact statevector
//! simulation of projected ensembles, their frame potentials, Haar baselines,
//! a permutation stat-mech oracle and closed-form predictions.
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod haar;
pub mod perm;
pub mod projected;
pub mod seed;
pub mod statevector;
pub mod statmech;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
