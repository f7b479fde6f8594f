//! Grey-box parameter estimation for a twin azimuth-thruster surface vessel.
//!
//! The crate covers the whole pipeline: a surge-decoupled 3-DOF ship model
//! driven by an azimuth-thruster actuation model ([`model`], [`actuation`]),
//! synthetic maneuver generation ([`synthgen`]), equation-error and
//! output-error estimators combined over growing maneuver sets
//! ([`estimation`]) on top of a small constrained least-squares engine
//! ([`nlp`]), and multi-horizon prediction validation ([`validation`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod estimation;
pub mod model;
pub mod nlp;
pub mod plot;
pub mod synthgen;
pub mod validation;

pub use error::{Error, Result};
