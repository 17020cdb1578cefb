//! Wave-front length growth under integrable geodesic and Schrödinger flows
//! on surfaces of revolution and the flat torus.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actions;
pub mod cli;
pub mod error;
pub mod flow;
pub mod front;
pub mod geometry;
pub mod ode;
pub mod quad;
pub mod trig;
pub mod verify;

pub use error::{Error, Result};
