//! Simulation and numerical-verification toolkit for the K4-free random
//! greedy process.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bits;
pub mod error;
pub mod graph;
pub mod greedy;
pub mod harness;
pub mod ode;
pub mod ramsey;
pub mod rng;
pub mod staged;
pub mod stats;
pub mod survival;
pub mod trajectory;

pub use error::{Error, Result};
pub use graph::{EdgeClass, EdgeId, Graph};
pub use trajectory::{solve_ode, TrajectoryTable};
