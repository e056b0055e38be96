//! Least-squares regression on Markovian data streams.
//!
//! The crate simulates stochastic gradient methods on samples drawn from a
//! Markov chain rather than i.i.d.: plain tail-averaged SGD, SGD with data drop,
//! parallel interleaved SGD and SGD with experience replay. It also provides the
//! chain constructions, mixing-time computations and spectral checks used to
//! study them, plus a seeded experiment harness.

pub mod chain;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod regression;
pub mod rng;
pub mod sgd;
pub mod spectral;

pub use error::{Error, Result};
