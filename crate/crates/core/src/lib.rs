//! Exact-arithmetic experiments on step-isometries, random graphs on dense
//! subsets of normed spaces, and the ball geometry that decides continuity.

pub mod back_forth;
pub mod balls;
pub mod davis;
pub mod dense_sets;
pub mod error;
pub mod exec;
pub mod graph;
pub mod numerics;
pub mod rng;
pub mod step_iso;
pub mod suite;

pub use error::{Error, Result};
pub use exec::Exec;
pub use numerics::{NormSpec, Rational, Vector};
