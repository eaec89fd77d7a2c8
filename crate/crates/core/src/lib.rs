//! reslab-core: the resonance method for exponential sums with positive
//! coefficients, applied to the classical arithmetic error terms.
//!
//! The crate is organized as a pipeline:
//!
//! * [`arith`] sieves d(n), r(n), d_k(n), omega(n) and squarefree flags and
//!   computes the exact error terms Delta(x), P(x), Delta_k(x) that every
//!   series is checked against.
//! * [`series`] builds the truncated exponential sums (Voronoi divisor
//!   series, circle series, smoothed Piltz series, Lau-Tsang sums) and
//!   evaluates them with double-double phase reduction.
//! * [`resonator`] constructs the resonating frequency set M and evaluates
//!   R(x) both as an Euler product and as a truncated support sum.
//! * [`kernel`] implements the Fejér-type convolution identity with an
//!   independent quadrature route for verification.
//! * [`engine`] assembles I2, the lower-bound prediction, parallel maximum
//!   scans, and growth reporting.
//! * [`verify`] packages each module's invariants as executable suites for
//!   the CLI.

// Validations use `!(x > 0.0)` so that NaN fails them; `x <= 0.0` would
// wave NaN through. Divisibility tests stay in `n % p == 0` form.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::manual_is_multiple_of)]

pub mod arith;
pub mod dd;
mod error;
pub mod engine;
pub mod kernel;
pub mod resonator;
pub mod series;
pub mod verify;

pub use error::{Error, Result};
