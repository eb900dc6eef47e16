//! Convolution quadrature and L1 time stepping for fractional evolution
//! equations `∂_t^α u = A u + f`, together with the symbol, stability and
//! regularity diagnostics used to check discrete maximal ℓ^p regularity.
//!
//! Module map:
//! - [`special`]: gamma, principal powers, polylogarithm on the unit circle,
//!   Mittag-Leffler, Caputo derivative of monomials
//! - [`weights`]: quadrature weight tables
//! - [`symbols`]: generating symbols δ(ξ), sector margins, stability bounds
//! - [`operators`]: model operators, numerical radius, resolvent scans
//! - [`solvers`]: time steppers and discrete norms
//! - [`harness`]: convergence, regularity, decay and stability studies

pub mod error;
pub mod harness;
pub(crate) mod linalg;
pub mod operators;
pub mod order;
pub mod solvers;
pub mod special;
pub mod symbols;
pub mod weights;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use order::{FracOrder, Regime};
