//! Approximation of continuous functions by finite-degree polynomials
//! composed with homeomorphisms.
//!
//! A continuous piecewise strictly monotone function `f` on a compact
//! interval factors exactly as `f = p ∘ h`, where `p` is a polynomial of
//! degree `M + 1` (`M` = number of interior extrema) and `h` is a
//! homeomorphism of the domain. This crate provides both an exact
//! constructive path and a learned path:
//!
//! - [`critical`] detects the extremal structure of a sampled function
//!   (point extrema and plateaus) and validates value alternation.
//! - [`construct`] builds the minimal-degree polynomial with prescribed
//!   alternating node values and assembles the exact piecewise
//!   homeomorphism.
//! - [`invnet`] implements an invertible residual network (spectrally
//!   normalized residual blocks) usable as a learned homeomorphism in any
//!   dimension.
//! - [`fit`] trains the composed model `p ∘ h` by alternating a linear
//!   least-squares solve for the polynomial coefficients with gradient
//!   steps on the network (variable projection).
//! - [`poly`] and [`linalg`] supply the shared polynomial and rank-aware
//!   least-squares machinery; [`targets`] defines the benchmark functions
//!   and dataset generation.

pub mod construct;
pub mod critical;
pub mod error;
pub mod fit;
pub mod invnet;
pub mod linalg;
pub mod poly;
mod simd;
pub mod targets;

pub use error::{Error, Result};
