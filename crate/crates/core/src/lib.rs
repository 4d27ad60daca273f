//! Numerical laboratory for higher-order Riesz transforms on ℝ^d.
//!
//! Fields live on a periodic box ([`grid`]); Riesz transforms are applied as
//! Fourier multipliers and their truncations by direct lattice quadrature
//! ([`operators`]). On top of those sit the radial factorization operator
//! ([`factorization`]), averaging over SO(d) ([`averaging`]), the method of
//! rotations ([`rotations`]) and ratio sweeps across dimensions
//! ([`experiments`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod error;
pub mod experiments;
pub mod factorization;
pub mod grid;
pub mod harmonics;
pub mod numerics;
pub mod operators;
pub mod rotations;

pub use error::{Error, Result};
