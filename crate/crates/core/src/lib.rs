#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Worst-case versus average-case perturbation sensitivity.
//!
//! The crate estimates and certifies spectral lower bounds on the ratio
//! between the induced `‖A‖_{p,q}` norm of a linear map (or the Jacobian of a
//! nonlinear one) and its average norm distortion `E‖Au‖_q` over the unit
//! ℓ_p sphere. Around that core sit closed-form universal robustness bounds,
//! transport-based adversarial errors between empirical samples, and exact
//! solvers for small distributionally-robust minimizations.

pub mod and_analysis;
pub mod bounds;
pub mod dro;
pub mod error;
pub mod fluctuation;
pub mod induced;
pub mod lp;
pub mod matrix;
pub mod numerics;
pub mod rng;
pub mod spectral;
mod stats;
pub mod transport;

pub use error::{Error, Result};
pub use lp::{Exponent, LpSpace, Surface};
pub use matrix::Matrix;
pub use rng::SeededRng;
