//! Non-homogeneous telegraph (run-and-tumble) process on the line.
//!
//! A particle moves with speed `c(t) = c₀ w(t)` and reverses direction at the
//! epochs of a Poisson stream with rate `λ(t)`. The crate provides
//!
//! - [`profiles`]: speed shapes, rates and the clock `τ(t) = ∫₀ᵗ w`;
//! - [`special`]: scaled modified Bessel functions;
//! - [`analytic`]: the exact law when `λ(t) = λ₀ w(t)`, its MSD and the
//!   long-time regimes;
//! - [`montecarlo`]: exact path simulation by thinning;
//! - [`pde`]: an upwind solver for the two-velocity transport system;
//! - [`fractional`]: the characteristic function of the space-fractional
//!   variant and its numerical inversion;
//! - [`stats`]: KS distances, L¹ distances and exponent fits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod fractional;
pub mod grid;
pub mod montecarlo;
pub mod numeric;
pub mod pde;
pub mod profiles;
pub mod special;
pub mod stats;

pub use analytic::TelegraphParams;
pub use error::{Error, Result};
pub use grid::{Atom, DensityGrid};
pub use profiles::{RateProfile, TimeProfile};
