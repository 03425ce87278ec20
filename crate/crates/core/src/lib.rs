//! Gaussian approximation of non-central hyperplane sections of log-concave
//! product densities and of star-shaped densities.
//!
//! The crate is organised around the two constructions:
//!
//! * [`product`]: the apex of `exp(-Σ g_i)` on `{⟨x, θ⟩ = T}`, the whitening
//!   embedding `Q` and normalizer `α`, and the error against `φ_{n-1}`.
//! * [`star`]: gauges of star bodies, the apex Hessian and the local-ellipsoid
//!   map `Λ`, and convergence sweeps for `exp(-ρ(‖x‖_K))`.
//!
//! [`profiles`] supplies the one-dimensional inputs and hypothesis checks,
//! [`comparison`] the shared error metrics and [`conditional`] the law of
//! `X + 2Y` given `X + Y = T`.

pub mod comparison;
pub mod conditional;
pub mod error;
mod fd;
pub mod product;
pub mod profiles;
pub mod quadrature;
mod roots;
pub mod star;

pub use error::{Error, Result};
