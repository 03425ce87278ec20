//! Star bodies, the apex frame of a star-shaped density
//! `f(x) = e^{-ρ(‖x‖_K)}` and its convergence toward `φ_{n-1}` as `t → ∞`.
//!
//! At a boundary point `θ` with touching functional `φ`, let `Q` span
//! `null(φ)` and `H` be the Hessian of `q(x) = ‖Qx + θ‖_K` at 0. With
//! `Λ = √2 H^{-1/2}`, `T = QΛ`, `β(t) = √(t/(2ρ'(t)))` and
//! `α(t) = (2π)^{-(n-1)/2} e^{ρ(t)}`, the section `α(t) f(β(t) T x + tθ)`
//! tends to `φ_{n-1}(x)` locally uniformly.

mod body;
mod frame;
mod sweep;

pub use body::{BodyFamily, OrliczFn, StarBody};
pub use frame::{
    apex_frame, apex_frame_with_basis, star_frame_at, StarFrame, StarSection, CURVATURE_THRESHOLD, SMOOTHNESS_TOLERANCE,
    TOUCH_PROBES,
};
pub use sweep::{cross_validate_lp, star_convergence_sweep, CrossValidation};
