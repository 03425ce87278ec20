//! One-dimensional convex profiles `g`, radial profiles `ρ`, the smoothness
//! modulus `ξ_g` and the hypothesis diagnostics built on them.

mod conditions;
mod convex;
mod modulus;
mod radial;

pub use conditions::{
    check_product_conditions, check_radial_conditions, Condition, ConditionCheck, ConditionReport,
    RadialDiagnostics, RADIAL_GROWTH_FACTOR,
};
pub use convex::{ConvexProfile, CustomProfile, ProfileFamily, ScalarFn, DEFAULT_SAMPLE_POINTS};
pub use modulus::{closed_form_xi, modulus_report, modulus_xi, ModulusReport, S_POINTS, WINDOW, W_POINTS};
pub use radial::{CustomRadial, RadialFamily, RadialProfile};
