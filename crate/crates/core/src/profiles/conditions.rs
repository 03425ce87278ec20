//! Diagnostics for the growth hypotheses of the two section theorems.

use super::convex::ConvexProfile;
use super::radial::RadialProfile;
use crate::error::{Error, Result};

/// Which hypothesis a [`ConditionCheck`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Comparable derivatives: `g_j'(t/σ) < |g_i'(±t)| < g_j'(σt)`.
    B1,
    /// Superlinear growth of the derivative: `g_i''(t) > ω·|g_i'(t)|/|t|`.
    B2,
    /// `t ρ'(t)` increasing to large values.
    RadialGrowth,
    /// `sup_{|s|<r/ρ'(t)} |ρ''(t+s)|/ρ'(t)^2` decreasing toward 0.
    RadialFlatness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub condition: Condition,
    /// Grid abscissa (signed for `B1`/`B2`).
    pub t: f64,
    /// Profile indices `(i, j)` involved; `j == i` for single-profile checks.
    pub indices: (usize, usize),
    /// Quantity being compared (left side minus right side where it applies).
    pub value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_violation(&self) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn violations(&self, condition: Condition) -> usize {
        self.checks
            .iter()
            .filter(|c| c.condition == condition && !c.passed)
            .count()
    }
}

/// Checks the comparability condition (b1) for every ordered pair of
/// profiles and the growth condition (b2) for every profile, at both signs of
/// every grid abscissa.
///
/// Both are read on magnitudes, since `g'` changes sign with `t`.
pub fn check_product_conditions(
    profiles: &[ConvexProfile],
    sigma: f64,
    omega: f64,
    t0: f64,
    t_grid: &[f64],
) -> Result<ConditionReport> {
    if !(sigma > 1.0) {
        return Err(Error::invalid(format!("σ must exceed 1, got {sigma}")));
    }
    if !(omega > 0.0) {
        return Err(Error::invalid(format!("ω must be positive, got {omega}")));
    }
    if let Some(t) = t_grid.iter().find(|t| !(t.abs() > t0)) {
        return Err(Error::invalid(format!("grid point {t} does not satisfy |t| > t0 = {t0}")));
    }
    let mut report = ConditionReport::default();
    for &t in t_grid {
        let a = t.abs();
        for sign in [1.0, -1.0] {
            let ts = sign * a;
            for (i, gi) in profiles.iter().enumerate() {
                let di = gi.eval(ts, 1)?.abs();
                for (j, gj) in profiles.iter().enumerate() {
                    let lower = gj.eval(a / sigma, 1)?;
                    let upper = gj.eval(a * sigma, 1)?;
                    let passed = lower < di && di < upper;
                    report.checks.push(ConditionCheck {
                        condition: Condition::B1,
                        t: ts,
                        indices: (i, j),
                        value: if di <= lower { di - lower } else { di - upper },
                        passed,
                    });
                }
                let d2 = gi.eval(ts, 2)?;
                let rhs = omega * di / a;
                report.checks.push(ConditionCheck {
                    condition: Condition::B2,
                    t: ts,
                    indices: (i, i),
                    value: d2 - rhs,
                    passed: d2 > rhs,
                });
            }
        }
    }
    Ok(report)
}

/// Samples per grid point for the inner sup over `s`.
const RADIAL_S_POINTS: usize = 33;

/// Growth factor `t ρ'(t)` must reach relative to `r²` at the last grid
/// point to count as "large".
pub const RADIAL_GROWTH_FACTOR: f64 = 10.0;

/// Per-grid-point values reported by [`check_radial_conditions`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDiagnostics {
    pub t: Vec<f64>,
    /// `t ρ'(t)`.
    pub growth: Vec<f64>,
    /// `sup_{|s|<r/ρ'(t)} |ρ''(t+s)| / ρ'(t)^2`.
    pub flatness: Vec<f64>,
    pub report: ConditionReport,
}

impl RadialDiagnostics {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

/// Growth and flatness of the radial profile along an increasing grid.
///
/// Passes iff `t ρ'(t)` is strictly increasing and ends above
/// `10·max(r², 1)`, and the flatness ratio is non-increasing and ends below
/// its starting value (or at exactly zero).
pub fn check_radial_conditions(rho: &RadialProfile, r: f64, t_grid: &[f64]) -> Result<RadialDiagnostics> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("t grid must be non-empty and strictly increasing"));
    }
    let mut growth = Vec::with_capacity(t_grid.len());
    let mut flatness = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let d1 = rho.eval(t, 1)?;
        if !(d1 > 0.0) {
            return Err(Error::domain(format!("ρ'({t}) = {d1} is not positive")));
        }
        growth.push(t * d1);
        let delta = r / d1;
        let mut sup: f64 = 0.0;
        for k in 0..RADIAL_S_POINTS {
            let s = -delta + 2.0 * delta * k as f64 / (RADIAL_S_POINTS - 1) as f64;
            let ts = t + s;
            if ts < 0.0 {
                continue;
            }
            sup = sup.max(rho.eval(ts, 2)?.abs() / (d1 * d1));
        }
        flatness.push(sup);
    }

    let mut report = ConditionReport::default();
    let last = t_grid.len() - 1;
    for k in 0..=last {
        let increasing = k == 0 || growth[k] > growth[k - 1];
        let large = k < last || growth[k] >= RADIAL_GROWTH_FACTOR * (r * r).max(1.0);
        report.checks.push(ConditionCheck {
            condition: Condition::RadialGrowth,
            t: t_grid[k],
            indices: (0, 0),
            value: growth[k],
            passed: increasing && large,
        });
        let non_increasing = k == 0 || flatness[k] <= flatness[k - 1];
        let shrinks = k < last || flatness[k] == 0.0 || flatness[k] < flatness[0];
        report.checks.push(ConditionCheck {
            condition: Condition::RadialFlatness,
            t: t_grid[k],
            indices: (0, 0),
            value: flatness[k],
            passed: non_increasing && shrinks,
        });
    }
    Ok(RadialDiagnostics {
        t: t_grid.to_vec(),
        growth,
        flatness,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn power(p: f64) -> ConvexProfile {
        ConvexProfile::power(p).unwrap()
    }

    #[test]
    fn equal_power_profiles_pass() {
        let profiles = vec![power(4.0); 3];
        let rep = check_product_conditions(&profiles, 1.5, 2.0, 1.0, &[2.0, 5.0, 10.0]).unwrap();
        assert!(rep.passed());
        assert!(rep.first_violation().is_none());
    }

    #[test]
    fn mismatched_growth_fails_b1() {
        let profiles = vec![power(2.0), power(4.0)];
        let rep = check_product_conditions(&profiles, 2.0, 0.5, 1.0, &[100.0]).unwrap();
        assert!(!rep.passed());
        assert_eq!(rep.first_violation().unwrap().condition, Condition::B1);
        assert_eq!(rep.violations(Condition::B2), 0);
    }

    #[test]
    fn gaussian_passes_b2_with_margin() {
        let profiles = vec![ConvexProfile::gaussian(); 2];
        let rep = check_product_conditions(&profiles, 1.1, 0.9, 1.0, &[3.0, 30.0]).unwrap();
        assert!(rep.passed());
        // t g''/g' = 1 exactly, so ω = 1 must fail.
        let rep = check_product_conditions(&profiles, 1.1, 1.0, 1.0, &[3.0]).unwrap();
        assert_eq!(rep.first_violation().unwrap().condition, Condition::B2);
    }

    #[test]
    fn grid_must_clear_t0() {
        let profiles = vec![power(3.0); 2];
        assert!(check_product_conditions(&profiles, 1.5, 1.0, 2.0, &[1.0]).is_err());
    }

    #[test]
    fn radial_power_passes() {
        let rho = RadialProfile::power(3.0).unwrap();
        let d = check_radial_conditions(&rho, 2.0, &[2.0, 4.0, 8.0, 16.0]).unwrap();
        assert!(d.passed());
        for (t, f) in d.t.iter().zip(&d.flatness) {
            // ρ''/ρ'^2 = (p-1)/(p t^p) up to the s-perturbation.
            let leading = 2.0 / (3.0 * t.powi(3));
            assert!(*f >= leading && *f < 1.8 * leading, "t={t} f={f}");
        }
    }

    #[test]
    fn radial_log_fails() {
        let rho = RadialProfile::custom(
            "log1p",
            Arc::new(|t: f64| t.ln_1p()),
            Arc::new(|t: f64| 1.0 / (1.0 + t)),
            Arc::new(|t: f64| -1.0 / ((1.0 + t) * (1.0 + t))),
            0.0,
            &[1.0, 10.0],
        )
        .unwrap();
        let d = check_radial_conditions(&rho, 1.0, &[10.0, 100.0, 1000.0]).unwrap();
        assert!(!d.passed());
        assert!(d.growth.iter().all(|g| *g < 1.0));
    }

    #[test]
    fn radial_exp_passes() {
        let d = check_radial_conditions(&RadialProfile::exp(), 1.0, &[2.0, 4.0, 8.0]).unwrap();
        assert!(d.passed());
    }
}
