//! The third-order smoothness modulus
//!
//! ```text
//! ξ_g(r, t) = sup { |g'''(w+s)| / g''(w)^{3/2} : |w| ≥ t, |s| ≤ r·g''(w)^{-1/2} }
//! ```
//!
//! measures how far `g` is from its quadratic Taylor polynomial on the
//! natural length scale `g''(w)^{-1/2}`. The sup over the unbounded set
//! `|w| ≥ t` is taken over the window `t ≤ |w| ≤ 10³·t`; if the objective is
//! still climbing at the outer edge the search reports [`Error::NonDecay`]
//! instead of silently truncating.

use rayon::prelude::*;

use super::convex::{falling_factorial, ConvexProfile, ProfileFamily};
use crate::error::{Error, Result};

/// Log-spaced `w` samples per sign.
pub const W_POINTS: usize = 512;
/// `s` samples per `w`.
pub const S_POINTS: usize = 33;
/// Outer edge of the `w` window relative to `t`.
pub const WINDOW: f64 = 1e3;
/// Refinement factor of the second pass around the argmax.
pub const REFINE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusReport {
    pub r: f64,
    pub t: f64,
    pub xi: f64,
    /// Location of the sup (`w`, `s`); `NaN` when `xi` is infinite.
    pub argmax: (f64, f64),
    /// Closed-form value for the builtin families where one is available.
    pub closed_form: Option<f64>,
    /// For `power(p)`: the radius `t^{p/2}/4` below which `ξ·t^{p/2} ≤ 2`.
    pub r_max: Option<f64>,
    /// For `power(p)`: the envelope `2 t^{-p/2}`.
    pub bound_power: Option<f64>,
}

/// `ξ_g(r, t)` by grid search.
pub fn modulus_xi(profile: &ConvexProfile, r: f64, t: f64) -> Result<f64> {
    Ok(modulus_report(profile, r, t)?.xi)
}

pub fn modulus_report(profile: &ConvexProfile, r: f64, t: f64) -> Result<ModulusReport> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("modulus radius r must be positive, got {r}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("modulus offset t must be positive, got {t}")));
    }
    let (r_max, bound_power) = match profile.family() {
        ProfileFamily::Power(p) => (Some(t.powf(p / 2.0) / 4.0), Some(2.0 * t.powf(-p / 2.0))),
        _ => (None, None),
    };
    let closed_form = closed_form_xi(profile, r, t);
    let mut report = ModulusReport {
        r,
        t,
        xi: 0.0,
        argmax: (t, 0.0),
        closed_form,
        r_max,
        bound_power,
    };
    if profile.is_quadratic() {
        return Ok(report);
    }

    let ratio = WINDOW.powf(1.0 / (W_POINTS - 1) as f64);
    let mut best = (f64::NEG_INFINITY, t, 0.0);
    for sign in [1.0, -1.0] {
        let ws: Vec<f64> = (0..W_POINTS)
            .map(|k| {
                if k == W_POINTS - 1 {
                    sign * t * WINDOW
                } else {
                    sign * t * ratio.powi(k as i32)
                }
            })
            .collect();
        let column: Vec<Result<(f64, f64)>> = ws
            .par_iter()
            .map(|&w| sup_over_s(profile, r, w, S_POINTS))
            .collect();
        let mut values = Vec::with_capacity(W_POINTS);
        for (w, res) in ws.iter().zip(column) {
            let (v, s) = res?;
            if v == f64::INFINITY {
                report.xi = f64::INFINITY;
                report.argmax = (f64::NAN, f64::NAN);
                return Ok(report);
            }
            values.push(v);
            if v > best.0 {
                best = (v, *w, s);
            }
        }
        let last = W_POINTS - 1;
        let side_max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if values[last] > 0.0
            && values[last] >= side_max
            && values[last] > values[last - 1] * (1.0 + 1e-12)
        {
            return Err(Error::NonDecay { w: ws[last] });
        }
    }

    // Second pass: 10× finer in both w (log scale) and s around the argmax.
    let (_, w_best, _) = best;
    let sign = w_best.signum();
    let lw = (w_best.abs() / ratio).max(t).ln();
    let hw = (w_best.abs() * ratio).min(t * WINDOW).ln();
    let fine = 2 * REFINE;
    let refined: Vec<Result<(f64, f64, f64)>> = (0..=fine)
        .into_par_iter()
        .map(|k| {
            let w = sign * (lw + (hw - lw) * k as f64 / fine as f64).exp();
            sup_over_s(profile, r, w, (S_POINTS - 1) * REFINE + 1).map(|(v, s)| (v, w, s))
        })
        .collect();
    for res in refined {
        let (v, w, s) = res?;
        if v > best.0 {
            best = (v, w, s);
        }
    }
    report.xi = best.0.max(0.0);
    report.argmax = (best.1, best.2);
    Ok(report)
}

/// `max_s |g'''(w+s)| / g''(w)^{3/2}` over `points` equally spaced `s` in
/// `[-δ, δ]`, `δ = r·g''(w)^{-1/2}`. Returns the value and its `s`.
fn sup_over_s(profile: &ConvexProfile, r: f64, w: f64, points: usize) -> Result<(f64, f64)> {
    let g2 = profile.eval(w, 2)?;
    if !(g2 > 0.0) {
        return Err(Error::domain(format!("g''({w}) = {g2} is not positive")));
    }
    let ln_g2 = profile.ln_abs_eval(w, 2)?;
    let delta = r * (-0.5 * ln_g2).exp();
    let (lo, hi) = (w - delta, w + delta);
    if lo <= 0.0 && hi >= 0.0 {
        let singular = match profile.eval(0.0, 3) {
            Ok(v) => !v.is_finite(),
            Err(_) => true,
        };
        if singular {
            return Ok((f64::INFINITY, -w));
        }
    }
    let mut best = (f64::NEG_INFINITY, 0.0);
    for j in 0..points {
        let s = -delta + 2.0 * delta * j as f64 / (points - 1) as f64;
        let ln_g3 = profile.ln_abs_eval(w + s, 3)?;
        let v = (ln_g3 - 1.5 * ln_g2).exp();
        if v.is_nan() {
            return Err(Error::domain(format!("modulus objective is NaN at w = {w}, s = {s}")));
        }
        if v > best.0 {
            best = (v, s);
        }
    }
    Ok(best)
}

/// Closed-form `ξ` for the builtin families.
///
/// For `power(p)` the objective at the worst `s` is `t^{-p/2}·|1 ± a t^{-p/2}|^{p-3}`
/// times a constant, decreasing in `t`, so the sup sits at `|w| = t`. The same
/// holds for `cosh` once `t ≥ 2`; below that the closed form is not offered.
pub fn closed_form_xi(profile: &ConvexProfile, r: f64, t: f64) -> Option<f64> {
    match *profile.family() {
        ProfileFamily::Gaussian => Some(0.0),
        ProfileFamily::Power(2.0) => Some(0.0),
        ProfileFamily::Power(p) => {
            let c2 = falling_factorial(p, 2);
            let c3 = falling_factorial(p, 3).abs();
            let a = r * t.powf(-p / 2.0) / c2.sqrt();
            let shift = if p >= 3.0 { 1.0 + a } else { 1.0 - a };
            if shift <= 0.0 {
                return Some(f64::INFINITY);
            }
            Some(c3 / c2.powf(1.5) * t.powf(-p / 2.0) * shift.powf(p - 3.0))
        }
        ProfileFamily::Cosh if t >= 2.0 => {
            let g2 = 2.0 * t.cosh();
            let delta = r / g2.sqrt();
            Some(2.0 * (t + delta).sinh() / g2.powf(1.5))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn gaussian_vanishes() {
        let xi = modulus_xi(&ConvexProfile::gaussian(), 5.0, 1.0).unwrap();
        assert_eq!(xi, 0.0);
    }

    #[test]
    fn grid_matches_closed_form() {
        for (prof, r, t) in [
            (ConvexProfile::power(4.0).unwrap(), 1.0, 10.0),
            (ConvexProfile::power(1.5).unwrap(), 0.5, 6.0),
            (ConvexProfile::power(3.0).unwrap(), 2.0, 3.0),
            (ConvexProfile::power(2.5).unwrap(), 1.0, 4.0),
            (ConvexProfile::cosh(), 1.0, 5.0),
            (ConvexProfile::cosh(), 0.3, 2.0),
        ] {
            let rep = modulus_report(&prof, r, t).unwrap();
            let cf = rep.closed_form.unwrap();
            assert!(
                (rep.xi - cf).abs() <= 1e-9 * cf,
                "{prof} r={r} t={t}: grid {} closed {cf}",
                rep.xi
            );
        }
    }

    #[test]
    fn crossing_a_singularity_is_infinite() {
        // δ = r·g''(w)^{-1/2} reaches past 0 for a small offset.
        let prof = ConvexProfile::power(1.5).unwrap();
        assert_eq!(modulus_xi(&prof, 3.0, 0.5).unwrap(), f64::INFINITY);
    }

    #[test]
    fn growth_detector() {
        // g(t) = e^{-|t|} has g'''/g''^{3/2} = e^{|w|/2}: the sup is at infinity.
        let prof = ConvexProfile::custom(
            "exp-decay",
            Arc::new(|t: f64| (-t.abs()).exp()),
            Arc::new(|t: f64| -t.signum() * (-t.abs()).exp()),
            Arc::new(|t: f64| (-t.abs()).exp()),
            Arc::new(|t: f64| -t.signum() * (-t.abs()).exp()),
            &[-2.0, -0.5, 0.5, 2.0],
        )
        .unwrap();
        assert!(matches!(modulus_xi(&prof, 1.0, 0.01), Err(Error::NonDecay { .. })));
    }

    #[test]
    fn rejects_bad_arguments() {
        let prof = ConvexProfile::cosh();
        assert!(modulus_xi(&prof, 0.0, 1.0).is_err());
        assert!(modulus_xi(&prof, 1.0, -1.0).is_err());
    }
}
