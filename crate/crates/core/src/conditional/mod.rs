//! The law of `X + 2Y` given `X + Y = T` for i.i.d. `X, Y` with density
//! proportional to `e^{-g}`, and its comparison with a normal law.
//!
//! Since `X + 2Y = T + Y` on the event, the law has density
//! `h(v) ∝ exp(-g(2T - v) - g(v - T))`, the one-dimensional section of the
//! product density `e^{-g(x_1) - g(x_2)}` along `(1, 1)/√2` at offset
//! `T/√2`, read in the coordinate `v = T + x_2`.

mod sampler;

use crate::comparison::{ks_distance_1d, ln_std_normal};
use crate::error::{Error, Result};
use crate::profiles::ConvexProfile;
use crate::quadrature::{hermite_cumulative, integrate_with_knots, Knot, DEFAULT_TOL};
use crate::roots::solve_increasing;

pub use sampler::{conditional_mc, ks_empirical, ConditionalSample, ProfileSampler, MIN_ACCEPTANCE};

/// Drop in log-density at which the integration bracket is cut.
pub const LOG_TRUNCATION: f64 = 30.0;

/// `h(v) ∝ exp(-g(2T - v) - g(v - T))`, normalized by quadrature.
#[derive(Debug, Clone)]
pub struct ConditionalLaw {
    profile: ConvexProfile,
    offset: f64,
    mode: f64,
    psi_mode: f64,
    lo: f64,
    hi: f64,
    ln_z: f64,
    mean: f64,
    variance: f64,
    knots: Vec<Knot<1>>,
}

impl ConditionalLaw {
    pub fn profile(&self) -> &ConvexProfile {
        &self.profile
    }

    /// `T`.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Maximizer of `h`.
    pub fn mode(&self) -> f64 {
        self.mode
    }

    /// Integration bracket `[v_low, v_high]`.
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `ln Z` for `Z = ∫ exp(-g(2T - v) - g(v - T)) dv`.
    pub fn ln_normalizer(&self) -> f64 {
        self.ln_z
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// `g(2T - v) + g(v - T)`.
    pub fn potential(&self, v: f64) -> Result<f64> {
        potential(&self.profile, self.offset, v)
    }

    /// Log of the normalized density; `-∞` outside the bracket.
    pub fn ln_pdf(&self, v: f64) -> Result<f64> {
        if v < self.lo || v > self.hi {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(-(self.potential(v)? - self.psi_mode) - self.ln_z)
    }

    pub fn pdf(&self, v: f64) -> Result<f64> {
        Ok(self.ln_pdf(v)?.exp())
    }

    /// Distribution function, interpolated between quadrature knots.
    pub fn cdf(&self, v: f64) -> f64 {
        let total = self.knots.last().expect("non-empty").cumulative[0];
        (hermite_cumulative(&self.knots, v, 0) / total).clamp(0.0, 1.0)
    }

    pub(crate) fn breakpoints(&self) -> [f64; 3] {
        [self.offset, 2.0 * self.offset, self.mode]
    }
}

fn potential(g: &ConvexProfile, t: f64, v: f64) -> Result<f64> {
    Ok(g.eval(2.0 * t - v, 0)? + g.eval(v - t, 0)?)
}

fn potential_slope(g: &ConvexProfile, t: f64, v: f64) -> Result<f64> {
    Ok(g.eval(v - t, 1)? - g.eval(2.0 * t - v, 1)?)
}

/// Distance `u > 0` from the mode at which the potential has risen by
/// [`LOG_TRUNCATION`] on the side `side = ±1`.
fn truncation_distance(g: &ConvexProfile, t: f64, mode: f64, psi_mode: f64, side: f64) -> Result<f64> {
    let rise = |s: f64| -> Result<f64> { Ok(potential(g, t, mode + side * s.exp())? - psi_mode) };
    let s = solve_increasing(rise, None::<fn(f64) -> Result<f64>>, LOG_TRUNCATION, 0.0, 1.0, "truncation bracket")
        .map_err(|e| match e {
            Error::Range(_) => Error::MassEscape(format!(
                "potential does not rise by {LOG_TRUNCATION} on the {} side of the mode",
                if side > 0.0 { "upper" } else { "lower" }
            )),
            other => other,
        })?;
    Ok(s.exp())
}

/// Builds the conditional law at offset `T` by adaptive quadrature over the
/// bracket where the density is within `e^{-30}` of its peak.
pub fn conditional_density(g: &ConvexProfile, offset: f64) -> Result<ConditionalLaw> {
    if !offset.is_finite() {
        return Err(Error::invalid(format!("offset T must be finite, got {offset}")));
    }
    let t = offset;
    let mode = solve_increasing(
        |v| potential_slope(g, t, v),
        None::<fn(f64) -> Result<f64>>,
        0.0,
        1.5 * t,
        1.0,
        "conditional mode",
    )?;
    let psi_mode = potential(g, t, mode)?;
    let lo = mode - truncation_distance(g, t, mode, psi_mode, -1.0)?;
    let hi = mode + truncation_distance(g, t, mode, psi_mode, 1.0)?;

    let shifted = |v: f64| -> f64 {
        match potential(g, t, v) {
            Ok(p) => (-(p - psi_mode)).exp(),
            Err(_) => f64::NAN,
        }
    };
    let breaks = [t, 2.0 * t, mode];
    let moments = integrate_with_knots(
        |v| {
            let h = shifted(v);
            let d = v - mode;
            [h, d * h, d * d * h]
        },
        lo,
        hi,
        DEFAULT_TOL,
        &breaks,
    )?;
    let [z, m1, m2] = moments.last().expect("non-empty").cumulative;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Quadrature(format!("normalizer {z} is not positive and finite")));
    }
    // Log-concave tail bound: the mass beyond a point is at most h / |ψ'| there.
    for (v, dir) in [(lo, -1.0), (hi, 1.0)] {
        let slope = dir * potential_slope(g, t, v)?;
        if !(slope > 0.0) || (-LOG_TRUNCATION).exp() / slope > 1e-10 * z {
            return Err(Error::MassEscape(format!("tail mass beyond v = {v} is not negligible")));
        }
    }
    let shift = m1 / z;
    let variance = m2 / z - shift * shift;
    if !(variance > 0.0) {
        return Err(Error::Quadrature(format!("variance {variance} is not positive")));
    }
    let knots: Vec<Knot<1>> = moments
        .iter()
        .map(|k| Knot {
            x: k.x,
            f: [k.f[0]],
            cumulative: [k.cumulative[0]],
        })
        .collect();
    Ok(ConditionalLaw {
        profile: g.clone(),
        offset: t,
        mode,
        psi_mode,
        lo,
        hi,
        ln_z: z.ln(),
        mean: mode + shift,
        variance,
        knots,
    })
}

/// Kolmogorov distance between the law and the normal law with the same
/// mean and variance.
pub fn ks_normal(law: &ConditionalLaw) -> Result<f64> {
    let (mu, s) = (law.mean(), law.variance().sqrt());
    let (lo, hi) = law.support();
    let breaks: Vec<f64> = law.breakpoints().iter().map(|b| (b - mu) / s).collect();
    // Both densities in the standardized coordinate z = (v - μ)/s.
    let ln_p = |z: f64| law.ln_pdf(mu + s * z).map(|l| l + s.ln()).unwrap_or(f64::NAN);
    ks_distance_1d(ln_p, |z| ln_std_normal(&[z]), (lo - mu) / s, (hi - mu) / s, DEFAULT_TOL, &breaks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_is_exact() {
        let law = conditional_density(&ConvexProfile::gaussian(), 4.0).unwrap();
        assert!((law.mean() - 6.0).abs() < 1e-10);
        assert!((law.variance() - 0.5).abs() < 1e-10);
        assert!(ks_normal(&law).unwrap() < 1e-10);
        assert!((law.cdf(6.0) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn normalized_mass() {
        let law = conditional_density(&ConvexProfile::power(1.5).unwrap(), 5.0).unwrap();
        let (lo, hi) = law.support();
        let mass = crate::quadrature::integrate_with_knots(|v| [law.pdf(v).unwrap()], lo, hi, 1e-12, &law.breakpoints())
            .unwrap()
            .last()
            .unwrap()
            .cumulative[0];
        assert!((mass - 1.0).abs() < 1e-10);
        assert_eq!(law.cdf(lo - 1.0), 0.0);
        assert_eq!(law.cdf(hi + 1.0), 1.0);
    }

    #[test]
    fn quartic_trend() {
        let g = ConvexProfile::power(4.0).unwrap();
        let k5 = ks_normal(&conditional_density(&g, 5.0).unwrap()).unwrap();
        let k10 = ks_normal(&conditional_density(&g, 10.0).unwrap()).unwrap();
        assert!(k10 < k5, "{k10} vs {k5}");
    }
}
