use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A real function of one real variable, shareable across threads.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Sample points used when a custom profile is registered without its own.
pub const DEFAULT_SAMPLE_POINTS: [f64; 8] = [-3.0, -1.5, -0.7, -0.2, 0.3, 0.9, 1.7, 3.4];

/// User-supplied profile with analytic derivatives up to third order.
pub struct CustomProfile {
    name: String,
    derivs: [ScalarFn; 4],
}

impl fmt::Debug for CustomProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomProfile").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum ProfileFamily {
    /// `g(t) = |t|^p`, `p > 1`.
    Power(f64),
    /// `g(t) = e^t + e^{-t}`.
    Cosh,
    /// `g(t) = t^2 / 2`.
    Gaussian,
    Custom(Arc<CustomProfile>),
}

/// A scalar C³ convex function `g` with evaluators for `g, g', g'', g'''`.
///
/// The density of a product measure with independent coordinates is written
/// `exp(-Σ g_i(x_i))`; each coordinate carries one of these. A profile may be
/// reflected (`t ↦ g(-t)`), which is how negative direction cosines are
/// handled without requiring the profile to be even.
#[derive(Debug, Clone)]
pub struct ConvexProfile {
    family: ProfileFamily,
    reflected: bool,
}

impl ConvexProfile {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::invalid(format!("power profile needs p > 1, got {p}")));
        }
        Ok(Self::from_family(ProfileFamily::Power(p)))
    }

    pub fn cosh() -> Self {
        Self::from_family(ProfileFamily::Cosh)
    }

    pub fn gaussian() -> Self {
        Self::from_family(ProfileFamily::Gaussian)
    }

    /// Registers a custom profile after checking its derivative evaluators
    /// against central finite differences at `sample_points` (relative 1e-6).
    pub fn custom(
        name: impl Into<String>,
        g: ScalarFn,
        d1: ScalarFn,
        d2: ScalarFn,
        d3: ScalarFn,
        sample_points: &[f64],
    ) -> Result<Self> {
        let profile = Self::from_family(ProfileFamily::Custom(Arc::new(CustomProfile {
            name: name.into(),
            derivs: [g, d1, d2, d3],
        })));
        profile.check_finite_differences(sample_points, 1e-6)?;
        Ok(profile)
    }

    fn from_family(family: ProfileFamily) -> Self {
        Self {
            family,
            reflected: false,
        }
    }

    pub fn family(&self) -> &ProfileFamily {
        &self.family
    }

    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    /// The profile `t ↦ g(-t)`.
    pub fn reflected(&self) -> Self {
        Self {
            family: self.family.clone(),
            reflected: !self.reflected,
        }
    }

    /// Whether `g'''` vanishes identically.
    pub fn is_quadratic(&self) -> bool {
        match self.family {
            ProfileFamily::Gaussian => true,
            ProfileFamily::Power(p) => p == 2.0,
            _ => false,
        }
    }

    /// The `order`-th derivative of `g` at `t`.
    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        if order > 3 {
            return Err(Error::invalid(format!("derivative order {order} not in 0..=3")));
        }
        if self.reflected {
            let v = self.eval_base(-t, order)?;
            Ok(if order % 2 == 1 { -v } else { v })
        } else {
            self.eval_base(t, order)
        }
    }

    fn eval_base(&self, t: f64, order: usize) -> Result<f64> {
        match &self.family {
            ProfileFamily::Power(p) => power_derivative(*p, t, order),
            ProfileFamily::Cosh => Ok(match order {
                0 | 2 => t.exp() + (-t).exp(),
                _ => t.exp() - (-t).exp(),
            }),
            ProfileFamily::Gaussian => Ok(match order {
                0 => 0.5 * t * t,
                1 => t,
                2 => 1.0,
                _ => 0.0,
            }),
            ProfileFamily::Custom(c) => Ok((c.derivs[order])(t)),
        }
    }

    /// `ln |g^{(order)}(t)|`, stable where the derivative itself overflows.
    pub fn ln_abs_eval(&self, t: f64, order: usize) -> Result<f64> {
        match self.family {
            ProfileFamily::Cosh => {
                let a = t.abs();
                Ok(match order {
                    0 | 2 => a + (-2.0 * a).exp().ln_1p(),
                    _ => a + (-(-2.0 * a).exp_m1()).ln(),
                })
            }
            ProfileFamily::Power(p) if order <= 3 => {
                let coeff = falling_factorial(p, order);
                if coeff == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                let e = p - order as f64;
                if t == 0.0 && e < 0.0 {
                    return Err(Error::domain(format!(
                        "derivative {order} of |t|^{p} is singular at 0"
                    )));
                }
                Ok(coeff.abs().ln() + e * t.abs().ln())
            }
            _ => Ok(self.eval(t, order)?.abs().ln()),
        }
    }

    /// Checks `g^{(k)}` against the central difference of `g^{(k-1)}`,
    /// `k = 1..=3`, with step `1e-5·(1+|t|)`. Points where an evaluator is
    /// singular are skipped.
    pub fn check_finite_differences(&self, points: &[f64], rel_tol: f64) -> Result<()> {
        for &t in points {
            let h = 1e-5 * (1.0 + t.abs());
            for order in 1..=3 {
                let (Ok(analytic), Ok(plus), Ok(minus), Ok(base)) = (
                    self.eval(t, order),
                    self.eval(t + h, order - 1),
                    self.eval(t - h, order - 1),
                    self.eval(t, order - 1),
                ) else {
                    continue;
                };
                let fd = (plus - minus) / (2.0 * h);
                let scale = analytic.abs().max(fd.abs()).max(1.0);
                // Roundoff in the difference quotient is about eps·|base|/h.
                let roundoff = 64.0 * f64::EPSILON * base.abs() / h;
                if !fd.is_finite() || !analytic.is_finite() {
                    return Err(Error::invalid(format!(
                        "{}: non-finite derivative {order} at t = {t}",
                        self.label()
                    )));
                }
                if (fd - analytic).abs() > rel_tol * scale + roundoff {
                    return Err(Error::invalid(format!(
                        "{}: derivative {order} at t = {t} is {analytic}, finite difference gives {fd}",
                        self.label()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Spec string (`power:4`, `cosh`, `gaussian`, `custom:<name>`), with a
    /// `-` suffix for reflected profiles.
    pub fn label(&self) -> String {
        let base = match &self.family {
            ProfileFamily::Power(p) => format!("power:{p}"),
            ProfileFamily::Cosh => "cosh".to_string(),
            ProfileFamily::Gaussian => "gaussian".to_string(),
            ProfileFamily::Custom(c) => format!("custom:{}", c.name),
        };
        if self.reflected {
            format!("{base}-")
        } else {
            base
        }
    }
}

impl fmt::Display for ConvexProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for ConvexProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "cosh" => Ok(Self::cosh()),
            "gaussian" => Ok(Self::gaussian()),
            _ => match s.strip_prefix("power:") {
                Some(p) => {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad exponent in profile `{s}`")))?;
                    Self::power(p)
                }
                None => Err(Error::invalid(format!(
                    "unknown profile `{s}` (expected power:<p>, cosh or gaussian)"
                ))),
            },
        }
    }
}

/// `p (p-1) ... (p-k+1)`.
pub(crate) fn falling_factorial(p: f64, k: usize) -> f64 {
    (0..k).map(|i| p - i as f64).product()
}

/// `d^k/dt^k |t|^p`.
pub(crate) fn power_derivative(p: f64, t: f64, k: usize) -> Result<f64> {
    let coeff = falling_factorial(p, k);
    if coeff == 0.0 {
        return Ok(0.0);
    }
    let e = p - k as f64;
    let a = t.abs();
    if a == 0.0 {
        if e < 0.0 {
            return Err(Error::domain(format!(
                "derivative {k} of |t|^{p} is singular at 0"
            )));
        }
        if e > 0.0 || k % 2 == 1 {
            return Ok(0.0);
        }
        return Ok(coeff);
    }
    let magnitude = coeff * a.powf(e);
    Ok(if k % 2 == 1 { magnitude * t.signum() } else { magnitude })
}
