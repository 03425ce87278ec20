use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::convex::{power_derivative, ScalarFn};
use crate::error::{Error, Result};

pub struct CustomRadial {
    name: String,
    derivs: [ScalarFn; 3],
}

impl fmt::Debug for CustomRadial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRadial").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum RadialFamily {
    /// `ρ(t) = t^p`.
    Power(f64),
    /// `ρ(t) = t^2 / 2`.
    HalfSquare,
    /// `ρ(t) = e^t`.
    Exp,
    Custom(Arc<CustomRadial>),
}

/// Radial profile `ρ` on `[0, ∞)` of a star-shaped density `exp(-ρ(‖x‖_K))`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    family: RadialFamily,
    t_min: f64,
}

impl RadialProfile {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::invalid(format!("radial power needs p > 0, got {p}")));
        }
        Ok(Self {
            family: RadialFamily::Power(p),
            t_min: 0.0,
        })
    }

    pub fn half_square() -> Self {
        Self {
            family: RadialFamily::HalfSquare,
            t_min: 0.0,
        }
    }

    pub fn exp() -> Self {
        Self {
            family: RadialFamily::Exp,
            t_min: 0.0,
        }
    }

    /// Registers `ρ, ρ', ρ''`; `ρ'` must be positive beyond `t_min`. The
    /// derivatives are checked against central differences at the sample
    /// points (relative 1e-6).
    pub fn custom(
        name: impl Into<String>,
        rho: ScalarFn,
        d1: ScalarFn,
        d2: ScalarFn,
        t_min: f64,
        sample_points: &[f64],
    ) -> Result<Self> {
        let profile = Self {
            family: RadialFamily::Custom(Arc::new(CustomRadial {
                name: name.into(),
                derivs: [rho, d1, d2],
            })),
            t_min,
        };
        for &t in sample_points.iter().filter(|&&t| t > t_min) {
            let d1 = profile.eval(t, 1)?;
            if d1 <= 0.0 {
                return Err(Error::invalid(format!(
                    "ρ'({t}) = {d1} is not positive beyond t_min = {t_min}"
                )));
            }
        }
        profile.check_finite_differences(sample_points, 1e-6)?;
        Ok(profile)
    }

    pub fn family(&self) -> &RadialFamily {
        &self.family
    }

    /// Start of the monotone tail: `ρ' > 0` on `(t_min, ∞)`.
    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        if order > 2 {
            return Err(Error::invalid(format!("radial derivative order {order} not in 0..=2")));
        }
        if t < 0.0 || t.is_nan() {
            return Err(Error::domain(format!("radial profile evaluated at t = {t} < 0")));
        }
        match &self.family {
            RadialFamily::Power(p) => power_derivative(*p, t, order),
            RadialFamily::HalfSquare => Ok(match order {
                0 => 0.5 * t * t,
                1 => t,
                _ => 1.0,
            }),
            RadialFamily::Exp => Ok(t.exp()),
            RadialFamily::Custom(c) => Ok((c.derivs[order])(t)),
        }
    }

    pub fn check_finite_differences(&self, points: &[f64], rel_tol: f64) -> Result<()> {
        for &t in points {
            let h = 1e-5 * (1.0 + t.abs());
            if t - h < 0.0 {
                continue;
            }
            for order in 1..=2 {
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
                let roundoff = 64.0 * f64::EPSILON * base.abs() / h;
                if !(fd - analytic).is_finite() || (fd - analytic).abs() > rel_tol * scale + roundoff {
                    return Err(Error::invalid(format!(
                        "{}: radial derivative {order} at t = {t} is {analytic}, finite difference gives {fd}",
                        self.label()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match &self.family {
            RadialFamily::Power(p) => format!("power:{p}"),
            RadialFamily::HalfSquare => "halfsquare".to_string(),
            RadialFamily::Exp => "exp".to_string(),
            RadialFamily::Custom(c) => format!("custom:{}", c.name),
        }
    }
}

impl fmt::Display for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for RadialProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "halfsquare" => Ok(Self::half_square()),
            "exp" => Ok(Self::exp()),
            _ => match s.strip_prefix("power:") {
                Some(p) => Self::power(
                    p.parse()
                        .map_err(|_| Error::invalid(format!("bad exponent in radial `{s}`")))?,
                ),
                None => Err(Error::invalid(format!(
                    "unknown radial profile `{s}` (expected power:<p>, halfsquare or exp)"
                ))),
            },
        }
    }
}
