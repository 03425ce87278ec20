use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::profiles::ScalarFn;
use crate::roots::solve_increasing;

/// Orlicz function `φ`: convex on `[0, ∞)`, increasing, `φ(0) = 0`.
#[derive(Clone)]
pub enum OrliczFn {
    /// `e^t - 1`.
    Exp,
    /// `t^p`, `p ≥ 1`.
    Power(f64),
    /// `1 - cos t` up to `π/2`, continued linearly; curvature vanishes past `π/2`.
    Cos,
    Custom {
        name: String,
        phi: ScalarFn,
        dphi: ScalarFn,
    },
}

impl fmt::Debug for OrliczFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl PartialEq for OrliczFn {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (OrliczFn::Custom { phi: a, dphi: da, .. }, OrliczFn::Custom { phi: b, dphi: db, .. }) => {
                Arc::ptr_eq(a, b) && Arc::ptr_eq(da, db)
            }
            (OrliczFn::Power(a), OrliczFn::Power(b)) => a == b,
            (OrliczFn::Exp, OrliczFn::Exp) | (OrliczFn::Cos, OrliczFn::Cos) => true,
            _ => false,
        }
    }
}

impl OrliczFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            OrliczFn::Exp => t.exp_m1(),
            OrliczFn::Power(p) => t.powf(*p),
            OrliczFn::Cos => {
                if t <= std::f64::consts::FRAC_PI_2 {
                    1.0 - t.cos()
                } else {
                    t + 1.0 - std::f64::consts::FRAC_PI_2
                }
            }
            OrliczFn::Custom { phi, .. } => phi(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            OrliczFn::Exp => t.exp(),
            OrliczFn::Power(p) => p * t.powf(p - 1.0),
            OrliczFn::Cos => {
                if t <= std::f64::consts::FRAC_PI_2 {
                    t.sin()
                } else {
                    1.0
                }
            }
            OrliczFn::Custom { dphi, .. } => dphi(t),
        }
    }

    pub fn label(&self) -> String {
        match self {
            OrliczFn::Exp => "exp".into(),
            OrliczFn::Power(p) => format!("power:{p}"),
            OrliczFn::Cos => "cos".into(),
            OrliczFn::Custom { name, .. } => format!("custom:{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BodyFamily {
    Euclidean,
    Lp(f64),
    Orlicz(OrliczFn),
    /// `(Σ ω_i |x|_{(i)}^p)^{1/p}`, `|x|_{(1)} ≤ … ≤ |x|_{(n)}`, `ω` non-decreasing.
    Lorentz { weights: Vec<f64>, p: f64 },
}

/// Star body `K ⊂ R^n` given by its Minkowski functional.
#[derive(Debug, Clone, PartialEq)]
pub struct StarBody {
    dim: usize,
    family: BodyFamily,
}

impl StarBody {
    fn checked_dim(dim: usize) -> Result<usize> {
        if dim < 2 {
            return Err(Error::invalid(format!("star bodies need dimension at least 2, got {dim}")));
        }
        Ok(dim)
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Ok(Self {
            dim: Self::checked_dim(dim)?,
            family: BodyFamily::Euclidean,
        })
    }

    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("ℓ_p body needs 1 ≤ p < ∞, got {p}")));
        }
        Ok(Self {
            dim: Self::checked_dim(dim)?,
            family: BodyFamily::Lp(p),
        })
    }

    pub fn orlicz(dim: usize, phi: OrliczFn) -> Result<Self> {
        if let OrliczFn::Power(p) = phi {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::invalid(format!("Orlicz power needs p ≥ 1, got {p}")));
            }
        }
        for t in [0.5, 1.0, 2.0] {
            if !(phi.eval(t) > 0.0 && phi.derivative(t) > 0.0) {
                return Err(Error::invalid(format!("Orlicz function {} is not increasing at {t}", phi.label())));
            }
        }
        Ok(Self {
            dim: Self::checked_dim(dim)?,
            family: BodyFamily::Orlicz(phi),
        })
    }

    pub fn lorentz(weights: Vec<f64>, p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("Lorentz body needs p ≥ 1, got {p}")));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) || weights.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("Lorentz weights must be positive and non-decreasing"));
        }
        Ok(Self {
            dim: Self::checked_dim(weights.len())?,
            family: BodyFamily::Lorentz { weights, p },
        })
    }

    /// Parses `euclidean`, `lp:P`, `orlicz:exp`, `orlicz:cos`,
    /// `orlicz:power:P` or `lorentz:p=P:w=W1,W2,…`. Lorentz bodies take their
    /// dimension from the weights, which must agree with `dim`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let bad = || Error::invalid(format!("unrecognised body spec '{spec}'"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        let spec = spec.trim();
        if spec == "euclidean" {
            return Self::euclidean(dim);
        }
        if let Some(p) = spec.strip_prefix("lp:") {
            return Self::lp(dim, num(p)?);
        }
        if let Some(rest) = spec.strip_prefix("orlicz:") {
            let phi = match rest {
                "exp" => OrliczFn::Exp,
                "cos" => OrliczFn::Cos,
                _ => OrliczFn::Power(num(rest.strip_prefix("power:").ok_or_else(bad)?)?),
            };
            return Self::orlicz(dim, phi);
        }
        if let Some(rest) = spec.strip_prefix("lorentz:") {
            let (p_part, w_part) = rest.split_once(':').ok_or_else(bad)?;
            let p = num(p_part.strip_prefix("p=").ok_or_else(bad)?)?;
            let weights = w_part
                .strip_prefix("w=")
                .ok_or_else(bad)?
                .split(',')
                .map(num)
                .collect::<Result<Vec<_>>>()?;
            if weights.len() != dim {
                return Err(Error::invalid(format!(
                    "Lorentz spec has {} weights but the dimension is {dim}",
                    weights.len()
                )));
            }
            return Self::lorentz(weights, p);
        }
        Err(bad())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &BodyFamily {
        &self.family
    }

    pub fn label(&self) -> String {
        match &self.family {
            BodyFamily::Euclidean => "euclidean".into(),
            BodyFamily::Lp(p) => format!("lp:{p}"),
            BodyFamily::Orlicz(phi) => format!("orlicz:{}", phi.label()),
            BodyFamily::Lorentz { weights, p } => {
                let w: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                format!("lorentz:p={p}:w={}", w.join(","))
            }
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!("point has dimension {}, body has {}", x.len(), self.dim)));
        }
        let scale = x.iter().map(|c| c.abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::domain("Minkowski functional evaluated at the origin"));
        }
        if !scale.is_finite() {
            return Err(Error::domain("Minkowski functional evaluated at a non-finite point"));
        }
        Ok(scale)
    }

    /// `‖x‖_K = inf{λ > 0 : x ∈ λK}`.
    pub fn minkowski(&self, x: &[f64]) -> Result<f64> {
        let scale = self.check_point(x)?;
        match &self.family {
            BodyFamily::Euclidean => Ok(scale * x.iter().map(|c| (c / scale).powi(2)).sum::<f64>().sqrt()),
            BodyFamily::Lp(p) => Ok(scale * x.iter().map(|c| (c.abs() / scale).powf(*p)).sum::<f64>().powf(1.0 / p)),
            BodyFamily::Lorentz { weights, p } => {
                let sorted = sorted_magnitudes(x);
                let s: f64 = sorted.iter().zip(weights).map(|(&(a, _), w)| w * (a / scale).powf(*p)).sum();
                Ok(scale * s.powf(1.0 / p))
            }
            BodyFamily::Orlicz(phi) => orlicz_gauge(phi, x, scale),
        }
    }

    /// `∇‖·‖_K(x)`. At a tie `|x_i| = |x_j|` of a Lorentz body the ranking
    /// is taken as stable in the index, which gives one one-sided gradient.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let norm = self.minkowski(x)?;
        match &self.family {
            BodyFamily::Euclidean => Ok(x.iter().map(|c| c / norm).collect()),
            BodyFamily::Lp(p) => Ok(x.iter().map(|c| c.signum() * (c.abs() / norm).powf(p - 1.0)).collect()),
            BodyFamily::Lorentz { weights, p } => {
                let mut g = vec![0.0; self.dim];
                for (rank, &(a, k)) in sorted_magnitudes(x).iter().enumerate() {
                    g[k] = weights[rank] * x[k].signum() * (a / norm).powf(p - 1.0);
                }
                Ok(g)
            }
            BodyFamily::Orlicz(phi) => {
                let denom: f64 = x.iter().map(|c| phi.derivative(c.abs() / norm) * c.abs()).sum();
                Ok(x.iter()
                    .map(|c| norm * phi.derivative(c.abs() / norm) * c.signum() / denom)
                    .collect())
            }
        }
    }
}

/// `(|x_k|, k)` in non-decreasing order of magnitude, stable in `k`.
fn sorted_magnitudes(x: &[f64]) -> Vec<(f64, usize)> {
    let mut v: Vec<(f64, usize)> = x.iter().enumerate().map(|(k, c)| (c.abs(), k)).collect();
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite point"));
    v
}

/// Solves `Σ φ(|x_i| u) = 1` for `u = 1/λ` on a log scale, so the bracket
/// never leaves `u > 0`.
fn orlicz_gauge(phi: &OrliczFn, x: &[f64], scale: f64) -> Result<f64> {
    let mags: Vec<f64> = x.iter().map(|c| c.abs() / scale).collect();
    let total = |s: f64| -> Result<f64> {
        let u = s.exp();
        let v: f64 = mags.iter().map(|&a| phi.eval(a * u)).sum();
        if v.is_nan() {
            return Err(Error::domain("Orlicz function returned NaN"));
        }
        Ok(v)
    };
    let slope = |s: f64| -> Result<f64> {
        let u = s.exp();
        Ok(mags.iter().map(|&a| phi.derivative(a * u) * a * u).sum())
    };
    let s = solve_increasing(total, Some(slope), 1.0, 0.0, 1.0, "Orlicz gauge")?;
    Ok(scale * (-s).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_values() {
        let e = StarBody::euclidean(2).unwrap();
        assert!((e.minkowski(&[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
        let o = StarBody::orlicz(3, OrliczFn::Exp).unwrap();
        let v = o.minkowski(&[1.0, 0.0, 0.0]).unwrap();
        assert!((v - 1.0 / 2f64.ln()).abs() < 1e-12);
        let x = [0.3, -1.2, 2.5];
        let lp = StarBody::lp(3, 3.5).unwrap().minkowski(&x).unwrap();
        let orl = StarBody::orlicz(3, OrliczFn::Power(3.5)).unwrap().minkowski(&x).unwrap();
        let lor = StarBody::lorentz(vec![1.0; 3], 3.5).unwrap().minkowski(&x).unwrap();
        assert!((lp - orl).abs() < 1e-12 * lp);
        assert!((lp - lor).abs() < 1e-13 * lp);
    }

    #[test]
    fn origin_is_a_domain_error() {
        let b = StarBody::lp(2, 4.0).unwrap();
        assert!(matches!(b.minkowski(&[0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn parse_specs() {
        assert_eq!(StarBody::parse("lp:4", 3).unwrap().family(), &BodyFamily::Lp(4.0));
        assert_eq!(
            StarBody::parse("orlicz:power:3", 2).unwrap().family(),
            &BodyFamily::Orlicz(OrliczFn::Power(3.0))
        );
        let l = StarBody::parse("lorentz:p=4:w=1,2,3", 3).unwrap();
        assert_eq!(l.label(), "lorentz:p=4:w=1,2,3");
        assert!(StarBody::parse("lorentz:p=4:w=1,2,3", 2).is_err());
        assert!(StarBody::parse("lorentz:p=4:w=3,2,1", 3).is_err());
        assert!(StarBody::parse("simplex", 3).is_err());
        assert_eq!(StarBody::parse("orlicz:cos", 2).unwrap().label(), "orlicz:cos");
    }

    #[test]
    fn gradients_match_differences() {
        let x = [0.4, -0.9, 1.3];
        let bodies = [
            StarBody::euclidean(3).unwrap(),
            StarBody::lp(3, 4.0).unwrap(),
            StarBody::orlicz(3, OrliczFn::Exp).unwrap(),
            StarBody::orlicz(3, OrliczFn::Cos).unwrap(),
            StarBody::lorentz(vec![1.0, 2.0, 3.0], 4.0).unwrap(),
        ];
        for b in &bodies {
            let g = b.gradient(&x).unwrap();
            for k in 0..3 {
                let h = 1e-6;
                let mut a = x;
                let mut c = x;
                a[k] += h;
                c[k] -= h;
                let fd = (b.minkowski(&a).unwrap() - b.minkowski(&c).unwrap()) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-7, "{} k={k}: {fd} vs {}", b.label(), g[k]);
            }
        }
    }
}
