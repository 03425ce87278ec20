//! Gaussian normalization of hyperplane sections of product densities
//! `f(x) = exp(-Σ g_i(x_i))`.
//!
//! On the hyperplane `{⟨x, θ⟩ = T}` the exponent `Σ g_i` is minimized at the
//! apex `y`, where `∇g(y) = λθ`. Whitening the Hessian quadratic form
//! `Σ z_i² g_i''(y_i)` on `θ^⊥` gives the embedding `Q`, and the normalizer
//! `α = (2π)^{-(n-1)/2} exp(Σ g_i(y_i))` makes `α f(Qx + y)` agree with
//! `φ_{n-1}(x)` to second order at the apex. The third-order error is
//! controlled by `n r³ ξ(r, y_min)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::comparison::{gauss_compare, GaussComparison, Metrics, Region};
use crate::error::{Error, Result};
use crate::profiles::{modulus_xi, ConvexProfile, ProfileFamily};
use crate::roots::solve_increasing;

/// Largest dimension the product pipeline accepts.
pub const MAX_DIM: usize = 16;
/// Curvature below which the whitening is refused.
pub const MIN_CURVATURE: f64 = 1e-14;
/// Bound surrogates above this value void the theorem's precondition.
pub const BOUND_LIMIT: f64 = 6.0;

/// `exp(-Σ g_i(x_i))` on `R^n`, `2 ≤ n ≤ 16`.
#[derive(Debug, Clone)]
pub struct ProductDensity {
    profiles: Vec<ConvexProfile>,
}

impl ProductDensity {
    pub fn new(profiles: Vec<ConvexProfile>) -> Result<Self> {
        if profiles.len() < 2 || profiles.len() > MAX_DIM {
            return Err(Error::invalid(format!(
                "product density needs 2..={MAX_DIM} profiles, got {}",
                profiles.len()
            )));
        }
        Ok(Self { profiles })
    }

    /// `n` copies of one profile.
    pub fn iid(profile: ConvexProfile, n: usize) -> Result<Self> {
        Self::new(vec![profile; n])
    }

    pub fn dim(&self) -> usize {
        self.profiles.len()
    }

    pub fn profiles(&self) -> &[ConvexProfile] {
        &self.profiles
    }

    /// `Σ g_i(x_i)`.
    pub fn potential(&self, x: &[f64]) -> Result<f64> {
        self.profiles
            .iter()
            .zip(x)
            .map(|(g, &xi)| g.eval(xi, 0))
            .sum()
    }

    /// `ln f(x) = -Σ g_i(x_i)`.
    pub fn ln_density(&self, x: &[f64]) -> Result<f64> {
        Ok(-self.potential(x)?)
    }
}

/// Unit direction `θ` with no vanishing coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    theta: Vec<f64>,
    q: f64,
}

impl Direction {
    /// Normalizes `v` to unit length.
    pub fn new(v: &[f64]) -> Result<Self> {
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("direction must be a finite non-zero vector"));
        }
        let theta: Vec<f64> = v.iter().map(|c| c / norm).collect();
        let q = theta.iter().map(|c| c.abs()).fold(f64::INFINITY, f64::min);
        if q == 0.0 {
            return Err(Error::invalid("direction has a zero coordinate (q = min |θ_i| = 0)"));
        }
        Ok(Self { theta, q })
    }

    /// `(1, …, 1)/√n`.
    pub fn diagonal(n: usize) -> Result<Self> {
        Self::new(&vec![1.0; n])
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `min_i |θ_i|`.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

/// Affine frame `x ↦ Qx + y` of the section at offset `T`, in the original
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionFrame {
    theta: Vec<f64>,
    y: Vec<f64>,
    lambda: f64,
    q: DMatrix<f64>,
    log_alpha: f64,
    offset: f64,
    y_min: f64,
}

impl SectionFrame {
    /// Reassembles a frame from stored parts (e.g. re-ingested output).
    /// `q` is `n × (n-1)`, row-major.
    pub fn from_parts(theta: Vec<f64>, y: Vec<f64>, lambda: f64, q_row_major: &[f64], log_alpha: f64, offset: f64) -> Result<Self> {
        let n = theta.len();
        if n < 2 || y.len() != n || q_row_major.len() != n * (n - 1) {
            return Err(Error::invalid("frame parts have inconsistent dimensions"));
        }
        let q = DMatrix::from_row_slice(n, n - 1, q_row_major);
        let y_min = y.iter().map(|c| c.abs()).fold(f64::INFINITY, f64::min);
        Ok(Self {
            theta,
            y,
            lambda,
            q,
            log_alpha,
            offset,
            y_min,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Apex `y`.
    pub fn apex(&self) -> &[f64] {
        &self.y
    }

    /// Lagrange multiplier `λ` with `∇g(y) = λθ`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Whitening embedding `Q : R^{n-1} → θ^⊥` (`n × (n-1)`).
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `Q` flattened row by row.
    pub fn q_row_major(&self) -> Vec<f64> {
        let (rows, cols) = self.q.shape();
        (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).map(|(i, j)| self.q[(i, j)]).collect()
    }

    pub fn log_alpha(&self) -> f64 {
        self.log_alpha
    }

    /// Offset `T` of the hyperplane `{⟨x, θ⟩ = T}`.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `min_i |y_i|`, the coordinate at which the modulus is evaluated.
    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    /// `Qx + y`.
    pub fn map(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| self.y[i] + (0..n - 1).map(|j| self.q[(i, j)] * x[j]).sum::<f64>())
            .collect()
    }

    /// `ln(α f(Qx + y))`.
    pub fn ln_section(&self, density: &ProductDensity, x: &[f64]) -> Result<f64> {
        Ok(self.log_alpha + density.ln_density(&self.map(x))?)
    }
}

/// Profiles and direction after reflecting every coordinate with `θ_i < 0`.
fn sign_normalized(density: &ProductDensity, dir: &Direction) -> (Vec<ConvexProfile>, Vec<f64>, Vec<f64>) {
    let signs: Vec<f64> = dir.theta().iter().map(|c| c.signum()).collect();
    let profiles = density
        .profiles()
        .iter()
        .zip(&signs)
        .map(|(g, &s)| if s < 0.0 { g.reflected() } else { g.clone() })
        .collect();
    let theta = dir.theta().iter().map(|c| c.abs()).collect();
    (profiles, theta, signs)
}

fn check_inputs(density: &ProductDensity, dir: &Direction, offset: f64) -> Result<()> {
    if density.dim() != dir.dim() {
        return Err(Error::invalid(format!(
            "density has dimension {} but direction has {}",
            density.dim(),
            dir.dim()
        )));
    }
    if !(offset > 0.0 && offset.is_finite()) {
        return Err(Error::invalid(format!("offset T must be positive, got {offset}")));
    }
    Ok(())
}

/// `(g')^{-1}(target)`.
fn invert_derivative(g: &ConvexProfile, target: f64, start: f64) -> Result<f64> {
    solve_increasing(
        |x| g.eval(x, 1),
        Some(|x| g.eval(x, 2)),
        target,
        start,
        1.0_f64.max(start.abs()),
        "inverse derivative",
    )
}

/// Minimizer `y` of `Σ g_i` on `{⟨x, θ⟩ = T}` and its multiplier `λ`.
///
/// Coordinates with `θ_i < 0` are solved on the reflected profile and mapped
/// back. The multiplier is found by a monotone root-find on
/// `λ ↦ Σ θ_i (g_i')^{-1}(λθ_i) - T`, each inverse itself a monotone solve.
pub fn solve_lagrange(density: &ProductDensity, dir: &Direction, offset: f64) -> Result<(Vec<f64>, f64)> {
    check_inputs(density, dir, offset)?;
    let (profiles, theta, signs) = sign_normalized(density, dir);
    let n = profiles.len();
    let starts: Vec<f64> = theta.iter().map(|c| c * offset).collect();

    let coords = |lambda: f64| -> Result<Vec<f64>> {
        (0..n)
            .map(|i| invert_derivative(&profiles[i], lambda * theta[i], starts[i]))
            .collect()
    };
    let constraint = |lambda: f64| -> Result<f64> {
        let x = coords(lambda)?;
        Ok(x.iter().zip(&theta).map(|(a, b)| a * b).sum())
    };
    let slope = |lambda: f64| -> Result<f64> {
        let x = coords(lambda)?;
        let mut s = 0.0;
        for i in 0..n {
            s += theta[i] * theta[i] / profiles[i].eval(x[i], 2)?;
        }
        Ok(s)
    };

    let mut lambda0 = f64::NEG_INFINITY;
    for i in 0..n {
        lambda0 = lambda0.max(profiles[i].eval(offset, 1)? / theta[i]);
    }
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        lambda0 = 1.0;
    }
    let lambda = solve_increasing(constraint, Some(slope), offset, lambda0, lambda0, "Lagrange multiplier")?;
    let x = coords(lambda)?;

    let dot: f64 = x.iter().zip(&theta).map(|(a, b)| a * b).sum();
    if (dot - offset).abs() > 1e-10 * offset {
        return Err(Error::NonConvergence {
            what: format!("constraint residual {:e}", dot - offset),
            iterations: 200,
        });
    }
    for i in 0..n {
        let r = profiles[i].eval(x[i], 1)? - lambda * theta[i];
        if r.abs() > 1e-8 * (1.0 + lambda.abs()) {
            return Err(Error::NonConvergence {
                what: format!("stationarity residual {r:e} in coordinate {i}"),
                iterations: 200,
            });
        }
    }
    let y = x.iter().zip(&signs).map(|(v, s)| v * s).collect();
    Ok((y, lambda))
}

/// Orthogonal projections of `e_k − θ_k θ` onto `θ^⊥`, skipping the
/// coordinate where `|θ_k|` is largest.
pub fn default_complement_basis(theta: &[f64]) -> DMatrix<f64> {
    let n = theta.len();
    let skip = (0..n)
        .max_by(|&a, &b| theta[a].abs().partial_cmp(&theta[b].abs()).expect("finite"))
        .unwrap_or(0);
    let mut basis = DMatrix::zeros(n, n - 1);
    for (col, k) in (0..n).filter(|&k| k != skip).enumerate() {
        for i in 0..n {
            basis[(i, col)] = if i == k { 1.0 } else { 0.0 } - theta[k] * theta[i];
        }
    }
    basis
}

/// Solves for the apex and builds the whitened frame with the default
/// complement basis.
pub fn build_frame(density: &ProductDensity, dir: &Direction, offset: f64) -> Result<SectionFrame> {
    build_frame_with_basis(density, dir, offset, &default_complement_basis(dir.theta()))
}

/// As [`build_frame`], Gram–Schmidt starting from the columns of `basis`
/// (`n × (n-1)`, spanning `θ^⊥` after projection).
pub fn build_frame_with_basis(
    density: &ProductDensity,
    dir: &Direction,
    offset: f64,
    basis: &DMatrix<f64>,
) -> Result<SectionFrame> {
    let n = density.dim();
    if basis.shape() != (n, n - 1) {
        return Err(Error::invalid(format!("basis must be {n} x {}", n - 1)));
    }
    let (y, lambda) = solve_lagrange(density, dir, offset)?;
    let theta = dir.theta();
    let mut curv = Vec::with_capacity(n);
    for (i, g) in density.profiles().iter().enumerate() {
        let c = g.eval(y[i], 2)?;
        if !(c > MIN_CURVATURE) {
            return Err(Error::DegenerateCurvature { index: i, value: c });
        }
        curv.push(c);
    }
    let sharp = |u: &[f64], v: &[f64]| -> f64 { (0..n).map(|i| u[i] * v[i] * curv[i]).sum() };

    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let mut v: Vec<f64> = basis.column(j).iter().copied().collect();
        let along: f64 = v.iter().zip(theta).map(|(a, b)| a * b).sum();
        for i in 0..n {
            v[i] -= along * theta[i];
        }
        let scale = sharp(&v, &v).sqrt();
        // Two passes of classical Gram–Schmidt in the ♯ inner product.
        for _ in 0..2 {
            for q in &cols {
                let c = sharp(&v, q);
                for i in 0..n {
                    v[i] -= c * q[i];
                }
            }
        }
        let norm = sharp(&v, &v).sqrt();
        if !(norm > 1e-10 * scale) || !norm.is_finite() {
            return Err(Error::invalid("basis columns do not span the orthogonal complement of θ"));
        }
        cols.push(v.iter().map(|c| c / norm).collect());
    }
    let q = DMatrix::from_fn(n, n - 1, |i, j| cols[j][i]);
    let potential: f64 = density.potential(&y)?;
    let log_alpha = potential - 0.5 * (n - 1) as f64 * (2.0 * PI).ln();
    let y_min = y.iter().map(|c| c.abs()).fold(f64::INFINITY, f64::min);
    Ok(SectionFrame {
        theta: theta.to_vec(),
        y,
        lambda,
        q,
        log_alpha,
        offset,
        y_min,
    })
}

/// Residuals of the frame invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameResiduals {
    /// `max_i |g_i'(y_i) - λθ_i| / (1 + |λ|)`.
    pub stationarity: f64,
    /// `max |Qᵀ diag(g''(y)) Q - I|`.
    pub whitening: f64,
    /// `max |Qᵀθ|`.
    pub orthogonality: f64,
    /// `|⟨θ, y⟩ - T| / T`.
    pub offset: f64,
    /// `|-ln(α f(y)) - (n-1) ln √(2π)|`.
    pub normalizer: f64,
}

pub fn frame_residuals(density: &ProductDensity, frame: &SectionFrame) -> Result<FrameResiduals> {
    let n = frame.dim();
    let (y, theta) = (frame.apex(), frame.theta());
    let mut stationarity: f64 = 0.0;
    let mut curv = Vec::with_capacity(n);
    for (i, g) in density.profiles().iter().enumerate() {
        stationarity = stationarity.max((g.eval(y[i], 1)? - frame.lambda() * theta[i]).abs());
        curv.push(g.eval(y[i], 2)?);
    }
    stationarity /= 1.0 + frame.lambda().abs();
    let q = frame.q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(curv));
    let gram = q.transpose() * d * q;
    let whitening = (gram - DMatrix::identity(n - 1, n - 1)).amax();
    let orthogonality = (q.transpose() * nalgebra::DVector::from_column_slice(theta)).amax();
    let dot: f64 = y.iter().zip(theta).map(|(a, b)| a * b).sum();
    let offset = (dot - frame.offset()).abs() / frame.offset();
    let psi0 = -frame.ln_section(density, &vec![0.0; n - 1])?;
    let normalizer = (psi0 - 0.5 * (n - 1) as f64 * (2.0 * PI).ln()).abs();
    Ok(FrameResiduals {
        stationarity,
        whitening,
        orthogonality,
        offset,
        normalizer,
    })
}

/// `max_i ξ_i(r, t)`; identical builtin profiles are evaluated once.
pub fn max_modulus(profiles: &[ConvexProfile], r: f64, t: f64) -> Result<f64> {
    let mut seen: Vec<String> = Vec::new();
    let mut xi: f64 = 0.0;
    for g in profiles {
        if !matches!(g.family(), ProfileFamily::Custom(_)) {
            // ξ is symmetric in the sign of w, so reflection does not matter.
            let key = g.label().trim_end_matches('-').to_string();
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
        }
        xi = xi.max(modulus_xi(g, r, t)?);
    }
    Ok(xi)
}

/// Relative and absolute deviation of `α f(Qx + y)` from `φ_{n-1}(x)` over
/// `region` (typically [`Region::ball`] of radius `r`), together with the
/// bound surrogate `B = n r³ ξ(r, y_min)`.
pub fn section_error(density: &ProductDensity, frame: &SectionFrame, r: f64, region: &Region) -> Result<GaussComparison> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("radius r must be positive, got {r}")));
    }
    if density.dim() != frame.dim() {
        return Err(Error::invalid("frame and density dimensions differ"));
    }
    let m = frame.dim() - 1;
    let eval_err = std::sync::Mutex::new(None);
    let ln_candidate = |x: &[f64]| match frame.ln_section(density, x) {
        Ok(v) => v,
        Err(e) => {
            *eval_err.lock().expect("poisoned") = Some(e);
            f64::NAN
        }
    };
    let metrics = Metrics {
        relative: true,
        ks: m == 1,
    };
    let result = gauss_compare(ln_candidate, m, region, metrics);
    if let Some(e) = eval_err.into_inner().expect("poisoned") {
        return Err(e);
    }
    let mut cmp = result?;
    let xi = max_modulus(density.profiles(), r, frame.y_min())?;
    let bound = density.dim() as f64 * r.powi(3) * xi;
    cmp.bound_surrogate = Some(bound);
    cmp.bound_valid = Some(bound <= BOUND_LIMIT);
    cmp.proof_bound = Some(0.5 * bound);
    Ok(cmp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(p: f64) -> ConvexProfile {
        ConvexProfile::power(p).unwrap()
    }

    #[test]
    fn gaussian_apex_is_t_theta() {
        let density = ProductDensity::iid(ConvexProfile::gaussian(), 3).unwrap();
        let dir = Direction::new(&[0.2, 0.5, 0.7]).unwrap();
        let (y, lambda) = solve_lagrange(&density, &dir, 5.0).unwrap();
        for (yi, ti) in y.iter().zip(dir.theta()) {
            assert!((yi - 5.0 * ti).abs() < 1e-12);
        }
        assert!((lambda - 5.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_quartic_apex() {
        let density = ProductDensity::iid(power(4.0), 2).unwrap();
        let dir = Direction::diagonal(2).unwrap();
        let (y, _) = solve_lagrange(&density, &dir, 10.0).unwrap();
        let expected = 10.0 / 2f64.sqrt();
        assert!((y[0] - expected).abs() < 1e-12 && (y[1] - expected).abs() < 1e-12);
    }

    #[test]
    fn negative_coordinates_are_reflected() {
        let density = ProductDensity::new(vec![power(3.0), ConvexProfile::cosh(), power(1.5)]).unwrap();
        let dir = Direction::new(&[0.4, -0.6, 0.5]).unwrap();
        let frame = build_frame(&density, &dir, 7.0).unwrap();
        assert!(frame.apex()[1] < 0.0);
        let res = frame_residuals(&density, &frame).unwrap();
        assert!(res.stationarity < 1e-8 && res.whitening < 1e-10);
        assert!(res.orthogonality < 1e-12 && res.offset < 1e-10);
    }

    #[test]
    fn bounded_derivative_is_a_range_error() {
        // g(t) = √(1+t²) has |g'| < 1.
        use std::sync::Arc;
        let soft = ConvexProfile::custom(
            "softabs",
            Arc::new(|t: f64| (1.0 + t * t).sqrt()),
            Arc::new(|t: f64| t / (1.0 + t * t).sqrt()),
            Arc::new(|t: f64| (1.0 + t * t).powf(-1.5)),
            Arc::new(|t: f64| -3.0 * t * (1.0 + t * t).powf(-2.5)),
            &crate::profiles::DEFAULT_SAMPLE_POINTS,
        )
        .unwrap();
        let density = ProductDensity::new(vec![soft, ConvexProfile::gaussian()]).unwrap();
        let dir = Direction::new(&[0.9, 0.1]).unwrap();
        assert!(matches!(solve_lagrange(&density, &dir, 50.0), Err(Error::Range(_))));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ProductDensity::new(vec![power(2.0)]).is_err());
        assert!(Direction::new(&[1.0, 0.0]).is_err());
        assert!(Direction::new(&[0.0, 0.0]).is_err());
        let density = ProductDensity::iid(power(2.0), 2).unwrap();
        assert!(solve_lagrange(&density, &Direction::diagonal(3).unwrap(), 1.0).is_err());
        assert!(solve_lagrange(&density, &Direction::diagonal(2).unwrap(), -1.0).is_err());
    }

    #[test]
    fn from_parts_round_trip() {
        let density = ProductDensity::iid(power(4.0), 3).unwrap();
        let frame = build_frame(&density, &Direction::new(&[0.5, 0.5, 0.7]).unwrap(), 9.0).unwrap();
        let again = SectionFrame::from_parts(
            frame.theta().to_vec(),
            frame.apex().to_vec(),
            frame.lambda(),
            &frame.q_row_major(),
            frame.log_alpha(),
            frame.offset(),
        )
        .unwrap();
        assert_eq!(frame, again);
    }
}
