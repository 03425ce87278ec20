use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::body::StarBody;
use crate::error::{Error, Result};
use crate::fd;
use crate::product::default_complement_basis;
use crate::profiles::RadialProfile;

/// Hessian eigenvalues at or below this count as vanishing curvature.
pub const CURVATURE_THRESHOLD: f64 = 1e-8;
/// Number of random boundary points used to test the touching functional.
pub const TOUCH_PROBES: usize = 1000;
const TOUCH_SEED: u64 = 0x5eed_7a9e;
/// Relative Ridders error estimate above which the gauge is declared
/// non-smooth at the apex.
pub const SMOOTHNESS_TOLERANCE: f64 = 1e-6;

/// Local-ellipsoid frame of a star body at a boundary point `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StarFrame {
    theta: Vec<f64>,
    phi: Vec<f64>,
    q: DMatrix<f64>,
    hessian: DMatrix<f64>,
    hessian_error: f64,
    lambda: DMatrix<f64>,
    t_map: DMatrix<f64>,
}

impl StarFrame {
    /// Rebuilds a frame from `θ`, `φ`, an orthonormal `Q` (`n × (n-1)`,
    /// row-major), the apex Hessian (`(n-1) × (n-1)`, row-major) and its
    /// finite-difference error estimate.
    pub fn from_parts(
        theta: Vec<f64>,
        phi: Vec<f64>,
        q_row_major: &[f64],
        hessian_row_major: &[f64],
        hessian_error: f64,
    ) -> Result<Self> {
        let n = theta.len();
        if n < 2 || phi.len() != n || q_row_major.len() != n * (n - 1) || hessian_row_major.len() != (n - 1) * (n - 1) {
            return Err(Error::invalid("star frame parts have inconsistent dimensions"));
        }
        let q = DMatrix::from_row_slice(n, n - 1, q_row_major);
        let h = DMatrix::from_row_slice(n - 1, n - 1, hessian_row_major);
        Self::assemble(theta, phi, q, h, hessian_error)
    }

    fn assemble(theta: Vec<f64>, phi: Vec<f64>, q: DMatrix<f64>, hessian: DMatrix<f64>, hessian_error: f64) -> Result<Self> {
        let eig = SymmetricEigen::new(hessian.clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > CURVATURE_THRESHOLD) {
            return Err(Error::Curvature {
                eigenvalue: min,
                threshold: CURVATURE_THRESHOLD,
            });
        }
        let scaled = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|d| (2.0 / d).sqrt()));
        let u = &eig.eigenvectors;
        let lambda = u * DMatrix::from_diagonal(&scaled) * u.transpose();
        let t_map = &q * &lambda;
        Ok(Self {
            theta,
            phi,
            q,
            hessian,
            hessian_error,
            lambda,
            t_map,
        })
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Apex direction `θ ∈ ∂K`.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Touching functional `φ`, as a vector.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Orthonormal basis of `null(φ)`, `n × (n-1)`.
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `H_q(0)` for `q(x) = ‖Qx + θ‖_K`, symmetric positive definite.
    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    /// Largest Ridders error estimate among the Hessian entries.
    pub fn hessian_error(&self) -> f64 {
        self.hessian_error
    }

    /// `Λ = √2 H^{-1/2}`, so that `Λᵀ H Λ = 2I`.
    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    /// `T = QΛ`.
    pub fn t_map(&self) -> &DMatrix<f64> {
        &self.t_map
    }

    /// `ln α(t) = ρ(t) - ((n-1)/2) ln 2π`.
    pub fn log_alpha(&self, rho: &RadialProfile, t: f64) -> Result<f64> {
        Ok(rho.eval(t, 0)? - 0.5 * (self.dim() - 1) as f64 * (2.0 * PI).ln())
    }

    /// `β(t) = √(t / (2ρ'(t)))`.
    pub fn beta(&self, rho: &RadialProfile, t: f64) -> Result<f64> {
        let d1 = rho.eval(t, 1)?;
        if !(d1 > 0.0) {
            return Err(Error::domain(format!("ρ'({t}) = {d1} is not positive")));
        }
        Ok((t / (2.0 * d1)).sqrt())
    }
}

/// The frame evaluated at one parameter `t`: `x ↦ β(t) T x + tθ` and `ln α(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StarSection {
    pub t: f64,
    pub log_alpha: f64,
    pub beta: f64,
    frame: StarFrame,
}

impl StarSection {
    /// `β(t) T x + tθ`.
    pub fn map(&self, x: &[f64]) -> Vec<f64> {
        let n = self.frame.dim();
        let tm = self.frame.t_map();
        (0..n)
            .map(|i| self.t * self.frame.theta[i] + self.beta * (0..n - 1).map(|j| tm[(i, j)] * x[j]).sum::<f64>())
            .collect()
    }

    /// `ln(α(t) f(β(t) T x + tθ))` for `f = e^{-ρ(‖·‖_K)}`.
    pub fn ln_section(&self, body: &StarBody, rho: &RadialProfile, x: &[f64]) -> Result<f64> {
        Ok(self.log_alpha - rho.eval(body.minkowski(&self.map(x))?, 0)?)
    }

    pub fn frame(&self) -> &StarFrame {
        &self.frame
    }
}

/// `(ln α(t), β(t))` and the affine map of the frame at `t`.
pub fn star_frame_at(frame: &StarFrame, rho: &RadialProfile, t: f64) -> Result<StarSection> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("parameter t must be positive, got {t}")));
    }
    Ok(StarSection {
        t,
        log_alpha: frame.log_alpha(rho, t)?,
        beta: frame.beta(rho, t)?,
        frame: frame.clone(),
    })
}

/// Frame at `θ` with the default basis of `null(φ)`; `φ` defaults to the
/// gradient of the gauge at `θ`.
pub fn apex_frame(body: &StarBody, theta: &[f64], phi: Option<&[f64]>) -> Result<StarFrame> {
    let phi = resolve_functional(body, theta, phi)?;
    let unit = normalized(&phi);
    let basis = default_complement_basis(&unit);
    apex_frame_with_basis(body, theta, Some(&phi), &basis)
}

/// As [`apex_frame`], orthonormalizing the columns of `basis` (projected
/// onto `null(φ)`) to obtain `Q`.
pub fn apex_frame_with_basis(body: &StarBody, theta: &[f64], phi: Option<&[f64]>, basis: &DMatrix<f64>) -> Result<StarFrame> {
    let n = body.dim();
    if theta.len() != n {
        return Err(Error::invalid(format!("apex has dimension {}, body has {n}", theta.len())));
    }
    if basis.shape() != (n, n - 1) {
        return Err(Error::invalid(format!("basis must be {n} x {}", n - 1)));
    }
    let gauge = body.minkowski(theta)?;
    if (gauge - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(format!("apex is not on the boundary: ‖θ‖_K = {gauge}")));
    }
    let phi = resolve_functional(body, theta, phi)?;
    let q = null_space_basis(&phi, basis)?;

    let h0 = 0.05 * (1.0 + theta.iter().map(|c| c * c).sum::<f64>().sqrt());
    let eval_err = std::cell::RefCell::new(None);
    let qfun = |x: &[f64]| {
        let p: Vec<f64> = (0..n).map(|i| theta[i] + (0..n - 1).map(|j| q[(i, j)] * x[j]).sum::<f64>()).collect();
        body.minkowski(&p).unwrap_or_else(|e| {
            *eval_err.borrow_mut() = Some(e);
            f64::NAN
        })
    };
    let (hessian, errors) = fd::hessian(qfun, &vec![0.0; n - 1], h0);
    if let Some(e) = eval_err.into_inner() {
        return Err(e);
    }
    let estimate = errors.amax();
    if !(estimate <= SMOOTHNESS_TOLERANCE * hessian.amax().max(1.0)) {
        return Err(Error::NonSmooth { estimate });
    }
    let frame = StarFrame::assemble(theta.to_vec(), phi, q, hessian, estimate)?;
    check_touching(body, &frame)?;
    Ok(frame)
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    v.iter().map(|c| c / n).collect()
}

fn resolve_functional(body: &StarBody, theta: &[f64], phi: Option<&[f64]>) -> Result<Vec<f64>> {
    let phi = match phi {
        Some(p) => p.to_vec(),
        None => body.gradient(theta)?,
    };
    if phi.len() != theta.len() {
        return Err(Error::invalid("functional and apex dimensions differ"));
    }
    let at_apex: f64 = phi.iter().zip(theta).map(|(a, b)| a * b).sum();
    if !(at_apex > 0.0 && at_apex.is_finite()) {
        return Err(Error::invalid(format!("functional must be positive at the apex, got {at_apex}")));
    }
    Ok(phi)
}

/// Two-pass Gram–Schmidt of `basis` after projecting out `φ`.
fn null_space_basis(phi: &[f64], basis: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = phi.len();
    let unit = normalized(phi);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let mut v: Vec<f64> = basis.column(j).iter().copied().collect();
        let scale = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        for _ in 0..2 {
            for u in std::iter::once(&unit).chain(cols.iter()) {
                let c: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                for i in 0..n {
                    v[i] -= c * u[i];
                }
            }
        }
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 1e-10 * scale) || !norm.is_finite() {
            return Err(Error::invalid("basis columns do not span null(φ)"));
        }
        cols.push(v.iter().map(|c| c / norm).collect());
    }
    Ok(DMatrix::from_fn(n, n - 1, |i, j| cols[j][i]))
}

/// `φ(x) < φ(θ)` on random boundary points away from `θ`.
fn check_touching(body: &StarBody, frame: &StarFrame) -> Result<()> {
    let n = body.dim();
    let (theta, phi) = (frame.theta(), frame.phi());
    let apex: f64 = phi.iter().zip(theta).map(|(a, b)| a * b).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(TOUCH_SEED);
    for _ in 0..TOUCH_PROBES {
        let dir: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let k = body.minkowski(&dir)?;
        let x: Vec<f64> = dir.iter().map(|c| c / k).collect();
        let dist = x.iter().zip(theta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let probe: f64 = phi.iter().zip(&x).map(|(a, b)| a * b).sum();
        if dist > 1e-6 && probe >= apex * (1.0 + 1e-12) {
            return Err(Error::NotTouching { probe, apex });
        }
    }
    Ok(())
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * PI * u2).cos()
}
