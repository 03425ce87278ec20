use nalgebra::DMatrix;
use rayon::prelude::*;

use super::body::StarBody;
use super::frame::{apex_frame, star_frame_at, StarFrame};
use crate::comparison::{gauss_compare, GaussComparison, Metrics, Region};
use crate::error::{Error, Result};
use crate::product::{build_frame, section_error, Direction, ProductDensity};
use crate::profiles::{ConvexProfile, RadialProfile};

/// Deviation of `α(t) f(β(t) T x + tθ)` from `φ_{n-1}(x)` over `omega`, one
/// report per entry of `t_grid` (in grid order).
pub fn star_convergence_sweep(
    body: &StarBody,
    rho: &RadialProfile,
    frame: &StarFrame,
    omega: &Region,
    t_grid: &[f64],
) -> Result<Vec<GaussComparison>> {
    if body.dim() != frame.dim() {
        return Err(Error::invalid("frame and body dimensions differ"));
    }
    t_grid
        .par_iter()
        .map(|&t| {
            let section = star_frame_at(frame, rho, t)?;
            let eval_err = std::sync::Mutex::new(None);
            let ln = |x: &[f64]| match section.ln_section(body, rho, x) {
                Ok(v) => v,
                Err(e) => {
                    *eval_err.lock().expect("poisoned") = Some(e);
                    f64::NAN
                }
            };
            let metrics = Metrics {
                relative: true,
                ks: frame.dim() == 2,
            };
            let res = gauss_compare(ln, frame.dim() - 1, omega, metrics);
            if let Some(e) = eval_err.into_inner().expect("poisoned") {
                return Err(e);
            }
            res
        })
        .collect()
}

/// `e^{-‖x‖_p^p}` analysed once as a product density and once as a
/// star-shaped density, on the same hyperplane.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub p: f64,
    pub dim: usize,
    /// Product offset: the hyperplane is `{⟨x, θ⟩ = T}` with `θ = (1,…,1)/√n`.
    pub offset: f64,
    /// Star parameter `t` with `tθ'` on the hyperplane, `θ' = n^{-1/p}(1,…,1)`.
    pub t: f64,
    pub product: GaussComparison,
    pub star: GaussComparison,
    /// `M` with `Qx + y = β(t) T (Mx) + tθ'`.
    pub transition: DMatrix<f64>,
    /// `‖MᵀM - I‖_max`.
    pub orthogonality_defect: f64,
}

/// Runs both pipelines for `e^{-‖x‖_p^p}` on the diagonal section at offset
/// `T`, comparing each with `φ_{n-1}` on `omega`.
pub fn cross_validate_lp(p: f64, n: usize, offset: f64, omega: &Region) -> Result<CrossValidation> {
    let density = ProductDensity::iid(ConvexProfile::power(p)?, n)?;
    let dir = Direction::diagonal(n)?;
    let pframe = build_frame(&density, &dir, offset)?;
    let (r, region) = match *omega {
        Region::Ball { radius, .. } => (radius, omega.clone()),
        Region::Cube { lo, hi, .. } => (lo.abs().max(hi.abs()), omega.clone()),
    };
    let product = section_error(&density, &pframe, r, &region)?;

    let body = StarBody::lp(n, p)?;
    let rho = RadialProfile::power(p)?;
    let apex = vec![(n as f64).powf(-1.0 / p); n];
    let t = offset * (n as f64).powf(1.0 / p - 0.5);
    let sframe = apex_frame(&body, &apex, None)?;
    let star = star_convergence_sweep(&body, &rho, &sframe, &region, &[t])?.remove(0);

    let beta = sframe.beta(&rho, t)?;
    let scaled = sframe.t_map() * beta;
    let pinv = scaled
        .clone()
        .pseudo_inverse(1e-14)
        .map_err(|e| Error::invalid(format!("pseudo-inverse failed: {e}")))?;
    let transition = pinv * pframe.q();
    let mtm = transition.transpose() * &transition;
    let orthogonality_defect = (mtm - DMatrix::identity(n - 1, n - 1)).amax();
    Ok(CrossValidation {
        p,
        dim: n,
        offset,
        t,
        product,
        star,
        transition,
        orthogonality_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_half_square_is_exact() {
        let body = StarBody::euclidean(3).unwrap();
        let frame = apex_frame(&body, &[1.0, 0.0, 0.0], None).unwrap();
        let rho = RadialProfile::half_square();
        let res = star_convergence_sweep(&body, &rho, &frame, &Region::cube(2.0), &[1.0, 3.0, 7.0]).unwrap();
        for r in res {
            assert!(r.sup_abs <= 1e-10, "{}", r.sup_abs);
        }
    }

    #[test]
    fn gaussian_cross_validation() {
        let cv = cross_validate_lp(2.0, 3, 5.0, &Region::cube(2.0)).unwrap();
        assert!(cv.product.sup_abs <= 1e-10 && cv.star.sup_abs <= 1e-10);
        assert!(cv.orthogonality_defect <= 1e-8, "{}", cv.orthogonality_defect);
        assert!((cv.t - 5.0 * 3f64.powf(0.0)).abs() < 1e-12);
    }
}
