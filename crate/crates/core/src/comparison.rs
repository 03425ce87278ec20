//! Gaussian-comparison metrics shared by the section pipelines.
//!
//! A candidate density is supplied in log form and compared with the
//! standard normal density `φ_m` on a finite grid. The log difference is
//! formed first and exponentiated once, so candidates whose normalizer alone
//! would overflow are handled.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{hermite_cumulative, integrate_with_knots, DEFAULT_TOL};

/// Where the sup metrics are sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Origin plus `shells` concentric spheres of radii `radius·k/shells`,
    /// each sampled in `directions` fixed directions.
    Ball {
        radius: f64,
        shells: usize,
        directions: usize,
    },
    /// Uniform product grid on `[lo, hi]^m` with `points` per axis.
    Cube { lo: f64, hi: f64, points: usize },
}

impl Region {
    /// The default radial-shell grid: 20 shells, 500 directions.
    pub fn ball(radius: f64) -> Self {
        Region::Ball {
            radius,
            shells: 20,
            directions: 500,
        }
    }

    /// The default product grid: 21 points per axis.
    pub fn cube(half_width: f64) -> Self {
        Region::Cube {
            lo: -half_width,
            hi: half_width,
            points: 21,
        }
    }

    /// Grid points in `R^dim`, in a fixed order.
    pub fn points(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        if dim == 0 {
            return Err(Error::invalid("comparison dimension must be at least 1"));
        }
        match *self {
            Region::Ball {
                radius,
                shells,
                directions,
            } => {
                if !(radius > 0.0) || shells == 0 || directions == 0 {
                    return Err(Error::invalid("ball grid needs radius > 0, shells > 0, directions > 0"));
                }
                let dirs = sphere_directions(dim, directions);
                let mut pts = Vec::with_capacity(1 + shells * dirs.len());
                pts.push(vec![0.0; dim]);
                for k in 1..=shells {
                    let rad = radius * k as f64 / shells as f64;
                    for d in &dirs {
                        pts.push(d.iter().map(|c| rad * c).collect());
                    }
                }
                Ok(pts)
            }
            Region::Cube { lo, hi, points } => {
                if !(hi > lo) || points < 2 {
                    return Err(Error::invalid("cube grid needs hi > lo and at least 2 points per axis"));
                }
                let total = points
                    .checked_pow(dim as u32)
                    .filter(|&n| n <= 50_000_000)
                    .ok_or_else(|| Error::invalid("cube grid too large"))?;
                let axis: Vec<f64> = (0..points)
                    .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
                    .collect();
                Ok((0..total)
                    .map(|mut idx| {
                        (0..dim)
                            .map(|_| {
                                let c = axis[idx % points];
                                idx /= points;
                                c
                            })
                            .collect()
                    })
                    .collect())
            }
        }
    }

    /// Largest spacing between neighbouring grid points along the grid
    /// lines (radial and angular for balls, axial for cubes).
    pub fn max_spacing(&self, dim: usize) -> f64 {
        match *self {
            Region::Ball {
                radius,
                shells,
                directions,
            } => {
                let radial = radius / shells as f64;
                let angular = match dim {
                    1 => 0.0,
                    2 => radius * 2.0 * PI / directions as f64,
                    // Typical nearest-neighbour angle of `directions` points on S^{dim-1}.
                    _ => radius * (2.0 * PI.powf(0.5 * dim as f64) / directions as f64).powf(1.0 / (dim - 1) as f64),
                };
                radial.max(angular)
            }
            Region::Cube { lo, hi, points } => (hi - lo) / (points - 1) as f64,
        }
    }
}

/// Fixed direction set on `S^{dim-1}`: `±1` in one dimension, equally spaced
/// angles in two, Halton points pushed through Box–Muller and normalized
/// beyond that.
pub fn sphere_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|j| {
                let a = 2.0 * PI * j as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let pairs = dim.div_ceil(2);
            (1..=count)
                .map(|i| {
                    let mut v = Vec::with_capacity(2 * pairs);
                    for k in 0..pairs {
                        let u1 = radical_inverse(i, PRIMES[2 * k]);
                        let u2 = radical_inverse(i, PRIMES[2 * k + 1]);
                        let rad = (-2.0 * (1.0 - u1).ln()).sqrt();
                        let ang = 2.0 * PI * u2;
                        v.push(rad * ang.cos());
                        v.push(rad * ang.sin());
                    }
                    v.truncate(dim);
                    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                    v.iter().map(|c| c / norm).collect()
                })
                .collect()
        }
    }
}

const PRIMES: [usize; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metrics {
    pub relative: bool,
    pub ks: bool,
}

impl Metrics {
    pub const ABSOLUTE: Metrics = Metrics {
        relative: false,
        ks: false,
    };
    pub const ALL: Metrics = Metrics {
        relative: true,
        ks: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridInfo {
    pub points: usize,
    pub max_spacing: f64,
}

/// Deviation of a candidate density from the standard normal density.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussComparison {
    /// `sup |p(x) - φ(x)|` over the grid.
    pub sup_abs: f64,
    /// `sup |p(x)/φ(x) - 1|` over the grid.
    pub sup_rel: Option<f64>,
    /// Kolmogorov distance between the normalized densities (1-D only).
    pub ks_1d: Option<f64>,
    /// Product-theorem bound `n r³ ξ(r, y_min)`.
    pub bound_surrogate: Option<f64>,
    /// `bound_surrogate ≤ 6`.
    pub bound_valid: Option<bool>,
    /// `bound_surrogate / 2`, the guaranteed sup of the relative deviation when valid.
    pub proof_bound: Option<f64>,
    pub grid: GridInfo,
}

/// `ln φ_m(x)`.
pub fn ln_std_normal(x: &[f64]) -> f64 {
    let sq: f64 = x.iter().map(|c| c * c).sum();
    -0.5 * sq - 0.5 * x.len() as f64 * (2.0 * PI).ln()
}

/// Sup deviations of `exp(log_density)` from `φ_m` on `region`, plus the
/// Kolmogorov distance when `m = 1` and a cube (interval) region is used.
pub fn gauss_compare<F>(log_density: F, dim: usize, region: &Region, metrics: Metrics) -> Result<GaussComparison>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let points = region.points(dim)?;
    let devs: Vec<(f64, f64)> = points
        .par_iter()
        .map(|x| {
            let ln_phi = ln_std_normal(x);
            let d = log_density(x) - ln_phi;
            let rel = d.exp_m1().abs();
            let abs = if rel.is_finite() { ln_phi.exp() * rel } else { (log_density(x)).exp() };
            (abs, rel)
        })
        .collect();
    if devs.iter().any(|(a, r)| a.is_nan() || r.is_nan()) {
        return Err(Error::domain("candidate log-density is NaN on the comparison grid"));
    }
    let sup_abs = devs.iter().map(|d| d.0).fold(0.0, f64::max);
    let sup_rel = devs.iter().map(|d| d.1).fold(0.0, f64::max);

    let ks_1d = match (metrics.ks, dim, region) {
        (true, 1, Region::Cube { lo, hi, .. }) => Some(ks_distance_1d(
            |v| log_density(&[v]),
            |v| ln_std_normal(&[v]),
            *lo,
            *hi,
            DEFAULT_TOL,
            &[],
        )?),
        (true, 1, Region::Ball { radius, .. }) => Some(ks_distance_1d(
            |v| log_density(&[v]),
            |v| ln_std_normal(&[v]),
            -radius,
            *radius,
            DEFAULT_TOL,
            &[],
        )?),
        _ => None,
    };
    Ok(GaussComparison {
        sup_abs,
        sup_rel: metrics.relative.then_some(sup_rel),
        ks_1d,
        bound_surrogate: None,
        bound_valid: None,
        proof_bound: None,
        grid: GridInfo {
            points: points.len(),
            max_spacing: region.max_spacing(dim),
        },
    })
}

/// Kolmogorov distance between two densities on `[a, b]`, each normalized
/// by its own quadrature mass on the interval. Both are integrated on one
/// shared adaptive partition (cut at `breakpoints`) and the CDF gap is read
/// at its knots.
pub fn ks_distance_1d<P, Q>(log_p: P, log_q: Q, a: f64, b: f64, tol: f64, breakpoints: &[f64]) -> Result<f64>
where
    P: Fn(f64) -> f64,
    Q: Fn(f64) -> f64,
{
    let knots = integrate_with_knots(|v| [log_p(v).exp(), log_q(v).exp()], a, b, tol, breakpoints)?;
    let total = knots.last().expect("at least one knot").cumulative;
    if !(total[0] > 0.0 && total[1] > 0.0) {
        return Err(Error::Quadrature("density has no mass on the interval".into()));
    }
    let gap = |x: f64| {
        (hermite_cumulative(&knots, x, 0) / total[0] - hermite_cumulative(&knots, x, 1) / total[1]).abs()
    };
    let (best, mut d) = knots
        .iter()
        .enumerate()
        .map(|(i, k)| (i, (k.cumulative[0] / total[0] - k.cumulative[1] / total[1]).abs()))
        .fold((0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
    // The sup generally falls between knots; search the two neighbouring
    // cells on the Hermite interpolant.
    for (lo, hi) in [(best.saturating_sub(1), best), (best, (best + 1).min(knots.len() - 1))] {
        if hi > lo {
            d = d.max(golden_max(gap, knots[lo].x, knots[hi].x));
        }
    }
    Ok(d.min(1.0))
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflexive() {
        let cmp = gauss_compare(ln_std_normal, 2, &Region::cube(3.0), Metrics::ALL).unwrap();
        assert_eq!(cmp.sup_abs, 0.0);
        assert_eq!(cmp.sup_rel, Some(0.0));
        assert_eq!(cmp.ks_1d, None);
        assert_eq!(cmp.grid.points, 441);
    }

    #[test]
    fn directions_are_unit() {
        for dim in 1..6 {
            for d in sphere_directions(dim, 50) {
                let n: f64 = d.iter().map(|c| c * c).sum();
                assert!((n - 1.0).abs() < 1e-14);
                assert_eq!(d.len(), dim);
            }
        }
    }

    #[test]
    fn ball_grid_size() {
        let pts = Region::ball(2.0).points(3).unwrap();
        assert_eq!(pts.len(), 1 + 20 * 500);
        let max_r = pts.iter().map(|p| p.iter().map(|c| c * c).sum::<f64>().sqrt()).fold(0.0, f64::max);
        assert!((max_r - 2.0).abs() < 1e-14);
        assert_eq!(Region::ball(2.0).points(1).unwrap().len(), 41);
    }

    #[test]
    fn shifted_normal_ks() {
        let mu = 0.5;
        let d = ks_distance_1d(|v| ln_std_normal(&[v - mu]), |v| ln_std_normal(&[v]), -12.0, 12.0, DEFAULT_TOL, &[]).unwrap();
        // 2Φ(μ/2) - 1 with Φ(0.25) = 0.598706325682924.
        assert!((d - (2.0 * 0.598706325682924 - 1.0)).abs() < 1e-9, "{d}");
        let scaled = ks_distance_1d(
            |v| ln_std_normal(&[v / 2.0 - mu]),
            |v| ln_std_normal(&[v / 2.0]),
            -24.0,
            24.0,
            DEFAULT_TOL,
            &[],
        )
        .unwrap();
        assert!((scaled - d).abs() < 1e-10);
    }

    #[test]
    fn nan_candidate_is_an_error() {
        let res = gauss_compare(|_| f64::NAN, 1, &Region::cube(1.0), Metrics::ABSOLUTE);
        assert!(res.is_err());
    }
}
