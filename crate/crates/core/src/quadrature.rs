//! Adaptive Simpson quadrature that keeps its knots, so one pass yields both
//! an integral and a cumulative table (a CDF when the integrand is a density).

use crate::error::{Error, Result};

/// Recursion depth at which refinement is abandoned.
pub const MAX_DEPTH: usize = 40;
/// Absolute tolerance used when callers have no better choice.
pub const DEFAULT_TOL: f64 = 1e-10;
const INITIAL_PANELS: usize = 64;

/// Knot of an adaptive partition: abscissa, integrand values, and the
/// integral of each component from the left end up to `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot<const K: usize> {
    pub x: f64,
    pub f: [f64; K],
    pub cumulative: [f64; K],
}

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let knots = integrate_with_knots(|x| [f(x)], a, b, tol, &[])?;
    Ok(knots.last().map_or(0.0, |k| k.cumulative[0]))
}

/// Integrates `K` integrands on one shared adaptive partition of `[a, b]`.
///
/// The interval is cut into 64 panels plus any `breakpoints` inside it (use
/// them for kinks or cusps of the integrand); each panel refines until every
/// component meets its share of `tol`. Knots are returned left to right.
pub fn integrate_with_knots<const K: usize, F>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    breakpoints: &[f64],
) -> Result<Vec<Knot<K>>>
where
    F: Fn(f64) -> [f64; K],
{
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::Quadrature(format!("invalid interval [{a}, {b}]")));
    }
    let mut cuts: Vec<f64> = (0..=INITIAL_PANELS)
        .map(|i| a + (b - a) * i as f64 / INITIAL_PANELS as f64)
        .collect();
    cuts[INITIAL_PANELS] = b;
    cuts.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite cut points"));
    cuts.dedup();

    let fa = checked(&f, a)?;
    let mut out = vec![Knot {
        x: a,
        f: fa,
        cumulative: [0.0; K],
    }];
    let mut acc = [0.0; K];
    let mut f_left = fa;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let m = 0.5 * (lo + hi);
        let fm = checked(&f, m)?;
        let fb = checked(&f, hi)?;
        let whole = simpson(lo, hi, &f_left, &fm, &fb);
        let panel_tol = tol * (hi - lo) / (b - a);
        refine(&f, [lo, m, hi], [f_left, fm, fb], whole, panel_tol, 0, &mut acc, &mut out)?;
        f_left = fb;
    }
    Ok(out)
}

fn checked<const K: usize, F: Fn(f64) -> [f64; K]>(f: &F, x: f64) -> Result<[f64; K]> {
    let v = f(x);
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Quadrature(format!("integrand not finite at x = {x}")))
    }
}

fn simpson<const K: usize>(a: f64, b: f64, fa: &[f64; K], fm: &[f64; K], fb: &[f64; K]) -> [f64; K] {
    let h = (b - a) / 6.0;
    std::array::from_fn(|k| h * (fa[k] + 4.0 * fm[k] + fb[k]))
}

#[allow(clippy::too_many_arguments)]
fn refine<const K: usize, F: Fn(f64) -> [f64; K]>(
    f: &F,
    [a, m, b]: [f64; 3],
    [fa, fm, fb]: [[f64; K]; 3],
    whole: [f64; K],
    tol: f64,
    depth: usize,
    acc: &mut [f64; K],
    out: &mut Vec<Knot<K>>,
) -> Result<()> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = checked(f, lm)?;
    let frm = checked(f, rm)?;
    let left = simpson(a, m, &fa, &flm, &fm);
    let right = simpson(m, b, &fm, &frm, &fb);
    let ok = (0..K).all(|k| {
        let err = (left[k] + right[k] - whole[k]).abs();
        // Below this the difference is rounding, not discretization.
        let floor = 64.0 * f64::EPSILON * (left[k].abs() + right[k].abs());
        err <= 15.0 * tol.max(floor)
    });
    if ok {
        // Richardson-corrected panel contributions, split at the midpoint.
        let mut mid_acc = *acc;
        for k in 0..K {
            let correction = (left[k] + right[k] - whole[k]) / 15.0;
            mid_acc[k] = acc[k] + left[k] + 0.5 * correction;
            acc[k] += left[k] + right[k] + correction;
        }
        out.push(Knot {
            x: m,
            f: fm,
            cumulative: mid_acc,
        });
        out.push(Knot {
            x: b,
            f: fb,
            cumulative: *acc,
        });
        return Ok(());
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature(format!(
            "adaptive refinement exceeded depth {MAX_DEPTH} near x = {m}"
        )));
    }
    refine(f, [a, lm, m], [fa, flm, fm], left, 0.5 * tol, depth + 1, acc, out)?;
    refine(f, [m, rm, b], [fm, frm, fb], right, 0.5 * tol, depth + 1, acc, out)
}

/// Binary search: index `i` with `knots[i].x <= x < knots[i+1].x`.
pub(crate) fn locate<const K: usize>(knots: &[Knot<K>], x: f64) -> usize {
    match knots.binary_search_by(|k| k.x.partial_cmp(&x).expect("finite knots")) {
        Ok(i) => i.min(knots.len() - 2),
        Err(0) => 0,
        Err(i) => (i - 1).min(knots.len() - 2),
    }
}

/// Cumulative integral of component `k` at `x`, interpolated between knots
/// by the cubic Hermite polynomial whose end slopes are the integrand values.
pub(crate) fn hermite_cumulative<const K: usize>(knots: &[Knot<K>], x: f64, k: usize) -> f64 {
    let first = &knots[0];
    let last = &knots[knots.len() - 1];
    if x <= first.x {
        return first.cumulative[k];
    }
    if x >= last.x {
        return last.cumulative[k];
    }
    let i = locate(knots, x);
    let (p, q) = (&knots[i], &knots[i + 1]);
    let h = q.x - p.x;
    let s = (x - p.x) / h;
    let (c0, c1) = (p.cumulative[k], q.cumulative[k]);
    let (m0, m1) = (p.f[k] * h, q.f[k] * h);
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * c0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * c1 + (s3 - s2) * m1
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn standard_normal_mass() {
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        let z = integrate(phi, -12.0, 12.0, DEFAULT_TOL).unwrap();
        assert!((z - 1.0).abs() < 1e-12, "mass {z}");
    }

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, 1e-12).unwrap();
        assert!((v - 16.0).abs() < 1e-12);
    }

    #[test]
    fn knots_are_monotone_and_cumulative() {
        let knots = integrate_with_knots(|x: f64| [x.cos(), 1.0], 0.0, 2.0, 1e-12, &[0.5]).unwrap();
        assert!(knots.windows(2).all(|w| w[1].x > w[0].x));
        assert!(knots.iter().any(|k| k.x == 0.5));
        for k in &knots {
            assert!((k.cumulative[0] - k.x.sin()).abs() < 1e-12);
            assert!((k.cumulative[1] - k.x).abs() < 1e-13);
        }
        let mid = hermite_cumulative(&knots, 1.2345, 0);
        assert!((mid - 1.2345f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn kink_with_breakpoint() {
        let v = integrate_with_knots(|x: f64| [(-x.abs()).exp()], -1.0, 1.3, 1e-12, &[0.0]).unwrap();
        let exact = 2.0 - (-1.0f64).exp() - (-1.3f64).exp();
        assert!((v.last().unwrap().cumulative[0] - exact).abs() < 1e-12);
    }

    #[test]
    fn non_finite_integrand_fails() {
        assert!(matches!(integrate(|x| 1.0 / x, -1.0, 1.0, 1e-10), Err(Error::Quadrature(_))));
        assert!(integrate(|x| x, 1.0, 1.0, 1e-10).is_err());
    }
}
