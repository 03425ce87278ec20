//! Root finding for monotone scalar maps: doubling bracket, bisection to
//! adjacent floats, Newton polish.

use crate::error::{Error, Result};

const MAX_DOUBLINGS: usize = 1100;
const MAX_BISECTIONS: usize = 200;
const POLISH_STEPS: usize = 3;

/// Solves `f(x) = target` for a strictly increasing `f`.
///
/// The bracket grows from `start ± scale` by doubling until the residual
/// changes sign; if `f` never reaches `target` this is a [`Error::Range`].
/// `df`, when supplied, drives a Newton polish that is only accepted when it
/// reduces the residual without leaving the bracket.
pub(crate) fn solve_increasing<F, D>(f: F, df: Option<D>, target: f64, start: f64, scale: f64, what: &str) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> Result<f64>,
{
    let resid = |x: f64| -> Result<f64> { Ok(f(x)? - target) };
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };

    let r0 = resid(start)?;
    if r0 == 0.0 {
        return Ok(start);
    }
    let (mut lo, mut hi) = (start, start);
    let mut step = scale;
    let mut crossed = false;
    for _ in 0..MAX_DOUBLINGS {
        if r0 < 0.0 {
            hi = start + step;
            if !hi.is_finite() {
                break;
            }
            if resid(hi)? >= 0.0 {
                crossed = true;
                break;
            }
            lo = hi;
        } else {
            lo = start - step;
            if !lo.is_finite() {
                break;
            }
            if resid(lo)? <= 0.0 {
                crossed = true;
                break;
            }
            hi = lo;
        }
        step *= 2.0;
    }
    if !crossed {
        return Err(Error::Range(format!(
            "{what}: target {target} outside the range of the increasing map"
        )));
    }
    if r0 < 0.0 {
        lo = lo.max(start);
    } else {
        hi = hi.min(start);
    }

    let mut converged = false;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            converged = true;
            break;
        }
        if resid(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (rlo, rhi) = (resid(lo)?, resid(hi)?);
    let (mut x, mut r) = if rlo.abs() <= rhi.abs() { (lo, rlo) } else { (hi, rhi) };
    if !converged && (hi - lo) > 1e-12 * (1.0 + x.abs()) {
        return Err(Error::NonConvergence {
            what: what.to_string(),
            iterations: MAX_BISECTIONS,
        });
    }

    if let Some(df) = df {
        for _ in 0..POLISH_STEPS {
            if r == 0.0 {
                break;
            }
            let Ok(slope) = df(x) else { break };
            if !(slope > 0.0 && slope.is_finite()) {
                break;
            }
            let cand = x - r / slope;
            if !(cand >= lo - (hi - lo) && cand <= hi + (hi - lo)) {
                break;
            }
            let Ok(rc) = resid(cand) else { break };
            if rc.abs() < r.abs() {
                x = cand;
                r = rc;
            } else {
                break;
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    type NoDeriv = fn(f64) -> Result<f64>;

    #[test]
    fn cube_root() {
        let x = solve_increasing(|x| Ok(x * x * x), Some(|x: f64| Ok(3.0 * x * x)), 27.0, 0.0, 1.0, "cube").unwrap();
        assert!((x - 3.0).abs() < 1e-15);
        let x = solve_increasing(|x| Ok(x * x * x), None::<NoDeriv>, -8.0, 5.0, 0.5, "cube").unwrap();
        assert!((x + 2.0).abs() < 1e-14);
    }

    #[test]
    fn bounded_map_is_a_range_error() {
        let res = solve_increasing(|x: f64| Ok(x.atan()), None::<NoDeriv>, 2.0, 0.0, 1.0, "atan");
        assert!(matches!(res, Err(Error::Range(_))));
    }
}
