//! Second derivatives by central differences with Ridders' extrapolation.
//!
//! Each entry starts from a fairly large step and shrinks it by a constant
//! factor, extrapolating the `O(h²)` error away in a Neville tableau. The
//! running error estimate doubles as a smoothness test: at a kink the
//! difference quotients diverge and the estimate stays large.

use nalgebra::DMatrix;

const SHRINK: f64 = 1.4;
const TABLEAU: usize = 10;
const SAFE: f64 = 2.0;

/// Extrapolated limit of `quotient(h)` as `h → 0`, with its error estimate.
/// `quotient` must have an error expansion in even powers of `h`.
pub(crate) fn ridders<F: Fn(f64) -> f64>(quotient: F, h0: f64) -> (f64, f64) {
    let con2 = SHRINK * SHRINK;
    let mut a = [[0.0_f64; TABLEAU]; TABLEAU];
    let mut h = h0;
    a[0][0] = quotient(h);
    let mut best = a[0][0];
    let mut err = f64::INFINITY;
    for i in 1..TABLEAU {
        h /= SHRINK;
        a[0][i] = quotient(h);
        let mut fac = con2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= con2;
            let e = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * err {
            break;
        }
    }
    (best, err)
}

/// Hessian of `f` at `x` with per-entry error estimates.
pub(crate) fn hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h0: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = x.len();
    let mut h = DMatrix::zeros(m, m);
    let mut e = DMatrix::zeros(m, m);
    let f0 = f(x);
    let at = |steps: &[(usize, f64)]| {
        let mut p = x.to_vec();
        for &(k, s) in steps {
            p[k] += s;
        }
        f(&p)
    };
    for i in 0..m {
        let (v, err) = ridders(|s| (at(&[(i, s)]) - 2.0 * f0 + at(&[(i, -s)])) / (s * s), h0);
        h[(i, i)] = v;
        e[(i, i)] = err;
        for j in 0..i {
            let (v, err) = ridders(
                |s| {
                    (at(&[(i, s), (j, s)]) - at(&[(i, s), (j, -s)]) - at(&[(i, -s), (j, s)]) + at(&[(i, -s), (j, -s)]))
                        / (4.0 * s * s)
                },
                h0,
            );
            h[(i, j)] = v;
            h[(j, i)] = v;
            e[(i, j)] = err;
            e[(j, i)] = err;
        }
    }
    (h, e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_hessian() {
        let f = |x: &[f64]| (x[0] * x[1]).sin() + x[0].powi(3);
        let x = [0.3, -0.7];
        let (h, e) = hessian(f, &x, 0.1);
        let s = (x[0] * x[1]).sin();
        let c = (x[0] * x[1]).cos();
        let exact = [6.0 * x[0] - x[1] * x[1] * s, c - x[0] * x[1] * s, -x[0] * x[0] * s];
        assert!((h[(0, 0)] - exact[0]).abs() < 1e-10);
        assert!((h[(1, 0)] - exact[1]).abs() < 1e-10);
        assert!((h[(1, 1)] - exact[2]).abs() < 1e-10);
        assert!(e.amax() < 1e-8);
    }

    #[test]
    fn kink_has_large_error() {
        let (_, err) = ridders(|s| ((s).abs() - 2.0 * 0.0 + (-s).abs()) / (s * s), 0.1);
        assert!(err > 1.0);
    }
}
