use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ConditionalLaw;
use crate::error::{Error, Result};
use crate::profiles::ConvexProfile;
use crate::quadrature::{hermite_cumulative, integrate_with_knots, locate, Knot};
use crate::roots::solve_increasing;

/// Rejection rates below this are refused.
pub const MIN_ACCEPTANCE: f64 = 1e-6;
/// Log-density drop at which the sampling table is cut.
const TABLE_TRUNCATION: f64 = 50.0;
const GUIDE_CELLS: usize = 8192;
/// Accepted samples produced per random stream.
pub const BATCH_QUOTA: usize = 1000;

/// Inverse-CDF sampler for the density proportional to `e^{-g}`.
#[derive(Debug, Clone)]
pub struct ProfileSampler {
    knots: Vec<Knot<1>>,
    total: f64,
    guide: Vec<usize>,
    /// `bounds[j]` is the quantile at `j / GUIDE_CELLS`.
    bounds: Vec<f64>,
}

impl ProfileSampler {
    /// Tabulates the CDF on the interval where `g` is within
    /// `50` of its minimum.
    pub fn new(g: &ConvexProfile) -> Result<Self> {
        let argmin = solve_increasing(|x| g.eval(x, 1), None::<fn(f64) -> Result<f64>>, 0.0, 0.0, 1.0, "profile minimum")?;
        let g_min = g.eval(argmin, 0)?;
        let edge = |side: f64| -> Result<f64> {
            let rise = |s: f64| -> Result<f64> { Ok(g.eval(argmin + side * s.exp(), 0)? - g_min) };
            let s = solve_increasing(rise, None::<fn(f64) -> Result<f64>>, TABLE_TRUNCATION, 0.0, 1.0, "sampler bracket")
                .map_err(|_| Error::MassEscape("e^{-g} does not decay on both sides".into()))?;
            Ok(argmin + side * s.exp())
        };
        let (lo, hi) = (edge(-1.0)?, edge(1.0)?);
        let knots = integrate_with_knots(
            |x| [g.eval(x, 0).map(|v| (g_min - v).exp()).unwrap_or(f64::NAN)],
            lo,
            hi,
            1e-13,
            &[0.0, argmin],
        )?;
        let total = knots.last().expect("non-empty").cumulative[0];
        let mut guide = Vec::with_capacity(GUIDE_CELLS + 1);
        let mut i = 0;
        for j in 0..=GUIDE_CELLS {
            let level = total * j as f64 / GUIDE_CELLS as f64;
            while i + 2 < knots.len() && knots[i + 1].cumulative[0] < level {
                i += 1;
            }
            guide.push(i);
        }
        let mut sampler = Self {
            knots,
            total,
            guide,
            bounds: Vec::new(),
        };
        sampler.bounds = (0..=GUIDE_CELLS)
            .map(|j| sampler.quantile(j as f64 / GUIDE_CELLS as f64))
            .collect();
        Ok(sampler)
    }

    /// Interval that contains `quantile(u)`.
    fn cell_range(&self, u: f64) -> (f64, f64) {
        let j = ((u * GUIDE_CELLS as f64) as usize).min(GUIDE_CELLS - 1);
        (self.bounds[j], self.bounds[j + 1])
    }

    /// Support of the table.
    pub fn support(&self) -> (f64, f64) {
        (self.knots[0].x, self.knots[self.knots.len() - 1].x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (hermite_cumulative(&self.knots, x, 0) / self.total).clamp(0.0, 1.0)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        let i = locate(&self.knots, x);
        let (p, q) = (&self.knots[i], &self.knots[i + 1]);
        let s = (x - p.x) / (q.x - p.x);
        ((1.0 - s) * p.f[0] + s * q.f[0]) / self.total
    }

    /// Inverse of [`Self::cdf`], by Newton steps on the cubic of one cell.
    pub fn quantile(&self, u: f64) -> f64 {
        let level = u * self.total;
        let cell = ((u * GUIDE_CELLS as f64) as usize).min(GUIDE_CELLS);
        let mut i = self.guide[cell];
        while i + 2 < self.knots.len() && self.knots[i + 1].cumulative[0] < level {
            i += 1;
        }
        let (p, q) = (&self.knots[i], &self.knots[i + 1]);
        let h = q.x - p.x;
        let (c0, c1) = (p.cumulative[0], q.cumulative[0]);
        let (m0, m1) = (p.f[0] * h, q.f[0] * h);
        let mut s = if c1 > c0 { ((level - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.5 };
        for _ in 0..4 {
            let s2 = s * s;
            let s3 = s2 * s;
            let c = (2.0 * s3 - 3.0 * s2 + 1.0) * c0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * c1 + (s3 - s2) * m1;
            let dc = (6.0 * s2 - 6.0 * s) * c0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * c1 + (3.0 * s2 - 2.0 * s) * m1;
            if !(dc > 0.0) {
                break;
            }
            s = (s - (c - level) / dc).clamp(0.0, 1.0);
        }
        p.x + s * h
    }

    /// `P(X + Y ∈ [T, T + δ])` for independent draws from the table.
    pub fn slab_probability(&self, offset: f64, delta: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        let knots = integrate_with_knots(
            |x| [self.pdf(x) * (self.cdf(offset + delta - x) - self.cdf(offset - x))],
            lo,
            hi,
            1e-13,
            &[],
        )?;
        Ok(knots.last().expect("non-empty").cumulative[0].max(0.0))
    }
}

/// Accepted values of `X + 2Y` given `X + Y ∈ [T, T + δ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSample {
    pub values: Vec<f64>,
    /// Pairs drawn, accepted or not.
    pub draws: u64,
    /// Slab probability computed by quadrature before sampling.
    pub acceptance_rate: f64,
}

/// Rejection sampling from exact i.i.d. draws. Batch `k` uses the ChaCha8
/// stream `k` of `seed` and contributes a fixed quota, so the output does not
/// depend on scheduling.
pub fn conditional_mc(g: &ConvexProfile, offset: f64, delta: f64, n_samples: usize, seed: u64) -> Result<ConditionalSample> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("slab width δ must be positive, got {delta}")));
    }
    if n_samples == 0 {
        return Ok(ConditionalSample {
            values: Vec::new(),
            draws: 0,
            acceptance_rate: f64::NAN,
        });
    }
    let sampler = ProfileSampler::new(g)?;
    let rate = sampler.slab_probability(offset, delta)?;
    if !(rate >= MIN_ACCEPTANCE) {
        return Err(Error::AcceptanceTooLow { rate });
    }
    let batches = n_samples.div_ceil(BATCH_QUOTA);
    let parts: Vec<(Vec<f64>, u64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let quota = BATCH_QUOTA.min(n_samples - b * BATCH_QUOTA);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut out = Vec::with_capacity(quota);
            let mut draws = 0u64;
            while out.len() < quota {
                draws += 1;
                let (u, w): (f64, f64) = (rng.random(), rng.random());
                // Exact pre-filter: the pair can only land in the slab if the
                // sum of the cells' quantile ranges meets it.
                let (xl, xh) = sampler.cell_range(u);
                let (yl, yh) = sampler.cell_range(w);
                let slack = 1e-9 * (1.0 + offset.abs());
                if xh + yh < offset - slack || xl + yl > offset + delta + slack {
                    continue;
                }
                let x = sampler.quantile(u);
                let y = sampler.quantile(w);
                let s = x + y;
                if s >= offset && s <= offset + delta {
                    out.push(x + 2.0 * y);
                }
            }
            (out, draws)
        })
        .collect();
    let draws = parts.iter().map(|p| p.1).sum();
    let values = parts.into_iter().flat_map(|p| p.0).collect();
    Ok(ConditionalSample {
        values,
        draws,
        acceptance_rate: rate,
    })
}

/// Kolmogorov distance between the empirical CDF of `sample` and `law`.
pub fn ks_empirical(sample: &[f64], law: &ConditionalLaw) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = law.cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
