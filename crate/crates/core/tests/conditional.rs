use sections_core::conditional::{conditional_density, conditional_mc, ks_empirical, ks_normal};
use sections_core::product::{build_frame, Direction, ProductDensity};
use sections_core::profiles::ConvexProfile;
use sections_core::quadrature::integrate;

fn power(p: f64) -> ConvexProfile {
    ConvexProfile::power(p).unwrap()
}

/// Compares the conditional law with the normalized one-dimensional product
/// section along the diagonal, read in the coordinate `v = T + x_2`.
fn check_against_product_section(g: &ConvexProfile, offset: f64) {
    let law = conditional_density(g, offset).unwrap();
    let density = ProductDensity::iid(g.clone(), 2).unwrap();
    let frame = build_frame(&density, &Direction::diagonal(2).unwrap(), offset / 2f64.sqrt()).unwrap();
    let slope = frame.q()[(1, 0)];
    let y2 = frame.apex()[1];
    let to_x = |v: f64| (v - offset - y2) / slope;
    let (lo, hi) = law.support();
    let (a, b) = if slope > 0.0 { (to_x(lo), to_x(hi)) } else { (to_x(hi), to_x(lo)) };
    let section = |x: f64| frame.ln_section(&density, &[x]).unwrap().exp();
    let mass = integrate(section, a, b, 1e-13).unwrap();
    let peak = law.pdf(law.mode()).unwrap();
    for k in 0..100 {
        let v = lo + (hi - lo) * (k as f64 + 0.5) / 100.0;
        let from_section = section(to_x(v)) / (mass * slope.abs());
        let direct = law.pdf(v).unwrap();
        assert!((from_section - direct).abs() <= 1e-8 * peak, "{} T = {offset} v = {v}: {from_section} vs {direct}", g.label());
    }
}

#[test]
fn agrees_with_the_product_section() {
    check_against_product_section(&power(4.0), 5.0);
    check_against_product_section(&ConvexProfile::cosh(), 3.0);
    check_against_product_section(&power(1.5), 6.0);
}

#[test]
fn law_is_normalized() {
    for (g, t) in [(power(4.0), 3.0), (ConvexProfile::cosh(), 6.0), (power(1.5), 2.0)] {
        let law = conditional_density(&g, t).unwrap();
        let (lo, hi) = law.support();
        let pdf = |v: f64| law.pdf(v).unwrap();
        let mass = integrate(pdf, lo, hi, 1e-12).unwrap();
        assert!((mass - 1.0).abs() < 1e-9, "{}: {mass}", g.label());
        let mean = integrate(|v| v * pdf(v), lo, hi, 1e-12).unwrap();
        assert!((mean - law.mean()).abs() < 1e-8 * (1.0 + mean.abs()));
        let var = integrate(|v| (v - mean).powi(2) * pdf(v), lo, hi, 1e-12).unwrap();
        assert!((var / law.variance() - 1.0).abs() < 1e-7);
        assert!(law.cdf(lo) <= 1e-12 && (law.cdf(hi) - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn normality_improves_with_the_offset() {
    for p in [1.5, 4.0] {
        let ks: Vec<f64> = [4.0, 8.0, 16.0]
            .iter()
            .map(|&t| ks_normal(&conditional_density(&power(p), t).unwrap()).unwrap())
            .collect();
        assert!(ks.windows(2).all(|w| w[1] < w[0]), "p = {p}: {ks:?}");
    }
    // Two positive cubes summing to T add up to a quadratic, so the law is
    // Gaussian up to negligible tails at every offset.
    for t in [4.0, 8.0, 16.0] {
        let ks = ks_normal(&conditional_density(&power(3.0), t).unwrap()).unwrap();
        assert!(ks <= 1e-11, "T = {t}: {ks}");
    }
    let cosh = ks_normal(&conditional_density(&ConvexProfile::cosh(), 8.0).unwrap()).unwrap();
    assert!(cosh < 0.05, "{cosh}");
}

#[test]
fn gaussian_monte_carlo_mean() {
    let (t, delta, n) = (3.0, 0.01, 20_000);
    let g = ConvexProfile::gaussian();
    let sample = conditional_mc(&g, t, delta, n, 1).unwrap();
    assert_eq!(sample.values.len(), n);
    let mean = sample.values.iter().sum::<f64>() / n as f64;
    // Given X + Y = s the value is 1.5 s with variance 1/2; s averages T + δ/2.
    let se = (0.5 / n as f64).sqrt();
    assert!((mean - 1.5 * (t + delta / 2.0)).abs() <= 3.0 * se, "{mean}");
    let law = conditional_density(&g, t).unwrap();
    assert!(ks_empirical(&sample.values, &law) < 0.02);
}

#[test]
fn sampling_ignores_the_thread_count() {
    let g = power(4.0);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| conditional_mc(&g, 2.0, 0.05, 3000, 9).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_ne!(one.values, conditional_mc(&g, 2.0, 0.05, 3000, 10).unwrap().values);
}
