//! Distribution checks for the random baselines against closed forms and
//! independently generated samples.

use std::f64::consts::PI;

use detbench::baselines::{rand_a_frame, sample_rand_a, sample_rand_s, sample_rand_t, sample_scale, RandParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Critical value of the two-sample test at significance 0.001.
fn ks_critical(n: usize, m: usize) -> f64 {
    1.95 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

/// Box-Muller normal draw, independent of the crate's sampler.
fn box_muller(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    mean + sd * (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

#[test]
fn clamp_fraction_matches_normal_cdf() {
    let params = RandParams::default();
    let sd = 0.5 * (params.s_max - params.s_min);
    let normal = Normal::new(params.s_min, sd).unwrap();
    let expected = (1.0 - normal.cdf(params.s_max)) + normal.cdf(-params.s_max);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 1_000_000;
    let clamped = (0..draws)
        .filter(|_| sample_scale(&params, &mut rng) == params.s_max)
        .count();
    let got = clamped as f64 / draws as f64;
    assert!((got - expected).abs() <= 0.005, "{got} vs {expected}");
}

#[test]
fn scale_mean_matches_clamped_folded_normal() {
    let params = RandParams::default();
    let sd = 0.5 * (params.s_max - params.s_min);
    let normal = Normal::new(params.s_min, sd).unwrap();
    // E[min(|G|, s_max)] = ∫_0^s_max P(|G| > x) dx, by the trapezoid rule
    let steps = 200_000;
    let h = params.s_max / steps as f64;
    let tail = |x: f64| (1.0 - normal.cdf(x)) + normal.cdf(-x);
    let expected: f64 = (0..steps)
        .map(|k| 0.5 * h * (tail(k as f64 * h) + tail((k + 1) as f64 * h)))
        .sum();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let draws = 400_000;
    let mean = (0..draws).map(|_| sample_scale(&params, &mut rng)).sum::<f64>() / draws as f64;
    // standard error is below 0.025 for these parameters
    assert!((mean - expected).abs() < 0.1, "{mean} vs {expected}");
}

#[test]
fn rand_t_centers_are_uniform() {
    let params = RandParams::default().with_seed(3);
    let (w, h) = (620.0, 420.0);
    let regions = sample_rand_t(w, h, 100_000, &params).unwrap();
    let bins = 10;
    let mut counts = vec![0f64; bins * bins];
    let r = params.point_radius;
    for reg in &regions {
        let c = reg.center();
        assert!(c.x >= r && c.x <= w - r && c.y >= r && c.y <= h - r);
        let bx = (((c.x - r) / (w - 2.0 * r)) * bins as f64).min(bins as f64 - 1.0) as usize;
        let by = (((c.y - r) / (h - 2.0 * r)) * bins as f64).min(bins as f64 - 1.0) as usize;
        counts[by * bins + bx] += 1.0;
    }
    let expected = regions.len() as f64 / counts.len() as f64;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 1e-4, "chi-square {chi2}, p = {p}");
}

#[test]
fn rand_s_radii_follow_the_scale_distribution() {
    let params = RandParams::default().with_seed(4);
    // a large domain keeps rejections negligible
    let radii: Vec<f64> = sample_rand_s(4000.0, 4000.0, 20_000, &params)
        .unwrap()
        .iter()
        .map(|r| r.excircle_radius())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sd = 0.5 * (params.s_max - params.s_min);
    let reference: Vec<f64> = (0..20_000)
        .map(|_| box_muller(&mut rng, params.s_min, sd).abs().min(params.s_max))
        .collect();
    let d = ks_statistic(&radii, &reference);
    assert!(d < ks_critical(radii.len(), reference.len()), "KS statistic {d}");
}

#[test]
fn rand_a_frames_have_the_sampled_scale_and_anisotropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10_000 {
        let s = rng.random_range(0.1..50.0);
        let a = rng.random_range(0.0..2.0);
        let frame = rand_a_frame(s, rng.random_range(-PI..PI), a);
        assert!((frame.determinant().abs().sqrt() - s).abs() <= 1e-9 * s.max(1.0));
    }

    let params = RandParams::default().with_seed(7);
    let regions = sample_rand_a(4000.0, 4000.0, 20_000, &params).unwrap();
    // log2 of the axis ratio is the anisotropy exponent, uniform on [0, 2]
    let exponents: Vec<f64> = regions
        .iter()
        .map(|r| {
            let eig = r.shape().symmetric_eigenvalues();
            0.5 * (eig.max() / eig.min()).log2()
        })
        .collect();
    let uniform: Vec<f64> = (0..20_000).map(|_| 2.0 * rng.random::<f64>()).collect();
    let d = ks_statistic(&exponents, &uniform);
    assert!(d < ks_critical(exponents.len(), uniform.len()), "KS statistic {d}");
}
