mod common;

use std::f64::consts::PI;

use detbench::baselines::{ellipse_from_frame, rand_a_frame};
use detbench::geometry::{normalized_overlap, raster_overlap, Homography, QuickReject, Region};
use detbench::matching::{build_candidates, greedy_match, CandidatePair, OverlapParams};
use detbench::metrics::{aggregate, stability, AggregateOptions};
use detbench::protocol::{pair_repeatability, EvalParams, ImageInfo, PairTask};
use nalgebra::{Matrix3, Point2};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_ellipse(rng: &mut ChaCha8Rng, cx: f64, cy: f64, s: f64) -> Region {
    let frame = rand_a_frame(s, rng.random_range(-PI..PI), rng.random_range(0.0..2.0));
    ellipse_from_frame(Point2::new(cx, cy), &frame, 1.0).unwrap()
}

/// Pairs of comparable size with partially overlapping supports.
fn overlapping_pair(rng: &mut ChaCha8Rng) -> (Region, Region) {
    let s = rng.random_range(3.0..30.0);
    let a = random_ellipse(rng, 100.0, 100.0, s);
    let d = rng.random_range(0.0..s);
    let phi = rng.random_range(-PI..PI);
    let sb = s * rng.random_range(0.6..1.6);
    let b = random_ellipse(rng, 100.0 + d * phi.cos(), 100.0 + d * phi.sin(), sb);
    (a, b)
}

#[test]
fn raster_overlap_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mc_rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..40 {
        let (a, b) = overlapping_pair(&mut rng);
        let raster = raster_overlap(&a, &b);
        let mc = common::monte_carlo_iou(&a, &b, 400_000, &mut mc_rng);
        assert!((raster - mc).abs() <= 0.008, "raster {raster} vs monte carlo {mc}");
        assert_eq!(raster, raster_overlap(&b, &a));
    }
}

#[test]
fn normalized_overlap_matches_monte_carlo_on_rescaled_regions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mc_rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let (a, b) = overlapping_pair(&mut rng);
        let f = (900.0 / a.area()).sqrt();
        // rescale both regions about their own centers by hand
        let na = Region::new(a.center(), a.shape() / (f * f), 0.0).unwrap();
        let nb = Region::new(b.center(), b.shape() / (f * f), 0.0).unwrap();
        let mc = common::monte_carlo_iou(&na, &nb, 400_000, &mut mc_rng);
        let got = normalized_overlap(&a, &b, 900.0, QuickReject::Normalized).unwrap();
        assert!((got - mc).abs() <= 0.008, "{got} vs {mc}");
    }
}

#[test]
fn point_radius_does_not_matter() {
    let h = Homography::new(Matrix3::new(1.05, 0.02, 3.0, -0.01, 0.97, -2.0, 2e-5, -1e-5, 1.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (x, y) = (rng.random_range(50.0..400.0), rng.random_range(50.0..400.0));
        let (dx, dy) = (rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
        let values: Vec<f64> = [1.0, 5.0, 10.0]
            .iter()
            .map(|&rho| {
                let r = Region::circle(x, y, rho, 1.0).unwrap();
                let t = Region::circle(x + dx, y + dy, rho, 1.0).unwrap().warp(&h).unwrap();
                normalized_overlap(&r, &t, 900.0, QuickReject::Normalized).unwrap()
            })
            .collect();
        assert!(
            (values[0] - values[1]).abs() <= 1e-9 && (values[1] - values[2]).abs() <= 1e-9,
            "{values:?}"
        );
    }
}

fn random_instance(rng: &mut ChaCha8Rng) -> (usize, usize, Vec<CandidatePair>) {
    let rows = rng.random_range(1..=8);
    let cols = rng.random_range(1..=8);
    let density = rng.random_range(0.2..1.0);
    let mut candidates = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.random::<f64>() < density {
                candidates.push(CandidatePair {
                    ref_index: i,
                    target_index: j,
                    overlap: rng.random_range(0.6..1.0),
                });
            }
        }
    }
    (rows, cols, candidates)
}

#[test]
fn greedy_is_a_half_approximation() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..300 {
        let (rows, cols, candidates) = random_instance(&mut rng);
        let greedy = greedy_match(&candidates).total_overlap();
        let best = common::exhaustive_max_weight(rows, cols, &candidates);
        assert!(greedy >= 0.5 * best - 1e-12, "{greedy} < {best} / 2");
        assert!(greedy <= best + 1e-12);
    }
}

#[test]
fn greedy_ignores_candidate_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(56);
    for _ in 0..200 {
        let (_, _, mut candidates) = random_instance(&mut rng);
        // quantize so ties are common
        for c in &mut candidates {
            c.overlap = (c.overlap * 10.0).round() / 10.0;
        }
        let reference = greedy_match(&candidates);
        candidates.shuffle(&mut rng);
        assert_eq!(greedy_match(&candidates), reference);
    }
}

#[test]
fn percentiles_match_sort_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let ns = [100, 200, 500, 1000];
    let mut records = Vec::new();
    for t in 0..250 {
        for &n in &ns {
            records.push(common::record("d", &format!("t{t:03}"), n, rng.random::<f64>()));
        }
    }
    records.shuffle(&mut rng);
    let s = &aggregate(&records, AggregateOptions::default()).unwrap()[0];
    let pooled: Vec<f64> = records.iter().map(|r| r.rep).collect();
    for (p, got) in [
        (0.10, s.percentiles.p10),
        (0.25, s.percentiles.p25),
        (0.50, s.percentiles.p50),
        (0.75, s.percentiles.p75),
        (0.90, s.percentiles.p90),
    ] {
        assert!((got - common::sorted_percentile(&pooled, p)).abs() <= 1e-12);
    }
    assert!((s.mean - pooled.iter().sum::<f64>() / pooled.len() as f64).abs() <= 1e-12);

    let by_n: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let v: Vec<f64> = records.iter().filter(|r| r.n == n).map(|r| r.rep).collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
    let mean = by_n.iter().sum::<f64>() / 4.0;
    let sd = (by_n.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
    assert!((s.rep - mean).abs() <= 1e-12);
    assert!((s.stability.unwrap() - sd / mean).abs() <= 1e-12);
    assert_eq!(stability(&[0.7; 4]), Some(0.0));
}

fn task(w: u32, h: u32) -> PairTask {
    PairTask::new(
        "t",
        ImageInfo::new("a", w, h),
        ImageInfo::new("b", w, h),
        Homography::identity(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn self_evaluation_is_exact(
        regions in prop::collection::vec(
            (0.0f64..300.0, 0.0f64..200.0, 0.5f64..40.0, -PI..PI, 0.0f64..2.0, 0.0f64..5.0), 1..120),
    ) {
        let dets: Vec<Region> = regions
            .iter()
            .map(|&(x, y, s, th, a, score)| ellipse_from_frame(Point2::new(x, y), &rand_a_frame(s, th, a), score).unwrap())
            .collect();
        let t = task(300, 200);
        for n in [1, 10, 50, 100, 1000] {
            let r = pair_repeatability("d", &dets, &dets, &t, &EvalParams::default(), n).unwrap();
            prop_assert_eq!(r.rep, 1.0);
        }
    }

    #[test]
    fn candidates_are_invariant_to_a_common_translation(
        pts in prop::collection::vec((20.0f64..200.0, 20.0f64..200.0, 2.0f64..20.0), 1..25),
        shift in (-50.0f64..50.0, -50.0f64..50.0),
    ) {
        let refs: Vec<Region> = pts.iter().map(|&(x, y, r)| Region::circle(x, y, r, 0.0).unwrap()).collect();
        let targets: Vec<Region> = pts
            .iter()
            .map(|&(x, y, r)| Region::circle(x + shift.0 + 0.5, y + shift.1, r * 1.1, 0.0).unwrap())
            .collect();
        let h = Homography::translation(shift.0, shift.1);
        let a = build_candidates(&refs, &targets, &h, &OverlapParams::default());
        let b = build_candidates(&refs, &targets.iter().map(|t| Region::circle(t.center().x - shift.0, t.center().y - shift.1, t.excircle_radius(), 0.0).unwrap()).collect::<Vec<_>>(), &Homography::identity(), &OverlapParams::default());
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!((x.ref_index, x.target_index), (y.ref_index, y.target_index));
            prop_assert!((x.overlap - y.overlap).abs() < 1e-9);
        }
    }
}
