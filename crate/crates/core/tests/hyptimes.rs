use proptest::prelude::*;
use rand::Rng;
use skewdyn::branch::track_branch;
use skewdyn::hyptimes::*;
use skewdyn::maps::*;
use skewdyn::rng::sample_rng;

fn brute_force(values: &[f64], c1: f64) -> Vec<usize> {
    (1..=values.len())
        .filter(|&n| (0..n).all(|k| values[k..n].iter().sum::<f64>() >= c1 * (n - k) as f64))
        .collect()
}

proptest! {
    #[test]
    fn pliss_scan_equals_brute_force(raw in prop::collection::vec(-8i32..=12, 0..120), c1q in 0i32..6) {
        // Quarter-integer data keeps every partial sum exact.
        let values: Vec<f64> = raw.iter().map(|&v| v as f64 / 4.0).collect();
        let c1 = c1q as f64 / 4.0;
        let t = pliss_times(&PlissQuery { values: values.clone(), c1, c2: c1 + 0.25, a: 3.0 }).unwrap();
        prop_assert_eq!(t.indices, brute_force(&values, c1));
        if t.guaranteed {
            prop_assert!(t.density >= t.zeta);
        }
    }
}

/// Points of the default Viana map with r_k ≥ 0.2 for some k ≤ 30.
fn hyperbolic_like_points(count: usize) -> Vec<(SkewPoint, usize)> {
    let skew = SkewProduct::viana_default();
    let mut found = Vec::new();
    for i in 0..1000u64 {
        let mut rng = sample_rng(31, i);
        let z = SkewPoint::new(rng.gen(), -1.85 + 3.7 * rng.gen::<f64>());
        let seq = fiber_sequence(&skew, z.theta).unwrap();
        let Ok(b) = track_branch(&seq, z.x, 30) else { continue };
        let times = hyperbolic_like_times(&b, 0.2).unwrap();
        if let Some(&k) = times.iter().rev().find(|&&k| k >= 5) {
            found.push((z, k));
        }
        if found.len() == count {
            break;
        }
    }
    found
}

#[test]
fn probe_reports_are_well_formed_and_stable() {
    let skew = SkewProduct::viana_default();
    let points = hyperbolic_like_points(10);
    assert_eq!(points.len(), 10);
    for (z, k) in points {
        let coarse = probe_neighborhood(&skew, z, k, 0.2, 32).unwrap();
        let fine = probe_neighborhood(&skew, z, k, 0.2, 64).unwrap();
        for r in [&coarse, &fine] {
            assert!(r.injective && r.fold_free, "{z:?} k = {k}");
            assert!(r.k_hat.is_finite() && r.k_hat >= 1.0);
            assert!(r.delta1_hat > 0.0);
        }
        let rel = |a: f64, b: f64| (a - b).abs() / a.max(b);
        assert!(rel(coarse.k_hat, fine.k_hat) <= 0.05, "{} vs {}", coarse.k_hat, fine.k_hat);
        assert!(rel(coarse.delta1_hat, fine.delta1_hat) <= 0.05);
    }
}

#[test]
fn iterated_alpha_curves_stay_within_the_slope_bound() {
    let skew = SkewProduct::viana_default();
    let consts = CurveConstants::from_skew(&skew, 0.01).unwrap();
    let c2 = consts.c2();
    for s in 0..3u64 {
        let mut rng = sample_rng(77, s);
        let (c, freq, phase): (f64, f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(1.0..4.0), rng.gen());
        let amp = 0.01 / (2.0 * std::f64::consts::PI * freq);
        let curve = CurveGraph::from_fn(0.0, 1.0, 513, |t| c + amp * (2.0 * std::f64::consts::PI * (freq * t + phase)).sin())
            .unwrap();
        assert!(curve.is_alpha_curve(0.01));
        let prop = propagate_curve(&skew, &curve, 30).unwrap();
        for level in &prop.levels[1..] {
            assert!(level.max_slope_all <= consts.c1(level.iterate));
            for (pi, piece) in level.pieces.iter().enumerate() {
                if piece.graph.domain.1 - piece.graph.domain.0 < 1.0 / 64.0 {
                    continue;
                }
                for k in 1..=level.iterate.min(8) {
                    let check = arc_contraction(&skew, &prop, level.iterate, pi, k, c2).unwrap();
                    assert!(check.holds(), "{check:?}");
                }
            }
        }
    }
}
