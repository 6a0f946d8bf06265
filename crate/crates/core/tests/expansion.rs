use nalgebra::Matrix2;
use rand::Rng;
use skewdyn::expansion::*;
use skewdyn::maps::*;
use skewdyn::rng::sample_rng;

/// min over unit vectors of |Mv|: a coarse sweep of the half circle, then a
/// second sweep across the bracket of the coarse minimum.
fn sweep_min(m: &Matrix2<f64>) -> f64 {
    let norm_at = |t: f64| (m * nalgebra::Vector2::new(t.cos(), t.sin())).norm();
    let steps = 10_000;
    let h = std::f64::consts::PI / steps as f64;
    let best = (0..steps).map(|k| k as f64 * h).min_by(|a, b| norm_at(*a).total_cmp(&norm_at(*b))).unwrap();
    (0..=steps)
        .map(|k| norm_at(best - h + 2.0 * h * k as f64 / steps as f64))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn co_norm_matches_sweep_and_svd() {
    for i in 0..1000u64 {
        let mut rng = sample_rng(99, i);
        let a = rng.gen_range(1.0..20.0);
        let b = rng.gen_range(-5.0..5.0);
        let c = rng.gen_range(-5.0..5.0);
        let m = Matrix2::new(a, 0.0, b, c);
        let closed = co_norm(a, b, c);
        let swept = sweep_min(&m);
        let svd = m.singular_values().min();
        assert!((closed - swept).abs() <= 1e-8, "{a} {b} {c}: {closed} vs {swept}");
        assert!((closed - svd).abs() <= 1e-10 * svd.max(1.0), "{a} {b} {c}: {closed} vs {svd}");
    }
}

#[test]
fn affine_fiber_exponent_matches_svd_average() {
    let dom = IntervalDomain::new(-1.0, 1.0).unwrap();
    let skew =
        SkewProduct::new(BaseMap::Linear { d: 3 }, FiberFamily::AffineContraction { slope: 0.5, amp: 0.2 }, dom)
            .unwrap();
    let mut z = SkewPoint::new(0.123, 0.4);
    let n = 500;
    let mut acc = 0.0;
    for _ in 0..n {
        let h = 2.0 * std::f64::consts::PI * 0.2 * (2.0 * std::f64::consts::PI * z.theta).cos();
        acc += Matrix2::new(3.0, 0.0, h, 0.5).singular_values().min().ln();
        z = skew.step(z);
    }
    let got = ftle_full(&skew, SkewPoint::new(0.123, 0.4), n).unwrap();
    assert!((got - acc / n as f64).abs() <= 1e-12);
}

#[test]
fn logistic_visits_near_the_critical_point_at_the_acim_rate() {
    let seq = MapSequence::constant(IntervalMap::logistic());
    let x: f64 = sample_rng(4, 0).gen();
    let v = visit_frequency(&seq, x, 100_000, 0.05).unwrap();
    assert!((v - 0.0638).abs() <= 0.005, "{v}");
}

#[test]
fn logistic_exponent_is_log_two() {
    let seq = MapSequence::constant(IntervalMap::logistic());
    let x: f64 = sample_rng(4, 1).gen();
    let v = ftle_fiber(&seq, x, 200_000).unwrap();
    assert!((v - 2f64.ln()).abs() <= 0.01, "{v}");
}
