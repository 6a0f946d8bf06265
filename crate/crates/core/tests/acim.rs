use skewdyn::acim::*;
use skewdyn::maps::{fiber_sequence, Family, IntervalDomain, IntervalMap, MapSequence, SkewProduct};

fn logistic() -> System {
    System::Interval(IntervalMap::logistic())
}

fn two_well() -> System {
    System::Interval(IntervalMap::standard(Family::TwoWell).unwrap())
}

fn identity() -> System {
    System::Interval(IntervalMap::new(Family::Identity, IntervalDomain::unit()).unwrap())
}

fn uniform_like(m: &EmpiricalMeasure) -> EmpiricalMeasure {
    let mut u = m.clone();
    let n = u.weights.len() as f64;
    u.weights.iter_mut().for_each(|w| *w = 1.0 / n);
    u
}

#[test]
fn lebesgue_preserving_maps_give_uniform_histograms() {
    let samples = 20_000;
    let tol = 3.0 / (samples as f64).sqrt();
    // Doubling orbits lose one bit per step in binary floating point, so
    // only short orbits are meaningful.
    let doubling = System::Interval(IntervalMap::standard(Family::Doubling).unwrap());
    for sys in [identity(), doubling] {
        let m = empirical_measure(&sys, samples, 20, sys.grid(64), 9).unwrap();
        assert!((m.total_weight() - 1.0).abs() <= 1e-9);
        for w in &m.weights {
            assert!((w - 1.0 / 64.0).abs() <= tol, "{}: {w}", sys.label());
        }
    }
}

#[test]
fn logistic_measure_matches_its_density() {
    let sys = logistic();
    let m = empirical_measure(&sys, 10_000, 1000, sys.grid(256), 1).unwrap();
    let l1 = density_compare(&m, &Oracle::Line(&logistic_density)).unwrap();
    assert!(l1 <= 0.05, "{l1}");
}

#[test]
fn oracle_comparisons_reproduce_closed_forms() {
    let sys = logistic();
    let m = empirical_measure(&sys, 1000, 1, sys.grid(256), 0).unwrap();
    let mut binned = m.clone();
    binned.weights = oracle_masses(&m.grid, &Oracle::Line(&logistic_density)).unwrap();
    // The two end bins carry 1/√x singularities; quadrature there is good
    // to a few 1e-9.
    assert!((binned.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-7);
    assert!(density_compare(&binned, &Oracle::Line(&logistic_density)).unwrap() == 0.0);
    // ∫|1 − ρ| = 4((2/π)asin√x₀ − x₀) with x₀ = ½ − √(¼ − 1/π²), about
    // 0.421027; binning can only lower the distance slightly.
    let uniform = uniform_like(&m);
    let d = density_compare(&uniform, &Oracle::Line(&logistic_density)).unwrap();
    assert!((d - 0.4210).abs() <= 1e-3, "{d}");
}

#[test]
fn invariance_defect_examples() {
    let doubling = System::Interval(IntervalMap::standard(Family::Doubling).unwrap());
    let base = empirical_measure(&doubling, 1000, 1, doubling.grid(256), 0).unwrap();
    let uniform = uniform_like(&base);
    let d = invariance_defect(&uniform, &doubling, 1_000_000, 4).unwrap();
    assert!(d <= 0.02, "{d}");

    // A point mass on a bin whose image is another bin far away.
    let sys = logistic();
    let mut point = uniform_like(&empirical_measure(&sys, 1000, 1, sys.grid(256), 0).unwrap());
    point.weights.iter_mut().for_each(|w| *w = 0.0);
    point.weights[77] = 1.0;
    let d = invariance_defect(&point, &sys, 100_000, 4).unwrap();
    assert!((d - 2.0).abs() <= 1e-9, "{d}");
}

#[test]
fn averaged_measure_is_nearly_invariant() {
    let sys = logistic();
    let (n, bins, transfer) = (1000, 256, 1_000_000);
    let m = empirical_measure(&sys, 10_000, n, sys.grid(bins), 1).unwrap();
    let d = invariance_defect(&m, &sys, transfer, 2).unwrap();
    let budget = 2.0 / n as f64 + 2.0 * bins as f64 / (transfer as f64).sqrt();
    assert!(d <= budget, "{d} > {budget}");

    let t = telescoping_check(&sys, 10_000, n, sys.grid(bins), 1).unwrap();
    assert!(t.identity_error <= 1e-12, "{t:?}");
    assert!(t.defect <= t.bound, "{t:?}");
}

#[test]
fn coarsening_equals_building_at_lower_resolution() {
    let sys = logistic();
    let fine = empirical_measure(&sys, 5000, 200, sys.grid(512), 17).unwrap();
    let coarse = empirical_measure(&sys, 5000, 200, sys.grid(256), 17).unwrap();
    let merged = fine.coarsen(2).unwrap();
    assert_eq!(merged.counts, coarse.counts);
    assert_eq!(merged.weights, coarse.weights);

    let skew = System::Skew(SkewProduct::viana_default());
    let fine = empirical_measure(&skew, 2000, 50, skew.grid(64), 3).unwrap();
    let coarse = empirical_measure(&skew, 2000, 50, skew.grid(32), 3).unwrap();
    assert_eq!(fine.coarsen(2).unwrap().counts, coarse.counts);
}

#[test]
fn measures_are_seed_deterministic() {
    let skew = System::Skew(SkewProduct::viana_default());
    let a = empirical_measure(&skew, 2000, 100, skew.default_grid(), 5).unwrap();
    let b = empirical_measure(&skew, 2000, 100, skew.default_grid(), 5).unwrap();
    assert_eq!(a.weights, b.weights);
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    assert!((a.total_weight() - 1.0).abs() <= 1e-9);
    let csv = a.to_csv().unwrap();
    assert!(csv.starts_with("theta_lo,theta_hi,bin_lo,bin_hi,weight\n"));
    assert_eq!(csv.lines().count(), 1 + 128 * 128);
}

#[test]
fn component_counts() {
    for seed in [1, 2, 3] {
        let l = ergodic_components(&logistic(), 100, 100_000, logistic().grid(256), seed, 0.3).unwrap();
        assert_eq!(l.count, 1, "{l:?}");
        let w = ergodic_components(&two_well(), 100, 100_000, two_well().grid(256), seed, 0.3).unwrap();
        assert_eq!(w.count, 2, "{:?}", w.sensitivity);
        assert_eq!(w.sensitivity.len(), 4);
    }
    let id = ergodic_components(&identity(), 100, 100, identity().grid(64), 1, 2.5).unwrap();
    assert_eq!(id.count, 1);
    assert!(id.assignment.iter().all(|&a| a == 0));
}

#[test]
fn nu_like_mass_respects_the_pliss_bound() {
    let logistic_seq = MapSequence::constant(IntervalMap::logistic());
    let skew = SkewProduct::viana_default();
    let fiber = fiber_sequence(&skew, 0.123).unwrap();
    for (seq, delta) in [(logistic_seq, 0.05), (fiber, 0.1)] {
        let r = nu_like_mass(&seq, 5000, 200, delta, 8).unwrap();
        assert!(r.holds, "{r:?}");
        assert_eq!(r.pliss_violations, 0);
        assert!(r.fraction > 0.0, "{r:?}");
    }
}
