//! Ordered sources of interval maps f₀, f₁, … sharing one domain.

use rand::Rng;

use super::interval::{Family, IntervalDomain, IntervalMap};
use super::skew::SkewProduct;
use crate::error::{Error, Result};
use crate::rng::sample_rng;

/// Number of maps inspected when a sequence-wide bound is estimated.
const BOUND_PROBE: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum MapSequence {
    Constant(IntervalMap),
    /// k ↦ f(gᵏ(θ), ·).
    Fiber { skew: SkewProduct, theta: f64 },
    /// k ↦ a_k - x² with a_k uniform in [a_lo, a_hi], drawn from stream k.
    RandomQuadratic { a_lo: f64, a_hi: f64, domain: IntervalDomain, seed: u64 },
    /// Periodic repetition of a finite list.
    Cycle(Vec<IntervalMap>),
}

impl MapSequence {
    pub fn constant(map: IntervalMap) -> Self {
        MapSequence::Constant(map)
    }

    pub fn random_quadratic(a_lo: f64, a_hi: f64, domain: IntervalDomain, seed: u64) -> Result<Self> {
        if !(a_lo <= a_hi) {
            return Err(Error::Precondition(format!("a_lo = {a_lo} exceeds a_hi = {a_hi}")));
        }
        // The image of the domain moves monotonically with a, so both
        // extremes being invariant covers the whole range.
        IntervalMap::new(Family::Quadratic { a: a_lo }, domain)?;
        IntervalMap::new(Family::Quadratic { a: a_hi }, domain)?;
        Ok(MapSequence::RandomQuadratic { a_lo, a_hi, domain, seed })
    }

    pub fn cycle(maps: Vec<IntervalMap>) -> Result<Self> {
        let first = maps.first().ok_or_else(|| Error::Precondition("empty map cycle".into()))?;
        if maps.iter().any(|m| m.domain() != first.domain()) {
            return Err(Error::Precondition("maps in a cycle must share one domain".into()));
        }
        Ok(MapSequence::Cycle(maps))
    }

    pub fn domain(&self) -> IntervalDomain {
        match self {
            MapSequence::Constant(m) => m.domain(),
            MapSequence::Fiber { skew, .. } => skew.fiber_domain(),
            MapSequence::RandomQuadratic { domain, .. } => *domain,
            MapSequence::Cycle(maps) => maps[0].domain(),
        }
    }

    /// The k-th map. Fiber sequences apply the base map k times.
    pub fn map(&self, k: usize) -> IntervalMap {
        match self {
            MapSequence::Constant(m) => m.clone(),
            MapSequence::Fiber { skew, theta } => {
                let mut t = *theta;
                for _ in 0..k {
                    t = skew.base().orbit_step(t);
                }
                skew.fiber_map(t)
            }
            MapSequence::RandomQuadratic { a_lo, a_hi, domain, seed } => quadratic_at(*a_lo, *a_hi, *domain, *seed, k),
            MapSequence::Cycle(maps) => maps[k % maps.len()].clone(),
        }
    }

    /// Maps in order, O(1) per step.
    pub fn iter(&self) -> SeqIter<'_> {
        let theta = match self {
            MapSequence::Fiber { theta, .. } => *theta,
            _ => 0.0,
        };
        SeqIter { seq: self, k: 0, theta }
    }

    /// First `n` maps.
    pub fn maps(&self, n: usize) -> Vec<IntervalMap> {
        self.iter().take(n).collect()
    }

    /// p: the largest number of cut points (critical points and kinks) of
    /// any produced map.
    pub fn max_critical_count(&self) -> usize {
        match self {
            MapSequence::Constant(m) => m.cut_points().len(),
            MapSequence::Fiber { skew, .. } => skew.fiber_map(0.0).cut_points().len(),
            MapSequence::RandomQuadratic { domain, .. } => usize::from(domain.lo < 0.0 && 0.0 < domain.hi),
            MapSequence::Cycle(maps) => maps.iter().map(|m| m.cut_points().len()).max().unwrap_or(0),
        }
    }

    /// Γ: sup of |f_k| and |Df_k| over a grid, for the first 64 maps.
    pub fn uniform_bound(&self, grid: usize) -> f64 {
        let domain = self.domain();
        let grid = grid.max(2);
        self.iter()
            .take(BOUND_PROBE)
            .flat_map(|m| {
                (0..grid).map(move |j| {
                    let x = domain.grid_point(j, grid);
                    m.eval(x).abs().max(m.d1(x).abs())
                })
            })
            .fold(0.0, f64::max)
    }
}

fn quadratic_at(a_lo: f64, a_hi: f64, domain: IntervalDomain, seed: u64, k: usize) -> IntervalMap {
    let u: f64 = sample_rng(seed, k as u64).gen();
    let a = a_lo + (a_hi - a_lo) * u;
    let critical = if domain.lo < 0.0 && 0.0 < domain.hi { smallvec::smallvec![0.0] } else { smallvec::SmallVec::new() };
    IntervalMap::from_parts(Family::Quadratic { a }, domain, critical)
}

pub struct SeqIter<'a> {
    seq: &'a MapSequence,
    k: usize,
    theta: f64,
}

impl Iterator for SeqIter<'_> {
    type Item = IntervalMap;

    fn next(&mut self) -> Option<IntervalMap> {
        let out = match self.seq {
            MapSequence::Fiber { skew, .. } => {
                let m = skew.fiber_map(self.theta);
                self.theta = skew.base().orbit_step(self.theta);
                m
            }
            other => other.map(self.k),
        };
        self.k += 1;
        Some(out)
    }
}

/// The sequence k ↦ f(gᵏ(θ), ·) along the base orbit of θ.
pub fn fiber_sequence(skew: &SkewProduct, theta: f64) -> Result<MapSequence> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::Precondition(format!("θ = {theta} is not in [0,1)")));
    }
    Ok(MapSequence::Fiber { skew: skew.clone(), theta })
}

/// Number of dyadic steps in the modulus grid ε_j = j·|I₀|/2^10.
const MODULUS_STEPS: usize = 1 << 10;

/// Largest ε on the grid ε_j = j·|I₀|/2^10 such that |f_k(x) - f_k(y)| < ζ
/// and |Df_k(x) - Df_k(y)| < ζ for every probed k ≤ k_probe and every pair
/// of grid points with |x - y| < ε. Returns 0 when no grid value works.
pub fn estimate_modulus(seq: &MapSequence, zeta: f64, k_probe: usize, grid: usize) -> f64 {
    let domain = seq.domain();
    let grid = grid.max(2);
    let h = domain.len() / (grid - 1) as f64;
    // worst[m]: largest displacement over pairs m grid steps apart.
    let mut worst = vec![0.0f64; grid];
    for map in seq.iter().take(k_probe + 1) {
        let vals: Vec<(f64, f64)> = (0..grid)
            .map(|j| {
                let x = domain.grid_point(j, grid);
                (map.eval(x), map.d1(x))
            })
            .collect();
        for m in 1..grid {
            let mut w = worst[m];
            for i in 0..grid - m {
                let (a, b) = (vals[i], vals[i + m]);
                w = w.max((a.0 - b.0).abs()).max((a.1 - b.1).abs());
            }
            worst[m] = w;
        }
    }
    // Pairs with |x-y| < ε are those m steps apart with m·h < ε, so the
    // relevant quantity is the running maximum over m.
    for m in 1..grid {
        worst[m] = worst[m].max(worst[m - 1]);
    }
    let mut best = 0.0;
    for j in 1..=MODULUS_STEPS {
        let eps = domain.len() * j as f64 / MODULUS_STEPS as f64;
        let m_max = (((eps / h).ceil() as usize).saturating_sub(1)).min(grid - 1);
        if worst[m_max] < zeta {
            best = eps;
        } else {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::interval::sin2pi;

    #[test]
    fn viana_fiber_at_zero_is_plain_quadratic() {
        let skew = SkewProduct::viana_default();
        let seq = fiber_sequence(&skew, 0.0).unwrap();
        assert_eq!(seq.map(0).family(), &Family::Quadratic { a: 1.7 });
        assert_eq!(seq.map(1), seq.map(0));
    }

    #[test]
    fn fiber_parameter_matches_scalar_orbit() {
        let skew = SkewProduct::viana_default();
        let seq = fiber_sequence(&skew, 0.3).unwrap();
        // Independent scalar computation: 16·0.3 = 4.8 → 0.8, 16·0.8 = 12.8 → 0.8.
        let t2 = {
            let t1 = (16.0f64 * 0.3).fract();
            (16.0 * t1).fract()
        };
        let expected = 1.7 + 0.05 * sin2pi(t2);
        match seq.map(2).family() {
            Family::Quadratic { a } => assert!((a - expected).abs() < 1e-12),
            other => panic!("unexpected family {other:?}"),
        }
    }

    #[test]
    fn iterator_agrees_with_indexed_access() {
        let skew = SkewProduct::viana_default();
        let seq = fiber_sequence(&skew, 0.4123).unwrap();
        for (k, m) in seq.iter().take(20).enumerate() {
            assert_eq!(m, seq.map(k));
        }
        let rq = MapSequence::random_quadratic(1.65, 1.75, IntervalDomain::new(-1.85, 1.85).unwrap(), 9).unwrap();
        for (k, m) in rq.iter().take(20).enumerate() {
            assert_eq!(m, rq.map(k));
        }
    }

    #[test]
    fn fiber_critical_points_match_bisection() {
        let skew = SkewProduct::viana_default();
        let seq = fiber_sequence(&skew, 0.77).unwrap();
        for m in seq.iter().take(10) {
            let numeric = crate::maps::interval::find_critical_points(m.family(), &m.domain(), &[]);
            assert_eq!(numeric.len(), m.critical_points().len());
            for (a, b) in numeric.iter().zip(m.critical_points()) {
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn logistic_modulus() {
        let seq = MapSequence::constant(IntervalMap::logistic());
        assert!(estimate_modulus(&seq, 0.8, 4, 512) >= 0.09);
        assert_eq!(estimate_modulus(&seq, 1e9, 4, 512), 1.0);
    }

    #[test]
    fn slope_one_modulus_comes_from_values() {
        let id = IntervalMap::new(Family::Identity, IntervalDomain::unit()).unwrap();
        let seq = MapSequence::constant(id);
        // Df is constant, so only |x - y| < ζ constrains ε.
        let eps = estimate_modulus(&seq, 0.25, 2, 513);
        assert!((eps - 0.25).abs() <= 1.0 / 1024.0 + 1e-12, "{eps}");
    }

    #[test]
    fn sequence_bounds() {
        let seq = MapSequence::constant(IntervalMap::logistic());
        assert_eq!(seq.max_critical_count(), 1);
        assert!((seq.uniform_bound(101) - 4.0).abs() < 1e-12);
    }
}
