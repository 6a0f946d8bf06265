//! Skew-products φ(θ,x) = (g(θ), f(θ,x)) over an expanding circle map.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::f64::consts::PI;

use super::interval::{cos2pi, sin2pi, Family, IntervalDomain, IntervalMap};
use crate::error::{Error, Result};

const EXPANSION_GRID: usize = 4096;
const INVARIANCE_THETAS: usize = 256;
const INVARIANCE_XS: usize = 512;
const INVARIANCE_TOL: f64 = 1e-9;
/// Grid and depth of the domination fit performed at construction.
const DOMINATION_N: usize = 8;
const DOMINATION_GRID: usize = 48;

/// Finaliser of SplitMix64.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Base circle map. Angles live in [0,1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "base", rename_all = "snake_case")]
pub enum BaseMap {
    /// θ ↦ dθ mod 1.
    Linear { d: u32 },
    /// θ ↦ dθ + ε sin 2πθ mod 1, expanding when 2π|ε| < d - 1.
    Perturbed { d: u32, eps: f64 },
}

impl BaseMap {
    pub fn degree(&self) -> u32 {
        match *self {
            BaseMap::Linear { d } | BaseMap::Perturbed { d, .. } => d,
        }
    }

    /// Lift to the real line: continuous, no reduction mod 1.
    #[inline]
    pub fn lift(&self, t: f64) -> f64 {
        match *self {
            BaseMap::Linear { d } => d as f64 * t,
            BaseMap::Perturbed { d, eps } => d as f64 * t + eps * sin2pi(t),
        }
    }

    /// g(θ) reduced to [0,1) by subtracting the floor. Iterates are always
    /// computed one application at a time, never as dⁿθ.
    #[inline]
    pub fn apply(&self, theta: f64) -> f64 {
        let raw = match *self {
            BaseMap::Linear { d } => d as f64 * theta,
            BaseMap::Perturbed { d, eps } => d as f64 * theta + eps * sin2pi(theta),
        };
        let r = raw - raw.floor();
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    }

    /// One step of a forward orbit. For the linear base, dθ mod 1 is exact
    /// in binary when d is a power of two, so every f64 orbit would reach
    /// the fixed point 0 after about 53/log₂d steps. The vacated low bits
    /// are refilled from a hash of θ instead: the result stays within
    /// d·2⁻⁵³ of g(θ), the size of one rounding of dθ, and the orbit is
    /// still a deterministic function of its start.
    #[inline]
    pub fn orbit_step(&self, theta: f64) -> f64 {
        let r = self.apply(theta);
        match *self {
            BaseMap::Linear { d } => {
                let u = (mix64(theta.to_bits()) >> 11) as f64 * f64::EPSILON / 2.0;
                let t = r + u * d as f64 * f64::EPSILON / 2.0;
                if t >= 1.0 {
                    t - 1.0
                } else {
                    t
                }
            }
            BaseMap::Perturbed { .. } => r,
        }
    }

    #[inline]
    pub fn d1(&self, theta: f64) -> f64 {
        match *self {
            BaseMap::Linear { d } => d as f64,
            BaseMap::Perturbed { d, eps } => d as f64 + 2.0 * PI * eps * cos2pi(theta),
        }
    }

    #[inline]
    pub fn d2(&self, theta: f64) -> f64 {
        match *self {
            BaseMap::Linear { .. } => 0.0,
            BaseMap::Perturbed { eps, .. } => -4.0 * PI * PI * eps * sin2pi(theta),
        }
    }

    /// G(θ + δ) − G(θ) for the lift G, accurate also when δ is far below
    /// the resolution of θ.
    #[inline]
    pub fn lift_increment(&self, theta: f64, delta: f64) -> f64 {
        match *self {
            BaseMap::Linear { d } => d as f64 * delta,
            BaseMap::Perturbed { d, eps } => {
                // sin a − sin b = 2 cos((a+b)/2) sin((a−b)/2)
                d as f64 * delta + 2.0 * eps * cos2pi(theta + 0.5 * delta) * (PI * delta).sin()
            }
        }
    }

    /// The offset δ with G(θ + δ) − G(θ) = increment. G is increasing with
    /// slope above 1, so Newton from increment/G′(θ) converges fast.
    pub fn inverse_increment(&self, theta: f64, increment: f64) -> f64 {
        match *self {
            BaseMap::Linear { d } => increment / d as f64,
            BaseMap::Perturbed { .. } => {
                let mut delta = increment / self.d1(theta);
                for _ in 0..50 {
                    let step = (self.lift_increment(theta, delta) - increment) / self.d1(theta + delta);
                    delta -= step;
                    if step.abs() <= 1e-16 * delta.abs().max(f64::MIN_POSITIVE) {
                        break;
                    }
                }
                delta
            }
        }
    }

    /// θ in [lo, hi] with G(θ) = target, for a range on which the lift
    /// covers the target.
    pub fn inverse_lift(&self, target: f64, lo: f64, hi: f64) -> f64 {
        match *self {
            BaseMap::Linear { d } => (target / d as f64).clamp(lo, hi),
            BaseMap::Perturbed { .. } => crate::maps::bisect_root(|t| self.lift(t) - target, lo, hi, 0.0),
        }
    }

    /// Bounded-distortion constant D for iterates of g on intervals where
    /// they are injective. Summing sup|g''|/inf|g'| times the geometric
    /// lengths of the intermediate images gives log D ≤ sup|g''|/(inf|g'| - 1).
    pub fn distortion_constant(&self) -> f64 {
        let (mut sup2, mut inf1) = (0.0f64, f64::INFINITY);
        for i in 0..EXPANSION_GRID {
            let t = i as f64 / EXPANSION_GRID as f64;
            sup2 = sup2.max(self.d2(t).abs());
            inf1 = inf1.min(self.d1(t).abs());
        }
        (sup2 / (inf1 - 1.0)).exp()
    }
}

/// Fiber family f(θ, ·).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fiber", rename_all = "snake_case")]
pub enum FiberFamily {
    /// a0 + α sin 2πθ - x².
    Viana { a0: f64, alpha: f64 },
    /// slope·x + amp·sin 2πθ.
    AffineContraction { slope: f64, amp: f64 },
    /// x ↦ value, independent of θ.
    ConstantValue { value: f64 },
    /// Tent map of slope 2 on [0,1], independent of θ.
    Tent,
}

impl FiberFamily {
    #[inline]
    pub fn map_family(&self, theta: f64) -> Family {
        match *self {
            FiberFamily::Viana { a0, alpha } => Family::Quadratic { a: a0 + alpha * sin2pi(theta) },
            FiberFamily::AffineContraction { slope, amp } => Family::Affine { slope, intercept: amp * sin2pi(theta) },
            FiberFamily::ConstantValue { value } => Family::Affine { slope: 0.0, intercept: value },
            FiberFamily::Tent => Family::Tent,
        }
    }

    #[inline]
    pub fn eval(&self, theta: f64, x: f64) -> f64 {
        self.map_family(theta).eval(x)
    }

    #[inline]
    pub fn dx(&self, _theta: f64, x: f64) -> f64 {
        match *self {
            FiberFamily::Viana { .. } => -2.0 * x,
            FiberFamily::AffineContraction { slope, .. } => slope,
            FiberFamily::ConstantValue { .. } => 0.0,
            FiberFamily::Tent => Family::Tent.d1(x),
        }
    }

    #[inline]
    pub fn dtheta(&self, theta: f64, _x: f64) -> f64 {
        match *self {
            FiberFamily::Viana { alpha, .. } => 2.0 * PI * alpha * cos2pi(theta),
            FiberFamily::AffineContraction { amp, .. } => 2.0 * PI * amp * cos2pi(theta),
            FiberFamily::ConstantValue { .. } | FiberFamily::Tent => 0.0,
        }
    }

    pub fn dxx(&self, _theta: f64, _x: f64) -> f64 {
        match *self {
            FiberFamily::Viana { .. } => -2.0,
            _ => 0.0,
        }
    }

    pub fn dxxx(&self, _theta: f64, _x: f64) -> f64 {
        0.0
    }

    /// Critical set of f(θ, ·) inside the open domain.
    #[inline]
    pub fn critical_points(&self, domain: &IntervalDomain) -> SmallVec<[f64; 4]> {
        match self {
            FiberFamily::Viana { .. } if domain.lo < 0.0 && 0.0 < domain.hi => SmallVec::from_slice(&[0.0]),
            _ => SmallVec::new(),
        }
    }
}

/// Domination constants: ∏|∂_x f| / |∂_θ gⁿ| ≤ C σ̂ⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domination {
    pub sigma: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    /// max over the grid of the ratio, for n = 1..=n_max.
    pub max_ratio: Vec<f64>,
    pub sigma_hat: f64,
    pub c: f64,
    /// False when the ratio does not decay geometrically.
    pub dominated: bool,
    pub grid: usize,
    /// Absolute error bound of fiber parameters after n_max base steps,
    /// from n·d·machine-epsilon.
    pub base_precision: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewPoint {
    pub theta: f64,
    pub x: f64,
}

impl SkewPoint {
    pub fn new(theta: f64, x: f64) -> Self {
        Self { theta, x }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewProduct {
    base: BaseMap,
    fiber: FiberFamily,
    domain: IntervalDomain,
    domination: Option<Domination>,
}

impl SkewProduct {
    /// Validates expansion of the base and invariance of the fiber domain,
    /// then fits domination constants (absent when the fit fails).
    pub fn new(base: BaseMap, fiber: FiberFamily, domain: IntervalDomain) -> Result<Self> {
        if base.degree() < 2 {
            return Err(Error::Precondition(format!("base degree {} < 2", base.degree())));
        }
        for i in 0..EXPANSION_GRID {
            let t = i as f64 / EXPANSION_GRID as f64;
            let s = base.d1(t).abs();
            if s <= 1.0 {
                return Err(Error::NotExpanding { theta: t, slope: s });
            }
        }
        for i in 0..INVARIANCE_THETAS {
            let t = i as f64 / INVARIANCE_THETAS as f64;
            for j in 0..INVARIANCE_XS {
                let x = domain.grid_point(j, INVARIANCE_XS);
                let fx = fiber.eval(t, x);
                if !domain.contains_with(fx, INVARIANCE_TOL) {
                    return Err(Error::DomainNotInvariant { label: format!("fiber θ={t}"), x, fx });
                }
            }
        }
        let mut skew = Self { base, fiber, domain, domination: None };
        let report = verify_partial_hyperbolicity(&skew, DOMINATION_N, DOMINATION_GRID);
        if report.dominated {
            skew.domination = Some(Domination { sigma: report.sigma_hat, c: report.c });
        }
        Ok(skew)
    }

    /// Default Viana map: d = 16, a0 = 1.7, α = 0.05 on [-1.85, 1.85].
    pub fn viana_default() -> Self {
        Self::viana(16, 1.7, 0.05, IntervalDomain { lo: -1.85, hi: 1.85 }).expect("default Viana map is valid")
    }

    pub fn viana(d: u32, a0: f64, alpha: f64, domain: IntervalDomain) -> Result<Self> {
        Self::new(BaseMap::Linear { d }, FiberFamily::Viana { a0, alpha }, domain)
    }

    /// Replaces the fitted constants with supplied ones.
    pub fn with_domination(mut self, domination: Domination) -> Self {
        self.domination = Some(domination);
        self
    }

    pub fn base(&self) -> &BaseMap {
        &self.base
    }

    pub fn fiber(&self) -> &FiberFamily {
        &self.fiber
    }

    pub fn fiber_domain(&self) -> IntervalDomain {
        self.domain
    }

    pub fn degree(&self) -> u32 {
        self.base.degree()
    }

    pub fn domination(&self) -> Option<Domination> {
        self.domination
    }

    pub fn fiber_map(&self, theta: f64) -> IntervalMap {
        IntervalMap::from_parts(self.fiber.map_family(theta), self.domain, self.fiber.critical_points(&self.domain))
    }

    #[inline]
    pub fn step(&self, z: SkewPoint) -> SkewPoint {
        SkewPoint { theta: self.base.orbit_step(z.theta), x: self.fiber.eval(z.theta, z.x) }
    }

    /// Entries (∂_θ g, ∂_θ f, ∂_x f) of the lower-triangular differential.
    #[inline]
    pub fn differential(&self, z: SkewPoint) -> (f64, f64, f64) {
        (self.base.d1(z.theta), self.fiber.dtheta(z.theta, z.x), self.fiber.dx(z.theta, z.x))
    }

    /// Vertical distance to the critical set of the fiber through z; 1 when
    /// the fiber has no critical points.
    pub fn vertical_critical_distance(&self, z: SkewPoint) -> f64 {
        self.fiber
            .critical_points(&self.domain)
            .iter()
            .map(|c| (z.x - c).abs())
            .min_by(f64::total_cmp)
            .unwrap_or(1.0)
    }

    /// sup over a grid of |∂_θ f / ∂_θ g|.
    pub fn horizontal_coupling(&self, grid: usize) -> f64 {
        let mut sup = 0.0f64;
        for i in 0..grid {
            let t = i as f64 / grid as f64;
            for j in 0..grid {
                let x = self.domain.grid_point(j, grid);
                sup = sup.max((self.fiber.dtheta(t, x) / self.base.d1(t)).abs());
            }
        }
        sup
    }
}

/// Max over a grid×grid lattice of ∏_{i<n}|∂_x f(φⁱz)| / |∂_θ gⁿ(θ)| for
/// n = 1..=n_max, and the fitted pair σ̂ = max_n R_n^{1/n}, C = 1.
pub fn verify_partial_hyperbolicity(skew: &SkewProduct, n_max: usize, grid: usize) -> DominationReport {
    let n_max = n_max.max(1);
    let grid = grid.max(2);
    let mut log_max = vec![f64::NEG_INFINITY; n_max];
    for i in 0..grid {
        let theta = i as f64 / grid as f64;
        for j in 0..grid {
            let mut z = SkewPoint::new(theta, skew.domain.grid_point(j, grid));
            let mut acc = 0.0;
            for slot in log_max.iter_mut() {
                let (gt, _, fx) = skew.differential(z);
                acc += fx.abs().ln() - gt.abs().ln();
                *slot = slot.max(acc);
                z = skew.step(z);
            }
        }
    }
    let max_ratio: Vec<f64> = log_max.iter().map(|l| l.exp()).collect();
    let sigma_hat = log_max
        .iter()
        .enumerate()
        .map(|(k, l)| (l / (k + 1) as f64).exp())
        .fold(0.0f64, f64::max);
    DominationReport {
        max_ratio,
        sigma_hat,
        c: 1.0,
        dominated: sigma_hat < 1.0,
        grid,
        base_precision: n_max as f64 * skew.degree() as f64 * f64::EPSILON,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_base_orbits_do_not_collapse() {
        let base = BaseMap::Linear { d: 16 };
        let mut exact = 0.3;
        for _ in 0..20 {
            exact = base.apply(exact);
        }
        assert_eq!(exact, 0.0);

        let mut t = 0.3;
        let mut bins = [0usize; 8];
        for _ in 0..80_000 {
            let next = base.orbit_step(t);
            let gap = (next - base.apply(t)).rem_euclid(1.0);
            assert!(gap.min(1.0 - gap) <= 16.0 * f64::EPSILON);
            t = next;
            bins[(t * 8.0) as usize] += 1;
        }
        for b in bins {
            assert!((b as f64 / 10_000.0 - 1.0).abs() < 0.05, "{bins:?}");
        }
    }

    #[test]
    fn viana_default_is_dominated_by_a_quarter() {
        let skew = SkewProduct::viana_default();
        let report = verify_partial_hyperbolicity(&skew, 10, 32);
        assert!(report.dominated);
        assert!(report.sigma_hat <= 0.25, "{}", report.sigma_hat);
        // Per-step bound sup|2x|/d = 3.7/16 is attained on the domain edge.
        assert!((report.max_ratio[0] - 3.7 / 16.0).abs() < 1e-12);
        assert!(skew.domination().is_some());
    }

    #[test]
    fn constant_fiber_has_zero_ratio() {
        let skew = SkewProduct::new(
            BaseMap::Linear { d: 16 },
            FiberFamily::ConstantValue { value: 0.3 },
            IntervalDomain::unit(),
        )
        .unwrap();
        let report = verify_partial_hyperbolicity(&skew, 5, 16);
        assert!(report.max_ratio.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn tent_fiber_over_doubling_is_not_dominated() {
        let skew = SkewProduct::new(BaseMap::Linear { d: 2 }, FiberFamily::Tent, IntervalDomain::unit()).unwrap();
        let report = verify_partial_hyperbolicity(&skew, 6, 16);
        assert!(!report.dominated);
        assert!(report.max_ratio.iter().all(|&r| (r - 1.0).abs() < 1e-12));
        assert!(skew.domination().is_none());
    }

    #[test]
    fn original_viana_domain_fails_invariance() {
        let err = SkewProduct::viana(16, 1.7, 0.05, IntervalDomain { lo: -2.0, hi: 2.0 });
        assert!(matches!(err, Err(Error::DomainNotInvariant { .. })));
    }

    #[test]
    fn base_map_stays_on_the_circle() {
        let base = BaseMap::Perturbed { d: 3, eps: 0.05 };
        let mut t = 0.123;
        for _ in 0..1000 {
            t = base.apply(t);
            assert!((0.0..1.0).contains(&t));
        }
    }
}
