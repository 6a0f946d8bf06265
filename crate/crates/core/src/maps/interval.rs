//! Smooth (or piecewise smooth) self-maps of a compact interval.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::f64::consts::PI;

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Grid used by the construction-time invariance check.
const INVARIANCE_GRID: usize = 1 << 12;
const INVARIANCE_TOL: f64 = 1e-9;
/// Grid used to locate critical points by sign changes of f'.
const CRITICAL_GRID: usize = 1 << 14;
const CRITICAL_TOL: f64 = 1e-12;
const CRITICAL_AGREEMENT: f64 = 1e-10;
const CRITICAL_DERIVATIVE_TOL: f64 = 1e-9;
const SIGN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalDomain {
    pub lo: f64,
    pub hi: f64,
}

impl IntervalDomain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidDomain { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub const fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    /// [−β, β] with β the positive fixed point of a − x². Invariant for
    /// a ∈ [−1/4, 2].
    pub fn quadratic_symmetric(a: f64) -> Result<Self> {
        let beta = (1.0 + (1.0 + 4.0 * a).max(0.0).sqrt()) / 2.0;
        Self::new(-beta, beta)
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn contains_with(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// `j`-th point of an `n`-point equispaced grid including both endpoints.
    pub fn grid_point(&self, j: usize, n: usize) -> f64 {
        if j + 1 == n {
            self.hi
        } else {
            self.lo + self.len() * j as f64 / (n - 1) as f64
        }
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// The closed catalogue of built-in map families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// 4x(1-x) on [0,1].
    Logistic,
    /// a - x^2.
    Quadratic { a: f64 },
    Affine { slope: f64, intercept: f64 },
    Identity,
    /// 2x mod 1 on [0,1], one discontinuity at 1/2.
    Doubling,
    /// Full tent of slope 2, kink at 1/2.
    Tent,
    /// Two invariant wells [0, 0.45] and [0.55, 1] joined by a smooth blend.
    TwoWell,
    /// (ax+b)/(cx+d).
    Mobius { a: f64, b: f64, c: f64, d: f64 },
}

const WELL_A: f64 = 0.45;
const WELL_B: f64 = 0.55;
/// The blend between the two wells' formulas is confined to a narrow band
/// in the middle of the gap. Outside it each formula continues past its
/// well with slope at least 4; inside it the map sweeps through the gap
/// steeply. Points that stay in the gap are therefore expanded at every
/// step and almost every gap point falls into a well. A blend across the
/// whole gap creates an attracting 2-cycle there instead.
const BLEND_LO: f64 = 0.49;
const BLEND_HI: f64 = 0.51;

fn bump(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn bump_prime(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        bump(s) / (s * s)
    }
}

/// Smooth step from 0 (t <= 0) to 1 (t >= 1), flat to all orders at both ends.
fn smooth_step(t: f64) -> (f64, f64) {
    let (p, q) = (bump(t), bump(1.0 - t));
    let s = p + q;
    let v = p / s;
    let dv = (bump_prime(t) * q + p * bump_prime(1.0 - t)) / (s * s);
    (v, dv)
}

fn two_well_left(x: f64) -> (f64, f64) {
    let w = 1.0 - x / (WELL_A / 2.0);
    (WELL_A * w * w, -4.0 * w)
}

fn two_well_right(x: f64) -> (f64, f64) {
    let span = 1.0 - WELL_B;
    let u = (x - WELL_B) / span;
    (WELL_B + span * 4.0 * u * (1.0 - u), 4.0 * (1.0 - 2.0 * u))
}

fn two_well(x: f64) -> (f64, f64) {
    if x <= BLEND_LO {
        two_well_left(x)
    } else if x >= BLEND_HI {
        two_well_right(x)
    } else {
        let (fa, da) = two_well_left(x);
        let (fb, db) = two_well_right(x);
        let gap = BLEND_HI - BLEND_LO;
        let (b, db_dt) = smooth_step((x - BLEND_LO) / gap);
        let v = (1.0 - b) * fa + b * fb;
        let dv = (1.0 - b) * da + b * db + db_dt / gap * (fb - fa);
        (v, dv)
    }
}

impl Family {
    pub fn label(&self) -> String {
        match *self {
            Family::Logistic => "logistic".into(),
            Family::Quadratic { a } => format!("quadratic(a={a})"),
            Family::Affine { slope, intercept } => format!("affine({slope}x+{intercept})"),
            Family::Identity => "identity".into(),
            Family::Doubling => "doubling".into(),
            Family::Tent => "tent".into(),
            Family::TwoWell => "two_well".into(),
            Family::Mobius { a, b, c, d } => format!("mobius({a},{b},{c},{d})"),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Family::Logistic => 4.0 * x * (1.0 - x),
            Family::Quadratic { a } => a - x * x,
            Family::Affine { slope, intercept } => slope * x + intercept,
            Family::Identity => x,
            Family::Doubling => {
                if x < 0.5 {
                    2.0 * x
                } else {
                    2.0 * x - 1.0
                }
            }
            Family::Tent => {
                if x < 0.5 {
                    2.0 * x
                } else {
                    2.0 - 2.0 * x
                }
            }
            Family::TwoWell => two_well(x).0,
            Family::Mobius { a, b, c, d } => (a * x + b) / (c * x + d),
        }
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        match *self {
            Family::Logistic => 4.0 - 8.0 * x,
            Family::Quadratic { .. } => -2.0 * x,
            Family::Affine { slope, .. } => slope,
            Family::Identity => 1.0,
            Family::Doubling => 2.0,
            Family::Tent => {
                if x < 0.5 {
                    2.0
                } else {
                    -2.0
                }
            }
            Family::TwoWell => two_well(x).1,
            Family::Mobius { a, b, c, d } => {
                let q = c * x + d;
                (a * d - b * c) / (q * q)
            }
        }
    }

    pub fn d2(&self, x: f64) -> Option<f64> {
        match *self {
            Family::Logistic => Some(-8.0),
            Family::Quadratic { .. } => Some(-2.0),
            Family::Affine { .. } | Family::Identity | Family::Doubling | Family::Tent => Some(0.0),
            Family::TwoWell => None,
            Family::Mobius { a, b, c, d } => {
                let q = c * x + d;
                Some(-2.0 * c * (a * d - b * c) / (q * q * q))
            }
        }
    }

    pub fn d3(&self, x: f64) -> Option<f64> {
        match *self {
            Family::Logistic | Family::Quadratic { .. } => Some(0.0),
            Family::Affine { .. } | Family::Identity | Family::Doubling | Family::Tent => Some(0.0),
            Family::TwoWell => None,
            Family::Mobius { a, b, c, d } => {
                let q = c * x + d;
                Some(6.0 * c * c * (a * d - b * c) / (q * q * q * q))
            }
        }
    }

    /// Evaluates on the smooth branch that contains `anchor`. Only differs
    /// from [`Family::eval`] at a discontinuity.
    #[inline]
    pub fn eval_on_branch(&self, x: f64, anchor: f64) -> f64 {
        match *self {
            Family::Doubling => {
                if anchor < 0.5 {
                    2.0 * x
                } else {
                    2.0 * x - 1.0
                }
            }
            Family::Tent => {
                if anchor < 0.5 {
                    2.0 * x
                } else {
                    2.0 - 2.0 * x
                }
            }
            _ => self.eval(x),
        }
    }

    /// Double-double evaluation on the branch containing `anchor`; `None`
    /// for families defined through transcendental blends.
    pub fn eval_dd(&self, x: Dd, anchor: f64) -> Option<Dd> {
        Some(match *self {
            Family::Logistic => x * (Dd::new(1.0) - x) * 4.0,
            Family::Quadratic { a } => Dd::new(a) - x * x,
            Family::Affine { slope, intercept } => x * slope + intercept,
            Family::Identity => x,
            Family::Doubling => {
                if anchor < 0.5 {
                    x * 2.0
                } else {
                    x * 2.0 - 1.0
                }
            }
            Family::Tent => {
                if anchor < 0.5 {
                    x * 2.0
                } else {
                    Dd::new(2.0) - x * 2.0
                }
            }
            Family::TwoWell => return None,
            Family::Mobius { a, b, c, d } => (x * a + b) / (x * c + d),
        })
    }

    /// Closed-form critical points, when the family has them.
    fn closed_form_critical(&self, domain: &IntervalDomain) -> Option<SmallVec<[f64; 4]>> {
        let inside = |c: f64| domain.lo < c && c < domain.hi;
        match *self {
            Family::Logistic => Some(SmallVec::from_slice(&[0.5])),
            Family::Quadratic { .. } => Some(if inside(0.0) { SmallVec::from_slice(&[0.0]) } else { SmallVec::new() }),
            Family::Affine { .. } | Family::Identity | Family::Doubling | Family::Tent => Some(SmallVec::new()),
            Family::Mobius { .. } => Some(SmallVec::new()),
            Family::TwoWell => None,
        }
    }

    fn kinks(&self) -> SmallVec<[f64; 2]> {
        match self {
            Family::Doubling | Family::Tent => SmallVec::from_slice(&[0.5]),
            _ => SmallVec::new(),
        }
    }

    /// Default domain of the family, if it has a canonical one.
    pub fn default_domain(&self) -> Option<IntervalDomain> {
        match self {
            Family::Logistic | Family::Doubling | Family::Tent | Family::TwoWell => Some(IntervalDomain::unit()),
            _ => None,
        }
    }
}

/// One self-map of an interval together with its cut structure.
///
/// Cut points are critical points plus kinks (points where the map is not
/// differentiable or not continuous); both split monotone branches.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMap {
    family: Family,
    domain: IntervalDomain,
    critical: SmallVec<[f64; 4]>,
    cuts: SmallVec<[f64; 4]>,
}

impl IntervalMap {
    /// Builds and validates a map from the catalogue.
    pub fn new(family: Family, domain: IntervalDomain) -> Result<Self> {
        let label = family.label();
        check_invariance(&family, &domain, &label)?;
        let kinks = family.kinks();
        let numeric = find_critical_points(&family, &domain, &kinks);
        let critical = match family.closed_form_critical(&domain) {
            Some(closed) => {
                let agree = closed.len() == numeric.len()
                    && closed.iter().zip(&numeric).all(|(a, b)| (a - b).abs() <= CRITICAL_AGREEMENT);
                if !agree {
                    return Err(Error::BadCriticalPoints {
                        label,
                        reason: format!("closed form {closed:?} disagrees with numeric {numeric:?}"),
                    });
                }
                closed
            }
            None => numeric,
        };
        let map = Self::from_parts(family, domain, critical);
        map.check_critical_structure()?;
        Ok(map)
    }

    /// Builds a family on its canonical domain.
    pub fn standard(family: Family) -> Result<Self> {
        let domain = family.default_domain().ok_or_else(|| {
            Error::Precondition(format!("family {} needs an explicit domain", family.label()))
        })?;
        Self::new(family, domain)
    }

    pub fn logistic() -> Self {
        Self::standard(Family::Logistic).expect("logistic map is valid")
    }

    /// Assembles a map whose validity is guaranteed by the caller, e.g. a
    /// fiber of an already validated skew-product.
    pub(crate) fn from_parts(family: Family, domain: IntervalDomain, critical: SmallVec<[f64; 4]>) -> Self {
        let mut cuts: SmallVec<[f64; 4]> = critical.clone();
        for k in family.kinks() {
            if domain.lo < k && k < domain.hi {
                cuts.push(k);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        Self { family, domain, critical, cuts }
    }

    fn check_critical_structure(&self) -> Result<()> {
        let label = self.label();
        let fail = |reason: String| Error::BadCriticalPoints { label: label.clone(), reason };
        if self.critical.windows(2).any(|w| w[0] >= w[1]) {
            return Err(fail("critical points are not strictly increasing".into()));
        }
        for &c in &self.critical {
            if self.family.d1(c).abs() > CRITICAL_DERIVATIVE_TOL {
                return Err(fail(format!("|f'({c})| = {} exceeds tolerance", self.family.d1(c).abs())));
            }
        }
        let mut bounds = vec![self.domain.lo];
        bounds.extend_from_slice(&self.cuts);
        bounds.push(self.domain.hi);
        for w in bounds.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut sign = 0.0;
            for i in 1..=SIGN_SAMPLES {
                let x = a + (b - a) * i as f64 / (SIGN_SAMPLES + 1) as f64;
                let d = self.family.d1(x);
                if d == 0.0 || (sign != 0.0 && d.signum() != sign) {
                    return Err(fail(format!("f' changes sign or vanishes near {x} inside ({a}, {b})")));
                }
                sign = d.signum();
            }
        }
        Ok(())
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn domain(&self) -> IntervalDomain {
        self.domain
    }

    pub fn label(&self) -> String {
        self.family.label()
    }

    pub fn critical_points(&self) -> &[f64] {
        &self.critical
    }

    /// Critical points and kinks, sorted.
    pub fn cut_points(&self) -> &[f64] {
        &self.cuts
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.family.eval(x)
    }

    #[inline]
    pub fn eval_on_branch(&self, x: f64, anchor: f64) -> f64 {
        self.family.eval_on_branch(x, anchor)
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        self.family.d1(x)
    }

    pub fn d2(&self, x: f64) -> Option<f64> {
        self.family.d2(x)
    }

    pub fn d3(&self, x: f64) -> Option<f64> {
        self.family.d3(x)
    }

    /// Sf = f'''/f' - (3/2)(f''/f')^2.
    pub fn schwarzian(&self, x: f64) -> Result<f64> {
        let d1 = self.d1(x);
        if d1.abs() <= 1e-12 {
            return Err(Error::DerivativeVanishes { x });
        }
        let (d2, d3) = match (self.d2(x), self.d3(x)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::MissingDerivative { label: self.label() }),
        };
        let q = d2 / d1;
        Ok(d3 / d1 - 1.5 * q * q)
    }

    /// Distance from `x` to the nearest critical point, or `None` when the
    /// map has none.
    pub fn critical_distance(&self, x: f64) -> Option<f64> {
        self.critical.iter().map(|c| (x - c).abs()).min_by(f64::total_cmp)
    }
}

/// Family-level convenience for free-function style call sites.
pub fn schwarzian(map: &IntervalMap, x: f64) -> Result<f64> {
    map.schwarzian(x)
}

fn check_invariance(family: &Family, domain: &IntervalDomain, label: &str) -> Result<()> {
    for j in 0..INVARIANCE_GRID {
        let x = domain.grid_point(j, INVARIANCE_GRID);
        let fx = family.eval(x);
        if !fx.is_finite() || !domain.contains_with(fx, INVARIANCE_TOL) {
            return Err(Error::DomainNotInvariant { label: label.to_string(), x, fx });
        }
    }
    Ok(())
}

/// Sign-change scan of f' on a 2^14-point grid, refined by bisection.
/// Brackets containing a kink are skipped: a jump of f' there is not a
/// critical point.
pub fn find_critical_points(family: &Family, domain: &IntervalDomain, kinks: &[f64]) -> SmallVec<[f64; 4]> {
    let mut out: SmallVec<[f64; 4]> = SmallVec::new();
    let n = CRITICAL_GRID + 1;
    let mut prev_x = domain.lo;
    let mut prev_d = family.d1(prev_x);
    for j in 1..n {
        let x = domain.grid_point(j, n);
        let d = family.d1(x);
        let has_kink = kinks.iter().any(|&k| prev_x <= k && k <= x);
        if !has_kink {
            if prev_d == 0.0 && prev_x > domain.lo {
                push_unique(&mut out, prev_x);
            } else if prev_d * d < 0.0 {
                push_unique(&mut out, bisect_root(|t| family.d1(t), prev_x, x, CRITICAL_TOL));
            }
        }
        prev_x = x;
        prev_d = d;
    }
    out
}

fn push_unique(out: &mut SmallVec<[f64; 4]>, c: f64) {
    if out.last().is_none_or(|&l| (c - l).abs() > CRITICAL_TOL) {
        out.push(c);
    }
}

/// Root of a function with a sign change on [a, b], to absolute tolerance `tol`.
pub fn bisect_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let fa = f(a);
    if fa == 0.0 {
        return a;
    }
    let left_negative = fa < 0.0;
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == left_negative {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// sin(2 pi t), shared by the circle-driven families.
#[inline]
pub(crate) fn sin2pi(t: f64) -> f64 {
    (2.0 * PI * t).sin()
}

#[inline]
pub(crate) fn cos2pi(t: f64) -> f64 {
    (2.0 * PI * t).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn logistic_schwarzian_at_zero() {
        let f = IntervalMap::logistic();
        assert_abs_diff_eq!(f.schwarzian(0.0).unwrap(), -6.0, epsilon = 1e-15);
    }

    #[test]
    fn affine_schwarzian_is_zero() {
        let f = IntervalMap::new(Family::Affine { slope: 0.5, intercept: 0.25 }, IntervalDomain::unit()).unwrap();
        for x in [0.0, 0.3, 0.9] {
            assert_eq!(f.schwarzian(x).unwrap(), 0.0);
        }
    }

    #[test]
    fn schwarzian_at_critical_point_fails() {
        let f = IntervalMap::logistic();
        assert_eq!(f.schwarzian(0.5), Err(Error::DerivativeVanishes { x: 0.5 }));
    }

    #[test]
    fn logistic_schwarzian_is_negative_off_the_critical_point() {
        let f = IntervalMap::logistic();
        for j in 0..=1000 {
            let x = j as f64 / 1000.0;
            if f.d1(x).abs() > 1e-12 {
                assert!(f.schwarzian(x).unwrap() < 0.0, "Sf({x}) >= 0");
            }
        }
    }

    #[test]
    fn two_well_has_no_third_derivative() {
        let f = IntervalMap::standard(Family::TwoWell).unwrap();
        assert!(matches!(f.schwarzian(0.1), Err(Error::MissingDerivative { .. })));
    }

    #[test]
    fn two_well_keeps_each_well_invariant() {
        let f = IntervalMap::standard(Family::TwoWell).unwrap();
        for j in 0..=1000 {
            let x = 0.45 * j as f64 / 1000.0;
            assert!((0.0..=0.45).contains(&f.eval(x)));
            let y = 0.55 + 0.45 * j as f64 / 1000.0;
            assert!((0.55..=1.0).contains(&f.eval(y)));
        }
        // One turning point in each well, two more inside the blending gap.
        let crit = f.critical_points();
        assert_eq!(crit.len(), 4, "{crit:?}");
        assert_abs_diff_eq!(crit[0], 0.225, epsilon = 1e-10);
        assert_abs_diff_eq!(crit[3], 0.775, epsilon = 1e-10);
    }

    #[test]
    fn two_well_gap_has_no_attractor() {
        let f = IntervalMap::standard(Family::TwoWell).unwrap();
        for j in 1..1000 {
            let mut x = 0.45 + 0.1 * j as f64 / 1000.0;
            let mut steps = 0;
            while x > 0.45 && x < 0.55 {
                x = f.eval(x);
                steps += 1;
                assert!(steps < 100, "orbit of gap point {j} stays in the gap");
            }
        }
    }

    #[test]
    fn two_well_derivative_matches_finite_differences() {
        let f = IntervalMap::standard(Family::TwoWell).unwrap();
        let h = 1e-6;
        for j in 1..200 {
            let x = j as f64 / 200.0;
            let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
            assert_abs_diff_eq!(f.d1(x), fd, epsilon = 1e-5);
        }
    }

    #[test]
    fn builtin_families_pass_critical_checks() {
        let maps = [
            IntervalMap::logistic(),
            IntervalMap::standard(Family::Tent).unwrap(),
            IntervalMap::standard(Family::Doubling).unwrap(),
            IntervalMap::standard(Family::TwoWell).unwrap(),
            IntervalMap::new(Family::Quadratic { a: 1.7 }, IntervalDomain::new(-1.85, 1.85).unwrap()).unwrap(),
        ];
        for f in &maps {
            for &c in f.critical_points() {
                assert!(f.d1(c).abs() <= 1e-9, "{}: f'({c})", f.label());
            }
        }
    }

    #[test]
    fn non_invariant_domain_is_rejected() {
        let err = IntervalMap::new(Family::Quadratic { a: 1.7 }, IntervalDomain::new(-2.0, 2.0).unwrap());
        assert!(matches!(err, Err(Error::DomainNotInvariant { .. })));
    }

    #[test]
    fn tent_kink_is_a_cut_but_not_critical() {
        let f = IntervalMap::standard(Family::Tent).unwrap();
        assert!(f.critical_points().is_empty());
        assert_eq!(f.cut_points(), &[0.5]);
    }
}
