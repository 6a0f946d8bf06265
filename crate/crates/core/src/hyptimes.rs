//! Pliss times, hyperbolic-like times, iteration of nearly horizontal
//! curves under a skew-product, and an empirical probe of the
//! neighbourhoods that a hyperbolic-like time maps onto a ball.

use serde::{Deserialize, Serialize};

use crate::branch::{track_branch, MonotoneBranch};
use crate::error::{Error, Result};
use crate::maps::{fiber_sequence, BaseMap, FiberFamily, SkewPoint, SkewProduct};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlissQuery {
    pub values: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    /// Upper bound of the values.
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlissTimes {
    /// 1-based indices n with Σ_{j=k+1}^{n} v_j ≥ c₁(n−k) for all k < n.
    pub indices: Vec<usize>,
    pub density: f64,
    /// Guaranteed density (c₂−c₁)/(A−c₁).
    pub zeta: f64,
    /// Whether Σ v_j ≥ c₂·n, the hypothesis behind the guarantee.
    pub guaranteed: bool,
}

/// Single pass over G(m) = S_m − c₁m: n is a Pliss time exactly when G(n)
/// is at least the running maximum of G(0), …, G(n−1).
pub fn pliss_times(q: &PlissQuery) -> Result<PlissTimes> {
    if !(q.c1 < q.c2 && q.c2 <= q.a) {
        return Err(Error::InvalidConstants { c1: q.c1, c2: q.c2, a: q.a });
    }
    if let Some(v) = q.values.iter().find(|v| !(**v <= q.a)) {
        return Err(Error::Precondition(format!("value {v} exceeds the bound A = {}", q.a)));
    }
    let mut indices = Vec::new();
    let mut sum = 0.0;
    let mut running_max = 0.0f64;
    for (m, v) in q.values.iter().enumerate() {
        sum += v;
        let g = sum - q.c1 * (m + 1) as f64;
        if g >= running_max {
            indices.push(m + 1);
        }
        running_max = running_max.max(g);
    }
    let n = q.values.len();
    let density = if n == 0 { 0.0 } else { indices.len() as f64 / n as f64 };
    Ok(PlissTimes {
        indices,
        density,
        zeta: (q.c2 - q.c1) / (q.a - q.c1),
        guaranteed: n > 0 && sum >= q.c2 * n as f64,
    })
}

/// Indices i (1-based) with r_i ≥ δ̃.
pub fn hyperbolic_like_times(branch: &MonotoneBranch, delta_tilde: f64) -> Result<Vec<usize>> {
    if !(delta_tilde > 0.0) {
        return Err(Error::Precondition(format!("δ̃ = {delta_tilde} must be positive")));
    }
    Ok(branch.r_history.iter().enumerate().filter(|(_, &r)| r >= delta_tilde).map(|(i, _)| i + 1).collect())
}

/// A piecewise-linear graph over an interval of (lifted) angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveGraph {
    pub domain: (f64, f64),
    pub samples: Vec<(f64, f64)>,
    pub max_slope: f64,
}

impl CurveGraph {
    /// Fails with `NotAGraph` unless the angles strictly increase.
    pub fn new(samples: Vec<(f64, f64)>, iterate: usize) -> Result<Self> {
        if samples.len() < 2 || samples.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::NotAGraph { iterate });
        }
        let max_slope =
            samples.windows(2).map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs()).fold(0.0, f64::max);
        let domain = (samples[0].0, samples[samples.len() - 1].0);
        Ok(Self { domain, samples, max_slope })
    }

    /// Samples θ ↦ X(θ) at `count` equally spaced angles of [lo, hi].
    pub fn from_fn(lo: f64, hi: f64, count: usize, x: impl Fn(f64) -> f64) -> Result<Self> {
        let count = count.max(2);
        let samples = (0..count)
            .map(|i| {
                let t = if i + 1 == count { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 };
                (t, x(t))
            })
            .collect();
        Self::new(samples, 0)
    }

    pub fn is_alpha_curve(&self, alpha: f64) -> bool {
        self.max_slope <= alpha
    }

    fn segment(&self, theta: f64) -> usize {
        let i = self.samples.partition_point(|s| s.0 <= theta);
        i.clamp(1, self.samples.len() - 1) - 1
    }

    /// Linear interpolation, clamped to the domain.
    pub fn value_at(&self, theta: f64) -> f64 {
        let theta = theta.clamp(self.domain.0, self.domain.1);
        let i = self.segment(theta);
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        a.1 + (b.1 - a.1) * (theta - a.0) / (b.0 - a.0)
    }

    pub fn arc_length(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1)).sum()
    }

    /// Arc length over [p, p + width], with the width carried separately so
    /// that it keeps full relative precision when tiny.
    pub fn arc_length_over(&self, p: f64, width: f64) -> f64 {
        let mut i = self.segment(p);
        let mut start = p;
        let mut left = width;
        let mut total = 0.0;
        while left > 0.0 {
            let (a, b) = (self.samples[i], self.samples[i + 1]);
            let slope = (b.1 - a.1) / (b.0 - a.0);
            let room = if i + 2 == self.samples.len() { f64::INFINITY } else { b.0 - start };
            let used = left.min(room.max(0.0));
            total += used * slope.hypot(1.0);
            left -= used;
            start = b.0;
            i += 1;
            if i + 1 >= self.samples.len() {
                break;
            }
        }
        total
    }
}

/// One retained piece of an iterated curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePiece {
    pub graph: CurveGraph,
    /// Index of the piece it is the image of, one level up.
    pub parent: Option<usize>,
    /// Integer part of the lifted image angles: lifted = local + shift.
    pub shift: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveLevel {
    pub iterate: usize,
    pub pieces: Vec<CurvePiece>,
    /// Number of pieces produced before thinning.
    pub computed: usize,
    /// Largest slope over all produced pieces, retained or not.
    pub max_slope_all: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePropagation {
    /// levels[0] holds the initial curve.
    pub levels: Vec<CurveLevel>,
}

/// Pieces kept per iterate. The image of a full circle wraps d times, so
/// keeping everything grows like dⁿ.
const KEEP_PIECES: usize = 8;
/// Largest angle spacing of image samples.
const MAX_SPACING: f64 = 1.0 / 256.0;
/// Largest jump in x between adjacent image samples.
const MAX_JUMP: f64 = 1e-3;
/// End pieces of a split image narrower than this are dropped:
/// finite-difference slopes over them are dominated by rounding.
const MIN_WIDTH: f64 = 1e-6;
const MAX_SAMPLES: usize = 1 << 20;

/// Images of a curve under φ, φ², …, φⁿ. Each image is split where the
/// lifted base coordinate crosses an integer, resampled by interpolating
/// its parent, and refined until adjacent samples are close.
pub fn propagate_curve(skew: &SkewProduct, curve: &CurveGraph, n: usize) -> Result<CurvePropagation> {
    let (lo, hi) = curve.domain;
    if hi - lo > 1.0 {
        return Err(Error::Precondition("a curve over the circle spans at most one turn".into()));
    }
    let offset = lo.floor();
    let initial = CurveGraph::new(curve.samples.iter().map(|&(t, x)| (t - offset, x)).collect(), 0)?;
    let mut levels = vec![CurveLevel {
        iterate: 0,
        max_slope_all: initial.max_slope,
        pieces: vec![CurvePiece { graph: initial, parent: None, shift: 0 }],
        computed: 1,
    }];
    for iterate in 1..=n {
        let prev = &levels[iterate - 1];
        let mut produced = Vec::new();
        for (pi, piece) in prev.pieces.iter().enumerate() {
            for (graph, shift) in image_pieces(skew.base(), skew.fiber(), &piece.graph, iterate)? {
                produced.push(CurvePiece { graph, parent: Some(pi), shift });
            }
        }
        let computed = produced.len();
        let max_slope_all = produced.iter().map(|p| p.graph.max_slope).fold(0.0, f64::max);
        let pieces = if computed > KEEP_PIECES {
            (0..KEEP_PIECES).map(|i| produced[i * computed / KEEP_PIECES].clone()).collect()
        } else {
            produced
        };
        levels.push(CurveLevel { iterate, pieces, computed, max_slope_all });
    }
    Ok(CurvePropagation { levels })
}

fn image_pieces(base: &BaseMap, fiber: &FiberFamily, g: &CurveGraph, iterate: usize) -> Result<Vec<(CurveGraph, i64)>> {
    let (a, b) = g.domain;
    let (ga, gb) = (base.lift(a), base.lift(b));
    let point = |tp: f64| {
        let src = if tp <= ga {
            a
        } else if tp >= gb {
            b
        } else {
            base.inverse_lift(tp, a, b)
        };
        fiber.eval(src, g.value_at(src))
    };
    let mut out = Vec::new();
    for k in (ga.floor() as i64)..(gb.ceil() as i64) {
        let u = ga.max(k as f64);
        let v = gb.min((k + 1) as f64);
        // End slivers of a split image are dropped; an image that was not
        // split is kept however narrow, so that degeneracy gets reported.
        if v - u < MIN_WIDTH && (u, v) != (ga, gb) {
            continue;
        }
        let m = ((v - u) / MAX_SPACING).ceil().max(1.0) as usize;
        let mut samples: Vec<(f64, f64)> = (0..=m)
            .map(|i| {
                let tp = if i == m { v } else { u + (v - u) * i as f64 / m as f64 };
                (tp, point(tp))
            })
            .collect();
        loop {
            let mut refined = Vec::with_capacity(samples.len() * 2);
            let mut changed = false;
            for w in samples.windows(2) {
                refined.push(w[0]);
                if (w[1].1 - w[0].1).abs() > MAX_JUMP {
                    let mid = 0.5 * (w[0].0 + w[1].0);
                    if mid <= w[0].0 || mid >= w[1].0 {
                        return Err(Error::NotAGraph { iterate });
                    }
                    refined.push((mid, point(mid)));
                    changed = true;
                }
            }
            refined.push(samples[samples.len() - 1]);
            samples = refined;
            if !changed {
                break;
            }
            if samples.len() > MAX_SAMPLES {
                return Err(Error::NotAGraph { iterate });
            }
        }
        let local = samples.into_iter().map(|(t, x)| (t - k as f64, x)).collect();
        out.push((CurveGraph::new(local, iterate)?, k));
    }
    Ok(out)
}

/// Constants of the slope bound for iterated α-curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveConstants {
    /// sup |∂_θ f / ∂_θ g|.
    pub l: f64,
    pub c: f64,
    pub sigma: f64,
    /// Σ σ̂ᵏ = 1/(1−σ̂).
    pub a: f64,
    pub alpha: f64,
}

impl CurveConstants {
    pub fn from_skew(skew: &SkewProduct, alpha: f64) -> Result<Self> {
        let dom = skew.domination().ok_or(Error::NotDominated)?;
        Ok(Self { l: skew.horizontal_coupling(256), c: dom.c, sigma: dom.sigma, a: 1.0 / (1.0 - dom.sigma), alpha })
    }

    /// Slope bound for the n-th image: L·C·A + C·σ̂ⁿ·α.
    pub fn c1(&self, n: usize) -> f64 {
        self.l * self.c * self.a + self.c * self.sigma.powi(n as i32) * self.alpha
    }

    /// Bound valid for every n.
    pub fn c1_uniform(&self) -> f64 {
        self.l * self.c * self.a + self.c * self.alpha
    }

    /// Arc-length constant √(1 + C₁²).
    pub fn c2(&self) -> f64 {
        self.c1_uniform().hypot(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcCheck {
    pub level: usize,
    pub piece: usize,
    pub k: usize,
    /// Arc length of the k-th preimage over arc length of the piece.
    pub ratio: f64,
    /// C₂ · max over the preimage of |∂_θ gᵏ|⁻¹.
    pub bound: f64,
}

impl ArcCheck {
    pub fn holds(&self) -> bool {
        self.ratio <= self.bound
    }
}

/// Compares a retained piece with its k-th preimage on the ancestor curve.
/// Returns `None` when the piece has fewer than k ancestors.
pub fn arc_contraction(
    skew: &SkewProduct,
    prop: &CurvePropagation,
    level: usize,
    piece: usize,
    k: usize,
    c2: f64,
) -> Option<ArcCheck> {
    let base = skew.base();
    let target = &prop.levels.get(level)?.pieces.get(piece)?.graph;
    let (mut p, hi) = target.domain;
    let mut width = hi - p;
    let mut idx = piece;
    let mut cur = level;
    for _ in 0..k {
        let pc = &prop.levels[cur].pieces[idx];
        let parent = pc.parent?;
        let pg = &prop.levels[cur - 1].pieces[parent].graph;
        let lifted = p + pc.shift as f64;
        let np = base.inverse_lift(lifted, pg.domain.0, pg.domain.1);
        width = base.inverse_increment(np, width);
        p = np;
        idx = parent;
        cur -= 1;
    }
    let pre = prop.levels[cur].pieces[idx].graph.arc_length_over(p, width);
    // Smallest expansion of gᵏ over the preimage, checked at both ends.
    let expansion = |mut t: f64| {
        let mut d = 1.0;
        for _ in 0..k {
            d *= base.d1(t).abs();
            t = base.apply(t.rem_euclid(1.0));
        }
        d
    };
    let min_exp = expansion(p).min(expansion(p + width));
    Some(ArcCheck { level, piece: idx, k, ratio: pre / target.arc_length(), bound: c2 / min_exp })
}

/// Outcome of [`probe_neighborhood`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub theta: f64,
    pub x: f64,
    pub k: usize,
    pub delta_tilde: f64,
    /// No two mesh points land within 1e-9 unless they are mesh neighbours.
    pub injective: bool,
    /// Every mesh column is mapped strictly monotonically, all with the
    /// same orientation.
    pub fold_free: bool,
    #[serde(rename = "K_hat")]
    pub k_hat: f64,
    pub delta1_hat: f64,
    pub grid: usize,
    pub r_k: f64,
    pub rho_prime: f64,
    /// Half-widths (η₁, η₂) of the angular extent of the box.
    pub eta: (f64, f64),
    /// Vertical extent I_k(z) of the box.
    pub i_k: (f64, f64),
}

const COINCIDE: f64 = 1e-9;

/// Builds the box (θ−η₁, θ+η₂) × I_k(z), where gᵏ maps the angular extent
/// onto (gᵏθ − ρ′, gᵏθ + ρ′) and the k-th fiber image of I_k(z) is the
/// image of T_k(z) with δ̃/2 removed at each end. Samples φᵏ on a
/// grid×grid mesh and reports injectivity, the spread of |det Dφᵏ| and the
/// radius of the largest disc around φᵏ(z) enclosed by the image of the
/// mesh boundary.
///
/// Angles along the pulled-back columns are carried as offsets from the
/// base orbit of θ, since the angular width near the source is about
/// ρ′/dᵏ and falls below the resolution of θ itself after a dozen steps.
pub fn probe_neighborhood(skew: &SkewProduct, z: SkewPoint, k: usize, delta_tilde: f64, grid: usize) -> Result<ProbeReport> {
    if !(delta_tilde > 0.0) {
        return Err(Error::Precondition(format!("δ̃ = {delta_tilde} must be positive")));
    }
    if grid < 2 {
        return Err(Error::Precondition("the probe mesh needs at least 2 points per side".into()));
    }
    let domain = skew.fiber_domain();
    let seq = fiber_sequence(skew, z.theta)?;
    let (r_k, i_k) = if k == 0 {
        let r = (z.x - domain.lo).min(domain.hi - z.x);
        (r, (domain.lo + delta_tilde / 2.0, domain.hi - delta_tilde / 2.0))
    } else {
        let branch = track_branch(&seq, z.x, k)?;
        let r = branch.r(k).unwrap_or(0.0);
        let a = branch.pull_back(k, branch.img_lo + delta_tilde / 2.0);
        let b = branch.pull_back(k, branch.img_hi - delta_tilde / 2.0);
        (r, (a.min(b), a.max(b)))
    };
    if r_k < delta_tilde {
        return Err(Error::NotHyperbolicLike { k, r: r_k, delta_tilde });
    }

    let consts = CurveConstants::from_skew(skew, 0.0)?;
    let c1 = consts.c1(0);
    let c2 = c1.hypot(1.0);
    let dist = skew.base().distortion_constant();
    let mut rho = delta_tilde / (4.0 * dist * consts.c * c2);
    if c1 > 0.0 {
        rho = rho.min(delta_tilde / (4.0 * c1));
    }
    let rho = 0.99 * rho;
    let rho_prime = rho / c2;

    let base = skew.base();
    let fiber = skew.fiber();
    let mut thetas = Vec::with_capacity(k + 1);
    let mut t = z.theta;
    for _ in 0..=k {
        thetas.push(t);
        t = base.orbit_step(t);
    }
    // offsets[j] for a column whose image angle is gᵏθ + s.
    let offsets = |s: f64| {
        let mut off = vec![0.0; k + 1];
        off[k] = s;
        for j in (0..k).rev() {
            off[j] = base.inverse_increment(thetas[j], off[j + 1]);
        }
        off
    };
    let push = |off: &[f64], y: f64| {
        let mut x = y;
        let mut logdet = 0.0;
        for j in 0..k {
            let th = thetas[j] + off[j];
            logdet += base.d1(th).abs().ln() + fiber.dx(th, x).abs().ln();
            x = fiber.eval(th, x);
        }
        (x, logdet)
    };
    let centre = push(&offsets(0.0), z.x).0;

    let column_s: Vec<f64> = (0..grid).map(|i| -rho_prime + 2.0 * rho_prime * i as f64 / (grid - 1) as f64).collect();
    let rows: Vec<f64> = (0..grid).map(|m| i_k.0 + (i_k.1 - i_k.0) * m as f64 / (grid - 1) as f64).collect();
    let mut eta = (0.0, 0.0);
    // image[i][m]: local image coordinates (s, x − centre) and log|det|.
    let mut image = Vec::with_capacity(grid);
    for (i, &s) in column_s.iter().enumerate() {
        let off = offsets(s);
        if i == 0 {
            eta.0 = -off[0];
        }
        if i + 1 == grid {
            eta.1 = off[0];
        }
        image.push(rows.iter().map(|&y| push(&off, y)).map(|(x, ld)| (s, x - centre, ld)).collect::<Vec<_>>());
    }

    let (mut lo_ld, mut hi_ld) = (f64::INFINITY, f64::NEG_INFINITY);
    for col in &image {
        for p in col {
            lo_ld = lo_ld.min(p.2);
            hi_ld = hi_ld.max(p.2);
        }
    }
    let k_hat = if lo_ld.is_finite() { (hi_ld - lo_ld).exp() } else { f64::INFINITY };

    let orientation = (image[0][1].1 - image[0][0].1).signum();
    let fold_free = orientation != 0.0
        && image.iter().all(|col| col.windows(2).all(|w| (w[1].1 - w[0].1).signum() == orientation));

    let injective = mesh_injective(&image);
    let boundary = boundary_polygon(&image);
    let delta1_hat = if winding_number(&boundary) != 0 { distance_to_polygon(&boundary) } else { 0.0 };

    Ok(ProbeReport {
        theta: z.theta,
        x: z.x,
        k,
        delta_tilde,
        injective,
        fold_free,
        k_hat,
        delta1_hat,
        grid,
        r_k,
        rho_prime,
        eta,
        i_k,
    })
}

fn mesh_injective(image: &[Vec<(f64, f64, f64)>]) -> bool {
    let grid = image.len();
    let mut pts: Vec<(f64, f64, usize, usize)> = Vec::with_capacity(grid * grid);
    for (i, col) in image.iter().enumerate() {
        for (m, p) in col.iter().enumerate() {
            pts.push((p.0, p.1, i, m));
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            if pts[b].0 - pts[a].0 > COINCIDE {
                break;
            }
            let (p, q) = (pts[a], pts[b]);
            let adjacent = p.2.abs_diff(q.2) <= 1 && p.3.abs_diff(q.3) <= 1;
            if !adjacent && (p.0 - q.0).hypot(p.1 - q.1) <= COINCIDE {
                return false;
            }
        }
    }
    true
}

/// Image of the mesh boundary, walked once around.
fn boundary_polygon(image: &[Vec<(f64, f64, f64)>]) -> Vec<(f64, f64)> {
    let g = image.len();
    let mut poly = Vec::with_capacity(4 * g);
    poly.extend(image.iter().map(|row| row[0]));
    poly.extend(image[g - 1][1..].iter().copied());
    for i in (0..g - 1).rev() {
        poly.push(image[i][g - 1]);
    }
    for m in (1..g - 1).rev() {
        poly.push(image[0][m]);
    }
    poly.into_iter().map(|p| (p.0, p.1)).collect()
}

/// Winding number of a closed polygon around the origin.
fn winding_number(poly: &[(f64, f64)]) -> i32 {
    let mut w = 0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let cross = a.0 * b.1 - a.1 * b.0;
        if a.1 <= 0.0 {
            if b.1 > 0.0 && cross > 0.0 {
                w += 1;
            }
        } else if b.1 <= 0.0 && cross < 0.0 {
            w -= 1;
        }
    }
    w
}

fn distance_to_polygon(poly: &[(f64, f64)]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 { (-(a.0 * dx + a.1 * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
        best = best.min((a.0 + t * dx).hypot(a.1 + t * dy));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branch::symbol_sequence;
    use crate::maps::{IntervalDomain, IntervalMap, MapSequence};

    fn q(values: &[f64], c1: f64, c2: f64, a: f64) -> PlissQuery {
        PlissQuery { values: values.to_vec(), c1, c2, a }
    }

    #[test]
    fn worked_pliss_example() {
        let t = pliss_times(&q(&[3.0, 0.0, 3.0, 0.0], 1.0, 1.5, 3.0)).unwrap();
        assert_eq!(t.indices, vec![1, 3]);
        assert_eq!(t.density, 0.5);
        assert_eq!(t.zeta, 0.25);
        assert!(t.guaranteed);
    }

    #[test]
    fn pliss_edge_cases() {
        let t = pliss_times(&q(&[0.7; 9], 0.5, 0.6, 1.0)).unwrap();
        assert_eq!(t.indices, (1..=9).collect::<Vec<_>>());
        let t = pliss_times(&q(&[0.0; 9], 0.5, 0.6, 1.0)).unwrap();
        assert!(t.indices.is_empty() && !t.guaranteed);
        assert!(matches!(pliss_times(&q(&[1.0], 1.0, 0.5, 3.0)), Err(Error::InvalidConstants { .. })));
        assert!(matches!(pliss_times(&q(&[1.0], 0.1, 3.5, 3.0)), Err(Error::InvalidConstants { .. })));
    }

    #[test]
    fn hyperbolic_like_times_of_the_worked_branch() {
        let seq = MapSequence::constant(IntervalMap::logistic());
        let b = track_branch(&seq, 0.25, 2).unwrap();
        assert_eq!(hyperbolic_like_times(&b, 0.2).unwrap(), vec![1, 2]);
        assert!(hyperbolic_like_times(&b, 1.5).unwrap().is_empty());
        assert_eq!(hyperbolic_like_times(&b, 1e-15).unwrap(), vec![1, 2]);
    }

    #[test]
    fn hyperbolic_like_times_agree_with_symbols() {
        let skew = SkewProduct::viana_default();
        let seq = fiber_sequence(&skew, 0.61).unwrap();
        for x in [-1.3, -0.4, 0.2, 0.9, 1.6] {
            let b = track_branch(&seq, x, 25).unwrap();
            let sym = symbol_sequence(&b, 0.2).unwrap();
            let ones: Vec<usize> = sym.iter().enumerate().filter(|(_, &s)| s == 1).map(|(i, _)| i + 1).collect();
            assert_eq!(hyperbolic_like_times(&b, 0.2).unwrap(), ones);
        }
    }

    #[test]
    fn decoupled_skew_keeps_flat_curves_flat() {
        let dom = IntervalDomain::new(-1.0, 1.0).unwrap();
        let skew =
            SkewProduct::new(BaseMap::Linear { d: 4 }, FiberFamily::AffineContraction { slope: 0.5, amp: 0.0 }, dom)
                .unwrap();
        let curve = CurveGraph::from_fn(0.0, 1.0, 65, |_| 0.3).unwrap();
        let prop = propagate_curve(&skew, &curve, 6).unwrap();
        assert!(prop.levels.iter().all(|l| l.max_slope_all == 0.0));
    }

    #[test]
    fn viana_flat_curve_obeys_slope_bound() {
        let skew = SkewProduct::viana_default();
        let consts = CurveConstants::from_skew(&skew, 0.0).unwrap();
        assert!((consts.l - 2.0 * std::f64::consts::PI * 0.05 / 16.0).abs() < 1e-12);
        let curve = CurveGraph::from_fn(0.0, 1.0, 257, |_| 0.4).unwrap();
        let prop = propagate_curve(&skew, &curve, 20).unwrap();
        for level in &prop.levels[1..] {
            assert!(level.max_slope_all <= consts.c1(level.iterate), "{}", level.iterate);
        }
    }

    #[test]
    fn steep_curve_over_a_tiny_interval_is_rejected() {
        let skew = SkewProduct::viana_default();
        let curve = CurveGraph::new(vec![(0.3, 0.0), (0.3 + 2e-15, 1.0)], 0).unwrap();
        assert!(matches!(propagate_curve(&skew, &curve, 3), Err(Error::NotAGraph { .. })));
    }

    #[test]
    fn arc_length_over_subranges() {
        let c = CurveGraph::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)], 0).unwrap();
        assert!((c.arc_length() - (2f64.sqrt() + 1.0)).abs() < 1e-15);
        assert!((c.arc_length_over(0.5, 1.0) - (0.5 * 2f64.sqrt() + 0.5)).abs() < 1e-15);
        assert!((c.arc_length_over(0.25, 1e-20) - 1e-20 * 2f64.sqrt()).abs() < 1e-35);
    }

    #[test]
    fn perturbed_base_increments_invert() {
        let base = BaseMap::Perturbed { d: 3, eps: 0.05 };
        for (t, s) in [(0.1, 1e-3), (0.7, -2e-9), (0.4, 3e-30)] {
            let delta = base.inverse_increment(t, s);
            assert!((base.lift_increment(t, delta) - s).abs() <= 1e-15 * s.abs());
        }
    }

    #[test]
    fn identity_probe() {
        let skew = SkewProduct::viana_default();
        let r = probe_neighborhood(&skew, SkewPoint::new(0.3, 0.2), 0, 0.2, 16).unwrap();
        assert_eq!(r.k_hat, 1.0);
        assert!(r.injective && r.fold_free);
        let expected = r.rho_prime.min(0.2 - (-1.85 + 0.1)).min(1.85 - 0.1 - 0.2);
        assert!((r.delta1_hat - expected).abs() < 1e-12, "{} vs {expected}", r.delta1_hat);
    }

    #[test]
    fn probe_requires_a_large_image() {
        let skew = SkewProduct::viana_default();
        let err = probe_neighborhood(&skew, SkewPoint::new(0.3, 0.2), 3, 10.0, 8);
        assert!(matches!(err, Err(Error::NotHyperbolicLike { .. })));
    }

    #[test]
    fn probe_json_field_names() {
        let skew = SkewProduct::viana_default();
        let r = probe_neighborhood(&skew, SkewPoint::new(0.3, 0.2), 0, 0.2, 4).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["theta", "x", "k", "delta_tilde", "injective", "K_hat", "delta1_hat", "grid"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
