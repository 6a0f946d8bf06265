//! Finite-time Lyapunov exponents, the sets A_n(δ), Y_n(λ), Z_n(λ), visit
//! frequencies to critical neighbourhoods and the A_n ∩ Y_n decay experiment.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::branch::BranchState;
use crate::error::{Error, Result};
use crate::maps::{IntervalMap, MapSequence, SkewPoint, SkewProduct};
use crate::rng::sample_rng;

/// Derivatives at or below this magnitude count as a critical hit.
const TINY: f64 = 1e-300;
/// Smallest Monte-Carlo sample accepted by the estimators.
pub const MIN_SAMPLES: usize = 1000;

/// Σ_{j<n} log|Df_{start+j}(f^j(x))| where x is the point at time `start`,
/// together with the endpoint of the orbit segment.
pub fn log_derivative_sum(seq: &MapSequence, x: f64, start: usize, n: usize) -> Result<(f64, f64)> {
    let mut sum = 0.0;
    let mut y = x;
    for (j, map) in seq.iter().skip(start).take(n).enumerate() {
        let d = map.d1(y).abs();
        if d <= TINY {
            return Err(Error::HitCritical { step: start + j });
        }
        sum += d.ln();
        y = map.eval(y);
    }
    Ok((sum, y))
}

/// (1/n) Σ_{j<n} log|Df_j(f^j(x))|.
pub fn ftle_fiber(seq: &MapSequence, x: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("the exponent over zero steps is undefined".into()));
    }
    Ok(log_derivative_sum(seq, x, 0, n)?.0 / n as f64)
}

/// Smallest singular value of [[a, 0], [b, c]] in closed form. Computed as
/// |det| / σ_max so that it stays accurate when σ_min ≪ σ_max.
#[inline]
pub fn co_norm(a: f64, b: f64, c: f64) -> f64 {
    let det = (a * c).abs();
    let s = a * a + b * b + c * c;
    let disc = ((s - 2.0 * det) * (s + 2.0 * det)).max(0.0).sqrt();
    let sigma_max = ((s + disc) / 2.0).sqrt();
    if sigma_max == 0.0 {
        0.0
    } else {
        det / sigma_max
    }
}

/// (1/n) Σ_{j<n} log m(Dφ(φʲ(z))) with m the co-norm.
pub fn ftle_full(skew: &SkewProduct, z: SkewPoint, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("the exponent over zero steps is undefined".into()));
    }
    let mut z = z;
    let mut sum = 0.0;
    for step in 0..n {
        let (gt, ft, fx) = skew.differential(z);
        // The second column is (0, ∂_x f): it vanishes exactly at critical
        // points, where the co-norm is zero.
        if fx.abs() <= TINY || (gt.abs() <= TINY && ft.abs() <= TINY) {
            return Err(Error::DegenerateDifferential { step });
        }
        sum += co_norm(gt, ft, fx).ln();
        z = skew.step(z);
    }
    Ok(sum / n as f64)
}

/// Fraction of j < n with dist(f^j(x), 𝒞_j) < ε.
pub fn visit_frequency(seq: &MapSequence, x: f64, n: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("ε = {eps} must be positive")));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let mut y = x;
    let mut hits = 0usize;
    for map in seq.iter().take(n) {
        if map.critical_distance(y).is_some_and(|d| d < eps) {
            hits += 1;
        }
        y = map.eval(y);
    }
    Ok(hits as f64 / n as f64)
}

/// Membership and orbit statistics of one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRecord {
    pub theta: Option<f64>,
    pub x: f64,
    pub n: usize,
    pub ftle: f64,
    pub r_mean: f64,
    pub r_n: f64,
    pub in_y: bool,
    pub in_a: bool,
    /// Only defined for points of a skew-product.
    pub in_z: Option<bool>,
    pub visit_freq: f64,
}

/// Thresholds used to classify a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub lambda: f64,
    pub delta: f64,
    pub eps: f64,
}

pub fn expansion_record(seq: &MapSequence, x: f64, n: usize, t: Thresholds) -> Result<ExpansionRecord> {
    if n == 0 {
        return Err(Error::Precondition("records need n ≥ 1".into()));
    }
    let mut state = BranchState::new(seq.domain(), x);
    let mut log_sum = 0.0;
    let mut r_sum = 0.0;
    let mut r_n = 0.0;
    for map in seq.iter().take(n) {
        let info = state.advance(&map)?;
        log_sum += info.derivative.ln();
        r_sum += info.r;
        r_n = info.r;
    }
    let ftle = log_sum / n as f64;
    let r_mean = r_sum / n as f64;
    Ok(ExpansionRecord {
        theta: None,
        x,
        n,
        ftle,
        r_mean,
        r_n,
        in_y: ftle > t.lambda,
        in_a: r_n > 0.0 && r_mean < t.delta * t.delta,
        in_z: None,
        visit_freq: visit_frequency(seq, x, n, t.eps)?,
    })
}

/// Fiber statistics along the fiber through z plus the Z_n flag.
pub fn expansion_record_skew(skew: &SkewProduct, z: SkewPoint, n: usize, t: Thresholds) -> Result<ExpansionRecord> {
    let seq = crate::maps::fiber_sequence(skew, z.theta)?;
    let mut rec = expansion_record(&seq, z.x, n, t)?;
    rec.theta = Some(z.theta);
    rec.in_z = Some(ftle_full(skew, z, n)? > t.lambda);
    Ok(rec)
}

/// Geometric grid of `count` values from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64)).collect(),
    }
}

/// The δ values scanned by default: ten points from 0.02 to 0.2.
pub fn default_delta_grid() -> Vec<f64> {
    geometric_grid(0.02, 0.2, 10)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayQuery {
    pub n_list: Vec<usize>,
    pub deltas: Vec<f64>,
    pub lambda: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: usize,
    pub fraction: f64,
    pub bound: f64,
    pub delta: f64,
    pub lambda: f64,
    pub samples: usize,
    pub seed: u64,
    /// Fraction of points in Y_n(λ) with r_n > 0, regardless of δ.
    pub y_fraction: f64,
}

impl DecayRow {
    /// Monte-Carlo estimate of |A_n ∩ Y_n| compared with |I₀|e^{−nλ/2}.
    pub fn within_bound(&self, domain_len: f64) -> bool {
        self.fraction * domain_len <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub domain_len: f64,
    pub rows: Vec<DecayRow>,
}

impl DecayTable {
    /// δ values whose fraction stays within the bound for every n.
    pub fn passing_deltas(&self) -> Vec<f64> {
        let mut deltas: Vec<f64> = Vec::new();
        for row in &self.rows {
            if !deltas.contains(&row.delta) {
                deltas.push(row.delta);
            }
        }
        deltas
            .into_iter()
            .filter(|&d| self.rows.iter().filter(|r| r.delta == d).all(|r| r.within_bound(self.domain_len)))
            .collect()
    }

    /// CSV with columns n, fraction, bound, delta, lambda, samples, seed.
    pub fn to_csv(&self) -> Result<String> {
        let io = |e: csv::Error| Error::Io(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "fraction", "bound", "delta", "lambda", "samples", "seed"]).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                format!("{:.17e}", r.fraction),
                format!("{:.17e}", r.bound),
                format!("{:.17e}", r.delta),
                format!("{:.17e}", r.lambda),
                r.samples.to_string(),
                r.seed.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Monte-Carlo fractions of uniform points of I₀ lying in A_n(δ) ∩ Y_n(λ),
/// for every (n, δ) of the query. Each sample runs one orbit up to the
/// largest n; counts are integers, so the result does not depend on how
/// rayon schedules the work.
pub fn measure_ay_decay(seq: &MapSequence, q: &DecayQuery) -> Result<DecayTable> {
    if q.samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!("{} samples; at least {MIN_SAMPLES} required", q.samples)));
    }
    if q.deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Precondition("every δ must be positive".into()));
    }
    let mut n_list = q.n_list.clone();
    n_list.sort_unstable();
    n_list.dedup();
    if n_list.first() == Some(&0) {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let n_max = n_list.last().copied().unwrap_or(0);
    let domain = seq.domain();
    let maps: Vec<IntervalMap> = seq.maps(n_max);
    let nd = q.deltas.len();
    let width = n_list.len() * (nd + 1);

    let counts = (0..q.samples as u64)
        .into_par_iter()
        .fold(
            || vec![0u64; width],
            |mut acc, i| {
                let u: f64 = sample_rng(q.seed, i).gen();
                let x = domain.lo + domain.len() * u;
                let mut state = BranchState::new(domain, x);
                let (mut log_sum, mut r_sum) = (0.0, 0.0);
                let mut r_last: f64;
                let mut next = 0;
                for (j, map) in maps.iter().enumerate() {
                    match state.advance(map) {
                        Ok(info) => {
                            log_sum += info.derivative.ln();
                            r_sum += info.r;
                            r_last = info.r;
                        }
                        // T_n is undefined past a critical hit: the point
                        // belongs to no A_n for larger n.
                        Err(_) => break,
                    }
                    let n = j + 1;
                    if n == n_list[next] {
                        let nf = n as f64;
                        if log_sum / nf > q.lambda && r_last > 0.0 {
                            let base = next * (nd + 1);
                            acc[base + nd] += 1;
                            for (k, d) in q.deltas.iter().enumerate() {
                                if r_sum / nf < d * d {
                                    acc[base + k] += 1;
                                }
                            }
                        }
                        next += 1;
                        if next == n_list.len() {
                            break;
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; width],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let total = q.samples as f64;
    let mut rows = Vec::with_capacity(n_list.len() * nd);
    for (ni, &n) in n_list.iter().enumerate() {
        let base = ni * (nd + 1);
        for (k, &delta) in q.deltas.iter().enumerate() {
            rows.push(DecayRow {
                n,
                fraction: counts[base + k] as f64 / total,
                bound: domain.len() * (-(n as f64) * q.lambda / 2.0).exp(),
                delta,
                lambda: q.lambda,
                samples: q.samples,
                seed: q.seed,
                y_fraction: counts[base + nd] as f64 / total,
            });
        }
    }
    Ok(DecayTable { domain_len: domain.len(), rows })
}

/// Empirical supremum of |log|∂_x f(z)| − log|∂_x f(w)|| · d(z) / dist(z,w)
/// over random pairs with dist(z,w) < d(z)/2, where d is the vertical
/// distance to the critical set. Distances on 𝕋¹×I₀ are Euclidean with the
/// angle difference taken mod 1.
pub fn estimate_f2(skew: &SkewProduct, samples: usize, seed: u64) -> Result<f64> {
    if samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!("{samples} samples; at least {MIN_SAMPLES} required")));
    }
    let domain = skew.fiber_domain();
    let fiber = *skew.fiber();
    let best = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let z = SkewPoint::new(rng.gen(), domain.lo + domain.len() * rng.gen::<f64>());
            let dv = skew.vertical_critical_distance(z);
            let radius = 0.5 * dv * rng.gen::<f64>().sqrt();
            let angle = 2.0 * PI * rng.gen::<f64>();
            let w = SkewPoint::new((z.theta + radius * angle.cos()).rem_euclid(1.0), z.x + radius * angle.sin());
            if radius <= 0.0 || !domain.contains(w.x) {
                return None;
            }
            let lz = fiber.dx(z.theta, z.x).abs().ln();
            let lw = fiber.dx(w.theta, w.x).abs().ln();
            let ratio = (lz - lw).abs() * dv / radius;
            ratio.is_finite().then_some(ratio)
        })
        .reduce(|| None, |a, b| match (a, b) {
            (Some(a), Some(b)) => Some(f64::max(a, b)),
            (a, None) => a,
            (None, b) => b,
        });
    best.ok_or(Error::EmptySample)
}
