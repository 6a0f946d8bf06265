//! Induced Markov maps of a single multimodal map: a forward-invariant
//! partition, inducing times k(x) with their branch domains I(x),
//! certification of the Markov properties, cross-ratio diagnostics and
//! the mean inducing time along induced orbits.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branch::{monotonicity_partition, track_branch, BranchState, MonotoneBranch, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::maps::{bisect_root, IntervalMap, MapSequence};
use crate::rng::sample_rng;

/// Tolerance for endpoint landing, image exactness and constancy.
pub const MARKOV_TOL: f64 = 1e-9;
/// Longest forward orbit an endpoint may take before it must close up.
pub const CLOSURE_CAP: usize = 64;
/// Depth of the monotonicity partition used for stratified seeding.
const STRATA_DEPTH: usize = 8;
const GAP_ROUNDS: usize = 64;
/// Gaps shorter than this are not reseeded.
const MIN_GAP: f64 = 1e-12;
const DISTORTION_SAMPLES: usize = 17;
const CONSTANCY_SAMPLES: usize = 10;
const COMPOSITION_PROBES: usize = 512;
const MAX_COMPOSITION: usize = 3;
/// Smallest coverage accepted by [`summability_stat`].
pub const MIN_COVERAGE: f64 = 0.95;
const GAP_EPS: f64 = 1e-12;

/// Sorted endpoint set including both ends of I₀; the cells are the open
/// intervals between consecutive endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovPartition {
    pub endpoints: Vec<f64>,
    pub min_len: f64,
}

impl MarkovPartition {
    /// A partition with the given endpoints, without any invariance check.
    pub fn from_endpoints(mut endpoints: Vec<f64>) -> Result<Self> {
        endpoints.sort_by(f64::total_cmp);
        endpoints.dedup();
        if endpoints.len() < 2 {
            return Err(Error::Precondition("a partition needs at least two endpoints".into()));
        }
        let min_len = endpoints.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if !(min_len > 0.0) {
            return Err(Error::Precondition("partition cells must have positive length".into()));
        }
        Ok(Self { endpoints, min_len })
    }

    /// The same partition with one extra endpoint, for fault injection.
    pub fn with_extra_endpoint(&self, x: f64) -> Result<Self> {
        let mut e = self.endpoints.clone();
        e.push(x);
        Self::from_endpoints(e)
    }

    pub fn cell_count(&self) -> usize {
        self.endpoints.len() - 1
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.endpoints[i], self.endpoints[i + 1])
    }

    /// Index of the cell containing x in its interior.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let i = self.endpoints.partition_point(|&e| e <= x);
        (i >= 1 && i < self.endpoints.len() && self.endpoints[i - 1] < x).then(|| i - 1)
    }

    fn distance_to_endpoints(&self, x: f64) -> f64 {
        let i = self.endpoints.partition_point(|&e| e < x);
        let mut d = f64::INFINITY;
        if i < self.endpoints.len() {
            d = d.min(self.endpoints[i] - x);
        }
        if i > 0 {
            d = d.min(x - self.endpoints[i - 1]);
        }
        d
    }

    /// max over endpoints e of dist(f(e), endpoints).
    pub fn invariance_error(&self, map: &IntervalMap) -> f64 {
        self.endpoints.iter().map(|&e| self.distance_to_endpoints(map.eval(e))).fold(0.0, f64::max)
    }
}

fn near(set: &[f64], x: f64) -> bool {
    set.iter().any(|&e| (e - x).abs() <= MARKOV_TOL)
}

/// Adds forward orbits of every point of `set` until each lands within
/// tolerance of the set.
fn close_forward(map: &IntervalMap, set: &mut Vec<f64>) -> Result<()> {
    let mut i = 0;
    while i < set.len() {
        let start = set[i];
        let mut y = start;
        let mut added = 0;
        loop {
            y = map.eval(y);
            if near(set, y) {
                break;
            }
            if added == CLOSURE_CAP {
                return Err(Error::ClosureDiverges { endpoint: start, cap: CLOSURE_CAP });
            }
            set.push(y);
            added += 1;
        }
        i += 1;
    }
    Ok(())
}

/// Monotone pieces of the map: the domain split at its cut points.
fn pieces(map: &IntervalMap) -> Vec<(f64, f64)> {
    let d = map.domain();
    let mut b = vec![d.lo];
    b.extend_from_slice(map.cut_points());
    b.push(d.hi);
    b.windows(2).map(|w| (w[0], w[1])).collect()
}

/// All y with f(y) = v, one per monotone piece whose image contains v.
fn preimages(map: &IntervalMap, v: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for (a, b) in pieces(map) {
        let mid = 0.5 * (a + b);
        let fa = map.eval_on_branch(a, mid);
        let fb = map.eval_on_branch(b, mid);
        if v == fa {
            out.push(a);
        } else if v == fb {
            out.push(b);
        } else if (fa < v && v < fb) || (fb < v && v < fa) {
            out.push(bisect_root(|y| map.eval_on_branch(y, mid) - v, a, b, 0.0));
        }
    }
    out
}

/// ∂I₀, the cut points and their forward orbits, then `depth` rounds of
/// preimages of the whole set, closed again under f.
pub fn build_partition(map: &IntervalMap, depth: usize) -> Result<MarkovPartition> {
    let d = map.domain();
    let mut set = vec![d.lo, d.hi];
    for &c in map.cut_points() {
        if !near(&set, c) {
            set.push(c);
        }
    }
    close_forward(map, &mut set)?;
    for _ in 0..depth {
        let current = set.clone();
        for v in current {
            for y in preimages(map, v) {
                if !near(&set, y) {
                    set.push(y);
                }
            }
        }
        close_forward(map, &mut set)?;
    }
    MarkovPartition::from_endpoints(set)
}

/// Smallest n whose longest monotonicity cell is shorter than min_len/4.
pub fn compute_n(map: &IntervalMap, part: &MarkovPartition) -> Result<usize> {
    let seq = MapSequence::constant(map.clone());
    let target = part.min_len / 4.0;
    for n in 1..=64 {
        if monotonicity_partition(&seq, n, DEFAULT_CAP)?.longest_cell() < target {
            return Ok(n);
        }
    }
    Err(Error::CapExceeded { cap: 64 })
}

/// An inducing time k(x) and the domain I(x) with f^k(I) equal to a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Induced {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub image_cell: usize,
}

/// Whether (lo, hi) contains cells c−1, c, c+1 (those that exist).
fn covers(part: &MarkovPartition, c: usize, lo: f64, hi: f64) -> bool {
    let first = c.saturating_sub(1);
    let last = (c + 1).min(part.cell_count() - 1);
    lo <= part.endpoints[first] + MARKOV_TOL && hi >= part.endpoints[last + 1] - MARKOV_TOL
}

fn induce(
    map: &IntervalMap,
    part: &MarkovPartition,
    x: f64,
    n_min: usize,
    k_max: usize,
) -> Result<(Induced, MonotoneBranch)> {
    if part.cell_of(x).is_none() {
        return Err(Error::Precondition(format!("{x} is not interior to a partition cell")));
    }
    if k_max < n_min {
        return Err(Error::NotFound { k_max });
    }
    let mut state = BranchState::new(map.domain(), x);
    for k in 1..=k_max {
        state.advance(map)?;
        if k < n_min {
            continue;
        }
        if let Some(c) = part.cell_of(state.pos) {
            if covers(part, c, state.lo, state.hi) {
                let seq = MapSequence::constant(map.clone());
                let branch = track_branch(&seq, x, k)?;
                let (a, b) = part.cell(c);
                let (u, v) = (branch.pull_back(k, a), branch.pull_back(k, b));
                let induced = Induced { k, lo: u.min(v), hi: u.max(v), image_cell: c };
                return Ok((induced, branch));
            }
        }
    }
    Err(Error::NotFound { k_max })
}

/// The minimal k in [n_min, k_max] such that f^k(T_k(x)) covers the cell
/// of f^k(x) and both neighbouring cells, with I(x) the pull-back of that
/// cell inside T_k(x).
pub fn inducing_time(map: &IntervalMap, part: &MarkovPartition, x: f64, n_min: usize, k_max: usize) -> Result<Induced> {
    induce(map, part, x, n_min, k_max).map(|r| r.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedBranch {
    pub lo: f64,
    pub hi: f64,
    pub k: usize,
    pub image_cell: usize,
    /// max/min of |Df^k| over interior samples.
    pub distortion_sample: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// The image is exactly one cell and the domain lies inside one cell.
    M2,
    /// The image is at least min_len long.
    M3,
    /// Interior samples reproduce (k, I).
    Constancy,
    /// Two discovered domains overlap without coinciding.
    Overlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFailure {
    pub branch: usize,
    pub property: Property,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    pub n: usize,
    pub k_max: usize,
    pub branches: Vec<InducedBranch>,
    pub failures: Vec<BranchFailure>,
    pub m2_pass: bool,
    pub m3_pass: bool,
    pub constancy_pass: bool,
    /// Largest distortion over branches and sampled compositions of up to
    /// three branches.
    pub k_hat: f64,
    pub coverage: f64,
    pub seeds_tried: usize,
    pub not_found: usize,
    pub hit_critical: usize,
    pub gap_rounds: usize,
}

impl MarkovReport {
    /// CSV with columns i, lo, hi, k, image_cell, distortion_sample.
    pub fn branches_csv(&self) -> Result<String> {
        let io = |e: csv::Error| Error::Io(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["i", "lo", "hi", "k", "image_cell", "distortion_sample"]).map_err(io)?;
        for (i, b) in self.branches.iter().enumerate() {
            w.write_record([
                i.to_string(),
                format!("{:.17e}", b.lo),
                format!("{:.17e}", b.hi),
                b.k.to_string(),
                b.image_cell.to_string(),
                format!("{:.17e}", b.distortion_sample),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// log|Df^k(y)| along the orbit of y.
fn log_derivative(map: &IntervalMap, mut y: f64, k: usize) -> f64 {
    let mut s = 0.0;
    for _ in 0..k {
        s += map.d1(y).abs().ln();
        y = map.eval(y);
    }
    s
}

fn interior_samples(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |j| lo + (hi - lo) * (j as f64 + 0.5) / count as f64)
}

/// exp(max − min) of log|Df^k| over interior samples of (lo, hi).
fn distortion(map: &IntervalMap, lo: f64, hi: f64, k: usize) -> f64 {
    let (mut mx, mut mn) = (f64::NEG_INFINITY, f64::INFINITY);
    for y in interior_samples(lo, hi, DISTORTION_SAMPLES) {
        let l = log_derivative(map, y, k);
        mx = mx.max(l);
        mn = mn.min(l);
    }
    (mx - mn).exp()
}

struct Found {
    induced: Induced,
    branch: MonotoneBranch,
}

type Attempt = std::result::Result<Found, Error>;

fn attempt_all(map: &IntervalMap, part: &MarkovPartition, xs: &[f64], n: usize, k_max: usize) -> Vec<Attempt> {
    xs.par_iter()
        .map(|&x| induce(map, part, x, n, k_max).map(|(induced, branch)| Found { induced, branch }))
        .collect()
}

/// Sorted, deduplicated domains. Overlaps that do not coincide are kept
/// out and reported.
fn merge(found: Vec<Found>, into: &mut Vec<Found>, overlaps: &mut Vec<(f64, f64, f64, f64)>) {
    into.extend(found);
    into.sort_by(|a, b| a.induced.lo.total_cmp(&b.induced.lo));
    let mut kept: Vec<Found> = Vec::with_capacity(into.len());
    for f in into.drain(..) {
        if let Some(last) = kept.last() {
            let (a, b) = (&last.induced, &f.induced);
            if b.lo < a.hi - MARKOV_TOL {
                let same = (a.lo - b.lo).abs() <= MARKOV_TOL && (a.hi - b.hi).abs() <= MARKOV_TOL;
                if !same && !overlaps.contains(&(a.lo, a.hi, b.lo, b.hi)) {
                    overlaps.push((a.lo, a.hi, b.lo, b.hi));
                }
                continue;
            }
        }
        kept.push(f);
    }
    *into = kept;
}

fn uncovered_midpoints(part: &MarkovPartition, found: &[Found]) -> Vec<f64> {
    let (lo, hi) = (part.endpoints[0], *part.endpoints.last().expect("non-empty"));
    let mut edges = vec![lo];
    for f in found {
        edges.push(f.induced.lo);
        edges.push(f.induced.hi);
    }
    edges.push(hi);
    edges
        .chunks(2)
        .filter(|w| w[1] - w[0] > MIN_GAP)
        .map(|w| 0.5 * (w[0] + w[1]))
        .filter(|&m| part.cell_of(m).is_some())
        .collect()
}

/// Chain residual max_i |f(u_i) − u_{i+1}| of the pull-back of `value`.
fn chain_residual(map: &IntervalMap, branch: &MonotoneBranch, k: usize, value: f64) -> f64 {
    let chain = branch.preimage_chain(k, value);
    let anchor_orbit = {
        let mut a = branch.x;
        let mut v = Vec::with_capacity(k);
        for _ in 0..k {
            v.push(a);
            a = map.eval(a);
        }
        v
    };
    (0..k)
        .map(|i| (map.eval_on_branch(chain[i], anchor_orbit[i]) - chain[i + 1]).abs())
        .fold(0.0, f64::max)
}

/// Discovers branches from stratified and random seeds, fills coverage
/// gaps by reseeding their midpoints, then certifies the Markov
/// properties, constancy of (k, I) and bounded distortion.
pub fn assemble_markov(
    map: &IntervalMap,
    part: &MarkovPartition,
    seeds: usize,
    n: usize,
    k_max: usize,
    seed: u64,
) -> Result<MarkovReport> {
    let domain = map.domain();
    let seq = MapSequence::constant(map.clone());
    let strata = monotonicity_partition(&seq, STRATA_DEPTH, DEFAULT_CAP)?;
    let mut xs: Vec<f64> = strata
        .cells()
        .iter()
        .enumerate()
        .map(|(i, c)| c.lo + (c.hi - c.lo) * sample_rng(seed, i as u64).gen::<f64>())
        .collect();
    let offset = xs.len() as u64;
    xs.extend((0..seeds as u64).map(|i| domain.lo + domain.len() * sample_rng(seed, offset + i).gen::<f64>()));

    let mut found: Vec<Found> = Vec::new();
    let mut overlaps = Vec::new();
    let (mut tried, mut not_found, mut hit_critical) = (0, 0, 0);
    let mut gap_rounds = 0;
    let mut last_coverage = -1.0;
    loop {
        tried += xs.len();
        let mut ok = Vec::new();
        for a in attempt_all(map, part, &xs, n, k_max) {
            match a {
                Ok(f) => ok.push(f),
                Err(Error::NotFound { .. }) => not_found += 1,
                Err(Error::HitCritical { .. }) => hit_critical += 1,
                Err(_) => {}
            }
        }
        merge(ok, &mut found, &mut overlaps);
        let coverage: f64 = found.iter().map(|f| f.induced.hi - f.induced.lo).sum::<f64>() / domain.len();
        if coverage <= last_coverage || gap_rounds == GAP_ROUNDS {
            break;
        }
        last_coverage = coverage;
        xs = uncovered_midpoints(part, &found);
        if xs.is_empty() {
            break;
        }
        gap_rounds += 1;
    }

    let mut failures: Vec<BranchFailure> = Vec::new();
    for (a_lo, a_hi, b_lo, b_hi) in &overlaps {
        let branch = found.partition_point(|f| f.induced.lo < *a_lo);
        failures.push(BranchFailure {
            branch,
            property: Property::Overlap,
            detail: format!("({a_lo}, {a_hi}) overlaps ({b_lo}, {b_hi})"),
        });
    }

    let checks: Vec<(InducedBranch, Vec<BranchFailure>)> = found
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let ind = &f.induced;
            let mut fails = Vec::new();
            let (c_lo, c_hi) = part.cell(ind.image_cell);
            let residual = chain_residual(map, &f.branch, ind.k, c_lo).max(chain_residual(map, &f.branch, ind.k, c_hi));
            let straddles = part.endpoints.iter().any(|&e| ind.lo + MARKOV_TOL < e && e < ind.hi - MARKOV_TOL);
            if residual > MARKOV_TOL || straddles {
                fails.push(BranchFailure {
                    branch: i,
                    property: Property::M2,
                    detail: format!("image chain residual {residual:e}, domain crosses an endpoint: {straddles}"),
                });
            }
            if c_hi - c_lo < part.min_len - MARKOV_TOL {
                fails.push(BranchFailure {
                    branch: i,
                    property: Property::M3,
                    detail: format!("image length {} below {}", c_hi - c_lo, part.min_len),
                });
            }
            for y in interior_samples(ind.lo, ind.hi, CONSTANCY_SAMPLES) {
                let same = match inducing_time(map, part, y, n, k_max) {
                    Ok(o) => {
                        o.k == ind.k && (o.lo - ind.lo).abs() <= MARKOV_TOL && (o.hi - ind.hi).abs() <= MARKOV_TOL
                    }
                    Err(_) => false,
                };
                if !same {
                    fails.push(BranchFailure {
                        branch: i,
                        property: Property::Constancy,
                        detail: format!("sample {y} disagrees"),
                    });
                    break;
                }
            }
            let b = InducedBranch {
                lo: ind.lo,
                hi: ind.hi,
                k: ind.k,
                image_cell: ind.image_cell,
                distortion_sample: distortion(map, ind.lo, ind.hi, ind.k),
            };
            (b, fails)
        })
        .collect();
    let mut branches = Vec::with_capacity(checks.len());
    for (b, f) in checks {
        branches.push(b);
        failures.extend(f);
    }

    let composition_hat = composition_distortion(map, &found, seed);
    let k_hat = branches.iter().map(|b| b.distortion_sample).fold(composition_hat, f64::max);
    let coverage = branches.iter().map(|b| b.hi - b.lo).sum::<f64>() / domain.len();
    let has = |p: Property| failures.iter().any(|f| f.property == p);
    Ok(MarkovReport {
        n,
        k_max,
        m2_pass: !has(Property::M2) && !has(Property::Overlap),
        m3_pass: !has(Property::M3),
        constancy_pass: !has(Property::Constancy),
        branches,
        failures,
        k_hat,
        coverage,
        seeds_tried: tried,
        not_found,
        hit_critical,
        gap_rounds,
    })
}

fn locate(found: &[Found], y: f64) -> Option<usize> {
    let i = found.partition_point(|f| f.induced.hi <= y);
    found.get(i).filter(|f| f.induced.lo < y && y < f.induced.hi).map(|_| i)
}

/// Distortion of F^m, m ≤ 3, on cylinders I_{i₁} ∩ F⁻¹I_{i₂} ∩ … visited
/// by random points. Cylinders are obtained by pulling the last domain
/// back through the recorded branches.
fn composition_distortion(map: &IntervalMap, found: &[Found], seed: u64) -> f64 {
    if found.is_empty() {
        return 1.0;
    }
    let stream = u64::MAX - 1;
    let mut rng = sample_rng(seed, stream);
    let mut worst = 1.0f64;
    for _ in 0..COMPOSITION_PROBES {
        let start = rng.gen_range(0..found.len());
        let f0 = &found[start].induced;
        let mut y = f0.lo + (f0.hi - f0.lo) * rng.gen::<f64>();
        let mut path = vec![start];
        for _ in 1..MAX_COMPOSITION {
            let cur = &found[*path.last().expect("non-empty")];
            y = crate::branch::compose_on_branch(&vec![map.clone(); cur.induced.k], y, cur.branch.x);
            match locate(found, y) {
                Some(j) => path.push(j),
                None => break,
            }
        }
        if path.len() < 2 {
            continue;
        }
        // Pull the last domain back to a cylinder in the first.
        let last = &found[*path.last().expect("non-empty")].induced;
        let (mut a, mut b) = (last.lo, last.hi);
        for &p in path[..path.len() - 1].iter().rev() {
            let br = &found[p];
            let (u, v) = (br.branch.pull_back(br.induced.k, a), br.branch.pull_back(br.induced.k, b));
            (a, b) = (u.min(v), u.max(v));
        }
        let total_k: usize = path[..path.len() - 1].iter().map(|&p| found[p].induced.k).sum();
        if b - a > GAP_EPS {
            worst = worst.max(distortion(map, a, b, total_k));
        }
    }
    worst
}

/// b(T, J) = |J||T| / (|L||R|) for J = (b, c) inside T = (a, d).
pub fn cross_ratio(t: (f64, f64), j: (f64, f64)) -> Result<f64> {
    let ((a, d), (b, c)) = (t, j);
    if !(a <= b && b < c && c <= d) {
        return Err(Error::Precondition(format!("({b}, {c}) is not inside ({a}, {d})")));
    }
    let (l, r) = (b - a, d - c);
    if l <= GAP_EPS || r <= GAP_EPS {
        return Err(Error::DegenerateGap);
    }
    Ok((c - b) * (d - a) / (l * r))
}

/// Images of the endpoints of T and J under f^k, after checking that no
/// cut point of f lies inside any intermediate image of T.
fn monotone_images(map: &IntervalMap, k: usize, pts: [f64; 4]) -> Result<[f64; 4]> {
    let mut p = pts;
    let anchor0 = 0.5 * (p[1] + p[2]);
    let mut anchor = anchor0;
    for _ in 0..k {
        let (lo, hi) = (p[0].min(p[3]), p[0].max(p[3]));
        if map.cut_points().iter().any(|&c| lo < c && c < hi) {
            return Err(Error::NotMonotone);
        }
        for q in p.iter_mut() {
            *q = map.eval_on_branch(*q, anchor);
        }
        anchor = map.eval(anchor);
    }
    Ok(p)
}

/// B(f^k, T, J) = b(f^k T, f^k J) / b(T, J).
pub fn cross_ratio_operator(map: &IntervalMap, k: usize, t: (f64, f64), j: (f64, f64)) -> Result<f64> {
    let before = cross_ratio(t, j)?;
    let [a, b, c, d] = monotone_images(map, k, [t.0, j.0, j.1, t.1])?;
    let after = if a <= d { cross_ratio((a, d), (b, c))? } else { cross_ratio((d, a), (c, b))? };
    Ok(after / before)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KoebeFit {
    /// Smallest C with B(fⁿ, M, I) ≥ exp(−C|fⁿ(M)|²) on every sample.
    pub c_hat: f64,
    pub min_b: f64,
    pub samples: usize,
    pub n: usize,
}

/// Fits Ĉ over random nested pairs I ⊂ M inside monotone branches T_n(x):
/// M is the middle 80% of T_n(x), I a random subinterval of M.
pub fn koebe_fit(map: &IntervalMap, n: usize, samples: usize, seed: u64) -> Result<KoebeFit> {
    let seq = MapSequence::constant(map.clone());
    let domain = map.domain();
    let (mut c_hat, mut min_b, mut used) = (0.0f64, f64::INFINITY, 0);
    for i in 0..samples as u64 {
        let mut rng = sample_rng(seed, i);
        let x = domain.lo + domain.len() * rng.gen::<f64>();
        let Ok(branch) = track_branch(&seq, x, n) else { continue };
        let w = branch.t_hi - branch.t_lo;
        let m = (branch.t_lo + 0.1 * w, branch.t_hi - 0.1 * w);
        let (u, v) = (rng.gen::<f64>(), rng.gen::<f64>());
        let (u, v) = (u.min(v), u.max(v));
        let inner = (m.0 + (m.1 - m.0) * (0.05 + 0.9 * u), m.0 + (m.1 - m.0) * (0.05 + 0.9 * v));
        if inner.1 - inner.0 <= GAP_EPS {
            continue;
        }
        let b = match cross_ratio_operator(map, n, m, inner) {
            Ok(b) => b,
            Err(Error::DegenerateGap) => continue,
            Err(e) => return Err(e),
        };
        let [a, _, _, d] = monotone_images(map, n, [m.0, inner.0, inner.1, m.1])?;
        let image_len = (d - a).abs();
        min_b = min_b.min(b);
        if b < 1.0 {
            c_hat = c_hat.max(-b.ln() / (image_len * image_len));
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptySample);
    }
    Ok(KoebeFit { c_hat, min_b, samples: used, n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    /// Mean inducing time over all retained induced orbits.
    pub mean: f64,
    pub probe_means: Vec<f64>,
    /// Standard deviation of the probe means relative to the mean.
    pub relative_dispersion: f64,
    pub escaped: usize,
    pub probes: usize,
    pub orbit_len: usize,
}

/// Birkhoff average of k along induced orbits F(x) = f^{k(x)}(x) from
/// uniform probes. Orbits that leave the branch domains are counted and
/// left out of the average.
pub fn summability_stat(
    branches: &[InducedBranch],
    map: &IntervalMap,
    orbit_len: usize,
    probes: usize,
    seed: u64,
) -> Result<SummabilityReport> {
    let domain = map.domain();
    let mut sorted: Vec<&InducedBranch> = branches.iter().collect();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let coverage = sorted.iter().map(|b| b.hi - b.lo).sum::<f64>() / domain.len();
    if coverage < MIN_COVERAGE {
        return Err(Error::Precondition(format!("branches cover {coverage:.4} of I₀, below {MIN_COVERAGE}")));
    }
    if orbit_len == 0 || probes == 0 {
        return Err(Error::Precondition("need at least one probe and one induced step".into()));
    }
    let find = |y: f64| {
        let i = sorted.partition_point(|b| b.hi <= y);
        sorted.get(i).filter(|b| b.lo < y && y < b.hi).copied()
    };
    let per_probe: Vec<Option<f64>> = (0..probes as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let mut y = domain.lo + domain.len() * rng.gen::<f64>();
            let mut total = 0usize;
            for _ in 0..orbit_len {
                let b = find(y)?;
                total += b.k;
                let anchor = 0.5 * (b.lo + b.hi);
                y = crate::branch::compose_on_branch(&vec![map.clone(); b.k], y, anchor);
            }
            Some(total as f64 / orbit_len as f64)
        })
        .collect();
    let probe_means: Vec<f64> = per_probe.iter().flatten().copied().collect();
    let escaped = probes - probe_means.len();
    if probe_means.is_empty() {
        return Err(Error::EscapedDomain { escaped });
    }
    let mean = probe_means.iter().sum::<f64>() / probe_means.len() as f64;
    let var = probe_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / probe_means.len() as f64;
    Ok(SummabilityReport {
        mean,
        relative_dispersion: var.sqrt() / mean,
        probe_means,
        escaped,
        probes,
        orbit_len,
    })
}
