//! Averaged push-forward measures μ_n = (1/n) Σ_{i<n} φⁱ_* Leb, estimated
//! by Monte-Carlo over initial points, together with invariance and
//! density diagnostics and an empirical count of ergodic components.
//!
//! Histograms are accumulated as integer counts, so parallel merges are
//! exact and the weights are bit-identical for a fixed seed.

use petgraph::unionfind::UnionFind;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branch::BranchState;
use crate::error::{Error, Result};
use crate::expansion::MIN_SAMPLES;
use crate::hyptimes::{pliss_times, PlissQuery};
use crate::maps::{IntervalDomain, IntervalMap, MapSequence, SkewPoint, SkewProduct};
use crate::rng::{sample_rng, RNG_NAME};

pub const DEFAULT_BINS: usize = 256;
pub const DEFAULT_PLANE_BINS: usize = 128;
pub const DEFAULT_LINK_THRESHOLD: f64 = 0.3;
/// Thresholds at which the component count is always reported.
pub const SENSITIVITY_THRESHOLDS: [f64; 4] = [0.1, 0.2, 0.3, 0.5];
/// Smallest number of probes accepted by [`ergodic_components`].
pub const MIN_PROBES: usize = 100;

/// The dynamics a measure is built for.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Interval(IntervalMap),
    Skew(SkewProduct),
}

impl System {
    pub fn label(&self) -> String {
        match self {
            System::Interval(m) => m.label(),
            System::Skew(s) => format!("skew(d={})", s.degree()),
        }
    }

    pub fn domain(&self) -> IntervalDomain {
        match self {
            System::Interval(m) => m.domain(),
            System::Skew(s) => s.fiber_domain(),
        }
    }

    /// The grid of the given resolution matching this system's phase space.
    pub fn grid(&self, bins: usize) -> Grid {
        let d = self.domain();
        match self {
            System::Interval(_) => Grid::Line { lo: d.lo, hi: d.hi, bins },
            System::Skew(_) => Grid::Plane { lo: d.lo, hi: d.hi, theta_bins: bins, x_bins: bins },
        }
    }

    pub fn default_grid(&self) -> Grid {
        match self {
            System::Interval(_) => self.grid(DEFAULT_BINS),
            System::Skew(_) => self.grid(DEFAULT_PLANE_BINS),
        }
    }

    /// For interval maps θ is carried along untouched.
    #[inline]
    fn step(&self, z: SkewPoint) -> SkewPoint {
        match self {
            System::Interval(m) => SkewPoint::new(z.theta, m.eval(z.x)),
            System::Skew(s) => s.step(z),
        }
    }

    fn uniform_point(&self, rng: &mut impl Rng) -> SkewPoint {
        let d = self.domain();
        let x = d.lo + d.len() * rng.gen::<f64>();
        match self {
            System::Interval(_) => SkewPoint::new(0.0, x),
            System::Skew(_) => SkewPoint::new(rng.gen(), x),
        }
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        grid.validate()?;
        match (self, grid) {
            (System::Interval(_), Grid::Line { .. }) | (System::Skew(_), Grid::Plane { .. }) => Ok(()),
            _ => Err(Error::Precondition(format!("grid {grid:?} does not match the phase space of {}", self.label()))),
        }
    }
}

/// Rectangular bin layout: equal bins over [lo, hi], times equal angle
/// bins over [0, 1) for the plane. Plane bins are stored row-major with the
/// angle as the row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Grid {
    Line { lo: f64, hi: f64, bins: usize },
    Plane { lo: f64, hi: f64, theta_bins: usize, x_bins: usize },
}

/// floor(t·bins) for t = (v − lo)/len, clamped to the last bin. Scaling t
/// by a power of two is exact, so a bin at resolution 2b always lies inside
/// the bin at resolution b with the same integer quotient.
#[inline]
fn bin_of(v: f64, lo: f64, len: f64, bins: usize) -> usize {
    let t = (v - lo) / len;
    if t <= 0.0 {
        0
    } else {
        ((t * bins as f64) as usize).min(bins - 1)
    }
}

impl Grid {
    pub fn len(&self) -> usize {
        match *self {
            Grid::Line { bins, .. } => bins,
            Grid::Plane { theta_bins, x_bins, .. } => theta_bins * x_bins,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (rows, columns); a line is a single row.
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            Grid::Line { bins, .. } => (1, bins),
            Grid::Plane { theta_bins, x_bins, .. } => (theta_bins, x_bins),
        }
    }

    fn x_range(&self) -> (f64, f64) {
        match *self {
            Grid::Line { lo, hi, .. } | Grid::Plane { lo, hi, .. } => (lo, hi),
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.x_range();
        IntervalDomain::new(lo, hi)?;
        if self.is_empty() {
            return Err(Error::Precondition("a grid needs at least one bin".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn index(&self, z: SkewPoint) -> usize {
        match *self {
            Grid::Line { lo, hi, bins } => bin_of(z.x, lo, hi - lo, bins),
            Grid::Plane { lo, hi, theta_bins, x_bins } => {
                bin_of(z.theta, 0.0, 1.0, theta_bins) * x_bins + bin_of(z.x, lo, hi - lo, x_bins)
            }
        }
    }

    /// Edges (θ_lo, θ_hi, x_lo, x_hi) of bin `b`; a line reports [0, 1] in θ.
    pub fn bin_rect(&self, b: usize) -> (f64, f64, f64, f64) {
        let edge = |lo: f64, hi: f64, n: usize, j: usize| {
            let at = |j: usize| if j == n { hi } else { lo + (hi - lo) * j as f64 / n as f64 };
            (at(j), at(j + 1))
        };
        match *self {
            Grid::Line { lo, hi, bins } => {
                let (a, b) = edge(lo, hi, bins, b);
                (0.0, 1.0, a, b)
            }
            Grid::Plane { lo, hi, theta_bins, x_bins } => {
                let (t0, t1) = edge(0.0, 1.0, theta_bins, b / x_bins);
                let (a, c) = edge(lo, hi, x_bins, b % x_bins);
                (t0, t1, a, c)
            }
        }
    }

    /// The same layout with `factor` times fewer bins along every axis.
    pub fn coarsened(&self, factor: usize) -> Result<Grid> {
        let ok = |n: usize| factor >= 1 && n.is_multiple_of(factor);
        match *self {
            Grid::Line { lo, hi, bins } if ok(bins) => Ok(Grid::Line { lo, hi, bins: bins / factor }),
            Grid::Plane { lo, hi, theta_bins, x_bins } if ok(theta_bins) && ok(x_bins) => {
                Ok(Grid::Plane { lo, hi, theta_bins: theta_bins / factor, x_bins: x_bins / factor })
            }
            _ => Err(Error::Precondition(format!("factor {factor} does not divide the grid {self:?}"))),
        }
    }

    fn coarse_index(&self, b: usize, factor: usize) -> usize {
        match *self {
            Grid::Line { .. } => b / factor,
            Grid::Plane { x_bins, .. } => (b / x_bins / factor) * (x_bins / factor) + (b % x_bins) / factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureMeta {
    pub samples: usize,
    pub iterations: usize,
    pub seed: u64,
    pub map_id: String,
    pub rng: String,
}

/// A normalized histogram. `counts` holds the raw deposits, so sums and
/// differences of measures built from the same orbits are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub grid: Grid,
    pub counts: Vec<u64>,
    pub weights: Vec<f64>,
    pub meta: MeasureMeta,
}

impl EmpiricalMeasure {
    fn from_counts(grid: Grid, counts: Vec<u64>, meta: MeasureMeta) -> Self {
        let total: u64 = counts.iter().sum();
        let weights = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self { grid, counts, weights, meta }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Exact merge of bins by `factor` along every axis.
    pub fn coarsen(&self, factor: usize) -> Result<EmpiricalMeasure> {
        let grid = self.grid.coarsened(factor)?;
        let mut counts = vec![0u64; grid.len()];
        for (b, &c) in self.counts.iter().enumerate() {
            counts[self.grid.coarse_index(b, factor)] += c;
        }
        Ok(Self::from_counts(grid, counts, self.meta.clone()))
    }

    /// CSV with columns bin_lo, bin_hi, weight; plane measures prepend
    /// theta_lo, theta_hi and list bins row-major.
    pub fn to_csv(&self) -> Result<String> {
        let io = |e: csv::Error| Error::Io(format!("csv: {e}"));
        let plane = matches!(self.grid, Grid::Plane { .. });
        let mut w = csv::Writer::from_writer(Vec::new());
        if plane {
            w.write_record(["theta_lo", "theta_hi", "bin_lo", "bin_hi", "weight"]).map_err(io)?;
        } else {
            w.write_record(["bin_lo", "bin_hi", "weight"]).map_err(io)?;
        }
        for (b, wt) in self.weights.iter().enumerate() {
            let (t0, t1, a, c) = self.grid.bin_rect(b);
            let mut rec = Vec::with_capacity(5);
            if plane {
                rec.push(format!("{t0:.17e}"));
                rec.push(format!("{t1:.17e}"));
            }
            rec.push(format!("{a:.17e}"));
            rec.push(format!("{c:.17e}"));
            rec.push(format!("{wt:.17e}"));
            w.write_record(&rec).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Sidecar describing the layout and provenance of [`Self::to_csv`].
    pub fn metadata_json(&self) -> Result<String> {
        let (rows, cols) = self.grid.shape();
        let value = serde_json::json!({
            "grid": self.grid,
            "shape": [rows, cols],
            "order": "row_major",
            "meta": self.meta,
            "total_weight": self.total_weight(),
        });
        serde_json::to_string_pretty(&value).map_err(|e| Error::Io(format!("json: {e}")))
    }
}

fn check_sampling(samples: usize, n: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!("{samples} samples; at least {MIN_SAMPLES} required")));
    }
    if n == 0 {
        return Err(Error::Precondition("at least one iteration is required".into()));
    }
    Ok(())
}

fn add_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Deposits orbit points z_j, j ∈ `range`, of every sample into `grids`
/// (several resolutions at once, all from the same orbits).
fn orbit_counts(
    system: &System,
    samples: usize,
    range: std::ops::Range<usize>,
    grids: &[Grid],
    seed: u64,
) -> Vec<Vec<u64>> {
    let zeros = || grids.iter().map(|g| vec![0u64; g.len()]).collect::<Vec<_>>();
    (0..samples as u64)
        .into_par_iter()
        .fold(zeros, |mut acc, i| {
            let mut rng = sample_rng(seed, i);
            let mut z = system.uniform_point(&mut rng);
            for j in 0..range.end {
                if j >= range.start {
                    for (g, c) in grids.iter().zip(acc.iter_mut()) {
                        c[g.index(z)] += 1;
                    }
                }
                z = system.step(z);
            }
            acc
        })
        .reduce(zeros, |a, b| a.into_iter().zip(b).map(|(x, y)| add_counts(x, y)).collect())
}

/// μ_n from `samples` uniform initial points, each contributing its orbit
/// points z_0, …, z_{n−1}. Orbits through critical points continue.
pub fn empirical_measure(system: &System, samples: usize, n: usize, grid: Grid, seed: u64) -> Result<EmpiricalMeasure> {
    check_sampling(samples, n)?;
    system.check_grid(&grid)?;
    let counts = orbit_counts(system, samples, 0..n, &[grid], seed).pop().expect("one grid");
    let meta = MeasureMeta { samples, iterations: n, seed, map_id: system.label(), rng: RNG_NAME.into() };
    Ok(EmpiricalMeasure::from_counts(grid, counts, meta))
}

/// Builds μ_n on several grids from one set of orbits.
pub fn empirical_measures(
    system: &System,
    samples: usize,
    n: usize,
    grids: &[Grid],
    seed: u64,
) -> Result<Vec<EmpiricalMeasure>> {
    check_sampling(samples, n)?;
    for g in grids {
        system.check_grid(g)?;
    }
    let meta = MeasureMeta { samples, iterations: n, seed, map_id: system.label(), rng: RNG_NAME.into() };
    let counts = orbit_counts(system, samples, 0..n, grids, seed);
    Ok(grids.iter().zip(counts).map(|(g, c)| EmpiricalMeasure::from_counts(*g, c, meta.clone())).collect())
}

/// L¹ distance between φ_*m and m. Bin b is represented by
/// max(1, round(w_b·T)) uniform points of the bin, each carrying an equal
/// share of w_b; bin b draws from stream b of `seed`.
pub fn invariance_defect(m: &EmpiricalMeasure, system: &System, transfer_samples: usize, seed: u64) -> Result<f64> {
    system.check_grid(&m.grid)?;
    if (m.total_weight() - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition("the measure is not normalized".into()));
    }
    let grid = m.grid;
    // Per bin: sorted (target bin, hits) and the number of points drawn.
    let moved: Vec<(Vec<(usize, u64)>, u64)> = m
        .weights
        .par_iter()
        .enumerate()
        .map(|(b, &w)| {
            if w == 0.0 {
                return (Vec::new(), 0);
            }
            let count = ((w * transfer_samples as f64).round() as u64).max(1);
            let (t0, t1, a, c) = grid.bin_rect(b);
            let mut rng = sample_rng(seed, b as u64);
            let mut hits: Vec<usize> = (0..count)
                .map(|_| {
                    let theta = t0 + (t1 - t0) * rng.gen::<f64>();
                    let x = a + (c - a) * rng.gen::<f64>();
                    grid.index(system.step(SkewPoint::new(theta, x)))
                })
                .collect();
            hits.sort_unstable();
            let mut runs: Vec<(usize, u64)> = Vec::new();
            for h in hits {
                match runs.last_mut() {
                    Some((t, k)) if *t == h => *k += 1,
                    _ => runs.push((h, 1)),
                }
            }
            (runs, count)
        })
        .collect();
    let mut pushed = vec![0.0; grid.len()];
    for ((runs, count), &w) in moved.iter().zip(&m.weights) {
        for &(t, k) in runs {
            pushed[t] += w * k as f64 / *count as f64;
        }
    }
    Ok(pushed.iter().zip(&m.weights).map(|(p, w)| (p - w).abs()).sum())
}

/// Exact comparison of μ_n with φ_*μ_n on the same orbit points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelescopingReport {
    pub n: usize,
    /// max_b |(μ_n − φ_*μ_n)_b − ((P_0 − P_n)/n)_b|.
    pub identity_error: f64,
    /// Σ_b |μ_n − φ_*μ_n|.
    pub defect: f64,
    /// 2/n.
    pub bound: f64,
}

/// Builds μ_n (points z_0..z_{n−1}), φ_*μ_n (points z_1..z_n), and the
/// first and last empirical distributions P_0, P_n, all from one set of
/// orbits, and compares the difference with (P_0 − P_n)/n.
pub fn telescoping_check(system: &System, samples: usize, n: usize, grid: Grid, seed: u64) -> Result<TelescopingReport> {
    check_sampling(samples, n)?;
    system.check_grid(&grid)?;
    let mu = orbit_counts(system, samples, 0..n, &[grid], seed).pop().expect("one grid");
    let pushed = orbit_counts(system, samples, 1..n + 1, &[grid], seed).pop().expect("one grid");
    let first = orbit_counts(system, samples, 0..1, &[grid], seed).pop().expect("one grid");
    let last = orbit_counts(system, samples, n..n + 1, &[grid], seed).pop().expect("one grid");
    let total = (samples * n) as f64;
    let mut identity_error = 0.0f64;
    let mut defect = 0.0;
    for b in 0..grid.len() {
        let diff = mu[b] as f64 / total - pushed[b] as f64 / total;
        let tele = (first[b] as f64 - last[b] as f64) / samples as f64 / n as f64;
        identity_error = identity_error.max((diff - tele).abs());
        defect += diff.abs();
    }
    Ok(TelescopingReport { n, identity_error, defect, bound: 2.0 / n as f64 })
}

/// A reference density on the phase space.
pub enum Oracle<'a> {
    Line(&'a (dyn Fn(f64) -> f64 + Sync)),
    /// Density in (θ, x).
    Plane(&'a (dyn Fn(f64, f64) -> f64 + Sync)),
}

const QUADRATURE_TOL: f64 = 1e-12;

/// Oracle mass of every bin of `grid`, by double-exponential quadrature,
/// which tolerates integrable endpoint singularities.
pub fn oracle_masses(grid: &Grid, oracle: &Oracle) -> Result<Vec<f64>> {
    grid.validate()?;
    let masses = (0..grid.len())
        .into_par_iter()
        .map(|b| {
            let (t0, t1, a, c) = grid.bin_rect(b);
            match (grid, oracle) {
                (Grid::Line { .. }, Oracle::Line(f)) => {
                    Ok(quadrature::double_exponential::integrate(f, a, c, QUADRATURE_TOL).integral)
                }
                (Grid::Plane { .. }, Oracle::Plane(f)) => Ok(quadrature::double_exponential::integrate(
                    |t| quadrature::double_exponential::integrate(|x| f(t, x), a, c, QUADRATURE_TOL).integral,
                    t0,
                    t1,
                    QUADRATURE_TOL,
                )
                .integral),
                _ => Err(Error::Precondition("oracle dimension does not match the grid".into())),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(masses)
}

/// L¹ distance between the weights of `m` and the oracle's bin masses.
pub fn density_compare(m: &EmpiricalMeasure, oracle: &Oracle) -> Result<f64> {
    let masses = oracle_masses(&m.grid, oracle)?;
    Ok(masses.iter().zip(&m.weights).map(|(o, w)| (o - w).abs()).sum())
}

/// The invariant density 1/(π√(x(1−x))) of 4x(1−x).
pub fn logistic_density(x: f64) -> f64 {
    1.0 / (std::f64::consts::PI * (x * (1.0 - x)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub count: usize,
    /// Cluster label of every probe, numbered by first appearance.
    pub assignment: Vec<usize>,
    pub link_threshold: f64,
    /// (threshold, count) for the standard sensitivity thresholds.
    pub sensitivity: Vec<(f64, usize)>,
    pub burn_in: usize,
    pub probes: usize,
    pub n: usize,
    pub seed: u64,
}

/// Single-linkage clusters of probes: pairs whose histograms are closer
/// than `threshold` in L¹ are joined.
fn clusters(distances: &[Vec<f64>], threshold: f64) -> (usize, Vec<usize>) {
    let p = distances.len();
    let mut uf = UnionFind::<usize>::new(p);
    for (i, row) in distances.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            if d < threshold {
                uf.union(i, i + 1 + j);
            }
        }
    }
    let mut labels: Vec<Option<usize>> = vec![None; p];
    let mut next = 0;
    let assignment = (0..p)
        .map(|i| {
            let root = uf.find(i);
            *labels[root].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    (next, assignment)
}

/// Clusters `probes` single-orbit histograms (n steps, the first n/10
/// discarded) by single linkage in L¹.
pub fn ergodic_components(
    system: &System,
    probes: usize,
    n: usize,
    grid: Grid,
    seed: u64,
    link_threshold: f64,
) -> Result<ComponentReport> {
    if probes < MIN_PROBES {
        return Err(Error::Precondition(format!("{probes} probes; at least {MIN_PROBES} required")));
    }
    if !(link_threshold > 0.0) {
        return Err(Error::Precondition(format!("link threshold {link_threshold} must be positive")));
    }
    system.check_grid(&grid)?;
    let burn_in = n / 10;
    if n <= burn_in {
        return Err(Error::Precondition("no orbit points remain after the burn-in".into()));
    }
    let kept = (n - burn_in) as f64;
    let histograms: Vec<Vec<f64>> = (0..probes as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let mut z = system.uniform_point(&mut rng);
            let mut counts = vec![0u64; grid.len()];
            for j in 0..n {
                if j >= burn_in {
                    counts[grid.index(z)] += 1;
                }
                z = system.step(z);
            }
            counts.into_iter().map(|c| c as f64 / kept).collect()
        })
        .collect();
    // Upper triangle: distances[i][j] is the distance of probe i to i+1+j.
    let distances: Vec<Vec<f64>> = (0..probes)
        .into_par_iter()
        .map(|i| {
            histograms[i + 1..]
                .iter()
                .map(|h| h.iter().zip(&histograms[i]).map(|(a, b)| (a - b).abs()).sum())
                .collect()
        })
        .collect();
    let (count, assignment) = clusters(&distances, link_threshold);
    let sensitivity = SENSITIVITY_THRESHOLDS.iter().map(|&t| (t, clusters(&distances, t).0)).collect();
    Ok(ComponentReport { count, assignment, link_threshold, sensitivity, burn_in, probes, n, seed })
}

/// Mass of orbit points sitting at δ̃-hyperbolic-like times, compared with
/// the Pliss lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuLikeReport {
    /// (1/(samples·n)) · #{(sample, i ≤ n) : r_i ≥ δ̃}.
    pub mass: f64,
    /// Fraction of anchors with Σ_{i≤n} r_i ≥ 2δ̃n.
    pub fraction: f64,
    /// Pliss density (c₂−c₁)/(A−c₁) with c₁ = δ̃, c₂ = 2δ̃, A = |I₀|/2.
    pub zeta: f64,
    pub bound: f64,
    pub holds: bool,
    /// Anchors with Σ r_i ≥ 2δ̃n whose hyperbolic-like count fell below ζn.
    pub pliss_violations: usize,
}

/// Runs one monotone-branch orbit per uniform anchor and deposits the
/// orbit points at hyperbolic-like times. A Pliss time of the sequence r_i
/// with c₁ = δ̃ has r_i ≥ δ̃, so every anchor with Σr_i ≥ 2δ̃n carries at
/// least ζn such points.
pub fn nu_like_mass(seq: &MapSequence, samples: usize, n: usize, delta_tilde: f64, seed: u64) -> Result<NuLikeReport> {
    check_sampling(samples, n)?;
    let domain = seq.domain();
    let a = domain.len() / 2.0;
    if !(delta_tilde > 0.0 && 2.0 * delta_tilde <= a) {
        return Err(Error::Precondition(format!("δ̃ = {delta_tilde} must lie in (0, |I₀|/4]")));
    }
    let maps = seq.maps(n);
    let per_anchor: Vec<(usize, bool, bool)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let x = domain.lo + domain.len() * rng.gen::<f64>();
            let mut state = BranchState::new(domain, x);
            let mut r = Vec::with_capacity(n);
            for map in &maps {
                match state.advance(map) {
                    Ok(info) => r.push(info.r.min(a)),
                    Err(_) => break,
                }
            }
            r.resize(n, 0.0);
            let times = r.iter().filter(|&&v| v >= delta_tilde).count();
            let q = PlissQuery { values: r, c1: delta_tilde, c2: 2.0 * delta_tilde, a };
            let pliss = pliss_times(&q).expect("constants validated above");
            let violated = pliss.guaranteed && (times as f64) < pliss.zeta * n as f64;
            (times, pliss.guaranteed, violated)
        })
        .collect();
    let total_times: usize = per_anchor.iter().map(|t| t.0).sum();
    let anchors = per_anchor.iter().filter(|t| t.1).count();
    let pliss_violations = per_anchor.iter().filter(|t| t.2).count();
    let mass = total_times as f64 / (samples * n) as f64;
    let fraction = anchors as f64 / samples as f64;
    let zeta = delta_tilde / (a - delta_tilde);
    let bound = zeta * fraction;
    Ok(NuLikeReport { mass, fraction, zeta, bound, holds: mass >= bound, pliss_violations })
}
