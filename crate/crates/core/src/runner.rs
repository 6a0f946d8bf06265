//! Executes a configured experiment, writes its data files and a manifest.
//!
//! Data files never contain timing or host information, so equal
//! configurations produce byte-identical files. The manifest records wall
//! time and the SHA-256 digest of every data file it lists.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::acim::{self, Oracle, System};
use crate::branch::{check_claims, component_census, track_branch, track_branch_partial, WordQuery, DEFAULT_CAP};
use crate::config::{ConfigError, ExperimentConfig, ExperimentKind, ExperimentParams};
use crate::error::{Error, Result};
use crate::expansion::{default_delta_grid, ftle_fiber, ftle_full, measure_ay_decay, DecayQuery};
use crate::hyptimes::{
    arc_contraction, hyperbolic_like_times, pliss_times, probe_neighborhood, propagate_curve, CurveConstants,
    CurveGraph, PlissQuery,
};
use crate::maps::{fiber_sequence, MapSequence, SkewPoint, SkewProduct};
use crate::markov::{assemble_markov, build_partition, compute_n, koebe_fit, summability_stat};
use crate::rng::{sample_rng, RNG_NAME};

pub const TOOL: &str = "skewdyn";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Slack allowed on the curve slope bound.
const SLOPE_HEADROOM: f64 = 1.1;
/// Pieces narrower than this are left out of the arc-length check.
const ARC_MIN_WIDTH: f64 = 1.0 / 64.0;
const ARC_MAX_K: usize = 8;
const PROBE_SEARCH: u64 = 10_000;
const KOEBE_SAMPLES: usize = 1000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o failure on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl RunError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// How independent samples were split for parallel execution. Every merge
/// is an ordered concatenation or an integer sum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub unit: String,
    pub items: usize,
    pub batch_size: usize,
    pub batches: usize,
    pub merge: String,
}

impl BatchPlan {
    fn new(unit: &str, items: usize, batch_size: usize, merge: &str) -> Self {
        Self {
            unit: unit.into(),
            items,
            batch_size,
            batches: items.div_ceil(batch_size),
            merge: merge.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub rng: String,
    pub seed: u64,
    pub experiment: ExperimentKind,
    pub system: String,
    pub config: ExperimentConfig,
    pub wall_time_s: f64,
    pub batch_plan: BatchPlan,
    pub status: Status,
    pub error: Option<String>,
    pub outputs: Vec<OutputEntry>,
}

impl Manifest {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Succeeded => 0,
            Status::Failed => 1,
        }
    }

    pub fn digest_of(&self, path: &str) -> Option<&str> {
        self.outputs.iter().find(|o| o.path == path).map(|o| o.sha256.as_str())
    }
}

struct Artifact {
    name: &'static str,
    bytes: Vec<u8>,
}

fn csv_artifact(name: &'static str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Artifact> {
    let io = |e: csv::Error| Error::Io(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(format!("csv: {e}")))?;
    Ok(Artifact { name, bytes })
}

fn json_artifact(name: &'static str, value: &impl Serialize) -> Result<Artifact> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(format!("json: {e}")))?;
    bytes.push(b'\n');
    Ok(Artifact { name, bytes })
}

/// Full-precision float cell; non-finite values print as `nan`/`inf`.
fn num(v: f64) -> String {
    format!("{v:.17e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Runs `f` on every index in parallel, in batches of at least
/// `batch_size` consecutive indices, returning results in index order.
fn batched<T: Send>(items: usize, batch_size: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..items).into_par_iter().with_min_len(batch_size).map(f).collect()
}

/// Stream index reserved for draws that are not tied to a sample.
const AUX_STREAM: u64 = u64::MAX;

fn fiber_theta(p: &ExperimentParams, seed: u64) -> f64 {
    p.theta.unwrap_or_else(|| sample_rng(seed, AUX_STREAM).gen())
}

/// The map sequence an interval experiment runs on: the map itself, or the
/// fiber sequence over the configured (or drawn) base angle.
fn sequence_of(system: &System, p: &ExperimentParams, seed: u64) -> Result<(MapSequence, Option<f64>)> {
    match system {
        System::Interval(m) => Ok((MapSequence::constant(m.clone()), None)),
        System::Skew(s) => {
            let theta = fiber_theta(p, seed);
            Ok((fiber_sequence(s, theta)?, Some(theta)))
        }
    }
}

fn start_x(p: &ExperimentParams, system: &System, seed: u64) -> f64 {
    let d = system.domain();
    p.x.unwrap_or_else(|| d.lo + d.len() * sample_rng(seed, AUX_STREAM - 1).gen::<f64>())
}

fn skew_of(system: &System) -> Result<&SkewProduct> {
    match system {
        System::Skew(s) => Ok(s),
        System::Interval(_) => Err(Error::Precondition("this experiment needs a skew-product".into())),
    }
}

type Outcome = Result<(Vec<Artifact>, BatchPlan)>;

fn run_ftle(system: &System, p: &ExperimentParams, seed: u64) -> Outcome {
    let n = p.n.unwrap_or(1_000_000);
    let samples = p.samples.unwrap_or(if p.x.is_some() { 1 } else { 20 });
    let d = system.domain();
    let rows = batched(samples, 1, |i| {
        let mut rng = sample_rng(seed, i as u64);
        let theta = match system {
            System::Skew(_) => Some(p.theta.unwrap_or_else(|| rng.gen())),
            System::Interval(_) => None,
        };
        let x = p.x.unwrap_or_else(|| d.lo + d.len() * rng.gen::<f64>());
        let (fiber, full) = match system {
            System::Interval(m) => (ftle_fiber(&MapSequence::constant(m.clone()), x, n), None),
            System::Skew(s) => {
                let theta = theta.expect("skew samples carry an angle");
                let fiber = fiber_sequence(s, theta).and_then(|seq| ftle_fiber(&seq, x, n));
                (fiber, Some(ftle_full(s, SkewPoint::new(theta, x), n)))
            }
        };
        (i, theta, x, fiber, full)
    });
    let mut values = Vec::new();
    let mut failures = 0;
    let mut table = Vec::with_capacity(rows.len());
    for (i, theta, x, fiber, full) in rows {
        let err = fiber.as_ref().err().or(full.as_ref().and_then(|f| f.as_ref().err())).map(ToString::to_string);
        let full = full.and_then(|f| f.ok());
        if let Ok(v) = fiber {
            values.push(v);
        } else {
            failures += 1;
        }
        table.push(vec![
            i.to_string(),
            opt_num(theta),
            num(x),
            opt_num(fiber.as_ref().ok().copied()),
            opt_num(full),
            err.unwrap_or_default(),
        ]);
    }
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let summary = json!({
        "n": n,
        "samples": samples,
        "failures": failures,
        "mean": mean,
        "median": sorted.get(sorted.len() / 2),
        "min": sorted.first(),
        "max": sorted.last(),
    });
    let header = ["sample", "theta", "x", "ftle", "ftle_full", "error"];
    Ok((
        vec![csv_artifact("ftle.csv", &header, table)?, json_artifact("summary.json", &summary)?],
        BatchPlan::new("orbit", samples, 1, "ordered concatenation"),
    ))
}

fn run_branch(system: &System, p: &ExperimentParams, seed: u64) -> Outcome {
    let n = p.n.unwrap_or(20);
    let delta_tilde = p.delta_tilde.unwrap_or(0.1);
    let (seq, theta) = sequence_of(system, p, seed)?;
    let x = start_x(p, system, seed);
    let b = track_branch_partial(&seq, x, n)?;
    let hyperbolic = hyperbolic_like_times(&b, delta_tilde)?;
    let rows = b.r_history.iter().enumerate().map(|(i, r)| vec![(i + 1).to_string(), num(*r)]);
    let csv = csv_artifact("branch.csv", &["step", "r"], rows)?;
    let (lo_dd, hi_dd) = b.refined_endpoints();
    let summary = json!({
        "theta": theta,
        "requested_depth": n,
        "branch": b,
        "t_lo_dd": [lo_dd.hi, lo_dd.lo],
        "t_hi_dd": [hi_dd.hi, hi_dd.lo],
        "delta_tilde": delta_tilde,
        "hyperbolic_like_times": hyperbolic,
    });
    Ok((vec![csv, json_artifact("branch.json", &summary)?], BatchPlan::new("branch", 1, 1, "none")))
}

fn run_census(system: &System, p: &ExperimentParams, seed: u64) -> Outcome {
    let n = p.n.unwrap_or(8);
    let delta = p.delta.unwrap_or(0.1);
    let (seq, theta) = sequence_of(system, p, seed)?;
    let census = component_census(&seq, n, delta, &WordQuery::Any)?;
    let claims = check_claims(&seq, n, delta, DEFAULT_CAP)?;
    let components = census
        .components
        .iter()
        .map(|c| vec![num(c.lo), num(c.hi), c.word.clone(), c.cell.to_string()]);
    let summary = json!({
        "theta": theta,
        "depth": n,
        "delta": delta,
        "words": census.words.len(),
        "components": census.components.len(),
        "total_measure": census.total_measure(),
        "claims_hold": claims.all_hold(),
        "claims": claims,
    });
    Ok((
        vec![
            Artifact { name: "census.csv", bytes: census.to_csv()?.into_bytes() },
            csv_artifact("components.csv", &["lo", "hi", "word", "cell"], components)?,
            json_artifact("claims.json", &summary)?,
        ],
        BatchPlan::new("partition cell", 1, 1, "none"),
    ))
}

fn run_ay_decay(system: &System, p: &ExperimentParams, seed: u64) -> Outcome {
    let (seq, theta) = sequence_of(system, p, seed)?;
    let q = DecayQuery {
        n_list: p.n_list.clone().unwrap_or_else(|| vec![30, 40, 50, 60]),
        deltas: p.deltas.clone().unwrap_or_else(default_delta_grid),
        lambda: p.lambda.unwrap_or(0.3),
        samples: p.samples.unwrap_or(100_000),
        seed,
    };
    let table = measure_ay_decay(&seq, &q)?;
    let summary = json!({
        "theta": theta,
        "query": q,
        "domain_len": table.domain_len,
        "passing_deltas": table.passing_deltas(),
    });
    Ok((
        vec![
            Artifact { name: "decay.csv", bytes: table.to_csv()?.into_bytes() },
            json_artifact("summary.json", &summary)?,
        ],
        BatchPlan::new("point", q.samples, 1, "integer sum"),
    ))
}

fn run_pliss(system: &System, p: &ExperimentParams, seed: u64) -> Outcome {
    let n = p.n.unwrap_or(1000);
    let (seq, theta) = sequence_of(system, p, seed)?;
    let x0 = start_x(p, system, seed);
    let mut values = Vec::with_capacity(n);
    let mut x = x0;
    for (j, map) in seq.iter().take(n).enumerate() {
        let d = map.d1(x).abs();
        if d == 0.0 {
            return Err(Error::HitCritical { step: j });
        }
        values.push(d.ln());
        x = map.eval(x);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let c2 = p.c2.unwrap_or(mean);
    let c1 = p.c1.unwrap_or(c2 / 2.0);
    let a = values.iter().copied().fold(c2, f64::max);
    let times = pliss_times(&PlissQuery { values: values.clone(), c1, c2, a })?;
    let mut is_time = vec![false; n + 1];
    for &i in &times.indices {
        is_time[i] = true;
    }
    let rows = values
        .iter()
        .enumerate()
        .map(|(j, v)| vec![(j + 1).to_string(), num(*v), u8::from(is_time[j + 1]).to_string()]);
    let summary = json!({
        "theta": theta,
        "x": x0,
        "n": n,
        "c1": c1,
        "c2": c2,
        "a": a,
        "count": times.indices.len(),
        "density": times.density,
        "zeta": times.zeta,
        "guaranteed": times.guaranteed,
        "density_meets_guarantee": !times.guaranteed || times.density >= times.zeta,
    });
    Ok((
        vec![csv_artifact("pliss.csv", &["j", "value", "pliss_time"], rows)?, json_artifact("summary.json", &summary)?],
        BatchPlan::new("orbit", 1, 1, "none"),
    ))
}

/// Initial α-curve number `s`: a sinusoid whose slope stays below α.
pub fn initial_curve(seed: u64, s: u64, alpha: f64, lo: f64, hi: f64) -> Result<CurveGraph> {
    use std::f64::consts::PI;
    let mut rng = sample_rng(seed, s);
    let mid = (lo + hi) / 2.0;
    let half = (hi - lo) / 2.0;
    let c = mid + 0.5 * half * rng.gen_range(-1.0..1.0);
    let freq: f64 = rng.gen_range(1.0..4.0);
    let phase: f64 = rng.gen();
    let amp = alpha / (2.0 * PI * freq);
    CurveGraph::from_fn(0.0, 1.0, 513, |t| c + amp * (2.0 * PI * (freq * t + phase)).sin())
}

fn run_curve(system: &System, p: &ExperimentParams, seed: u64) -> Outcome {
    let skew = skew_of(system)?;
    let n = p.n.unwrap_or(100);
    let curves = p.curves.unwrap_or(10);
    let alpha = p.alpha.unwrap_or(0.01);
    let consts = CurveConstants::from_skew(skew, alpha)?;
    let c2 = consts.c2();
    let d = skew.fiber_domain();
    let results = batched(curves, 1, |s| -> Result<_> {
        let curve = initial_curve(seed, s as u64, alpha, d.lo, d.hi)?;
        let prop = propagate_curve(skew, &curve, n)?;
        let mut levels = Vec::new();
        let mut arcs = Vec::new();
        for level in &prop.levels {
            let bound = consts.c1(level.iterate);
            levels.push((s, level.iterate, level.pieces.len(), level.computed, level.max_slope_all, bound));
            if level.iterate == 0 {
                continue;
            }
            for (pi, piece) in level.pieces.iter().enumerate() {
                if piece.graph.domain.1 - piece.graph.domain.0 < ARC_MIN_WIDTH {
                    continue;
                }
                for k in 1..=level.iterate.min(ARC_MAX_K) {
                    if let Some(check) = arc_contraction(skew, &prop, level.iterate, pi, k, c2) {
                        arcs.push((s, level.iterate, pi, check));
                    }
                }
            }
        }
        Ok((levels, arcs))
    });
    let mut level_rows = Vec::new();
    let mut arc_rows = Vec::new();
    let (mut worst_ratio, mut arcs_hold, mut arc_count) = (0.0f64, true, 0usize);
    for r in results {
        let (levels, arcs) = r?;
        for (s, it, pieces, computed, slope, bound) in levels {
            worst_ratio = worst_ratio.max(slope / bound);
            level_rows.push(vec![
                s.to_string(),
                it.to_string(),
                pieces.to_string(),
                computed.to_string(),
                num(slope),
                num(bound),
            ]);
        }
        for (s, it, pi, c) in arcs {
            arcs_hold &= c.holds();
            arc_count += 1;
            arc_rows.push(vec![
                s.to_string(),
                it.to_string(),
                pi.to_string(),
                c.k.to_string(),
                num(c.ratio),
                num(c.bound),
                u8::from(c.holds()).to_string(),
            ]);
        }
    }
    let summary = json!({
        "curves": curves,
        "iterations": n,
        "alpha": alpha,
        "constants": consts,
        "c1_uniform": consts.c1_uniform(),
        "c2": c2,
        "max_slope_ratio": worst_ratio,
        "slope_headroom": SLOPE_HEADROOM,
        "slopes_within_bound": worst_ratio <= SLOPE_HEADROOM,
        "arc_checks": arc_count,
        "arcs_hold": arcs_hold,
    });
    Ok((
        vec![
            csv_artifact("levels.csv", &["curve", "iterate", "pieces", "computed", "max_slope", "c1"], level_rows)?,
            csv_artifact("arcs.csv", &["curve", "iterate", "piece", "k", "ratio", "bound", "holds"], arc_rows)?,
            json_artifact("summary.json", &summary)?,
        ],
        BatchPlan::new("curve", curves, 1, "ordered concatenation"),
    ))
}

fn run_probe(system: &System, p: &ExperimentParams, seed: u64) -> Outcome {
    let skew = skew_of(system)?;
    let k = p.k.unwrap_or(10);
    let delta_tilde = p.delta_tilde.unwrap_or(0.2);
    let mesh = p.mesh.unwrap_or(32);
    let d = skew.fiber_domain();
    // Without an explicit point, search for one whose r_k clears δ̃.
    let (z, search) = match (p.theta, p.x) {
        (Some(theta), Some(x)) => (SkewPoint::new(theta, x), None),
        _ => {
            let found = (0..PROBE_SEARCH).find_map(|i| {
                let mut rng = sample_rng(seed, i);
                let theta = p.theta.unwrap_or_else(|| rng.gen());
                let x = p.x.unwrap_or_else(|| d.lo + d.len() * rng.gen::<f64>());
                let seq = fiber_sequence(skew, theta).ok()?;
                let b = track_branch(&seq, x, k).ok()?;
                (b.r(k)? >= delta_tilde || k == 0).then_some((SkewPoint::new(theta, x), i))
            });
            let (z, i) = found.ok_or(Error::EmptySample)?;
            (z, Some(i))
        }
    };
    let report = probe_neighborhood(skew, z, k, delta_tilde, mesh)?;
    let out = json!({ "search_index": search, "report": report });
    Ok((vec![json_artifact("probe.json", &out)?], BatchPlan::new("probe point", 1, 1, "none")))
}

fn run_acim(system: &System, p: &ExperimentParams, seed: u64) -> Outcome {
    let samples = p.samples.unwrap_or(10_000);
    let n = p.n.unwrap_or(1000);
    let grid = p.bins.map_or_else(|| system.default_grid(), |b| system.grid(b));
    let m = acim::empirical_measure(system, samples, n, grid, seed)?;
    let mut summary = json!({ "total_weight": m.total_weight() });
    if let System::Interval(map) = system {
        if map.family() == &crate::maps::Family::Logistic {
            let l1 = acim::density_compare(&m, &Oracle::Line(&acim::logistic_density))?;
            summary["l1_vs_logistic_density"] = json!(l1);
        }
    }
    if let Some(t) = p.transfer_samples {
        summary["invariance_defect"] = json!(acim::invariance_defect(&m, system, t, seed)?);
    }
    Ok((
        vec![
            Artifact { name: "histogram.csv", bytes: m.to_csv()?.into_bytes() },
            Artifact { name: "metadata.json", bytes: (m.metadata_json()? + "\n").into_bytes() },
            json_artifact("summary.json", &summary)?,
        ],
        BatchPlan::new("orbit", samples, 1, "integer sum"),
    ))
}

fn run_components(system: &System, p: &ExperimentParams, seed: u64) -> Outcome {
    let probes = p.probes.unwrap_or(acim::MIN_PROBES);
    let n = p.n.unwrap_or(100_000);
    let grid = p.bins.map_or_else(|| system.default_grid(), |b| system.grid(b));
    let threshold = p.link_threshold.unwrap_or(acim::DEFAULT_LINK_THRESHOLD);
    let r = acim::ergodic_components(system, probes, n, grid, seed, threshold)?;
    let rows = r.assignment.iter().enumerate().map(|(i, c)| vec![i.to_string(), c.to_string()]);
    Ok((
        vec![
            csv_artifact("assignment.csv", &["probe", "cluster"], rows)?,
            json_artifact("components.json", &r)?,
        ],
        BatchPlan::new("probe", probes, 1, "ordered concatenation"),
    ))
}

fn run_markov(system: &System, p: &ExperimentParams, seed: u64) -> Outcome {
    let System::Interval(map) = system else {
        return Err(Error::Precondition("markov needs an interval map".into()));
    };
    let depth = p.depth.unwrap_or(1);
    let seeds = p.seeds.unwrap_or(10_000);
    let k_max = p.k_max.unwrap_or(40);
    let orbit_len = p.n.unwrap_or(100);
    let probes = p.probes.unwrap_or(200);
    let part = build_partition(map, depth)?;
    let n = compute_n(map, &part)?;
    let report = assemble_markov(map, &part, seeds, n, k_max, seed)?;
    let koebe = koebe_fit(map, n, KOEBE_SAMPLES, seed);
    let summability = summability_stat(&report.branches, map, orbit_len, probes, seed);
    let cells = (0..part.cell_count()).map(|i| {
        let (lo, hi) = part.cell(i);
        vec![i.to_string(), num(lo), num(hi)]
    });
    let summary = json!({
        "depth": depth,
        "n": n,
        "k_max": k_max,
        "branches": report.branches.len(),
        "m2_pass": report.m2_pass,
        "m3_pass": report.m3_pass,
        "constancy_pass": report.constancy_pass,
        "k_hat": report.k_hat,
        "coverage": report.coverage,
        "seeds_tried": report.seeds_tried,
        "not_found": report.not_found,
        "hit_critical": report.hit_critical,
        "gap_rounds": report.gap_rounds,
        "failures": report.failures,
        "koebe": koebe.as_ref().ok(),
        "koebe_error": koebe.as_ref().err().map(ToString::to_string),
        "summability": summability.as_ref().ok(),
        "summability_error": summability.as_ref().err().map(ToString::to_string),
    });
    Ok((
        vec![
            csv_artifact("partition.csv", &["cell", "lo", "hi"], cells)?,
            Artifact { name: "branches.csv", bytes: report.branches_csv()?.into_bytes() },
            json_artifact("summary.json", &summary)?,
        ],
        BatchPlan::new("seed point", seeds, 1, "ordered concatenation"),
    ))
}

fn execute(cfg: &ExperimentConfig, system: &System) -> Outcome {
    let p = &cfg.experiment;
    let seed = cfg.seed;
    match p.name {
        ExperimentKind::Ftle => run_ftle(system, p, seed),
        ExperimentKind::Branch => run_branch(system, p, seed),
        ExperimentKind::Census => run_census(system, p, seed),
        ExperimentKind::AyDecay => run_ay_decay(system, p, seed),
        ExperimentKind::Pliss => run_pliss(system, p, seed),
        ExperimentKind::Curve => run_curve(system, p, seed),
        ExperimentKind::Probe => run_probe(system, p, seed),
        ExperimentKind::Acim => run_acim(system, p, seed),
        ExperimentKind::Components => run_components(system, p, seed),
        ExperimentKind::Markov => run_markov(system, p, seed),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> std::result::Result<(), RunError> {
    fs::write(path, bytes).map_err(|e| RunError::Io { path: path.to_path_buf(), message: e.to_string() })
}

/// Runs the experiment and writes its files plus `manifest.json` into the
/// configured output directory. Experiment-level failures are recorded in
/// the returned manifest (status `failed`); only configuration and file
/// system problems surface as errors.
pub fn run_experiment(cfg: &ExperimentConfig) -> std::result::Result<Manifest, RunError> {
    cfg.validate()?;
    let start = Instant::now();
    let dir = &cfg.output;
    fs::create_dir_all(dir).map_err(|e| RunError::Io { path: dir.clone(), message: e.to_string() })?;
    let system = cfg.build_system().map_err(|e| {
        RunError::Config(ConfigError::Validation(vec![crate::config::FieldError {
            path: "system".into(),
            message: e.to_string(),
        }]))
    })?;
    let (status, error, artifacts, batch_plan) = match execute(cfg, &system) {
        Ok((artifacts, plan)) => (Status::Succeeded, None, artifacts, plan),
        Err(e) => (Status::Failed, Some(e.to_string()), Vec::new(), BatchPlan::new("none", 0, 1, "none")),
    };
    let mut outputs = Vec::with_capacity(artifacts.len());
    for a in &artifacts {
        write_file(&dir.join(a.name), &a.bytes)?;
        outputs.push(OutputEntry {
            path: a.name.to_string(),
            sha256: hex::encode(Sha256::digest(&a.bytes)),
            bytes: a.bytes.len() as u64,
        });
    }
    let manifest = Manifest {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        rng: RNG_NAME.into(),
        seed: cfg.seed,
        experiment: cfg.experiment.name,
        system: system.label(),
        config: cfg.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        batch_plan,
        status,
        error,
        outputs,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write_file(&dir.join(MANIFEST_FILE), &bytes)?;
    Ok(manifest)
}

/// Recomputes the digest of every file listed in a manifest.
pub fn verify_outputs(dir: &Path, manifest: &Manifest) -> std::result::Result<bool, RunError> {
    for o in &manifest.outputs {
        let path = dir.join(&o.path);
        let bytes = fs::read(&path).map_err(|e| RunError::Io { path, message: e.to_string() })?;
        if hex::encode(Sha256::digest(&bytes)) != o.sha256 || bytes.len() as u64 != o.bytes {
            return Ok(false);
        }
    }
    Ok(true)
}
