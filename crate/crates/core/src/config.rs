//! Declarative experiment configuration.
//!
//! A configuration is a TOML document with two top-level scalars and two
//! tables:
//!
//! ```toml
//! seed = 1                 # integer in [0, 2^63 - 1]
//! output = "out/ftle"      # directory, created if missing (default "skewdyn-out")
//!
//! [system]
//! family = "logistic"      # logistic | tent | doubling | two_well | identity | quadratic | viana
//!
//! [experiment]
//! name = "ftle"            # ftle | branch | census | ay_decay | pliss | curve | probe | acim | components | markov
//! n = 1000000
//! ```
//!
//! Tables never nest further. Every key is typed; unknown keys, keys that
//! the chosen family or experiment does not use, and out-of-range values
//! are rejected with the dotted path of the offending field.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acim::System;
use crate::maps::{Family, FiberFamily, IntervalDomain, IntervalMap, SkewProduct};

/// Upper bound on iteration counts and sample sizes.
pub const MAX_COUNT: usize = 1_000_000_000;
/// Upper bound on histogram resolution per axis.
pub const MAX_BINS: usize = 1 << 16;
/// Upper bound on census and partition depths.
pub const MAX_DEPTH: usize = 24;

fn default_output() -> PathBuf {
    PathBuf::from("skewdyn-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Stored as u64 but limited to the TOML integer range.
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub system: SystemConfig,
    pub experiment: ExperimentParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemFamily {
    Logistic,
    Tent,
    Doubling,
    TwoWell,
    Identity,
    Quadratic,
    Viana,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub family: Option<SystemFamily>,
    /// Parameter of a − x².
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Domain of the quadratic family or fiber domain of the Viana map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    /// Degree of the base circle map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    /// Coupling strength of the Viana fiber maps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Ftle,
    Branch,
    Census,
    AyDecay,
    Pliss,
    Curve,
    Probe,
    Acim,
    Components,
    Markov,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::Ftle,
        ExperimentKind::Branch,
        ExperimentKind::Census,
        ExperimentKind::AyDecay,
        ExperimentKind::Pliss,
        ExperimentKind::Curve,
        ExperimentKind::Probe,
        ExperimentKind::Acim,
        ExperimentKind::Components,
        ExperimentKind::Markov,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Ftle => "ftle",
            ExperimentKind::Branch => "branch",
            ExperimentKind::Census => "census",
            ExperimentKind::AyDecay => "ay_decay",
            ExperimentKind::Pliss => "pliss",
            ExperimentKind::Curve => "curve",
            ExperimentKind::Probe => "probe",
            ExperimentKind::Acim => "acim",
            ExperimentKind::Components => "components",
            ExperimentKind::Markov => "markov",
        }
    }

    /// Parameter keys the experiment reads.
    pub fn accepted_params(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Ftle => &["n", "samples", "x", "theta"],
            ExperimentKind::Branch => &["n", "x", "theta", "delta_tilde"],
            ExperimentKind::Census => &["n", "delta", "theta"],
            ExperimentKind::AyDecay => &["samples", "lambda", "n_list", "deltas", "theta"],
            ExperimentKind::Pliss => &["n", "x", "theta", "c1", "c2"],
            ExperimentKind::Curve => &["n", "curves", "alpha"],
            ExperimentKind::Probe => &["k", "x", "theta", "delta_tilde", "mesh"],
            ExperimentKind::Acim => &["n", "samples", "bins", "transfer_samples"],
            ExperimentKind::Components => &["n", "probes", "bins", "link_threshold"],
            ExperimentKind::Markov => &["depth", "seeds", "k_max", "probes", "n"],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Experiment selector and its parameters. Absent parameters take the
/// experiment's default at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentParams {
    pub name: ExperimentKind,
    /// Orbit length, branch depth or iteration count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    /// Starting point in the (fiber) domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    /// Base angle in [0, 1) for skew-product systems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curves: Option<usize>,
    /// Slope bound of the initial curves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Mesh points per side of the neighbourhood probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<usize>,
}

impl ExperimentParams {
    pub fn new(name: ExperimentKind) -> Self {
        Self {
            name,
            n: None,
            samples: None,
            bins: None,
            delta: None,
            lambda: None,
            delta_tilde: None,
            c1: None,
            c2: None,
            x: None,
            theta: None,
            depth: None,
            k: None,
            seeds: None,
            k_max: None,
            probes: None,
            link_threshold: None,
            transfer_samples: None,
            n_list: None,
            deltas: None,
            curves: None,
            alpha: None,
            mesh: None,
        }
    }

    /// Names of the parameters that are set.
    pub fn present(&self) -> Vec<&'static str> {
        let flags = [
            ("n", self.n.is_some()),
            ("samples", self.samples.is_some()),
            ("bins", self.bins.is_some()),
            ("delta", self.delta.is_some()),
            ("lambda", self.lambda.is_some()),
            ("delta_tilde", self.delta_tilde.is_some()),
            ("c1", self.c1.is_some()),
            ("c2", self.c2.is_some()),
            ("x", self.x.is_some()),
            ("theta", self.theta.is_some()),
            ("depth", self.depth.is_some()),
            ("k", self.k.is_some()),
            ("seeds", self.seeds.is_some()),
            ("k_max", self.k_max.is_some()),
            ("probes", self.probes.is_some()),
            ("link_threshold", self.link_threshold.is_some()),
            ("transfer_samples", self.transfer_samples.is_some()),
            ("n_list", self.n_list.is_some()),
            ("deltas", self.deltas.is_some()),
            ("curves", self.curves.is_some()),
            ("alpha", self.alpha.is_some()),
            ("mesh", self.mesh.is_some()),
        ];
        flags.into_iter().filter(|f| f.1).map(|f| f.0).collect()
    }
}

/// One rejected field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    /// Dotted path such as `experiment.delta`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid configuration: {}", list(.0))]
    Validation(Vec<FieldError>),
}

fn list(errors: &[FieldError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl ConfigError {
    pub fn field_errors(&self) -> &[FieldError] {
        match self {
            ConfigError::Validation(v) => v,
            ConfigError::Parse { .. } => &[],
        }
    }
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

/// Syntax-level parse into an untyped table.
pub fn parse_table(text: &str) -> Result<toml::Table, ConfigError> {
    text.parse().map_err(|e: toml::de::Error| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        ConfigError::Parse { line, column, message: e.message().to_string() }
    })
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table = parse_table(text)?;
    let cfg: ExperimentConfig =
        serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            let message = e.into_inner().message().to_string();
            ConfigError::Validation(vec![FieldError { path, message }])
        })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serializes a configuration back to the TOML grammar.
pub fn to_toml(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("configuration values are representable in TOML")
}

struct Checker {
    errors: Vec<FieldError>,
}

impl Checker {
    fn fail(&mut self, path: &str, message: impl Into<String>) {
        self.errors.push(FieldError { path: path.into(), message: message.into() });
    }

    fn count(&mut self, path: &str, v: Option<usize>, min: usize, max: usize) {
        if let Some(v) = v {
            if v < min || v > max {
                self.fail(path, format!("{v} is outside [{min}, {max}]"));
            }
        }
    }

    fn positive(&mut self, path: &str, v: Option<f64>) {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                self.fail(path, format!("{v} must be positive and finite"));
            }
        }
    }

    fn finite(&mut self, path: &str, v: Option<f64>) {
        if let Some(v) = v {
            if !v.is_finite() {
                self.fail(path, format!("{v} must be finite"));
            }
        }
    }
}

impl ExperimentConfig {
    pub fn new(seed: u64, output: impl Into<PathBuf>, system: SystemConfig, experiment: ExperimentParams) -> Self {
        Self { seed, output: output.into(), system, experiment }
    }

    /// Range and consistency checks; collects every violation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut c = Checker { errors: Vec::new() };
        if self.seed > i64::MAX as u64 {
            c.fail("seed", format!("{} exceeds the TOML integer range", self.seed));
        }
        if self.output.as_os_str().is_empty() {
            c.fail("output", "must name a directory");
        }
        let s = &self.system;
        let family = match s.family {
            Some(f) => Some(f),
            None => {
                c.fail("system.family", "missing");
                None
            }
        };
        if let Some(family) = family {
            let allowed: &[&str] = match family {
                SystemFamily::Quadratic => &["a", "lo", "hi"],
                SystemFamily::Viana => &["d", "a0", "alpha", "lo", "hi"],
                _ => &[],
            };
            let present = [
                ("a", s.a.is_some()),
                ("lo", s.lo.is_some()),
                ("hi", s.hi.is_some()),
                ("d", s.d.is_some()),
                ("a0", s.a0.is_some()),
                ("alpha", s.alpha.is_some()),
            ];
            for (key, set) in present {
                if set && !allowed.contains(&key) {
                    c.fail(&format!("system.{key}"), format!("not a parameter of family {family:?}"));
                }
            }
            if family == SystemFamily::Quadratic && s.a.is_none() {
                c.fail("system.a", "required for the quadratic family");
            }
            for (key, v) in [("a", s.a), ("lo", s.lo), ("hi", s.hi), ("a0", s.a0)] {
                c.finite(&format!("system.{key}"), v);
            }
            c.positive("system.alpha", s.alpha);
            if let Some(d) = s.d {
                if !(2..=64).contains(&d) {
                    c.fail("system.d", format!("{d} is outside [2, 64]"));
                }
            }
            if s.lo.is_some() != s.hi.is_some() {
                c.fail("system.lo", "lo and hi must be given together");
            }
            if c.errors.is_empty() {
                if let Err(e) = self.build_system() {
                    c.fail("system", e.to_string());
                }
            }
        }

        let e = &self.experiment;
        let kind = e.name;
        for key in e.present() {
            if !kind.accepted_params().contains(&key) {
                c.fail(&format!("experiment.{key}"), format!("not a parameter of experiment {kind}"));
            }
        }
        let skew = family == Some(SystemFamily::Viana);
        match kind {
            ExperimentKind::Curve | ExperimentKind::Probe if family.is_some() && !skew => {
                c.fail("system.family", format!("experiment {kind} needs the viana family"));
            }
            ExperimentKind::Markov if skew => {
                c.fail("system.family", "experiment markov needs an interval map");
            }
            _ => {}
        }
        if e.theta.is_some() && family.is_some() && !skew {
            c.fail("experiment.theta", "only skew-product systems have a base angle");
        }
        if let Some(t) = e.theta {
            if !(0.0..1.0).contains(&t) {
                c.fail("experiment.theta", format!("{t} is outside [0, 1)"));
            }
        }

        c.count("experiment.n", e.n, 1, MAX_COUNT);
        let min_samples = match kind {
            ExperimentKind::AyDecay | ExperimentKind::Acim => crate::expansion::MIN_SAMPLES,
            _ => 1,
        };
        c.count("experiment.samples", e.samples, min_samples, MAX_COUNT);
        c.count("experiment.bins", e.bins, 1, MAX_BINS);
        c.count("experiment.depth", e.depth, 0, MAX_DEPTH);
        c.count("experiment.k", e.k, 0, 10_000);
        c.count("experiment.seeds", e.seeds, 0, MAX_COUNT);
        c.count("experiment.k_max", e.k_max, 1, 10_000);
        let min_probes = if kind == ExperimentKind::Components { crate::acim::MIN_PROBES } else { 1 };
        c.count("experiment.probes", e.probes, min_probes, MAX_COUNT);
        c.count("experiment.transfer_samples", e.transfer_samples, 1, MAX_COUNT);
        c.count("experiment.curves", e.curves, 1, 10_000);
        c.count("experiment.mesh", e.mesh, 2, 4096);
        if kind == ExperimentKind::Census {
            c.count("experiment.n", e.n, 1, MAX_DEPTH);
        }
        for (key, v) in [
            ("delta", e.delta),
            ("delta_tilde", e.delta_tilde),
            ("link_threshold", e.link_threshold),
            ("alpha", e.alpha),
        ] {
            c.positive(&format!("experiment.{key}"), v);
        }
        if let Some(l) = e.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                c.fail("experiment.lambda", format!("{l} must be non-negative and finite"));
            }
        }
        c.finite("experiment.c1", e.c1);
        c.finite("experiment.c2", e.c2);
        if let (Some(c1), Some(c2)) = (e.c1, e.c2) {
            if !(c1 < c2) {
                c.fail("experiment.c2", format!("c2 = {c2} must exceed c1 = {c1}"));
            }
        }
        if let Some(list) = &e.n_list {
            if list.is_empty() {
                c.fail("experiment.n_list", "must not be empty");
            }
            for (i, &n) in list.iter().enumerate() {
                if n == 0 || n > MAX_COUNT {
                    c.fail(&format!("experiment.n_list[{i}]"), format!("{n} is outside [1, {MAX_COUNT}]"));
                }
            }
        }
        if let Some(list) = &e.deltas {
            if list.is_empty() {
                c.fail("experiment.deltas", "must not be empty");
            }
            for (i, &d) in list.iter().enumerate() {
                c.positive(&format!("experiment.deltas[{i}]"), Some(d));
            }
        }
        if let (Some(x), Ok(sys)) = (e.x, self.build_system()) {
            let d = sys.domain();
            if !(x > d.lo && x < d.hi) {
                c.fail("experiment.x", format!("{x} is not interior to [{}, {}]", d.lo, d.hi));
            }
        }
        if c.errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation(c.errors))
        }
    }

    /// The dynamical system named by the `[system]` table.
    pub fn build_system(&self) -> crate::Result<System> {
        let s = &self.system;
        let family = s.family.ok_or_else(|| crate::Error::Precondition("system.family is missing".into()))?;
        let domain = |default: (f64, f64)| IntervalDomain::new(s.lo.unwrap_or(default.0), s.hi.unwrap_or(default.1));
        let standard = |f: Family| IntervalMap::standard(f).map(System::Interval);
        match family {
            SystemFamily::Logistic => standard(Family::Logistic),
            SystemFamily::Tent => standard(Family::Tent),
            SystemFamily::Doubling => standard(Family::Doubling),
            SystemFamily::TwoWell => standard(Family::TwoWell),
            SystemFamily::Identity => IntervalMap::new(Family::Identity, IntervalDomain::unit()).map(System::Interval),
            SystemFamily::Quadratic => {
                let a = s.a.ok_or_else(|| crate::Error::Precondition("system.a is missing".into()))?;
                let fam = Family::Quadratic { a };
                let d = match (s.lo, s.hi) {
                    (Some(lo), Some(hi)) => IntervalDomain::new(lo, hi)?,
                    _ => IntervalDomain::quadratic_symmetric(a)?,
                };
                IntervalMap::new(fam, d).map(System::Interval)
            }
            SystemFamily::Viana => {
                let def = SkewProduct::viana_default();
                let fd = def.fiber_domain();
                if s.d.is_none() && s.a0.is_none() && s.alpha.is_none() && s.lo.is_none() {
                    return Ok(System::Skew(def));
                }
                let FiberFamily::Viana { a0, alpha } = *def.fiber() else {
                    unreachable!("the default skew-product has Viana fibers")
                };
                SkewProduct::viana(
                    s.d.unwrap_or(def.degree()),
                    s.a0.unwrap_or(a0),
                    s.alpha.unwrap_or(alpha),
                    domain((fd.lo, fd.hi))?,
                )
                .map(System::Skew)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "seed = 1\n[system]\nfamily = \"logistic\"\n[experiment]\nname = \"ftle\"\nn = 1000000\n";

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.system.family, Some(SystemFamily::Logistic));
        assert_eq!(cfg.experiment.name, ExperimentKind::Ftle);
        assert_eq!(cfg.experiment.n, Some(1_000_000));
        assert_eq!(cfg.output, PathBuf::from("skewdyn-out"));
    }

    #[test]
    fn unknown_experiment_names_the_field() {
        let err = parse_config(&MINIMAL.replace("\"ftle\"", "\"fft\"")).unwrap_err();
        assert_eq!(err.field_errors()[0].path, "experiment.name");
    }

    #[test]
    fn negative_delta_is_rejected() {
        let text = "seed = 1\n[system]\nfamily = \"logistic\"\n[experiment]\nname = \"census\"\ndelta = -0.1\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.field_errors().len(), 1);
        assert_eq!(err.field_errors()[0].path, "experiment.delta");
    }

    #[test]
    fn unknown_and_unused_keys_are_rejected() {
        let err = parse_config(&format!("{MINIMAL}colour = 3\n")).unwrap_err();
        assert_eq!(err.field_errors()[0].path, "experiment.colour");
        let err = parse_config(&format!("{MINIMAL}bins = 3\n")).unwrap_err();
        assert_eq!(err.field_errors()[0].path, "experiment.bins");
        let err = parse_config(&MINIMAL.replace("\"logistic\"", "\"logistic\"\na = 2.0")).unwrap_err();
        assert_eq!(err.field_errors()[0].path, "system.a");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_config("seed = 1\n[system\nfamily = 2\n").unwrap_err() {
            ConfigError::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column >= 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn several_violations_are_all_reported() {
        let text = "seed = 1\n[system]\nfamily = \"logistic\"\n[experiment]\nname = \"acim\"\nsamples = 10\nbins = 0\n";
        let paths: Vec<String> = parse_config(text).unwrap_err().field_errors().iter().map(|e| e.path.clone()).collect();
        assert_eq!(paths, ["experiment.samples", "experiment.bins"]);
    }

    #[test]
    fn family_mismatches_are_rejected() {
        let text = "seed = 1\n[system]\nfamily = \"logistic\"\n[experiment]\nname = \"curve\"\n";
        assert_eq!(parse_config(text).unwrap_err().field_errors()[0].path, "system.family");
        let text = "seed = 1\n[system]\nfamily = \"quadratic\"\na = 1.7\nlo = -1.0\nhi = 1.0\n[experiment]\nname = \"ftle\"\n";
        assert_eq!(parse_config(text).unwrap_err().field_errors()[0].path, "system");
    }
}
