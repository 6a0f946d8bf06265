//! Command-line front end: one subcommand per experiment plus `run`.
//!
//! Every subcommand accepts `--config`, `--seed` and `--out`; the remaining
//! flags mirror configuration keys and override values read from the file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skewdyn::config::{parse_config, parse_table, ConfigError, ExperimentConfig, ExperimentKind};
use skewdyn::runner::{run_experiment, MANIFEST_FILE};
use toml::{Table, Value};

#[derive(Parser)]
#[command(name = "skewdyn", version, about = "Experiments on non-uniformly expanding maps and skew-products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the configuration file.
    Run(Flags),
    /// Finite-time Lyapunov exponents from random starting points.
    Ftle(Flags),
    /// Monotone branch T_n(x) and its image sizes.
    Branch(Flags),
    /// Component census of the C_δ words and the counting claims.
    Census(Flags),
    /// Decay of |A_n ∩ Y_n| over a grid of δ.
    AyDecay(Flags),
    /// Pliss times of the log-derivative sequence along an orbit.
    Pliss(Flags),
    /// Slope and arc-length bounds along iterated α-curves.
    Curve(Flags),
    /// Injectivity, distortion and coverage of a hyperbolic-like neighbourhood.
    Probe(Flags),
    /// Averaged push-forward histogram.
    Acim(Flags),
    /// Ergodic components by clustering orbit histograms.
    Components(Flags),
    /// Markov partition, induced branches and their certification.
    Markov(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// Configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// System family.
    #[arg(long, help_heading = "System")]
    family: Option<String>,
    #[arg(long = "a", help_heading = "System")]
    sys_a: Option<f64>,
    #[arg(long, allow_hyphen_values = true, help_heading = "System")]
    lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true, help_heading = "System")]
    hi: Option<f64>,
    #[arg(long, help_heading = "System")]
    d: Option<u32>,
    #[arg(long, help_heading = "System")]
    a0: Option<f64>,
    /// Coupling strength of the Viana fibers.
    #[arg(long = "coupling", help_heading = "System")]
    coupling: Option<f64>,

    #[arg(long, help_heading = "Experiment")]
    n: Option<i64>,
    #[arg(long, help_heading = "Experiment")]
    samples: Option<i64>,
    #[arg(long, help_heading = "Experiment")]
    bins: Option<i64>,
    #[arg(long, allow_hyphen_values = true, help_heading = "Experiment")]
    delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true, help_heading = "Experiment")]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true, help_heading = "Experiment")]
    delta_tilde: Option<f64>,
    #[arg(long, allow_hyphen_values = true, help_heading = "Experiment")]
    c1: Option<f64>,
    #[arg(long, allow_hyphen_values = true, help_heading = "Experiment")]
    c2: Option<f64>,
    #[arg(long, allow_hyphen_values = true, help_heading = "Experiment")]
    x: Option<f64>,
    #[arg(long, allow_hyphen_values = true, help_heading = "Experiment")]
    theta: Option<f64>,
    #[arg(long, help_heading = "Experiment")]
    depth: Option<i64>,
    #[arg(long, help_heading = "Experiment")]
    k: Option<i64>,
    #[arg(long, help_heading = "Experiment")]
    seeds: Option<i64>,
    #[arg(long, help_heading = "Experiment")]
    k_max: Option<i64>,
    #[arg(long, help_heading = "Experiment")]
    probes: Option<i64>,
    #[arg(long, help_heading = "Experiment")]
    link_threshold: Option<f64>,
    #[arg(long, help_heading = "Experiment")]
    transfer_samples: Option<i64>,
    /// Comma-separated list of orbit lengths.
    #[arg(long, value_delimiter = ',', help_heading = "Experiment")]
    n_list: Option<Vec<i64>>,
    /// Comma-separated list of δ values.
    #[arg(long, value_delimiter = ',', help_heading = "Experiment")]
    deltas: Option<Vec<f64>>,
    #[arg(long, help_heading = "Experiment")]
    curves: Option<i64>,
    /// Slope bound of the initial curves.
    #[arg(long, help_heading = "Experiment")]
    alpha: Option<f64>,
    #[arg(long, help_heading = "Experiment")]
    mesh: Option<i64>,
}

enum Failure {
    Config(String),
    Run(String),
}

fn set(table: &mut Table, key: &str, v: Option<impl Into<Value>>) {
    if let Some(v) = v {
        table.insert(key.into(), v.into());
    }
}

fn section<'a>(root: &'a mut Table, name: &str) -> Result<&'a mut Table, Failure> {
    root.entry(name)
        .or_insert_with(|| Value::Table(Table::new()))
        .as_table_mut()
        .ok_or_else(|| Failure::Config(format!("{name}: expected a table")))
}

/// Merges file contents and flags into one validated configuration.
fn resolve(flags: Flags, kind: Option<ExperimentKind>) -> Result<ExperimentConfig, Failure> {
    let config_err = |e: ConfigError| Failure::Config(e.to_string());
    let mut root = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_table(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => Table::new(),
    };
    if let Some(seed) = flags.seed {
        let seed = i64::try_from(seed).map_err(|_| Failure::Config(format!("seed: {seed} exceeds 2^63 - 1")))?;
        root.insert("seed".into(), Value::Integer(seed));
    }
    if let Some(out) = &flags.out {
        root.insert("output".into(), Value::String(out.display().to_string()));
    }

    let system = section(&mut root, "system")?;
    set(system, "family", flags.family);
    set(system, "a", flags.sys_a);
    set(system, "lo", flags.lo);
    set(system, "hi", flags.hi);
    set(system, "d", flags.d.map(i64::from));
    set(system, "a0", flags.a0);
    set(system, "alpha", flags.coupling);

    let exp = section(&mut root, "experiment")?;
    if let Some(kind) = kind {
        exp.insert("name".into(), Value::String(kind.as_str().into()));
    }
    set(exp, "n", flags.n);
    set(exp, "samples", flags.samples);
    set(exp, "bins", flags.bins);
    set(exp, "delta", flags.delta);
    set(exp, "lambda", flags.lambda);
    set(exp, "delta_tilde", flags.delta_tilde);
    set(exp, "c1", flags.c1);
    set(exp, "c2", flags.c2);
    set(exp, "x", flags.x);
    set(exp, "theta", flags.theta);
    set(exp, "depth", flags.depth);
    set(exp, "k", flags.k);
    set(exp, "seeds", flags.seeds);
    set(exp, "k_max", flags.k_max);
    set(exp, "probes", flags.probes);
    set(exp, "link_threshold", flags.link_threshold);
    set(exp, "transfer_samples", flags.transfer_samples);
    set(exp, "n_list", flags.n_list);
    set(exp, "deltas", flags.deltas);
    set(exp, "curves", flags.curves);
    set(exp, "alpha", flags.alpha);
    set(exp, "mesh", flags.mesh);

    parse_config(&root.to_string()).map_err(config_err)
}

fn execute(command: Command) -> Result<(), Failure> {
    let (flags, kind) = match command {
        Command::Run(f) => (f, None),
        Command::Ftle(f) => (f, Some(ExperimentKind::Ftle)),
        Command::Branch(f) => (f, Some(ExperimentKind::Branch)),
        Command::Census(f) => (f, Some(ExperimentKind::Census)),
        Command::AyDecay(f) => (f, Some(ExperimentKind::AyDecay)),
        Command::Pliss(f) => (f, Some(ExperimentKind::Pliss)),
        Command::Curve(f) => (f, Some(ExperimentKind::Curve)),
        Command::Probe(f) => (f, Some(ExperimentKind::Probe)),
        Command::Acim(f) => (f, Some(ExperimentKind::Acim)),
        Command::Components(f) => (f, Some(ExperimentKind::Components)),
        Command::Markov(f) => (f, Some(ExperimentKind::Markov)),
    };
    if kind.is_none() && flags.config.is_none() {
        return Err(Failure::Config("`run` needs --config".into()));
    }
    let cfg = resolve(flags, kind)?;
    let manifest = run_experiment(&cfg).map_err(|e| match e.exit_code() {
        2 => Failure::Config(e.to_string()),
        _ => Failure::Run(e.to_string()),
    })?;
    let manifest_path = cfg.output.join(MANIFEST_FILE);
    if let Some(err) = &manifest.error {
        return Err(Failure::Run(format!("{} failed: {err} (see {})", manifest.experiment, manifest_path.display())));
    }
    println!("{} finished in {:.3} s", manifest.experiment, manifest.wall_time_s);
    for o in &manifest.outputs {
        println!("  {}  {}", &o.sha256[..16], cfg.output.join(&o.path).display());
    }
    println!("  manifest  {}", manifest_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
