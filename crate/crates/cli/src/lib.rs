//! Batch runner for simulations, moment checks, estimate campaigns and
//! resonance counts, behind the `wndnls` binary.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid config (nothing written),
//! 3 numerical guard (aliasing, overflow, caps).

pub mod commands;
pub mod configs;

use std::ffi::OsString;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use commands::{Command, OutputFile};

#[derive(Parser)]
#[command(
    name = "wndnls",
    version,
    about = "Stochastic-dispersion NLS experiments on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Replace the config's master seed.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Validate and print the plan without running.
    #[arg(long)]
    dry_run: bool,
    /// Do not list written files.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve the NLS along an ensemble of paths and spill trajectories.
    Simulate(RunArgs),
    /// Monte Carlo fourth moments of the linear flow against closed forms.
    Moments(RunArgs),
    /// L4 Strichartz ratio sweeps (homog_l4, inhomog_l4).
    Strichartz(RunArgs),
    /// L6 ratio sweep and resonant lower-bound table.
    L6(RunArgs),
    /// L4 against X^{0,b}_4 embedding ratios.
    Xsb(RunArgs),
    /// Lattice-point and resonance counts.
    Resonance(RunArgs),
    /// Growth of the quintic witness amplitude.
    QuinticWitness(RunArgs),
    /// Print schema and range violations without running.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-run a recorded manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Serialize, Deserialize)]
struct ManifestOutput {
    file: String,
    sha256: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    subcommand: String,
    generator: String,
    config_digest: String,
    config_text: String,
    master_seed: Option<u64>,
    seed_override: Option<u64>,
    workers: usize,
    timestamp_unix: u64,
    wall_time_seconds: f64,
    outputs: Vec<ManifestOutput>,
}

enum Failure {
    Invalid(String),
    Guard(String),
}

impl From<wnd_core::Error> for Failure {
    fn from(e: wnd_core::Error) -> Self {
        if e.is_numerical_guard() {
            Failure::Guard(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn load(cmd: Command, text: &str, seed_override: Option<u64>) -> Result<configs::Config, Failure> {
    let mut cfg = configs::parse(cmd.kind(), text).map_err(Failure::Invalid)?;
    cmd.accepts(&cfg).map_err(Failure::Invalid)?;
    if let Some(s) = seed_override {
        cfg.override_seed(s);
    }
    let diags = cfg.diagnostics();
    if !diags.is_empty() {
        return Err(Failure::Invalid(diags.join("\n")));
    }
    Ok(cfg)
}

struct RunOptions {
    workers: usize,
    seed_override: Option<u64>,
    dry_run: bool,
    quiet: bool,
}

fn run(cmd: Command, text: String, out: &Path, opts: RunOptions) -> Result<(), Failure> {
    let RunOptions {
        workers,
        seed_override,
        dry_run,
        quiet,
    } = opts;
    let cfg = load(cmd, &text, seed_override)?;
    if dry_run {
        println!("{}: config ok", cmd.name());
        if let Some(s) = cfg.master_seed() {
            println!("master_seed = {s}");
        }
        for f in cmd.outputs() {
            println!("would write {}", out.join(f).display());
        }
        return Ok(());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Invalid(e.to_string()))?;
    let start = Instant::now();
    let files: Vec<OutputFile> = pool.install(|| commands::execute(cmd, &cfg))?;
    let wall = start.elapsed().as_secs_f64();

    let io = |e: std::io::Error| Failure::Invalid(format!("cannot write to {}: {e}", out.display()));
    fs::create_dir_all(out).map_err(io)?;
    let mut outputs = Vec::new();
    for f in &files {
        fs::write(out.join(f.name), &f.bytes).map_err(io)?;
        outputs.push(ManifestOutput {
            file: f.name.to_string(),
            sha256: sha256_hex(&f.bytes),
        });
    }
    let manifest = Manifest {
        tool: "wndnls".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: cmd.name().into(),
        generator: wnd_core::paths::GENERATOR_ID.into(),
        config_digest: sha256_hex(text.as_bytes()),
        master_seed: cfg.master_seed(),
        config_text: text,
        seed_override,
        workers: pool.current_num_threads(),
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        wall_time_seconds: wall,
        outputs,
    };
    let mut m = serde_json::to_vec_pretty(&manifest).expect("serializable");
    m.push(b'\n');
    fs::write(out.join("manifest.json"), m).map_err(io)?;
    if !quiet {
        for f in &files {
            println!("wrote {}", out.join(f.name).display());
        }
    }
    Ok(())
}

fn validate(path: &Path) -> Result<Vec<String>, Failure> {
    let text = read_text(path)?;
    let kind = configs::infer_kind(&text).map_err(Failure::Invalid)?;
    let cfg = configs::parse(kind, &text).map_err(Failure::Invalid)?;
    Ok(cfg.diagnostics())
}

fn rerun(manifest: &Path, out: &Path, workers: usize, quiet: bool) -> Result<(), Failure> {
    let text = read_text(manifest)?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("bad manifest: {e}")))?;
    let cmd = Command::from_name(&m.subcommand)
        .ok_or_else(|| Failure::Invalid(format!("unknown subcommand {} in manifest", m.subcommand)))?;
    if sha256_hex(m.config_text.as_bytes()) != m.config_digest {
        return Err(Failure::Invalid("config digest does not match config text".into()));
    }
    let opts = RunOptions {
        workers,
        seed_override: m.seed_override,
        dry_run: false,
        quiet,
    };
    run(cmd, m.config_text, out, opts)
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Sub::Validate { config } => match validate(&config) {
            Ok(d) if d.is_empty() => {
                println!("ok");
                Ok(())
            }
            Ok(d) => {
                for line in &d {
                    println!("{line}");
                }
                Err(Failure::Invalid(format!("{} violation(s)", d.len())))
            }
            Err(e) => Err(e),
        },
        Sub::Rerun {
            manifest,
            out,
            workers,
            quiet,
        } => rerun(&manifest, &out, workers, quiet),
        sub => {
            let (cmd, a) = match sub {
                Sub::Simulate(a) => (Command::Simulate, a),
                Sub::Moments(a) => (Command::Moments, a),
                Sub::Strichartz(a) => (Command::Strichartz, a),
                Sub::L6(a) => (Command::L6, a),
                Sub::Xsb(a) => (Command::Xsb, a),
                Sub::Resonance(a) => (Command::Resonance, a),
                Sub::QuinticWitness(a) => (Command::QuinticWitness, a),
                Sub::Validate { .. } | Sub::Rerun { .. } => unreachable!(),
            };
            let opts = RunOptions {
                workers: a.workers,
                seed_override: a.seed_override,
                dry_run: a.dry_run,
                quiet: a.quiet,
            };
            read_text(&a.config).and_then(|text| run(cmd, text, &a.out, opts))
        }
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Guard(msg)) => {
            eprintln!("numerical guard: {msg}");
            3
        }
    }
}
