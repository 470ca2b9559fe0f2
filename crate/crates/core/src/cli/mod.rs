//! Experiment driver: `convexlift <ot|iso|scl|euler|abi> --config FILE
//! [--out DIR] [--seed N]`.
//!
//! Exit status 0 on success, 1 on bad input, 2 when a checked invariant
//! fails. Every run that gets past config parsing leaves `manifest.json`
//! in the output directory with the resolved config, tolerances, results
//! and the names of failed invariants.

pub mod config;
mod pipelines;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::Error;
pub use config::{ConfigError, Params};

/// Environment variable with the worker thread count.
pub const THREADS_ENV: &str = "CONVEXLIFT_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    Ot,
    Iso,
    Scl,
    Euler,
    Abi,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Ot => "ot",
            Subcommand::Iso => "iso",
            Subcommand::Scl => "scl",
            Subcommand::Euler => "euler",
            Subcommand::Abi => "abi",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "convexlift", version, about = "Convex reformulations of nonlinear PDEs: experiment driver")]
struct Args {
    subcommand: Subcommand,
    /// Flat `key = value` experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV/JSON artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the `seed` key of the config.
    #[arg(long)]
    seed: Option<u64>,
}

/// Why a pipeline stopped.
#[derive(Debug)]
pub(crate) enum Failure {
    Config(ConfigError),
    Input(Error),
    /// A named invariant could not be checked or established.
    Invariant(&'static str, Error),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SmallnessViolated { .. } => Failure::Invariant("smallness", e),
            Error::NonConvergence { .. } => Failure::Invariant("path_convergence", e),
            Error::PositivityLoss { .. } => Failure::Invariant("positivity", e),
            Error::NotMonotone { .. } => Failure::Invariant("monotone_level_field", e),
            Error::InfeasiblePotentials(_) => Failure::Invariant("dual_feasibility", e),
            Error::SolverFailure(_) => Failure::Invariant("transport_solver", e),
            other => Failure::Input(other),
        }
    }
}

/// Artifacts and checks accumulated by a pipeline.
#[derive(Debug)]
pub(crate) struct Run {
    out: PathBuf,
    config_dir: PathBuf,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub results: serde_json::Map<String, Value>,
    pub outputs: Vec<String>,
    pub failed: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl Run {
    /// Independent generator for one component of the run.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    pub fn tolerance(&mut self, name: &str, value: f64) -> f64 {
        self.tolerances.insert(name.to_string(), value);
        value
    }

    pub fn result(&mut self, name: &str, value: impl serde::Serialize) {
        self.results
            .insert(name.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    /// Records a failed invariant unless `ok`.
    pub fn check(&mut self, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failed.push(name.to_string());
            self.diagnostics.push(format!("{name}: {detail}"));
        }
    }

    pub fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<fs::File>) -> crate::Result<()>) -> Result<(), Failure> {
        let path = self.out.join(name);
        let file = fs::File::create(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        std::io::Write::flush(&mut w).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// `path` relative to the config file's directory.
    pub fn input_path(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.config_dir.join(p)
        }
    }
}

fn configure_threads() -> Result<usize, ConfigError> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("{THREADS_ENV}={raw:?} is not a thread count")))?;
        // a second run in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

/// Entry point of the binary.
pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (program name first), runs the experiment and returns
/// the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&args) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("{msg}");
            EXIT_INPUT
        }
    }
}

fn execute(args: &Args) -> Result<i32, String> {
    let text = fs::read_to_string(&args.config).map_err(|e| format!("{}: {e}", args.config.display()))?;
    let sub = args.subcommand;
    let mut params = Params::parse(&text, sub.name(), pipelines::schema(sub)).map_err(|e| e.to_string())?;
    let seed = match args.seed {
        Some(s) => s,
        None => params.get::<u64>("seed").map_err(|e| e.to_string())?,
    };
    params.set("seed", seed);
    let threads = configure_threads().map_err(|e| e.to_string())?;
    fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;

    let mut run = Run {
        out: args.out.clone(),
        config_dir: args.config.parent().map(Path::to_path_buf).unwrap_or_default(),
        seed,
        tolerances: BTreeMap::new(),
        results: serde_json::Map::new(),
        outputs: Vec::new(),
        failed: Vec::new(),
        diagnostics: Vec::new(),
    };
    let start = Instant::now();
    let outcome = pipelines::dispatch(sub, &params, &mut run);
    let wall = start.elapsed().as_secs_f64();

    let (status, code) = match outcome {
        Ok(()) if run.failed.is_empty() => ("ok", EXIT_OK),
        Ok(()) => ("invariant_violation", EXIT_INVARIANT),
        Err(Failure::Invariant(name, e)) => {
            run.failed.push(name.to_string());
            run.diagnostics.push(format!("{name}: {e}"));
            ("invariant_violation", EXIT_INVARIANT)
        }
        Err(Failure::Config(e)) => {
            run.diagnostics.push(e.to_string());
            ("input_error", EXIT_INPUT)
        }
        Err(Failure::Input(e)) => {
            run.diagnostics.push(format!("input error: {e}"));
            ("input_error", EXIT_INPUT)
        }
        Err(Failure::Io(e)) => {
            run.diagnostics.push(format!("i/o error: {e}"));
            ("input_error", EXIT_INPUT)
        }
    };
    for d in &run.diagnostics {
        eprintln!("{}: {d}", sub.name());
    }
    let manifest = json!({
        "tool": "convexlift",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": sub.name(),
        "pipeline": params.raw("pipeline"),
        "seed": seed,
        "config": params.as_map(),
        "tolerances": run.tolerances,
        "results": run.results,
        "outputs": run.outputs,
        "status": status,
        "failed_invariants": run.failed,
        "diagnostics": run.diagnostics,
        "threads": threads,
        "wall_time_seconds": wall,
    });
    let path = args.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| e.to_string())?;
    fs::write(&path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(code)
}
