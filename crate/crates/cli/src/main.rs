use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nonloc_cli::{parse_generator, parse_lemma1, run, Command, GraphSource, RunConfig, RunError};

/// Eigenfunction delocalization toolkit for regular graphs.
#[derive(Parser)]
#[command(name = "nonloc", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Generate a random (d+1)-regular graph: `gen n=.. d=.. [seed=..]`.
    Gen {
        #[arg(value_name = "KEY=VALUE", required = true)]
        spec: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Girth, injectivity radius and shared-edge cycle bound.
    Girth(Common),
    /// Measure sphere operator norms and fit the decay condition.
    Condition(Common),
    /// Eigenvalues of T_d with temperedness.
    Spectrum(Common),
    /// Build a Fejér kernel recipe and scan its transform.
    Kernel(Common),
    /// Check the sphere decomposition identity and tree-regime norms.
    Verify(Common),
    /// Full delocalization survey over the spectrum.
    Survey(Common),
    /// Compare closed forms against explicit tree computations.
    Oracle(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Load every setting from a saved run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge-list file.
    #[arg(long, conflicts_with = "gen")]
    graph: Option<PathBuf>,
    /// Generator spec `n=..,d=..,seed=..`.
    #[arg(long)]
    gen: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Radius N (replaces the fitted value).
    #[arg(long = "n")]
    n: Option<usize>,
    #[arg(long)]
    theta0: Option<f64>,
    /// `d=.. n=.. depth=..`
    #[arg(long, num_args = 1..=3, value_name = "KEY=VALUE")]
    lemma1: Option<Vec<String>>,
    #[arg(long, default_value_t = 32)]
    scan_limit: usize,
    #[arg(long, default_value_t = 12)]
    sphere_orders: usize,
    #[arg(long, default_value_t = 10)]
    random_vectors: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = nonloc_core::deloc::DEFAULT_DENSE_BUDGET)]
    dense_budget: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    tol_linalg: Option<f64>,
    #[arg(long)]
    tol_identity: Option<f64>,
    #[arg(long)]
    tol_oracle: Option<f64>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn build_config(command: Command, common: Common, extra: Option<Vec<String>>) -> Result<RunConfig, RunError> {
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?;
        cfg.command = command;
        return Ok(cfg);
    }
    let mut cfg = RunConfig::new(command);
    cfg.graph = match (common.graph, common.gen, extra) {
        (Some(path), _, _) => Some(GraphSource::File { path }),
        (None, Some(spec), _) => Some(parse_generator(&spec)?),
        (None, None, Some(spec)) => Some(parse_generator(&spec.join(","))?),
        (None, None, None) => None,
    };
    cfg.epsilon = common.epsilon;
    cfg.p = common.p;
    cfg.c = common.c;
    cfg.alpha = common.alpha;
    cfg.n_override = common.n;
    cfg.theta0 = common.theta0;
    cfg.lemma1 = common.lemma1.map(|v| parse_lemma1(&v.join(","))).transpose()?;
    cfg.scan_limit = common.scan_limit;
    cfg.sphere_orders = common.sphere_orders;
    cfg.random_vectors = common.random_vectors;
    cfg.seed = common.seed;
    cfg.dense_budget = common.dense_budget;
    cfg.out = common.out;
    cfg.csv = common.csv;
    if let Some(t) = common.tol_linalg {
        cfg.tolerances.linalg = t;
    }
    if let Some(t) = common.tol_identity {
        cfg.tolerances.identity = t;
    }
    if let Some(t) = common.tol_oracle {
        cfg.tolerances.oracle = t;
    }
    cfg.verbosity = common.verbose;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(threads) = std::env::var("NONLOC_THREADS").ok().and_then(|v| v.parse().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let (command, common, extra) = match cli.command {
        Sub::Gen { spec, common } => (Command::Gen, common, Some(spec)),
        Sub::Girth(c) => (Command::Girth, c, None),
        Sub::Condition(c) => (Command::Condition, c, None),
        Sub::Spectrum(c) => (Command::Spectrum, c, None),
        Sub::Kernel(c) => (Command::Kernel, c, None),
        Sub::Verify(c) => (Command::Verify, c, None),
        Sub::Survey(c) => (Command::Survey, c, None),
        Sub::Oracle(c) => (Command::Oracle, c, None),
    };
    let result = build_config(command, common, extra).and_then(|cfg| run(&cfg));
    match result {
        Ok(outcome) => {
            let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
            if !outcome.pass {
                eprintln!("nonloc: one or more checks failed");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("nonloc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
