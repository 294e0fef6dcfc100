//! Run configuration and pipelines behind the `nonloc` binary.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use nonloc_core::deloc::{eigensystem_with_budget, full_survey, SurveyOptions, DEFAULT_DENSE_BUDGET};
use nonloc_core::graph::{generate_random_regular, girth_report, load_graph, GraphError, RegularGraph};
use nonloc_core::kernel::KernelRecipe;
use nonloc_core::operators::{build_sphere_family, corollary1_decomposition_check, fit_condition, sphere_norm};
use nonloc_core::report::{to_canonical_json, write_csv};
use nonloc_core::tree::{lemma1_kernel_value, lemma1_oracle};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Gen,
    Girth,
    Condition,
    Spectrum,
    Kernel,
    Verify,
    Survey,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSource {
    File { path: PathBuf },
    Generate { n: usize, d: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Args {
    pub d: usize,
    pub n: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Eigensolver and linear algebra checks.
    pub linalg: f64,
    /// Exact identities such as the sphere decomposition.
    pub identity: f64,
    /// Closed form against tree oracle.
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            linalg: 1e-8,
            identity: 1e-10,
            oracle: 1e-12,
        }
    }
}

/// Everything a run depends on. Serialising it and running it again
/// reproduces the output byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub graph: Option<GraphSource>,
    pub epsilon: Option<f64>,
    pub p: f64,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(rename = "N")]
    pub n_override: Option<usize>,
    pub theta0: Option<f64>,
    pub lemma1: Option<Lemma1Args>,
    /// Largest cycle length searched by the girth scan.
    pub scan_limit: usize,
    /// Largest sphere order in condition fits and identity checks.
    pub sphere_orders: usize,
    /// Random vectors per degenerate eigenspace in surveys.
    pub random_vectors: usize,
    pub seed: u64,
    pub dense_budget: usize,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub tolerances: Tolerances,
    pub verbosity: u8,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            graph: None,
            epsilon: None,
            p: 1.0,
            c: None,
            alpha: None,
            n_override: None,
            theta0: None,
            lemma1: None,
            scan_limit: 32,
            sphere_orders: 12,
            random_vectors: 10,
            seed: 0,
            dense_budget: DEFAULT_DENSE_BUDGET,
            out: None,
            csv: None,
            tolerances: Tolerances::default(),
            verbosity: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    /// Bad arguments or input; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// The analysis could not be carried out; exit status 1.
    #[error("{0}")]
    Analysis(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 2,
            RunError::Analysis(_) => 1,
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> RunError {
    RunError::Usage(msg.to_string())
}

fn analysis(msg: impl std::fmt::Display) -> RunError {
    RunError::Analysis(msg.to_string())
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Every check passed.
    pub pass: bool,
    /// Text for standard output (empty when written to `out`).
    pub stdout: String,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// Parses `key=value` pairs separated by commas or whitespace.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, RunError> {
    text.split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|item| {
            item.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| usage(format!("expected key=value, got `{item}`")))
        })
        .collect()
}

fn lookup<T: std::str::FromStr>(pairs: &[(String, String)], key: &str) -> Result<Option<T>, RunError> {
    match pairs.iter().find(|(k, _)| k == key) {
        None => Ok(None),
        Some((_, v)) => v
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("cannot parse {key}={v}"))),
    }
}

fn check_keys(pairs: &[(String, String)], allowed: &[&str]) -> Result<(), RunError> {
    match pairs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        Some((k, _)) => Err(usage(format!("unknown key `{k}`; expected one of {allowed:?}"))),
        None => Ok(()),
    }
}

/// `n=..,d=..[,seed=..]`.
pub fn parse_generator(text: &str) -> Result<GraphSource, RunError> {
    let pairs = parse_pairs(text)?;
    check_keys(&pairs, &["n", "d", "seed"])?;
    let need = |key: &str| lookup::<usize>(&pairs, key)?.ok_or_else(|| usage(format!("generator spec needs {key}=")));
    Ok(GraphSource::Generate {
        n: need("n")?,
        d: need("d")?,
        seed: lookup(&pairs, "seed")?.unwrap_or(0),
    })
}

/// `d=.. n=.. depth=..`.
pub fn parse_lemma1(text: &str) -> Result<Lemma1Args, RunError> {
    let pairs = parse_pairs(text)?;
    check_keys(&pairs, &["d", "n", "depth"])?;
    let need = |key: &str| lookup::<usize>(&pairs, key)?.ok_or_else(|| usage(format!("lemma1 spec needs {key}=")));
    let (d, n) = (need("d")?, need("n")?);
    Ok(Lemma1Args {
        d,
        n,
        depth: lookup(&pairs, "depth")?.unwrap_or(n + 2),
    })
}

fn graph_error(e: GraphError) -> RunError {
    match e {
        GraphError::RejectionLimitExceeded(_) => analysis(e),
        _ => usage(e),
    }
}

fn resolve_graph(config: &RunConfig) -> Result<RegularGraph, RunError> {
    match &config.graph {
        None => Err(usage("this command needs a graph (--graph FILE or --gen n=..,d=..,seed=..)")),
        Some(GraphSource::File { path }) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            load_graph(&text).map_err(graph_error)
        }
        Some(GraphSource::Generate { n, d, seed }) => generate_random_regular(*n, *d, *seed).map_err(graph_error),
    }
}

fn need_epsilon(config: &RunConfig) -> Result<f64, RunError> {
    match config.epsilon {
        Some(e) if e > 0.0 && e < 1.0 => Ok(e),
        Some(e) => Err(usage(format!("epsilon = {e} must lie in (0, 1)"))),
        None => Err(usage("this command needs --epsilon")),
    }
}

fn log(config: &RunConfig, msg: impl FnOnce() -> String) {
    if config.verbosity > 0 {
        eprintln!("{}", msg());
    }
}

/// Runs one command. `Ok` carries the pass flag of the analysis; `Err`
/// separates usage errors from analysis failures.
pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    if !(1.0..2.0).contains(&config.p) {
        return Err(usage(format!("p = {} must lie in [1, 2)", config.p)));
    }
    if config.command == Command::Gen {
        return run_gen(config);
    }
    let (pass, result, csv) = match config.command {
        Command::Gen => unreachable!(),
        Command::Girth => run_girth(config)?,
        Command::Condition => run_condition(config)?,
        Command::Spectrum => run_spectrum(config)?,
        Command::Kernel => run_kernel(config)?,
        Command::Verify => run_verify(config)?,
        Command::Survey => run_survey(config)?,
        Command::Oracle => run_oracle(config)?,
    };
    let doc = json!({
        "schema": SCHEMA,
        "command": config.command,
        "config": config,
        "pass": pass,
        "result": result,
    });
    let text = to_canonical_json(&doc).map_err(analysis)?;
    if let (Some(path), Some(rows)) = (&config.csv, csv) {
        fs::write(path, rows).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    let stdout = match &config.out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            String::new()
        }
        None => text,
    };
    Ok(RunOutcome { pass, stdout })
}

type Produced = (bool, Value, Option<Vec<u8>>);

fn to_value<T: Serialize>(v: &T) -> Result<Value, RunError> {
    serde_json::to_value(v).map_err(analysis)
}

fn run_gen(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let Some(GraphSource::Generate { .. }) = &config.graph else {
        return Err(usage("gen needs a generator spec n=.. d=.. [seed=..]"));
    };
    let g = resolve_graph(config)?;
    let mut text = String::new();
    let header = serde_json::to_string(config).map_err(analysis)?;
    writeln!(text, "# nonloc gen {header}").unwrap();
    text.push_str(&g.to_edge_list());
    let stdout = match &config.out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            String::new()
        }
        None => text,
    };
    Ok(RunOutcome { pass: true, stdout })
}

fn run_girth(config: &RunConfig) -> Result<Produced, RunError> {
    let g = resolve_graph(config)?;
    let rep = girth_report(&g, config.scan_limit).map_err(graph_error)?;
    Ok((true, to_value(&rep)?, None))
}

fn run_condition(config: &RunConfig) -> Result<Produced, RunError> {
    let g = resolve_graph(config)?;
    let fam = build_sphere_family(&g, config.sphere_orders).map_err(usage)?;
    let fit = fit_condition(&fam, config.p, config.c, config.alpha).map_err(usage)?;
    let girth = girth_report(&g, config.scan_limit).map_err(graph_error)?;
    Ok((true, json!({ "fit": to_value(&fit)?, "girth": to_value(&girth)? }), None))
}

fn run_spectrum(config: &RunConfig) -> Result<Produced, RunError> {
    let g = resolve_graph(config)?;
    let es = eigensystem_with_budget(&g, config.dense_budget).map_err(analysis)?;
    let spaces: Vec<Value> = es
        .eigenspaces()
        .into_iter()
        .map(|s| {
            json!({
                "first": s.start,
                "multiplicity": s.len(),
                "lambda": es.eigenvalues[s.start],
                "tempered": es.points[s.start].is_tempered(),
            })
        })
        .collect();
    let pass = es.orthonormality_error <= config.tolerances.linalg && es.max_residual <= config.tolerances.linalg;
    Ok((
        pass,
        json!({
            "eigenvalues": es.eigenvalues,
            "eigenspaces": spaces,
            "orthonormality_error": es.orthonormality_error,
            "max_residual": es.max_residual,
        }),
        None,
    ))
}

/// Grid size for the nonnegativity scan of a kernel transform.
const KERNEL_GRID: usize = 10_000;

fn run_kernel(config: &RunConfig) -> Result<Produced, RunError> {
    let epsilon = need_epsilon(config)?;
    let theta0 = config.theta0.ok_or_else(|| usage("kernel needs --theta0"))?;
    let n = config.n_override.ok_or_else(|| usage("kernel needs --n"))?;
    let recipe = KernelRecipe::new(theta0, epsilon, n).map_err(usage)?;
    let mut h_min = f64::INFINITY;
    let mut gap: f64 = 0.0;
    for k in 0..KERNEL_GRID {
        let t = PI * k as f64 / (KERNEL_GRID - 1) as f64;
        let h = recipe.fejer_transform(t);
        h_min = h_min.min(h);
        gap = gap.max((h - recipe.fejer_closed_form(t)).abs());
    }
    let pass = h_min >= -1.0 - 1e-12 && gap <= config.tolerances.identity;
    Ok((
        pass,
        json!({
            "recipe": to_value(&recipe)?,
            "h_theta0": recipe.fejer_transform(theta0),
            "h_min_on_grid": h_min,
            "closed_form_gap": gap,
            "grid_points": KERNEL_GRID,
        }),
        None,
    ))
}

fn run_verify(config: &RunConfig) -> Result<Produced, RunError> {
    let g = resolve_graph(config)?;
    let fam = build_sphere_family(&g, config.sphere_orders).map_err(usage)?;
    let mut identity = Vec::new();
    let mut pass = true;
    for n in (2..=config.sphere_orders).step_by(2) {
        let err = corollary1_decomposition_check(&g, &fam, n).map_err(analysis)?;
        pass &= err <= config.tolerances.identity;
        identity.push(json!({ "n": n, "max_entry_error": err }));
    }
    let girth = girth_report(&g, config.scan_limit).map_err(graph_error)?;
    let radius = girth.injectivity_radius.min(config.sphere_orders);
    let mut tree_regime = Vec::new();
    for n in 0..=radius {
        let norm = sphere_norm(&fam, n, 1.0).map_err(analysis)?.value;
        let want = (g.d() as f64).powf(-(n as f64) / 2.0);
        let ok = (norm - want).abs() <= 1e-12 * want;
        pass &= ok;
        tree_regime.push(json!({ "n": n, "sup_entry": norm, "tree_value": want, "ok": ok }));
    }
    Ok((
        pass,
        json!({
            "sphere_decomposition": identity,
            "injectivity_radius": girth.injectivity_radius,
            "tree_regime": tree_regime,
        }),
        None,
    ))
}

fn run_survey(config: &RunConfig) -> Result<Produced, RunError> {
    let epsilon = need_epsilon(config)?;
    let g = resolve_graph(config)?;
    log(config, || format!("survey: {} vertices, d = {}", g.vertex_count(), g.d()));
    let opts = SurveyOptions {
        epsilon,
        p: config.p,
        c: config.c,
        alpha: config.alpha,
        n_override: config.n_override,
        sphere_orders: config.sphere_orders,
        random_vectors: config.random_vectors,
        seed: config.seed,
        dense_budget: config.dense_budget,
    };
    let report = full_survey(&g, &opts).map_err(|e| match e {
        nonloc_core::deloc::DelocError::SizeBudgetExceeded { .. }
        | nonloc_core::deloc::DelocError::BadEpsilon(_)
        | nonloc_core::deloc::DelocError::BadExponent(_)
        | nonloc_core::deloc::DelocError::Operator(_) => usage(e),
        _ => analysis(e),
    })?;
    log(config, || format!("survey: {} of {} rows pass", report.aggregate.rows_passed, report.aggregate.rows));
    let csv = match config.csv {
        Some(_) => {
            let mut buf = Vec::new();
            write_csv(&report, &mut buf).map_err(analysis)?;
            Some(buf)
        }
        None => None,
    };
    Ok((report.aggregate.pass, to_value(&report)?, csv))
}

fn run_oracle(config: &RunConfig) -> Result<Produced, RunError> {
    let args = config.lemma1.ok_or_else(|| usage("oracle needs --lemma1 d=.. n=.. depth=.."))?;
    let oracle = lemma1_oracle(args.d, args.n, args.depth).map_err(usage)?;
    let mut rows = Vec::new();
    let mut pass = true;
    for (&dist, &observed) in &oracle.values {
        let closed = lemma1_kernel_value(args.d, args.n, dist).map_err(usage)?;
        let err = (closed - observed).abs();
        pass &= err <= config.tolerances.oracle;
        rows.push(json!({ "distance": dist, "closed_form": closed, "tree": observed, "error": err }));
    }
    pass &= oracle.radial_spread <= config.tolerances.oracle;
    Ok((
        pass,
        json!({
            "d": args.d,
            "n": args.n,
            "depth": args.depth,
            "route": to_value(&oracle.route)?,
            "tree_vertices": oracle.vertex_count,
            "radial_spread": oracle.radial_spread,
            "table": rows,
        }),
        None,
    ))
}
