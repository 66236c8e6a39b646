//! Argument handling and report assembly for the `stepfi` binary.
//!
//! Every subcommand produces a JSON run report on stdout (or `--out`) and
//! a short human summary on stderr. Exit codes: 0 for a true answer or a
//! completed run, 1 for a false answer, 2 for invalid input, 3 when an
//! iteration or resampling budget runs out, 4 for internal errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use stepfi::io::{self, akernel_to_json};
use stepfi::probs::{self, BallDistribution};
use stepfi::rational::{self, format_rational};
use stepfi::refinement;
use stepfi::simulate::{self, SimConfig, USampler, XSampler};
use stepfi::trees::RootedTree;
use stepfi::{ust, Error, Graph, StepAkernel, StepKernel};

pub const EXIT_TRUE: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "stepfi", version, about = "Fractional isomorphism and branching processes for step kernels")]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for sampling commands (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Leave the wall time out of the report.
    #[arg(long, global = true)]
    pub no_timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FiMode {
    Exact,
    Projective,
    Piecewise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreeProcess {
    X,
    U,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimProcess {
    X,
    U,
    Xdagger,
}

#[derive(Debug, Args)]
pub struct Pair {
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide fractional, projective or piecewise-projective isomorphism.
    Fi {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_enum, default_value = "exact")]
        mode: FiMode,
    },
    /// Exact probability of a tree, or the whole ball distribution.
    TreeProb {
        kernel: PathBuf,
        #[arg(long, value_enum, default_value = "x")]
        process: TreeProcess,
        #[arg(long)]
        depth: usize,
        /// Canonical parenthesis code, e.g. "(()())".
        #[arg(long, conflicts_with = "all")]
        tree: Option<String>,
        /// Tabulate every tree up to --max-vertices.
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 8)]
        max_vertices: usize,
        /// Root type for the x process (default: averaged over mu).
        #[arg(long = "type")]
        root_type: Option<usize>,
    },
    /// Monte Carlo ball distribution or generation statistics.
    Simulate {
        kernel: PathBuf,
        #[arg(long, value_enum, default_value = "x")]
        process: SimProcess,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = simulate::DEFAULT_MAX_NODES)]
        max_nodes: usize,
        /// Also report the TV distance to the exact law, both cut at --max-vertices.
        #[arg(long)]
        compare: bool,
        #[arg(long, default_value_t = 8)]
        max_vertices: usize,
    },
    /// Search for a tree whose probability differs between two kernels.
    Separate {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 3)]
        max_height: usize,
        #[arg(long, default_value_t = 8)]
        max_vertices: usize,
    },
    /// Survival probability of the Poisson process.
    Survival {
        kernel: PathBuf,
        /// Multiply the kernel by this rational first.
        #[arg(long)]
        scale: Option<String>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: usize,
    },
    /// The spanning-tree rescaling constant c_W.
    Cw { kernel: PathBuf },
    /// Connected components and isolated types.
    Components { kernel: PathBuf },
    /// Stable colour refinement and its template.
    Refine { kernel: PathBuf },
    /// Practional isomorphism of two graphs.
    GraphFi {
        #[command(flatten)]
        pair: Pair,
    },
    /// Ball statistics of uniform spanning trees of dense random graphs.
    Ust {
        kernel: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        radius: usize,
        #[arg(long, default_value_t = 1000)]
        graphs: usize,
        #[arg(long, default_value_t = 1)]
        roots_per_graph: usize,
        #[arg(long)]
        seed: u64,
        /// Also report the TV distance to the exact limit law.
        #[arg(long)]
        compare: bool,
        #[arg(long, default_value_t = 8)]
        max_vertices: usize,
    },
}

/// What a finished command hands back to `main`.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: Option<Value>,
    pub summary: String,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoConvergence { .. } | Error::PersistentDisconnection { .. } => EXIT_BUDGET,
            Error::Internal(_) => EXIT_INTERNAL,
            _ => EXIT_INVALID,
        };
        Failure { code, message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INVALID, message: message.into() }
}

type CmdResult<T> = std::result::Result<T, Failure>;

/// Files read by a command, with their digests.
#[derive(Default)]
struct Inputs {
    digests: Map<String, Value>,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> CmdResult<String> {
        let bytes = fs::read(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let digest = hex::encode(Sha256::digest(&bytes));
        self.digests.insert(path.display().to_string(), json!(format!("sha256:{digest}")));
        String::from_utf8(bytes).map_err(|_| invalid(format!("{}: not UTF-8", path.display())))
    }

    fn kernel(&mut self, path: &Path) -> CmdResult<StepKernel> {
        let text = self.read(path)?;
        io::parse_kernel(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    fn akernel(&mut self, path: &Path) -> CmdResult<StepAkernel> {
        let text = self.read(path)?;
        io::parse_akernel(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    fn graph(&mut self, path: &Path) -> CmdResult<Graph> {
        let text = self.read(path)?;
        io::parse_graph(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }
}

/// Body of a report plus the exit code it implies.
struct Payload {
    code: i32,
    results: Value,
    summary: String,
}

fn decision(result: bool, results: Value, summary: String) -> Payload {
    Payload { code: if result { EXIT_TRUE } else { EXIT_FALSE }, results, summary }
}

fn done(results: Value, summary: String) -> Payload {
    Payload { code: EXIT_TRUE, results, summary }
}

/// Rounds every float in `v` to 12 significant digits.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float");
            if let Some(r) = serde_json::Number::from_f64(rounded) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn ball_json(d: &BallDistribution) -> Value {
    serde_json::to_value(d).expect("ball distributions serialize")
}

fn cmd_fi(inputs: &mut Inputs, pair: &Pair, mode: FiMode) -> CmdResult<Payload> {
    match mode {
        FiMode::Exact => {
            let (u, w) = (inputs.akernel(&pair.a)?, inputs.akernel(&pair.b)?);
            let joint = refinement::joint_refinement(&u, &w);
            let result = joint.is_isomorphic();
            let template = result.then(|| refinement::refine(&u).1.to_json());
            let summary = format!("fractionally isomorphic: {result}");
            Ok(decision(result, json!({"result": result, "template": template, "witness": joint.to_json()}), summary))
        }
        FiMode::Projective => {
            let (u, w) = (inputs.kernel(&pair.a)?, inputs.kernel(&pair.b)?);
            let t = refinement::proj_frac_iso(&u, &w)?;
            let result = t.is_some();
            let candidate = u.l1_norm() / w.l1_norm();
            let witness = refinement::joint_refinement(&u, w.scale(&candidate)?.as_akernel()).to_json();
            let summary = match &t {
                Some(t) => format!("projectively fractionally isomorphic with t = {}", format_rational(t)),
                None => "not projectively fractionally isomorphic".to_owned(),
            };
            Ok(decision(
                result,
                json!({"result": result, "t": t.as_ref().map(format_rational), "witness": witness}),
                summary,
            ))
        }
        FiMode::Piecewise => {
            let (u, w) = (inputs.kernel(&pair.a)?, inputs.kernel(&pair.b)?);
            let grouping = refinement::piecewise_grouping(&u, &w)?;
            let result = grouping.holds();
            let summary = format!("piecewise projectively fractionally isomorphic: {result}");
            Ok(decision(result, json!({"result": result, "witness": grouping.to_json()}), summary))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_tree_prob(
    inputs: &mut Inputs,
    path: &Path,
    process: TreeProcess,
    depth: usize,
    tree: Option<&str>,
    all: bool,
    max_vertices: usize,
    root_type: Option<usize>,
) -> CmdResult<Payload> {
    let tree: Option<RootedTree> = match (tree, all) {
        (Some(code), _) => Some(code.parse()?),
        (None, true) => None,
        (None, false) => return Err(invalid("give --tree CODE or --all")),
    };
    match process {
        TreeProcess::X => {
            let k = inputs.akernel(path)?;
            if let Some(tree) = tree {
                let p = match root_type {
                    Some(i) => probs::x_tree_prob_at(&k, i, &tree, depth)?,
                    None => probs::x_tree_prob(&k, &tree, depth)?,
                };
                let summary = format!("P[X ball = {tree}] = {p:.12}");
                return Ok(done(json!({"tree": tree.code(), "depth": depth, "probability": p}), summary));
            }
            if root_type.is_some() {
                return Err(invalid("--type applies to a single --tree"));
            }
            let d = probs::x_ball_distribution(&k, depth, max_vertices);
            let summary = format!("{} classes, residual {:.3e}", d.entries.len(), d.residual);
            Ok(done(json!({"distribution": ball_json(&d)}), summary))
        }
        TreeProcess::U => {
            if root_type.is_some() {
                return Err(invalid("--type is only available for the x process"));
            }
            let k = inputs.kernel(path)?;
            if let Some(tree) = tree {
                let p = probs::u_tree_prob(&k, &tree, depth)?;
                let summary = format!("P[U ball = {tree}] = {p:.12}");
                return Ok(done(json!({"tree": tree.code(), "depth": depth, "probability": p}), summary));
            }
            let d = probs::u_ball_distribution(&k, depth, max_vertices)?;
            let summary = format!("{} classes, residual {:.3e}", d.entries.len(), d.residual);
            Ok(done(json!({"distribution": ball_json(&d)}), summary))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    inputs: &mut Inputs,
    path: &Path,
    process: SimProcess,
    depth: usize,
    samples: u64,
    seed: u64,
    max_nodes: usize,
    compare: bool,
    max_vertices: usize,
) -> CmdResult<Payload> {
    let cfg = SimConfig { seed, samples, depth, max_nodes };
    let (report, exact) = match process {
        SimProcess::X => {
            let k = inputs.akernel(path)?;
            let report = simulate::run(&XSampler::new(&k), &cfg)?;
            (report, compare.then(|| probs::x_ball_distribution(&k, depth, max_vertices)))
        }
        SimProcess::U => {
            let k = inputs.kernel(path)?;
            let report = simulate::run(&USampler::new(&k)?, &cfg)?;
            let exact = if compare { Some(probs::u_ball_distribution(&k, depth, max_vertices)?) } else { None };
            (report, exact)
        }
        SimProcess::Xdagger => {
            if compare {
                return Err(invalid("--compare is not available for xdagger"));
            }
            let k = inputs.kernel(path)?;
            (simulate::extinction_stats(&k, depth, &cfg)?, None)
        }
    };
    let mut results = serde_json::to_value(&report).expect("reports serialize");
    let mut summary = format!("{samples} samples, {} truncated", report.truncated_samples);
    if let (Some(exact), Some(empirical)) = (exact, &report.distribution) {
        let tv = empirical.coarsen(max_vertices).tv_distance(&exact)?;
        results["tv"] = json!(tv);
        summary.push_str(&format!(", tv to exact law {tv:.4}"));
    }
    Ok(done(results, summary))
}

fn cmd_separate(inputs: &mut Inputs, pair: &Pair, max_height: usize, max_vertices: usize) -> CmdResult<Payload> {
    if max_height == 0 || max_vertices == 0 {
        return Err(invalid("--max-height and --max-vertices must be at least 1"));
    }
    let (u, w) = (inputs.akernel(&pair.a)?, inputs.akernel(&pair.b)?);
    Ok(match probs::separating_tree_search(&u, &w, max_height, max_vertices) {
        Some(s) => {
            let summary = format!("{} separates at depth {}: {:.6} vs {:.6}", s.tree, s.depth, s.p_u, s.p_w);
            decision(true, json!({"tree": s.tree.code(), "k": s.depth, "pU": s.p_u, "pW": s.p_w}), summary)
        }
        None => decision(false, json!({"tree": null}), "no separating tree within the bounds".to_owned()),
    })
}

fn cmd_survival(
    inputs: &mut Inputs,
    path: &Path,
    scale: Option<&str>,
    tol: f64,
    max_iter: usize,
) -> CmdResult<Payload> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(invalid("--tol must be positive"));
    }
    let mut k = inputs.kernel(path)?;
    if let Some(s) = scale {
        let t = rational::parse_rational(s).ok_or_else(|| invalid(format!("--scale: cannot read {s:?}")))?;
        k = k.scale(&t)?;
    }
    let s = probs::survival(&k, tol, max_iter)?;
    let summary = format!("gamma = {:.12}", s.gamma);
    Ok(done(
        json!({"gamma": s.gamma, "s": s.s, "iterations": s.iterations, "residual": s.residual}),
        summary,
    ))
}

fn cmd_components(inputs: &mut Inputs, path: &Path) -> CmdResult<Payload> {
    let k = inputs.kernel(path)?;
    let c = k.components();
    let summary = format!("{} components, {} isolated types", c.components.len(), c.isolated.len());
    Ok(done(
        json!({
            "components": c.components,
            "masses": c.masses.iter().map(format_rational).collect::<Vec<_>>(),
            "isolated": c.isolated,
            "isolated_mass": format_rational(&c.isolated_mass(&k)),
        }),
        summary,
    ))
}

fn cmd_refine(inputs: &mut Inputs, path: &Path) -> CmdResult<Payload> {
    let k = inputs.akernel(path)?;
    let (partition, template) = refinement::refine(&k);
    let summary = format!("{} colours after {} rounds", partition.num_colors(), partition.rounds);
    Ok(done(
        json!({
            "kernel": akernel_to_json(&k),
            "colors": partition.color,
            "rounds": partition.rounds,
            "template": template.to_json(),
        }),
        summary,
    ))
}

fn cmd_graph_fi(inputs: &mut Inputs, pair: &Pair) -> CmdResult<Payload> {
    let (g, h) = (inputs.graph(&pair.a)?, inputs.graph(&pair.b)?);
    let (_, tg) = refinement::graph_equitable(&g)?;
    let (_, th) = refinement::graph_equitable(&h)?;
    let result = tg == th;
    let factor = refinement::graph_factor_check(&g, &h)?;
    let summary = format!("practionally isomorphic: {result}");
    Ok(decision(
        result,
        json!({
            "result": result,
            "template": result.then(|| tg.to_json()),
            "witness": {"template_a": tg.to_json(), "template_b": th.to_json(), "factor_check": factor},
        }),
        summary,
    ))
}

#[allow(clippy::too_many_arguments)]
fn cmd_ust(
    inputs: &mut Inputs,
    path: &Path,
    n: usize,
    radius: usize,
    graphs: usize,
    roots_per_graph: usize,
    seed: u64,
    compare: bool,
    max_vertices: usize,
) -> CmdResult<Payload> {
    let k = inputs.kernel(path)?;
    let mut summary = String::new();
    if ust::dense_clips(&k) {
        summary.push_str("warning: entries above 1 are clipped to 1; ");
    }
    let report = ust::ust_ball_distribution(&k, n, radius, graphs, roots_per_graph, seed)?;
    let mut results = serde_json::to_value(&report).expect("reports serialize");
    summary.push_str(&format!(
        "{graphs} graphs, {} disconnected draws resampled",
        report.resampled_disconnected
    ));
    if report.correlated_roots {
        summary.push_str("; roots within one tree are correlated");
    }
    if compare {
        let exact = probs::u_ball_distribution(&k, radius, max_vertices)?;
        let tv = report.distribution.coarsen(max_vertices).tv_distance(&exact)?;
        results["tv"] = json!(tv);
        summary.push_str(&format!(", tv to limit law {tv:.4}"));
    }
    Ok(done(results, summary))
}

fn dispatch(cli: &Cli, inputs: &mut Inputs) -> CmdResult<(Option<u64>, Payload)> {
    let payload = match &cli.command {
        Command::Fi { pair, mode } => cmd_fi(inputs, pair, *mode)?,
        Command::TreeProb { kernel, process, depth, tree, all, max_vertices, root_type } => {
            cmd_tree_prob(inputs, kernel, *process, *depth, tree.as_deref(), *all, *max_vertices, *root_type)?
        }
        Command::Simulate { kernel, process, depth, samples, seed, max_nodes, compare, max_vertices } => {
            let p = cmd_simulate(inputs, kernel, *process, *depth, *samples, *seed, *max_nodes, *compare, *max_vertices)?;
            return Ok((Some(*seed), p));
        }
        Command::Separate { pair, max_height, max_vertices } => {
            cmd_separate(inputs, pair, *max_height, *max_vertices)?
        }
        Command::Survival { kernel, scale, tol, max_iter } => {
            cmd_survival(inputs, kernel, scale.as_deref(), *tol, *max_iter)?
        }
        Command::Cw { kernel } => {
            let c = inputs.kernel(kernel)?.cw_constant()?;
            done(json!({"c": c}), format!("c_W = {c:.12}"))
        }
        Command::Components { kernel } => cmd_components(inputs, kernel)?,
        Command::Refine { kernel } => cmd_refine(inputs, kernel)?,
        Command::GraphFi { pair } => cmd_graph_fi(inputs, pair)?,
        Command::Ust { kernel, n, radius, graphs, roots_per_graph, seed, compare, max_vertices } => {
            let p = cmd_ust(inputs, kernel, *n, *radius, *graphs, *roots_per_graph, *seed, *compare, *max_vertices)?;
            return Ok((Some(*seed), p));
        }
    };
    Ok((None, payload))
}

/// Runs a parsed command line. `argv` is echoed into the report.
pub fn run(cli: &Cli, argv: &[String]) -> Outcome {
    let start = Instant::now();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(pool) => pool,
        Err(e) => return Outcome { code: EXIT_INTERNAL, report: None, summary: format!("thread pool: {e}") },
    };
    let mut inputs = Inputs::default();
    let result = pool.install(|| dispatch(cli, &mut inputs));
    match result {
        Ok((seed, payload)) => {
            let mut report = json!({
                "command": argv,
                "inputs": Value::Object(inputs.digests),
                "seed": seed,
                "results": payload.results,
            });
            if !cli.no_timing {
                report["wall_time_seconds"] = json!(start.elapsed().as_secs_f64());
            }
            round_floats(&mut report);
            Outcome { code: payload.code, report: Some(report), summary: payload.summary }
        }
        Err(f) => Outcome { code: f.code, report: None, summary: format!("error: {}", f.message) },
    }
}

/// Parses `argv` (including the program name) and runs it.
pub fn run_args(argv: &[String]) -> Outcome {
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(&cli, argv),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_TRUE };
            Outcome { code, report: None, summary: e.to_string() }
        }
    }
}

/// Runs `argv` and writes the report to stdout or `--out`.
pub fn main_with(argv: &[String]) -> i32 {
    let outcome = run_args(argv);
    if !outcome.summary.is_empty() {
        eprintln!("{}", outcome.summary.trim_end());
    }
    let Some(report) = outcome.report else {
        return outcome.code;
    };
    let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    let out = Cli::try_parse_from(argv).ok().and_then(|c| c.out);
    match out {
        Some(path) => {
            if let Err(e) = fs::write(&path, text) {
                eprintln!("error: {}: {e}", path.display());
                return EXIT_INVALID;
            }
        }
        None => print!("{text}"),
    }
    outcome.code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        let mut v = json!({"a": [0.796_812_130_020_021_3, 1, "x"], "b": 1.0e-20 / 3.0});
        round_floats(&mut v);
        assert_eq!(v["a"][0].as_f64().unwrap(), 0.796_812_130_02);
        assert_eq!(v["a"][1], json!(1));
        assert_eq!(v["b"].as_f64().unwrap(), 3.333_333_333_33e-21);
    }

    #[test]
    fn error_codes() {
        assert_eq!(Failure::from(Error::NoConvergence { iterations: 1, residual: 1.0 }).code, EXIT_BUDGET);
        assert_eq!(Failure::from(Error::ZeroKernel).code, EXIT_INVALID);
        let none: Vec<String> = vec!["stepfi".into(), "bogus".into()];
        assert_eq!(run_args(&none).code, EXIT_INVALID);
    }
}
