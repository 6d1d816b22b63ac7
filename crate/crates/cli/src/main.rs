//! `graphon-spectra`: spectral predictions from graphon variance profiles
//! and Monte Carlo verification on sampled random matrix ensembles.
//!
//! Exit codes: 0 success, 2 tolerance failure, 3 configuration error,
//! 4 numerical non-convergence.

use clap::{Args, Parser, Subcommand, ValueEnum};
use graphon_spectra_core::experiment::{builtin_experiment, builtin_experiments, run_experiment};
use graphon_spectra_core::graphon::{cut_norm, cut_norm_with_mode, CutNorm, CutNormMode};
use graphon_spectra_core::homdensity::{gram_moment_table, moment_table};
use graphon_spectra_core::io::{load_graphon, read_sample, write_sample, DEFAULT_REFINEMENT};
use graphon_spectra_core::models::sample_spec;
use graphon_spectra_core::qve::{
    density_curve, solve_gram_qve, solve_qve, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use graphon_spectra_core::spectra::{
    eigenvalues_symmetric, esd_moments, histogram_density, ks_to_curve, l1_density_distance,
    CurveCdf,
};
use graphon_spectra_core::trees::{enumerate_trees_with_cap, tree_to_dyck, DEFAULT_TREE_CAP};
use graphon_spectra_core::{Error, Result};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

const EXIT_TOLERANCE: i32 = 2;
const EXIT_CONFIG: i32 = 3;
const EXIT_NONCONVERGENCE: i32 = 4;

#[derive(Parser)]
#[command(
    name = "graphon-spectra",
    version,
    about = "Limiting spectral distributions of Wigner-type matrices from graphon variance profiles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate rooted planar trees with k edges, one per line.
    Trees(TreesArgs),
    /// Cut norm of a graphon.
    Cutnorm(CutnormArgs),
    /// Predicted moments as CSV `order,value,source`.
    Moments(MomentsArgs),
    /// Solve the quadratic vector equation at one point.
    Qve(QveArgs),
    /// Spectral density on a grid as CSV `E,rho`.
    Density(DensityArgs),
    /// Sample a random matrix ensemble to a GSPC binary file.
    Sample(SampleArgs),
    /// Eigenvalues of a sampled matrix as CSV.
    Esd(EsdArgs),
    /// Compare a sample against graphon predictions.
    Compare(CompareArgs),
    /// Run or list the built-in experiments.
    Experiment(ExperimentArgs),
}

/// Every flag has a config-file equivalent: `--config file.json` supplies
/// values by long flag name, and explicit flags win.
#[derive(Args, Clone)]
struct ConfigFile {
    /// JSON file whose keys mirror the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigFile {
    fn load(&self) -> Result<Value> {
        match &self.config {
            None => Ok(Value::Null),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }
}

fn merged<T: serde::de::DeserializeOwned>(flag: Option<T>, cfg: &Value, key: &str) -> Option<T> {
    flag.or_else(|| {
        cfg.get(key)
            .cloned()
            .and_then(|v| serde_json::from_value(v).ok())
    })
}

fn flag_or(cfg: &Value, flag: bool, key: &str) -> bool {
    flag || cfg.get(key).and_then(|v| v.as_bool()).unwrap_or(false)
}

fn require<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing required option --{name}")))
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TreeFormat {
    Dyck,
    Parent,
}

#[derive(Args)]
struct TreesArgs {
    /// Number of edges.
    #[arg(long)]
    k: Option<usize>,
    /// Output form: Dyck words (U/D) or full parent arrays.
    #[arg(long, value_enum)]
    format: Option<TreeFormat>,
    /// Enumeration cap override.
    #[arg(long)]
    cap: Option<usize>,
    #[command(flatten)]
    config: ConfigFile,
}

#[derive(Args)]
struct CutnormArgs {
    /// Graphon JSON file.
    #[arg(long)]
    graphon: Option<PathBuf>,
    /// Force the exact subset scan regardless of block count.
    #[arg(long, conflicts_with = "heuristic")]
    exact: bool,
    /// Force alternating maximization (certified lower bound).
    #[arg(long)]
    heuristic: bool,
    /// Panels when refining an analytic kernel.
    #[arg(long)]
    refine: Option<usize>,
    #[command(flatten)]
    config: ConfigFile,
}

#[derive(Args)]
struct MomentsArgs {
    #[arg(long)]
    graphon: Option<PathBuf>,
    #[arg(long)]
    max_order: Option<usize>,
    /// Use the Gram moment formula.
    #[arg(long)]
    gram: bool,
    /// Aspect ratio y = m/n for --gram.
    #[arg(long)]
    aspect: Option<f64>,
    #[arg(long)]
    refine: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigFile,
}

#[derive(Args)]
struct QveArgs {
    #[arg(long)]
    graphon: Option<PathBuf>,
    #[arg(long)]
    z_re: Option<f64>,
    #[arg(long)]
    z_im: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    gram: bool,
    #[arg(long)]
    aspect: Option<f64>,
    #[arg(long)]
    refine: Option<usize>,
    #[command(flatten)]
    config: ConfigFile,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long)]
    graphon: Option<PathBuf>,
    #[arg(long)]
    emin: Option<f64>,
    #[arg(long)]
    emax: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    gram: bool,
    #[arg(long)]
    aspect: Option<f64>,
    #[arg(long)]
    refine: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigFile,
}

#[derive(Args)]
struct SampleArgs {
    /// Ensemble spec JSON file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output GSPC binary.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigFile,
}

#[derive(Args)]
struct EsdArgs {
    /// Input GSPC binary.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigFile,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    graphon: Option<PathBuf>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    max_order: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    refine: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigFile,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(subcommand)]
    action: ExperimentAction,
}

#[derive(Subcommand)]
enum ExperimentAction {
    /// Print the names of the built-in experiments.
    List,
    /// Run a built-in experiment by name, or a config file.
    Run(ExperimentRunArgs),
}

#[derive(Args)]
struct ExperimentRunArgs {
    /// Built-in experiment name (see `experiment list`).
    #[arg(long, conflicts_with = "config")]
    name: Option<String>,
    /// Experiment config JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_text(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        None => {
            print!("{text}");
            std::io::stdout().flush()?;
            Ok(())
        }
        Some(path) => Ok(std::fs::write(path, text)?),
    }
}

fn load_step(
    path: &Path,
    refine: Option<usize>,
) -> Result<(graphon_spectra_core::graphon::StepGraphon, Option<usize>)> {
    let spec = load_graphon(path)?;
    let panels = refine.unwrap_or(DEFAULT_REFINEMENT);
    let w = spec.to_step(panels)?;
    Ok((w, spec.needs_refinement().then_some(panels)))
}

fn cmd_trees(args: &TreesArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let k = require(merged(args.k, &cfg, "k"), "k")?;
    let format = args
        .format
        .or_else(|| match cfg.get("format").and_then(|v| v.as_str()) {
            Some("dyck") => Some(TreeFormat::Dyck),
            Some("parent") => Some(TreeFormat::Parent),
            _ => None,
        })
        .unwrap_or(TreeFormat::Dyck);
    let cap = merged(args.cap, &cfg, "cap").unwrap_or(DEFAULT_TREE_CAP);
    let trees = enumerate_trees_with_cap(k, cap)?;
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    for t in &trees {
        match format {
            TreeFormat::Dyck => writeln!(out, "{}", tree_to_dyck(t))?,
            TreeFormat::Parent => {
                let line: Vec<String> = t.parents().iter().map(|p| p.to_string()).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
    }
    Ok(())
}

fn cmd_cutnorm(args: &CutnormArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let path = require(merged(args.graphon.clone(), &cfg, "graphon"), "graphon")?;
    let (w, panels) = load_step(&path, merged(args.refine, &cfg, "refine"))?;
    let result: CutNorm = if flag_or(&cfg, args.heuristic, "heuristic") {
        cut_norm_with_mode(w.fractions(), w.weights(), CutNormMode::Heuristic)
    } else if flag_or(&cfg, args.exact, "exact") {
        cut_norm_with_mode(w.fractions(), w.weights(), CutNormMode::Exact)
    } else {
        cut_norm(&w)
    };
    let mut body = json!({
        "value": result.value,
        "exact": result.exact,
    });
    if let Some(p) = panels {
        body["refinement_panels"] = json!(p);
    }
    println!("{}", serde_json::to_string_pretty(&body)?);
    Ok(())
}

fn cmd_moments(args: &MomentsArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let path = require(merged(args.graphon.clone(), &cfg, "graphon"), "graphon")?;
    let max_order = require(merged(args.max_order, &cfg, "max_order"), "max-order")?;
    let (w, _panels) = load_step(&path, merged(args.refine, &cfg, "refine"))?;
    let table = if flag_or(&cfg, args.gram, "gram") {
        let aspect = require(merged(args.aspect, &cfg, "aspect"), "aspect")?;
        gram_moment_table(&w, aspect, max_order)?
    } else {
        moment_table(&w, max_order)?
    };
    let mut text = String::from("order,value,source\n");
    for &(order, value) in table.entries() {
        text.push_str(&format!("{order},{value},{}\n", table.source));
    }
    write_text(&merged(args.out.clone(), &cfg, "out"), &text)
}

fn cmd_qve(args: &QveArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let path = require(merged(args.graphon.clone(), &cfg, "graphon"), "graphon")?;
    let z_re = require(merged(args.z_re, &cfg, "z_re"), "z-re")?;
    let z_im = require(merged(args.z_im, &cfg, "z_im"), "z-im")?;
    let tol = merged(args.tol, &cfg, "tol").unwrap_or(DEFAULT_TOL);
    let max_iter = merged(args.max_iter, &cfg, "max_iter").unwrap_or(DEFAULT_MAX_ITER);
    let (w, panels) = load_step(&path, merged(args.refine, &cfg, "refine"))?;
    let z = Complex64::new(z_re, z_im);
    let (s, residual, iterations) = if flag_or(&cfg, args.gram, "gram") {
        let aspect = require(merged(args.aspect, &cfg, "aspect"), "aspect")?;
        let sol = solve_gram_qve(&w, aspect, z, tol, max_iter)?;
        (sol.s, sol.residual, sol.iterations)
    } else {
        let sol = solve_qve(&w, z, tol, max_iter)?;
        (sol.s, sol.residual, sol.iterations)
    };
    let mut body = json!({
        "s_re": s.re,
        "s_im": s.im,
        "residual": residual,
        "iterations": iterations,
    });
    if let Some(p) = panels {
        body["refinement_panels"] = json!(p);
    }
    println!("{}", serde_json::to_string_pretty(&body)?);
    Ok(())
}

fn cmd_density(args: &DensityArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let path = require(merged(args.graphon.clone(), &cfg, "graphon"), "graphon")?;
    let emin = require(merged(args.emin, &cfg, "emin"), "emin")?;
    let emax = require(merged(args.emax, &cfg, "emax"), "emax")?;
    let points = require(merged(args.points, &cfg, "points"), "points")?;
    let eta = require(merged(args.eta, &cfg, "eta"), "eta")?;
    let aspect = if flag_or(&cfg, args.gram, "gram") {
        Some(require(merged(args.aspect, &cfg, "aspect"), "aspect")?)
    } else {
        None
    };
    let (w, _panels) = load_step(&path, merged(args.refine, &cfg, "refine"))?;
    let curve = density_curve(&w, emin, emax, points, eta, aspect)?;
    let mut text = String::from("E,rho\n");
    for &(e, rho) in &curve.grid {
        text.push_str(&format!("{e},{rho}\n"));
    }
    write_text(&merged(args.out.clone(), &cfg, "out"), &text)
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let spec_path = require(merged(args.spec.clone(), &cfg, "spec"), "spec")?;
    let out = require(merged(args.out.clone(), &cfg, "out"), "out")?;
    let text = std::fs::read_to_string(&spec_path)
        .map_err(|e| Error::Config(format!("cannot read spec {}: {e}", spec_path.display())))?;
    let spec: graphon_spectra_core::models::EnsembleSpec = serde_json::from_str(&text)?;
    let sample = sample_spec(&spec)?;
    write_sample(&out, &sample)?;
    let summary = json!({
        "kind": sample.kind,
        "n": sample.n,
        "m": sample.m,
        "seed": sample.seed,
        "normalization": sample.normalization,
        "outside_theorem_scope": sample.outside_theorem_scope,
        "out": out.display().to_string(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_esd(args: &EsdArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let input = require(merged(args.input.clone(), &cfg, "in"), "in")?;
    let sample = read_sample(&input)?;
    let spectrum = eigenvalues_symmetric(&sample.matrix)?;
    let mut text = String::from("eigenvalue\n");
    for v in spectrum.eigenvalues() {
        text.push_str(&format!("{v}\n"));
    }
    write_text(&merged(args.out.clone(), &cfg, "out"), &text)
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let graphon_path = require(merged(args.graphon.clone(), &cfg, "graphon"), "graphon")?;
    let input = require(merged(args.input.clone(), &cfg, "in"), "in")?;
    let max_order = require(merged(args.max_order, &cfg, "max_order"), "max-order")?;
    let eta = require(merged(args.eta, &cfg, "eta"), "eta")?;
    let points = merged(args.points, &cfg, "points").unwrap_or(241);
    let (w, panels) = load_step(&graphon_path, merged(args.refine, &cfg, "refine"))?;
    let sample = read_sample(&input)?;
    let spectrum = eigenvalues_symmetric(&sample.matrix)?;
    // The stored matrix is always a symmetric normalization, so the
    // prediction is the plain tree-moment table of the (possibly bipartite)
    // kernel; Gram samples carry m > 0 as metadata.
    let predicted = moment_table(&w, max_order)?;
    let empirical = esd_moments(&spectrum, max_order);
    let moment_deltas: Vec<Value> = predicted
        .entries()
        .iter()
        .map(|&(order, pred)| {
            let emp = empirical.get(order).unwrap_or(0.0);
            json!({ "order": order, "predicted": pred, "empirical": emp, "delta": emp - pred })
        })
        .collect();
    let radius = 2.0 * w.sup_norm().sqrt() + 0.5;
    let curve = density_curve(&w, -radius, radius, points, eta, None)?;
    let ks = ks_to_curve(&spectrum, &CurveCdf::new(&curve));
    let hist = histogram_density(&spectrum, 60, (-radius, radius))?;
    let step = 2.0 * radius / (curve.grid.len() - 1) as f64;
    let l1 = l1_density_distance(&hist, |e| {
        let idx = (((e + radius) / step).round() as usize).min(curve.grid.len() - 1);
        curve.grid[idx].1
    });
    let mut body = json!({
        "moment_deltas": moment_deltas,
        "ks_distance": ks,
        "l1_density_distance": l1,
        "eta": eta,
        "n": sample.n,
        "m": sample.m,
    });
    if let Some(p) = panels {
        body["refinement_panels"] = json!(p);
    }
    let text = serde_json::to_string_pretty(&body)?;
    write_text(&merged(args.out.clone(), &cfg, "out"), &format!("{text}\n"))
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<i32> {
    match &args.action {
        ExperimentAction::List => {
            for cfg in builtin_experiments() {
                println!("{}", cfg.name);
            }
            Ok(0)
        }
        ExperimentAction::Run(run) => {
            let cfg = match (&run.name, &run.config) {
                (Some(name), None) => builtin_experiment(name).ok_or_else(|| {
                    Error::Config(format!(
                        "unknown experiment `{name}`; see `graphon-spectra experiment list`"
                    ))
                })?,
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        Error::Config(format!("cannot read config {}: {e}", path.display()))
                    })?;
                    serde_json::from_str(&text)?
                }
                _ => {
                    return Err(Error::Config(
                        "pass exactly one of --name or --config".into(),
                    ))
                }
            };
            let report = run_experiment(&cfg)?;
            let text = serde_json::to_string_pretty(&report)?;
            write_text(&run.out, &format!("{text}\n"))?;
            for check in &report.checks {
                eprintln!(
                    "{}: {} = {:.6} (threshold {:.6})",
                    if check.pass { "pass" } else { "FAIL" },
                    check.name,
                    check.value,
                    check.threshold
                );
            }
            Ok(if report.pass { 0 } else { EXIT_TOLERANCE })
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NonConvergence { .. } | Error::CertificateFailed { .. } => EXIT_NONCONVERGENCE,
        _ => EXIT_CONFIG,
    }
}

fn configure_threads() {
    #[cfg(feature = "parallel")]
    {
        if let Ok(value) = std::env::var("GRAPHON_SPECTRA_THREADS") {
            if let Ok(threads) = value.parse::<usize>() {
                if threads >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .build_global();
                }
            }
        }
    }
}

fn main() {
    configure_threads();
    let cli = Cli::parse();
    let outcome: Result<i32> = match &cli.command {
        Command::Trees(args) => cmd_trees(args).map(|()| 0),
        Command::Cutnorm(args) => cmd_cutnorm(args).map(|()| 0),
        Command::Moments(args) => cmd_moments(args).map(|()| 0),
        Command::Qve(args) => cmd_qve(args).map(|()| 0),
        Command::Density(args) => cmd_density(args).map(|()| 0),
        Command::Sample(args) => cmd_sample(args).map(|()| 0),
        Command::Esd(args) => cmd_esd(args).map(|()| 0),
        Command::Compare(args) => cmd_compare(args).map(|()| 0),
        Command::Experiment(args) => cmd_experiment(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code_for(&err));
        }
    }
}
