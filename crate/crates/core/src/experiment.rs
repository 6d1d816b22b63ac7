//! Reproducible experiments: sample replicates of an ensemble, compute
//! empirical spectra, compare against graphon predictions, and emit a JSON
//! report with per-replicate and averaged deltas plus pass/fail checks.
//!
//! Reports are deterministic given the config (timestamp aside): replicates
//! are keyed by explicit seeds, parallel maps preserve order, and all
//! reductions run sequentially in seed order.

use crate::homdensity;
use crate::io::{GraphonSpec, DEFAULT_REFINEMENT};
use crate::matrix::SquareMatrix;
use crate::models::{self, EnsembleSpec, EntryDist};
use crate::qve;
use crate::spectra::{self, Spectrum};
use crate::{par, Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Inline graphon or a path to a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphonRef {
    Path { path: String },
    Inline(GraphonSpec),
}

impl GraphonRef {
    fn resolve(&self) -> Result<GraphonSpec> {
        match self {
            GraphonRef::Inline(spec) => Ok(spec.clone()),
            GraphonRef::Path { path } => crate::io::load_graphon(std::path::Path::new(path)),
        }
    }
}

/// Grid for the QVE density sweep behind the KS check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Defaults to minus the spectral-radius bound when absent.
    pub emin: Option<f64>,
    pub emax: Option<f64>,
    pub points: usize,
    pub eta: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            emin: None,
            emax: None,
            points: 241,
            eta: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionConfig {
    pub graphon: GraphonRef,
    /// Highest empirical/predicted moment order compared.
    pub max_order: usize,
    #[serde(default)]
    pub grid: GridConfig,
    /// Panels used when the prediction graphon is analytic.
    #[serde(default)]
    pub refine_panels: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative tolerance on even-moment agreement; absent disables the
    /// moment checks (useful when the compared matrix keeps its mean).
    #[serde(default)]
    pub moment_rel: Option<f64>,
    /// Tolerance on the seed-averaged KS distance to the QVE CDF.
    #[serde(default)]
    pub ks: Option<f64>,
    /// Tolerance on the seed-averaged L1 distance between the eigenvalue
    /// histogram and the QVE density.
    #[serde(default)]
    pub l1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub ensemble: EnsembleSpec,
    /// Replicate seeds; empty gives a prediction-only report.
    pub replicates: Vec<u64>,
    pub prediction: PredictionConfig,
    pub tolerances: Tolerances,
    /// Matrix view to compare: absent for the primary normalization, or an
    /// aux name such as "centered".
    #[serde(default)]
    pub compare_matrix: Option<String>,
    /// Enables the perturbation diagnostics (Levy cube bound, rank bound,
    /// Gram pairing) where the ensemble supports them.
    #[serde(default)]
    pub diagnostics: bool,
    /// Validate that expected degrees are equal within 5% and record the
    /// deviation.
    #[serde(default)]
    pub expect_equal_degrees: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub seed: u64,
    pub moments: Vec<(usize, f64)>,
    pub moment_deltas: Vec<(usize, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub tool_version: String,
    pub config_hash: String,
    /// Unix seconds; excluded from determinism comparisons.
    pub timestamp: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement_panels: Option<usize>,
    pub predicted_moments: Vec<(usize, f64)>,
    pub replicates: Vec<ReplicateReport>,
    pub averaged_moments: Vec<(usize, f64)>,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

fn stage<T>(name: &str, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{name}: {msg}")),
        other => Error::Config(format!("{name}: {other}")),
    })
}

fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let canonical = serde_json::to_string(cfg)?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for &s in &cfg.replicates {
        if !seen.insert(s) {
            return Err(Error::Config(format!("duplicate replicate seed {s}")));
        }
    }
    for tol in [cfg.tolerances.moment_rel, cfg.tolerances.ks, cfg.tolerances.l1]
        .into_iter()
        .flatten()
    {
        if !(tol > 0.0) {
            return Err(Error::Config(format!("tolerance {tol} must be positive")));
        }
    }
    if cfg.prediction.grid.points < 2 {
        return Err(Error::Config("grid needs at least 2 points".into()));
    }
    Ok(())
}

/// Aspect ratio when the ensemble is a Gram model.
fn gram_aspect(spec: &EnsembleSpec) -> Option<f64> {
    match spec {
        EnsembleSpec::Gram { m, n, .. } => Some(*m as f64 / *n as f64),
        _ => None,
    }
}

fn equal_degree_deviation(spec: &EnsembleSpec) -> Option<f64> {
    let (sizes, values) = match spec {
        EnsembleSpec::Sbm {
            sizes,
            probabilities,
            ..
        } => (sizes, probabilities),
        EnsembleSpec::BlockMatrix {
            sizes, variances, ..
        } => (sizes, variances),
        _ => return None,
    };
    let degrees: Vec<f64> = values
        .iter()
        .map(|row| {
            row.iter()
                .zip(sizes)
                .map(|(p, &s)| p * s as f64)
                .sum::<f64>()
        })
        .collect();
    let mean = degrees.iter().sum::<f64>() / degrees.len() as f64;
    if mean == 0.0 {
        return Some(0.0);
    }
    Some(
        degrees
            .iter()
            .map(|d| (d - mean).abs() / mean)
            .fold(0.0, f64::max),
    )
}

struct ReplicateOutcome {
    report: ReplicateReport,
    levy_ratio: Option<f64>,
    rank_ratio: Option<f64>,
    pairing_mismatch: Option<f64>,
}

fn spectrum_of(matrix: &SquareMatrix) -> Result<Spectrum> {
    spectra::eigenvalues_symmetric(matrix)
}

fn run_replicate(
    cfg: &ExperimentConfig,
    predicted: &[(usize, f64)],
    curve_cdf: Option<&spectra::CurveCdf>,
    density: Option<&qve::DensityCurve>,
    seed: u64,
) -> Result<ReplicateOutcome> {
    let sample = stage("sampling", models::sample_spec(&cfg.ensemble.with_seed(seed)))?;
    let matrix = match &cfg.compare_matrix {
        None => &sample.matrix,
        Some(name) => sample.aux_matrix(name).ok_or_else(|| {
            Error::Config(format!(
                "compare_matrix `{name}` not produced by the {} sampler",
                sample.kind
            ))
        })?,
    };
    let spectrum = stage("eigensolve", spectrum_of(matrix))?;
    let table = spectra::esd_moments(&spectrum, cfg.prediction.max_order);
    let moments: Vec<(usize, f64)> = table.entries().to_vec();
    let moment_deltas = predicted
        .iter()
        .map(|&(order, pred)| {
            let emp = table.get(order).unwrap_or(0.0);
            (order, emp - pred)
        })
        .collect();
    let ks = curve_cdf.map(|cdf| spectra::ks_to_curve(&spectrum, cdf));
    let l1 = match (density, cfg.tolerances.l1) {
        (Some(curve), Some(_)) => {
            let lo = curve.grid.first().unwrap().0;
            let hi = curve.grid.last().unwrap().0;
            let hist = spectra::histogram_density(&spectrum, 60, (lo, hi))?;
            let reference = |e: f64| {
                // nearest-grid lookup on the uniform QVE grid
                let step = (hi - lo) / (curve.grid.len() - 1) as f64;
                let idx = (((e - lo) / step).round() as usize).min(curve.grid.len() - 1);
                curve.grid[idx].1
            };
            Some(spectra::l1_density_distance(&hist, reference))
        }
        _ => None,
    };

    let mut levy_ratio = None;
    let mut rank_ratio = None;
    let mut pairing_mismatch = None;
    if cfg.diagnostics {
        if sample.kind == "sbm" {
            // Levy cube bound between the scaled and centered views
            let scaled = &sample.matrix;
            let centered = sample.aux_matrix("centered").expect("sbm always emits it");
            let levy = spectra::levy_distance(&spectrum_of(scaled)?, &spectrum_of(centered)?);
            let bound = spectra::levy_cube_bound(scaled, centered)?;
            levy_ratio = Some(if bound > 0.0 {
                levy.powi(3) / bound
            } else {
                f64::from(levy > 0.0)
            });
            // rank bound on the diagonal-sampled pair
            let tilde = sample.aux_matrix("tilde").expect("sbm always emits it");
            let tilde_centered = sample
                .aux_matrix("tilde-centered")
                .expect("sbm always emits it");
            let ks_tilde = spectra::kolmogorov_distance(
                &spectrum_of(tilde)?,
                &spectrum_of(tilde_centered)?,
            );
            let d = match &cfg.ensemble {
                EnsembleSpec::Sbm { sizes, .. } => sizes.len(),
                _ => unreachable!(),
            };
            rank_ratio = Some(ks_tilde * sample.n as f64 / d as f64);
        }
        if sample.kind == "gram" {
            // +/- pairing of the symmetrization spectrum
            let eigenvalues = spectrum.eigenvalues();
            let total = eigenvalues.len();
            let mismatch = (0..total / 2)
                .map(|i| (eigenvalues[i] + eigenvalues[total - 1 - i]).abs())
                .fold(0.0, f64::max);
            pairing_mismatch = Some(mismatch);
        }
    }
    Ok(ReplicateOutcome {
        report: ReplicateReport {
            seed,
            moments,
            moment_deltas,
            ks,
            l1,
        },
        levy_ratio,
        rank_ratio,
        pairing_mismatch,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    validate(cfg)?;
    let spec = stage("prediction-graphon", cfg.prediction.graphon.resolve())?;
    let panels = cfg.prediction.refine_panels.unwrap_or(DEFAULT_REFINEMENT);
    let w = stage("prediction-graphon", spec.to_step(panels))?;
    let refinement_panels = spec.needs_refinement().then_some(panels);

    // predictions; the primary Gram matrix is the symmetrization, whose
    // even moments are plain tree-density sums over the bipartite kernel,
    // so the Gram moment formula applies only when comparing the "gram" aux
    let aspect = gram_aspect(&cfg.ensemble);
    let predicted_table = stage(
        "prediction-moments",
        match (aspect, cfg.compare_matrix.as_deref()) {
            (Some(y), Some("gram")) => {
                homdensity::gram_moment_table(&w, y, cfg.prediction.max_order)
            }
            _ => homdensity::moment_table(&w, cfg.prediction.max_order),
        },
    )?;
    let predicted: Vec<(usize, f64)> = predicted_table.entries().to_vec();

    // optional QVE density for KS / L1 checks
    let needs_curve = cfg.tolerances.ks.is_some() || cfg.tolerances.l1.is_some();
    let (density, curve_cdf) = if needs_curve {
        let radius = 2.0 * w.sup_norm().sqrt() + 0.5;
        let emin = cfg.prediction.grid.emin.unwrap_or(-radius);
        let emax = cfg.prediction.grid.emax.unwrap_or(radius);
        let curve = stage(
            "qve-sweep",
            qve::density_curve(
                &w,
                emin,
                emax,
                cfg.prediction.grid.points,
                cfg.prediction.grid.eta,
                None,
            ),
        )?;
        let cdf = spectra::CurveCdf::new(&curve);
        (Some(curve), Some(cdf))
    } else {
        (None, None)
    };

    // replicates in parallel, reduced in seed order
    let outcomes: Vec<Result<ReplicateOutcome>> = par::map_collect(&cfg.replicates, |&seed| {
        run_replicate(cfg, &predicted, curve_cdf.as_ref(), density.as_ref(), seed)
    });
    let mut replicates = Vec::with_capacity(outcomes.len());
    let mut levy_worst: Option<f64> = None;
    let mut rank_worst: Option<f64> = None;
    let mut pairing_worst: Option<f64> = None;
    for outcome in outcomes {
        let outcome = outcome?;
        for (slot, value) in [
            (&mut levy_worst, outcome.levy_ratio),
            (&mut rank_worst, outcome.rank_ratio),
            (&mut pairing_worst, outcome.pairing_mismatch),
        ] {
            if let Some(v) = value {
                *slot = Some(slot.unwrap_or(f64::NEG_INFINITY).max(v));
            }
        }
        replicates.push(outcome.report);
    }

    // averaged moments
    let averaged_moments: Vec<(usize, f64)> = if replicates.is_empty() {
        Vec::new()
    } else {
        (0..=cfg.prediction.max_order)
            .map(|order| {
                let sum: f64 = replicates
                    .iter()
                    .map(|r| {
                        r.moments
                            .iter()
                            .find(|(o, _)| *o == order)
                            .map(|(_, v)| *v)
                            .unwrap_or(0.0)
                    })
                    .sum();
                (order, sum / replicates.len() as f64)
            })
            .collect()
    };

    // checks
    let mut checks = Vec::new();
    if let (Some(tol), false) = (cfg.tolerances.moment_rel, replicates.is_empty()) {
        for &(order, pred) in &predicted {
            if order == 0 || order % 2 != 0 || pred.abs() < 1e-12 {
                continue;
            }
            let avg = averaged_moments
                .iter()
                .find(|(o, _)| *o == order)
                .map(|(_, v)| *v)
                .unwrap_or(0.0);
            let rel = (avg - pred).abs() / pred.abs();
            checks.push(CheckResult {
                name: format!("moment-{order}-rel-delta"),
                value: rel,
                threshold: tol,
                pass: rel <= tol,
            });
        }
    }
    if let (Some(tol), false) = (cfg.tolerances.ks, replicates.is_empty()) {
        let mean_ks = replicates.iter().filter_map(|r| r.ks).sum::<f64>()
            / replicates.len() as f64;
        checks.push(CheckResult {
            name: "ks-to-qve-cdf".into(),
            value: mean_ks,
            threshold: tol,
            pass: mean_ks <= tol,
        });
    }
    if let (Some(tol), false) = (cfg.tolerances.l1, replicates.is_empty()) {
        let mean_l1 = replicates.iter().filter_map(|r| r.l1).sum::<f64>()
            / replicates.len() as f64;
        checks.push(CheckResult {
            name: "l1-density-distance".into(),
            value: mean_l1,
            threshold: tol,
            pass: mean_l1 <= tol,
        });
    }
    if let Some(value) = levy_worst {
        checks.push(CheckResult {
            name: "levy-cube-bound-ratio".into(),
            value,
            threshold: 1.0 + 1e-9,
            pass: value <= 1.0 + 1e-9,
        });
    }
    if let Some(value) = rank_worst {
        checks.push(CheckResult {
            name: "rank-bound-ratio".into(),
            value,
            threshold: 1.0 + 1e-9,
            pass: value <= 1.0 + 1e-9,
        });
    }
    if let Some(value) = pairing_worst {
        checks.push(CheckResult {
            name: "gram-pairing-mismatch".into(),
            value,
            threshold: 1e-8,
            pass: value <= 1e-8,
        });
    }
    if cfg.expect_equal_degrees {
        if let Some(value) = equal_degree_deviation(&cfg.ensemble) {
            checks.push(CheckResult {
                name: "equal-degree-deviation".into(),
                value,
                threshold: 0.05,
                pass: value <= 0.05,
            });
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(ExperimentReport {
        name: cfg.name.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(cfg)?,
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        refinement_panels,
        predicted_moments: predicted,
        replicates,
        averaged_moments,
        checks,
        pass,
    })
}

/// Serializes a report with the timestamp zeroed, for byte-level comparison.
pub fn report_canonical_json(report: &ExperimentReport) -> Result<String> {
    let mut clone = report.clone();
    clone.timestamp = 0;
    Ok(serde_json::to_string_pretty(&clone)?)
}

fn checkerboard_probabilities(d: usize, low: f64, high: f64) -> Vec<Vec<f64>> {
    (0..d)
        .map(|k| {
            (0..d)
                .map(|l| if (k + l) % 2 == 0 { high } else { low })
                .collect()
        })
        .collect()
}

/// Exact limiting variance graphon of an SBM under the
/// `A/(sigma sqrt(n))` normalization: `s_kl = p_kl (1 - p_kl) / sigma^2`.
fn sbm_limit_graphon(sizes: &[usize], probabilities: &[Vec<f64>]) -> GraphonSpec {
    let n: usize = sizes.iter().sum();
    let p_sup = probabilities
        .iter()
        .flatten()
        .fold(0.0f64, |m, &p| m.max(p));
    let sigma_sq = p_sup * (1.0 - p_sup);
    let fractions: Vec<f64> = sizes.iter().map(|&s| s as f64 / n as f64).collect();
    let weights: Vec<Vec<f64>> = probabilities
        .iter()
        .map(|row| row.iter().map(|&p| p * (1.0 - p) / sigma_sq).collect())
        .collect();
    GraphonSpec::Step { fractions, weights }
}

/// The named experiment catalog; each entry reproduces one of the studied
/// model families at desk scale.
pub fn builtin_experiments() -> Vec<ExperimentConfig> {
    let mut catalog = Vec::new();

    // classical semicircle for the constant profile
    catalog.push(ExperimentConfig {
        name: "semicircle-gw".into(),
        ensemble: EnsembleSpec::GeneralizedWigner {
            n: 2000,
            graphon: GraphonSpec::Constant { value: 1.0 },
            dist: EntryDist::Gaussian,
            seed: 0,
        },
        replicates: vec![1, 2, 3],
        prediction: PredictionConfig {
            graphon: GraphonRef::Inline(GraphonSpec::Constant { value: 1.0 }),
            max_order: 6,
            grid: GridConfig::default(),
            refine_panels: None,
        },
        tolerances: Tolerances {
            moment_rel: Some(0.05),
            ks: None,
            l1: None,
        },
        compare_matrix: None,
        diagnostics: false,
        expect_equal_degrees: false,
    });

    // inhomogeneous random graph with equal expected degrees: sparse SBM
    // whose variance profile has constant row integrals
    {
        let n = 1024usize;
        let alpha = 1.0 / (n as f64).sqrt();
        let sizes = vec![n / 2, n / 2];
        let probabilities = vec![
            vec![1.5 * alpha, 0.5 * alpha],
            vec![0.5 * alpha, 1.5 * alpha],
        ];
        let limit = sbm_limit_graphon(&sizes, &probabilities);
        catalog.push(ExperimentConfig {
            name: "inhomog-degree".into(),
            ensemble: EnsembleSpec::Sbm {
                sizes,
                probabilities,
                seed: 0,
            },
            replicates: vec![1, 2],
            prediction: PredictionConfig {
                graphon: GraphonRef::Inline(limit),
                max_order: 6,
                grid: GridConfig::default(),
                refine_panels: None,
            },
            tolerances: Tolerances {
                moment_rel: Some(0.10),
                ks: Some(0.08),
                l1: None,
            },
            compare_matrix: Some("centered".into()),
            diagnostics: false,
            expect_equal_degrees: true,
        });
    }

    // sparse W-random graph from the product kernel
    catalog.push(ExperimentConfig {
        name: "w-random-sparse".into(),
        ensemble: EnsembleSpec::WRandomGraph {
            n: 1024,
            graphon: GraphonSpec::Analytic {
                name: "product".into(),
                scale: 1.0,
            },
            rho: 1.0 / 32.0,
            seed: 0,
        },
        replicates: vec![1, 2],
        prediction: PredictionConfig {
            graphon: GraphonRef::Inline(GraphonSpec::Analytic {
                name: "product".into(),
                scale: 1.0,
            }),
            max_order: 6,
            grid: GridConfig::default(),
            refine_panels: Some(128),
        },
        tolerances: Tolerances {
            moment_rel: Some(0.10),
            ks: None,
            l1: None,
        },
        compare_matrix: Some("centered".into()),
        diagnostics: false,
        expect_equal_degrees: false,
    });

    // fixed number of blocks
    {
        let sizes = vec![410usize, 307, 307];
        let variances = vec![
            vec![2.0, 1.0, 0.5],
            vec![1.0, 1.5, 1.0],
            vec![0.5, 1.0, 1.0],
        ];
        let n: usize = sizes.iter().sum();
        let fractions: Vec<f64> = sizes.iter().map(|&s| s as f64 / n as f64).collect();
        catalog.push(ExperimentConfig {
            name: "block-fixed-d".into(),
            ensemble: EnsembleSpec::BlockMatrix {
                sizes,
                variances: variances.clone(),
                dist: EntryDist::Gaussian,
                seed: 0,
            },
            replicates: vec![1, 2],
            prediction: PredictionConfig {
                graphon: GraphonRef::Inline(GraphonSpec::Step {
                    fractions,
                    weights: variances,
                }),
                max_order: 6,
                grid: GridConfig::default(),
                refine_panels: None,
            },
            tolerances: Tolerances {
                moment_rel: Some(0.08),
                ks: Some(0.08),
                l1: Some(0.25),
            },
            compare_matrix: None,
            diagnostics: false,
            expect_equal_degrees: false,
        });
    }

    // geometric block fractions with a lumped small-class tail
    {
        let spec = models::GrowingBlockSpec {
            gamma: 2.0,
            alpha: 0.75,
            big_same: 2.0,
            big_cross: 1.0,
            big_small: 0.75,
            small_small: 0.5,
        };
        let model = models::growing_block_model(&spec, 1024).expect("static config");
        catalog.push(ExperimentConfig {
            name: "block-growing-d".into(),
            ensemble: EnsembleSpec::BlockMatrix {
                sizes: model.sizes.clone(),
                variances: model.variances.clone(),
                dist: EntryDist::Gaussian,
                seed: 0,
            },
            replicates: vec![1, 2],
            prediction: PredictionConfig {
                graphon: GraphonRef::Inline(GraphonSpec::from_step(&model.limit)),
                max_order: 6,
                grid: GridConfig::default(),
                refine_panels: None,
            },
            tolerances: Tolerances {
                moment_rel: Some(0.10),
                ks: None,
                l1: None,
            },
            compare_matrix: None,
            diagnostics: false,
            expect_equal_degrees: false,
        });
    }

    // sparse SBM with many blocks, compared through the CDF
    {
        let n = 1024usize;
        let d = 16usize;
        let scale = 1.0 / (n as f64).sqrt();
        let sizes = vec![n / d; d];
        let probabilities = checkerboard_probabilities(d, 0.3 * scale, 0.7 * scale);
        let limit = sbm_limit_graphon(&sizes, &probabilities);
        catalog.push(ExperimentConfig {
            name: "sbm-sparse".into(),
            ensemble: EnsembleSpec::Sbm {
                sizes,
                probabilities,
                seed: 0,
            },
            replicates: vec![1, 2],
            prediction: PredictionConfig {
                graphon: GraphonRef::Inline(limit),
                max_order: 6,
                grid: GridConfig::default(),
                refine_panels: None,
            },
            tolerances: Tolerances {
                moment_rel: None,
                ks: Some(0.08),
                l1: None,
            },
            compare_matrix: None,
            diagnostics: true,
            expect_equal_degrees: false,
        });
    }

    // dense SBM with d = floor(sqrt(n)) blocks and the perturbation
    // diagnostics active
    {
        let n = 1024usize;
        let d = 32usize;
        let sizes = vec![n / d; d];
        let probabilities = checkerboard_probabilities(d, 0.3, 0.7);
        let limit = sbm_limit_graphon(&sizes, &probabilities);
        catalog.push(ExperimentConfig {
            name: "sbm-dense".into(),
            ensemble: EnsembleSpec::Sbm {
                sizes,
                probabilities,
                seed: 0,
            },
            replicates: vec![1, 2],
            prediction: PredictionConfig {
                graphon: GraphonRef::Inline(limit),
                max_order: 6,
                grid: GridConfig::default(),
                refine_panels: None,
            },
            tolerances: Tolerances {
                moment_rel: None,
                ks: Some(0.08),
                l1: None,
            },
            compare_matrix: None,
            diagnostics: true,
            expect_equal_degrees: false,
        });
    }

    // Marchenko-Pastur via the Gram symmetrization, y = 1
    catalog.push(ExperimentConfig {
        name: "gram-mp".into(),
        ensemble: EnsembleSpec::Gram {
            m: 512,
            n: 512,
            graphon: GraphonSpec::Step {
                fractions: vec![0.5, 0.5],
                weights: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            },
            dist: EntryDist::Gaussian,
            seed: 0,
        },
        replicates: vec![1, 2],
        prediction: PredictionConfig {
            graphon: GraphonRef::Inline(GraphonSpec::Step {
                fractions: vec![0.5, 0.5],
                weights: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            }),
            max_order: 6,
            grid: GridConfig::default(),
            refine_panels: None,
        },
        tolerances: Tolerances {
            moment_rel: Some(0.08),
            ks: None,
            l1: None,
        },
        compare_matrix: None,
        diagnostics: true,
        expect_equal_degrees: false,
    });

    // rectangular Gram matrix with a genuine variance profile, y = 1/2
    {
        let (m, n) = (512usize, 1024usize);
        let left = m as f64 / (m + n) as f64;
        let fractions = vec![left * 0.5, left * 0.5, (1.0 - left) * 0.5, (1.0 - left) * 0.5];
        let weights = vec![
            vec![0.0, 0.0, 1.0, 2.0],
            vec![0.0, 0.0, 0.5, 1.5],
            vec![1.0, 0.5, 0.0, 0.0],
            vec![2.0, 1.5, 0.0, 0.0],
        ];
        let spec = GraphonSpec::Step { fractions, weights };
        catalog.push(ExperimentConfig {
            name: "gram-profile".into(),
            ensemble: EnsembleSpec::Gram {
                m,
                n,
                graphon: spec.clone(),
                dist: EntryDist::Gaussian,
                seed: 0,
            },
            replicates: vec![1, 2],
            prediction: PredictionConfig {
                graphon: GraphonRef::Inline(spec),
                max_order: 6,
                grid: GridConfig::default(),
                refine_panels: None,
            },
            tolerances: Tolerances {
                moment_rel: Some(0.08),
                ks: None,
                l1: None,
            },
            compare_matrix: None,
            diagnostics: true,
            expect_equal_degrees: false,
        });
    }

    catalog
}

pub fn builtin_experiment(name: &str) -> Option<ExperimentConfig> {
    builtin_experiments().into_iter().find(|c| c.name == name)
}
