//! Limiting spectral distributions of Wigner-type random matrices via graphons.
//!
//! The library has three layers:
//!
//! * **Predictions.** Rooted planar trees ([`trees`]) index the moment
//!   formulas; homomorphism densities of trees into step graphons
//!   ([`graphon`], [`homdensity`]) give the limiting moments; the quadratic
//!   vector equation solver ([`qve`]) gives the limiting Stieltjes transform
//!   and, through Stieltjes inversion, the spectral density.
//! * **Samples.** [`models`] draws the matrix ensembles (Wigner-type, block,
//!   W-random graphs, stochastic block models, Gram matrices) with exact
//!   centering and scaling conventions and reproducible counter-based
//!   randomness.
//! * **Comparison.** [`spectra`] computes eigenvalues, empirical moments and
//!   transforms, and CDF distances; [`experiment`] ties prediction and
//!   sampling into reproducible experiment reports.
//!
//! With the default `parallel` feature the data-parallel inner loops
//! (per-tree moment sums, matrix sampling, subset scans) run on rayon;
//! without it the same code paths run sequentially. Results are bitwise
//! identical either way: parallel maps collect in deterministic order and
//! reductions are performed sequentially.

pub mod experiment;
pub mod graphon;
pub mod homdensity;
pub mod io;
pub mod matrix;
pub mod models;
mod par;
pub mod qve;
mod rng;
pub mod spectra;
pub mod trees;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("tree order {k} exceeds the enumeration cap {cap}")]
    TreeCapExceeded { k: usize, cap: usize },
    #[error("malformed Dyck word: {0}")]
    MalformedDyckWord(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid graphon: {0}")]
    InvalidGraphon(String),
    #[error("coordinate {value} outside [0,1]")]
    CoordinateOutOfRange { value: f64 },
    #[error("matrix is not bipartite across the {split} split: {detail}")]
    NotBipartite { split: f64, detail: String },
    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("z must lie in the upper half plane, got imaginary part {im}")]
    NotUpperHalfPlane { im: f64 },
    #[error("unknown entry distribution `{0}`")]
    UnknownDistribution(String),
    #[error("invalid model parameters: {0}")]
    InvalidModel(String),
    #[error("matrix asymmetry {asymmetry:.3e} exceeds tolerance {tolerance:.3e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },
    #[error("dimension {n} exceeds the dense solver cap {cap}")]
    DimensionCap { n: usize, cap: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigenvalue residual certificate failed: {residual:.3e} > {bound:.3e}")]
    CertificateFailed { residual: f64, bound: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("malformed sample file: {0}")]
    MalformedSample(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
