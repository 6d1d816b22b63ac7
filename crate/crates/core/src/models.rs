//! Samplers for the random matrix ensembles under study, with the exact
//! centering and scaling conventions of the corresponding limit theorems.
//!
//! Randomness is counter-based: entry `(i, j)` is drawn from its own stream
//! keyed by `(seed, i, j)`, so a sample is reproducible bit for bit
//! regardless of traversal order or thread count. Wigner-type samplers draw
//! the diagonal with its profile variance; graph samplers force a zero
//! diagonal. Entry distributions are a fixed catalog with mean 0 and
//! variance 1 before scaling, so Lindeberg's condition holds automatically.

use crate::graphon::{AnalyticGraphon, StepGraphon};
use crate::io::{GraphonSpec, DEFAULT_REFINEMENT};
use crate::matrix::SquareMatrix;
use crate::rng::{entry_rng, Namespace};
use crate::{par, Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Sparse samples with `n * rho` below this are stamped as outside the
/// `n rho -> infinity` regime of the limit theorems.
pub const SPARSITY_SCOPE_FLOOR: f64 = 10.0;

/// Entry distributions, all mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryDist {
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    UniformPm,
}

impl std::str::FromStr for EntryDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(EntryDist::Gaussian),
            "rademacher" => Ok(EntryDist::Rademacher),
            "uniform-pm" => Ok(EntryDist::UniformPm),
            other => Err(Error::UnknownDistribution(other.to_string())),
        }
    }
}

impl EntryDist {
    fn draw(self, rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
        match self {
            EntryDist::Gaussian => StandardNormal.sample(rng),
            EntryDist::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryDist::UniformPm => (rng.random::<f64>() * 2.0 - 1.0) * 3.0f64.sqrt(),
        }
    }

    /// Upper bound on `|xi|`, infinite for unbounded laws.
    pub fn bound(self) -> f64 {
        match self {
            EntryDist::Gaussian => f64::INFINITY,
            EntryDist::Rademacher => 1.0,
            EntryDist::UniformPm => 3.0f64.sqrt(),
        }
    }
}

/// Variance profile input: a step graphon evaluated blockwise, or an
/// explicit symmetric matrix.
#[derive(Debug, Clone)]
pub enum Profile {
    Graphon(StepGraphon),
    Explicit(Vec<Vec<f64>>),
}

impl Profile {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            Profile::Graphon(_) => Ok(()),
            Profile::Explicit(s) => {
                if s.len() != n || s.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidModel(format!(
                        "explicit profile must be {n}x{n}"
                    )));
                }
                for i in 0..n {
                    for j in 0..n {
                        let v = s[i][j];
                        if !v.is_finite() || v < 0.0 {
                            return Err(Error::InvalidModel(format!(
                                "profile entry ({i},{j}) = {v} must be finite and >= 0"
                            )));
                        }
                        if (v - s[j][i]).abs() > 1e-9 {
                            return Err(Error::InvalidModel(format!(
                                "profile asymmetric at ({i},{j})"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Entry variance for index pair `(i, j)` out of `n`; graphons are
    /// evaluated at index midpoints.
    fn variance(&self, i: usize, j: usize, n: usize) -> f64 {
        match self {
            Profile::Graphon(w) => {
                let x = (i as f64 + 0.5) / n as f64;
                let y = (j as f64 + 0.5) / n as f64;
                w.evaluate(x, y).expect("midpoints lie in [0,1]")
            }
            Profile::Explicit(s) => s[i][j],
        }
    }

    /// Row averages `1/n sum_j s_ij` (the generalized-Wigner condition
    /// checks these against 1).
    pub fn row_degree(&self, n: usize) -> Vec<f64> {
        match self {
            Profile::Graphon(_) => (0..n)
                .map(|i| (0..n).map(|j| self.variance(i, j, n)).sum::<f64>() / n as f64)
                .collect(),
            Profile::Explicit(s) => s
                .iter()
                .map(|row| row.iter().sum::<f64>() / n as f64)
                .collect(),
        }
    }
}

/// Ensemble description; the JSON schema of the `sample` subcommand mirrors
/// these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnsembleSpec {
    WignerType {
        n: usize,
        graphon: GraphonSpec,
        dist: EntryDist,
        seed: u64,
    },
    GeneralizedWigner {
        n: usize,
        graphon: GraphonSpec,
        dist: EntryDist,
        seed: u64,
    },
    WRandomGraph {
        n: usize,
        graphon: GraphonSpec,
        rho: f64,
        seed: u64,
    },
    BlockMatrix {
        sizes: Vec<usize>,
        variances: Vec<Vec<f64>>,
        dist: EntryDist,
        seed: u64,
    },
    Sbm {
        sizes: Vec<usize>,
        probabilities: Vec<Vec<f64>>,
        seed: u64,
    },
    Gram {
        m: usize,
        n: usize,
        graphon: GraphonSpec,
        dist: EntryDist,
        seed: u64,
    },
}

impl EnsembleSpec {
    pub fn seed(&self) -> u64 {
        match self {
            EnsembleSpec::WignerType { seed, .. }
            | EnsembleSpec::GeneralizedWigner { seed, .. }
            | EnsembleSpec::WRandomGraph { seed, .. }
            | EnsembleSpec::BlockMatrix { seed, .. }
            | EnsembleSpec::Sbm { seed, .. }
            | EnsembleSpec::Gram { seed, .. } => *seed,
        }
    }

    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            EnsembleSpec::WignerType { seed, .. }
            | EnsembleSpec::GeneralizedWigner { seed, .. }
            | EnsembleSpec::WRandomGraph { seed, .. }
            | EnsembleSpec::BlockMatrix { seed, .. }
            | EnsembleSpec::Sbm { seed, .. }
            | EnsembleSpec::Gram { seed, .. } => *seed = new_seed,
        }
        spec
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            EnsembleSpec::WignerType { .. } => "wigner-type",
            EnsembleSpec::GeneralizedWigner { .. } => "generalized-wigner",
            EnsembleSpec::WRandomGraph { .. } => "w-random-graph",
            EnsembleSpec::BlockMatrix { .. } => "block-matrix",
            EnsembleSpec::Sbm { .. } => "sbm",
            EnsembleSpec::Gram { .. } => "gram",
        }
    }
}

/// One sampled matrix plus its auxiliary normalizations.
///
/// `matrix` is the theorem-matched normalization of the model (`A/sqrt(n)`,
/// `A/(sigma sqrt(n))`, `A/sqrt(n rho)`, or `H/sqrt(n+m)`); `aux` holds the
/// other views (raw adjacency, centered variants, the Gram matrix itself).
#[derive(Debug, Clone)]
pub struct EnsembleSample {
    pub kind: &'static str,
    /// Primary side length `n`; for Gram samples the matrix is the
    /// `(n+m) x (n+m)` symmetrization.
    pub n: usize,
    /// Left dimension `m` for Gram samples, otherwise 0.
    pub m: usize,
    pub matrix: SquareMatrix,
    pub aux: Vec<(String, SquareMatrix)>,
    pub latent: Option<Vec<f64>>,
    pub seed: u64,
    /// What the raw entries were divided by.
    pub normalization: String,
    /// Set when the sparsity sits below the `n rho -> infinity` regime.
    pub outside_theorem_scope: bool,
    pub spec: Option<EnsembleSpec>,
}

impl EnsembleSample {
    pub fn aux_matrix(&self, name: &str) -> Option<&SquareMatrix> {
        self.aux
            .iter()
            .find(|(label, _)| label == name)
            .map(|(_, m)| m)
    }
}

/// Fills a symmetric matrix: `value(i, j)` is called once per upper-triangle
/// pair (including the diagonal) and mirrored.
fn fill_symmetric<F>(n: usize, value: F) -> SquareMatrix
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    let mut a = SquareMatrix::zeros(n);
    par::for_each_row(a.data_mut(), n, |i, row| {
        for (j, slot) in row.iter_mut().enumerate().skip(i) {
            *slot = value(i, j);
        }
    });
    a.mirror_upper();
    a
}

/// General Wigner-type matrix `M = A/sqrt(n)` with entry variances from the
/// profile; independent entries up to symmetry, diagonal included.
pub fn sample_wigner_type(
    profile: &Profile,
    n: usize,
    dist: EntryDist,
    seed: u64,
) -> Result<EnsembleSample> {
    if n == 0 {
        return Err(Error::InvalidModel("n must be positive".into()));
    }
    profile.validate(n)?;
    let scale = 1.0 / (n as f64).sqrt();
    let matrix = fill_symmetric(n, |i, j| {
        let sd = profile.variance(i, j, n).sqrt();
        if sd == 0.0 {
            return 0.0;
        }
        let mut rng = entry_rng(seed, Namespace::Entry, i as u64, j as u64);
        sd * dist.draw(&mut rng) * scale
    });
    Ok(EnsembleSample {
        kind: "wigner-type",
        n,
        m: 0,
        matrix,
        aux: Vec::new(),
        latent: None,
        seed,
        normalization: "A / sqrt(n)".into(),
        outside_theorem_scope: false,
        spec: None,
    })
}

/// Wigner-type sampling with the generalized-Wigner row condition
/// `|1/n sum_j s_ij - 1| <= 0.01` validated first.
pub fn sample_generalized_wigner(
    profile: &Profile,
    n: usize,
    dist: EntryDist,
    seed: u64,
) -> Result<EnsembleSample> {
    profile.validate(n)?;
    let degrees = match profile {
        Profile::Graphon(w) => w.degree_function(),
        Profile::Explicit(_) => profile.row_degree(n),
    };
    for (i, &deg) in degrees.iter().enumerate() {
        if (deg - 1.0).abs() > 0.01 {
            return Err(Error::InvalidModel(format!(
                "row {i} of the variance profile averages {deg}, not 1 within 0.01"
            )));
        }
    }
    let mut sample = sample_wigner_type(profile, n, dist, seed)?;
    sample.kind = "generalized-wigner";
    Ok(sample)
}

/// Sparse W-random graph: latent uniform coordinates, edges Bernoulli
/// `rho W(x_i, x_j)`, zero diagonal. The primary matrix is `A/sqrt(n rho)`;
/// aux holds the raw adjacency and the conditionally centered
/// `(A - E[A|x]) / sqrt(n rho)`.
pub fn sample_w_random_graph(
    w: &AnalyticGraphon,
    n: usize,
    rho: f64,
    seed: u64,
) -> Result<EnsembleSample> {
    if n == 0 {
        return Err(Error::InvalidModel("n must be positive".into()));
    }
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::InvalidModel(format!("invalid sparsity {rho}")));
    }
    let sup = w.sup_norm();
    if rho * sup > 1.0 + 1e-12 {
        return Err(Error::InvalidModel(format!(
            "rho * sup W = {} exceeds 1",
            rho * sup
        )));
    }
    let latent: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = entry_rng(seed, Namespace::Latent, i as u64, 0);
            rng.random::<f64>()
        })
        .collect();
    let adjacency = fill_symmetric(n, |i, j| {
        if i == j {
            return 0.0;
        }
        let p = rho * w.evaluate(latent[i], latent[j]).expect("latent in [0,1]");
        let mut rng = entry_rng(seed, Namespace::Entry, i as u64, j as u64);
        if rng.random::<f64>() < p {
            1.0
        } else {
            0.0
        }
    });
    let scale = if rho > 0.0 {
        1.0 / (n as f64 * rho).sqrt()
    } else {
        0.0 // empty graph; every normalized view is the zero matrix
    };
    let mut primary = adjacency.clone();
    primary.scale(scale);
    let centered = {
        let mut c = SquareMatrix::zeros(n);
        par::for_each_row(c.data_mut(), n, |i, row| {
            for (j, slot) in row.iter_mut().enumerate() {
                if i == j {
                    continue;
                }
                let mean = rho * w.evaluate(latent[i], latent[j]).expect("latent in [0,1]");
                *slot = (adjacency.get(i, j) - mean) * scale;
            }
        });
        c
    };
    Ok(EnsembleSample {
        kind: "w-random-graph",
        n,
        m: 0,
        matrix: primary,
        aux: vec![
            ("adjacency".into(), adjacency),
            ("centered".into(), centered),
        ],
        latent: Some(latent),
        seed,
        normalization: if rho > 0.0 {
            "A / sqrt(n*rho)".into()
        } else {
            "zero (rho = 0)".into()
        },
        outside_theorem_scope: n as f64 * rho < SPARSITY_SCOPE_FLOOR,
        spec: None,
    })
}

/// Block index of each row for given block sizes.
fn block_index(sizes: &[usize]) -> Vec<usize> {
    let mut idx = Vec::with_capacity(sizes.iter().sum());
    for (b, &s) in sizes.iter().enumerate() {
        idx.extend(std::iter::repeat(b).take(s));
    }
    idx
}

fn validate_block_matrix(sizes: &[usize], values: &[Vec<f64>], what: &str) -> Result<()> {
    let d = sizes.len();
    if d == 0 || sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidModel("block sizes must be positive".into()));
    }
    if values.len() != d || values.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidModel(format!(
            "{what} matrix must be {d}x{d} to match {d} blocks"
        )));
    }
    for i in 0..d {
        for j in 0..d {
            if (values[i][j] - values[j][i]).abs() > 1e-12 {
                return Err(Error::InvalidModel(format!(
                    "{what} matrix asymmetric at ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

/// Random block matrix `A/sqrt(n)` with entry variance `s_kl` on block
/// `(k, l)`.
pub fn sample_block_matrix(
    sizes: &[usize],
    variances: &[Vec<f64>],
    dist: EntryDist,
    seed: u64,
) -> Result<EnsembleSample> {
    validate_block_matrix(sizes, variances, "variance")?;
    if variances
        .iter()
        .flatten()
        .any(|&v| !v.is_finite() || v < 0.0)
    {
        return Err(Error::InvalidModel(
            "variances must be finite and non-negative".into(),
        ));
    }
    let n: usize = sizes.iter().sum();
    let blocks = block_index(sizes);
    let scale = 1.0 / (n as f64).sqrt();
    let matrix = fill_symmetric(n, |i, j| {
        let sd = variances[blocks[i]][blocks[j]].sqrt();
        if sd == 0.0 {
            return 0.0;
        }
        let mut rng = entry_rng(seed, Namespace::Entry, i as u64, j as u64);
        sd * dist.draw(&mut rng) * scale
    });
    Ok(EnsembleSample {
        kind: "block-matrix",
        n,
        m: 0,
        matrix,
        aux: Vec::new(),
        latent: None,
        seed,
        normalization: "A / sqrt(n)".into(),
        outside_theorem_scope: false,
    spec: None,
    })
}

/// Stochastic block model adjacency with zero diagonal. The primary matrix
/// is `A/(sigma sqrt(n))` with `sigma^2 = p(1-p)`, `p = max p_kl` taken
/// from the configured matrix. Aux views: raw adjacency, centered
/// `(A - EA)/(sigma sqrt(n))`, and the diagonal-sampled variants used by the
/// rank-bound route (`tilde`, `tilde-centered`).
pub fn sample_sbm(sizes: &[usize], probabilities: &[Vec<f64>], seed: u64) -> Result<EnsembleSample> {
    validate_block_matrix(sizes, probabilities, "probability")?;
    if probabilities
        .iter()
        .flatten()
        .any(|&p| !(0.0..=1.0).contains(&p))
    {
        return Err(Error::InvalidModel(
            "probabilities must lie in [0, 1]".into(),
        ));
    }
    let n: usize = sizes.iter().sum();
    let blocks = block_index(sizes);
    let p_sup = probabilities
        .iter()
        .flatten()
        .fold(0.0f64, |m, &p| m.max(p));
    let sigma = (p_sup * (1.0 - p_sup)).sqrt();
    let scale = if sigma > 0.0 {
        1.0 / (sigma * (n as f64).sqrt())
    } else {
        0.0
    };
    let adjacency = fill_symmetric(n, |i, j| {
        if i == j {
            return 0.0;
        }
        let p = probabilities[blocks[i]][blocks[j]];
        let mut rng = entry_rng(seed, Namespace::Entry, i as u64, j as u64);
        if rng.random::<f64>() < p {
            1.0
        } else {
            0.0
        }
    });
    let mut primary = adjacency.clone();
    primary.scale(scale);
    let mut centered = SquareMatrix::zeros(n);
    par::for_each_row(centered.data_mut(), n, |i, row| {
        for (j, slot) in row.iter_mut().enumerate() {
            if i == j {
                continue;
            }
            *slot = (adjacency.get(i, j) - probabilities[blocks[i]][blocks[j]]) * scale;
        }
    });
    // tilde: same off-diagonal entries, diagonal sampled with p_kk, so the
    // expectation becomes blockwise constant of rank <= d
    let mut tilde = adjacency.clone();
    for i in 0..n {
        let p = probabilities[blocks[i]][blocks[i]];
        let mut rng = entry_rng(seed, Namespace::Diagonal, i as u64, 0);
        if rng.random::<f64>() < p {
            tilde.set(i, i, 1.0);
        }
    }
    let mut tilde_centered = SquareMatrix::zeros(n);
    par::for_each_row(tilde_centered.data_mut(), n, |i, row| {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = (tilde.get(i, j) - probabilities[blocks[i]][blocks[j]]) * scale;
        }
    });
    let mut tilde_scaled = tilde.clone();
    tilde_scaled.scale(scale);
    Ok(EnsembleSample {
        kind: "sbm",
        n,
        m: 0,
        matrix: primary,
        aux: vec![
            ("adjacency".into(), adjacency),
            ("centered".into(), centered),
            ("tilde".into(), tilde_scaled),
            ("tilde-centered".into(), tilde_centered),
        ],
        latent: None,
        seed,
        normalization: if sigma > 0.0 {
            "A / (sigma*sqrt(n)), sigma^2 = p(1-p), p = max p_kl".into()
        } else {
            "zero (p = 0)".into()
        },
        outside_theorem_scope: n as f64 * p_sup < SPARSITY_SCOPE_FLOOR,
        spec: None,
    })
}

/// Random Gram sample: `X` is `m x n` with `Var x_ij = s_ij`; the primary
/// matrix is the symmetrization `H/sqrt(n+m)` and aux holds `M = X X^T / n`.
pub fn sample_gram(
    m: usize,
    n: usize,
    w: &StepGraphon,
    dist: EntryDist,
    seed: u64,
) -> Result<EnsembleSample> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidModel("m and n must be positive".into()));
    }
    let y = m as f64 / n as f64;
    crate::homdensity::check_bipartite(w, y)?;
    let total = m + n;
    // X stored row-major m x n
    let mut x = vec![0.0f64; m * n];
    par::for_each_row(&mut x, n, |i, row| {
        let u = (i as f64 + 0.5) / total as f64;
        for (j, slot) in row.iter_mut().enumerate() {
            let v = (m as f64 + j as f64 + 0.5) / total as f64;
            let sd = w.evaluate(u, v).expect("in range").sqrt();
            if sd == 0.0 {
                continue;
            }
            let mut rng = entry_rng(seed, Namespace::Entry, i as u64, j as u64);
            *slot = sd * dist.draw(&mut rng);
        }
    });
    let h_scale = 1.0 / (total as f64).sqrt();
    let mut h = SquareMatrix::zeros(total);
    par::for_each_row(h.data_mut(), total, |r, row| {
        if r < m {
            for j in 0..n {
                row[m + j] = x[r * n + j] * h_scale;
            }
        } else {
            let j = r - m;
            for (i, slot) in row.iter_mut().enumerate().take(m) {
                *slot = x[i * n + j] * h_scale;
            }
        }
    });
    let mut gram = SquareMatrix::zeros(m);
    par::for_each_row(gram.data_mut(), m, |i, row| {
        for (k, slot) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                acc += x[i * n + j] * x[k * n + j];
            }
            *slot = acc / n as f64;
        }
    });
    Ok(EnsembleSample {
        kind: "gram",
        n,
        m,
        matrix: h,
        aux: vec![("gram".into(), gram)],
        latent: None,
        seed,
        normalization: "H / sqrt(n+m); gram aux is X X^T / n".into(),
        outside_theorem_scope: false,
        spec: None,
    })
}

/// Samples any [`EnsembleSpec`], echoing the spec into the result.
pub fn sample_spec(spec: &EnsembleSpec) -> Result<EnsembleSample> {
    let mut sample = match spec {
        EnsembleSpec::WignerType {
            n,
            graphon,
            dist,
            seed,
        } => sample_wigner_type(
            &Profile::Graphon(graphon.to_step(DEFAULT_REFINEMENT)?),
            *n,
            *dist,
            *seed,
        )?,
        EnsembleSpec::GeneralizedWigner {
            n,
            graphon,
            dist,
            seed,
        } => sample_generalized_wigner(
            &Profile::Graphon(graphon.to_step(DEFAULT_REFINEMENT)?),
            *n,
            *dist,
            *seed,
        )?,
        EnsembleSpec::WRandomGraph {
            n,
            graphon,
            rho,
            seed,
        } => sample_w_random_graph(&graphon.to_analytic()?, *n, *rho, *seed)?,
        EnsembleSpec::BlockMatrix {
            sizes,
            variances,
            dist,
            seed,
        } => sample_block_matrix(sizes, variances, *dist, *seed)?,
        EnsembleSpec::Sbm {
            sizes,
            probabilities,
            seed,
        } => sample_sbm(sizes, probabilities, *seed)?,
        EnsembleSpec::Gram {
            m,
            n,
            graphon,
            dist,
            seed,
        } => sample_gram(*m, *n, &graphon.to_step(DEFAULT_REFINEMENT)?, *dist, *seed)?,
    };
    sample.spec = Some(spec.clone());
    Ok(sample)
}

/// Geometric block layout with an optional lumped tail of small classes:
/// `alpha_i = alpha (gamma - 1) / gamma^i`. With `alpha = 1` the last class
/// absorbs the remainder; with `alpha < 1` the remainder is split into
/// classes of size about `sqrt(n)`, whose pairwise variances are forced to
/// a shared constant so a limiting step graphon exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowingBlockSpec {
    pub gamma: f64,
    /// Total mass of the big classes; 1 for no small tail.
    pub alpha: f64,
    /// Variance on diagonal big blocks.
    pub big_same: f64,
    /// Variance between distinct big blocks.
    pub big_cross: f64,
    /// Variance between a big and a small class.
    pub big_small: f64,
    /// Variance between small classes.
    pub small_small: f64,
}

/// Realized sizes, block variances, and the limiting step graphon of a
/// growing-block configuration at matrix size `n`.
#[derive(Debug, Clone)]
pub struct GrowingBlockModel {
    pub sizes: Vec<usize>,
    pub variances: Vec<Vec<f64>>,
    pub limit: StepGraphon,
    pub big_classes: usize,
}

pub fn growing_block_model(spec: &GrowingBlockSpec, n: usize) -> Result<GrowingBlockModel> {
    if !(spec.gamma > 1.0) {
        return Err(Error::InvalidModel("gamma must exceed 1".into()));
    }
    if !(spec.alpha > 0.0 && spec.alpha <= 1.0) {
        return Err(Error::InvalidModel("alpha must lie in (0, 1]".into()));
    }
    let mut sizes = Vec::new();
    let mut used = 0usize;
    let mut i = 1u32;
    loop {
        let alpha_i = spec.alpha * (spec.gamma - 1.0) / spec.gamma.powi(i as i32);
        let sz = (n as f64 * alpha_i).floor() as usize;
        if sz == 0 {
            break;
        }
        sizes.push(sz);
        used += sz;
        i += 1;
    }
    if sizes.is_empty() {
        return Err(Error::InvalidModel(format!(
            "n = {n} too small for gamma = {}",
            spec.gamma
        )));
    }
    let big = sizes.len();
    let remainder = n - used;
    if (spec.alpha - 1.0).abs() < 1e-12 {
        // case alpha = 1: last big class absorbs the remainder
        *sizes.last_mut().unwrap() += remainder;
    } else {
        let small_size = (n as f64).sqrt().ceil() as usize;
        let mut left = remainder;
        while left > 0 {
            let sz = small_size.min(left);
            sizes.push(sz);
            left -= sz;
        }
    }
    let d = sizes.len();
    let mut variances = vec![vec![0.0; d]; d];
    for k in 0..d {
        for l in 0..d {
            variances[k][l] = match (k < big, l < big) {
                (true, true) => {
                    if k == l {
                        spec.big_same
                    } else {
                        spec.big_cross
                    }
                }
                (true, false) | (false, true) => spec.big_small,
                (false, false) => spec.small_small,
            };
        }
    }
    // limiting graphon: realized big fractions plus one lumped tail block
    let mut fractions: Vec<f64> = sizes[..big].iter().map(|&s| s as f64 / n as f64).collect();
    let tail = 1.0 - fractions.iter().sum::<f64>();
    let mut weights: Vec<Vec<f64>> = (0..big)
        .map(|k| {
            (0..big)
                .map(|l| if k == l { spec.big_same } else { spec.big_cross })
                .collect()
        })
        .collect();
    if tail > 1e-12 {
        fractions.push(tail);
        for (k, row) in weights.iter_mut().enumerate().take(big) {
            let _ = k;
            row.push(spec.big_small);
        }
        let mut last: Vec<f64> = vec![spec.big_small; big];
        last.push(spec.small_small);
        weights.push(last);
    } else {
        // normalize away float drift
        let total: f64 = fractions.iter().sum();
        fractions.iter_mut().for_each(|f| *f /= total);
    }
    Ok(GrowingBlockModel {
        sizes,
        variances,
        limit: StepGraphon::new(fractions, weights)?,
        big_classes: big,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_graphon(c: f64) -> Profile {
        Profile::Graphon(StepGraphon::constant(c).unwrap())
    }

    #[test]
    fn wigner_type_basics() {
        let s = sample_wigner_type(&constant_graphon(1.0), 400, EntryDist::Gaussian, 7).unwrap();
        assert_eq!(s.matrix.dim(), 400);
        assert_eq!(s.matrix.asymmetry(), 0.0);
        // empirical variance of scaled entries is 1/n within a loose gate
        let n = 400;
        let mut sum_sq = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sum_sq += s.matrix.get(i, j).powi(2);
                }
            }
        }
        let var = sum_sq / (n * (n - 1)) as f64 * n as f64;
        assert!((var - 1.0).abs() < 0.05, "var = {var}");

        let zero = sample_wigner_type(&constant_graphon(0.0), 16, EntryDist::Gaussian, 7).unwrap();
        assert_eq!(zero.matrix.max_abs(), 0.0);
    }

    #[test]
    fn per_block_variances_match_profile() {
        let w = StepGraphon::new(vec![0.5, 0.5], vec![vec![1.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let n = 1000;
        let s = sample_wigner_type(&Profile::Graphon(w), n, EntryDist::Gaussian, 3).unwrap();
        let half = n / 2;
        let mut acc = [[0.0f64; 2]; 2];
        let mut count = [[0usize; 2]; 2];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (bi, bj) = ((i >= half) as usize, (j >= half) as usize);
                acc[bi][bj] += s.matrix.get(i, j).powi(2);
                count[bi][bj] += 1;
            }
        }
        let expect = [[1.0, 2.0], [2.0, 3.0]];
        for bi in 0..2 {
            for bj in 0..2 {
                let var = acc[bi][bj] / count[bi][bj] as f64 * n as f64;
                let rel = (var - expect[bi][bj]).abs() / expect[bi][bj];
                assert!(rel < 0.05, "block ({bi},{bj}): {var}");
            }
        }
    }

    #[test]
    fn determinism_and_seed_sensitivity() {
        let p = constant_graphon(1.0);
        let a = sample_wigner_type(&p, 64, EntryDist::Rademacher, 11).unwrap();
        let b = sample_wigner_type(&p, 64, EntryDist::Rademacher, 11).unwrap();
        let c = sample_wigner_type(&p, 64, EntryDist::Rademacher, 12).unwrap();
        assert_eq!(a.matrix.data(), b.matrix.data());
        assert_ne!(a.matrix.data(), c.matrix.data());
    }

    #[test]
    fn generalized_wigner_row_condition() {
        let ok = Profile::Graphon(
            StepGraphon::new(vec![0.5, 0.5], vec![vec![1.5, 0.5], vec![0.5, 1.5]]).unwrap(),
        );
        assert!(sample_generalized_wigner(&ok, 64, EntryDist::Gaussian, 1).is_ok());

        let bad = Profile::Graphon(
            StepGraphon::new(vec![0.5, 0.5], vec![vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap(),
        );
        assert!(matches!(
            sample_generalized_wigner(&bad, 64, EntryDist::Gaussian, 1),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn lindeberg_truncation_vanishes_for_bounded_entries() {
        // rademacher entries are bounded by sqrt(sup s); once eta sqrt(n)
        // exceeds that bound the truncated second-moment sum is exactly 0
        let s = sample_wigner_type(&constant_graphon(1.0), 256, EntryDist::Rademacher, 5).unwrap();
        let eta = 0.5;
        let threshold = eta * (256.0f64).sqrt();
        let violations = s
            .matrix
            .data()
            .iter()
            .filter(|&&a| (a * 256.0f64.sqrt()).abs() >= threshold)
            .count();
        assert_eq!(violations, 0);
    }

    #[test]
    fn w_random_graph_basics() {
        let w = AnalyticGraphon::Constant(1.0);
        let n = 600;
        let rho = 0.05;
        let s = sample_w_random_graph(&w, n, rho, 21).unwrap();
        let adj = s.aux_matrix("adjacency").unwrap();
        assert_eq!(adj.get(0, 0), 0.0);
        assert!(!s.outside_theorem_scope);
        // Erdos-Renyi reduction: edge count within 4 sigma of the binomial mean
        let edges: f64 = (0..n)
            .map(|i| (i + 1..n).map(|j| adj.get(i, j)).sum::<f64>())
            .sum();
        let pairs = (n * (n - 1) / 2) as f64;
        let mean = rho * pairs;
        let sd = (pairs * rho * (1.0 - rho)).sqrt();
        assert!((edges - mean).abs() < 4.0 * sd, "{edges} vs {mean}");
        // latent recorded
        assert_eq!(s.latent.as_ref().unwrap().len(), n);

        // product kernel: expected edge count rho * C(n,2) * t(edge, W) = /4
        let w = AnalyticGraphon::Product { scale: 1.0 };
        let s = sample_w_random_graph(&w, n, rho, 22).unwrap();
        let adj = s.aux_matrix("adjacency").unwrap();
        let edges: f64 = (0..n)
            .map(|i| (i + 1..n).map(|j| adj.get(i, j)).sum::<f64>())
            .sum();
        let mean = rho * pairs * 0.25;
        // conditioning on latent inflates the variance; stay loose
        assert!((edges - mean).abs() < 0.25 * mean, "{edges} vs {mean}");
    }

    #[test]
    fn w_random_graph_edge_cases() {
        let w = AnalyticGraphon::Constant(1.0);
        let s = sample_w_random_graph(&w, 32, 0.0, 1).unwrap();
        assert_eq!(s.matrix.max_abs(), 0.0);
        assert!(s.outside_theorem_scope);
        assert!(sample_w_random_graph(&w, 32, 1.5, 1).is_err());
    }

    #[test]
    fn block_matrix_basics() {
        // d = 1 reduces to plain Wigner-type
        let s = sample_block_matrix(&[64], &[vec![1.0]], EntryDist::Gaussian, 2).unwrap();
        let w = sample_wigner_type(&constant_graphon(1.0), 64, EntryDist::Gaussian, 2).unwrap();
        assert_eq!(s.matrix.data(), w.matrix.data());

        let bip = sample_block_matrix(
            &[32, 32],
            &[vec![0.0, 1.0], vec![1.0, 0.0]],
            EntryDist::Gaussian,
            3,
        )
        .unwrap();
        for i in 0..32 {
            for j in 0..32 {
                assert_eq!(bip.matrix.get(i, j), 0.0);
            }
        }
        assert!(sample_block_matrix(&[4, 4], &[vec![1.0]], EntryDist::Gaussian, 0).is_err());
    }

    #[test]
    fn sbm_basics() {
        let n = 800;
        let s = sample_sbm(&[n / 2, n / 2], &[vec![0.3, 0.1], vec![0.1, 0.5]], 9).unwrap();
        let adj = s.aux_matrix("adjacency").unwrap();
        for i in 0..n {
            assert_eq!(adj.get(i, i), 0.0);
        }
        // per-block edge densities within 4 sigma
        let half = n / 2;
        let expect = [[0.3, 0.1], [0.1, 0.5]];
        let mut edges = [[0.0f64; 2]; 2];
        let mut pairs = [[0.0f64; 2]; 2];
        for i in 0..n {
            for j in i + 1..n {
                let (bi, bj) = ((i >= half) as usize, (j >= half) as usize);
                edges[bi][bj] += adj.get(i, j);
                pairs[bi][bj] += 1.0;
            }
        }
        for (bi, bj) in [(0usize, 0usize), (0, 1), (1, 1)] {
            let p = expect[bi][bj];
            let sd = (pairs[bi][bj] * p * (1.0 - p)).sqrt();
            assert!(
                (edges[bi][bj] - p * pairs[bi][bj]).abs() < 4.0 * sd,
                "block ({bi},{bj}): {} vs {}",
                edges[bi][bj],
                p * pairs[bi][bj]
            );
        }
        // tilde differs from adjacency only on the diagonal
        let tilde = s.aux_matrix("tilde").unwrap();
        let scaled = &s.matrix;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    assert_eq!(tilde.get(i, j), scaled.get(i, j));
                }
            }
        }

        // P = 0 gives the empty graph
        let empty = sample_sbm(&[16, 16], &[vec![0.0, 0.0], vec![0.0, 0.0]], 1).unwrap();
        assert_eq!(empty.aux_matrix("adjacency").unwrap().max_abs(), 0.0);

        assert!(sample_sbm(&[8, 8], &[vec![0.5, 1.4], vec![1.4, 0.5]], 1).is_err());
    }

    fn mp_graphon(m: usize, n: usize) -> StepGraphon {
        let left = m as f64 / (m + n) as f64;
        StepGraphon::new(
            vec![left, 1.0 - left],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn gram_basics() {
        let (m, n) = (48, 80);
        let s = sample_gram(m, n, &mp_graphon(m, n), EntryDist::Gaussian, 4).unwrap();
        assert_eq!(s.matrix.dim(), m + n);
        assert_eq!(s.matrix.asymmetry(), 0.0);
        // diagonal super-blocks are zero
        for i in 0..m {
            for j in 0..m {
                assert_eq!(s.matrix.get(i, j), 0.0);
            }
        }
        // tr H^2 = 2 tr(X X^T) exactly (H unscaled); with scaling,
        // tr (H/sqrt(n+m))^2 = 2 n tr(M)/ (n+m) for M = XX^T/n
        let gram = s.aux_matrix("gram").unwrap();
        let lhs = s.matrix.frobenius_sq(); // = tr H_scaled^2
        let rhs = 2.0 * n as f64 * gram.trace() / (m + n) as f64;
        assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0));
    }

    #[test]
    fn growing_block_layout() {
        let spec = GrowingBlockSpec {
            gamma: 2.0,
            alpha: 1.0,
            big_same: 2.0,
            big_cross: 1.0,
            big_small: 0.75,
            small_small: 0.5,
        };
        let model = growing_block_model(&spec, 1024).unwrap();
        assert_eq!(model.sizes.iter().sum::<usize>(), 1024);
        assert_eq!(model.big_classes, model.sizes.len());
        // geometric decay of the big classes
        assert!(model.sizes[0] >= model.sizes[1]);
        assert_eq!(model.limit.block_count(), model.big_classes);

        let spec = GrowingBlockSpec {
            alpha: 0.75,
            ..spec
        };
        let model = growing_block_model(&spec, 1024).unwrap();
        assert_eq!(model.sizes.iter().sum::<usize>(), 1024);
        assert!(model.big_classes < model.sizes.len());
        // small classes are o(n)-sized and share variances
        let d = model.sizes.len();
        let big = model.big_classes;
        for k in big..d {
            assert!(model.sizes[k] <= 33);
            for l in big..d {
                assert_eq!(model.variances[k][l], 0.5);
            }
            for l in 0..big {
                assert_eq!(model.variances[k][l], 0.75);
            }
        }
        // the limit lumps the tail into one block
        assert_eq!(model.limit.block_count(), big + 1);
    }

    #[test]
    fn spec_roundtrip_and_dispatch() {
        let spec = EnsembleSpec::Sbm {
            sizes: vec![16, 16],
            probabilities: vec![vec![0.4, 0.2], vec![0.2, 0.4]],
            seed: 5,
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"sbm\""));
        let back: EnsembleSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        let a = sample_spec(&spec).unwrap();
        let b = sample_spec(&back).unwrap();
        assert_eq!(a.matrix.data(), b.matrix.data());
        assert_eq!(a.spec.as_ref().unwrap(), &spec);
        assert_eq!(a.seed, 5);
        let reseeded = sample_spec(&spec.with_seed(6)).unwrap();
        assert_ne!(a.matrix.data(), reseeded.matrix.data());
    }

    #[test]
    fn distribution_parsing() {
        use std::str::FromStr;
        assert_eq!(EntryDist::from_str("gaussian").unwrap(), EntryDist::Gaussian);
        assert_eq!(
            EntryDist::from_str("uniform-pm").unwrap(),
            EntryDist::UniformPm
        );
        assert!(matches!(
            EntryDist::from_str("cauchy"),
            Err(Error::UnknownDistribution(_))
        ));
    }
}
