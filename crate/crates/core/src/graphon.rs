//! Step graphons (variance profiles), a small catalog of analytic kernels,
//! and cut-norm / cut-distance computations.
//!
//! A step graphon is piecewise constant on a product of block intervals:
//! block measures `fractions` (positive, summing to 1) and a symmetric
//! non-negative `weights` matrix. The cut norm of a step kernel is a
//! bilinear maximization over the box `[0,1]^{2d}`, attained at vertices,
//! so it is computed exactly by scanning one side's subsets and optimizing
//! the other side coordinatewise.

use crate::par;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

const FRACTION_SUM_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;
const PROFILE_SYMMETRY_TOL: f64 = 1e-9;

/// Number of one-side subsets scanned exactly; above this block count the
/// cut norm falls back to alternating maximization.
pub const CUT_NORM_EXACT_CAP: usize = 16;
/// Largest block count for which the cut distance searches all permutations.
pub const CUT_DISTANCE_EXACT_CAP: usize = 8;

/// Piecewise-constant symmetric kernel on `[0,1]^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepGraphon {
    fractions: Vec<f64>,
    weights: Vec<Vec<f64>>,
}

impl StepGraphon {
    pub fn new(fractions: Vec<f64>, weights: Vec<Vec<f64>>) -> Result<Self> {
        let d = fractions.len();
        if d == 0 {
            return Err(Error::InvalidGraphon("no blocks".into()));
        }
        if fractions.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidGraphon(
                "fractions must be strictly positive and finite".into(),
            ));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(Error::InvalidGraphon(format!(
                "fractions sum to {sum}, expected 1 within {FRACTION_SUM_TOL:e}"
            )));
        }
        if weights.len() != d || weights.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidGraphon(format!(
                "weights must be a {d}x{d} matrix"
            )));
        }
        for i in 0..d {
            for j in 0..d {
                let w = weights[i][j];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidGraphon(format!(
                        "weight[{i}][{j}] = {w} must be finite and non-negative"
                    )));
                }
                if (w - weights[j][i]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidGraphon(format!(
                        "weights asymmetric at ({i},{j}): {w} vs {}",
                        weights[j][i]
                    )));
                }
            }
        }
        Ok(Self { fractions, weights })
    }

    /// Constant graphon as a single block.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![vec![value]])
    }

    pub fn block_count(&self) -> usize {
        self.fractions.len()
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i][j]
    }

    /// `sup |W| = max weight`.
    pub fn sup_norm(&self) -> f64 {
        self.weights
            .iter()
            .flatten()
            .fold(0.0f64, |m, &w| m.max(w.abs()))
    }

    /// Cumulative block boundaries `0 = c_0 < c_1 < ... < c_d = 1`.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.fractions.len() + 1);
        c.push(0.0);
        let mut acc = 0.0;
        for &a in &self.fractions {
            acc += a;
            c.push(acc);
        }
        *c.last_mut().unwrap() = 1.0;
        c
    }

    /// Block index of a coordinate; intervals are right-open, the final
    /// block is closed at 1.
    pub fn block_of(&self, x: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::CoordinateOutOfRange { value: x });
        }
        let mut acc = 0.0;
        for (i, &a) in self.fractions.iter().enumerate() {
            acc += a;
            if x < acc {
                return Ok(i);
            }
        }
        Ok(self.fractions.len() - 1)
    }

    /// Kernel value at `(x, y)`.
    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.weights[self.block_of(x)?][self.block_of(y)?])
    }

    /// Row integral per block: entry `i` is `sum_j weights[i][j] * fractions[j]`.
    pub fn degree_function(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.fractions)
                    .map(|(w, a)| w * a)
                    .sum::<f64>()
            })
            .collect()
    }

    /// Applies the measure-weighted block operator to a vector:
    /// `(W v)_i = sum_j weights[i][j] * fractions[j] * v[j]`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.fractions)
                    .zip(v)
                    .map(|((w, a), x)| w * a * x)
                    .sum()
            })
            .collect()
    }

    /// Reorders blocks by a permutation: block `i` of the result is block
    /// `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let d = self.block_count();
        debug_assert_eq!(perm.len(), d);
        let fractions = perm.iter().map(|&p| self.fractions[p]).collect();
        let weights = perm
            .iter()
            .map(|&pi| perm.iter().map(|&pj| self.weights[pi][pj]).collect())
            .collect();
        Self { fractions, weights }
    }
}

/// Closed catalog of analytic kernels; arbitrary kernels enter through step
/// refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AnalyticGraphon {
    Constant(f64),
    /// `scale * x * y`
    Product { scale: f64 },
    /// `scale * min(x, y)`
    Min { scale: f64 },
    /// `scale * max(x, y)`
    Max { scale: f64 },
    /// A user-provided step refinement evaluated as an analytic kernel.
    Step(StepGraphon),
}

impl AnalyticGraphon {
    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::CoordinateOutOfRange { value: x });
        }
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::CoordinateOutOfRange { value: y });
        }
        Ok(match self {
            AnalyticGraphon::Constant(c) => *c,
            AnalyticGraphon::Product { scale } => scale * x * y,
            AnalyticGraphon::Min { scale } => scale * x.min(y),
            AnalyticGraphon::Max { scale } => scale * x.max(y),
            AnalyticGraphon::Step(w) => w.evaluate(x, y)?,
        })
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            AnalyticGraphon::Constant(c) => c.abs(),
            AnalyticGraphon::Product { scale }
            | AnalyticGraphon::Min { scale }
            | AnalyticGraphon::Max { scale } => scale.abs(),
            AnalyticGraphon::Step(w) => w.sup_norm(),
        }
    }

    /// Midpoint-rule step refinement with `panels` equal blocks.
    pub fn refine(&self, panels: usize) -> Result<StepGraphon> {
        if let AnalyticGraphon::Step(w) = self {
            return Ok(w.clone());
        }
        if panels == 0 {
            return Err(Error::InvalidArgument("refinement needs >= 1 panel".into()));
        }
        let d = panels;
        let fractions = vec![1.0 / d as f64; d];
        let mut weights = vec![vec![0.0; d]; d];
        for i in 0..d {
            let x = (i as f64 + 0.5) / d as f64;
            for j in 0..=i {
                let y = (j as f64 + 0.5) / d as f64;
                let v = self.evaluate(x, y)?;
                weights[i][j] = v;
                weights[j][i] = v;
            }
        }
        StepGraphon::new(fractions, weights)
    }
}

/// Builds the graphon representation of a variance profile matrix: `n` equal
/// blocks with the profile as weights. Asymmetry up to `1e-9` is tolerated
/// and symmetrized away.
pub fn from_variance_profile(profile: &[Vec<f64>]) -> Result<StepGraphon> {
    let n = profile.len();
    if n == 0 || profile.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidGraphon("profile must be square".into()));
    }
    for i in 0..n {
        for j in 0..n {
            let delta = (profile[i][j] - profile[j][i]).abs();
            if delta > PROFILE_SYMMETRY_TOL {
                return Err(Error::InvalidGraphon(format!(
                    "profile asymmetric at ({i},{j}) by {delta:e}"
                )));
            }
        }
    }
    let fractions = vec![1.0 / n as f64; n];
    let weights = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (profile[i][j] + profile[j][i])).collect())
        .collect();
    StepGraphon::new(fractions, weights)
}

/// Cut norm value together with its mode: `exact` is false when the value is
/// only a certified lower bound from alternating maximization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutNorm {
    pub value: f64,
    pub exact: bool,
}

/// Cut norm of a step graphon.
pub fn cut_norm(w: &StepGraphon) -> CutNorm {
    cut_norm_signed(w.fractions(), w.weights())
}

/// Cut norm of a (possibly signed) step kernel. Signed weights arise as
/// differences of graphons; fractions must still be a valid block measure.
pub fn cut_norm_signed(fractions: &[f64], weights: &[Vec<f64>]) -> CutNorm {
    let mode = if fractions.len() <= CUT_NORM_EXACT_CAP {
        CutNormMode::Exact
    } else {
        CutNormMode::Heuristic
    };
    cut_norm_with_mode(fractions, weights, mode)
}

/// Cut norm computation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutNormMode {
    /// Exact subset scan regardless of the block count (exponential in d).
    Exact,
    /// Alternating maximization with restarts; certified lower bound.
    Heuristic,
}

pub fn cut_norm_with_mode(fractions: &[f64], weights: &[Vec<f64>], mode: CutNormMode) -> CutNorm {
    match mode {
        CutNormMode::Exact => CutNorm {
            value: cut_norm_exact(fractions, weights),
            exact: true,
        },
        CutNormMode::Heuristic => CutNorm {
            value: cut_norm_heuristic(fractions, weights, 32),
            exact: false,
        },
    }
}

/// Measure-weighted mass matrix `m[i][j] = w[i][j] * a[i] * a[j]`.
fn mass_matrix(fractions: &[f64], weights: &[Vec<f64>]) -> Vec<Vec<f64>> {
    weights
        .iter()
        .zip(fractions)
        .map(|(row, &ai)| {
            row.iter()
                .zip(fractions)
                .map(|(&w, &aj)| w * ai * aj)
                .collect()
        })
        .collect()
}

/// Given column sums `c_j` over the chosen row set, the best column choice
/// takes every positive entry (or every negative one, for the absolute value).
fn best_column_value(col_sums: &[f64]) -> f64 {
    let pos: f64 = col_sums.iter().filter(|&&c| c > 0.0).sum();
    let neg: f64 = col_sums.iter().filter(|&&c| c < 0.0).sum();
    pos.max(-neg)
}

/// Exact bilinear maximization: Gray-code scan over row subsets with O(d)
/// column-sum updates per step. O(2^d * d).
fn cut_norm_exact(fractions: &[f64], weights: &[Vec<f64>]) -> f64 {
    let d = fractions.len();
    let m = mass_matrix(fractions, weights);
    let total: u64 = 1u64 << d;
    // Split the Gray scan into chunks so the subsets can be processed in
    // parallel; the max reduction is order-independent.
    let chunks = 64u64.min(total);
    let chunk_len = total / chunks;
    let maxima = par::map_range(chunks as usize, |ci| {
        let start = ci as u64 * chunk_len;
        let end = start + chunk_len;
        let gray = |v: u64| v ^ (v >> 1);
        let mut col_sums = vec![0.0f64; d];
        let mut current = gray(start);
        for j in 0..d {
            for i in 0..d {
                if current >> i & 1 == 1 {
                    col_sums[j] += m[i][j];
                }
            }
        }
        let mut best = best_column_value(&col_sums);
        for v in start + 1..end {
            let next = gray(v);
            let flipped = (current ^ next).trailing_zeros() as usize;
            if next >> flipped & 1 == 1 {
                for j in 0..d {
                    col_sums[j] += m[flipped][j];
                }
            } else {
                for j in 0..d {
                    col_sums[j] -= m[flipped][j];
                }
            }
            current = next;
            let val = best_column_value(&col_sums);
            if val > best {
                best = val;
            }
        }
        best
    });
    maxima.into_iter().fold(0.0, f64::max)
}

/// Alternating maximization with seeded restarts; returns a lower bound.
fn cut_norm_heuristic(fractions: &[f64], weights: &[Vec<f64>], restarts: u32) -> f64 {
    use rand::{Rng, SeedableRng};
    let d = fractions.len();
    let m = mass_matrix(fractions, weights);
    let mut best = 0.0f64;
    for r in 0..restarts {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6375_746e + r as u64);
        let rows: Vec<bool> = (0..d).map(|_| rng.random::<bool>()).collect();
        // maximize +sum and -sum separately
        for sign in [1.0f64, -1.0] {
            let mut local_rows = rows.clone();
            let mut value = f64::NEG_INFINITY;
            for _ in 0..64 {
                // best columns for fixed rows
                let col_sums: Vec<f64> = (0..d)
                    .map(|j| {
                        (0..d)
                            .filter(|&i| local_rows[i])
                            .map(|i| m[i][j])
                            .sum::<f64>()
                    })
                    .collect();
                let cols: Vec<bool> = col_sums.iter().map(|&c| sign * c > 0.0).collect();
                // best rows for fixed columns
                let row_sums: Vec<f64> = (0..d)
                    .map(|i| {
                        (0..d)
                            .filter(|&j| cols[j])
                            .map(|j| m[i][j])
                            .sum::<f64>()
                    })
                    .collect();
                let new_rows: Vec<bool> = row_sums.iter().map(|&c| sign * c > 0.0).collect();
                let new_value: f64 = (0..d)
                    .filter(|&i| new_rows[i])
                    .map(|i| {
                        (0..d)
                            .filter(|&j| cols[j])
                            .map(|j| m[i][j])
                            .sum::<f64>()
                    })
                    .sum::<f64>()
                    * sign;
                if new_value <= value {
                    break;
                }
                value = new_value;
                local_rows = new_rows;
            }
            best = best.max(value);
        }
    }
    best
}

/// Common refinement of two block partitions: merged boundaries plus, for
/// each refined cell, the source block index in each input.
fn common_refinement(w1: &StepGraphon, w2: &StepGraphon) -> (Vec<f64>, Vec<usize>, Vec<usize>) {
    let b1 = w1.boundaries();
    let b2 = w2.boundaries();
    let mut cuts: Vec<f64> = b1.iter().chain(b2.iter()).copied().collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut fractions = Vec::new();
    let mut idx1 = Vec::new();
    let mut idx2 = Vec::new();
    let locate = |bounds: &[f64], x: f64| -> usize {
        // block containing midpoint x
        match bounds.iter().rposition(|&c| c <= x) {
            Some(i) => i.min(bounds.len() - 2),
            None => 0,
        }
    };
    for pair in cuts.windows(2) {
        let width = pair[1] - pair[0];
        if width <= 1e-15 {
            continue;
        }
        let mid = 0.5 * (pair[0] + pair[1]);
        fractions.push(width);
        idx1.push(locate(&b1, mid));
        idx2.push(locate(&b2, mid));
    }
    (fractions, idx1, idx2)
}

fn refined_difference(
    w1: &StepGraphon,
    w2: &StepGraphon,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (fractions, idx1, idx2) = common_refinement(w1, w2);
    let d = fractions.len();
    let mut diff = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            diff[i][j] = w1.weight(idx1[i], idx1[j]) - w2.weight(idx2[i], idx2[j]);
        }
    }
    (fractions, diff)
}

/// Upper bound on the cut distance: minimum over block permutations of `w1`
/// of the cut norm of the difference on the common refinement. Exhaustive
/// for at most [`CUT_DISTANCE_EXACT_CAP`] blocks, greedy matching beyond.
pub fn cut_distance_upper(w1: &StepGraphon, w2: &StepGraphon) -> f64 {
    let d = w1.block_count();
    let perms: Vec<Vec<usize>> = if d <= CUT_DISTANCE_EXACT_CAP {
        permutations(d)
    } else {
        vec![greedy_matching(w1, w2)]
    };
    let values = par::map_collect(&perms, |perm| {
        let permuted = w1.permuted(perm);
        let (fractions, diff) = refined_difference(&permuted, w2);
        cut_norm_signed(&fractions, &diff).value
    });
    values.into_iter().fold(f64::INFINITY, f64::min)
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut all = Vec::new();
    let mut items: Vec<usize> = (0..d).collect();
    heap_permute(&mut items, d, &mut all);
    all
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// Pairs blocks by (fraction, degree) similarity; a cheap stand-in for the
/// permutation search when the block count is large.
fn greedy_matching(w1: &StepGraphon, w2: &StepGraphon) -> Vec<usize> {
    let d1 = w1.block_count();
    let d2 = w2.block_count();
    let deg1 = w1.degree_function();
    let deg2 = w2.degree_function();
    let mut used = vec![false; d1];
    let mut perm = Vec::with_capacity(d1);
    for t in 0..d1 {
        let (target_frac, target_deg) = if t < d2 {
            (w2.fractions()[t], deg2[t])
        } else {
            (0.0, 0.0)
        };
        let pick = (0..d1)
            .filter(|&i| !used[i])
            .min_by(|&a, &b| {
                let ca = (w1.fractions()[a] - target_frac).abs() + (deg1[a] - target_deg).abs();
                let cb = (w1.fractions()[b] - target_frac).abs() + (deg1[b] - target_deg).abs();
                ca.partial_cmp(&cb).unwrap()
            })
            .unwrap();
        used[pick] = true;
        perm.push(pick);
    }
    perm
}
