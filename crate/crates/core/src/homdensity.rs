//! Homomorphism densities from rooted planar trees into step graphons and
//! the moment formulas built from them.
//!
//! For a step kernel the density integral collapses to an exact bottom-up
//! message pass over blocks: the message of a vertex in block `i` is the
//! product over its children of `sum_j weights[i][j] * fractions[j] *
//! message(child in j)`, giving `O(k d^2)` per tree. The 2k-th moment of the
//! limiting spectral distribution is the sum of plain densities over all
//! `C_k` trees; odd moments vanish.

use crate::graphon::{AnalyticGraphon, StepGraphon};
use crate::trees::{self, RootedPlanarTree, StarredTree, DEFAULT_TREE_CAP};
use crate::{par, Error, Result};
use serde::{Deserialize, Serialize};

/// Provenance of a moment sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentSource {
    TreeDensity,
    Empirical,
    QveSeries,
}

impl std::fmt::Display for MomentSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MomentSource::TreeDensity => "tree-density",
            MomentSource::Empirical => "empirical",
            MomentSource::QveSeries => "qve-series",
        })
    }
}

/// Moment sequence `order -> value` with provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentTable {
    entries: Vec<(usize, f64)>,
    pub source: MomentSource,
    pub max_order: usize,
}

impl MomentTable {
    pub fn new(entries: Vec<(usize, f64)>, source: MomentSource, max_order: usize) -> Self {
        Self {
            entries,
            source,
            max_order,
        }
    }

    pub fn get(&self, order: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|(k, _)| *k == order)
            .map(|(_, v)| *v)
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }
}

/// Vector of rooted moments `beta_{2k}(x)` per block.
#[derive(Debug, Clone, PartialEq)]
pub struct RootedMomentVector {
    pub order: usize,
    pub values: Vec<f64>,
}

impl RootedMomentVector {
    /// Block average `int beta_{2k}(x) dx`, which equals the plain moment.
    pub fn block_average(&self, w: &StepGraphon) -> f64 {
        self.values
            .iter()
            .zip(w.fractions())
            .map(|(v, a)| v * a)
            .sum()
    }
}

/// Per-block rooted density of a tree with the root coordinate pinned.
///
/// Entry `i` is the density with the root in block `i`; the plain density
/// is its block average.
pub fn rooted_tree_density(t: &RootedPlanarTree, w: &StepGraphon) -> Vec<f64> {
    let d = w.block_count();
    let n = t.vertex_count();
    // acc[v] is the running product of child messages; leaves keep ones.
    let mut acc: Vec<Option<Vec<f64>>> = vec![None; n];
    for v in (1..n).rev() {
        let message = match acc[v].take() {
            Some(m) => w.apply(&m),
            None => w.degree_function(), // leaf: apply to the all-ones vector
        };
        let parent = t.parents()[v];
        match &mut acc[parent] {
            Some(p) => p.iter_mut().zip(&message).for_each(|(p, m)| *p *= m),
            None => acc[parent] = Some(message),
        }
    }
    acc[0].take().unwrap_or_else(|| vec![1.0; d])
}

/// Plain homomorphism density `t(T, W)`.
pub fn tree_density(t: &RootedPlanarTree, w: &StepGraphon) -> f64 {
    rooted_tree_density(t, w)
        .iter()
        .zip(w.fractions())
        .map(|(m, a)| m * a)
        .sum()
}

/// Density of a starred tree pinned at its labeled vertex: one kernel
/// application on top of the base tree's rooted density.
pub fn starred_density(s: &StarredTree, w: &StepGraphon) -> Vec<f64> {
    w.apply(&rooted_tree_density(s.base(), w))
}

/// 2k-th moment of the limiting spectral distribution: the sum of tree
/// densities over all `C_k` trees. Odd moments are exactly zero.
pub fn wigner_moment(k: usize, w: &StepGraphon) -> Result<f64> {
    Ok(rooted_moment_vector(k, w)?.block_average(w))
}

/// `beta_{2k}(x)` per block: the sum of rooted densities over all trees
/// with `k` edges. Trees are streamed in enumeration order and the terms
/// are reduced sequentially so the result is deterministic.
pub fn rooted_moment_vector(k: usize, w: &StepGraphon) -> Result<RootedMomentVector> {
    rooted_moment_vector_with_cap(k, w, DEFAULT_TREE_CAP)
}

pub fn rooted_moment_vector_with_cap(
    k: usize,
    w: &StepGraphon,
    cap: usize,
) -> Result<RootedMomentVector> {
    if k > cap {
        return Err(Error::TreeCapExceeded { k, cap });
    }
    let d = w.block_count();
    let mut values = vec![0.0f64; d];
    let mut stream = trees::stream_trees(k);
    const BATCH: usize = 2048;
    loop {
        let batch: Vec<RootedPlanarTree> = stream.by_ref().take(BATCH).collect();
        if batch.is_empty() {
            break;
        }
        let terms = par::map_collect(&batch, |t| rooted_tree_density(t, w));
        for term in &terms {
            values.iter_mut().zip(term).for_each(|(v, t)| *v += t);
        }
    }
    Ok(RootedMomentVector { order: k, values })
}

/// k-th moment of the limiting Gram spectral distribution with aspect ratio
/// `y`: `(1+y)^{k+1} / (2y)` times the tree-density sum over the bipartite
/// symmetrized kernel. The kernel must vanish on both diagonal super-blocks
/// across the `y/(1+y)` split.
pub fn gram_moment(k: usize, w: &StepGraphon, y: f64) -> Result<f64> {
    check_bipartite(w, y)?;
    if k == 0 {
        return Ok(1.0);
    }
    let sum = wigner_moment(k, w)?;
    Ok((1.0 + y).powi(k as i32 + 1) / (2.0 * y) * sum)
}

/// Splits the symmetrized index set at `y/(1+y)` and verifies the zero
/// diagonal super-blocks. Returns (left block indices, right block indices).
pub fn check_bipartite(w: &StepGraphon, y: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "aspect ratio must be positive, got {y}"
        )));
    }
    let split = y / (1.0 + y);
    let bounds = w.boundaries();
    let m = bounds
        .iter()
        .position(|&c| (c - split).abs() < 1e-9)
        .ok_or_else(|| Error::NotBipartite {
            split,
            detail: format!(
                "no block boundary at {split} (boundaries {:?})",
                bounds
            ),
        })?;
    if m == 0 || m == w.block_count() {
        return Err(Error::NotBipartite {
            split,
            detail: "split leaves one side empty".into(),
        });
    }
    let left: Vec<usize> = (0..m).collect();
    let right: Vec<usize> = (m..w.block_count()).collect();
    for &i in &left {
        for &j in &left {
            if w.weight(i, j).abs() > 1e-12 {
                return Err(Error::NotBipartite {
                    split,
                    detail: format!("nonzero weight inside the left block at ({i},{j})"),
                });
            }
        }
    }
    for &i in &right {
        for &j in &right {
            if w.weight(i, j).abs() > 1e-12 {
                return Err(Error::NotBipartite {
                    split,
                    detail: format!("nonzero weight inside the right block at ({i},{j})"),
                });
            }
        }
    }
    Ok((left, right))
}

/// Moment table of tree-density moments up to `max_order` (inclusive); odd
/// orders are exactly zero.
pub fn moment_table(w: &StepGraphon, max_order: usize) -> Result<MomentTable> {
    let mut entries = Vec::with_capacity(max_order + 1);
    for order in 0..=max_order {
        let value = if order % 2 == 0 {
            wigner_moment(order / 2, w)?
        } else {
            0.0
        };
        entries.push((order, value));
    }
    Ok(MomentTable::new(
        entries,
        MomentSource::TreeDensity,
        max_order,
    ))
}

/// Gram moment table: `gram_moment` for every order from 0 to `max_order`.
pub fn gram_moment_table(w: &StepGraphon, y: f64, max_order: usize) -> Result<MomentTable> {
    let mut entries = Vec::with_capacity(max_order + 1);
    for order in 0..=max_order {
        entries.push((order, gram_moment(order, w, y)?));
    }
    Ok(MomentTable::new(
        entries,
        MomentSource::TreeDensity,
        max_order,
    ))
}

/// Monte Carlo estimate of a tree density into an analytic kernel with
/// i.i.d. uniform vertex coordinates. Returns (mean, standard error).
/// The (seed, samples) pair fully determines the output.
pub fn mc_tree_density(
    t: &RootedPlanarTree,
    w: &AnalyticGraphon,
    samples: u64,
    seed: u64,
) -> (f64, f64) {
    assert!(samples >= 1, "at least one sample required");
    let n = t.vertex_count();
    const BATCH: u64 = 8192;
    let batches = samples.div_ceil(BATCH);
    // Welford accumulators per batch, combined sequentially in batch order.
    let partials = par::map_range(batches as usize, |b| {
        let start = b as u64 * BATCH;
        let end = (start + BATCH).min(samples);
        let mut count = 0u64;
        let mut mean = 0.0f64;
        let mut m2 = 0.0f64;
        let mut coords = vec![0.0f64; n];
        for s in start..end {
            let mut rng = crate::rng::entry_rng(seed, crate::rng::Namespace::McSample, s, 0);
            use rand::Rng;
            coords.iter_mut().for_each(|c| *c = rng.random::<f64>());
            let mut value = 1.0f64;
            for v in 1..n {
                value *= w
                    .evaluate(coords[v], coords[t.parents()[v]])
                    .expect("uniform draws lie in [0,1]");
            }
            count += 1;
            let delta = value - mean;
            mean += delta / count as f64;
            m2 += delta * (value - mean);
        }
        (count, mean, m2)
    });
    let (count, mean, m2) = partials.into_iter().fold(
        (0u64, 0.0f64, 0.0f64),
        |(na, mean_a, m2_a), (nb, mean_b, m2_b)| {
            if nb == 0 {
                return (na, mean_a, m2_a);
            }
            let n_total = na + nb;
            let delta = mean_b - mean_a;
            let mean = mean_a + delta * nb as f64 / n_total as f64;
            let m2 = m2_a + m2_b + delta * delta * (na as f64 * nb as f64 / n_total as f64);
            (n_total, mean, m2)
        },
    );
    debug_assert_eq!(count, samples);
    let m = samples as f64;
    let variance = if samples > 1 { (m2 / (m - 1.0)).max(0.0) } else { 0.0 };
    (mean, (variance / m).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::{attach_root_edge, combine, enumerate_trees};

    fn bipartite() -> StepGraphon {
        StepGraphon::new(vec![0.5, 0.5], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn random_graphon(d: usize, seed: u64, max_weight: f64) -> StepGraphon {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut fractions: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = fractions.iter().sum();
        fractions.iter_mut().for_each(|f| *f /= total);
        let mut weights = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..=i {
                let v = rng.random::<f64>() * max_weight;
                weights[i][j] = v;
                weights[j][i] = v;
            }
        }
        StepGraphon::new(fractions, weights).unwrap()
    }

    #[test]
    fn density_constant_kernel() {
        let one = StepGraphon::constant(1.0).unwrap();
        let c = StepGraphon::constant(0.7).unwrap();
        for t in enumerate_trees(4).unwrap() {
            assert!((tree_density(&t, &one) - 1.0).abs() < 1e-15);
            let expect = 0.7f64.powi(t.edge_count() as i32);
            assert!((tree_density(&t, &c) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn density_bipartite_path() {
        // 3-vertex path into the bipartite kernel: only 2 of the 8 block
        // assignments contribute, each (1/2)^3.
        let path3 = RootedPlanarTree::from_parents(vec![0, 0, 1]).unwrap();
        assert!((tree_density(&path3, &bipartite()) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rooted_density_examples() {
        let w = bipartite();
        let single = RootedPlanarTree::single_vertex();
        assert_eq!(rooted_tree_density(&single, &w), vec![1.0, 1.0]);

        let edge = RootedPlanarTree::from_parents(vec![0, 0]).unwrap();
        let c = StepGraphon::constant(0.3).unwrap();
        assert!((rooted_tree_density(&edge, &c)[0] - 0.3).abs() < 1e-15);
        let r = rooted_tree_density(&edge, &w);
        assert!((r[0] - 0.5).abs() < 1e-15);
        assert!((r[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn starred_density_examples() {
        let single = RootedPlanarTree::single_vertex();
        let starred = attach_root_edge(&single);
        let c = StepGraphon::constant(0.6).unwrap();
        let got = starred_density(&starred, &c);
        assert!((got[0] - 0.6).abs() < 1e-15);

        // starred single vertex is the edge pinned at its free end
        let edge = RootedPlanarTree::from_parents(vec![0, 0]).unwrap();
        let w = random_graphon(3, 5, 2.0);
        let lhs = starred_density(&starred, &w);
        let rhs = rooted_tree_density(&edge, &w);
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn starred_combine_identity() {
        // t_x(T) * t_x(T'*) = t_x(combine(T, T'*)) entrywise
        let w = random_graphon(2, 42, 1.5);
        for k in 0..=2usize {
            for l in 0..=(2 - k) {
                for ti in enumerate_trees(k).unwrap() {
                    for tj in enumerate_trees(l).unwrap() {
                        let starred = attach_root_edge(&tj);
                        let lhs: Vec<f64> = rooted_tree_density(&ti, &w)
                            .iter()
                            .zip(starred_density(&starred, &w))
                            .map(|(a, b)| a * b)
                            .collect();
                        let rhs = rooted_tree_density(&combine(&ti, &starred), &w);
                        for (a, b) in lhs.iter().zip(&rhs) {
                            assert!((a - b).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn wigner_moment_catalan() {
        let one = StepGraphon::constant(1.0).unwrap();
        assert!((wigner_moment(2, &one).unwrap() - 2.0).abs() < 1e-12);
        assert!((wigner_moment(4, &one).unwrap() - 14.0).abs() < 1e-12);
        assert!((wigner_moment(1, &bipartite()).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rooted_moment_vector_examples() {
        let one = StepGraphon::constant(1.0).unwrap();
        for k in 0..=5usize {
            let rmv = rooted_moment_vector(k, &one).unwrap();
            assert!((rmv.values[0] - trees::catalan(k) as f64).abs() < 1e-12);
        }
        let w = random_graphon(4, 3, 1.0);
        let rmv = rooted_moment_vector(0, &w).unwrap();
        assert_eq!(rmv.values, vec![1.0; 4]);
        for k in 1..=4usize {
            let rmv = rooted_moment_vector(k, &w).unwrap();
            let avg = rmv.block_average(&w);
            assert!((avg - wigner_moment(k, &w).unwrap()).abs() < 1e-10);
            assert!(rmv.values.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn catalan_recursion_termwise() {
        // beta_{2s}(x) = sum_{k+l=s-1} beta_{2k}(x) * (W beta_{2l})(x)
        for seed in 0..5u64 {
            let w = random_graphon(2 + (seed as usize % 4), 100 + seed, 1.5);
            for s in 1..=5usize {
                let lhs = rooted_moment_vector(s, &w).unwrap().values;
                let mut rhs = vec![0.0; w.block_count()];
                for k in 0..s {
                    let bk = rooted_moment_vector(k, &w).unwrap().values;
                    let bl = rooted_moment_vector(s - 1 - k, &w).unwrap().values;
                    let wbl = w.apply(&bl);
                    rhs.iter_mut()
                        .zip(bk.iter().zip(&wbl))
                        .for_each(|(r, (b, wb))| *r += b * wb);
                }
                for (a, b) in lhs.iter().zip(&rhs) {
                    assert!((a - b).abs() < 1e-9, "s={s}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn moment_bound_and_permutation_invariance() {
        let w = random_graphon(5, 9, 2.0);
        let sup = w.sup_norm();
        for k in 1..=5usize {
            let m = wigner_moment(k, &w).unwrap();
            assert!(m <= trees::catalan(k) as f64 * sup.powi(k as i32) + 1e-9);
        }
        let perm = [3usize, 1, 4, 0, 2];
        let wp = w.permuted(&perm);
        for k in 1..=4usize {
            let a = wigner_moment(k, &w).unwrap();
            let b = wigner_moment(k, &wp).unwrap();
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn leaf_peeling_degree_one() {
        // degree function identically 1 forces every tree density to 1
        let w = StepGraphon::new(
            vec![0.5, 0.5],
            vec![vec![1.5, 0.5], vec![0.5, 1.5]],
        )
        .unwrap();
        for k in 0..=5usize {
            for t in enumerate_trees(k).unwrap() {
                assert!((tree_density(&t, &w) - 1.0).abs() < 1e-12);
            }
        }
    }

    fn mp_bipartite(y: f64) -> StepGraphon {
        let left = y / (1.0 + y);
        StepGraphon::new(
            vec![left, 1.0 - left],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn gram_moment_marchenko_pastur() {
        let w = mp_bipartite(1.0);
        // MP(1) moments are the Catalan numbers
        for k in 1..=6usize {
            let got = gram_moment(k, &w, 1.0).unwrap();
            let expect = trees::catalan(k) as f64;
            assert!(
                (got - expect).abs() < 1e-9 * expect,
                "k={k}: {got} vs {expect}"
            );
        }
        // definitional single-edge case
        let y = 0.5;
        let w = mp_bipartite(y);
        let edge = RootedPlanarTree::from_parents(vec![0, 0]).unwrap();
        let expect = (1.0 + y).powi(2) / (2.0 * y) * tree_density(&edge, &w);
        assert!((gram_moment(1, &w, y).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn gram_moment_rejects_non_bipartite() {
        let w = StepGraphon::constant(1.0).unwrap();
        assert!(matches!(
            gram_moment(2, &w, 1.0),
            Err(Error::NotBipartite { .. })
        ));
        let w = StepGraphon::new(
            vec![0.5, 0.5],
            vec![vec![0.5, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        assert!(gram_moment(2, &w, 1.0).is_err());
    }

    #[test]
    fn mc_density_examples() {
        let c = AnalyticGraphon::Constant(0.8);
        let t = RootedPlanarTree::from_parents(vec![0, 0, 1]).unwrap();
        let (mean, se) = mc_tree_density(&t, &c, 500, 1);
        assert!((mean - 0.64).abs() < 1e-14);
        assert!(se < 1e-14);

        let p = AnalyticGraphon::Product { scale: 1.0 };
        let edge = RootedPlanarTree::from_parents(vec![0, 0]).unwrap();
        let (mean, se) = mc_tree_density(&edge, &p, 40_000, 2);
        assert!((mean - 0.25).abs() < 3.0 * se, "{mean} +- {se}");

        // step graphon passed as analytic agrees with the exact DP
        let w = random_graphon(3, 77, 1.0);
        let exact = tree_density(&t, &w);
        let (mean, se) = mc_tree_density(&t, &AnalyticGraphon::Step(w), 60_000, 3);
        assert!((mean - exact).abs() < 3.0 * se.max(1e-6), "{mean} vs {exact}");
    }

    #[test]
    fn mc_density_deterministic() {
        let p = AnalyticGraphon::Product { scale: 1.0 };
        let t = RootedPlanarTree::from_parents(vec![0, 0]).unwrap();
        let a = mc_tree_density(&t, &p, 10_000, 9);
        let b = mc_tree_density(&t, &p, 10_000, 9);
        assert_eq!(a, b);
    }

    #[test]
    fn moment_table_layout() {
        let w = StepGraphon::constant(2.0).unwrap();
        let table = moment_table(&w, 6).unwrap();
        assert_eq!(table.get(0), Some(1.0));
        assert_eq!(table.get(1), Some(0.0));
        assert_eq!(table.get(3), Some(0.0));
        // beta_{2k} = C_k c^k for the constant kernel
        assert!((table.get(4).unwrap() - 2.0 * 4.0).abs() < 1e-12);
        assert_eq!(table.source, MomentSource::TreeDensity);
    }
}
