//! Rooted planar trees and their Dyck-word enumeration.
//!
//! A tree with `k` edges is stored as a parent array in depth-first search
//! order: vertex 0 is the root, `parent[v] < v` for `v >= 1`, and the
//! children of each vertex are ordered by index. Trees with `k+1` vertices
//! are counted by the Catalan number `C_k` and are in bijection with Dyck
//! words of length `2k` (Up = descend to a new child, Down = backtrack).

use crate::{Error, Result};

/// Default cap on the tree order `k` for enumeration and moment sums
/// (`C_12` = 208 012 trees).
pub const DEFAULT_TREE_CAP: usize = 12;

/// One step of a Dyck word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DyckStep {
    Up,
    Down,
}

/// A balanced up/down sequence of length `2k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyckWord {
    steps: Vec<DyckStep>,
}

impl DyckWord {
    /// Validates prefix balance: every prefix has at least as many Ups as
    /// Downs and the totals are equal.
    pub fn new(steps: Vec<DyckStep>) -> Result<Self> {
        let mut balance: isize = 0;
        for (i, s) in steps.iter().enumerate() {
            balance += match s {
                DyckStep::Up => 1,
                DyckStep::Down => -1,
            };
            if balance < 0 {
                return Err(Error::MalformedDyckWord(format!(
                    "prefix of length {} has more Downs than Ups",
                    i + 1
                )));
            }
        }
        if balance != 0 {
            return Err(Error::MalformedDyckWord(format!(
                "word has {balance} unmatched Up steps"
            )));
        }
        Ok(Self { steps })
    }

    /// Parses a string of `U`/`D` characters.
    pub fn parse(text: &str) -> Result<Self> {
        let steps = text
            .chars()
            .map(|c| match c {
                'U' | 'u' => Ok(DyckStep::Up),
                'D' | 'd' => Ok(DyckStep::Down),
                other => Err(Error::MalformedDyckWord(format!(
                    "unexpected character `{other}`"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(steps)
    }

    pub fn steps(&self) -> &[DyckStep] {
        &self.steps
    }

    /// Number of edges of the corresponding tree.
    pub fn order(&self) -> usize {
        self.steps.len() / 2
    }
}

impl std::fmt::Display for DyckWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in &self.steps {
            f.write_str(match s {
                DyckStep::Up => "U",
                DyckStep::Down => "D",
            })?;
        }
        Ok(())
    }
}

/// Ordered rooted tree in DFS numbering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RootedPlanarTree {
    /// `parents[0] == 0` marks the root; `parents[v] < v` for `v >= 1`.
    parents: Vec<usize>,
}

impl RootedPlanarTree {
    /// The one-vertex tree.
    pub fn single_vertex() -> Self {
        Self { parents: vec![0] }
    }

    /// Validates the parent array: root at 0, `parent[v] < v`, and DFS
    /// numbering (each vertex's parent lies on the path from the previous
    /// vertex to the root, so every subtree is a contiguous index range).
    pub fn from_parents(parents: Vec<usize>) -> Result<Self> {
        if parents.is_empty() {
            return Err(Error::InvalidTree("empty parent array".into()));
        }
        if parents[0] != 0 {
            return Err(Error::InvalidTree("parents[0] must be 0 (root)".into()));
        }
        let mut path = vec![0usize];
        for v in 1..parents.len() {
            let p = parents[v];
            if p >= v {
                return Err(Error::InvalidTree(format!(
                    "parent[{v}] = {p} violates parent[v] < v"
                )));
            }
            // Backtrack the DFS path until p is on top; failing means the
            // numbering is not depth-first.
            while let Some(&top) = path.last() {
                if top == p {
                    break;
                }
                path.pop();
            }
            if path.last() != Some(&p) {
                return Err(Error::InvalidTree(format!(
                    "vertex {v} with parent {p} breaks DFS order"
                )));
            }
            path.push(v);
        }
        Ok(Self { parents })
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn vertex_count(&self) -> usize {
        self.parents.len()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.len() - 1
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (v > 0).then(|| self.parents[v])
    }
}

/// A rooted planar tree with one extra labeled vertex attached to the root.
///
/// The extra vertex carries the pinned coordinate in partially labeled
/// homomorphism densities; by convention it takes the next index after the
/// base tree's vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StarredTree {
    base: RootedPlanarTree,
}

impl StarredTree {
    pub fn base(&self) -> &RootedPlanarTree {
        &self.base
    }

    /// Index of the labeled extra vertex.
    pub fn labeled_vertex(&self) -> usize {
        self.base.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.base.edge_count() + 1
    }
}

/// Attaches one new edge at the root; the new endpoint is the labeled vertex.
pub fn attach_root_edge(t: &RootedPlanarTree) -> StarredTree {
    StarredTree { base: t.clone() }
}

/// Decodes a Dyck word by simulated depth-first search.
pub fn dyck_to_tree(word: &DyckWord) -> RootedPlanarTree {
    let mut parents = Vec::with_capacity(word.order() + 1);
    parents.push(0);
    let mut stack = vec![0usize];
    for step in word.steps() {
        match step {
            DyckStep::Up => {
                let v = parents.len();
                parents.push(*stack.last().expect("validated word"));
                stack.push(v);
            }
            DyckStep::Down => {
                stack.pop();
            }
        }
    }
    RootedPlanarTree { parents }
}

/// Emits the Dyck word of a tree: Up on descent, Down on backtrack.
pub fn tree_to_dyck(t: &RootedPlanarTree) -> DyckWord {
    let n = t.vertex_count();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 1..n {
        children[t.parents[v]].push(v);
    }
    let mut steps = Vec::with_capacity(2 * t.edge_count());
    // Iterative DFS; frames hold (vertex, next child position).
    let mut stack = vec![(0usize, 0usize)];
    while let Some(&mut (v, ref mut ci)) = stack.last_mut() {
        if *ci < children[v].len() {
            let c = children[v][*ci];
            *ci += 1;
            steps.push(DyckStep::Up);
            stack.push((c, 0));
        } else {
            stack.pop();
            if !stack.is_empty() {
                steps.push(DyckStep::Down);
            }
        }
    }
    DyckWord { steps }
}

/// Identifies the labeled vertex of `starred` with the root of `t`, making
/// the starred base the new last child of the root. Vertices of `t` keep
/// their indices; the base of `starred` shifts up by `t.vertex_count()`.
pub fn combine(t: &RootedPlanarTree, starred: &StarredTree) -> RootedPlanarTree {
    let offset = t.vertex_count();
    let mut parents = Vec::with_capacity(offset + starred.base.vertex_count());
    parents.extend_from_slice(&t.parents);
    parents.push(0); // base root hangs off t's root
    for v in 1..starred.base.vertex_count() {
        parents.push(offset + starred.base.parents[v]);
    }
    RootedPlanarTree { parents }
}

/// The k-th Catalan number.
pub fn catalan(k: usize) -> u64 {
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c as u64
}

/// Iterator over all Dyck words of length `2k` in lexicographic order with
/// `Up < Down`. First word is `U^k D^k`, last is `(UD)^k`.
pub struct DyckIter {
    k: usize,
    // true = Up
    current: Option<Vec<bool>>,
}

impl DyckIter {
    pub fn new(k: usize) -> Self {
        let first = std::iter::repeat(true)
            .take(k)
            .chain(std::iter::repeat(false).take(k))
            .collect();
        Self {
            k,
            current: Some(first),
        }
    }
}

impl Iterator for DyckIter {
    type Item = DyckWord;

    fn next(&mut self) -> Option<DyckWord> {
        let word = self.current.take()?;
        let out = DyckWord {
            steps: word
                .iter()
                .map(|&up| if up { DyckStep::Up } else { DyckStep::Down })
                .collect(),
        };
        // Successor: rightmost position where an Up can become a Down while
        // the prefix stays balanced; fill the remainder with the minimal
        // valid suffix U...UD...D.
        let k = self.k;
        let mut ups_before = vec![0usize; word.len()];
        let mut downs_before = vec![0usize; word.len()];
        let (mut ups, mut downs) = (0usize, 0usize);
        for (i, &u) in word.iter().enumerate() {
            ups_before[i] = ups;
            downs_before[i] = downs;
            if u {
                ups += 1;
            } else {
                downs += 1;
            }
        }
        let flip = (0..word.len())
            .rev()
            .find(|&i| word[i] && downs_before[i] + 1 <= ups_before[i] && downs_before[i] + 1 <= k);
        self.current = flip.map(|i| {
            let mut next = Vec::with_capacity(2 * k);
            next.extend_from_slice(&word[..i]);
            next.push(false);
            next.extend(std::iter::repeat(true).take(k - ups_before[i]));
            next.extend(std::iter::repeat(false).take(k - downs_before[i] - 1));
            next
        });
        Some(out)
    }
}

/// Streams all rooted planar trees with `k` edges in canonical order
/// (lexicographic by Dyck word) without materializing the list.
pub fn stream_trees(k: usize) -> impl Iterator<Item = RootedPlanarTree> {
    DyckIter::new(k).map(|w| dyck_to_tree(&w))
}

/// All `C_k` rooted planar trees with `k+1` vertices, in canonical order,
/// under the default cap.
pub fn enumerate_trees(k: usize) -> Result<Vec<RootedPlanarTree>> {
    enumerate_trees_with_cap(k, DEFAULT_TREE_CAP)
}

/// As [`enumerate_trees`], with an explicit cap.
pub fn enumerate_trees_with_cap(k: usize, cap: usize) -> Result<Vec<RootedPlanarTree>> {
    if k > cap {
        return Err(Error::TreeCapExceeded { k, cap });
    }
    Ok(stream_trees(k).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn word(s: &str) -> DyckWord {
        DyckWord::parse(s).unwrap()
    }

    #[test]
    fn catalan_values() {
        let expect = [1u64, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796, 58786, 208012];
        for (k, &c) in expect.iter().enumerate() {
            assert_eq!(catalan(k), c);
        }
    }

    #[test]
    fn enumerate_counts_match_catalan() {
        assert_eq!(enumerate_trees(0).unwrap().len(), 1);
        assert_eq!(enumerate_trees(3).unwrap().len(), 5);
        let trees = enumerate_trees(8).unwrap();
        assert_eq!(trees.len(), 1430);
        let distinct: HashSet<_> = trees.iter().map(|t| t.parents().to_vec()).collect();
        assert_eq!(distinct.len(), 1430);
    }

    #[test]
    fn enumerate_order_is_lexicographic_by_dyck_word() {
        for k in 0..=6 {
            // encode Up as 0 and Down as 1 so plain sort is Up < Down lex order
            let words: Vec<Vec<u8>> = DyckIter::new(k)
                .map(|w| {
                    w.steps()
                        .iter()
                        .map(|s| matches!(s, DyckStep::Down) as u8)
                        .collect()
                })
                .collect();
            let mut sorted = words.clone();
            sorted.sort();
            assert_eq!(words, sorted, "k={k}");
            let distinct: HashSet<_> = words.iter().cloned().collect();
            assert_eq!(distinct.len(), words.len());
        }
    }

    #[test]
    fn cap_error_names_cap() {
        let err = enumerate_trees(13).unwrap_err();
        match err {
            Error::TreeCapExceeded { k, cap } => {
                assert_eq!((k, cap), (13, 12));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn dyck_to_tree_examples() {
        assert_eq!(dyck_to_tree(&word("")).parents(), &[0]);
        // UUDD: root - child - grandchild
        assert_eq!(dyck_to_tree(&word("UUDD")).parents(), &[0, 0, 1]);
        // UDUD: root with two children
        assert_eq!(dyck_to_tree(&word("UDUD")).parents(), &[0, 0, 0]);
        let t = dyck_to_tree(&word("UDUD"));
        assert_eq!(tree_to_dyck(&t), word("UDUD"));
    }

    #[test]
    fn malformed_words_rejected() {
        assert!(DyckWord::parse("DU").is_err());
        assert!(DyckWord::parse("UUD").is_err());
        assert!(DyckWord::parse("UXD").is_err());
    }

    #[test]
    fn tree_to_dyck_examples() {
        assert_eq!(tree_to_dyck(&RootedPlanarTree::single_vertex()), word(""));
        let path3 = RootedPlanarTree::from_parents(vec![0, 0, 1]).unwrap();
        assert_eq!(tree_to_dyck(&path3), word("UUDD"));
    }

    #[test]
    fn roundtrip_exhaustive_k6() {
        for t in enumerate_trees(6).unwrap() {
            assert_eq!(dyck_to_tree(&tree_to_dyck(&t)), t);
        }
    }

    #[test]
    fn parent_array_validation() {
        assert!(RootedPlanarTree::from_parents(vec![0, 0, 1]).is_ok());
        // vertex 2's parent must be on the DFS path through vertex 1
        assert!(RootedPlanarTree::from_parents(vec![0, 0, 0, 1]).is_err());
        assert!(RootedPlanarTree::from_parents(vec![0, 1]).is_err());
        assert!(RootedPlanarTree::from_parents(vec![]).is_err());
    }

    #[test]
    fn attach_root_edge_examples() {
        let single = RootedPlanarTree::single_vertex();
        let starred = attach_root_edge(&single);
        assert_eq!(starred.edge_count(), 1);
        assert_eq!(starred.labeled_vertex(), 1);

        let path3 = RootedPlanarTree::from_parents(vec![0, 0, 1]).unwrap();
        let starred = attach_root_edge(&path3);
        assert_eq!(starred.edge_count(), path3.edge_count() + 1);
    }

    #[test]
    fn combine_examples() {
        let single = RootedPlanarTree::single_vertex();
        let edge = attach_root_edge(&single);
        // (single vertex, single edge) -> path of 2 vertices
        assert_eq!(combine(&single, &edge).parents(), &[0, 0]);

        // k=1 path combined with starred single vertex: 3-vertex path rooted
        // at an end, with the starred base as the last (here only the second)
        // child subtree.
        let path2 = RootedPlanarTree::from_parents(vec![0, 0]).unwrap();
        let combined = combine(&path2, &edge);
        assert_eq!(combined.parents(), &[0, 0, 0]);
        let combined2 = combine(&single, &attach_root_edge(&path2));
        assert_eq!(combined2.parents(), &[0, 0, 1]);
    }

    #[test]
    fn combine_realizes_catalan_recursion() {
        for s in 1..=7usize {
            let mut built = Vec::new();
            for k in 0..s {
                let l = s - 1 - k;
                for ti in enumerate_trees(k).unwrap() {
                    for tj in enumerate_trees(l).unwrap() {
                        built.push(combine(&ti, &attach_root_edge(&tj)));
                    }
                }
            }
            let expect: HashSet<_> = enumerate_trees(s)
                .unwrap()
                .into_iter()
                .map(|t| t.parents().to_vec())
                .collect();
            let got: HashSet<_> = built.iter().map(|t| t.parents().to_vec()).collect();
            assert_eq!(built.len(), got.len(), "combine not injective at s={s}");
            assert_eq!(got, expect, "combine image mismatch at s={s}");
        }
    }
}
