//! Solution transfer between analogous problems.
//!
//! A tip bijection between two problems with the same shape induces a
//! bijection of their edges (each edge is identified by the tip cluster it
//! cuts off). Transferring a path solution means pushing its marked edges
//! through that bijection.

mod library;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::problems::{solve, ProblemError, TreeProblem};
use crate::scalar::Scalar;
use crate::solutions::{decode_path, Solution, SolutionError};
use crate::tree::{canonical_edge_order, tree_equal, Combinator, LabeledTree, TreeError};

pub use library::{IndexEntry, LibraryError, LibraryRecord, ProblemLibrary, RecordMetadata, TransferOutcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransferError {
    #[error("no tip correspondence between `{source_id}` and `{target_id}`")]
    NoCorrespondence { source_id: String, target_id: String },
    #[error("transferred edges do not form a path in `{0}`")]
    BrokenPath(String),
    #[error("source solution does not fit its problem: {0}")]
    InvalidSourceSolution(SolutionError),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Bijection from the tips of `a` onto the tips of `b` under which the two
/// trees have the same topology, or `None` if their shapes differ.
///
/// If the labels already agree and the trees are equal, the identity is
/// returned. Otherwise tips are paired by a canonical traversal: siblings are
/// ordered by subtree shape, then by their edge features, vertex labels and
/// the features below them. Feature order is kept by relabelling, positive
/// powers of weights and positive rescaling of lengths, so those transforms
/// are always undone correctly.
pub fn match_tips<S: Scalar>(a: &TreeProblem<S>, b: &TreeProblem<S>) -> Option<BTreeMap<String, String>> {
    match_trees(a.tree(), b.tree())
}

pub fn match_trees<S: Scalar>(a: &LabeledTree<S>, b: &LabeledTree<S>) -> Option<BTreeMap<String, String>> {
    if a.tip_count() != b.tip_count() || a.edges().len() != b.edges().len() {
        return None;
    }
    if a.tip_labels() == b.tip_labels() && tree_equal(a, b) {
        return Some(a.tip_labels().into_iter().map(|t| (t.clone(), t)).collect());
    }
    let ca = Canonical::new(a);
    let cb = Canonical::new(b);
    if ca.shape[a.root()] != cb.shape[b.root()] {
        return None;
    }
    let ta = ca.tip_order(a);
    let tb = cb.tip_order(b);
    Some(ta.into_iter().zip(tb).map(|(x, y)| (a.id(x).to_string(), b.id(y).to_string())).collect())
}

/// Per-node shape strings and child orderings.
struct Canonical {
    shape: Vec<String>,
    children: Vec<Vec<usize>>,
}

impl Canonical {
    fn new<S: Scalar>(t: &LabeledTree<S>) -> Self {
        let n = t.nodes().len();
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![t.root()];
        while let Some(u) = stack.pop() {
            order.push(u);
            stack.extend(t.child_edges(u).iter().map(|&k| t.edge(k).child));
        }
        let min = min_tip_labels(t, &order);
        let mut shape = vec![String::new(); n];
        let mut signature: Vec<Vec<S>> = vec![Vec::new(); n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &u in order.iter().rev() {
            if t.is_terminal(u) {
                shape[u] = "L".into();
            } else {
                let mut kids: Vec<usize> = t.child_edges(u).iter().map(|&k| t.edge(k).child).collect();
                kids.sort_by(|&x, &y| {
                    shape[x]
                        .cmp(&shape[y])
                        .then_with(|| cmp_slices(entering(t, x), entering(t, y)))
                        .then_with(|| cmp_slices(&t.node(x).labels, &t.node(y).labels))
                        .then_with(|| cmp_slices(&signature[x], &signature[y]))
                        .then_with(|| min[x].cmp(min[y]))
                });
                shape[u] = format!("({})", kids.iter().map(|&c| shape[c].as_str()).collect::<Vec<_>>().join(""));
                let mut sig = Vec::new();
                for &c in &kids {
                    sig.extend_from_slice(entering(t, c));
                    sig.extend_from_slice(&t.node(c).labels);
                    sig.extend_from_slice(&signature[c]);
                }
                signature[u] = sig;
                children[u] = kids;
            }
        }
        Self { shape, children }
    }

    fn tip_order<S: Scalar>(&self, t: &LabeledTree<S>) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![t.root()];
        while let Some(u) = stack.pop() {
            if t.is_terminal(u) {
                out.push(u);
            }
            stack.extend(self.children[u].iter().rev());
        }
        out
    }
}

fn entering<S: Scalar>(t: &LabeledTree<S>, node: usize) -> &[S] {
    t.parent_edge(node).map_or(&[], |k| t.edge(k).features.as_slice())
}

fn cmp_slices<S: Scalar>(x: &[S], y: &[S]) -> Ordering {
    for (a, b) in x.iter().zip(y) {
        match a.partial_cmp(b) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    x.len().cmp(&y.len())
}

fn min_tip_labels<'t, S: Scalar>(t: &'t LabeledTree<S>, preorder: &[usize]) -> Vec<&'t str> {
    let mut min: Vec<Option<&str>> = vec![None; t.nodes().len()];
    for &u in preorder.iter().rev() {
        if t.is_terminal(u) {
            min[u] = Some(t.id(u));
        }
        if let (Some(p), Some(label)) = (t.parent(u), min[u]) {
            if min[p].is_none_or(|cur| label < cur) {
                min[p] = Some(label);
            }
        }
    }
    min.into_iter().map(|m| m.unwrap_or("")).collect()
}

/// Maps every edge of `source` to the edge of `target` cutting off the image cluster.
pub fn edge_correspondence<S: Scalar>(
    source: &LabeledTree<S>,
    target: &LabeledTree<S>,
    tips: &BTreeMap<String, String>,
) -> Option<Vec<usize>> {
    let target_keys: HashMap<(Vec<String>, usize), usize> =
        target.edge_keys().into_iter().enumerate().map(|(k, key)| (key, k)).collect();
    source
        .edge_keys()
        .into_iter()
        .map(|(cluster, rank)| {
            let mut image: Vec<String> = cluster.iter().map(|t| tips.get(t).cloned()).collect::<Option<_>>()?;
            image.sort();
            target_keys.get(&(image, rank)).copied()
        })
        .collect()
}

/// Pushes `source_sol` through the edge bijection induced by [`match_tips`].
pub fn transfer_solution<S: Scalar>(
    source: &TreeProblem<S>,
    source_sol: &Solution,
    target: &TreeProblem<S>,
) -> Result<Solution, TransferError> {
    decode_path(source.tree(), source_sol).map_err(TransferError::InvalidSourceSolution)?;
    let no_match =
        || TransferError::NoCorrespondence { source_id: source.id().to_string(), target_id: target.id().to_string() };
    let tips = match_tips(source, target).ok_or_else(no_match)?;
    let edges = edge_correspondence(source.tree(), target.tree(), &tips).ok_or_else(no_match)?;

    let source_order = canonical_edge_order(source.tree());
    let target_order = canonical_edge_order(target.tree());
    let mut target_pos = vec![0usize; target_order.len()];
    for (i, &k) in target_order.iter().enumerate() {
        target_pos[k] = i;
    }
    let mut bits = vec![0u8; target_order.len()];
    for (&b, &k) in source_sol.bits.iter().zip(&source_order) {
        if b == 1 {
            bits[target_pos[edges[k]]] = 1;
        }
    }
    let mut out = Solution {
        problem_id: target.id().to_string(),
        edge_order: target_order.iter().map(|&k| target.tree().edge_label(k)).collect(),
        bits,
        terminal: None,
    };
    let terminal = decode_path(target.tree(), &out).map_err(|_| TransferError::BrokenPath(target.id().to_string()))?;
    out.terminal = Some(terminal);
    Ok(out)
}

/// Structure-preserving problem transformations.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemTransform<S> {
    Identity,
    /// Renames tips; unmapped tips keep their label.
    RelabelTips(BTreeMap<String, String>),
    /// Raises every multiplicative feature to a positive power.
    PowerWeights(S),
    /// Multiplies every additive feature by a positive constant.
    ScaleLengths(S),
    /// Applies the transforms left to right.
    Compose(Vec<ProblemTransform<S>>),
}

impl<S: Scalar> ProblemTransform<S> {
    pub fn apply(&self, p: &TreeProblem<S>) -> Result<TreeProblem<S>, TransferError> {
        let tree = p.tree();
        let schema = tree.schema().clone();
        match self {
            ProblemTransform::Identity => Ok(p.clone()),
            ProblemTransform::RelabelTips(map) => Ok(p.with_tree(tree.relabel_tips(map)?)?),
            ProblemTransform::PowerWeights(alpha) => {
                if !alpha.is_finite() || *alpha <= S::zero() {
                    return Err(TransferError::InvalidTransform(format!("power {alpha} is not positive")));
                }
                let mapped = tree.map_features(|l, x| match schema.combinator(l) {
                    Combinator::Multiplicative => x.powf(*alpha),
                    Combinator::Additive => x,
                })?;
                Ok(p.with_tree(mapped)?)
            }
            ProblemTransform::ScaleLengths(c) => {
                if !c.is_finite() || *c <= S::zero() {
                    return Err(TransferError::InvalidTransform(format!("scale {c} is not positive")));
                }
                let mapped = tree.map_features(|l, x| match schema.combinator(l) {
                    Combinator::Additive => x * *c,
                    Combinator::Multiplicative => x,
                })?;
                Ok(p.with_tree(mapped)?)
            }
            ProblemTransform::Compose(steps) => {
                let mut cur = p.clone();
                for step in steps {
                    cur = step.apply(&cur)?;
                }
                Ok(cur)
            }
        }
    }
}

/// Whether solving the transformed problem agrees with transferring the
/// original solution onto it.
pub fn functor_commute_check<S: Scalar>(
    p: &TreeProblem<S>,
    transform: &ProblemTransform<S>,
) -> Result<bool, TransferError> {
    let q = transform.apply(p)?;
    let direct = solve(&q)?;
    let transferred = transfer_solution(p, &solve(p)?, &q)?;
    Ok(direct.same_path(&transferred))
}
