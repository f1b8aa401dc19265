//! Binary edge-indicator solutions, their rank-one morphisms and distance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::tree::{canonical_edge_order, LabeledTree, TreeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolutionError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("solution vectors have lengths {left} and {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("the source solution is all zeros")]
    ZeroSolution,
    #[error("entry {index} is {value}, expected 0 or 1")]
    NotBinary { index: usize, value: u8 },
    #[error("solution was encoded against a different edge order")]
    EdgeOrderMismatch,
    #[error("marked edges do not form a root-to-terminal path")]
    NotAPath,
}

/// Root-to-terminal path as a 0/1 vector over the tree's canonical edge order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SolutionRepr")]
pub struct Solution {
    pub problem_id: String,
    /// Canonical edge order rendered as `parent→child`.
    pub edge_order: Vec<String>,
    pub bits: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal: Option<String>,
}

#[derive(Deserialize)]
struct SolutionRepr {
    problem_id: String,
    edge_order: Vec<String>,
    bits: Vec<u8>,
    #[serde(default)]
    terminal: Option<String>,
}

impl TryFrom<SolutionRepr> for Solution {
    type Error = SolutionError;

    fn try_from(r: SolutionRepr) -> Result<Self, SolutionError> {
        let s = Solution { problem_id: r.problem_id, edge_order: r.edge_order, bits: r.bits, terminal: r.terminal };
        s.check_binary()?;
        if s.edge_order.len() != s.bits.len() {
            return Err(SolutionError::LengthMismatch { left: s.edge_order.len(), right: s.bits.len() });
        }
        Ok(s)
    }
}

impl Solution {
    /// Plain vector without an owning problem; useful for vector-level analysis.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self, SolutionError> {
        let s = Solution { problem_id: String::new(), edge_order: Vec::new(), bits, terminal: None };
        s.check_binary()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn check_binary(&self) -> Result<(), SolutionError> {
        match self.bits.iter().position(|&b| b > 1) {
            Some(index) => Err(SolutionError::NotBinary { index, value: self.bits[index] }),
            None => Ok(()),
        }
    }

    pub fn with_problem_id(mut self, id: impl Into<String>) -> Self {
        self.problem_id = id.into();
        self
    }

    /// Same path over the same edge order; the owning problem id is ignored.
    pub fn same_path(&self, other: &Solution) -> bool {
        self.bits == other.bits && self.edge_order == other.edge_order
    }
}

pub fn edge_order_labels<S: Scalar>(tree: &LabeledTree<S>) -> Vec<String> {
    canonical_edge_order(tree).into_iter().map(|k| tree.edge_label(k)).collect()
}

/// Marks the edges on the path from the root to `terminal`.
pub fn encode_path<S: Scalar>(tree: &LabeledTree<S>, terminal: &str) -> Result<Solution, SolutionError> {
    let tip = tree.terminal_index(terminal)?;
    let order = canonical_edge_order(tree);
    let mut position = vec![0usize; tree.edges().len()];
    for (i, &k) in order.iter().enumerate() {
        position[k] = i;
    }
    let mut bits = vec![0u8; order.len()];
    let mut u = tip;
    while let Some(k) = tree.parent_edge(u) {
        bits[position[k]] = 1;
        u = tree.edge(k).parent;
    }
    Ok(Solution {
        problem_id: String::new(),
        edge_order: order.iter().map(|&k| tree.edge_label(k)).collect(),
        bits,
        terminal: Some(terminal.to_string()),
    })
}

/// Recovers the terminal a path solution ends at, checking the path invariant.
pub fn decode_path<S: Scalar>(tree: &LabeledTree<S>, solution: &Solution) -> Result<String, SolutionError> {
    solution.check_binary()?;
    let order = canonical_edge_order(tree);
    if solution.bits.len() != order.len() {
        return Err(SolutionError::LengthMismatch { left: solution.bits.len(), right: order.len() });
    }
    if !solution.edge_order.is_empty() && solution.edge_order.iter().zip(&order).any(|(l, &k)| *l != tree.edge_label(k))
    {
        return Err(SolutionError::EdgeOrderMismatch);
    }
    let mut marked = vec![false; tree.edges().len()];
    for (&b, &k) in solution.bits.iter().zip(&order) {
        marked[k] = b == 1;
    }
    let total = marked.iter().filter(|&&m| m).count();
    let mut u = tree.root();
    let mut walked = 0;
    loop {
        let next: Vec<usize> = tree.child_edges(u).iter().copied().filter(|&k| marked[k]).collect();
        match next.as_slice() {
            [] => break,
            [k] => {
                walked += 1;
                u = tree.edge(*k).child;
            }
            _ => return Err(SolutionError::NotAPath),
        }
    }
    if walked != total || !tree.is_terminal(u) {
        return Err(SolutionError::NotAPath);
    }
    Ok(tree.id(u).to_string())
}

fn to_scalars<S: Scalar>(bits: &[u8]) -> Vec<S> {
    bits.iter().map(|&b| if b == 1 { S::one() } else { S::zero() }).collect()
}

/// Least-norm `A` with `A sᵀ = tᵀ`, i.e. `tᵀ s / (s·s)`.
pub fn solution_morphism<S: Scalar>(s: &Solution, t: &Solution) -> Result<Matrix<S>, SolutionError> {
    if s.len() != t.len() {
        return Err(SolutionError::LengthMismatch { left: s.len(), right: t.len() });
    }
    let norm2 = s.bits.iter().filter(|&&b| b == 1).count();
    if norm2 == 0 {
        return Err(SolutionError::ZeroSolution);
    }
    let sv: Vec<S> = to_scalars(&s.bits);
    let tv: Vec<S> = to_scalars(&t.bits);
    let inv = S::one() / S::lit(norm2 as f64);
    Ok(Matrix::from_fn(s.len(), s.len(), |i, j| tv[i] * sv[j] * inv))
}

/// Euclidean distance between two solution vectors, `sqrt(hamming)`.
pub fn solution_distance<S: Scalar>(s: &Solution, t: &Solution) -> Result<S, SolutionError> {
    Ok(S::lit(hamming(s, t)? as f64).sqrt())
}

pub fn hamming(s: &Solution, t: &Solution) -> Result<usize, SolutionError> {
    if s.len() != t.len() {
        return Err(SolutionError::LengthMismatch { left: s.len(), right: t.len() });
    }
    Ok(s.bits.iter().zip(&t.bits).filter(|(a, b)| a != b).count())
}
