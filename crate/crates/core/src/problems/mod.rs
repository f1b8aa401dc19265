//! Concrete tree problems and the solvers that map a problem to its solution.

mod maze;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characteristic::{characteristic_matrix, CharacteristicError, CharacteristicMatrix};
use crate::scalar::Scalar;
use crate::solutions::{encode_path, Solution, SolutionError};
use crate::tree::{
    binarize, canonical_edge_order, Combinator, FeatureSchema, LabeledTree, RawEdge, RawNode, RawTree, TreeError,
};

pub use maze::{maze_path_cells, maze_to_tree, parse_maze, Cell, MazeError, MazeGrid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error(transparent)]
    Characteristic(#[from] CharacteristicError),
    #[error("problem declares no edge features")]
    NoFeatures,
    #[error("{kind} problems need feature 0 to be {expected:?}")]
    WrongCombinator { kind: ProblemKind, expected: Combinator },
    #[error("edge {edge} has probability {value}, expected a value in (0, 1]")]
    InvalidProbability { edge: String, value: f64 },
    #[error("edge {edge} has negative length {value}")]
    NegativeLength { edge: String, value: f64 },
    #[error("children of `{node}` have probabilities summing to {sum}")]
    SiblingSumNotOne { node: String, sum: f64 },
    #[error("terminal `{0}` has no 0/1 outcome label")]
    InvalidOutcome(String),
    #[error("problem has no goal tip")]
    NoGoalTip,
    #[error("edge {edge} has non-positive weight {value}")]
    NonPositiveWeight { edge: String, value: f64 },
    #[error("objective {objective:?} does not apply: {reason}")]
    WrongObjective { objective: Objective, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Generic,
    Decision,
    Maze,
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProblemKind::Generic => "generic",
            ProblemKind::Decision => "decision",
            ProblemKind::Maze => "maze",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Root-to-terminal path maximising the sum of log feature-0 weights.
    MaxLogWeightPath,
    /// Shortest feature-0 length from the root to a goal tip.
    MinLengthToGoal,
}

const SIBLING_SUM_TOLERANCE: f64 = 1e-9;

/// A validated, binarized tree together with what "solving" it means.
#[derive(Debug, Clone)]
pub struct TreeProblem<S> {
    id: String,
    kind: ProblemKind,
    objective: Objective,
    tree: LabeledTree<S>,
    goal_tips: BTreeSet<String>,
}

impl<S: Scalar> TreeProblem<S> {
    /// Checks the kind's invariants on `tree` as given, then binarizes it.
    ///
    /// Goal tips are the terminals whose first vertex label equals 1. With
    /// `strict`, decision-tree siblings must carry probabilities summing to 1.
    pub fn new(
        id: impl Into<String>,
        kind: ProblemKind,
        tree: LabeledTree<S>,
        strict: bool,
    ) -> Result<Self, ProblemError> {
        if tree.feature_arity() == 0 {
            return Err(ProblemError::NoFeatures);
        }
        let first = tree.schema().combinator(0);
        match kind {
            ProblemKind::Decision => check_decision(&tree, strict)?,
            ProblemKind::Maze => check_maze(&tree)?,
            ProblemKind::Generic => {}
        }
        let objective = match (kind, first) {
            (ProblemKind::Maze, _) | (ProblemKind::Generic, Combinator::Additive) => Objective::MinLengthToGoal,
            _ => Objective::MaxLogWeightPath,
        };
        let tree = binarize(&tree)?;
        let goal_tips: BTreeSet<String> = tree
            .tips()
            .into_iter()
            .filter(|&t| tree.node(t).labels.first().is_some_and(|&x| x == S::one()))
            .map(|t| tree.id(t).to_string())
            .collect();
        if kind == ProblemKind::Maze && goal_tips.is_empty() {
            return Err(ProblemError::NoGoalTip);
        }
        Ok(Self { id: id.into(), kind, objective, tree, goal_tips })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn tree(&self) -> &LabeledTree<S> {
        &self.tree
    }

    pub fn goal_tips(&self) -> &BTreeSet<String> {
        &self.goal_tips
    }

    pub fn tip_count(&self) -> usize {
        self.tree.tip_count()
    }

    pub fn feature_arity(&self) -> usize {
        self.tree.feature_arity()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Same kind and id over a different tree (re-validated, non-strict).
    pub fn with_tree(&self, tree: LabeledTree<S>) -> Result<Self, ProblemError> {
        Self::new(self.id.clone(), self.kind, tree, false)
    }

    pub fn characteristic_matrix(&self) -> Result<CharacteristicMatrix<S>, CharacteristicError> {
        Ok(characteristic_matrix(&self.tree)?.with_source(self.id.clone()))
    }

    pub fn encode(&self, terminal: &str) -> Result<Solution, SolutionError> {
        Ok(encode_path(&self.tree, terminal)?.with_problem_id(self.id.clone()))
    }

    pub fn to_file(&self) -> ProblemFile<S> {
        let raw = self.tree.to_raw();
        ProblemFile {
            id: Some(self.id.clone()),
            kind: self.kind,
            features: raw.schema,
            root: raw.root,
            nodes: raw.nodes,
            edges: raw.edges,
        }
    }
}

fn edge_name<S: Scalar>(tree: &LabeledTree<S>, k: usize) -> String {
    tree.edge_label(k)
}

fn check_decision<S: Scalar>(tree: &LabeledTree<S>, strict: bool) -> Result<(), ProblemError> {
    if tree.schema().combinator(0) != Combinator::Multiplicative {
        return Err(ProblemError::WrongCombinator {
            kind: ProblemKind::Decision,
            expected: Combinator::Multiplicative,
        });
    }
    for (k, e) in tree.edges().iter().enumerate() {
        let p = e.features[0];
        if !(p > S::zero() && p <= S::one()) {
            return Err(ProblemError::InvalidProbability { edge: edge_name(tree, k), value: p.to_f64_lossy() });
        }
    }
    if strict {
        for u in 0..tree.nodes().len() {
            let kids = tree.child_edges(u);
            if kids.is_empty() {
                continue;
            }
            let sum: S = kids.iter().map(|&k| tree.edge(k).features[0]).sum();
            if (sum - S::one()).abs().to_f64_lossy() > SIBLING_SUM_TOLERANCE {
                return Err(ProblemError::SiblingSumNotOne { node: tree.id(u).to_string(), sum: sum.to_f64_lossy() });
            }
        }
    }
    Ok(())
}

fn check_maze<S: Scalar>(tree: &LabeledTree<S>) -> Result<(), ProblemError> {
    if tree.schema().combinator(0) != Combinator::Additive {
        return Err(ProblemError::WrongCombinator { kind: ProblemKind::Maze, expected: Combinator::Additive });
    }
    for (k, e) in tree.edges().iter().enumerate() {
        if e.features[0] < S::zero() {
            return Err(ProblemError::NegativeLength { edge: edge_name(tree, k), value: e.features[0].to_f64_lossy() });
        }
    }
    for t in tree.tips() {
        match tree.node(t).labels.first() {
            Some(&x) if x == S::zero() || x == S::one() => {}
            _ => return Err(ProblemError::InvalidOutcome(tree.id(t).to_string())),
        }
    }
    Ok(())
}

/// Walks root-to-tip paths in canonical preorder, handing each tip its
/// accumulated score. Preorder means the first tip seen among equal scores is
/// the lexicographically smallest path.
fn scan_paths<S: Scalar>(tree: &LabeledTree<S>, step: impl Fn(S, S) -> S, mut visit: impl FnMut(usize, S)) {
    let order = canonical_edge_order(tree);
    let mut score = vec![S::zero(); tree.nodes().len()];
    for k in order {
        let e = tree.edge(k);
        score[e.child] = step(score[e.parent], e.features[0]);
        if tree.is_terminal(e.child) {
            visit(e.child, score[e.child]);
        }
    }
}

pub fn solve_most_probable_path<S: Scalar>(p: &TreeProblem<S>) -> Result<Solution, ProblemError> {
    let tree = p.tree();
    if tree.schema().combinator(0) != Combinator::Multiplicative {
        return Err(ProblemError::WrongObjective {
            objective: Objective::MaxLogWeightPath,
            reason: "feature 0 is not multiplicative".into(),
        });
    }
    if let Some(k) = tree.edges().iter().position(|e| e.features[0].is_nan() || e.features[0] <= S::zero()) {
        return Err(ProblemError::NonPositiveWeight {
            edge: edge_name(tree, k),
            value: tree.edge(k).features[0].to_f64_lossy(),
        });
    }
    let mut best: Option<(usize, S)> = None;
    scan_paths(
        tree,
        |acc, w| acc + w.ln(),
        |tip, score| {
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((tip, score));
            }
        },
    );
    let (tip, _) = best.expect("a valid tree has a terminal");
    Ok(p.encode(tree.id(tip))?)
}

pub fn solve_min_length_to_goal<S: Scalar>(p: &TreeProblem<S>) -> Result<Solution, ProblemError> {
    let tree = p.tree();
    if tree.schema().combinator(0) != Combinator::Additive {
        return Err(ProblemError::WrongObjective {
            objective: Objective::MinLengthToGoal,
            reason: "feature 0 is not additive".into(),
        });
    }
    if p.goal_tips().is_empty() {
        return Err(ProblemError::NoGoalTip);
    }
    let mut best: Option<(usize, S)> = None;
    scan_paths(
        tree,
        |acc, w| acc + w,
        |tip, score| {
            if p.goal_tips().contains(tree.id(tip)) && best.is_none_or(|(_, b)| score < b) {
                best = Some((tip, score));
            }
        },
    );
    let (tip, _) = best.ok_or(ProblemError::NoGoalTip)?;
    Ok(p.encode(tree.id(tip))?)
}

/// Runs the problem's objective.
pub fn solve<S: Scalar>(p: &TreeProblem<S>) -> Result<Solution, ProblemError> {
    match p.objective() {
        Objective::MaxLogWeightPath => solve_most_probable_path(p),
        Objective::MinLengthToGoal => solve_min_length_to_goal(p),
    }
}

/// On-disk problem format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ProblemFile<S> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub kind: ProblemKind,
    pub features: FeatureSchema,
    pub root: String,
    pub nodes: Vec<RawNode<S>>,
    pub edges: Vec<RawEdge<S>>,
}

impl<S: Scalar> ProblemFile<S> {
    /// Validates into a problem; `fallback_id` is used when the file has no id.
    pub fn into_problem(self, fallback_id: &str, strict: bool) -> Result<TreeProblem<S>, ProblemError> {
        let id = self.id.unwrap_or_else(|| fallback_id.to_string());
        let tree =
            LabeledTree::new(RawTree { schema: self.features, root: self.root, nodes: self.nodes, edges: self.edges })?;
        TreeProblem::new(id, self.kind, tree, strict)
    }
}
