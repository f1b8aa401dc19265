//! Rooted labelled tree problems encoded as characteristic matrices.
//!
//! A tree problem (a maze, a probabilistic decision tree, or any rooted tree
//! with feature-labelled edges) is encoded as an `(m+1) × (C(k,2)+k)`
//! characteristic matrix. On top of that encoding the crate provides
//! least-squares morphisms between problems, a weighted tree metric, path
//! solvers, and transfer of solutions between analogous problems through a
//! persisted library.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod characteristic;
pub mod cli;
pub mod linalg;
pub mod metrics;
pub mod morphism;
pub mod problems;
pub mod scalar;
pub mod solutions;
pub mod transfer;
pub mod tree;

pub use characteristic::{
    characteristic_matrix, phi, CharacteristicError, CharacteristicMatrix, ColumnTag, MetricWeights,
};
pub use linalg::{pseudoinverse, svd, LinalgError, Matrix};
pub use metrics::{matrix_distance, tree_distance, MetricError};
pub use morphism::{
    apply_morphism, compose, compute_morphism, identity_morphism, Morphism, MorphismError, MorphismExport,
};
pub use problems::{
    maze_path_cells, maze_to_tree, parse_maze, solve, solve_min_length_to_goal, solve_most_probable_path, Cell,
    MazeError, MazeGrid, Objective, ProblemError, ProblemFile, ProblemKind, TreeProblem,
};
pub use scalar::Scalar;
pub use solutions::{decode_path, encode_path, hamming, solution_distance, solution_morphism, Solution, SolutionError};
pub use transfer::{
    functor_commute_check, match_tips, transfer_solution, LibraryError, ProblemLibrary, ProblemTransform, TransferError,
};
pub use tree::{
    binarize, canonical_edge_order, mrca, same_topology, tree_equal, Combinator, Feature, FeatureSchema, LabeledTree,
    RawEdge, RawNode, RawTree, TreeError,
};

pub type Tree = LabeledTree<f64>;
pub type DenseMatrix = Matrix<f64>;
pub type CharMatrix = CharacteristicMatrix<f64>;
pub type Weights = MetricWeights<f64>;
pub type MorphismF64 = Morphism<f64>;
pub type Problem = TreeProblem<f64>;
pub type Transform = ProblemTransform<f64>;
