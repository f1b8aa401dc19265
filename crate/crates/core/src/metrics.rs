//! Weighted tree distance: Euclidean distance between characteristic vectors.

use thiserror::Error;

use crate::characteristic::{characteristic_matrix, phi, CharacteristicError, CharacteristicMatrix, MetricWeights};
use crate::scalar::Scalar;
use crate::tree::LabeledTree;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("trees have different tip label sets")]
    TipSetMismatch,
    #[error("trees have feature arities {left} and {right}")]
    FeatureArityMismatch { left: usize, right: usize },
    #[error(transparent)]
    Characteristic(#[from] CharacteristicError),
}

pub fn tree_distance<S: Scalar>(
    a: &LabeledTree<S>,
    b: &LabeledTree<S>,
    w: &MetricWeights<S>,
) -> Result<S, MetricError> {
    if a.feature_arity() != b.feature_arity() {
        return Err(MetricError::FeatureArityMismatch { left: a.feature_arity(), right: b.feature_arity() });
    }
    if a.tip_labels() != b.tip_labels() {
        return Err(MetricError::TipSetMismatch);
    }
    matrix_distance(&characteristic_matrix(a)?, &characteristic_matrix(b)?, w)
}

/// Distance between two characteristic matrices over the same tips.
pub fn matrix_distance<S: Scalar>(
    a: &CharacteristicMatrix<S>,
    b: &CharacteristicMatrix<S>,
    w: &MetricWeights<S>,
) -> Result<S, MetricError> {
    if a.height() != b.height() {
        return Err(MetricError::FeatureArityMismatch { left: a.height() - 1, right: b.height() - 1 });
    }
    if a.columns() != b.columns() {
        return Err(MetricError::TipSetMismatch);
    }
    let pa = phi(a, w)?;
    let pb = phi(b, w)?;
    Ok(pa.iter().zip(&pb).map(|(&x, &y)| (x - y) * (x - y)).sum::<S>().sqrt())
}
