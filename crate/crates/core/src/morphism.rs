//! Morphisms between characteristic matrices.
//!
//! With `X = M_Xᵀ` (shape `N × (m+1)`), the morphism to `M_Y` is the `N × N`
//! matrix `A = M_Yᵀ X⁺`. It satisfies `A M_Xᵀ = M_Yᵀ` exactly whenever `M_X`
//! has full row rank; otherwise it is the least-squares choice and the
//! leftover is reported as `residual`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characteristic::CharacteristicMatrix;
use crate::linalg::{LinalgError, Matrix};
use crate::scalar::Scalar;

pub use crate::linalg::{pseudoinverse, pseudoinverse_with_tolerance, svd, Svd};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MorphismError {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("column index differs between `{left}` and `{right}`")]
    ColumnIndexMismatch { left: String, right: String },
    #[error("morphism starts at `{expected}`, matrix belongs to `{found}`")]
    WrongSource { expected: String, found: String },
    #[error("cannot compose: first morphism ends at `{first_target}`, second starts at `{second_source}`")]
    NonComposable { first_target: String, second_source: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Morphism<S> {
    pub source_id: String,
    pub target_id: String,
    pub matrix: Matrix<S>,
    pub residual: S,
}

impl<S: Scalar> Morphism<S> {
    /// Side length `N`.
    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    /// `‖A M_Xᵀ − M_Yᵀ‖_F` for the given endpoints.
    pub fn residual_against(&self, source: &CharacteristicMatrix<S>, target: &CharacteristicMatrix<S>) -> S {
        defining_residual(&self.matrix, source, target)
    }

    pub fn to_export(&self) -> MorphismExport<S> {
        MorphismExport {
            source_id: self.source_id.clone(),
            target_id: self.target_id.clone(),
            n: self.size(),
            matrix: self.matrix.as_slice().to_vec(),
            residual: self.residual,
        }
    }
}

/// JSON form: the matrix is flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct MorphismExport<S> {
    pub source_id: String,
    pub target_id: String,
    pub n: usize,
    pub matrix: Vec<S>,
    pub residual: S,
}

impl<S: Scalar> TryFrom<MorphismExport<S>> for Morphism<S> {
    type Error = MorphismError;

    fn try_from(e: MorphismExport<S>) -> Result<Self, MorphismError> {
        if e.matrix.len() != e.n * e.n {
            return Err(MorphismError::ShapeMismatch { left: (e.n, e.n), right: (e.matrix.len(), 1) });
        }
        Ok(Self {
            source_id: e.source_id,
            target_id: e.target_id,
            matrix: Matrix::from_row_major(e.n, e.n, e.matrix),
            residual: e.residual,
        })
    }
}

fn defining_residual<S: Scalar>(
    a: &Matrix<S>,
    source: &CharacteristicMatrix<S>,
    target: &CharacteristicMatrix<S>,
) -> S {
    let image = a * &source.entries().transpose();
    (&image - &target.entries().transpose()).frobenius_norm()
}

fn check_same_shape<S: Scalar>(x: &CharacteristicMatrix<S>, y: &CharacteristicMatrix<S>) -> Result<(), MorphismError> {
    if x.entries().shape() != y.entries().shape() {
        return Err(MorphismError::ShapeMismatch { left: x.entries().shape(), right: y.entries().shape() });
    }
    if x.columns() != y.columns() {
        return Err(MorphismError::ColumnIndexMismatch {
            left: x.source_id().to_string(),
            right: y.source_id().to_string(),
        });
    }
    Ok(())
}

/// Least-squares morphism `A = M_Yᵀ (M_Xᵀ)⁺` with its residual.
pub fn compute_morphism<S: Scalar>(
    source: &CharacteristicMatrix<S>,
    target: &CharacteristicMatrix<S>,
) -> Result<Morphism<S>, MorphismError> {
    check_same_shape(source, target)?;
    let x = source.entries().transpose();
    let x_pinv = pseudoinverse(&x)?;
    let matrix = &target.entries().transpose() * &x_pinv;
    let residual = defining_residual(&matrix, source, target);
    Ok(Morphism {
        source_id: source.source_id().to_string(),
        target_id: target.source_id().to_string(),
        matrix,
        residual,
    })
}

/// Image `(A Mᵀ)ᵀ`, tagged with the morphism's target.
pub fn apply_morphism<S: Scalar>(
    f: &Morphism<S>,
    m: &CharacteristicMatrix<S>,
) -> Result<CharacteristicMatrix<S>, MorphismError> {
    if f.size() != m.width() {
        return Err(MorphismError::ShapeMismatch { left: f.matrix.shape(), right: m.entries().shape() });
    }
    if m.source_id() != f.source_id {
        return Err(MorphismError::WrongSource { expected: f.source_id.clone(), found: m.source_id().to_string() });
    }
    let image = (&f.matrix * &m.entries().transpose()).transpose();
    Ok(CharacteristicMatrix::from_parts(image, m.tip_labels().to_vec(), f.target_id.clone()))
}

/// `g ∘ f`, with matrix `A_g A_f`.
///
/// When both endpoint matrices are given the residual is recomputed; otherwise
/// it is bounded by `‖A_g‖_F res_f + res_g`.
pub fn compose<S: Scalar>(
    g: &Morphism<S>,
    f: &Morphism<S>,
    endpoints: Option<(&CharacteristicMatrix<S>, &CharacteristicMatrix<S>)>,
) -> Result<Morphism<S>, MorphismError> {
    if f.target_id != g.source_id {
        return Err(MorphismError::NonComposable {
            first_target: f.target_id.clone(),
            second_source: g.source_id.clone(),
        });
    }
    if f.size() != g.size() {
        return Err(MorphismError::ShapeMismatch { left: g.matrix.shape(), right: f.matrix.shape() });
    }
    let matrix = &g.matrix * &f.matrix;
    let residual = match endpoints {
        Some((source, target)) => defining_residual(&matrix, source, target),
        None => g.matrix.frobenius_norm() * f.residual + g.residual,
    };
    Ok(Morphism { source_id: f.source_id.clone(), target_id: g.target_id.clone(), matrix, residual })
}

pub fn identity_morphism<S: Scalar>(m: &CharacteristicMatrix<S>) -> Morphism<S> {
    Morphism {
        source_id: m.source_id().to_string(),
        target_id: m.source_id().to_string(),
        matrix: Matrix::identity(m.width()),
        residual: S::zero(),
    }
}
