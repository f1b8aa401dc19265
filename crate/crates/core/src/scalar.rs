//! Floating-point scalar abstraction used by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray_linalg::SVD;
use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type the characteristic-matrix machinery is generic over.
///
/// Implemented for `f32` and `f64`. The associated tolerances scale with the
/// precision of the type so the same algorithms can run at either width.
pub trait Scalar:
    Float + FromPrimitive + Sum + Default + Debug + Display + Serialize + DeserializeOwned + Send + Sync + 'static
{
    /// Singular values at or below `rank_tolerance() * sigma_max` are treated as zero.
    fn rank_tolerance() -> Self;

    /// Allowed deviation of a weight vector's sum from one.
    fn weight_sum_tolerance() -> Self;

    /// Converts an `f64` literal. Values outside the type's range saturate to infinity.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::infinity)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Thin SVD of a row-major `rows × cols` matrix, singular values unsorted.
    /// `None` if LAPACK reports failure.
    fn thin_svd(rows: usize, cols: usize, data: &[Self]) -> Option<ThinSvd<Self>>;
}

/// Raw thin SVD factors with `r = min(rows, cols)`: `u` is `rows × r` and
/// `v_t` is `r × cols`, both row-major.
#[derive(Debug, Clone)]
pub struct ThinSvd<S> {
    pub u: Vec<S>,
    pub sigma: Vec<S>,
    pub v_t: Vec<S>,
}

macro_rules! lapack_svd {
    ($t:ty) => {
        fn thin_svd(rows: usize, cols: usize, data: &[$t]) -> Option<ThinSvd<$t>> {
            let a = ndarray::Array2::<$t>::from_shape_vec((rows, cols), data.to_vec()).ok()?;
            let (u, sigma, v_t) = a.svd(true, true).ok()?;
            let r = rows.min(cols);
            Some(ThinSvd {
                u: u?.slice(ndarray::s![.., ..r]).iter().copied().collect(),
                sigma: sigma.to_vec(),
                v_t: v_t?.slice(ndarray::s![..r, ..]).iter().copied().collect(),
            })
        }
    };
}

impl Scalar for f64 {
    fn rank_tolerance() -> Self {
        1e-12
    }

    fn weight_sum_tolerance() -> Self {
        1e-12
    }

    lapack_svd!(f64);
}

impl Scalar for f32 {
    fn rank_tolerance() -> Self {
        1e-5
    }

    fn weight_sum_tolerance() -> Self {
        1e-5
    }

    lapack_svd!(f32);
}
