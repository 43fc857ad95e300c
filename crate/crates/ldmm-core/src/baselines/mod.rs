//! Transform-domain interpolation and budgeted compression baselines:
//! separable DCT/DFT spectral interpolation, natural cubic splines,
//! largest-coefficient transform coding, and truncated SVD.

mod spline;
mod svd;
mod transform;

pub use spline::spline_interpolate;
pub use svd::svd_compress;
pub use transform::{
    dct_forward, dct_inverse, spectral_interpolate, transform_compress, Transform,
};

use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("compression rate {rate} outside (0, 1]")]
    BadRate { rate: f64 },
    #[error("budget of {budget} stored values cannot cover the minimum of {required}")]
    BudgetTooSmall { budget: usize, required: usize },
    #[error("decimated dims {decimated:?} do not match ceil({full:?} / {strides:?})")]
    StrideMismatch {
        decimated: Vec<usize>,
        full: Vec<usize>,
        strides: Vec<usize>,
    },
    #[error("axis {axis} has fewer than 2 samples; spline interpolation needs at least 2")]
    InsufficientSamples { axis: usize },
    #[error("operation is defined for 2D fields only")]
    RequiresTwoD,
}

/// Storage budget for compression: a fraction of the voxel count, in
/// stored real values. Complex coefficients count as two values; a
/// rank-r SVD of an m x n matrix counts as `r (m + n + 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    rate: f64,
}

impl Budget {
    pub fn new(rate: f64) -> Result<Self, BaselineError> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(BaselineError::BadRate { rate });
        }
        Ok(Budget { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Allowed number of stored real values for a field of `n` voxels.
    pub fn stored_values(&self, n: usize) -> usize {
        (self.rate * n as f64) as usize
    }
}

/// Element stride of `axis` in a lexicographic layout of `sizes`.
pub(crate) fn transform_axis_stride(sizes: [usize; 3], axis: usize) -> usize {
    match axis {
        0 => sizes[1] * sizes[2],
        1 => sizes[2],
        _ => 1,
    }
}

pub(crate) fn validate_decimation(
    decimated: crate::grid::Dims,
    strides: &[usize],
    full: crate::grid::Dims,
) -> Result<(), BaselineError> {
    let err = || BaselineError::StrideMismatch {
        decimated: decimated.as_slice().to_vec(),
        full: full.as_slice().to_vec(),
        strides: strides.to_vec(),
    };
    if strides.len() != full.rank() || decimated.rank() != full.rank() {
        return Err(err());
    }
    if strides.iter().any(|&s| s == 0) {
        return Err(err());
    }
    for a in 0..full.rank() {
        if decimated.as_slice()[a] != full.as_slice()[a].div_ceil(strides[a]) {
            return Err(err());
        }
    }
    Ok(())
}
