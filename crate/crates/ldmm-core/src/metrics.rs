//! Range-normalized reconstruction error norms and PSNR.

use thiserror::Error;

use crate::grid::DataCube;
use crate::math;

/// Error norms of a reconstruction against its reference, each
/// normalized by the reference range `R = max f - min f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    /// Mean absolute normalized error.
    pub l1: f64,
    /// Root mean square normalized error.
    pub l2: f64,
    /// Largest absolute normalized error.
    pub linf: f64,
    /// `-20 log10(l2)` decibels; `+inf` for an exact reconstruction.
    pub psnr: f64,
    /// The normalization range actually used.
    pub range: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("reference and reconstruction extents differ")]
    DimsMismatch,
    #[error("reference range is zero; range-normalized norms are undefined, use absolute norms")]
    ZeroRange,
}

/// Computes the error report for `reconstruction` against `reference`.
///
/// An exactly zero error short-circuits to zero norms with the `+inf`
/// PSNR sentinel before the range is inspected, so constant references
/// with exact reconstructions still report cleanly.
pub fn error_norms(
    reference: &DataCube,
    reconstruction: &DataCube,
) -> Result<ErrorReport, MetricsError> {
    if reference.dims() != reconstruction.dims() {
        return Err(MetricsError::DimsMismatch);
    }
    let f = reference.values();
    let fhat = reconstruction.values();
    let range = reference.range();

    if f.iter().zip(fhat).all(|(a, b)| a - b == 0.0) {
        return Ok(ErrorReport {
            l1: 0.0,
            l2: 0.0,
            linf: 0.0,
            psnr: f64::INFINITY,
            range,
        });
    }
    if range == 0.0 {
        return Err(MetricsError::ZeroRange);
    }

    let n = f.len() as f64;
    let mut sum_abs = 0.0;
    let mut sum_sq = 0.0;
    let mut max_abs: f64 = 0.0;
    for (a, b) in f.iter().zip(fhat) {
        let e = (a - b) / range;
        sum_abs += math::abs(e);
        sum_sq += e * e;
        max_abs = max_abs.max(math::abs(e));
    }
    let l2 = math::sqrt(sum_sq / n);
    Ok(ErrorReport {
        l1: sum_abs / n,
        l2,
        linf: max_abs,
        psnr: -20.0 * math::log10(l2),
        range,
    })
}
