//! Separable natural cubic spline interpolation of decimated grids.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{DataCube, Dims};

use super::{validate_decimation, BaselineError};

/// Second derivatives (moments) of the natural cubic spline through
/// `(ts[i], ys[i])`, solved with the Thomas algorithm.
fn natural_moments(ts: &[f64], ys: &[f64]) -> Vec<f64> {
    let m = ts.len();
    debug_assert!(m >= 2);
    let mut moments = vec![0.0; m];
    if m == 2 {
        return moments;
    }
    let interior = m - 2;
    let mut diag = vec![0.0; interior];
    let mut upper = vec![0.0; interior];
    let mut lower = vec![0.0; interior];
    let mut rhs = vec![0.0; interior];
    for i in 0..interior {
        let h0 = ts[i + 1] - ts[i];
        let h1 = ts[i + 2] - ts[i + 1];
        lower[i] = h0 / 6.0;
        diag[i] = (h0 + h1) / 3.0;
        upper[i] = h1 / 6.0;
        rhs[i] = (ys[i + 2] - ys[i + 1]) / h1 - (ys[i + 1] - ys[i]) / h0;
    }
    // forward elimination
    for i in 1..interior {
        let factor = lower[i] / diag[i - 1];
        diag[i] -= factor * upper[i - 1];
        rhs[i] -= factor * rhs[i - 1];
    }
    // back substitution
    moments[interior] = rhs[interior - 1] / diag[interior - 1];
    for i in (1..interior).rev() {
        moments[i] = (rhs[i - 1] - upper[i - 1] * moments[i + 1]) / diag[i - 1];
    }
    moments
}

/// Evaluates the spline at `x`; positions beyond the knot range follow
/// the first/last cubic segment.
fn eval_spline(ts: &[f64], ys: &[f64], moments: &[f64], x: f64) -> f64 {
    let m = ts.len();
    let seg = match ts.binary_search_by(|t| t.partial_cmp(&x).expect("finite knots")) {
        Ok(i) => i.min(m - 2),
        Err(i) => i.saturating_sub(1).min(m - 2),
    };
    let h = ts[seg + 1] - ts[seg];
    let dx = x - ts[seg];
    let slope = (ys[seg + 1] - ys[seg]) / h;
    let b = slope - h * (2.0 * moments[seg] + moments[seg + 1]) / 6.0;
    let c = moments[seg] / 2.0;
    let d = (moments[seg + 1] - moments[seg]) / (6.0 * h);
    ys[seg] + dx * (b + dx * (c + dx * d))
}

/// Tensor-product natural cubic spline through the coarse samples at
/// their anchor coordinates `0, s, 2s, ...`, evaluated on the full grid.
/// Axes with stride 1 are copied through. The spline passes through the
/// anchors exactly.
pub fn spline_interpolate(
    decimated: &DataCube,
    strides: &[usize],
    full_dims: Dims,
) -> Result<DataCube, BaselineError> {
    validate_decimation(decimated.dims(), strides, full_dims)?;
    let rank = full_dims.rank();
    let full = full_dims.padded();
    let mut padded_strides = [1usize; 3];
    padded_strides[..rank].copy_from_slice(strides);

    // expand one axis at a time
    let mut sizes = decimated.dims().padded();
    let mut values = decimated.values().to_vec();
    for axis in 0..rank {
        let m = sizes[axis];
        let n = full[axis];
        if padded_strides[axis] == 1 || m == n {
            continue;
        }
        if m < 2 {
            return Err(BaselineError::InsufficientSamples { axis });
        }
        let ts: Vec<f64> = (0..m).map(|i| (i * padded_strides[axis]) as f64).collect();
        let mut new_sizes = sizes;
        new_sizes[axis] = n;
        let mut out = vec![0.0; new_sizes[0] * new_sizes[1] * new_sizes[2]];

        let stride_in = super::transform_axis_stride(sizes, axis);
        let stride_out = super::transform_axis_stride(new_sizes, axis);
        let outer: [usize; 2] = match axis {
            0 => [sizes[1], sizes[2]],
            1 => [sizes[0], sizes[2]],
            _ => [sizes[0], sizes[1]],
        };
        let outer_strides_in: [usize; 2] = match axis {
            0 => [sizes[2], 1],
            1 => [sizes[1] * sizes[2], 1],
            _ => [sizes[1] * sizes[2], sizes[2]],
        };
        let outer_strides_out: [usize; 2] = match axis {
            0 => [new_sizes[2], 1],
            1 => [new_sizes[1] * new_sizes[2], 1],
            _ => [new_sizes[1] * new_sizes[2], new_sizes[2]],
        };

        let mut line = vec![0.0; m];
        for u in 0..outer[0] {
            for v in 0..outer[1] {
                let base_in = u * outer_strides_in[0] + v * outer_strides_in[1];
                let base_out = u * outer_strides_out[0] + v * outer_strides_out[1];
                for i in 0..m {
                    line[i] = values[base_in + i * stride_in];
                }
                let moments = natural_moments(&ts, &line);
                for x in 0..n {
                    out[base_out + x * stride_out] =
                        eval_spline(&ts, &line, &moments, x as f64);
                }
            }
        }
        sizes = new_sizes;
        values = out;
    }
    debug_assert_eq!(sizes, full);
    DataCube::new(full_dims, values).map_err(|_| BaselineError::InsufficientSamples { axis: 0 })
}
