//! Sampling masks: uniform random subsets and regular decimation
//! lattices.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{lex_decode, Dims, SampleMask};
use crate::math;

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("sampling rate {rate} outside (0, 1]")]
    RateOutOfRange { rate: f64 },
    #[error("sampling rate {rate} selects zero voxels on a grid of {voxels}")]
    EmptySelection { rate: f64, voxels: usize },
    #[error("stride vector {strides:?} invalid for dims {dims:?}")]
    BadStrides { strides: Vec<usize>, dims: Vec<usize> },
}

/// Uniform random mask with exactly `round(rate * |grid|)` sampled
/// voxels, drawn without replacement. Deterministic per seed.
pub fn random_mask(dims: Dims, rate: f64, seed: u64) -> Result<SampleMask, SamplingError> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(SamplingError::RateOutOfRange { rate });
    }
    let n = dims.len();
    let count = math::round(rate * n as f64) as usize;
    if count == 0 {
        return Err(SamplingError::EmptySelection { rate, voxels: n });
    }
    let count = count.min(n);
    let mut ordinals: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ordinals.shuffle(&mut rng);
    let mut flags = vec![false; n];
    for &ordinal in &ordinals[..count] {
        flags[ordinal] = true;
    }
    Ok(SampleMask::new(dims, flags).expect("flag length matches dims"))
}

/// Decimation mask anchored at the origin: a voxel is sampled iff every
/// coordinate is divisible by its stride.
pub fn regular_mask(dims: Dims, strides: &[usize]) -> Result<SampleMask, SamplingError> {
    let bad = || SamplingError::BadStrides {
        strides: strides.to_vec(),
        dims: dims.as_slice().to_vec(),
    };
    if strides.len() != dims.rank() {
        return Err(bad());
    }
    if strides
        .iter()
        .zip(dims.as_slice())
        .any(|(&s, &d)| s == 0 || s > d)
    {
        return Err(bad());
    }
    let mut padded = [1usize; 3];
    padded[..strides.len()].copy_from_slice(strides);
    let mut flags = vec![false; dims.len()];
    for (ordinal, flag) in flags.iter_mut().enumerate() {
        let v = lex_decode(dims, ordinal);
        *flag = v[0] % padded[0] == 0 && v[1] % padded[1] == 0 && v[2] % padded[2] == 0;
    }
    Ok(SampleMask::new(dims, flags).expect("flag length matches dims"))
}

/// Recovers the per-axis strides of a mask produced by [`regular_mask`],
/// or `None` when the mask is not such a lattice.
pub fn infer_regular_strides(mask: &SampleMask) -> Option<Vec<usize>> {
    let dims = mask.dims();
    let mut strides = vec![0usize; dims.rank()];
    for axis in 0..dims.rank() {
        let size = dims.as_slice()[axis];
        // smallest nonzero sampled coordinate along the axis, if any
        let mut smallest = None;
        for ordinal in mask.sampled_ordinals() {
            let c = lex_decode(dims, ordinal)[axis];
            if c > 0 {
                smallest = Some(match smallest {
                    Some(prev) if prev <= c => prev,
                    _ => c,
                });
            }
        }
        strides[axis] = smallest.unwrap_or(size);
    }
    let candidate = regular_mask(dims, &strides).ok()?;
    (&candidate == mask).then_some(strides)
}
