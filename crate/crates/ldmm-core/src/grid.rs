//! Dense fields on 2D/3D integer grids with periodic patch algebra.
//!
//! Voxels are addressed in lexicographic order with the first coordinate
//! most significant and the last fastest-varying. Patches are windows of
//! shape `s1 x s2 (x s3)` anchored at their lexicographically-first
//! corner; windows that run past the grid boundary wrap periodically, so
//! every patch-element translation is a permutation of the voxel set.
//!
//! Internally dims, voxels and patch shapes are padded to three
//! components (trailing size 1 / coordinate 0) so 2D and 3D share the
//! same index arithmetic.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

/// Grid extents, rank 2 or 3.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Dims {
    sizes: [usize; 3],
    rank: usize,
}

/// A voxel coordinate, padded to three components (last is 0 for 2D).
pub type Voxel = [usize; 3];

impl Dims {
    /// Builds grid extents from a 2- or 3-element slice of positive sizes.
    pub fn new(sizes: &[usize]) -> Self {
        assert!(
            sizes.len() == 2 || sizes.len() == 3,
            "dims must have rank 2 or 3, got {}",
            sizes.len()
        );
        assert!(sizes.iter().all(|&s| s > 0), "dims must be positive: {sizes:?}");
        let mut padded = [1usize; 3];
        padded[..sizes.len()].copy_from_slice(sizes);
        Dims {
            sizes: padded,
            rank: sizes.len(),
        }
    }

    pub fn d2(m: usize, n: usize) -> Self {
        Dims::new(&[m, n])
    }

    pub fn d3(m: usize, n: usize, r: usize) -> Self {
        Dims::new(&[m, n, r])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Sizes of the declared axes only.
    pub fn as_slice(&self) -> &[usize] {
        &self.sizes[..self.rank]
    }

    /// Sizes padded to three axes (trailing 1s for 2D).
    pub fn padded(&self) -> [usize; 3] {
        self.sizes
    }

    /// Total voxel count.
    pub fn len(&self) -> usize {
        self.sizes[0] * self.sizes[1] * self.sizes[2]
    }

    pub fn is_empty(&self) -> bool {
        false // sizes are positive by construction
    }

    fn contains(&self, v: Voxel) -> bool {
        v[0] < self.sizes[0] && v[1] < self.sizes[1] && v[2] < self.sizes[2]
    }
}

/// Ordinal of a voxel in lexicographic order (first coordinate most
/// significant).
#[inline]
pub fn lex_encode(dims: Dims, v: Voxel) -> usize {
    assert!(
        dims.contains(v),
        "voxel {v:?} out of range for dims {:?}",
        dims.as_slice()
    );
    let [_, n, r] = dims.padded();
    (v[0] * n + v[1]) * r + v[2]
}

/// Inverse of [`lex_encode`].
#[inline]
pub fn lex_decode(dims: Dims, ordinal: usize) -> Voxel {
    assert!(ordinal < dims.len(), "ordinal {ordinal} out of range");
    let [_, n, r] = dims.padded();
    let v2 = ordinal % r;
    let rest = ordinal / r;
    [rest / n, rest % n, v2]
}

/// Componentwise `(v + offset) mod dims`.
#[inline]
pub fn translate(dims: Dims, v: Voxel, offset: [usize; 3]) -> Voxel {
    let s = dims.padded();
    [
        (v[0] + offset[0]) % s[0],
        (v[1] + offset[1]) % s[1],
        (v[2] + offset[2]) % s[2],
    ]
}

/// Negates an offset modulo the grid extents.
#[inline]
pub fn negate_offset(dims: Dims, offset: [usize; 3]) -> [usize; 3] {
    let s = dims.padded();
    [
        (s[0] - offset[0] % s[0]) % s[0],
        (s[1] - offset[1] % s[1]) % s[1],
        (s[2] - offset[2] % s[2]) % s[2],
    ]
}

/// Patch window shape; `len()` is the ambient patch dimension d.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PatchShape {
    sizes: [usize; 3],
    rank: usize,
}

impl PatchShape {
    pub fn new(sizes: &[usize]) -> Self {
        assert!(
            sizes.len() == 2 || sizes.len() == 3,
            "patch shape must have rank 2 or 3"
        );
        assert!(sizes.iter().all(|&s| s > 0), "patch sizes must be positive");
        let mut padded = [1usize; 3];
        padded[..sizes.len()].copy_from_slice(sizes);
        PatchShape {
            sizes: padded,
            rank: sizes.len(),
        }
    }

    pub fn d2(s1: usize, s2: usize) -> Self {
        PatchShape::new(&[s1, s2])
    }

    pub fn d3(s1: usize, s2: usize, s3: usize) -> Self {
        PatchShape::new(&[s1, s2, s3])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.sizes[..self.rank]
    }

    /// Ambient patch dimension d = product of sizes.
    pub fn len(&self) -> usize {
        self.sizes[0] * self.sizes[1] * self.sizes[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lexicographic decode of patch element `j` into a coordinate offset.
    #[inline]
    pub fn offset(&self, j: usize) -> [usize; 3] {
        assert!(j < self.len(), "patch element {j} out of range (d = {})", self.len());
        let [_, s2, s3] = self.sizes;
        let c = j % s3;
        let rest = j / s3;
        [rest / s2, rest % s2, c]
    }

    /// True when the window fits the grid (componentwise `size <= dim`).
    pub fn fits(&self, dims: Dims) -> bool {
        self.rank == dims.rank()
            && self.sizes[0] <= dims.padded()[0]
            && self.sizes[1] <= dims.padded()[1]
            && self.sizes[2] <= dims.padded()[2]
    }
}

/// The voxel holding patch element `j` of the patch anchored at `v`.
#[inline]
pub fn patch_translate(dims: Dims, v: Voxel, shape: &PatchShape, j: usize) -> Voxel {
    translate(dims, v, shape.offset(j))
}

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("value count {got} does not match voxel count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at voxel ordinal {ordinal}")]
    NonFinite { ordinal: usize },
    #[error("grid extents differ: {a:?} vs {b:?}")]
    DimsMismatch { a: Vec<usize>, b: Vec<usize> },
}

/// Dense real field over a grid, immutable after construction.
#[derive(Clone, PartialEq, Debug)]
pub struct DataCube {
    dims: Dims,
    values: Vec<f64>,
}

impl DataCube {
    /// Validating constructor: length must match and every value must be
    /// finite.
    pub fn new(dims: Dims, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != dims.len() {
            return Err(GridError::LengthMismatch {
                expected: dims.len(),
                got: values.len(),
            });
        }
        if let Some(ordinal) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { ordinal });
        }
        Ok(DataCube { dims, values })
    }

    /// Internal constructor for values already known to be finite.
    pub(crate) fn from_parts(dims: Dims, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), dims.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        DataCube { dims, values }
    }

    pub fn constant(dims: Dims, c: f64) -> Self {
        assert!(c.is_finite());
        DataCube {
            values: vec![c; dims.len()],
            dims,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, v: Voxel) -> f64 {
        self.values[lex_encode(self.dims, v)]
    }

    /// `max - min` of the stored values.
    pub fn range(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }

    /// Copies the patch anchored at `v` into `out` (length d), element
    /// `i` being the value at the i-th window position with periodic
    /// wrap.
    pub fn extract_patch_into(&self, v: Voxel, shape: &PatchShape, out: &mut [f64]) {
        assert!(shape.fits(self.dims), "patch shape does not fit the grid");
        assert_eq!(out.len(), shape.len());
        let [_, n, r] = self.dims.padded();
        let [s1, s2, s3] = shape.sizes;
        let d = self.dims.padded();
        let mut idx = 0;
        for a in 0..s1 {
            let x0 = (v[0] + a) % d[0];
            for b in 0..s2 {
                let x1 = (v[1] + b) % d[1];
                let base = (x0 * n + x1) * r;
                for c in 0..s3 {
                    let x2 = (v[2] + c) % d[2];
                    out[idx] = self.values[base + x2];
                    idx += 1;
                }
            }
        }
    }

    pub fn extract_patch(&self, v: Voxel, shape: &PatchShape) -> Vec<f64> {
        let mut out = vec![0.0; shape.len()];
        self.extract_patch_into(v, shape, &mut out);
        out
    }

    /// Translation operator: output(x) = f(x + offset(i)), periodic.
    pub fn shift_field(&self, i: usize, shape: &PatchShape) -> DataCube {
        self.shift_by(shape.offset(i))
    }

    /// Adjoint (= inverse) translation: output(x) = f(x - offset(i)).
    pub fn adjoint_shift(&self, i: usize, shape: &PatchShape) -> DataCube {
        self.shift_by(negate_offset(self.dims, shape.offset(i)))
    }

    fn shift_by(&self, offset: [usize; 3]) -> DataCube {
        let dims = self.dims;
        let mut values = vec![0.0; self.values.len()];
        for (ordinal, slot) in values.iter_mut().enumerate() {
            let v = lex_decode(dims, ordinal);
            *slot = self.values[lex_encode(dims, translate(dims, v, offset))];
        }
        DataCube { dims, values }
    }

    /// Values at sampled voxels in lexicographic order of the sampled set.
    pub fn restrict(&self, mask: &SampleMask) -> Result<Vec<f64>, GridError> {
        if mask.dims() != self.dims {
            return Err(GridError::DimsMismatch {
                a: self.dims.as_slice().to_vec(),
                b: mask.dims().as_slice().to_vec(),
            });
        }
        let mut out = Vec::with_capacity(mask.count());
        for (ordinal, &flag) in mask.flags().iter().enumerate() {
            if flag {
                out.push(self.values[ordinal]);
            }
        }
        Ok(out)
    }
}

/// Boolean sampling mask over a grid; `true` marks a sampled voxel.
#[derive(Clone, PartialEq, Debug)]
pub struct SampleMask {
    dims: Dims,
    flags: Vec<bool>,
    count: usize,
}

impl SampleMask {
    pub fn new(dims: Dims, flags: Vec<bool>) -> Result<Self, GridError> {
        if flags.len() != dims.len() {
            return Err(GridError::LengthMismatch {
                expected: dims.len(),
                got: flags.len(),
            });
        }
        let count = flags.iter().filter(|&&f| f).count();
        Ok(SampleMask { dims, flags, count })
    }

    pub fn full(dims: Dims) -> Self {
        SampleMask {
            count: dims.len(),
            flags: vec![true; dims.len()],
            dims,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    #[inline]
    pub fn is_sampled(&self, ordinal: usize) -> bool {
        self.flags[ordinal]
    }

    /// Number of sampled voxels.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Ordinals of sampled voxels, ascending.
    pub fn sampled_ordinals(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
    }

    /// Ordinals of unsampled voxels, ascending.
    pub fn unsampled_ordinals(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| (!f).then_some(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cube(dims: Dims, seed: u64) -> DataCube {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..dims.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        DataCube::from_parts(dims, values)
    }

    #[test]
    fn lex_encode_examples() {
        assert_eq!(lex_encode(Dims::d2(4, 4), [0, 0, 0]), 0);
        assert_eq!(lex_encode(Dims::d2(4, 4), [1, 2, 0]), 6);
        assert_eq!(lex_encode(Dims::d3(4, 4, 4), [3, 3, 3]), 63);
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn lex_encode_rejects_out_of_range() {
        lex_encode(Dims::d2(4, 4), [4, 0, 0]);
    }

    #[test]
    fn lex_round_trip_exhaustive() {
        for dims in [Dims::d2(5, 3), Dims::d3(6, 6, 6), Dims::d3(2, 5, 3)] {
            for ordinal in 0..dims.len() {
                assert_eq!(lex_encode(dims, lex_decode(dims, ordinal)), ordinal);
            }
        }
    }

    #[test]
    fn translate_examples() {
        let dims = Dims::d2(4, 4);
        let shape = PatchShape::d2(2, 2);
        // zero offset is the identity
        assert_eq!(patch_translate(dims, [2, 1, 0], &shape, 0), [2, 1, 0]);
        // offsets (1,1) wrap both axes from the far corner
        assert_eq!(patch_translate(dims, [3, 3, 0], &shape, 3), [0, 0, 0]);
        // j = 1 decodes to offset (0,1)
        assert_eq!(patch_translate(dims, [0, 0, 0], &shape, 1), [0, 1, 0]);
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn translate_rejects_large_element() {
        patch_translate(Dims::d2(4, 4), [0, 0, 0], &PatchShape::d2(2, 2), 4);
    }

    #[test]
    fn translate_is_a_group_action() {
        let dims = Dims::d3(4, 5, 3);
        let shape = PatchShape::d3(3, 2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let v = [
                rng.gen_range(0..4usize),
                rng.gen_range(0..5usize),
                rng.gen_range(0..3usize),
            ];
            let i = rng.gen_range(0..shape.len());
            let j = rng.gen_range(0..shape.len());
            let oi = shape.offset(i);
            let oj = shape.offset(j);
            let sum = [oi[0] + oj[0], oi[1] + oj[1], oi[2] + oj[2]];
            let composed = translate(dims, translate(dims, v, oi), oj);
            assert_eq!(composed, translate(dims, v, sum));
        }
    }

    #[test]
    fn extract_patch_constant_cube() {
        let cube = DataCube::constant(Dims::d2(5, 5), 2.5);
        let patch = cube.extract_patch([3, 4, 0], &PatchShape::d2(3, 3));
        assert_eq!(patch, vec![2.5; 9]);
    }

    #[test]
    fn patch_dimension_matches_shape_product() {
        // 6x6x4 windows have ambient dimension 144
        assert_eq!(PatchShape::d3(6, 6, 4).len(), 144);
    }

    #[test]
    fn extract_patch_wraps_periodically() {
        let cube = DataCube::new(Dims::d2(2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let patch = cube.extract_patch([1, 1, 0], &PatchShape::d2(2, 2));
        assert_eq!(patch, vec![4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn shift_zero_is_identity() {
        let cube = random_cube(Dims::d3(4, 3, 2), 1);
        let shape = PatchShape::d3(2, 2, 2);
        assert_eq!(cube.shift_field(0, &shape), cube);
        assert_eq!(cube.adjoint_shift(0, &shape), cube);
    }

    #[test]
    fn shift_and_adjoint_are_inverse_bitwise() {
        let cube = random_cube(Dims::d2(6, 5), 2);
        let shape = PatchShape::d2(3, 2);
        for i in 0..shape.len() {
            let back = cube.shift_field(i, &shape).adjoint_shift(i, &shape);
            assert_eq!(back, cube, "shift {i} not inverted exactly");
        }
    }

    #[test]
    fn shift_adjoint_inner_product_identity() {
        let dims = Dims::d3(5, 4, 3);
        let shape = PatchShape::d3(3, 3, 2);
        let f = random_cube(dims, 3);
        let g = random_cube(dims, 4);
        for i in 0..shape.len() {
            let lhs = crate::parallel::dot(f.shift_field(i, &shape).values(), g.values());
            let rhs = crate::parallel::dot(f.values(), g.adjoint_shift(i, &shape).values());
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn extract_patch_agrees_with_shift_field() {
        let dims = Dims::d2(7, 5);
        let shape = PatchShape::d2(3, 3);
        let cube = random_cube(dims, 5);
        let shifted: Vec<DataCube> = (0..shape.len()).map(|i| cube.shift_field(i, &shape)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut patch = vec![0.0; shape.len()];
        for _ in 0..50 {
            let v = [rng.gen_range(0..7usize), rng.gen_range(0..5usize), 0];
            cube.extract_patch_into(v, &shape, &mut patch);
            for (i, s) in shifted.iter().enumerate() {
                assert_eq!(patch[i], s.at(v));
            }
        }
    }

    #[test]
    fn restrict_full_mask_returns_everything() {
        let cube = random_cube(Dims::d2(4, 4), 8);
        let mask = SampleMask::full(cube.dims());
        assert_eq!(cube.restrict(&mask).unwrap(), cube.values());
    }

    #[test]
    fn restrict_stride_four_keeps_origin_only() {
        let dims = Dims::d2(4, 4);
        let cube = random_cube(dims, 9);
        let flags: Vec<bool> = (0..dims.len())
            .map(|ordinal| {
                let v = lex_decode(dims, ordinal);
                v[0] % 4 == 0 && v[1] % 4 == 0
            })
            .collect();
        let mask = SampleMask::new(dims, flags).unwrap();
        let b = cube.restrict(&mask).unwrap();
        assert_eq!(b, vec![cube.at([0, 0, 0])]);
    }

    #[test]
    fn restrict_rejects_dim_mismatch() {
        let cube = random_cube(Dims::d2(4, 4), 10);
        let mask = SampleMask::full(Dims::d2(4, 5));
        assert!(matches!(cube.restrict(&mask), Err(GridError::DimsMismatch { .. })));
    }

    #[test]
    fn cube_rejects_non_finite_values() {
        let err = DataCube::new(Dims::d2(2, 2), vec![0.0, f64::NAN, 1.0, 2.0]).unwrap_err();
        assert_eq!(err, GridError::NonFinite { ordinal: 1 });
    }
}
