//! The outer reconstruction loop: initialize, then alternate between
//! rebuilding the patch graph from the current iterate and solving the
//! weighted-graph-Laplacian system for the unsampled values.
//!
//! Sampled voxels are copied from the given samples verbatim on every
//! iteration, so they match bit for bit throughout. The loop stops when
//! the relative field change drops below `convergence_tol` or after
//! `max_outer_iters` manifold updates.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::grid::{lex_decode, DataCube, Dims, PatchShape, SampleMask};
use crate::kdtree::KdTree;
use crate::metrics::error_norms;
use crate::parallel;
use crate::patch_graph::{gaussian_weights, knn, normalizing_factors, PatchCloud};
use crate::wgl::{
    assemble_translated_weights, build_system, solve_system, SolveError, SolveOptions, SolveStats,
    SystemError,
};

/// How the unsampled voxels of the first iterate are filled.
#[derive(Clone, Debug)]
pub enum InitStrategy {
    /// Copy the value of the geometrically nearest sampled voxel
    /// (Euclidean grid distance, ties to the lower ordinal).
    NearestFill,
    /// Fill with the mean of the sampled values.
    MeanFill,
    /// Use a caller-supplied field (e.g. a transform-domain
    /// interpolant); its sampled voxels are overwritten with the given
    /// samples so the constraint holds from the start.
    Provided(DataCube),
}

/// Reconstruction controls. `new` gives the random-sampling defaults
/// (up to 10 manifold updates); `refinement` the regular-sampling
/// defaults (3 updates on top of a provided interpolant).
#[derive(Clone, Debug)]
pub struct LdmmConfig {
    pub patch_shape: PatchShape,
    pub k_neighbors: usize,
    pub sigma_rank: usize,
    pub max_outer_iters: usize,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub convergence_tol: f64,
    pub ridge_fallback: bool,
    pub init: InitStrategy,
}

impl LdmmConfig {
    pub fn new(patch_shape: PatchShape) -> Self {
        LdmmConfig {
            patch_shape,
            k_neighbors: 20,
            sigma_rank: 10,
            max_outer_iters: 10,
            cg_tol: 1e-6,
            cg_max_iters: 2000,
            convergence_tol: 1e-3,
            ridge_fallback: false,
            init: InitStrategy::NearestFill,
        }
    }

    /// Defaults for refining a provided interpolant: three manifold
    /// updates.
    pub fn refinement(patch_shape: PatchShape, init: DataCube) -> Self {
        LdmmConfig {
            max_outer_iters: 3,
            init: InitStrategy::Provided(init),
            ..LdmmConfig::new(patch_shape)
        }
    }
}

/// Per-iteration progress record.
#[derive(Clone, Copy, Debug)]
pub struct IterationRecord {
    /// PSNR against the reference, when one was supplied and its range
    /// is usable.
    pub psnr: Option<f64>,
    /// `|f_next - f| / |f|` in the Euclidean norm.
    pub rel_change: f64,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ReconstructionReport {
    pub iterations: Vec<IterationRecord>,
    pub total_seconds: f64,
    pub converged: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum LdmmError {
    #[error("mask samples no voxels")]
    EmptyMask,
    #[error("sample vector length {got} does not match mask count {expected}")]
    SampleCountMismatch { expected: usize, got: usize },
    #[error("patch shape does not fit the grid")]
    PatchShapeDoesNotFit,
    #[error("provided initial field has mismatched extents")]
    ProvidedFieldMismatch,
    #[error("iteration {iteration}: {source}")]
    Solve {
        iteration: usize,
        source: SolveError,
    },
}

struct Stopwatch {
    #[cfg(feature = "std")]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Stopwatch {
            #[cfg(feature = "std")]
            start: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> f64 {
        #[cfg(feature = "std")]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(not(feature = "std"))]
        {
            0.0
        }
    }
}

/// Builds the first iterate: sampled voxels carry `b`, the rest follow
/// the strategy.
pub fn initialize(
    b: &[f64],
    mask: &SampleMask,
    strategy: &InitStrategy,
) -> Result<DataCube, LdmmError> {
    if mask.count() == 0 {
        return Err(LdmmError::EmptyMask);
    }
    if b.len() != mask.count() {
        return Err(LdmmError::SampleCountMismatch {
            expected: mask.count(),
            got: b.len(),
        });
    }
    let dims = mask.dims();
    let n = dims.len();
    let mut values = match strategy {
        InitStrategy::MeanFill => {
            let mean = b.iter().sum::<f64>() / b.len() as f64;
            vec![mean; n]
        }
        InitStrategy::Provided(cube) => {
            if cube.dims() != dims {
                return Err(LdmmError::ProvidedFieldMismatch);
            }
            cube.values().to_vec()
        }
        InitStrategy::NearestFill => {
            if mask.count() == n {
                vec![0.0; n]
            } else {
                nearest_fill(b, mask)
            }
        }
    };
    for (slot, ordinal) in mask.sampled_ordinals().enumerate() {
        values[ordinal] = b[slot];
    }
    Ok(DataCube::from_parts(dims, values))
}

fn nearest_fill(b: &[f64], mask: &SampleMask) -> Vec<f64> {
    let dims = mask.dims();
    let rank = dims.rank();
    let mut coords = Vec::with_capacity(mask.count() * rank);
    for ordinal in mask.sampled_ordinals() {
        let v = lex_decode(dims, ordinal);
        for a in 0..rank {
            coords.push(v[a] as f64);
        }
    }
    let tree = KdTree::build(&coords, rank);
    let mut values = vec![0.0; dims.len()];
    parallel::fill_indexed(&mut values, |ordinal| {
        let v = lex_decode(dims, ordinal);
        let mut q = [0.0; 3];
        for a in 0..rank {
            q[a] = v[a] as f64;
        }
        let (_, nearest) = tree.nearest(&q[..rank], None);
        b[nearest as usize]
    });
    values
}

/// One manifold update: patch cloud, weights, translated assembly,
/// solve. Returns the next iterate (samples reimposed bit-exactly) and
/// the solver stats.
pub fn iterate_once(
    f: &DataCube,
    b: &[f64],
    mask: &SampleMask,
    config: &LdmmConfig,
) -> Result<(DataCube, SolveStats), LdmmError> {
    iterate_inner(f, b, mask, config, 1)
}

fn iterate_inner(
    f: &DataCube,
    b: &[f64],
    mask: &SampleMask,
    config: &LdmmConfig,
    iteration: usize,
) -> Result<(DataCube, SolveStats), LdmmError> {
    let dims = f.dims();
    if !config.patch_shape.fits(dims) {
        return Err(LdmmError::PatchShapeDoesNotFit);
    }
    let n = dims.len();
    let shape = &config.patch_shape;

    let wbar = {
        let cloud = PatchCloud::from_field(f, shape);
        let k = config.k_neighbors.min(n - 1).max(1);
        let r = config.sigma_rank.min(k).max(1);
        let nbrs = knn(&cloud, k);
        let sigma = normalizing_factors(&cloud, &nbrs, r);
        gaussian_weights(&cloud, &nbrs, &sigma)
    };
    let wtilde = assemble_translated_weights(&wbar, shape, dims);
    drop(wbar);
    let system = match build_system(&wtilde, mask) {
        Ok(system) => system,
        Err(SystemError::EmptyMask) => return Err(LdmmError::EmptyMask),
        Err(SystemError::FullySampled) => unreachable!("caller handles full masks"),
    };
    drop(wtilde);

    let warm: Vec<f64> = system
        .unsampled_ordinals()
        .iter()
        .map(|&x| f.values()[x as usize])
        .collect();
    let opts = SolveOptions {
        tol: config.cg_tol,
        max_iters: config.cg_max_iters,
        ridge_fallback: config.ridge_fallback,
    };
    let (v, stats) = solve_system(&system, b, &opts, Some(&warm))
        .map_err(|source| LdmmError::Solve { iteration, source })?;

    let mut values = vec![0.0; n];
    for (i, &x) in system.unsampled_ordinals().iter().enumerate() {
        values[x as usize] = v[i];
    }
    for (j, &x) in system.sampled_ordinals().iter().enumerate() {
        values[x as usize] = b[j];
    }
    Ok((DataCube::from_parts(dims, values), stats))
}

/// Full reconstruction from samples `b` on `mask`. When `reference` is
/// given, per-iteration PSNR is recorded.
pub fn reconstruct(
    b: &[f64],
    mask: &SampleMask,
    config: &LdmmConfig,
    reference: Option<&DataCube>,
) -> Result<(DataCube, ReconstructionReport), LdmmError> {
    let total = Stopwatch::start();
    let mut f = initialize(b, mask, &config.init)?;
    let mut report = ReconstructionReport::default();

    if mask.count() == mask.dims().len() {
        // fully sampled: the initialization is the reconstruction
        report.converged = true;
        report.total_seconds = total.seconds();
        return Ok((f, report));
    }

    for iteration in 1..=config.max_outer_iters {
        let clock = Stopwatch::start();
        let (next, stats) = iterate_inner(&f, b, mask, config, iteration)?;
        let diff: Vec<f64> = f
            .values()
            .iter()
            .zip(next.values())
            .map(|(a, b)| a - b)
            .collect();
        let norm_f = parallel::norm2(f.values()).max(f64::MIN_POSITIVE);
        let rel_change = parallel::norm2(&diff) / norm_f;
        let psnr = reference.and_then(|r| error_norms(r, &next).ok().map(|e| e.psnr));
        report.iterations.push(IterationRecord {
            psnr,
            rel_change,
            cg_iterations: stats.iterations,
            cg_residual: stats.relative_residual,
            seconds: clock.seconds(),
        });
        f = next;
        if rel_change < config.convergence_tol {
            report.converged = true;
            break;
        }
    }

    report.total_seconds = total.seconds();
    Ok((f, report))
}

/// Patch-size defaults keyed by the grid extents: matches the sizes used
/// for same-shaped datasets where those are unambiguous, otherwise 6x6
/// windows in 2D and 6x6x4 in 3D, clipped to the grid.
pub fn default_patch_shape(dims: Dims) -> PatchShape {
    if dims.as_slice() == [188, 64, 32] {
        return PatchShape::d3(4, 4, 4);
    }
    let clip = |s: usize, d: usize| s.min(d);
    match dims.rank() {
        2 => PatchShape::d2(clip(6, dims.as_slice()[0]), clip(6, dims.as_slice()[1])),
        _ => PatchShape::d3(
            clip(6, dims.as_slice()[0]),
            clip(6, dims.as_slice()[1]),
            clip(4, dims.as_slice()[2]),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_mask, regular_mask};
    use crate::wgl::wgl_energy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn smooth_test_field(dims: Dims, seed: u64) -> DataCube {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a1, a2) = (rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5));
        let sizes = dims.padded();
        let values = (0..dims.len())
            .map(|ordinal| {
                let v = lex_decode(dims, ordinal);
                let x = v[0] as f64 / sizes[0] as f64;
                let y = v[1] as f64 / sizes[1] as f64;
                let z = v[2] as f64 / sizes[2] as f64;
                a1 * (2.0 * core::f64::consts::PI * (x + 0.5 * y)).cos()
                    + a2 * (2.0 * core::f64::consts::PI * (y - 0.3 * x + z)).sin()
            })
            .collect();
        DataCube::from_parts(dims, values)
    }

    #[test]
    fn initialize_full_mask_is_the_data() {
        let dims = Dims::d2(5, 5);
        let cube = smooth_test_field(dims, 1);
        let mask = SampleMask::full(dims);
        let b = cube.restrict(&mask).unwrap();
        let f0 = initialize(&b, &mask, &InitStrategy::NearestFill).unwrap();
        assert_eq!(f0, cube);
    }

    #[test]
    fn mean_fill_of_constant_samples_is_constant() {
        let dims = Dims::d2(6, 6);
        let mask = random_mask(dims, 0.2, 3).unwrap();
        let b = vec![2.5; mask.count()];
        let f0 = initialize(&b, &mask, &InitStrategy::MeanFill).unwrap();
        assert!(f0.values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn nearest_fill_matches_brute_force() {
        for (dims, seed) in [(Dims::d2(17, 13), 5u64), (Dims::d3(9, 7, 5), 6u64)] {
            let cube = smooth_test_field(dims, seed);
            let mask = random_mask(dims, 0.15, seed).unwrap();
            let b = cube.restrict(&mask).unwrap();
            let f0 = initialize(&b, &mask, &InitStrategy::NearestFill).unwrap();
            let sampled: Vec<usize> = mask.sampled_ordinals().collect();
            for ordinal in 0..dims.len() {
                let v = lex_decode(dims, ordinal);
                // brute-force nearest sampled voxel, ties to lower ordinal
                let mut best = (f64::INFINITY, usize::MAX);
                for (slot, &s) in sampled.iter().enumerate() {
                    let w = lex_decode(dims, s);
                    let d2 = (0..3)
                        .map(|a| {
                            let diff = v[a] as f64 - w[a] as f64;
                            diff * diff
                        })
                        .sum::<f64>();
                    if d2 < best.0 {
                        best = (d2, slot);
                    }
                }
                assert_eq!(f0.values()[ordinal].to_bits(), b[best.1].to_bits());
            }
        }
    }

    #[test]
    fn nearest_fill_on_stride_mask_is_blockwise_voronoi() {
        let dims = Dims::d2(8, 8);
        let cube = smooth_test_field(dims, 7);
        let mask = regular_mask(dims, &[4, 4]).unwrap();
        let b = cube.restrict(&mask).unwrap();
        let f0 = initialize(&b, &mask, &InitStrategy::NearestFill).unwrap();
        // anchor (0,0) owns its quadrant corner
        assert_eq!(f0.at([1, 1, 0]), cube.at([0, 0, 0]));
        // midpoint ties resolve to the lower ordinal anchor
        assert_eq!(f0.at([2, 2, 0]), cube.at([0, 0, 0]));
    }

    #[test]
    fn provided_field_must_match_dims() {
        let dims = Dims::d2(4, 4);
        let mask = random_mask(dims, 0.5, 1).unwrap();
        let b = vec![0.0; mask.count()];
        let wrong = DataCube::constant(Dims::d2(4, 5), 0.0);
        assert_eq!(
            initialize(&b, &mask, &InitStrategy::Provided(wrong)),
            Err(LdmmError::ProvidedFieldMismatch)
        );
    }

    #[test]
    fn provided_field_is_clamped_to_samples() {
        let dims = Dims::d2(4, 4);
        let mask = random_mask(dims, 0.25, 2).unwrap();
        let b: Vec<f64> = (0..mask.count()).map(|i| i as f64).collect();
        let provided = DataCube::constant(dims, -1.0);
        let f0 = initialize(&b, &mask, &InitStrategy::Provided(provided)).unwrap();
        for (slot, ordinal) in mask.sampled_ordinals().enumerate() {
            assert_eq!(f0.values()[ordinal], b[slot]);
        }
    }

    #[test]
    fn constant_field_recovers_exactly_in_one_iteration() {
        let dims = Dims::d2(12, 12);
        let cube = DataCube::constant(dims, 3.25);
        let mask = random_mask(dims, 0.1, 11).unwrap();
        let b = cube.restrict(&mask).unwrap();
        let mut config = LdmmConfig::new(PatchShape::d2(3, 3));
        config.k_neighbors = 8;
        config.sigma_rank = 4;
        let (out, report) = reconstruct(&b, &mask, &config, Some(&cube)).unwrap();
        assert_eq!(out.values(), cube.values());
        assert!(report.converged);
        assert_eq!(report.iterations.len(), 1);
        assert_eq!(report.iterations[0].rel_change, 0.0);
        assert_eq!(report.iterations[0].psnr, Some(f64::INFINITY));
    }

    #[test]
    fn samples_survive_every_iteration_bit_exactly() {
        let dims = Dims::d2(14, 14);
        let cube = smooth_test_field(dims, 21);
        let mask = random_mask(dims, 0.25, 22).unwrap();
        let b = cube.restrict(&mask).unwrap();
        let mut config = LdmmConfig::new(PatchShape::d2(3, 3));
        config.k_neighbors = 10;
        config.sigma_rank = 5;
        config.max_outer_iters = 3;
        config.convergence_tol = 0.0; // force all iterations
        let mut f = initialize(&b, &mask, &config.init).unwrap();
        for _ in 0..3 {
            let (next, _) = iterate_once(&f, &b, &mask, &config).unwrap();
            for (slot, ordinal) in mask.sampled_ordinals().enumerate() {
                assert_eq!(next.values()[ordinal].to_bits(), b[slot].to_bits());
            }
            f = next;
        }
    }

    #[test]
    fn solve_minimizes_energy_under_its_own_weights() {
        let dims = Dims::d2(10, 10);
        let cube = smooth_test_field(dims, 31);
        let mask = random_mask(dims, 0.3, 32).unwrap();
        let b = cube.restrict(&mask).unwrap();
        let mut config = LdmmConfig::new(PatchShape::d2(2, 2));
        config.k_neighbors = 8;
        config.sigma_rank = 4;
        config.cg_tol = 1e-12;
        let f0 = initialize(&b, &mask, &config.init).unwrap();
        let (f1, _) = iterate_once(&f0, &b, &mask, &config).unwrap();

        // rebuild the iteration's own weights to compare energies
        let cloud = PatchCloud::from_field(&f0, &config.patch_shape);
        let nbrs = knn(&cloud, config.k_neighbors);
        let sigma = normalizing_factors(&cloud, &nbrs, config.sigma_rank);
        let wbar = gaussian_weights(&cloud, &nbrs, &sigma);
        let wtilde = assemble_translated_weights(&wbar, &config.patch_shape, dims);
        let mu = dims.len() as f64 / mask.count() as f64;
        let e0 = wgl_energy(&wtilde, mask.flags(), f0.values(), mu);
        let e1 = wgl_energy(&wtilde, mask.flags(), f1.values(), mu);
        assert!(e1 <= e0, "energy rose from {e0} to {e1}");
    }

    #[test]
    fn converged_field_is_a_fixed_point() {
        let dims = Dims::d2(16, 16);
        let cube = smooth_test_field(dims, 41);
        let mask = random_mask(dims, 0.3, 42).unwrap();
        let b = cube.restrict(&mask).unwrap();
        let mut config = LdmmConfig::new(PatchShape::d2(3, 3));
        config.k_neighbors = 10;
        config.sigma_rank = 5;
        config.max_outer_iters = 40;
        let (out, report) = reconstruct(&b, &mask, &config, None).unwrap();
        assert!(report.converged, "did not converge in 40 iterations");
        let (again, _) = iterate_once(&out, &b, &mask, &config).unwrap();
        let diff: Vec<f64> = out
            .values()
            .iter()
            .zip(again.values())
            .map(|(a, b)| a - b)
            .collect();
        let rel = parallel::norm2(&diff) / parallel::norm2(out.values());
        assert!(
            rel < config.convergence_tol,
            "feeding the converged field back moved it by {rel:.3e}"
        );
    }

    #[test]
    fn reconstruction_beats_its_initialization_on_smooth_data() {
        let dims = Dims::d2(32, 32);
        let cube = smooth_test_field(dims, 51);
        let mask = random_mask(dims, 0.2, 52).unwrap();
        let b = cube.restrict(&mask).unwrap();
        let mut config = LdmmConfig::new(PatchShape::d2(4, 4));
        config.k_neighbors = 12;
        config.sigma_rank = 6;
        let f0 = initialize(&b, &mask, &config.init).unwrap();
        let psnr0 = error_norms(&cube, &f0).unwrap().psnr;
        let (out, report) = reconstruct(&b, &mask, &config, Some(&cube)).unwrap();
        let psnr = error_norms(&cube, &out).unwrap().psnr;
        assert!(
            psnr > psnr0,
            "final {psnr:.2} dB not above initialization {psnr0:.2} dB"
        );
        assert!(!report.iterations.is_empty());
    }

    #[test]
    fn reconstruction_is_deterministic() {
        let dims = Dims::d2(12, 12);
        let cube = smooth_test_field(dims, 61);
        let mask = random_mask(dims, 0.25, 62).unwrap();
        let b = cube.restrict(&mask).unwrap();
        let mut config = LdmmConfig::new(PatchShape::d2(3, 3));
        config.k_neighbors = 8;
        config.sigma_rank = 4;
        let (a, _) = reconstruct(&b, &mask, &config, None).unwrap();
        let (c, _) = reconstruct(&b, &mask, &config, None).unwrap();
        assert_eq!(a.values(), c.values());
    }

    #[test]
    fn full_mask_reconstruction_returns_the_data() {
        let dims = Dims::d2(6, 6);
        let cube = smooth_test_field(dims, 71);
        let mask = SampleMask::full(dims);
        let b = cube.restrict(&mask).unwrap();
        let config = LdmmConfig::new(PatchShape::d2(3, 3));
        let (out, report) = reconstruct(&b, &mask, &config, None).unwrap();
        assert_eq!(out, cube);
        assert!(report.converged);
        assert!(report.iterations.is_empty());
    }

    #[test]
    fn patch_defaults_follow_the_published_sizes() {
        assert_eq!(default_patch_shape(Dims::d2(896, 896)).as_slice(), &[6, 6]);
        assert_eq!(default_patch_shape(Dims::d2(256, 256)).as_slice(), &[6, 6]);
        assert_eq!(
            default_patch_shape(Dims::d3(256, 256, 32)).as_slice(),
            &[6, 6, 4]
        );
        assert_eq!(
            default_patch_shape(Dims::d3(188, 64, 32)).as_slice(),
            &[4, 4, 4]
        );
        // clipped on small grids
        assert_eq!(default_patch_shape(Dims::d3(16, 16, 2)).as_slice(), &[6, 6, 2]);
    }
}
