//! Deterministic synthetic fields exercising the three patch-cloud
//! regimes the reconstruction targets: globally smooth data, piecewise
//! smooth data with a jump interface, and modulated oscillations, plus
//! a tiled absorber-array stand-in.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{lex_decode, DataCube, Dims};
use crate::math;
use crate::parallel;

/// Sum of a few random low-frequency cosine modes.
#[derive(Clone, Copy, Debug)]
pub struct SmoothConfig {
    /// Number of random modes.
    pub modes: usize,
    /// Largest per-axis frequency index drawn (half-sample cosine
    /// convention), so the spectrum above this index is empty.
    pub max_freq: usize,
    /// Overall amplitude scale; zero gives a constant cube.
    pub amplitude: f64,
    pub offset: f64,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        SmoothConfig {
            modes: 8,
            max_freq: 3,
            amplitude: 1.0,
            offset: 0.0,
        }
    }
}

pub fn smooth_field(dims: Dims, seed: u64) -> DataCube {
    smooth_field_with(dims, seed, &SmoothConfig::default())
}

pub fn smooth_field_with(dims: Dims, seed: u64, config: &SmoothConfig) -> DataCube {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = dims.padded();
    // per-mode frequency triple and amplitude
    let mut amps = Vec::with_capacity(config.modes);
    let mut tables: Vec<[Vec<f64>; 3]> = Vec::with_capacity(config.modes);
    for _ in 0..config.modes {
        let mut freq = [0usize; 3];
        for (a, f) in freq.iter_mut().enumerate() {
            let cap = config.max_freq.min(sizes[a] - 1);
            *f = rng.gen_range(0..=cap);
        }
        let magnitude: f64 = rng.gen_range(0.5..1.5);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        amps.push(config.amplitude * magnitude * sign);
        // half-sample cosine tables land each mode on one transform bin
        let table = |axis: usize| -> Vec<f64> {
            let l = sizes[axis];
            (0..l)
                .map(|x| {
                    math::cos(
                        core::f64::consts::PI * (2 * x + 1) as f64 * freq[axis] as f64
                            / (2 * l) as f64,
                    )
                })
                .collect()
        };
        tables.push([table(0), table(1), table(2)]);
    }
    let mut values = vec![0.0; dims.len()];
    parallel::fill_indexed(&mut values, |ordinal| {
        let v = lex_decode(dims, ordinal);
        let mut acc = 0.0;
        for (amp, t) in amps.iter().zip(&tables) {
            acc += amp * t[0][v[0]] * t[1][v[1]] * t[2][v[2]];
        }
        config.offset + acc
    });
    DataCube::from_parts(dims, values)
}

/// A smooth field plus a jump across a seeded smooth interface.
#[derive(Clone, Copy, Debug)]
pub struct ShockConfig {
    /// Jump magnitude; zero reduces to [`smooth_field`] of the same seed.
    pub jump: f64,
}

impl Default for ShockConfig {
    fn default() -> Self {
        // comparable to the smooth component's range, so the interface
        // dominates the local structure the way a strong shock does
        ShockConfig { jump: 5.0 }
    }
}

pub fn shock_field(dims: Dims, seed: u64) -> DataCube {
    shock_field_with(dims, seed, &ShockConfig::default())
}

pub fn shock_field_with(dims: Dims, seed: u64, config: &ShockConfig) -> DataCube {
    let base = smooth_field(dims, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let sizes = dims.padded();
    let mut normal = [0.0; 3];
    for n in normal.iter_mut().take(dims.rank()) {
        *n = rng.gen_range(-1.0..1.0f64);
    }
    let scale = normal.iter().map(|n| math::abs(*n)).fold(0.0, f64::max);
    if scale > 0.0 {
        for n in &mut normal {
            *n /= scale;
        }
    } else {
        normal[0] = 1.0;
    }
    let bend = smooth_field_with(
        dims,
        seed ^ 0x517C_C1B7_2722_0A95,
        &SmoothConfig {
            modes: 4,
            max_freq: 2,
            amplitude: 1.0,
            offset: 0.0,
        },
    );
    let bend_scale = bend.values().iter().map(|v| math::abs(*v)).fold(0.0, f64::max);
    let bend_amp = if bend_scale > 0.0 { 0.25 / bend_scale } else { 0.0 };

    let values = base
        .values()
        .iter()
        .enumerate()
        .map(|(ordinal, &b)| {
            let v = lex_decode(dims, ordinal);
            let mut level = 0.0;
            for a in 0..3 {
                level += normal[a] * ((v[a] as f64 + 0.5) / sizes[a] as f64 - 0.5);
            }
            level += bend_amp * bend.values()[ordinal];
            if level >= 0.0 {
                b + config.jump
            } else {
                b
            }
        })
        .collect();
    DataCube::from_parts(dims, values)
}

/// Modulated oscillation `a(x) cos(theta(x))` with smooth seeded
/// amplitude and phase fields.
#[derive(Clone, Copy, Debug)]
pub struct OscillatoryConfig {
    pub amplitude_base: f64,
    /// Strength of the smooth amplitude modulation on top of the base.
    pub amplitude_variation: f64,
    /// Strength of the smooth phase perturbation (radians).
    pub phase_variation: f64,
    /// Range of whole cycles of the carrier across each axis.
    pub min_cycles: usize,
    pub max_cycles: usize,
}

impl Default for OscillatoryConfig {
    fn default() -> Self {
        // carrier wavelengths of roughly 9-13 voxels on a 128-wide axis
        // with strong phase warping: fine-scale texture that separable
        // interpolants blur but patch similarity can follow
        OscillatoryConfig {
            amplitude_base: 1.0,
            amplitude_variation: 0.5,
            phase_variation: 4.5,
            min_cycles: 10,
            max_cycles: 14,
        }
    }
}

pub fn oscillatory_field(dims: Dims, seed: u64) -> DataCube {
    oscillatory_field_with(dims, seed, &OscillatoryConfig::default())
}

pub fn oscillatory_field_with(dims: Dims, seed: u64, config: &OscillatoryConfig) -> DataCube {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2545_F491_4F6C_DD1D);
    let sizes = dims.padded();
    let mut cycles = [0i64; 3];
    for (a, c) in cycles.iter_mut().enumerate().take(dims.rank()) {
        let cap = (sizes[a] / 4).max(1);
        let magnitude = rng.gen_range(config.min_cycles..=config.max_cycles).min(cap);
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        *c = sign * magnitude as i64;
    }
    let phase0: f64 = rng.gen_range(0.0..core::f64::consts::TAU);

    let normalized = |cube: DataCube| -> Vec<f64> {
        let peak = cube.values().iter().map(|v| math::abs(*v)).fold(0.0, f64::max);
        if peak > 0.0 {
            cube.values().iter().map(|v| v / peak).collect()
        } else {
            cube.into_values()
        }
    };
    let amp_mod = normalized(smooth_field(dims, seed ^ 0xDA94_2042_E4DD_58B5));
    let phase_mod = normalized(smooth_field(dims, seed ^ 0x720B_01C9_67A2_14E1));

    let mut values = vec![0.0; dims.len()];
    parallel::fill_indexed(&mut values, |ordinal| {
        let v = lex_decode(dims, ordinal);
        let amp = config.amplitude_base + config.amplitude_variation * amp_mod[ordinal];
        let mut theta = phase0 + config.phase_variation * phase_mod[ordinal];
        for a in 0..3 {
            theta += core::f64::consts::TAU * cycles[a] as f64 * v[a] as f64 / sizes[a] as f64;
        }
        amp * math::cos(theta)
    });
    DataCube::from_parts(dims, values)
}

/// Tiled two-level pattern with a bright central block, lightly blurred.
#[derive(Clone, Copy, Debug)]
pub struct CheckerboardConfig {
    /// Tiles per axis (capped by the axis length).
    pub tiles: usize,
    pub low: f64,
    pub high: f64,
    /// Per-tile seeded value jitter (the central block is exempt).
    pub jitter: f64,
    pub center_value: f64,
    /// Radius of the periodic mean blur; zero leaves tiles crisp.
    pub blur_radius: usize,
}

impl Default for CheckerboardConfig {
    fn default() -> Self {
        CheckerboardConfig {
            tiles: 8,
            low: 0.0,
            high: 1.0,
            jitter: 0.15,
            center_value: 2.0,
            blur_radius: 1,
        }
    }
}

pub fn checkerboard_field(dims: Dims, seed: u64) -> DataCube {
    checkerboard_field_with(dims, seed, &CheckerboardConfig::default())
}

pub fn checkerboard_field_with(dims: Dims, seed: u64, config: &CheckerboardConfig) -> DataCube {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x94D0_49BB_1331_11EB);
    let sizes = dims.padded();
    let mut tiles = [1usize; 3];
    for (a, t) in tiles.iter_mut().enumerate().take(dims.rank()) {
        *t = config.tiles.min(sizes[a]).max(1);
    }
    let tile_count = tiles[0] * tiles[1] * tiles[2];
    let jitters: Vec<f64> = (0..tile_count)
        .map(|_| config.jitter * rng.gen_range(-1.0..1.0f64))
        .collect();

    let center_range = |t: usize| -> (usize, usize) {
        // middle quarter of the tile grid, at least one tile wide
        let lo = t * 3 / 8;
        let hi = (t * 5 / 8).max(lo + 1).min(t);
        (lo, hi)
    };
    let centers = [
        center_range(tiles[0]),
        center_range(tiles[1]),
        center_range(tiles[2]),
    ];

    let mut values = vec![0.0; dims.len()];
    parallel::fill_indexed(&mut values, |ordinal| {
        let v = lex_decode(dims, ordinal);
        let t = [
            v[0] * tiles[0] / sizes[0],
            v[1] * tiles[1] / sizes[1],
            v[2] * tiles[2] / sizes[2],
        ];
        let central = (0..3).all(|a| t[a] >= centers[a].0 && t[a] < centers[a].1);
        if central {
            config.center_value
        } else {
            let parity = (t[0] + t[1] + t[2]) % 2 == 0;
            let base = if parity { config.high } else { config.low };
            base + jitters[(t[0] * tiles[1] + t[1]) * tiles[2] + t[2]]
        }
    });

    if config.blur_radius > 0 {
        values = periodic_mean_blur(values, dims, config.blur_radius);
    }
    DataCube::from_parts(dims, values)
}

fn periodic_mean_blur(mut values: Vec<f64>, dims: Dims, radius: usize) -> Vec<f64> {
    let sizes = dims.padded();
    for axis in 0..dims.rank() {
        let l = sizes[axis];
        if l == 1 {
            continue;
        }
        let stride = crate::baselines::transform_axis_stride(sizes, axis);
        let mut out = values.clone();
        let window = (2 * radius + 1) as f64;
        for base in line_bases(sizes, axis) {
            for x in 0..l {
                let mut acc = 0.0;
                for o in 0..=2 * radius {
                    let pos = (x + l + o - radius) % l;
                    acc += values[base + pos * stride];
                }
                out[base + x * stride] = acc / window;
            }
        }
        values = out;
    }
    values
}

fn line_bases(sizes: [usize; 3], axis: usize) -> Vec<usize> {
    let (outer, strides): ([usize; 2], [usize; 2]) = match axis {
        0 => ([sizes[1], sizes[2]], [sizes[2], 1]),
        1 => ([sizes[0], sizes[2]], [sizes[1] * sizes[2], 1]),
        _ => ([sizes[0], sizes[1]], [sizes[1] * sizes[2], sizes[2]]),
    };
    let mut bases = Vec::with_capacity(outer[0] * outer[1]);
    for u in 0..outer[0] {
        for v in 0..outer[1] {
            bases.push(u * strides[0] + v * strides[1]);
        }
    }
    bases
}
