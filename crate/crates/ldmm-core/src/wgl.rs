//! The weighted-graph-Laplacian linear system coupling voxel values
//! through shared patches.
//!
//! From a patch affinity matrix `Wbar` the translated matrix is
//! `wtilde(x, y) = sum_i wbar(x - o_i, y - o_i)` over the d patch-element
//! offsets `o_i` (periodic), i.e. a sum of d simultaneous row+column
//! permutations of `Wbar`. Partitioning voxels into unsampled (block 1)
//! and sampled (block 2) parts gives the stationarity system
//!
//! `(2 Ltilde_11 + (mu - 1) Delta) v = (mu + 1) Wtilde_12 b`
//!
//! with `Ltilde = Dtilde - Wtilde`, `Delta = diag(Wtilde_12 row sums)`
//! and `mu = |grid| / |samples|`. The system matrix is symmetric
//! positive definite whenever every unsampled voxel has a graph path to
//! a sampled one; it is solved with Jacobi-preconditioned conjugate
//! gradients.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::grid::{lex_decode, lex_encode, negate_offset, translate, DataCube, Dims, PatchShape, SampleMask};
use crate::parallel;
use crate::sparse::{CsrMatrix, SparseWeights};

/// Translated patch affinities over voxel ordinals (see module docs).
pub type TranslatedWeights = SparseWeights;

/// Builds the translated weight matrix: d permuted copies of `wbar`
/// accumulated entrywise, merged per row. Row merges run in parallel;
/// each row sums its contributions in ascending translation order, so
/// the result is deterministic and exactly symmetric.
pub fn assemble_translated_weights(
    wbar: &SparseWeights,
    shape: &PatchShape,
    dims: Dims,
) -> TranslatedWeights {
    let n = dims.len();
    assert_eq!(wbar.n(), n, "weight matrix and grid disagree");
    assert!(shape.fits(dims), "patch shape does not fit the grid");
    let d = shape.len();

    // ordinal permutations of each patch-element translation and its inverse
    let mut fwd: Vec<Vec<u32>> = Vec::with_capacity(d);
    let mut inv: Vec<Vec<u32>> = Vec::with_capacity(d);
    for j in 0..d {
        let off = shape.offset(j);
        let neg = negate_offset(dims, off);
        let f: Vec<u32> = (0..n)
            .map(|o| lex_encode(dims, translate(dims, lex_decode(dims, o), off)) as u32)
            .collect();
        let b: Vec<u32> = (0..n)
            .map(|o| lex_encode(dims, translate(dims, lex_decode(dims, o), neg)) as u32)
            .collect();
        fwd.push(f);
        inv.push(b);
    }

    let rows: Vec<Vec<(u32, f64)>> = parallel::map_indexed(n, |x| {
        let mut entries: Vec<(u32, f64)> = Vec::new();
        for j in 0..d {
            let u = inv[j][x] as usize;
            let (cols, vals) = wbar.row(u);
            let map = &fwd[j];
            entries.reserve(cols.len());
            for (&v, &w) in cols.iter().zip(vals) {
                entries.push((map[v as usize], w));
            }
        }
        // stable sort keeps ascending translation order within one column
        entries.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (c, w) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += w,
                _ => merged.push((c, w)),
            }
        }
        merged
    });

    SparseWeights::from_symmetric_rows(n, rows)
}

#[derive(Debug, Error, PartialEq)]
pub enum SystemError {
    #[error("mask samples no voxels")]
    EmptyMask,
    #[error("mask samples every voxel; nothing to solve")]
    FullySampled,
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error(
        "conjugate gradients did not reach tolerance in {iterations} iterations \
         (relative residual {relative_residual:.3e})"
    )]
    NoConvergence {
        iterations: usize,
        relative_residual: f64,
    },
    #[error(
        "{size} unsampled voxel(s) around ordinal {voxel} have no path to a sampled voxel; \
         the system is singular (enable the ridge fallback to proceed)"
    )]
    DisconnectedComponent { voxel: usize, size: usize },
}

/// Partitioned system ready for the solve.
pub struct WglSystem {
    /// Unsampled-by-unsampled off-diagonal weight block.
    w11: CsrMatrix,
    /// Unsampled-by-sampled weight block.
    w12: CsrMatrix,
    /// Full translated-weight row sums of the unsampled rows (the
    /// diagonal of `Dtilde` restricted to block 1).
    dtilde: Vec<f64>,
    /// Row sums of `w12`.
    delta: Vec<f64>,
    mu: f64,
    /// Voxel ordinals of block positions, ascending.
    unsampled: Vec<u32>,
    sampled: Vec<u32>,
}

/// Extracts the blocks of the partitioned system from the translated
/// weights and the sampling mask.
pub fn build_system(wtilde: &SparseWeights, mask: &SampleMask) -> Result<WglSystem, SystemError> {
    let n = wtilde.n();
    assert_eq!(mask.dims().len(), n, "mask and weights disagree");
    let n2 = mask.count();
    if n2 == 0 {
        return Err(SystemError::EmptyMask);
    }
    if n2 == n {
        return Err(SystemError::FullySampled);
    }
    let n1 = n - n2;

    // block position of every voxel ordinal
    let mut pos = vec![0u32; n];
    let (mut iu, mut is) = (0u32, 0u32);
    let mut unsampled = Vec::with_capacity(n1);
    let mut sampled = Vec::with_capacity(n2);
    for ordinal in 0..n {
        if mask.is_sampled(ordinal) {
            pos[ordinal] = is;
            sampled.push(ordinal as u32);
            is += 1;
        } else {
            pos[ordinal] = iu;
            unsampled.push(ordinal as u32);
            iu += 1;
        }
    }

    struct RowSplit {
        inner: Vec<(u32, f64)>,
        outer: Vec<(u32, f64)>,
        total: f64,
        delta: f64,
    }
    let splits: Vec<RowSplit> = parallel::map_indexed(n1, |i| {
        let ordinal = unsampled[i] as usize;
        let (cols, vals) = wtilde.row(ordinal);
        let mut inner = Vec::new();
        let mut outer = Vec::new();
        let mut total = 0.0;
        let mut delta = 0.0;
        for (&c, &w) in cols.iter().zip(vals) {
            total += w;
            if mask.is_sampled(c as usize) {
                delta += w;
                outer.push((pos[c as usize], w));
            } else {
                inner.push((pos[c as usize], w));
            }
        }
        RowSplit {
            inner,
            outer,
            total,
            delta,
        }
    });

    let mut rows11 = Vec::with_capacity(n1);
    let mut rows12 = Vec::with_capacity(n1);
    let mut dtilde = Vec::with_capacity(n1);
    let mut delta = Vec::with_capacity(n1);
    for split in splits {
        rows11.push(split.inner);
        rows12.push(split.outer);
        dtilde.push(split.total);
        delta.push(split.delta);
    }

    Ok(WglSystem {
        w11: CsrMatrix::from_rows(n1, n1, rows11),
        w12: CsrMatrix::from_rows(n1, n2, rows12),
        dtilde,
        delta,
        mu: n as f64 / n2 as f64,
        unsampled,
        sampled,
    })
}

impl WglSystem {
    pub fn n_unsampled(&self) -> usize {
        self.w11.nrows()
    }

    pub fn n_sampled(&self) -> usize {
        self.w12.ncols()
    }

    /// Oversampling factor `|grid| / |samples|`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Diagonal of `Delta` (row sums of `Wtilde_12`).
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    /// Voxel ordinals of the unsampled block positions, ascending.
    pub fn unsampled_ordinals(&self) -> &[u32] {
        &self.unsampled
    }

    /// Voxel ordinals of the sampled block positions, ascending.
    pub fn sampled_ordinals(&self) -> &[u32] {
        &self.sampled
    }

    /// `out = (2 Ltilde_11 + (mu - 1) Delta + ridge) v`.
    pub fn apply_into(&self, v: &[f64], ridge: f64, out: &mut [f64]) {
        assert_eq!(v.len(), self.n_unsampled());
        assert_eq!(out.len(), self.n_unsampled());
        let mu = self.mu;
        parallel::fill_indexed(out, |i| {
            let (cols, vals) = self.w11.row(i);
            let mut acc = 0.0;
            for (&c, &w) in cols.iter().zip(vals) {
                acc += w * v[c as usize];
            }
            (2.0 * self.dtilde[i] + (mu - 1.0) * self.delta[i] + ridge) * v[i] - 2.0 * acc
        });
    }

    /// System diagonal `2 dtilde + (mu - 1) delta`.
    pub fn diagonal(&self) -> Vec<f64> {
        self.dtilde
            .iter()
            .zip(&self.delta)
            .map(|(&dt, &dl)| 2.0 * dt + (self.mu - 1.0) * dl)
            .collect()
    }

    /// Right-hand side `(mu + 1) Wtilde_12 b` for sampled values `b`.
    pub fn rhs(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n_sampled());
        let mut out = self.w12.matvec(b);
        for v in &mut out {
            *v *= self.mu + 1.0;
        }
        out
    }

    /// Unsampled voxels with no graph path to any sampled voxel,
    /// reported as `(smallest voxel ordinal, component size)`.
    fn isolated_component(&self) -> Option<(usize, usize)> {
        let n1 = self.n_unsampled();
        let mut parent: Vec<u32> = (0..n1 as u32).collect();
        fn find(parent: &mut [u32], mut x: u32) -> u32 {
            while parent[x as usize] != x {
                parent[x as usize] = parent[parent[x as usize] as usize];
                x = parent[x as usize];
            }
            x
        }
        for i in 0..n1 {
            let (cols, _) = self.w11.row(i);
            for &c in cols {
                let (a, b) = (find(&mut parent, i as u32), find(&mut parent, c));
                if a != b {
                    parent[a.max(b) as usize] = a.min(b);
                }
            }
        }
        // roots with any sampled contact
        let mut grounded = vec![false; n1];
        for i in 0..n1 {
            if !self.w12.row(i).0.is_empty() {
                let r = find(&mut parent, i as u32) as usize;
                grounded[r] = true;
            }
        }
        let mut first: Option<usize> = None;
        let mut size = 0;
        for i in 0..n1 {
            let r = find(&mut parent, i as u32) as usize;
            if !grounded[r] {
                size += 1;
                if first.is_none() {
                    first = Some(self.unsampled[i] as usize);
                }
            }
        }
        first.map(|voxel| (voxel, size))
    }
}

/// Solver controls. Defaults: relative-residual tolerance 1e-6, at most
/// 2000 iterations, no ridge fallback.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// When unsampled voxels are disconnected from every sample, add
    /// `1e-8 * trace(A) / n` to the diagonal instead of failing.
    pub ridge_fallback: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-6,
            max_iters: 2000,
            ridge_fallback: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves for the unsampled values with Jacobi-preconditioned CG.
///
/// The sampled mean is subtracted before the solve (constants satisfy
/// the stationarity equations exactly) and added back afterwards;
/// bit-identical sampled values short-circuit to the exact constant
/// solution. `warm_start`, when given, is the current unsampled iterate
/// in block order.
pub fn solve_system(
    system: &WglSystem,
    b: &[f64],
    opts: &SolveOptions,
    warm_start: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveStats), SolveError> {
    assert_eq!(b.len(), system.n_sampled(), "sampled value count mismatch");
    let n1 = system.n_unsampled();

    let mut ridge = 0.0;
    if let Some((voxel, size)) = system.isolated_component() {
        if !opts.ridge_fallback {
            return Err(SolveError::DisconnectedComponent { voxel, size });
        }
        let trace: f64 = system.diagonal().iter().sum();
        ridge = 1e-8 * trace / n1 as f64;
    }

    // bit-identical samples have the exact constant solution
    if ridge == 0.0 && b.iter().all(|v| v.to_bits() == b[0].to_bits()) {
        return Ok((
            vec![b[0]; n1],
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }

    let offset = b.iter().sum::<f64>() / b.len() as f64;
    let shifted: Vec<f64> = b.iter().map(|v| v - offset).collect();
    let rhs = system.rhs(&shifted);
    let rhs_norm = parallel::norm2(&rhs);
    if rhs_norm == 0.0 {
        return Ok((
            vec![offset; n1],
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }

    let mut x: Vec<f64> = match warm_start {
        Some(ws) => {
            assert_eq!(ws.len(), n1);
            ws.iter().map(|v| v - offset).collect()
        }
        None => vec![0.0; n1],
    };

    let inv_diag: Vec<f64> = system
        .diagonal()
        .iter()
        .map(|&d| 1.0 / (d + ridge))
        .collect();

    let mut r = vec![0.0; n1];
    system.apply_into(&x, ridge, &mut r);
    for (ri, &bi) in r.iter_mut().zip(&rhs) {
        *ri = bi - *ri;
    }
    let mut relative_residual = parallel::norm2(&r) / rhs_norm;
    if relative_residual <= opts.tol {
        for v in &mut x {
            *v += offset;
        }
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                relative_residual,
            },
        ));
    }

    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(&ri, &mi)| ri * mi).collect();
    let mut p = z.clone();
    let mut rho = parallel::dot(&r, &z);
    let mut q = vec![0.0; n1];

    for iteration in 1..=opts.max_iters {
        system.apply_into(&p, ridge, &mut q);
        let pq = parallel::dot(&p, &q);
        if !(pq > 0.0) {
            return Err(SolveError::NoConvergence {
                iterations: iteration,
                relative_residual,
            });
        }
        let alpha = rho / pq;
        for i in 0..n1 {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        relative_residual = parallel::norm2(&r) / rhs_norm;
        if relative_residual <= opts.tol {
            for v in &mut x {
                *v += offset;
            }
            return Ok((
                x,
                SolveStats {
                    iterations: iteration,
                    relative_residual,
                },
            ));
        }
        for i in 0..n1 {
            z[i] = r[i] * inv_diag[i];
        }
        let rho_next = parallel::dot(&r, &z);
        let beta = rho_next / rho;
        rho = rho_next;
        for i in 0..n1 {
            p[i] = z[i] + beta * p[i];
        }
    }

    Err(SolveError::NoConvergence {
        iterations: opts.max_iters,
        relative_residual,
    })
}

/// Largest absolute stationarity residual over the unsampled voxels:
/// `|2 sum_y wtilde(x,y)(f(x)-f(y)) + (mu-1) sum_{y sampled} wtilde(x,y)(f(x)-f(y))|`.
pub fn el_residual(wtilde: &SparseWeights, mask: &SampleMask, f: &DataCube, mu: f64) -> f64 {
    let n = wtilde.n();
    assert_eq!(mask.dims().len(), n);
    assert_eq!(f.dims(), mask.dims());
    let values = f.values();
    let per_row = parallel::map_indexed(n, |x| {
        if mask.is_sampled(x) {
            return 0.0;
        }
        let (cols, vals) = wtilde.row(x);
        let fx = values[x];
        let mut all = 0.0;
        let mut sampled = 0.0;
        for (&c, &w) in cols.iter().zip(vals) {
            let diff = w * (fx - values[c as usize]);
            all += diff;
            if mask.is_sampled(c as usize) {
                sampled += diff;
            }
        }
        crate::math::abs(2.0 * all + (mu - 1.0) * sampled)
    });
    per_row.into_iter().fold(0.0, f64::max)
}

/// The discrete objective: sampled rows upweighted by `mu`,
/// `sum_p [mu if sampled] sum_q w(p,q) (u(p) - u(q))^2`.
pub fn wgl_energy(w: &SparseWeights, sampled: &[bool], u: &[f64], mu: f64) -> f64 {
    let n = w.n();
    assert_eq!(sampled.len(), n);
    assert_eq!(u.len(), n);
    let per_row = parallel::map_indexed(n, |p| {
        let (cols, vals) = w.row(p);
        let up = u[p];
        let mut acc = 0.0;
        for (&c, &wv) in cols.iter().zip(vals) {
            let diff = up - u[c as usize];
            acc += wv * diff * diff;
        }
        if sampled[p] {
            mu * acc
        } else {
            acc
        }
    });
    per_row.iter().sum()
}
