//! Compressed sparse row matrices sized for the affinity graphs used
//! here (u32 column indices, f64 values).

use alloc::vec;
use alloc::vec::Vec;

/// General CSR matrix. Rows hold strictly increasing column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_rows(nrows: usize, ncols: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        assert_eq!(rows.len(), nrows);
        assert!(ncols <= u32::MAX as usize);
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in &rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0), "row not sorted");
            for &(c, v) in row {
                debug_assert!((c as usize) < ncols);
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    /// `out = self * x`, rows computed independently (deterministic).
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(out.len(), self.nrows);
        crate::parallel::fill_indexed(out, |i| {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c as usize];
            }
            acc
        });
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn entry(&self, i: usize, j: u32) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|pos| vals[pos])
    }

    /// Dense copy, for small oracle comparisons.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.nrows * self.ncols];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                dense[i * self.ncols + c as usize] = v;
            }
        }
        dense
    }
}

/// Symmetric sparse affinity matrix: square, no diagonal, every stored
/// entry mirrored bit-exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseWeights {
    csr: CsrMatrix,
}

impl SparseWeights {
    /// Builds from undirected edges `(i, j, w)` with `i != j`. Repeated
    /// edges must carry the same weight; one copy is kept.
    pub fn from_undirected_edges(n: usize, edges: &[(u32, u32, f64)]) -> Self {
        let mut directed: Vec<(u32, u32, f64)> = Vec::with_capacity(edges.len() * 2);
        for &(i, j, w) in edges {
            assert_ne!(i, j, "self loops are excluded");
            assert!(w > 0.0, "weights must be positive");
            directed.push((i, j, w));
            directed.push((j, i, w));
        }
        directed.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        directed.dedup_by(|a, b| {
            if a.0 == b.0 && a.1 == b.1 {
                debug_assert_eq!(a.2.to_bits(), b.2.to_bits(), "conflicting duplicate edge");
                true
            } else {
                false
            }
        });
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (i, j, w) in directed {
            rows[i as usize].push((j, w));
        }
        SparseWeights {
            csr: CsrMatrix::from_rows(n, n, rows),
        }
    }

    /// Wraps per-row entries that are already symmetric. Checked in debug
    /// builds only.
    pub(crate) fn from_symmetric_rows(n: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let weights = SparseWeights {
            csr: CsrMatrix::from_rows(n, n, rows),
        };
        debug_assert!(weights.is_exactly_symmetric());
        weights
    }

    pub fn n(&self) -> usize {
        self.csr.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        self.csr.row(i)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.csr.row_sum(i)
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.n()).map(|i| self.row_sum(i)).fold(0.0, f64::max)
    }

    pub fn total_sum(&self) -> f64 {
        (0..self.n()).map(|i| self.row_sum(i)).sum()
    }

    pub fn entry(&self, i: usize, j: u32) -> Option<f64> {
        self.csr.entry(i, j)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.csr.to_dense()
    }

    /// True when every entry `(i, j)` has a bit-identical mirror `(j, i)`
    /// and the diagonal is empty.
    pub fn is_exactly_symmetric(&self) -> bool {
        for i in 0..self.n() {
            let (cols, vals) = self.row(i);
            for (&j, &w) in cols.iter().zip(vals) {
                if j as usize == i {
                    return false;
                }
                match self.entry(j as usize, i as u32) {
                    Some(mirror) if mirror.to_bits() == w.to_bits() => {}
                    _ => return false,
                }
            }
        }
        true
    }
}
