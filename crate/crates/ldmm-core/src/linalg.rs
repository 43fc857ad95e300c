//! Dense one-sided Jacobi SVD, sufficient for desk-scale matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Thin SVD `A = U diag(S) V^T` with singular values descending.
pub struct Svd {
    pub m: usize,
    pub n: usize,
    /// m x p column-orthonormal factor, row-major (p = min(m, n)).
    pub u: Vec<f64>,
    /// p singular values, descending.
    pub s: Vec<f64>,
    /// p x n row-orthonormal factor, row-major.
    pub vt: Vec<f64>,
}

/// One-sided Jacobi SVD of a row-major m x n matrix.
pub fn jacobi_svd(a: &[f64], m: usize, n: usize) -> Svd {
    assert_eq!(a.len(), m * n);
    if m >= n {
        jacobi_tall(a, m, n)
    } else {
        // factor the transpose and swap the roles of U and V
        let mut at = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                at[j * m + i] = a[i * n + j];
            }
        }
        let t = jacobi_tall(&at, n, m);
        let p = m;
        let mut u = vec![0.0; m * p];
        for i in 0..m {
            for j in 0..p {
                u[i * p + j] = t.vt[j * m + i];
            }
        }
        let mut vt = vec![0.0; p * n];
        for j in 0..p {
            for i in 0..n {
                vt[j * n + i] = t.u[i * p + j];
            }
        }
        Svd {
            m,
            n,
            u,
            s: t.s,
            vt,
        }
    }
}

fn jacobi_tall(a: &[f64], m: usize, n: usize) -> Svd {
    const MAX_SWEEPS: usize = 60;
    const ORTH_TOL: f64 = 1e-15;

    let mut b = a.to_vec();
    let mut v = vec![0.0; n * n];
    for j in 0..n {
        v[j * n + j] = 1.0;
    }

    for _ in 0..MAX_SWEEPS {
        let mut changed = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    let bp = b[i * n + p];
                    let bq = b[i * n + q];
                    alpha += bp * bp;
                    beta += bq * bq;
                    gamma += bp * bq;
                }
                let scale = math::sqrt(alpha * beta);
                if scale == 0.0 || math::abs(gamma) <= ORTH_TOL * scale {
                    continue;
                }
                changed = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + math::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + math::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..m {
                    let bp = b[i * n + p];
                    let bq = b[i * n + q];
                    b[i * n + p] = c * bp - s * bq;
                    b[i * n + q] = s * bp + c * bq;
                }
                for i in 0..n {
                    let vp = v[i * n + p];
                    let vq = v[i * n + q];
                    v[i * n + p] = c * vp - s * vq;
                    v[i * n + q] = s * vp + c * vq;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..n)
        .map(|j| {
            let mut acc = 0.0;
            for i in 0..m {
                let x = b[i * n + j];
                acc += x * x;
            }
            math::sqrt(acc)
        })
        .collect();

    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&x, &y| sigma[y].partial_cmp(&sigma[x]).expect("finite").then(x.cmp(&y)));

    let mut u = vec![0.0; m * n];
    let mut vt = vec![0.0; n * n];
    let mut s = vec![0.0; n];
    for (slot, &j) in perm.iter().enumerate() {
        s[slot] = sigma[j];
        if sigma[j] > 0.0 {
            let inv = 1.0 / sigma[j];
            for i in 0..m {
                u[i * n + slot] = b[i * n + j] * inv;
            }
        }
        for i in 0..n {
            vt[slot * n + i] = v[i * n + j];
        }
    }
    sigma.clear();

    Svd { m, n, u, s, vt }
}

/// Rank-`r` reconstruction `U_r diag(S_r) V_r^T` as a row-major matrix.
pub fn truncated_reconstruction(svd: &Svd, rank: usize) -> Vec<f64> {
    let p = svd.s.len();
    let r = rank.min(p);
    let (m, n) = (svd.m, svd.n);
    let mut out = vec![0.0; m * n];
    for j in 0..r {
        let sv = svd.s[j];
        if sv == 0.0 {
            continue;
        }
        for i in 0..m {
            let uij = svd.u[i * p + j] * sv;
            if uij == 0.0 {
                continue;
            }
            let row = &svd.vt[j * n..(j + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (o, &vv) in dst.iter_mut().zip(row) {
                *o += uij * vv;
            }
        }
    }
    out
}
