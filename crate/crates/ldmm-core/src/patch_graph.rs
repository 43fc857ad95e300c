//! The patch affinity graph: one point per voxel, exact k nearest
//! neighbors, self-tuning Gaussian weights, and a local-PCA dimension
//! diagnostic.
//!
//! The weight of a neighbor pair is
//! `exp(-|p - q|^2 / (sigma(p) * sigma(q)))` with `sigma(p)` the distance
//! from `p` to its r-th nearest neighbor (self excluded). Truncated
//! neighbor supports are symmetrized by union: the entry is kept when
//! either endpoint lists the other, with the value from the (already
//! symmetric) formula.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{DataCube, Dims, PatchShape};
use crate::kdtree::KdTree;
use crate::linalg::jacobi_svd;
use crate::math;
use crate::parallel;
use crate::sparse::SparseWeights;

/// All patches of a field as a flat point cloud in R^d.
#[derive(Clone, Debug)]
pub struct PatchCloud {
    points: Vec<f64>,
    n: usize,
    d: usize,
    source: Option<(Dims, PatchShape)>,
}

impl PatchCloud {
    /// Extracts the patch anchored at every voxel, in lexicographic
    /// order; the cloud has exactly one point per voxel.
    pub fn from_field(f: &DataCube, shape: &PatchShape) -> Self {
        assert!(shape.fits(f.dims()), "patch shape does not fit the grid");
        let dims = f.dims();
        let n = dims.len();
        let d = shape.len();
        let mut points = vec![0.0; n * d];
        parallel::fill_rows(&mut points, d, |ordinal, row| {
            f.extract_patch_into(crate::grid::lex_decode(dims, ordinal), shape, row);
        });
        PatchCloud {
            points,
            n,
            d,
            source: Some((dims, *shape)),
        }
    }

    /// Wraps a bare point set (used by tests and the dimension
    /// diagnostic on synthetic data).
    pub fn from_points(points: Vec<f64>, d: usize) -> Self {
        assert!(d > 0 && points.len() % d == 0);
        assert!(points.iter().all(|v| v.is_finite()));
        let n = points.len() / d;
        PatchCloud {
            points,
            n,
            d,
            source: None,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Ambient dimension d.
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Grid and patch shape the cloud came from, when it came from one.
    pub fn source(&self) -> Option<(Dims, PatchShape)> {
        self.source
    }

    /// Diagonal of the coordinate bounding box.
    fn extent(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for a in 0..self.d {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..self.n {
                let c = self.points[i * self.d + a];
                lo = lo.min(c);
                hi = hi.max(c);
            }
            acc += (hi - lo) * (hi - lo);
        }
        math::sqrt(acc)
    }
}

/// Exact k-nearest-neighbor table: per point, `k` neighbor ordinals and
/// squared distances sorted ascending, ties broken by lower ordinal.
#[derive(Clone, Debug)]
pub struct NeighborList {
    k: usize,
    ids: Vec<u32>,
    dist2: Vec<f64>,
}

impl NeighborList {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.ids.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Neighbor ordinals of point `i`, nearest first.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.ids[i * self.k..(i + 1) * self.k]
    }

    /// Squared distances matching [`Self::neighbors`].
    pub fn distances_sq(&self, i: usize) -> &[f64] {
        &self.dist2[i * self.k..(i + 1) * self.k]
    }
}

/// Exact k nearest neighbors of every cloud point (self excluded).
/// Tree build is sequential; queries run independently per point.
pub fn knn(cloud: &PatchCloud, k: usize) -> NeighborList {
    assert!(k >= 1, "k must be at least 1");
    assert!(
        k < cloud.len(),
        "k = {k} must be below the point count {}",
        cloud.len()
    );
    let tree = KdTree::build(cloud.points(), cloud.dim());
    let rows = parallel::map_indexed(cloud.len(), |i| {
        tree.knn(cloud.point(i), k, Some(i as u32))
    });
    let mut ids = Vec::with_capacity(cloud.len() * k);
    let mut dist2 = Vec::with_capacity(cloud.len() * k);
    for row in rows {
        for (d2, idx) in row {
            ids.push(idx);
            dist2.push(d2);
        }
    }
    NeighborList { k, ids, dist2 }
}

/// Self-tuning kernel bandwidths: `sigma(p)` is the distance to the
/// r-th nearest neighbor (1-based, self excluded). A zero distance falls
/// back to the smallest positive neighbor distance, and failing that to
/// a tiny fraction of the cloud extent, so weights stay defined on
/// constant regions.
pub fn normalizing_factors(cloud: &PatchCloud, nbrs: &NeighborList, r: usize) -> Vec<f64> {
    assert!(r >= 1 && r <= nbrs.k(), "need 1 <= r <= k, got r = {r}");
    let mut global_fallback = None;
    let mut sigma = Vec::with_capacity(nbrs.len());
    for i in 0..nbrs.len() {
        let d2 = nbrs.distances_sq(i);
        let mut s = math::sqrt(d2[r - 1]);
        if s == 0.0 {
            s = d2
                .iter()
                .copied()
                .find(|&v| v > 0.0)
                .map(math::sqrt)
                .unwrap_or_else(|| {
                    *global_fallback.get_or_insert_with(|| 1e-12 * (cloud.extent() + 1.0))
                });
        }
        sigma.push(s);
    }
    sigma
}

/// Builds the symmetric sparse weight matrix over the truncated
/// neighborhoods. Entries are in (0, 1]; pairs whose weight underflows
/// to zero are dropped rather than stored.
pub fn gaussian_weights(cloud: &PatchCloud, nbrs: &NeighborList, sigma: &[f64]) -> SparseWeights {
    assert_eq!(sigma.len(), cloud.len());
    assert!(sigma.iter().all(|&s| s > 0.0), "sigma must be positive");
    let mut edges: Vec<(u32, u32, f64)> = Vec::with_capacity(cloud.len() * nbrs.k());
    for p in 0..cloud.len() {
        let ids = nbrs.neighbors(p);
        let d2s = nbrs.distances_sq(p);
        for (&q, &d2) in ids.iter().zip(d2s) {
            let w = math::exp(-d2 / (sigma[p] * sigma[q as usize]));
            if w > 0.0 {
                let (a, b) = if (p as u32) < q { (p as u32, q) } else { (q, p as u32) };
                edges.push((a, b, w));
            }
        }
    }
    SparseWeights::from_undirected_edges(cloud.len(), &edges)
}

/// Number of principal components of the centered k-neighborhood of
/// `point` needed to capture `energy_threshold` of its variance.
/// Returns 0 for a numerically zero-variance neighborhood.
pub fn local_dimension_estimate(
    cloud: &PatchCloud,
    point: usize,
    k: usize,
    energy_threshold: f64,
) -> usize {
    assert!(point < cloud.len());
    assert!(k >= 1 && k < cloud.len(), "need k neighbors available");
    assert!(energy_threshold > 0.0 && energy_threshold <= 1.0);

    // brute-force scan: a single query does not warrant a tree
    let query = cloud.point(point);
    let mut dists: Vec<(f64, u32)> = (0..cloud.len() as u32)
        .filter(|&i| i as usize != point)
        .map(|i| {
            let d2 = query
                .iter()
                .zip(cloud.point(i as usize))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d2, i)
        })
        .collect();
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    dists.truncate(k);

    let d = cloud.dim();
    let rows = k + 1;
    let mut data = Vec::with_capacity(rows * d);
    data.extend_from_slice(query);
    let mut scale: f64 = 0.0;
    for &(_, i) in &dists {
        data.extend_from_slice(cloud.point(i as usize));
    }
    for &v in &data {
        scale = scale.max(math::abs(v));
    }
    // center the neighborhood
    for a in 0..d {
        let mean = (0..rows).map(|i| data[i * d + a]).sum::<f64>() / rows as f64;
        for i in 0..rows {
            data[i * d + a] -= mean;
        }
    }
    let svd = jacobi_svd(&data, rows, d);
    let sig_max = svd.s.first().copied().unwrap_or(0.0);
    if sig_max <= 1e-12 * (scale + 1.0) {
        return 0;
    }
    let energies: Vec<f64> = svd.s.iter().map(|s| s * s).collect();
    let total: f64 = energies.iter().sum();
    let mut cum = 0.0;
    for (count, e) in energies.iter().enumerate() {
        cum += e;
        if cum >= energy_threshold * total {
            return count + 1;
        }
    }
    energies.len()
}
