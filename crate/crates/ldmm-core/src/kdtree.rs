//! Exact k-nearest-neighbor search with a k-d tree.
//!
//! Squared Euclidean distances, ties broken by lower point index. The
//! tree never prunes a subtree whose boundary distance equals the
//! current k-th best, so equal-distance candidates are always examined
//! and the result is exactly the k lexicographically smallest
//! `(distance^2, index)` pairs.

use alloc::vec::Vec;

const LEAF_SIZE: usize = 16;

enum Node {
    Split {
        axis: usize,
        split: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        lo: u32,
        hi: u32,
    },
}

/// Static k-d tree over a flat row-major point set.
pub struct KdTree {
    dim: usize,
    /// Points copied in tree order, leaf ranges contiguous.
    pts: Vec<f64>,
    /// Original index of each tree-order point.
    order: Vec<u32>,
    nodes: Vec<Node>,
    root: u32,
}

/// Sorted buffer of the current k best `(distance^2, index)` pairs.
struct TopK {
    k: usize,
    items: Vec<(f64, u32)>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn full(&self) -> bool {
        self.items.len() == self.k
    }

    #[inline]
    fn worst(&self) -> (f64, u32) {
        *self.items.last().expect("worst() on empty TopK")
    }

    #[inline]
    fn beats_worst(&self, d2: f64, idx: u32) -> bool {
        if !self.full() {
            return true;
        }
        let (wd, wi) = self.worst();
        d2 < wd || (d2 == wd && idx < wi)
    }

    fn push(&mut self, d2: f64, idx: u32) {
        if !self.beats_worst(d2, idx) {
            return;
        }
        let pos = self
            .items
            .partition_point(|&(d, i)| d < d2 || (d == d2 && i < idx));
        self.items.insert(pos, (d2, idx));
        self.items.truncate(self.k);
    }
}

impl KdTree {
    pub fn build(points: &[f64], dim: usize) -> Self {
        assert!(dim > 0 && points.len() % dim == 0);
        let n = points.len() / dim;
        assert!(n <= u32::MAX as usize);
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::new();
        let root = if n > 0 {
            build_node(points, dim, &mut order, 0, n, &mut nodes)
        } else {
            nodes.push(Node::Leaf { lo: 0, hi: 0 });
            0
        };
        // lay points out in tree order so leaf scans are contiguous
        let mut pts = Vec::with_capacity(points.len());
        for &idx in &order {
            let base = idx as usize * dim;
            pts.extend_from_slice(&points[base..base + dim]);
        }
        KdTree {
            dim,
            pts,
            order,
            nodes,
            root,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The k nearest neighbors of `query`, ascending by
    /// `(distance^2, index)`; `exclude` drops one point index (used to
    /// skip the query point itself).
    pub fn knn(&self, query: &[f64], k: usize, exclude: Option<u32>) -> Vec<(f64, u32)> {
        assert_eq!(query.len(), self.dim);
        let available = self.len() - usize::from(exclude.is_some());
        assert!(k <= available, "asked for {k} neighbors among {available} candidates");
        let mut best = TopK::new(k);
        if k > 0 {
            self.search(self.root, query, exclude, &mut best);
        }
        best.items
    }

    pub fn nearest(&self, query: &[f64], exclude: Option<u32>) -> (f64, u32) {
        self.knn(query, 1, exclude)[0]
    }

    fn search(&self, node: u32, query: &[f64], exclude: Option<u32>, best: &mut TopK) {
        match self.nodes[node as usize] {
            Node::Leaf { lo, hi } => {
                for pos in lo as usize..hi as usize {
                    let idx = self.order[pos];
                    if exclude == Some(idx) {
                        continue;
                    }
                    let base = pos * self.dim;
                    let candidate = &self.pts[base..base + self.dim];
                    let mut d2 = 0.0;
                    if best.full() {
                        let bound = best.worst().0;
                        let mut overshot = false;
                        for (a, b) in query.iter().zip(candidate) {
                            let diff = a - b;
                            d2 += diff * diff;
                            if d2 > bound {
                                overshot = true;
                                break;
                            }
                        }
                        if overshot {
                            continue;
                        }
                    } else {
                        for (a, b) in query.iter().zip(candidate) {
                            let diff = a - b;
                            d2 += diff * diff;
                        }
                    }
                    best.push(d2, idx);
                }
            }
            Node::Split {
                axis,
                split,
                left,
                right,
            } => {
                let gap = query[axis] - split;
                let (near, far) = if gap <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, exclude, best);
                if !best.full() || gap * gap <= best.worst().0 {
                    self.search(far, query, exclude, best);
                }
            }
        }
    }
}

fn build_node(
    points: &[f64],
    dim: usize,
    order: &mut [u32],
    lo: usize,
    hi: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    if hi - lo <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            lo: lo as u32,
            hi: hi as u32,
        });
        return (nodes.len() - 1) as u32;
    }
    // split on the axis with the widest spread over this range
    let mut axis = 0;
    let mut best_spread = -1.0;
    for a in 0..dim {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &idx in &order[lo..hi] {
            let c = points[idx as usize * dim + a];
            min = min.min(c);
            max = max.max(c);
        }
        let spread = max - min;
        if spread > best_spread {
            best_spread = spread;
            axis = a;
        }
    }
    if best_spread == 0.0 {
        // all points in this range coincide
        nodes.push(Node::Leaf {
            lo: lo as u32,
            hi: hi as u32,
        });
        return (nodes.len() - 1) as u32;
    }
    let mid = (lo + hi) / 2;
    let key = |idx: u32| (points[idx as usize * dim + axis], idx);
    order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
        key(a).partial_cmp(&key(b)).expect("finite coordinates")
    });
    let split = points[order[mid] as usize * dim + axis];
    let slot = nodes.len();
    nodes.push(Node::Leaf { lo: 0, hi: 0 }); // placeholder
    let left = build_node(points, dim, order, lo, mid, nodes);
    let right = build_node(points, dim, order, mid, hi, nodes);
    nodes[slot] = Node::Split {
        axis,
        split,
        left,
        right,
    };
    slot as u32
}
