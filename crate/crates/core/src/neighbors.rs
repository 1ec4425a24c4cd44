//! Exact k-nearest-neighbor search under squared Euclidean distance.
//!
//! Results are ordered by `(distance, reference index)`, so among points at
//! exactly equal distance the lower index always wins. Pruning only discards
//! a subtree when its lower bound is strictly greater than the current k-th
//! distance, which keeps the answer identical to a full sorted scan.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

const LEAF_SIZE: usize = 16;

/// A neighbor hit: reference index and squared distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist2: f64,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Static kd-tree over a row-major point buffer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    /// `points` is row-major with `dim` coordinates per row.
    pub fn build(points: Vec<f64>, dim: usize) -> Self {
        assert!(dim > 0, "kd-tree needs at least one dimension");
        assert_eq!(points.len() % dim, 0, "point buffer not a multiple of dim");
        let n = points.len() / dim;
        let mut tree = KdTree {
            dim,
            points,
            order: (0..n).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            tree.build_node(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index * self.dim..(index + 1) * self.dim]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        if end - start <= LEAF_SIZE {
            return id;
        }
        // split on the widest dimension at the median
        let dim = self.dim;
        let (mut best_dim, mut best_spread) = (0, -1.0);
        for d in 0..dim {
            let (lo, hi) = self.order[start..end].iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &i| {
                    let v = self.points[i * dim + d];
                    (lo.min(v), hi.max(v))
                },
            );
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = d;
            }
        }
        if best_spread <= 0.0 {
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * dim + best_dim].total_cmp(&points[b * dim + best_dim])
        });
        let value = self.points[self.order[mid] * dim + best_dim];
        // left holds coordinates <= value, right holds coordinates >= value
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            dim: best_dim,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest reference points to `query`, sorted by
    /// `(distance, index)`. Returns fewer than `k` only when the tree is smaller.
    pub fn knn(&self, query: &[f64], k: usize) -> Vec<Neighbor> {
        assert_eq!(query.len(), self.dim, "query dimension mismatch");
        if k == 0 || self.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, &mut heap);
        heap.into_sorted_vec()
    }

    fn search(&self, node: usize, query: &[f64], k: usize, heap: &mut BinaryHeap<Neighbor>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let cand = Neighbor {
                        index: i,
                        dist2: squared_distance(query, self.point(i)),
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[dim] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, k, heap);
                let bound = diff * diff;
                let worst = heap.peek().map(|n| n.dist2);
                if heap.len() < k || worst.is_some_and(|w| bound <= w) {
                    self.search(far, query, k, heap);
                }
            }
        }
    }
}
