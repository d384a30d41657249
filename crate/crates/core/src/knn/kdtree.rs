//! Axis-aligned k-d tree returning exactly the brute-force neighbor list.
//!
//! Candidates are ranked by the key `(dist2, index)`. A subtree is skipped only
//! when the squared distance to its bounding box is *strictly* larger than the
//! current k-th key distance, so points tied with the k-th distance are still
//! visited and the lower-index rule decides between them.
//!
//! The box bound is computed with the same per-axis subtract, square and
//! in-order sum as [`super::brute::dist2`]. Rounding is monotone, so the bound
//! never exceeds the computed distance of any point inside the box.

use std::collections::BinaryHeap;

use super::brute::dist2;
use super::Neighbor;

pub const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    nodes: Vec<Node>,
    /// `2 * dim` values per node: mins then maxes.
    bounds: Vec<f64>,
    /// Point coordinates permuted into leaf order.
    coords: Vec<f64>,
    /// Original row index of each permuted point.
    ids: Vec<usize>,
}

impl KdTree {
    pub fn build(coords: &[f64], dim: usize) -> Self {
        let n = coords.len() / dim;
        let mut ids: Vec<usize> = (0..n).collect();
        let mut tree = KdTree {
            dim,
            nodes: Vec::new(),
            bounds: Vec::new(),
            coords: Vec::with_capacity(coords.len()),
            ids: Vec::new(),
        };
        if n > 0 {
            tree.build_node(coords, &mut ids, 0);
        }
        for &i in &ids {
            tree.coords
                .extend_from_slice(&coords[i * dim..(i + 1) * dim]);
        }
        tree.ids = ids;
        tree
    }

    fn build_node(&mut self, coords: &[f64], ids: &mut [usize], offset: usize) -> usize {
        let dim = self.dim;
        let at = |i: usize, a: usize| coords[i * dim + a];
        let node = self.nodes.len();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in ids.iter() {
            for a in 0..dim {
                lo[a] = lo[a].min(at(i, a));
                hi[a] = hi[a].max(at(i, a));
            }
        }
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);
        let (axis, spread) =
            (0..dim)
                .map(|a| (a, hi[a] - lo[a]))
                .fold(
                    (0, f64::NEG_INFINITY),
                    |best, c| if c.1 > best.1 { c } else { best },
                );
        if ids.len() <= LEAF_SIZE || spread <= 0.0 {
            self.nodes.push(Node::Leaf {
                start: offset,
                end: offset + ids.len(),
            });
            return node;
        }
        let mid = ids.len() / 2;
        ids.select_nth_unstable_by(mid, |&i, &j| at(i, axis).total_cmp(&at(j, axis)));
        let value = at(ids[mid], axis);
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let (l, r) = ids.split_at_mut(mid);
        let left = self.build_node(coords, l, offset);
        let right = self.build_node(coords, r, offset + mid);
        self.nodes[node] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        node
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn box_dist2(&self, node: usize, q: &[f64]) -> f64 {
        let b = &self.bounds[node * 2 * self.dim..(node + 1) * 2 * self.dim];
        let (lo, hi) = b.split_at(self.dim);
        let mut s = 0.0;
        for a in 0..self.dim {
            let t = if q[a] < lo[a] {
                lo[a] - q[a]
            } else if q[a] > hi[a] {
                q[a] - hi[a]
            } else {
                0.0
            };
            s += t * t;
        }
        s
    }

    /// The `k` smallest `(dist2, index)` keys, sorted ascending.
    pub fn k_nearest(&self, query: &[f64], k: usize) -> Vec<Neighbor> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if !self.is_empty() && k > 0 {
            self.search(0, query, k, &mut heap);
        }
        heap.into_sorted_vec()
    }

    fn search(&self, node: usize, q: &[f64], k: usize, heap: &mut BinaryHeap<Neighbor>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start..end {
                    let p = &self.coords[slot * self.dim..(slot + 1) * self.dim];
                    let cand = Neighbor {
                        index: self.ids[slot],
                        dist2: dist2(p, q),
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap holds k items") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let (near, far) = if q[axis] < value {
                    (left, right)
                } else {
                    (right, left)
                };
                for child in [near, far] {
                    if heap.len() < k
                        || self.box_dist2(child, q)
                            <= heap.peek().expect("heap holds k items").dist2
                    {
                        self.search(child, q, k, heap);
                    }
                }
            }
        }
    }
}
