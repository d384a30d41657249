//! The k-nearest-neighbor regression estimator.
//!
//! Data are ordered by Euclidean distance to the query; among points at
//! exactly the same distance the one with the smaller row index comes first.
//! The estimate is the plain mean of the first `k` responses in that order.
//! Distances are compared as squared Euclidean distances with no tolerance.

pub mod brute;
pub mod kdtree;

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampler::Dataset;
use kdtree::KdTree;

/// Above this dimension the tree is not used.
pub const TREE_MAX_DIM: usize = 7;
/// At or below this many points the tree is not used.
pub const TREE_MIN_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Neighbor {
    pub index: usize,
    pub dist2: f64,
}

impl Neighbor {
    pub fn cmp_key(a: &Self, b: &Self) -> Ordering {
        a.dist2.total_cmp(&b.dist2).then(a.index.cmp(&b.index))
    }
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        Neighbor::cmp_key(self, other)
    }
}

/// Prefix of the tie-broken distance ordering around a query point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborOrdering {
    pub query: Vec<f64>,
    pub neighbors: Vec<Neighbor>,
}

impl NeighborOrdering {
    pub fn indices(&self) -> Vec<usize> {
        self.neighbors.iter().map(|n| n.index).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SearchPath {
    /// Tree unless `d > 7` or `n <= 512`.
    Auto,
    Tree,
    Brute,
}

/// `max(1, floor(n^(2p/(2p+d))))`, at most `n`.
pub fn k_schedule(p: f64, d: usize, n: usize) -> usize {
    k_from_exponent(2.0 * p / (2.0 * p + d as f64), n)
}

/// `max(1, floor(n^e))`, at most `n`. Values within a relative `1e-12` of an
/// integer are taken as that integer so exact powers (256^0.75 = 64) survive
/// the rounding of `powf`.
pub fn k_from_exponent(e: f64, n: usize) -> usize {
    if n <= 1 {
        return 1;
    }
    let v = (n as f64).powf(e);
    let r = v.round();
    let k = if (v - r).abs() <= 1e-12 * v.max(1.0) {
        r
    } else {
        v.floor()
    };
    (k as usize).clamp(1, n)
}

/// Fitted estimator: the training data and an optional tree index.
#[derive(Debug, Clone)]
pub struct KnnModel {
    data: Dataset,
    tree: Option<KdTree>,
}

impl KnnModel {
    pub fn fit(data: Dataset) -> Self {
        Self::fit_with(data, SearchPath::Auto)
    }

    pub fn fit_with(data: Dataset, path: SearchPath) -> Self {
        let use_tree = match path {
            SearchPath::Auto => data.dim() <= TREE_MAX_DIM && data.len() > TREE_MIN_POINTS,
            SearchPath::Tree => true,
            SearchPath::Brute => false,
        };
        let tree = use_tree.then(|| KdTree::build(data.coords(), data.dim()));
        Self { data, tree }
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn has_tree(&self) -> bool {
        self.tree.is_some()
    }

    fn check(&self, x: &[f64], k: usize) -> Result<()> {
        if self.data.is_empty() {
            return Err(Error::State("model has no training data".into()));
        }
        if x.len() != self.data.dim() {
            return Err(Error::Domain(format!(
                "query has {} coordinates, model has dimension {}",
                x.len(),
                self.data.dim()
            )));
        }
        if k == 0 || k > self.data.len() {
            return Err(Error::Argument(format!(
                "k = {k} must lie in 1..={}",
                self.data.len()
            )));
        }
        Ok(())
    }

    /// First `k` entries of the tie-broken ordering around `x`.
    pub fn neighbors(&self, x: &[f64], k: usize) -> Result<NeighborOrdering> {
        self.check(x, k)?;
        let neighbors = match &self.tree {
            Some(t) => t.k_nearest(x, k),
            None => brute::k_nearest(self.data.coords(), self.data.dim(), x, k),
        };
        Ok(NeighborOrdering {
            query: x.to_vec(),
            neighbors,
        })
    }

    /// Same as [`neighbors`](Self::neighbors) but always by full scan.
    pub fn neighbors_brute(&self, x: &[f64], k: usize) -> Result<NeighborOrdering> {
        self.check(x, k)?;
        Ok(NeighborOrdering {
            query: x.to_vec(),
            neighbors: brute::k_nearest(self.data.coords(), self.data.dim(), x, k),
        })
    }

    pub fn predict(&self, x: &[f64], k: usize) -> Result<f64> {
        Ok(self.mean_response(&self.neighbors(x, k)?))
    }

    pub fn predict_brute(&self, x: &[f64], k: usize) -> Result<f64> {
        Ok(self.mean_response(&self.neighbors_brute(x, k)?))
    }

    fn mean_response(&self, ord: &NeighborOrdering) -> f64 {
        let ys = self.data.ys();
        let sum: f64 = ord.neighbors.iter().map(|n| ys[n.index]).sum();
        sum / ord.neighbors.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamSeed;
    use crate::sampler::uniform_points;
    use rand::Rng as _;

    fn model1(xs: &[f64], ys: &[f64], path: SearchPath) -> KnnModel {
        KnnModel::fit_with(Dataset::new(1, xs.to_vec(), ys.to_vec()).unwrap(), path)
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(k_schedule(1.5, 1, 256), 64);
        assert_eq!(k_schedule(1.0, 2, 1000), 31);
        for (p, d) in [(1.5, 1), (1.2, 3), (0.5, 7)] {
            assert_eq!(k_schedule(p, d, 1), 1);
        }
        // floor(2^(0.75 e)) over the rate-experiment grid
        let expected = [64, 107, 181, 304, 512, 861, 1448];
        for (e, k) in (8..=14).zip(expected) {
            assert_eq!(k_schedule(1.5, 1, 1 << e), k, "n = 2^{e}");
        }
        assert_eq!(k_schedule(1.5, 2, 1 << 10), 64);
        assert!(k_schedule(100.0, 1, 50) <= 50);
    }

    #[test]
    fn tie_goes_to_lower_index() {
        for path in [SearchPath::Brute, SearchPath::Tree] {
            let m = model1(&[0.4, 0.6], &[0.0, 1.0], path);
            assert_eq!(m.neighbors(&[0.5], 1).unwrap().indices(), vec![0]);
            let m = model1(&[0.6, 0.4], &[0.0, 1.0], path);
            assert_eq!(m.neighbors(&[0.5], 1).unwrap().indices(), vec![0]);
        }
    }

    #[test]
    fn ordering_and_predictions() {
        for path in [SearchPath::Brute, SearchPath::Tree] {
            let m = model1(&[0.1, 0.9], &[1.0, 3.0], path);
            assert_eq!(m.neighbors(&[0.0], 2).unwrap().indices(), vec![0, 1]);
            assert_eq!(m.predict(&[0.0], 1).unwrap(), 1.0);
            assert_eq!(m.predict(&[0.0], 2).unwrap(), 2.0);
        }
    }

    #[test]
    fn k_equal_n_is_global_mean() {
        let mut rng = StreamSeed::new(3, 0).rng();
        let xs = uniform_points(2, 40, &mut rng);
        let ys: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let m = KnnModel::fit(Dataset::new(2, xs, ys).unwrap());
        assert_eq!(m.predict(&[0.3, 0.3], 40).unwrap(), 19.5);
    }

    #[test]
    fn errors() {
        let m = model1(&[0.1, 0.9], &[1.0, 3.0], SearchPath::Auto);
        assert!(matches!(m.neighbors(&[0.0], 3), Err(Error::Argument(_))));
        assert!(matches!(m.predict(&[0.0], 0), Err(Error::Argument(_))));
        assert!(matches!(m.predict(&[0.0, 0.0], 1), Err(Error::Domain(_))));
        let empty = model1(&[], &[], SearchPath::Auto);
        assert!(matches!(empty.predict(&[0.0], 1), Err(Error::State(_))));
    }

    #[test]
    fn duplicated_points_resolve_by_index() {
        // rows 1 and 3 coincide; whichever query, row 1 must precede row 3
        let xs = [0.2, 0.5, 0.8, 0.5, 0.1];
        let ys = [0.0, 10.0, 0.0, 20.0, 0.0];
        for path in [SearchPath::Brute, SearchPath::Tree] {
            let m = model1(&xs, &ys, path);
            for q in [0.5, 0.5 + 1e-17, 0.49999999999999994, 0.52] {
                let ord = m.neighbors(&[q], 2).unwrap().indices();
                assert_eq!(ord, vec![1, 3]);
                assert_eq!(m.predict(&[q], 1).unwrap(), 10.0);
            }
        }
    }

    #[test]
    fn tree_matches_brute_on_random_queries() {
        let mut rng = StreamSeed::new(5, 0).rng();
        let xs = uniform_points(3, 200, &mut rng);
        let ys: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        let m = KnnModel::fit_with(Dataset::new(3, xs, ys).unwrap(), SearchPath::Tree);
        for _ in 0..1000 {
            let q: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            let k = rng.random_range(1..=200);
            assert_eq!(
                m.neighbors(&q, k).unwrap(),
                m.neighbors_brute(&q, k).unwrap()
            );
        }
    }

    #[test]
    fn tree_handles_lattice_ties() {
        // every query on a lattice sees many exactly-equal distances
        let pts: Vec<f64> = (0..20)
            .flat_map(|i| (0..20).map(move |j| [i as f64 / 19.0, j as f64 / 19.0]))
            .flatten()
            .collect();
        let n = pts.len() / 2;
        let ys: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let m = KnnModel::fit_with(Dataset::new(2, pts, ys).unwrap(), SearchPath::Tree);
        for qi in 0..20 {
            for qj in 0..20 {
                let q = [qi as f64 / 19.0, (qj as f64 + 0.5) / 20.0];
                for k in [1, 2, 5, 9, 40] {
                    assert_eq!(
                        m.neighbors(&q, k).unwrap().neighbors,
                        m.neighbors_brute(&q, k).unwrap().neighbors
                    );
                }
            }
        }
    }

    #[test]
    fn auto_path_thresholds() {
        let mut rng = StreamSeed::new(1, 0).rng();
        let small = Dataset::new(2, uniform_points(2, 512, &mut rng), vec![0.0; 512]).unwrap();
        assert!(!KnnModel::fit(small).has_tree());
        let big = Dataset::new(2, uniform_points(2, 513, &mut rng), vec![0.0; 513]).unwrap();
        assert!(KnnModel::fit(big).has_tree());
        let wide = Dataset::new(8, uniform_points(8, 2000, &mut rng), vec![0.0; 2000]).unwrap();
        assert!(!KnnModel::fit(wide).has_tree());
    }
}
