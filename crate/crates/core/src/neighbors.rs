//! Brute-force exact k-nearest neighbors.
//!
//! Neighbors are ordered by squared Euclidean distance with ties broken by
//! the smaller index; a point is never its own neighbor.

use std::cmp::Ordering;

use faer::MatRef;

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Row-major copy of a dense point set.
#[derive(Clone, Debug)]
pub(crate) struct Points {
    pub n: usize,
    pub q: usize,
    pub data: Vec<f64>,
}

impl Points {
    pub fn from_mat(m: MatRef<'_, f64>) -> Self {
        let (n, q) = (m.nrows(), m.ncols());
        let mut data = Vec::with_capacity(n * q);
        for i in 0..n {
            for j in 0..q {
                data.push(m[(i, j)]);
            }
        }
        Points { n, q, data }
    }

    pub fn from_rows(n: usize, q: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * q);
        Points { n, q, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.q..(i + 1) * self.q]
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn by_dist_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `k` nearest neighbors of every point, nearest first.
pub(crate) fn knn(points: &Points, k: usize, exec: Exec) -> Result<Vec<Vec<usize>>> {
    let n = points.n;
    if k == 0 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    Ok(exec.map(n, |i| {
        let xi = points.row(i);
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sq_dist(xi, points.row(j)), j))
            .collect();
        cand.select_nth_unstable_by(k - 1, by_dist_then_index);
        cand.truncate(k);
        cand.sort_unstable_by(by_dist_then_index);
        cand.into_iter().map(|(_, j)| j).collect()
    }))
}

/// The `k` nearest neighbors of every row of `m`, nearest first.
pub fn knn_indices(m: MatRef<'_, f64>, k: usize) -> Result<Vec<Vec<usize>>> {
    knn(&Points::from_mat(m), k, Exec::default())
}
