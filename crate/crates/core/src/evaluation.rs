//! Clustering metrics and the baseline clusterers and embedders used to
//! score joint embeddings.

use faer::{Mat, MatRef};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{center_columns, DataMatrix, LabeledPartition};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{fix_column_sign, gram_cols, gram_rows, sym_eigen_desc};
use crate::neighbors::{knn, sq_dist, Points};
use crate::rng::{derive_seed, stream, streams};

pub const DEFAULT_JACCARD_K: usize = 50;
pub const KMEANS_RESTARTS: usize = 20;
pub const KMEANS_MAX_ITER: usize = 300;
pub const KMEANS_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub name: String,
    pub value: f64,
    pub per_dataset: Option<(f64, f64)>,
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Fraction of sample pairs on which the two partitions agree (both
/// together or both apart), from the contingency table.
pub fn rand_index(a: &LabeledPartition, b: &LabeledPartition) -> Result<f64> {
    let n = a.len();
    if n != b.len() {
        return Err(Error::Shape(format!("partitions of {} and {} samples", n, b.len())));
    }
    if n < 2 {
        return Err(Error::Shape("the Rand index needs at least 2 samples".into()));
    }
    let (ka, kb) = (a.k(), b.k());
    let mut table = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&i, &j) in a.assignments().iter().zip(b.assignments()) {
        table[i * kb + j] += 1;
        rows[i] += 1;
        cols[j] += 1;
    }
    let both: u64 = table.iter().map(|&c| pairs(c)).sum();
    let same_a: u64 = rows.iter().map(|&c| pairs(c)).sum();
    let same_b: u64 = cols.iter().map(|&c| pairs(c)).sum();
    let total = pairs(n as u64);
    // Agreements = pairs together in both + pairs apart in both.
    let agree = total + 2 * both - same_a - same_b;
    Ok(agree as f64 / total as f64)
}

/// Mean of the per-dataset Rand indices.
pub fn overall_rand(
    est_x: &LabeledPartition,
    true_x: &LabeledPartition,
    est_y: &LabeledPartition,
    true_y: &LabeledPartition,
) -> Result<MetricReport> {
    let rx = rand_index(est_x, true_x)?;
    let ry = rand_index(est_y, true_y)?;
    Ok(MetricReport {
        name: "rand_index".into(),
        value: 0.5 * (rx + ry),
        per_dataset: Some((rx, ry)),
    })
}

/// Mean Jaccard similarity between each sample's `k` nearest neighbors in
/// the embedding and among the clean signals.
pub fn jaccard_concordance(embeds: MatRef<'_, f64>, clean: &DataMatrix, k: usize) -> Result<f64> {
    jaccard_concordance_with(embeds, clean, k, Exec::default())
}

pub fn jaccard_concordance_with(embeds: MatRef<'_, f64>, clean: &DataMatrix, k: usize, exec: Exec) -> Result<f64> {
    let n = embeds.nrows();
    if n != clean.n() {
        return Err(Error::Shape(format!("{n} embedded rows for {} clean samples", clean.n())));
    }
    let w = knn(&Points::from_mat(embeds), k, exec)?;
    let s = knn(&Points::from_rows(clean.n(), clean.p(), clean.values().to_vec()), k, exec)?;
    let total: f64 = w
        .iter()
        .zip(&s)
        .map(|(a, b)| jaccard(a, b))
        .sum();
    Ok(total / n as f64)
}

/// `|A ∩ B| / |A ∪ B|` for index sets without repeats.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// A single Lloyd run: labels, final within-cluster sum of squares, and the
/// objective after every assignment step.
#[derive(Clone, Debug)]
pub struct KMeansRun {
    pub labels: Vec<usize>,
    pub wcss: f64,
    pub history: Vec<f64>,
}

fn assign(points: &Points, centers: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut total = 0.0;
    for (i, l) in labels.iter_mut().enumerate() {
        let row = points.row(i);
        let mut best = (f64::INFINITY, 0usize);
        for (c, center) in centers.iter().enumerate() {
            let d = sq_dist(row, center);
            if d < best.0 {
                best = (d, c);
            }
        }
        *l = best.1;
        total += best.0;
    }
    total
}

fn plus_plus_init(points: &Points, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.n;
    let mut centers = vec![points.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), &c));
        }
        centers.push(c);
    }
    centers
}

fn lloyd(points: &Points, k: usize, seed: u64) -> KMeansRun {
    let mut rng = stream(seed, streams::KMEANS);
    let mut centers = plus_plus_init(points, k, &mut rng);
    let mut labels = vec![0usize; points.n];
    let mut wcss = assign(points, &centers, &mut labels);
    let mut history = vec![wcss];
    for _ in 0..KMEANS_MAX_ITER {
        let mut sums = vec![vec![0.0; points.q]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // Reseed empty clusters at the point farthest from its center.
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..points.n)
                    .map(|i| (sq_dist(points.row(i), &centers[labels[i]]), i))
                    .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
                    .map_or(0, |(_, i)| i);
                counts[labels[far]] -= 1;
                labels[far] = c;
                counts[c] = 1;
                centers[c] = points.row(far).to_vec();
            }
        }
        let prev = wcss;
        wcss = assign(points, &centers, &mut labels);
        history.push(wcss);
        if prev - wcss <= KMEANS_TOL * prev {
            break;
        }
    }
    KMeansRun { labels, wcss, history }
}

/// All restarts of k-means++ seeded Lloyd iterations, in restart order.
pub fn kmeans_runs(points: MatRef<'_, f64>, k: usize, seed: u64, restarts: usize, exec: Exec) -> Result<Vec<KMeansRun>> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let pts = Points::from_mat(points);
    Ok(exec.map(restarts.max(1), |r| lloyd(&pts, k, derive_seed(seed, r as u64))))
}

/// Best of [`KMEANS_RESTARTS`] runs by within-cluster sum of squares, ties to
/// the earliest restart.
pub fn kmeans(points: MatRef<'_, f64>, k: usize, seed: u64) -> Result<LabeledPartition> {
    kmeans_with(points, k, seed, Exec::default())
}

pub fn kmeans_with(points: MatRef<'_, f64>, k: usize, seed: u64, exec: Exec) -> Result<LabeledPartition> {
    let runs = kmeans_runs(points, k, seed, KMEANS_RESTARTS, exec)?;
    let best = runs
        .into_iter()
        .reduce(|best, r| if r.wcss < best.wcss { r } else { best })
        .expect("at least one restart");
    Ok(LabeledPartition::from_labels(&best.labels))
}

/// Agglomerative clustering with Ward linkage on Euclidean distances, cut
/// at `k` clusters. Cluster ids follow first appearance in row order.
pub fn hierarchical_cluster(points: MatRef<'_, f64>, k: usize) -> Result<LabeledPartition> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let pts = Points::from_mat(points);
    // Lance–Williams updates on squared distances; merges found by the
    // nearest-neighbor chain, valid because Ward linkage is reducible.
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = sq_dist(pts.row(i), pts.row(j));
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut merges: Vec<(f64, usize, usize)> = Vec::with_capacity(n - 1);
    let mut chain: Vec<usize> = Vec::new();
    let mut remaining = n;
    while remaining > 1 {
        if chain.is_empty() {
            chain.push((0..n).find(|&i| active[i]).expect("an active cluster"));
        }
        let a = *chain.last().unwrap();
        let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };
        let mut best = (f64::INFINITY, usize::MAX);
        for c in (0..n).filter(|&c| active[c] && c != a) {
            let v = d[a * n + c];
            if v < best.0 || (v == best.0 && Some(c) == prev) {
                best = (v, c);
            }
        }
        let b = best.1;
        if Some(b) == prev {
            chain.pop();
            chain.pop();
            let (lo, hi) = (a.min(b), a.max(b));
            merges.push((best.0, lo, hi));
            let (si, sj) = (size[lo] as f64, size[hi] as f64);
            for c in (0..n).filter(|&c| active[c] && c != lo && c != hi) {
                let sc = size[c] as f64;
                let v = ((si + sc) * d[lo * n + c] + (sj + sc) * d[hi * n + c] - sc * d[lo * n + hi])
                    / (si + sj + sc);
                d[lo * n + c] = v;
                d[c * n + lo] = v;
            }
            size[lo] += size[hi];
            active[hi] = false;
            remaining -= 1;
        } else {
            chain.push(b);
        }
    }
    // Replay the n − k cheapest merges, in order of height.
    let mut order: Vec<usize> = (0..merges.len()).collect();
    order.sort_by(|&x, &y| merges[x].0.total_cmp(&merges[y].0).then(x.cmp(&y)));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    // Merge records name cluster representatives, which are original rows.
    for &m in order.iter().take(n - k) {
        let (_, a, b) = merges[m];
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra.max(rb)] = ra.min(rb);
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(LabeledPartition::from_labels(&roots))
}

/// Scores on the top `r` principal components of the column-centered data,
/// each column sign-fixed so its largest-magnitude entry is positive.
pub fn pca_embed(d: &DataMatrix, r: usize) -> Result<Mat<f64>> {
    let (n, p) = (d.n(), d.p());
    if r > n.min(p) {
        return Err(Error::Index(format!("{r} components from a {n}×{p} matrix")));
    }
    let x = center_columns(d).to_mat();
    let mut scores = if p <= n {
        let (_, v) = sym_eigen_desc(gram_cols(x.as_ref()).as_ref())?;
        &x * v.as_ref().subcols(0, r)
    } else {
        let (vals, u) = sym_eigen_desc(gram_rows(x.as_ref()).as_ref())?;
        Mat::from_fn(n, r, |i, j| u[(i, j)] * vals[j].max(0.0).sqrt())
    };
    for j in 0..r {
        fix_column_sign(&mut scores, j);
    }
    Ok(scores)
}
