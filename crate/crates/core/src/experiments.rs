//! Repetition loops for the simulation studies, shared by the command-line
//! benchmark and the acceptance tests.

use serde::{Deserialize, Serialize};

use crate::data::{center_columns, DataMatrix, LabeledPartition};
use crate::error::{Error, Result};
use crate::evaluation::{jaccard_concordance_with, kmeans_with, overall_rand, pca_embed, DEFAULT_JACCARD_K};
use crate::exec::Exec;
use crate::kernel::{cross_sq_distances_with, select_bandwidth, DEFAULT_OMEGA};
use crate::pipeline::embed_pair;
use crate::rng::derive_seed;
use crate::simulation::{
    sample_setting1, sample_setting2, sample_torus_pair, SETTING_SIGMA1_SQ, SETTING_SIGMA2_SQ, TORUS_SIGMA1_SQ,
    TORUS_SIGMA2_SQ,
};

pub const PROP: &str = "prop";
pub const PCA: &str = "pca";
pub const JPCA: &str = "j-pca";

/// One long-format result row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub method: String,
    pub tau_or_n: f64,
    pub rep: usize,
    pub metric: String,
    pub value: f64,
}

impl Record {
    fn new(method: &str, tau_or_n: f64, rep: usize, metric: &str, value: f64) -> Self {
        Record {
            method: method.into(),
            tau_or_n,
            rep,
            metric: metric.into(),
            value,
        }
    }
}

/// Canonical order: method, grid value, repetition, metric.
pub fn sort_records(records: &mut [Record]) {
    records.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.tau_or_n.total_cmp(&b.tau_or_n))
            .then(a.rep.cmp(&b.rep))
            .then(a.metric.cmp(&b.metric))
    });
}

/// Mean value of `metric` for `method` at grid value `at`.
pub fn mean_of(records: &[Record], method: &str, at: f64, metric: &str) -> Option<f64> {
    let vals: Vec<f64> = records
        .iter()
        .filter(|r| r.method == method && r.tau_or_n == at && r.metric == metric)
        .map(|r| r.value)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Seed for repetition `rep` at grid value `at`.
pub fn rep_seed(seed: u64, at: f64, rep: usize) -> u64 {
    derive_seed(derive_seed(seed, at.to_bits()), rep as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringDesign {
    /// 1 or 2.
    pub setting: u8,
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
    /// Embedding dimension; components `2..=r+1` are used.
    pub r: usize,
    pub omega: f64,
}

impl Default for ClusteringDesign {
    fn default() -> Self {
        ClusteringDesign {
            setting: 1,
            n1: 600,
            n2: 600,
            p: 800,
            r: 6,
            omega: DEFAULT_OMEGA,
        }
    }
}

fn rand_of(ex: &crate::faer::Mat<f64>, kx: usize, lx: &[usize], ey: &crate::faer::Mat<f64>, ly: &[usize], seed: u64, exec: Exec) -> Result<f64> {
    let est_x = kmeans_with(ex.as_ref(), kx, derive_seed(seed, 1), exec)?;
    let est_y = kmeans_with(ey.as_ref(), 6, derive_seed(seed, 2), exec)?;
    let r = overall_rand(
        &est_x,
        &LabeledPartition::from_labels(lx),
        &est_y,
        &LabeledPartition::from_labels(ly),
    )?;
    Ok(r.value)
}

/// Generates one clustering pair and scores the joint embedding and the
/// two PCA baselines by the overall Rand index of k-means clusters.
pub fn clustering_rep(design: &ClusteringDesign, tau: f64, rep: usize, seed: u64, exec: Exec) -> Result<Vec<Record>> {
    let s = rep_seed(seed, tau, rep);
    let (pair, kx) = match design.setting {
        1 => (
            sample_setting1(design.n1, design.n2, design.p, tau, SETTING_SIGMA1_SQ, SETTING_SIGMA2_SQ, s)?,
            6,
        ),
        2 => (sample_setting2(design.n1, design.n2, design.p, tau, s)?, 4),
        other => return Err(Error::Config(format!("unknown clustering setting {other}"))),
    };
    let x = center_columns(&pair.x);
    let y = center_columns(&pair.y);
    let gamma: Vec<usize> = (2..=design.r + 1).collect();

    let d = cross_sq_distances_with(&x, &y, exec)?;
    let h = select_bandwidth(&d, design.omega)?;
    drop(d);
    let (_, e) = embed_pair(&x, &y, h, &gamma, &gamma, exec)?;
    let prop = rand_of(&e.ex, kx, &pair.labels_x, &e.ey, &pair.labels_y, s, exec)?;

    let px = pca_embed(&x, design.r)?;
    let py = pca_embed(&y, design.r)?;
    let pca = rand_of(&px, kx, &pair.labels_x, &py, &pair.labels_y, s, exec)?;

    let j = pca_embed(&x.stack(&y)?, design.r)?;
    let jx = j.as_ref().subrows(0, x.n()).to_owned();
    let jy = j.as_ref().subrows(x.n(), y.n()).to_owned();
    let jpca = rand_of(&jx, kx, &pair.labels_x, &jy, &pair.labels_y, s, exec)?;

    Ok(vec![
        Record::new(PROP, tau, rep, "rand_index", prop),
        Record::new(PCA, tau, rep, "rand_index", pca),
        Record::new(JPCA, tau, rep, "rand_index", jpca),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldDesign {
    pub p: usize,
    /// Components of the y embedding.
    pub gamma: Vec<usize>,
    pub k: usize,
    pub omega: f64,
}

impl Default for ManifoldDesign {
    fn default() -> Self {
        ManifoldDesign {
            p: 800,
            gamma: vec![2, 3, 4],
            k: DEFAULT_JACCARD_K,
            omega: DEFAULT_OMEGA,
        }
    }
}

fn leading_coords(d: &DataMatrix, q: usize) -> Result<DataMatrix> {
    DataMatrix::from_fn(d.n(), q, |i, j| d.get(i, j))
}

/// Generates one torus pair with `n1 = n2 = n` and scores the y embedding
/// and `pca_embed(y, 3)` by Jaccard concordance against the clean torus
/// coordinates (`jaccard`) and the full clean signal (`jaccard_full`).
pub fn manifold_rep(design: &ManifoldDesign, n: usize, rep: usize, seed: u64, exec: Exec) -> Result<Vec<Record>> {
    let s = rep_seed(seed, n as f64, rep);
    let pair = sample_torus_pair(n, n, design.p, TORUS_SIGMA1_SQ, TORUS_SIGMA2_SQ, s)?;
    let x = center_columns(&pair.x);
    let y = center_columns(&pair.y);
    let d = cross_sq_distances_with(&x, &y, exec)?;
    let h = select_bandwidth(&d, design.omega)?;
    drop(d);
    let (_, e) = embed_pair(&x, &y, h, &design.gamma, &design.gamma, exec)?;
    let py = pca_embed(&y, 3)?;
    let torus = leading_coords(&pair.y_clean, 3)?;
    let at = n as f64;
    let mut out = Vec::new();
    for (method, emb) in [(PROP, &e.ey), (PCA, &py)] {
        let jt = jaccard_concordance_with(emb.as_ref(), &torus, design.k, exec)?;
        let jf = jaccard_concordance_with(emb.as_ref(), &pair.y_clean, design.k, exec)?;
        out.push(Record::new(method, at, rep, "jaccard", jt));
        out.push(Record::new(method, at, rep, "jaccard_full", jf));
    }
    Ok(out)
}
