//! Cross-dataset distances, percentile bandwidths and Gaussian kernels.

use faer::Mat;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{dot, gram_spectrum};

/// Default bandwidth percentile.
pub const DEFAULT_OMEGA: f64 = 0.5;

/// Squared Euclidean distances between the rows of two datasets, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n1: usize,
    n2: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n1: usize, n2: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != n1 * n2 || d.is_empty() {
            return Err(Error::Shape(format!(
                "{} distances for a {n1}×{n2} matrix",
                d.len()
            )));
        }
        if d.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain(
                "squared distances must be finite and nonnegative".into(),
            ));
        }
        Ok(DistanceMatrix { n1, n2, d })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n2 + j]
    }

    pub fn transpose(&self) -> DistanceMatrix {
        let mut d = vec![0.0; self.d.len()];
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                d[j * self.n1 + i] = self.d[i * self.n2 + j];
            }
        }
        DistanceMatrix {
            n1: self.n2,
            n2: self.n1,
            d,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthSource {
    Fixed,
    Percentile,
    Resampled,
}

/// A Gaussian kernel bandwidth. `omega` is absent for user-fixed values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub h: f64,
    pub omega: Option<f64>,
    pub source: BandwidthSource,
}

impl Bandwidth {
    pub fn fixed(h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("bandwidth must be positive, got {h}")));
        }
        Ok(Bandwidth {
            h,
            omega: None,
            source: BandwidthSource::Fixed,
        })
    }
}

/// Gaussian affinities `exp(-d_ij / h)`.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub k: Mat<f64>,
    pub h: Bandwidth,
}

impl KernelMatrix {
    pub fn n1(&self) -> usize {
        self.k.nrows()
    }

    pub fn n2(&self) -> usize {
        self.k.ncols()
    }
}

pub(crate) fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("percentile must lie in (0,1), got {omega}")))
    }
}

/// 1-based rank `m` of the smallest order statistic with `m / total ≥ omega`.
pub(crate) fn percentile_rank(omega: f64, total: usize) -> usize {
    let nf = total as f64;
    let mut m = ((omega * nf).ceil() as usize).clamp(1, total);
    while m > 1 && (m - 1) as f64 / nf >= omega {
        m -= 1;
    }
    while m < total && (m as f64) / nf < omega {
        m += 1;
    }
    m
}

/// Percentile of a multiset with the zero-bandwidth fallback.
fn percentile_bandwidth(mut values: Vec<f64>, omega: f64) -> Result<f64> {
    check_omega(omega)?;
    if values.is_empty() {
        return Err(Error::Shape("no distances to take a percentile of".into()));
    }
    let m = percentile_rank(omega, values.len());
    let (_, &mut h, _) = values.select_nth_unstable_by(m - 1, f64::total_cmp);
    if h > 0.0 {
        return Ok(h);
    }
    values
        .iter()
        .copied()
        .filter(|v| *v > 0.0)
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Degenerate("all squared distances are zero".into()))
}

fn sq_norms(x: &DataMatrix, exec: Exec) -> Vec<f64> {
    exec.map(x.n(), |i| {
        let r = x.row(i);
        dot(r, r)
    })
}

pub fn cross_sq_distances(x: &DataMatrix, y: &DataMatrix) -> Result<DistanceMatrix> {
    cross_sq_distances_with(x, y, Exec::default())
}

/// `d_ij = ‖x_i‖² + ‖y_j‖² − 2 x_i·y_j`, clamped at zero. Bit-exactly
/// transposed when the arguments are swapped.
pub fn cross_sq_distances_with(x: &DataMatrix, y: &DataMatrix, exec: Exec) -> Result<DistanceMatrix> {
    if x.p() != y.p() {
        return Err(Error::Shape(format!(
            "feature counts differ: {} vs {}",
            x.p(),
            y.p()
        )));
    }
    let (n1, n2) = (x.n(), y.n());
    let nx = sq_norms(x, exec);
    let ny = sq_norms(y, exec);
    let mut d = vec![0.0; n1 * n2];
    exec.for_each_chunk(&mut d, n2, |i, row| {
        let xi = x.row(i);
        for (j, out) in row.iter_mut().enumerate() {
            *out = (nx[i] + ny[j] - 2.0 * dot(xi, y.row(j))).max(0.0);
        }
    });
    Ok(DistanceMatrix { n1, n2, d })
}

/// The `omega`-percentile of the distances: the smallest `d_ij` whose
/// empirical CDF reaches `omega`. Falls back to the smallest positive
/// distance when that value is zero.
pub fn select_bandwidth(d: &DistanceMatrix, omega: f64) -> Result<Bandwidth> {
    let h = percentile_bandwidth(d.d.clone(), omega)?;
    Ok(Bandwidth {
        h,
        omega: Some(omega),
        source: BandwidthSource::Percentile,
    })
}

pub fn build_duo_kernel(d: &DistanceMatrix, h: Bandwidth) -> Result<KernelMatrix> {
    build_duo_kernel_with(d, h, Exec::default())
}

pub fn build_duo_kernel_with(d: &DistanceMatrix, h: Bandwidth, exec: Exec) -> Result<KernelMatrix> {
    if !(h.h > 0.0 && h.h.is_finite()) {
        return Err(Error::Domain(format!("bandwidth must be positive, got {}", h.h)));
    }
    let (n1, n2) = (d.n1, d.n2);
    // Column-major fill: one chunk per column of K.
    let mut buf = vec![0.0; n1 * n2];
    exec.for_each_chunk(&mut buf, n1, |j, col| {
        for (i, out) in col.iter_mut().enumerate() {
            *out = (-d.get(i, j) / h.h).exp();
        }
    });
    Ok(KernelMatrix {
        k: Mat::from_fn(n1, n2, |i, j| buf[j * n1 + i]),
        h,
    })
}

/// Distances, bandwidth and kernel in one call.
pub fn duo_kernel(x: &DataMatrix, y: &DataMatrix, omega: f64, exec: Exec) -> Result<(DistanceMatrix, KernelMatrix)> {
    let d = cross_sq_distances_with(x, y, exec)?;
    let h = select_bandwidth(&d, omega)?;
    let k = build_duo_kernel_with(&d, h, exec)?;
    Ok((d, k))
}

/// Symmetric kernel on the stacked samples of both datasets.
#[derive(Clone, Debug)]
pub struct MergedKernel {
    pub f: Mat<f64>,
    pub bandwidth: Bandwidth,
    pub n1: usize,
    pub n2: usize,
}

pub fn merged_kernel(x: &DataMatrix, y: &DataMatrix, omega: f64) -> Result<MergedKernel> {
    merged_kernel_with(x, y, omega, Exec::default())
}

pub fn merged_kernel_with(x: &DataMatrix, y: &DataMatrix, omega: f64, exec: Exec) -> Result<MergedKernel> {
    if x.p() != y.p() {
        return Err(Error::Shape(format!(
            "feature counts differ: {} vs {}",
            x.p(),
            y.p()
        )));
    }
    check_omega(omega)?;
    let z = x.stack(y)?;
    let (f, q) = symmetric_kernel(&z, omega, exec)?;
    Ok(MergedKernel {
        f,
        bandwidth: Bandwidth {
            h: q,
            omega: Some(omega),
            source: BandwidthSource::Percentile,
        },
        n1: x.n(),
        n2: y.n(),
    })
}

/// Gaussian kernel on all rows of `z` with bandwidth the `omega`-percentile
/// of the distances over unordered pairs `i < j`.
pub(crate) fn symmetric_kernel(z: &DataMatrix, omega: f64, exec: Exec) -> Result<(Mat<f64>, f64)> {
    let n = z.n();
    let norms = sq_norms(z, exec);
    let mut d = vec![0.0; n * n];
    exec.for_each_chunk(&mut d, n, |i, row| {
        let zi = z.row(i);
        for j in (i + 1)..n {
            row[j] = (norms[i] + norms[j] - 2.0 * dot(zi, z.row(j))).max(0.0);
        }
    });
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        upper.extend_from_slice(&d[i * n + i + 1..(i + 1) * n]);
    }
    let q = percentile_bandwidth(upper, omega)?;
    let mut f = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        f[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let v = (-d[i * n + j] / q).exp();
            f[(i, j)] = v;
            f[(j, i)] = v;
        }
    }
    Ok((f, q))
}

/// Scores each percentile in `grid` by the mean separation `s_r / s_{r+1}`
/// of the scaled duo-kernel singular values over `b` random half-subsamples
/// of both datasets, and returns the best (smallest on ties).
///
/// This is a heuristic; the same subsample pairs are reused for every
/// grid value.
pub fn auto_omega(
    x: &DataMatrix,
    y: &DataMatrix,
    grid: &[f64],
    r: usize,
    b: usize,
    seed: u64,
) -> Result<Bandwidth> {
    auto_omega_with(x, y, grid, r, b, seed, Exec::default())
}

pub fn auto_omega_with(
    x: &DataMatrix,
    y: &DataMatrix,
    grid: &[f64],
    r: usize,
    b: usize,
    seed: u64,
    exec: Exec,
) -> Result<Bandwidth> {
    if x.p() != y.p() {
        return Err(Error::Shape(format!(
            "feature counts differ: {} vs {}",
            x.p(),
            y.p()
        )));
    }
    for n in [x.n(), y.n()] {
        if n < 4 {
            return Err(Error::InsufficientSamples { needed: 4, got: n });
        }
    }
    if grid.is_empty() || r == 0 || b == 0 {
        return Err(Error::Config(
            "auto_omega needs a nonempty grid, r ≥ 1 and b ≥ 1".into(),
        ));
    }
    for &w in grid {
        check_omega(w)?;
    }
    let (h1, h2) = (x.n() / 2, y.n() / 2);
    if r + 1 > h1.min(h2) {
        return Err(Error::InsufficientSamples {
            needed: 2 * (r + 1),
            got: x.n().min(y.n()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(DataMatrix, DataMatrix)> = (0..b)
        .map(|_| {
            let ix = sample(&mut rng, x.n(), h1).into_vec();
            let iy = sample(&mut rng, y.n(), h2).into_vec();
            Ok((x.select_rows(&ix)?, y.select_rows(&iy)?))
        })
        .collect::<Result<_>>()?;
    let dists: Vec<DistanceMatrix> = pairs
        .iter()
        .map(|(a, c)| cross_sq_distances_with(a, c, exec))
        .collect::<Result<_>>()?;

    let mut best: Option<(f64, f64)> = None;
    for &w in grid {
        let mut total = 0.0;
        for d in &dists {
            let h = select_bandwidth(d, w)?;
            let k = build_duo_kernel_with(d, h, exec)?;
            let spec = gram_spectrum(k.k.as_ref())?;
            let (sr, sr1) = (spec[r - 1].sqrt(), spec[r].sqrt());
            total += if sr1 > 0.0 { sr / sr1 } else { f64::INFINITY };
        }
        let score = total / b as f64;
        let better = match best {
            None => true,
            Some((bw, bs)) => score > bs || (score == bs && w < bw),
        };
        if better {
            best = Some((w, score));
        }
    }
    let (w, _) = best.expect("grid is nonempty");
    let d = cross_sq_distances_with(x, y, exec)?;
    let h = percentile_bandwidth(d.d, w)?;
    Ok(Bandwidth {
        h,
        omega: Some(w),
        source: BandwidthSource::Resampled,
    })
}
