//! Random-matrix diagnostics of the kernel spectrum: Marchenko–Pastur
//! edges, bulk rigidity noise detection and a Monte Carlo oracle for the
//! free multiplicative convolution of two Marchenko–Pastur laws.

use faer::Mat;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::kernel::{percentile_rank, KernelMatrix};
use crate::linalg::{dot, gram_rows, gram_spectrum, sym_eigenvalues_desc};
use crate::rng::{derive_seed, stream, streams};

pub const DEFAULT_K_SKIP: usize = 5;
pub const DEFAULT_C1: f64 = 0.1;
pub const DEFAULT_C2: f64 = 0.01;

/// Relative cut below which eigenvalues count as zero.
const NULL_TOL: f64 = 1e-12;

/// Probability levels of the oracle quantile table.
pub const QUANTILE_LEVELS: [f64; 21] = [
    0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75,
    0.80, 0.85, 0.90, 0.95, 0.99,
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpLaw {
    pub phi: f64,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
}

impl MpLaw {
    pub fn new(phi: f64) -> Result<Self> {
        let (gamma_minus, gamma_plus) = mp_edges(phi)?;
        Ok(MpLaw {
            phi,
            gamma_minus,
            gamma_plus,
        })
    }
}

/// Support edges `√φ + 1/√φ ∓ 2`.
pub fn mp_edges(phi: f64) -> Result<(f64, f64)> {
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::Domain(format!("aspect ratio must be positive, got {phi}")));
    }
    let r = phi.sqrt();
    let c = r + 1.0 / r;
    Ok(((c - 2.0).max(0.0), c + 2.0))
}

/// Nonzero eigenvalues of `K Kᵀ / (p √(n1 n2))`, nonincreasing.
pub fn scaled_bulk_eigenvalues(k: &KernelMatrix, p: usize) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::Domain("feature count must be positive".into()));
    }
    let scale = 1.0 / (p as f64 * ((k.n1() as f64) * (k.n2() as f64)).sqrt());
    let mut w: Vec<f64> = gram_spectrum(k.k.as_ref())?.into_iter().map(|v| v * scale).collect();
    let cut = w.first().copied().unwrap_or(0.0) * NULL_TOL;
    w.retain(|&v| v > cut);
    Ok(w)
}

fn mean_sq_norm(d: &DataMatrix) -> f64 {
    d.rows().map(|r| dot(r, r)).sum::<f64>() / d.n() as f64
}

/// Factor that puts the bulk of [`scaled_bulk_eigenvalues`] on the scale of
/// the unit-variance free-convolution law:
/// `h² exp(2(m1 + m2)/h) / (4 (m1/p)(m2/p))`, where `m_k` is the mean squared
/// row norm of the centered dataset `k` and `h` the kernel bandwidth.
pub fn noise_calibration(x: &DataMatrix, y: &DataMatrix, h: f64) -> Result<f64> {
    if x.p() != y.p() {
        return Err(Error::Shape("feature counts differ".into()));
    }
    let p = x.p() as f64;
    let (m1, m2) = (mean_sq_norm(x), mean_sq_norm(y));
    if m1 <= 0.0 || m2 <= 0.0 {
        return Err(Error::Degenerate("a dataset has zero variance".into()));
    }
    let f = h * h * (2.0 * (m1 + m2) / h).exp() / (4.0 * (m1 / p) * (m2 / p));
    if !f.is_finite() {
        return Err(Error::Degenerate(
            "calibration overflows; the bandwidth is too small for the data scale".into(),
        ));
    }
    Ok(f)
}

/// [`scaled_bulk_eigenvalues`] multiplied by [`noise_calibration`]. Expects
/// centered data and the kernel built from it.
pub fn calibrated_bulk_eigenvalues(x: &DataMatrix, y: &DataMatrix, k: &KernelMatrix) -> Result<Vec<f64>> {
    let f = noise_calibration(x, y, k.h.h)?;
    Ok(scaled_bulk_eigenvalues(k, x.p())?.into_iter().map(|v| v * f).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRegimeReport {
    pub noise_dominated: bool,
    pub bulk_median: f64,
    pub k_skip: usize,
    pub c1: f64,
    pub c2: f64,
    pub w: Vec<f64>,
    pub gap_ratios: Vec<f64>,
}

fn median(sorted_desc: &[f64]) -> f64 {
    let n = sorted_desc.len();
    if n % 2 == 1 {
        sorted_desc[n / 2]
    } else {
        0.5 * (sorted_desc[n / 2 - 1] + sorted_desc[n / 2])
    }
}

/// Flags a noise-dominated spectrum: every consecutive ratio
/// `w_i / w_{i+1}` with `i ≥ k_skip` (1-based) and `w_{i+1}` in the upper half
/// of the spectrum stays below `1 + c1`, and the median of `w` exceeds `c2`.
///
/// Ratios are not taken below the median because the limiting law has a
/// hard edge near zero where consecutive eigenvalues separate even for pure
/// noise.
pub fn detect_noise_regime(w: &[f64], k_skip: usize, c1: f64, c2: f64) -> Result<NoiseRegimeReport> {
    if k_skip < 1 {
        return Err(Error::InvalidThreshold(format!("k_skip must be at least 1, got {k_skip}")));
    }
    if !(c1 > 0.0 && c1.is_finite()) || !(c2 > 0.0 && c2.is_finite()) {
        return Err(Error::InvalidThreshold(format!(
            "c1 and c2 must be positive, got {c1} and {c2}"
        )));
    }
    if w.is_empty() {
        return Err(Error::Shape("no eigenvalues to examine".into()));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || w.windows(2).any(|p| p[0] < p[1]) {
        return Err(Error::Domain(
            "eigenvalues must be finite, nonnegative and nonincreasing".into(),
        ));
    }
    let bulk_median = median(w);
    let floor = w[0] * 1e-10;
    let gap_ratios: Vec<f64> = (k_skip..w.len())
        .take_while(|&i| w[i] > floor)
        .filter(|&i| w[i] >= bulk_median)
        .map(|i| w[i - 1] / w[i])
        .collect();
    let noise_dominated = gap_ratios.iter().all(|&r| r < 1.0 + c1) && bulk_median > c2;
    Ok(NoiseRegimeReport {
        noise_dominated,
        bulk_median,
        k_skip,
        c1,
        c2,
        w: w.to_vec(),
        gap_ratios,
    })
}

/// Empirical quantiles of the pooled oracle spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
}

/// Pooled, sorted nonzero eigenvalues of `W1ᵀW1 W2ᵀW2 / (p √(n1 n2))` over
/// `reps` independent standard Gaussian draws.
pub fn free_conv_sample_mc(n1: usize, n2: usize, p: usize, reps: usize, seed: u64, exec: Exec) -> Result<Vec<f64>> {
    if reps < 1 || n1 < 2 || n2 < 2 || p < 2 {
        return Err(Error::Config(
            "the oracle needs reps ≥ 1 and dimensions ≥ 2".into(),
        ));
    }
    let scale = 1.0 / (p as f64 * ((n1 as f64) * (n2 as f64)).sqrt());
    let per_rep = exec.map(reps, |r| -> Result<Vec<f64>> {
        let mut rng = stream(derive_seed(seed, r as u64), streams::ORACLE);
        let w1 = Mat::from_fn(n1, p, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
        let w2 = Mat::from_fn(n2, p, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
        let m = &w1 * w2.transpose();
        let g = if n1 <= n2 { gram_rows(m.as_ref()) } else { m.transpose() * &m };
        let mut ev = sym_eigenvalues_desc(g.as_ref())?;
        let cut = ev[0] * NULL_TOL;
        ev.retain(|&v| v > cut);
        ev.iter_mut().for_each(|v| *v *= scale);
        Ok(ev)
    });
    let mut pooled = Vec::new();
    for r in per_rep {
        pooled.extend(r?);
    }
    pooled.sort_unstable_by(f64::total_cmp);
    Ok(pooled)
}

/// Quantiles of [`free_conv_sample_mc`] at [`QUANTILE_LEVELS`].
pub fn free_conv_quantiles_mc(n1: usize, n2: usize, p: usize, reps: usize, seed: u64) -> Result<QuantileTable> {
    let pooled = free_conv_sample_mc(n1, n2, p, reps, seed, Exec::default())?;
    Ok(quantile_table(&pooled))
}

/// Inverse-ECDF quantiles of a sorted sample.
pub fn quantile_table(sorted: &[f64]) -> QuantileTable {
    let values = QUANTILE_LEVELS
        .iter()
        .map(|&q| sorted[percentile_rank(q, sorted.len()) - 1])
        .collect();
    QuantileTable {
        levels: QUANTILE_LEVELS.to_vec(),
        values,
    }
}

/// Two-sample Kolmogorov–Smirnov distance `sup_t |F_a(t) − F_b(t)|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut best) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}
