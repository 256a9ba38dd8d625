//! Seeded generators for the clustering and manifold benchmarks, pure
//! noise pairs and negative controls.
//!
//! Each dataset and purpose (labels, clean signal, noise, perturbation)
//! draws from its own stream, so clean signals stay fixed when only the
//! noise level changes.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::rng::{stream, streams};

/// Noise variances used by the clustering settings.
pub const SETTING_SIGMA1_SQ: f64 = 0.25;
pub const SETTING_SIGMA2_SQ: f64 = 1.0;
/// Noise variances used by the torus pair.
pub const TORUS_SIGMA1_SQ: f64 = 0.16;
pub const TORUS_SIGMA2_SQ: f64 = 1.0;

/// Isotropic Gaussian mixture with covariance `cov_scale · I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmSpec {
    pub n: usize,
    pub p: usize,
    pub weights: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub cov_scale: f64,
}

impl GmmSpec {
    /// Equal weights with centers `scale · e_{offset + j}`, `j = 0..k`.
    pub fn on_axes(n: usize, p: usize, k: usize, offset: usize, scale: f64, cov_scale: f64) -> Result<Self> {
        if offset + k > p {
            return Err(Error::Shape(format!(
                "{k} axis centers from coordinate {} need p ≥ {}, got {p}",
                offset + 1,
                offset + k
            )));
        }
        let centers = (0..k)
            .map(|j| {
                let mut c = vec![0.0; p];
                c[offset + j] = scale;
                c
            })
            .collect();
        Ok(GmmSpec {
            n,
            p,
            weights: vec![1.0 / k as f64; k],
            centers,
            cov_scale,
        })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    fn validate(&self) -> Result<()> {
        let total: f64 = self.weights.iter().sum();
        if self.weights.len() != self.centers.len()
            || self.weights.iter().any(|w| !(*w > 0.0))
            || (total - 1.0).abs() > 1e-12
        {
            return Err(Error::Config("mixture weights must be positive and sum to 1".into()));
        }
        if self.centers.iter().any(|c| c.len() != self.p) {
            return Err(Error::Shape("center dimension differs from p".into()));
        }
        Ok(())
    }

    /// Labels first, then coordinates: `(values row-major, labels)`.
    fn sample(&self, labels_rng: &mut ChaCha8Rng, signal_rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, Vec<usize>)> {
        self.validate()?;
        let labels: Vec<usize> = (0..self.n)
            .map(|_| {
                let u: f64 = labels_rng.random();
                let mut acc = 0.0;
                for (j, w) in self.weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return j;
                    }
                }
                self.weights.len() - 1
            })
            .collect();
        let sd = self.cov_scale.sqrt();
        let mut values = Vec::with_capacity(self.n * self.p);
        for &l in &labels {
            for f in 0..self.p {
                let z: f64 = StandardNormal.sample(signal_rng);
                values.push(self.centers[l][f] + sd * z);
            }
        }
        Ok((values, labels))
    }
}

/// A simulated pair with clean signals and ground-truth labels.
#[derive(Clone, Debug)]
pub struct ClusterPair {
    pub x: DataMatrix,
    pub y: DataMatrix,
    pub x_clean: DataMatrix,
    pub y_clean: DataMatrix,
    pub labels_x: Vec<usize>,
    pub labels_y: Vec<usize>,
}

fn add_noise(clean: &[f64], sigma_sq: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sd = sigma_sq.sqrt();
    clean
        .iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(rng);
            v + sd * z
        })
        .collect()
}

fn check_sigma(sigma_sq: f64) -> Result<()> {
    if sigma_sq >= 0.0 && sigma_sq.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("noise variance must be nonnegative, got {sigma_sq}")))
    }
}

fn finish(n: usize, p: usize, clean: Vec<f64>, sigma_sq: f64, rng: &mut ChaCha8Rng, name: &str) -> Result<(DataMatrix, DataMatrix)> {
    let noisy = add_noise(&clean, sigma_sq, rng);
    Ok((
        DataMatrix::new(n, p, noisy)?.with_label(name),
        DataMatrix::new(n, p, clean)?.with_label(format!("{name}_clean")),
    ))
}

#[allow(clippy::too_many_arguments)]
fn cluster_pair(
    x_spec: &GmmSpec,
    n2: usize,
    p: usize,
    tau: f64,
    sigma1_sq: f64,
    sigma2_sq: f64,
    seed: u64,
) -> Result<ClusterPair> {
    if p < 25 {
        return Err(Error::Shape(format!("the clustering settings need p ≥ 25, got {p}")));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tau must be nonnegative, got {tau}")));
    }
    check_sigma(sigma1_sq)?;
    check_sigma(sigma2_sq)?;
    let (xv, labels_x) = x_spec.sample(
        &mut stream(seed, streams::LABELS_X),
        &mut stream(seed, streams::SIGNAL_X),
    )?;
    let y_spec = GmmSpec::on_axes(n2, p, 6, 0, 15.0, 9.0)?;
    let (mut yv, labels_y) = y_spec.sample(
        &mut stream(seed, streams::LABELS_Y),
        &mut stream(seed, streams::SIGNAL_Y),
    )?;
    if tau > 0.0 {
        let shift = Uniform::new(-3.0 * tau, tau).map_err(|e| Error::Domain(e.to_string()))?;
        let mut rng = stream(seed, streams::PERTURB_Y);
        for row in yv.chunks_exact_mut(p) {
            for v in &mut row[5..25] {
                *v += shift.sample(&mut rng);
            }
        }
    }
    let (x, x_clean) = finish(x_spec.n, p, xv, sigma1_sq, &mut stream(seed, streams::NOISE_X), "x")?;
    let (y, y_clean) = finish(n2, p, yv, sigma2_sq, &mut stream(seed, streams::NOISE_Y), "y")?;
    Ok(ClusterPair {
        x,
        y,
        x_clean,
        y_clean,
        labels_x,
        labels_y,
    })
}

/// Six equal clusters at `15 e_j` with covariance `9 I` in both datasets;
/// y coordinates 6–25 get an extra `Uniform[−3τ, τ]` shift.
#[allow(clippy::too_many_arguments)]
pub fn sample_setting1(n1: usize, n2: usize, p: usize, tau: f64, sigma1_sq: f64, sigma2_sq: f64, seed: u64) -> Result<ClusterPair> {
    let spec = GmmSpec::on_axes(n1, p, 6, 0, 15.0, 9.0)?;
    cluster_pair(&spec, n2, p, tau, sigma1_sq, sigma2_sq, seed)
}

/// As [`sample_setting1`] but x holds only four clusters, centered at
/// `15 e_3 … 15 e_6`, matching y clusters 3–6.
pub fn sample_setting2(n1: usize, n2: usize, p: usize, tau: f64, seed: u64) -> Result<ClusterPair> {
    let spec = GmmSpec::on_axes(n1, p, 4, 2, 15.0, 9.0)?;
    cluster_pair(&spec, n2, p, tau, SETTING_SIGMA1_SQ, SETTING_SIGMA2_SQ, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusSpec {
    pub n: usize,
    pub p: usize,
    /// Major radius `2θ`, minor radius `0.8θ`.
    pub theta: f64,
}

/// A point on the torus with angles `(u, v)`.
pub fn torus_point(theta: f64, u: f64, v: f64) -> [f64; 3] {
    let ring = theta * (2.0 + 0.8 * u.cos());
    [ring * v.cos(), ring * v.sin(), 0.8 * theta * u.sin()]
}

fn torus_rows(n: usize, theta: f64, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * TAU;
            let v = rng.random::<f64>() * TAU;
            torus_point(theta, u, v)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct TorusPair {
    pub x: DataMatrix,
    pub y: DataMatrix,
    pub x_clean: DataMatrix,
    pub y_clean: DataMatrix,
}

/// Torus pair with `θ = 0.2 √n2`.
pub fn sample_torus_pair(n1: usize, n2: usize, p: usize, sigma1_sq: f64, sigma2_sq: f64, seed: u64) -> Result<TorusPair> {
    sample_torus_pair_with_theta(n1, n2, p, 0.2 * (n2 as f64).sqrt(), sigma1_sq, sigma2_sq, seed)
}

/// Both datasets lie on the same torus in the first three coordinates; y
/// also carries `Uniform[−8, 8]` values in coordinates 4–23.
pub fn sample_torus_pair_with_theta(
    n1: usize,
    n2: usize,
    p: usize,
    theta: f64,
    sigma1_sq: f64,
    sigma2_sq: f64,
    seed: u64,
) -> Result<TorusPair> {
    if p < 23 {
        return Err(Error::Shape(format!("the torus pair needs p ≥ 23, got {p}")));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::Domain(format!("theta must be positive, got {theta}")));
    }
    check_sigma(sigma1_sq)?;
    check_sigma(sigma2_sq)?;
    let mut xv = vec![0.0; n1 * p];
    for (row, pt) in xv.chunks_exact_mut(p).zip(torus_rows(n1, theta, &mut stream(seed, streams::SIGNAL_X))) {
        row[..3].copy_from_slice(&pt);
    }
    let mut yv = vec![0.0; n2 * p];
    let box_coord = Uniform::new(-8.0, 8.0).map_err(|e| Error::Domain(e.to_string()))?;
    let mut extra = stream(seed, streams::PERTURB_Y);
    for (row, pt) in yv.chunks_exact_mut(p).zip(torus_rows(n2, theta, &mut stream(seed, streams::SIGNAL_Y))) {
        row[..3].copy_from_slice(&pt);
        for v in &mut row[3..23] {
            *v = box_coord.sample(&mut extra);
        }
    }
    let (x, x_clean) = finish(n1, p, xv, sigma1_sq, &mut stream(seed, streams::NOISE_X), "x")?;
    let (y, y_clean) = finish(n2, p, yv, sigma2_sq, &mut stream(seed, streams::NOISE_Y), "y")?;
    Ok(TorusPair {
        x,
        y,
        x_clean,
        y_clean,
    })
}

/// Independent centered Gaussian entries with variances `sigma1_sq`,
/// `sigma2_sq`.
pub fn sample_pure_noise_pair(n1: usize, n2: usize, p: usize, sigma1_sq: f64, sigma2_sq: f64, seed: u64) -> Result<(DataMatrix, DataMatrix)> {
    check_sigma(sigma1_sq)?;
    check_sigma(sigma2_sq)?;
    let x = add_noise(&vec![0.0; n1 * p], sigma1_sq, &mut stream(seed, streams::NOISE_X));
    let y = add_noise(&vec![0.0; n2 * p], sigma2_sq, &mut stream(seed, streams::NOISE_Y));
    Ok((
        DataMatrix::new(n1, p, x)?.with_label("x"),
        DataMatrix::new(n2, p, y)?.with_label("y"),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeControl {
    KleinVsLine,
    TorusVsNoise,
}

impl std::str::FromStr for NegativeControl {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "klein_vs_line" => Ok(NegativeControl::KleinVsLine),
            "torus_vs_noise" => Ok(NegativeControl::TorusVsNoise),
            other => Err(Error::UnsupportedKind(other.to_string())),
        }
    }
}

/// Figure-8 immersion of the Klein bottle (radius 3) in the first three
/// coordinates, with `cos v` as a fourth coordinate. The fourth coordinate
/// separates the two sheets `v = 0` and `v = π` that the figure-8 glues
/// together, and all four coordinates are invariant under the bottle's
/// identification `(u, v) ~ (u + 2π, −v)`.
pub fn klein_point(u: f64, v: f64) -> [f64; 4] {
    const R: f64 = 3.0;
    let (hu_s, hu_c) = (0.5 * u).sin_cos();
    let w = hu_c * v.sin() - hu_s * (2.0 * v).sin();
    [
        (R + w) * u.cos(),
        (R + w) * u.sin(),
        hu_s * v.sin() + hu_c * (2.0 * v).sin(),
        v.cos(),
    ]
}

/// Negative-control pairs whose supports share no structure.
///
/// `KleinVsLine`: x uniform in the angles of [`klein_point`], y on the
/// segment `[−1, 1] × {0}³`. `TorusVsNoise`: x on the torus with
/// `θ = 0.2 √n1`, y standard Gaussian in three dimensions.
pub fn sample_negative_control(kind: NegativeControl, n1: usize, n2: usize, seed: u64) -> Result<(DataMatrix, DataMatrix)> {
    let mut sx = stream(seed, streams::SIGNAL_X);
    let mut sy = stream(seed, streams::SIGNAL_Y);
    let (p, xv, yv) = match kind {
        NegativeControl::KleinVsLine => {
            let xv: Vec<f64> = (0..n1)
                .flat_map(|_| {
                    let u = sx.random::<f64>() * TAU;
                    let v = sx.random::<f64>() * TAU;
                    klein_point(u, v)
                })
                .collect();
            let yv: Vec<f64> = (0..n2)
                .flat_map(|_| [sy.random::<f64>() * 2.0 - 1.0, 0.0, 0.0, 0.0])
                .collect();
            (4, xv, yv)
        }
        NegativeControl::TorusVsNoise => {
            let theta = 0.2 * (n1 as f64).sqrt();
            let xv: Vec<f64> = torus_rows(n1, theta, &mut sx).into_iter().flatten().collect();
            let yv = add_noise(&vec![0.0; n2 * 3], 1.0, &mut sy);
            (3, xv, yv)
        }
    };
    Ok((
        DataMatrix::new(n1, p, xv)?.with_label("x"),
        DataMatrix::new(n2, p, yv)?.with_label("y"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setting1_is_deterministic_and_validates_p() {
        let a = sample_setting1(30, 40, 25, 1.0, 0.25, 1.0, 9).unwrap();
        let b = sample_setting1(30, 40, 25, 1.0, 0.25, 1.0, 9).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.labels_y, b.labels_y);
        assert!(matches!(sample_setting1(30, 40, 10, 1.0, 0.25, 1.0, 9), Err(Error::Shape(_))));
    }

    #[test]
    fn tau_zero_leaves_perturbation_coordinates_alone() {
        let a = sample_setting1(50, 50, 30, 0.0, 0.25, 1.0, 3).unwrap();
        let b = sample_setting1(50, 50, 30, 2.0, 0.25, 1.0, 3).unwrap();
        assert_eq!(a.x, b.x);
        for i in 0..50 {
            assert_eq!(a.y_clean.row(i)[..5], b.y_clean.row(i)[..5]);
            assert_eq!(a.y_clean.row(i)[25..], b.y_clean.row(i)[25..]);
            assert!(b.y_clean.row(i)[5..25] != a.y_clean.row(i)[5..25]);
        }
    }

    #[test]
    fn setting2_label_counts() {
        let s = sample_setting2(200, 200, 25, 1.0, 5).unwrap();
        assert_eq!(*s.labels_x.iter().max().unwrap(), 3);
        assert_eq!(*s.labels_y.iter().max().unwrap(), 5);
    }

    #[test]
    fn torus_identity_and_zero_padding() {
        let t = sample_torus_pair(40, 50, 23, 0.16, 1.0, 1).unwrap();
        let theta = 0.2 * 50f64.sqrt();
        for c in [&t.x_clean, &t.y_clean] {
            for r in c.rows() {
                let lhs = ((r[0] * r[0] + r[1] * r[1]).sqrt() - 2.0 * theta).powi(2) + r[2] * r[2];
                assert!((lhs - (0.8 * theta).powi(2)).abs() < 1e-9);
            }
        }
        assert!(t.x_clean.rows().all(|r| r[3..].iter().all(|&v| v == 0.0)));
        let quiet = sample_torus_pair(40, 50, 23, 0.0, 0.0, 1).unwrap();
        assert_eq!(quiet.x, quiet.x_clean.clone().with_label("x"));
    }

    #[test]
    fn klein_identification_is_respected() {
        for &(u, v) in &[(0.3, 1.1), (2.0, -0.4), (5.5, 3.0)] {
            let a = klein_point(u, v);
            let b = klein_point(u + TAU, -v);
            for k in 0..4 {
                assert!((a[k] - b[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn negative_controls() {
        let (x, y) = sample_negative_control(NegativeControl::KleinVsLine, 20, 30, 2).unwrap();
        assert_eq!((x.p(), y.p()), (4, 4));
        assert!(y.rows().all(|r| r[1..].iter().all(|&v| v == 0.0) && r[0].abs() <= 1.0));
        assert!(matches!("moebius".parse::<NegativeControl>(), Err(Error::UnsupportedKind(_))));
        let again = sample_negative_control(NegativeControl::KleinVsLine, 20, 30, 2).unwrap();
        assert_eq!(again.0, x);
    }
}
