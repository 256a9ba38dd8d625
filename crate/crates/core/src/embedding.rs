//! Singular value decomposition of the scaled duo kernel, joint embeddings,
//! and out-of-sample extension of the empirical eigenfunctions.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::kernel::{Bandwidth, KernelMatrix};
use crate::linalg::{fix_column_sign, thin_svd};
use crate::neighbors::sq_dist;
use crate::screening::check_indices;

/// Singular values below this fraction of `s_1` count as zero.
pub const ZERO_SINGULAR_TOL: f64 = 1e-12;

/// Thin SVD of `K / √(n1·n2)`, `s` nonincreasing.
#[derive(Clone, Debug)]
pub struct ScaledSvd {
    pub s: Vec<f64>,
    pub u: Mat<f64>,
    pub v: Mat<f64>,
}

impl ScaledSvd {
    pub fn n1(&self) -> usize {
        self.u.nrows()
    }

    pub fn n2(&self) -> usize {
        self.v.nrows()
    }

    /// Number of singular triplets, `min(n1, n2)`.
    pub fn rank_bound(&self) -> usize {
        self.s.len()
    }

    /// Eigenvalues `μ_i = s_i²` shared by `K Kᵀ/(n1 n2)` and `Kᵀ K/(n1 n2)`.
    pub fn mu(&self) -> Vec<f64> {
        self.s.iter().map(|s| s * s).collect()
    }

    fn is_zero(&self, i: usize) -> bool {
        self.s[i] <= ZERO_SINGULAR_TOL * self.s[0]
    }
}

/// Decomposes the scaled kernel. Each left vector is sign-fixed so its
/// largest-magnitude entry is positive; the right vector follows it.
pub fn duo_svd(k: &KernelMatrix) -> Result<ScaledSvd> {
    let (n1, n2) = (k.n1(), k.n2());
    let scale = 1.0 / ((n1 as f64) * (n2 as f64)).sqrt();
    let a = Mat::from_fn(n1, n2, |i, j| k.k[(i, j)] * scale);
    let (s, mut u, mut v) = thin_svd(a.as_ref())?;
    for j in 0..s.len() {
        if fix_column_sign(&mut u, j) {
            for i in 0..n2 {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }
    Ok(ScaledSvd { s, u, v })
}

/// Scaled embeddings `√n1·U_Γ1·Λ_Γ1` and `√n2·V_Γ2·Λ_Γ2`.
#[derive(Clone, Debug)]
pub struct JointEmbedding {
    pub gamma1: Vec<usize>,
    pub gamma2: Vec<usize>,
    pub ex: Mat<f64>,
    pub ey: Mat<f64>,
    /// The full singular spectrum the embeddings were cut from.
    pub s: Vec<f64>,
}

/// Selects 1-based components `gamma1` for x and `gamma2` for y.
pub fn select_embeddings(svd: &ScaledSvd, gamma1: &[usize], gamma2: &[usize]) -> Result<JointEmbedding> {
    let m = svd.rank_bound();
    check_indices(gamma1, m)?;
    check_indices(gamma2, m)?;
    let (r1, r2) = ((svd.n1() as f64).sqrt(), (svd.n2() as f64).sqrt());
    let ex = Mat::from_fn(svd.n1(), gamma1.len(), |i, j| {
        let c = gamma1[j] - 1;
        r1 * svd.u[(i, c)] * svd.s[c]
    });
    let ey = Mat::from_fn(svd.n2(), gamma2.len(), |i, j| {
        let c = gamma2[j] - 1;
        r2 * svd.v[(i, c)] * svd.s[c]
    });
    Ok(JointEmbedding {
        gamma1: gamma1.to_vec(),
        gamma2: gamma2.to_vec(),
        ex,
        ey,
        s: svd.s.clone(),
    })
}

/// JSON sidecar describing an embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSidecar {
    pub gamma1: Vec<usize>,
    pub gamma2: Vec<usize>,
    pub singular_values: Vec<f64>,
    pub h: f64,
    pub omega: Option<f64>,
}

impl EmbeddingSidecar {
    pub fn new(e: &JointEmbedding, h: &Bandwidth) -> Self {
        EmbeddingSidecar {
            gamma1: e.gamma1.clone(),
            gamma2: e.gamma2.clone(),
            singular_values: e.s.clone(),
            h: h.h,
            omega: h.omega,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Functions on the x space, landmarked by y.
    Left,
    /// Functions on the y space, landmarked by x.
    Right,
}

/// Everything needed to evaluate the empirical eigenfunctions off-sample.
#[derive(Clone, Debug)]
pub struct ExtensionContext {
    landmarks_x: DataMatrix,
    landmarks_y: DataMatrix,
    h: Bandwidth,
    svd: ScaledSvd,
}

impl ExtensionContext {
    pub fn new(landmarks_x: DataMatrix, landmarks_y: DataMatrix, h: Bandwidth, svd: ScaledSvd) -> Result<Self> {
        if landmarks_x.p() != landmarks_y.p() {
            return Err(Error::Shape("landmark feature counts differ".into()));
        }
        if landmarks_x.n() != svd.n1() || landmarks_y.n() != svd.n2() {
            return Err(Error::Shape(format!(
                "landmarks are {}/{} samples but the decomposition is {}×{}",
                landmarks_x.n(),
                landmarks_y.n(),
                svd.n1(),
                svd.n2()
            )));
        }
        Ok(ExtensionContext {
            landmarks_x,
            landmarks_y,
            h,
            svd,
        })
    }

    pub fn svd(&self) -> &ScaledSvd {
        &self.svd
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.h
    }

    fn check_point(&self, a: &[f64]) -> Result<()> {
        if a.len() != self.landmarks_x.p() {
            return Err(Error::Shape(format!(
                "point has {} coordinates, landmarks have {}",
                a.len(),
                self.landmarks_x.p()
            )));
        }
        Ok(())
    }

    /// Landmarks averaged over by `side`, and the matching singular vectors.
    fn other(&self, side: Side) -> (&DataMatrix, &Mat<f64>) {
        match side {
            Side::Left => (&self.landmarks_y, &self.svd.v),
            Side::Right => (&self.landmarks_x, &self.svd.u),
        }
    }

    fn affinities(&self, landmarks: &DataMatrix, a: &[f64]) -> Vec<f64> {
        landmarks.rows().map(|z| (-sq_dist(a, z) / self.h.h).exp()).collect()
    }

    /// Convolved kernel through the other dataset:
    /// `(1/n_other) Σ_s k(a, z_s) k(z_s, b)`.
    pub fn khat(&self, side: Side, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_point(a)?;
        self.check_point(b)?;
        let (land, _) = self.other(side);
        let ka = self.affinities(land, a);
        let kb = self.affinities(land, b);
        Ok(ka.iter().zip(&kb).map(|(p, q)| p * q).sum::<f64>() / land.n() as f64)
    }

    /// Empirical eigenfunction `i` (1-based) at `point`.
    ///
    /// Evaluates `(1/(s_i √n_other)) Σ_s k(point, z_s) w_is` where `w` are the
    /// singular vectors of the other side; this equals the convolved-kernel
    /// form `(1/(s_i² √n)) Σ_j khat(point, t_j) u_ij` exactly in real
    /// arithmetic and costs one kernel row.
    pub fn extend(&self, side: Side, point: &[f64], i: usize) -> Result<f64> {
        Ok(self.extend_many(side, point, &[i])?[0])
    }

    /// Several eigenfunctions at one point, sharing the kernel row.
    pub fn extend_many(&self, side: Side, point: &[f64], components: &[usize]) -> Result<Vec<f64>> {
        self.check_point(point)?;
        check_indices(components, self.svd.rank_bound())?;
        if let Some(&c) = components.iter().find(|&&c| self.svd.is_zero(c - 1)) {
            return Err(Error::ZeroSingularValue { index: c });
        }
        let (land, w) = self.other(side);
        let kr = self.affinities(land, point);
        let root = (land.n() as f64).sqrt();
        Ok(components
            .iter()
            .map(|&c| {
                let col = c - 1;
                let acc: f64 = kr.iter().enumerate().map(|(s, k)| k * w[(s, col)]).sum();
                acc / (self.svd.s[col] * root)
            })
            .collect())
    }

    /// Eigenfunctions at every row of `points`: one row per point, one column
    /// per component.
    pub fn extend_rows(&self, side: Side, points: &DataMatrix, components: &[usize], exec: Exec) -> Result<Mat<f64>> {
        let rows = exec.map(points.n(), |r| self.extend_many(side, points.row(r), components));
        let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
        Ok(Mat::from_fn(points.n(), components.len(), |i, j| rows[i][j]))
    }
}
