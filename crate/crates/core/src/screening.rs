//! Alignability screening by k-nearest-neighbor purity in the joint
//! eigenvector coordinates of the merged kernel.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::kernel::merged_kernel_with;
use crate::linalg::sym_eigen_desc;
use crate::neighbors::{knn, Points};

/// Default neighbor count.
pub const DEFAULT_K: usize = 30;

/// Default eigenvector indices (1-based) for the joint coordinates.
pub const DEFAULT_GAMMA: [usize; 3] = [2, 3, 4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignabilityReport {
    pub median_purity: f64,
    pub alignable: bool,
    pub k: usize,
    pub gamma: Vec<usize>,
    pub purities: Vec<f64>,
}

pub(crate) fn check_indices(gamma: &[usize], dim: usize) -> Result<()> {
    match gamma.iter().find(|&&g| g == 0 || g > dim) {
        Some(g) => Err(Error::Index(format!(
            "index {g} outside 1..={dim}"
        ))),
        None => Ok(()),
    }
}

/// Unit-norm eigenvectors of the symmetric `f` at the 1-based `gamma`
/// positions of the descending spectrum, one column per index.
pub fn joint_spectral_coords(f: MatRef<'_, f64>, gamma: &[usize]) -> Result<Mat<f64>> {
    if f.nrows() != f.ncols() {
        return Err(Error::Shape(format!(
            "kernel is {}×{}, expected square",
            f.nrows(),
            f.ncols()
        )));
    }
    check_indices(gamma, f.nrows())?;
    let (_, vecs) = sym_eigen_desc(f)?;
    Ok(Mat::from_fn(f.nrows(), gamma.len(), |i, j| vecs[(i, gamma[j] - 1)]))
}

/// Fraction of each point's `k` nearest neighbors sharing its label.
pub fn knn_purity(coords: MatRef<'_, f64>, labels: &[usize], k: usize) -> Result<Vec<f64>> {
    knn_purity_with(coords, labels, k, Exec::default())
}

pub fn knn_purity_with(coords: MatRef<'_, f64>, labels: &[usize], k: usize, exec: Exec) -> Result<Vec<f64>> {
    if labels.len() != coords.nrows() {
        return Err(Error::Shape(format!(
            "{} labels for {} points",
            labels.len(),
            coords.nrows()
        )));
    }
    let nn = knn(&Points::from_mat(coords), k, exec)?;
    Ok(nn
        .iter()
        .enumerate()
        .map(|(i, nb)| nb.iter().filter(|&&j| labels[j] == labels[i]).count() as f64 / k as f64)
        .collect())
}

/// Lower median of a nonempty slice.
pub(crate) fn lower_median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    s[(s.len() - 1) / 2]
}

pub fn screen_alignability(
    x: &DataMatrix,
    y: &DataMatrix,
    omega: f64,
    k: usize,
    gamma: &[usize],
) -> Result<AlignabilityReport> {
    screen_alignability_with(x, y, omega, k, gamma, Exec::default())
}

/// Labels x rows 0 and y rows 1, and stops (`alignable = false`) when the
/// lower median purity equals 1.
pub fn screen_alignability_with(
    x: &DataMatrix,
    y: &DataMatrix,
    omega: f64,
    k: usize,
    gamma: &[usize],
    exec: Exec,
) -> Result<AlignabilityReport> {
    let m = merged_kernel_with(x, y, omega, exec)?;
    let coords = joint_spectral_coords(m.f.as_ref(), gamma)?;
    let labels: Vec<usize> = (0..x.n() + y.n()).map(|i| usize::from(i >= x.n())).collect();
    let purities = knn_purity_with(coords.as_ref(), &labels, k, exec)?;
    let median_purity = lower_median(&purities);
    Ok(AlignabilityReport {
        median_purity,
        alignable: median_purity < 1.0,
        k,
        gamma: gamma.to_vec(),
        purities,
    })
}
