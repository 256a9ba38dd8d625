//! End-to-end joint embedding with screening and optional noise check.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::{center_columns, fmt_f64, save_mat_csv, DataMatrix};
use crate::diagnostics::{
    calibrated_bulk_eigenvalues, detect_noise_regime, NoiseRegimeReport, DEFAULT_C1, DEFAULT_C2, DEFAULT_K_SKIP,
};
use crate::embedding::{duo_svd, select_embeddings, EmbeddingSidecar, JointEmbedding, ScaledSvd};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::kernel::{
    auto_omega_with, build_duo_kernel_with, check_omega, cross_sq_distances_with, select_bandwidth, Bandwidth,
    DEFAULT_OMEGA,
};
use crate::screening::{screen_alignability_with, AlignabilityReport, DEFAULT_GAMMA, DEFAULT_K};

/// A fixed percentile or resampling-based selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Omega {
    Value(f64),
    Auto,
}

impl Serialize for Omega {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Omega::Value(v) => s.serialize_f64(*v),
            Omega::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for Omega {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Omega::Value(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::str::FromStr for Omega {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Omega::Auto);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("omega must be a number in (0,1) or \"auto\", got {s:?}")))?;
        check_omega(v).map_err(|_| Error::Config(format!("omega must lie in (0,1), got {v}")))?;
        Ok(Omega::Value(v))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub omega: Omega,
    pub k_screen: usize,
    /// 1-based component indices for the x embedding.
    pub gamma1: Vec<usize>,
    /// 1-based component indices for the y embedding.
    pub gamma2: Vec<usize>,
    /// Eigenvector indices for the screening coordinates.
    pub screen_gamma: Vec<usize>,
    pub skip_screening: bool,
    pub noise_check: bool,
    pub k_skip: usize,
    pub c1: f64,
    pub c2: f64,
    /// Percentile grid and resample count when `omega` is `Auto`.
    pub auto_grid: Vec<f64>,
    pub auto_resamples: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            omega: Omega::Value(DEFAULT_OMEGA),
            k_screen: DEFAULT_K,
            gamma1: (2..=7).collect(),
            gamma2: (2..=7).collect(),
            screen_gamma: DEFAULT_GAMMA.to_vec(),
            skip_screening: false,
            noise_check: false,
            k_skip: DEFAULT_K_SKIP,
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
            auto_grid: vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
            auto_resamples: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Embedded,
    StoppedNotAlignable,
    StoppedNoiseDominated,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub status: RunStatus,
    pub alignability: Option<AlignabilityReport>,
    pub noise: Option<NoiseRegimeReport>,
    pub embedding: Option<JointEmbedding>,
    pub svd: Option<ScaledSvd>,
    pub bandwidth: Bandwidth,
}

fn ensure_centered(d: &DataMatrix) -> DataMatrix {
    if d.is_centered() {
        d.clone()
    } else {
        center_columns(d)
    }
}

fn check_gamma(name: &str, gamma: &[usize], m: usize) -> Result<()> {
    if let Some(g) = gamma.iter().find(|&&g| g == 0 || g > m) {
        return Err(Error::Config(format!(
            "{name} index {g} is outside 1..={m}"
        )));
    }
    Ok(())
}

/// Kernel, decomposition and embeddings for an already-centered pair.
pub fn embed_pair(
    x: &DataMatrix,
    y: &DataMatrix,
    h: Bandwidth,
    gamma1: &[usize],
    gamma2: &[usize],
    exec: Exec,
) -> Result<(ScaledSvd, JointEmbedding)> {
    let m = x.n().min(y.n());
    check_gamma("gamma1", gamma1, m)?;
    check_gamma("gamma2", gamma2, m)?;
    let d = cross_sq_distances_with(x, y, exec)?;
    let k = build_duo_kernel_with(&d, h, exec)?;
    let svd = duo_svd(&k)?;
    let e = select_embeddings(&svd, gamma1, gamma2)?;
    Ok((svd, e))
}

pub fn run(x: &DataMatrix, y: &DataMatrix, cfg: &RunConfig) -> Result<RunResult> {
    run_with(x, y, cfg, Exec::default())
}

/// Screens, optionally checks the noise regime, then embeds. Each dataset
/// is centered on its own if it is not flagged as centered.
pub fn run_with(x: &DataMatrix, y: &DataMatrix, cfg: &RunConfig, exec: Exec) -> Result<RunResult> {
    if x.p() != y.p() {
        return Err(Error::Shape(format!("feature counts differ: {} vs {}", x.p(), y.p())));
    }
    let m = x.n().min(y.n());
    check_gamma("gamma1", &cfg.gamma1, m)?;
    check_gamma("gamma2", &cfg.gamma2, m)?;
    let x = ensure_centered(x);
    let y = ensure_centered(y);

    let d = cross_sq_distances_with(&x, &y, exec)?;
    let bandwidth = match cfg.omega {
        Omega::Value(w) => select_bandwidth(&d, w)?,
        Omega::Auto => {
            let r = cfg.gamma1.iter().chain(&cfg.gamma2).copied().max().unwrap_or(1);
            auto_omega_with(&x, &y, &cfg.auto_grid, r, cfg.auto_resamples, cfg.seed, exec)?
        }
    };
    let omega = bandwidth.omega.unwrap_or(DEFAULT_OMEGA);

    let mut result = RunResult {
        status: RunStatus::Embedded,
        alignability: None,
        noise: None,
        embedding: None,
        svd: None,
        bandwidth,
    };

    if !cfg.skip_screening {
        let report = screen_alignability_with(&x, &y, omega, cfg.k_screen, &cfg.screen_gamma, exec)?;
        let alignable = report.alignable;
        result.alignability = Some(report);
        if !alignable {
            result.status = RunStatus::StoppedNotAlignable;
            return Ok(result);
        }
    }

    let k = build_duo_kernel_with(&d, bandwidth, exec)?;
    if cfg.noise_check {
        let w = calibrated_bulk_eigenvalues(&x, &y, &k)?;
        let report = detect_noise_regime(&w, cfg.k_skip, cfg.c1, cfg.c2)?;
        let noisy = report.noise_dominated;
        result.noise = Some(report);
        if noisy {
            result.status = RunStatus::StoppedNoiseDominated;
            return Ok(result);
        }
    }

    let svd = duo_svd(&k)?;
    result.embedding = Some(select_embeddings(&svd, &cfg.gamma1, &cfg.gamma2)?);
    result.svd = Some(svd);
    Ok(result)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

#[derive(Serialize)]
struct StatusFile<'a> {
    status: RunStatus,
    bandwidth: &'a Bandwidth,
}

/// Writes the run artifacts into `dir`, creating it if needed.
pub fn write_artifacts(dir: impl AsRef<Path>, cfg: &RunConfig, result: &RunResult) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(dir, "config.json", cfg)?;
    write_json(
        dir,
        "status.json",
        &StatusFile {
            status: result.status,
            bandwidth: &result.bandwidth,
        },
    )?;
    write_json(dir, "bandwidth.json", &result.bandwidth)?;
    if let Some(a) = &result.alignability {
        write_json(dir, "alignability.json", a)?;
    }
    if let Some(n) = &result.noise {
        write_json(dir, "noise.json", n)?;
    }
    if let Some(e) = &result.embedding {
        save_mat_csv(dir.join("embedding_x.csv"), e.ex.as_ref())?;
        save_mat_csv(dir.join("embedding_y.csv"), e.ey.as_ref())?;
        let path = dir.join("singular_values.csv");
        let text: String = e.s.iter().map(|s| fmt_f64(*s) + "\n").collect();
        fs::write(&path, text).map_err(|err| Error::io(&path, err))?;
        write_json(dir, "embedding.json", &EmbeddingSidecar::new(e, &result.bandwidth))?;
    }
    Ok(())
}
