use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use duo_embed::data::{fmt_f64, load_labels, save_labels};
use duo_embed::diagnostics::{calibrated_bulk_eigenvalues, detect_noise_regime};
use duo_embed::evaluation::{jaccard_concordance, overall_rand, rand_index, MetricReport};
use duo_embed::experiments::{
    clustering_rep, manifold_rep, sort_records, ClusteringDesign, ManifoldDesign, Record,
};
use duo_embed::kernel::duo_kernel;
use duo_embed::pipeline::{run, write_artifacts, RunConfig, RunStatus};
use duo_embed::screening::screen_alignability;
use duo_embed::simulation::{
    sample_negative_control, sample_pure_noise_pair, sample_setting1, sample_setting2, sample_torus_pair,
    NegativeControl, SETTING_SIGMA1_SQ, SETTING_SIGMA2_SQ, TORUS_SIGMA1_SQ, TORUS_SIGMA2_SQ,
};
use duo_embed::{center_columns, load_csv, save_csv, DataMatrix, Exec, LabeledPartition};
use rayon::prelude::*;
use serde_json::json;

use crate::args::{
    BenchArgs, ControlKind, EmbedArgs, EvaluateArgs, MetricKind, NoiseArgs, PairArgs, ScreenArgs, SettingKind,
    SimulateArgs, TaskKind,
};

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_NOT_ALIGNABLE: u8 = 2;
pub const EXIT_NOISE_DOMINATED: u8 = 3;

fn load_pair(p: &PairArgs) -> Result<(DataMatrix, DataMatrix)> {
    let x = load_csv(&p.x, p.header)?;
    let y = load_csv(&p.y, p.header)?;
    Ok((x, y))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, &text).map_err(|e| duo_embed::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| duo_embed::Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn report(value: &impl serde::Serialize, out: Option<&Path>) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    if let Some(path) = out {
        write_json(path, value)?;
    }
    Ok(())
}

pub fn embed(a: EmbedArgs) -> Result<u8> {
    let (x, y) = load_pair(&a.pair)?;
    let cfg = RunConfig {
        omega: a.omega,
        k_screen: a.k_screen,
        gamma1: a.gamma1.0,
        gamma2: a.gamma2.0,
        screen_gamma: a.screen_gamma.0,
        skip_screening: a.skip_screening,
        noise_check: a.noise_check,
        k_skip: a.noise.k_skip,
        c1: a.noise.c1,
        c2: a.noise.c2,
        seed: a.seed,
        ..RunConfig::default()
    };
    let result = run(&x, &y, &cfg)?;
    write_artifacts(&a.out, &cfg, &result)?;
    let code = match result.status {
        RunStatus::Embedded => EXIT_OK,
        RunStatus::StoppedNotAlignable => EXIT_NOT_ALIGNABLE,
        RunStatus::StoppedNoiseDominated => EXIT_NOISE_DOMINATED,
    };
    eprintln!("status: {}", serde_json::to_value(result.status)?.as_str().unwrap_or_default());
    Ok(code)
}

pub fn screen(a: ScreenArgs) -> Result<u8> {
    let (x, y) = load_pair(&a.pair)?;
    let r = screen_alignability(&center_columns(&x), &center_columns(&y), a.omega, a.k, &a.gamma.0)?;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
    }
    report(&r, a.out.as_ref().map(|d| d.join("alignability.json")).as_deref())?;
    Ok(if r.alignable { EXIT_OK } else { EXIT_NOT_ALIGNABLE })
}

pub fn noise_check(a: NoiseArgs) -> Result<u8> {
    let (x, y) = load_pair(&a.pair)?;
    let (x, y) = (center_columns(&x), center_columns(&y));
    let (_, k) = duo_kernel(&x, &y, a.omega, Exec::default())?;
    let w = calibrated_bulk_eigenvalues(&x, &y, &k)?;
    let r = detect_noise_regime(&w, a.noise.k_skip, a.noise.c1, a.noise.c2)?;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
    }
    report(&r, a.out.as_ref().map(|d| d.join("noise.json")).as_deref())?;
    Ok(if r.noise_dominated { EXIT_NOISE_DOMINATED } else { EXIT_OK })
}

pub fn simulate(a: SimulateArgs) -> Result<u8> {
    create_dir(&a.out)?;
    let (s1_default, s2_default) = match a.setting {
        SettingKind::Torus => (TORUS_SIGMA1_SQ, TORUS_SIGMA2_SQ),
        _ => (SETTING_SIGMA1_SQ, SETTING_SIGMA2_SQ),
    };
    let s1 = a.sigma1_sq.unwrap_or(s1_default);
    let s2 = a.sigma2_sq.unwrap_or(s2_default);
    let mut meta = json!({
        "setting": format!("{:?}", a.setting).to_lowercase(),
        "n1": a.n1,
        "n2": a.n2,
        "seed": a.seed,
    });
    let (x, y) = match a.setting {
        SettingKind::One | SettingKind::Two => {
            let pair = if a.setting == SettingKind::One {
                sample_setting1(a.n1, a.n2, a.p, a.tau, s1, s2, a.seed)?
            } else {
                sample_setting2(a.n1, a.n2, a.p, a.tau, a.seed)?
            };
            let (s1, s2) = if a.setting == SettingKind::One { (s1, s2) } else { (SETTING_SIGMA1_SQ, SETTING_SIGMA2_SQ) };
            save_labels(a.out.join("labels_x.csv"), &pair.labels_x)?;
            save_labels(a.out.join("labels_y.csv"), &pair.labels_y)?;
            save_csv(a.out.join("x_clean.csv"), &pair.x_clean)?;
            save_csv(a.out.join("y_clean.csv"), &pair.y_clean)?;
            meta["setting"] = json!(if a.setting == SettingKind::One { "1" } else { "2" });
            meta["p"] = json!(a.p);
            meta["tau"] = json!(a.tau);
            meta["sigma1_sq"] = json!(s1);
            meta["sigma2_sq"] = json!(s2);
            (pair.x, pair.y)
        }
        SettingKind::Torus => {
            let t = sample_torus_pair(a.n1, a.n2, a.p, s1, s2, a.seed)?;
            save_csv(a.out.join("x_clean.csv"), &t.x_clean)?;
            save_csv(a.out.join("y_clean.csv"), &t.y_clean)?;
            meta["p"] = json!(a.p);
            meta["sigma1_sq"] = json!(s1);
            meta["sigma2_sq"] = json!(s2);
            (t.x, t.y)
        }
        SettingKind::Noise => {
            meta["p"] = json!(a.p);
            meta["sigma1_sq"] = json!(s1);
            meta["sigma2_sq"] = json!(s2);
            sample_pure_noise_pair(a.n1, a.n2, a.p, s1, s2, a.seed)?
        }
        SettingKind::Negcontrol => {
            let kind = match a.control {
                ControlKind::KleinVsLine => NegativeControl::KleinVsLine,
                ControlKind::TorusVsNoise => NegativeControl::TorusVsNoise,
            };
            let (x, y) = sample_negative_control(kind, a.n1, a.n2, a.seed)?;
            meta["control"] = serde_json::to_value(kind)?;
            meta["p"] = json!(x.p());
            (x, y)
        }
    };
    save_csv(a.out.join("x.csv"), &x)?;
    save_csv(a.out.join("y.csv"), &y)?;
    write_json(&a.out.join("meta.json"), &meta)?;
    Ok(EXIT_OK)
}

fn labels(path: &Path) -> Result<LabeledPartition> {
    Ok(LabeledPartition::from_labels(&load_labels(path, false)?))
}

pub fn evaluate(a: EvaluateArgs) -> Result<u8> {
    let r = match a.metric {
        MetricKind::Rand => {
            let est_x = labels(a.est_x.as_deref().context("--est-x is required")?)?;
            let truth_x = labels(a.truth_x.as_deref().context("--truth-x is required")?)?;
            match (&a.est_y, &a.truth_y) {
                (Some(ey), Some(ty)) => overall_rand(&est_x, &truth_x, &labels(ey)?, &labels(ty)?)?,
                _ => MetricReport {
                    name: "rand_index".into(),
                    value: rand_index(&est_x, &truth_x)?,
                    per_dataset: None,
                },
            }
        }
        MetricKind::Jaccard => {
            let emb = load_csv(a.embedding.as_deref().context("--embedding is required")?, false)?;
            let clean = load_csv(a.clean.as_deref().context("--clean is required")?, false)?;
            MetricReport {
                name: "jaccard".into(),
                value: jaccard_concordance(emb.to_mat().as_ref(), &clean, a.k)?,
                per_dataset: None,
            }
        }
    };
    report(&r, a.out.as_deref())?;
    Ok(EXIT_OK)
}

pub fn bench(a: BenchArgs) -> Result<u8> {
    create_dir(&a.out)?;
    let reps = a.reps as usize;
    let jobs: Vec<(f64, usize)>;
    let mut records: Vec<Record> = match a.task {
        TaskKind::Clustering => {
            let design = ClusteringDesign {
                setting: a.setting,
                n1: a.n,
                n2: a.n,
                p: a.p,
                ..ClusteringDesign::default()
            };
            let grid = a.tau_grid.clone().unwrap_or_else(|| vec![0.0, 1.0, 2.0, 3.0]);
            jobs = grid.iter().flat_map(|&t| (0..reps).map(move |r| (t, r))).collect();
            let runs: Vec<_> = jobs
                .par_iter()
                .map(|&(tau, rep)| clustering_rep(&design, tau, rep, a.seed, Exec::Sequential))
                .collect();
            runs.into_iter().collect::<Result<Vec<_>, _>>()?.concat()
        }
        TaskKind::Manifold => {
            let design = ManifoldDesign {
                p: a.p,
                ..ManifoldDesign::default()
            };
            let grid = a.tau_grid.clone().unwrap_or_else(|| vec![a.n as f64]);
            if let Some(bad) = grid.iter().find(|n| !(n.fract() == 0.0 && **n >= 2.0)) {
                anyhow::bail!(crate::UsageError(format!("manifold grid values are sample sizes; got {bad}")));
            }
            jobs = grid.iter().flat_map(|&n| (0..reps).map(move |r| (n, r))).collect();
            let runs: Vec<_> = jobs
                .par_iter()
                .map(|&(n, rep)| manifold_rep(&design, n as usize, rep, a.seed, Exec::Sequential))
                .collect();
            runs.into_iter().collect::<Result<Vec<_>, _>>()?.concat()
        }
    };
    sort_records(&mut records);
    let mut text = String::from("method,tau_or_n,rep,metric,value\n");
    for r in &records {
        text.push_str(&format!("{},{},{},{},{}\n", r.method, r.tau_or_n, r.rep, r.metric, fmt_f64(r.value)));
    }
    let path = a.out.join("results.csv");
    fs::write(&path, text).map_err(|e| duo_embed::Error::Io { path, source: e })?;
    eprintln!("{} rows from {} runs", records.len(), jobs.len());
    Ok(EXIT_OK)
}
