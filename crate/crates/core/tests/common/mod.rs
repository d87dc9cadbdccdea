#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use phasemin::altmin::{raw_coords, step_normalized, step_raw};
use phasemin::complex::{CMatrix, C64};
use phasemin::rng::{child_rng, complex_normal_vec, rng_from_seed};
use phasemin::sensing::{make_instance, random_unit_iterate, sample_complex_gaussian, SensingInstance, SignalMode};

/// The unreduced model behind an instance: the Gaussian matrix `A` drawn
/// from the same seed stream, and the signal `z` with `A z = Pi z_reduced`.
pub struct RawModel {
    pub a: CMatrix,
    pub z: Vec<C64>,
    pub y: Vec<f64>,
}

pub fn raw_model(inst: &SensingInstance) -> RawModel {
    let mut rng = rng_from_seed(inst.seed());
    let a = sample_complex_gaussian(&mut rng, inst.m(), inst.n(), 1.0).unwrap();
    let z = raw_coords(&a, inst.lifted_truth()).unwrap();
    let back = a.mul_vec(&z).unwrap();
    let defect = back
        .iter()
        .zip(inst.lifted_truth())
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max);
    assert!(defect < 1e-10, "raw draw does not match instance basis ({defect:e})");
    RawModel {
        a,
        z,
        y: inst.y().to_vec(),
    }
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

pub fn unit(v: &[C64]) -> Vec<C64> {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|c| c / norm).collect()
}

pub fn phasemin_bin(args: &[&str], out: &Path, workers: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_phasemin"));
    cmd.args(args).arg("--out").arg(out);
    match workers {
        Some(w) => cmd.env("PHASEMIN_WORKERS", w.to_string()),
        None => cmd.env_remove("PHASEMIN_WORKERS"),
    };
    cmd.output().expect("failed to launch phasemin")
}

/// All regular files directly under `dir`, sorted by name.
pub fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

pub const EQUIVALENCE_SIZES: [(usize, usize); 4] = [(4, 32), (8, 64), (16, 128), (16, 256)];

/// Largest deviation between the normalized raw iterate and the reduced
/// iterate over `steps` iterations, across `instances` instances.
pub fn raw_vs_normalized_deviation(instances: u64, steps: usize) -> f64 {
    let mut worst = 0.0f64;
    for s in 0..instances {
        let (n, m) = EQUIVALENCE_SIZES[s as usize % EQUIVALENCE_SIZES.len()];
        let inst = make_instance(1000 + s, n, m, SignalMode::RandomUnit).unwrap();
        let raw = raw_model(&inst);
        let mut w = random_unit_iterate(&mut child_rng(s, &[1]), &inst);
        let mut x = raw_coords(&raw.a, &w).unwrap();
        for _ in 0..steps {
            let r = step_raw(&raw.a, &raw.y, &x).unwrap();
            w = step_normalized(&inst, &w).unwrap();
            worst = worst.max(max_abs_diff(&unit(&r.w), &w));
            x = r.x;
        }
    }
    worst
}

/// Largest deviation between raw trajectories for `A` and `A D` with a
/// generic invertible `D`; coordinates are compared after mapping by `D`.
pub fn column_transform_deviation(instances: u64, steps: usize) -> f64 {
    let mut worst = 0.0f64;
    for s in 0..instances {
        let (n, m) = EQUIVALENCE_SIZES[s as usize % EQUIVALENCE_SIZES.len()];
        let inst = make_instance(2000 + s, n, m, SignalMode::RandomUnit).unwrap();
        let raw = raw_model(&inst);
        let mut rng = child_rng(s, &[2]);
        let mut entries = complex_normal_vec(&mut rng, n * n, 0.25 / n as f64);
        for j in 0..n {
            entries[j * n + j] += 1.0;
        }
        let d = CMatrix::from_col_major(n, n, entries).unwrap();
        let ad = raw.a.mul(&d).unwrap();
        let w1 = random_unit_iterate(&mut child_rng(s, &[1]), &inst);
        let mut x = raw_coords(&raw.a, &w1).unwrap();
        let mut x_t = raw_coords(&ad, &w1).unwrap();
        for _ in 0..steps {
            let r = step_raw(&raw.a, &raw.y, &x).unwrap();
            let r_t = step_raw(&ad, &raw.y, &x_t).unwrap();
            worst = worst.max(max_abs_diff(&r.w, &r_t.w));
            let dx = d.mul_vec(&r_t.x).unwrap();
            let scale = 1.0 + r.x.iter().map(|c| c.norm()).fold(0.0, f64::max);
            worst = worst.max(max_abs_diff(&dx, &r.x) / scale);
            x = r.x;
            x_t = r_t.x;
        }
    }
    worst
}

/// Small versions of every command, used for byte-level reproducibility.
pub fn reproducibility_cases(lemma_config: &Path) -> Vec<Vec<String>> {
    let cfg = lemma_config.to_string_lossy().into_owned();
    let v = |a: &[&str]| a.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    vec![
        v(&["run", "--n", "8", "--m", "96", "--seed", "5", "--instrument"]),
        v(&["phase-diagram", "--n", "4,8", "--ratios", "2,8", "--trials", "6", "--seed", "3"]),
        v(&["fg-curve", "--samples", "10000", "--grid-step", "0.01", "--seed", "1"]),
        v(&["lemma-check", "--config", &cfg, "--seed", "2"]),
        v(&["dynamics", "--instrument", "--n", "8,16", "--ratios", "16", "--trials", "3", "--seed", "4"]),
    ]
}

pub const SMALL_LEMMA_PLAN: &str = r#"{"probes": {
    "deterministic_trials": 100000, "unit_trials": 2000, "small_ball_trials": 20000,
    "projection_trials": 1000, "norm_trials": 2000, "order_trials": 200,
    "perturbation_trials": 20}}"#;

/// Runs every case four times (1, 1 and 4 workers, then the default) and
/// returns a description of the first difference, if any.
pub fn reproducibility_mismatch(scratch: &Path) -> Option<String> {
    let config = scratch.join("lemma.json");
    std::fs::write(&config, SMALL_LEMMA_PLAN).unwrap();
    for args in reproducibility_cases(&config) {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let mut runs = Vec::new();
        for (i, workers) in [Some(1), Some(1), Some(4), None].into_iter().enumerate() {
            let out = scratch.join(format!("{}-{i}", args[0]));
            let res = phasemin_bin(&args, &out, workers);
            let code = res.status.code();
            if !matches!(code, Some(0 | 1)) {
                return Some(format!("{args:?} failed: {}", String::from_utf8_lossy(&res.stderr)));
            }
            runs.push((code, res.stdout, dir_contents(&out)));
        }
        if runs[0].2.is_empty() {
            return Some(format!("{args:?} wrote nothing"));
        }
        if runs[1..].iter().any(|r| *r != runs[0]) {
            return Some(format!("{args:?}: outputs differ between runs"));
        }
    }
    None
}
