use std::path::Path;

use chirrup_core::ost::{largest_supported_k, ost_monte_carlo, ost_predict_k};
use chirrup_core::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::spec::ExperimentSpec;
use crate::{CliError, Result};

const MC_DOMAIN: u64 = 0x6f73_742d_6d63;

/// One point of an OST predictor curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRow {
    pub mode: String,
    pub n: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub epsilon: f64,
    pub convention: String,
    pub ebn0_db: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    /// Empty when the solver failed; see `status`.
    pub predicted_k: Option<f64>,
    pub status: String,
}

/// Per-user OST error at one (Q, K) from explicit Gaussian codebooks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRow {
    pub mode: String,
    pub n: usize,
    pub codebook_size: usize,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub ebn0_db: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub trials: usize,
    pub per_user_error: f64,
    pub predicted_k: f64,
    pub empirical_k: Option<usize>,
    pub convention: String,
    pub seed: u64,
}

/// `Q` for which `10 log10(n Q / 2B)` equals `db`.
pub fn power_for_ebn0(db: f64, n: usize, b: f64) -> f64 {
    2.0 * b * 10f64.powf(db / 10.0) / n as f64
}

pub fn ebn0_db(q: f64, n: usize, b: f64) -> f64 {
    10.0 * (n as f64 * q / (2.0 * b)).log10()
}

/// Predictor curves, one per message length in `ost.b`. A failed solve is
/// reported in its row rather than aborting the curve.
pub fn predict(spec: &ExperimentSpec) -> Result<Vec<PredictRow>> {
    let ost = spec.ost()?;
    ost.validate()?;
    let mut rows = Vec::new();
    for &b in &ost.b {
        for &db in &ost.ebn0_db {
            let q = power_for_ebn0(db, ost.n, b as f64);
            let (predicted_k, status) = match ost_predict_k(ost.n, b as f64, q, ost.epsilon, ost.convention) {
                Ok(k) => (Some(k), "ok".to_string()),
                Err(e) => (None, e.to_string()),
            };
            rows.push(PredictRow {
                mode: "ost-predict".into(),
                n: ost.n,
                b,
                epsilon: ost.epsilon,
                convention: ost.convention.to_string(),
                ebn0_db: db,
                q,
                predicted_k,
                status,
            });
        }
    }
    Ok(rows)
}

/// Monte-Carlo OST error over the K list at every Eb/N0 in `ost.ebn0_db`,
/// with `B = log2(codebook_size)`.
pub fn monte_carlo(spec: &ExperimentSpec) -> Result<Vec<MonteCarloRow>> {
    let ost = spec.ost()?;
    ost.validate()?;
    let size = ost
        .codebook_size
        .ok_or_else(|| CliError::Spec("ost-mc needs ost.codebook_size".into()))?;
    let ks = spec.k_values();
    if spec.trials == 0 || ks.contains(&0) || ks.iter().any(|&k| k > size) {
        return Err(CliError::Spec("need trials > 0 and 0 < K <= codebook_size".into()));
    }
    let b = (size as f64).log2();
    let mut rows = Vec::new();
    for (i, &db) in ost.ebn0_db.iter().enumerate() {
        let q = power_for_ebn0(db, ost.n, b);
        let seed = derive_seed(spec.seed, &[MC_DOMAIN, i as u64]);
        let errors = ost_monte_carlo(ost.n, size, q, &ks, spec.trials, seed)?;
        let predicted = ost_predict_k(ost.n, b, q, ost.epsilon, ost.convention)?;
        let empirical = largest_supported_k(&ks, &errors, ost.epsilon);
        for (&k, &e) in ks.iter().zip(&errors) {
            rows.push(MonteCarloRow {
                mode: "ost-mc".into(),
                n: ost.n,
                codebook_size: size,
                b,
                q,
                ebn0_db: db,
                k,
                trials: spec.trials,
                per_user_error: e,
                predicted_k: predicted,
                empirical_k: empirical,
                convention: ost.convention.to_string(),
                seed,
            });
        }
    }
    Ok(rows)
}

/// Writes rows (with header) to `out` and a JSON sidecar next to it.
pub fn write_rows<T: Serialize>(out: &Path, rows: &[T], header: &[&str], spec: &ExperimentSpec, run_mode: &str) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(out)?;
    writer.write_record(header)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| CliError::Io(out.to_path_buf(), e))?;
    let sidecar = serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "run_mode": run_mode,
        "master_seed": spec.seed,
        "ost_variance_convention": spec.ost.as_ref().map(|o| o.convention).unwrap_or_default().to_string(),
        "spec": spec,
    });
    let path = crate::run::sidecar_path(out);
    std::fs::write(&path, serde_json::to_string_pretty(&sidecar)? + "\n").map_err(|e| CliError::Io(path, e))
}

pub const PREDICT_HEADER: [&str; 9] = ["mode", "n", "B", "epsilon", "convention", "ebn0_db", "Q", "predicted_k", "status"];
pub const MC_HEADER: [&str; 13] = [
    "mode",
    "n",
    "codebook_size",
    "B",
    "Q",
    "ebn0_db",
    "K",
    "trials",
    "per_user_error",
    "predicted_k",
    "empirical_k",
    "convention",
    "seed",
];
