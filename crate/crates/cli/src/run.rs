use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chirrup_core::channel::{evaluate_point, find_min_ebn0, power_for_ebn0, real_equivalent_len};
use chirrup_core::rng::derive_seed;
use chirrup_core::{CodeConfig, CodebookMode, ExperimentResult};
use serde::Serialize;

use crate::spec::{Ebn0Plan, ExperimentSpec};
use crate::{CliError, Result};

pub const CSV_HEADER: &str =
    "mode,m,p,r,B,K,Q,ebn0_db,trials,per_user_error,time_decode_mean_s,time_decode_median_s,seed";

const POINT_DOMAIN: u64 = 0x0070_6f69_6e74;

/// Identifies a row independently of its measured values, for resuming.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct RowKey {
    mode: String,
    m: usize,
    p: usize,
    r: usize,
    b: usize,
    k: usize,
    trials: usize,
    seed: u64,
    /// Requested Eb/N0 in micro-dB, or `None` for a bisection row.
    ebn0: Option<i64>,
}

fn micro_db(db: f64) -> i64 {
    (db * 1e6).round() as i64
}

impl RowKey {
    fn of_row(row: &ExperimentResult, bisect: bool) -> Self {
        Self {
            mode: row.mode.clone(),
            m: row.m,
            p: row.p,
            r: row.r,
            b: row.b,
            k: row.k,
            trials: row.trials,
            seed: row.seed,
            ebn0: (!bisect).then(|| micro_db(row.ebn0_db)),
        }
    }
}

/// Seed shared by every Eb/N0 probe of one (configuration, K) point, so that
/// probes see the same messages and noise.
pub fn point_seed(master: u64, config: &CodeConfig, k: usize) -> u64 {
    let mode = match config.mode {
        CodebookMode::Complex => 0,
        CodebookMode::Real => 1,
    };
    let mut path = vec![POINT_DOMAIN, mode, config.m as u64, config.p as u64, config.r as u64, k as u64];
    path.extend(config.parity_bits.iter().map(|&l| l as u64));
    derive_seed(master, &path)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub written: usize,
    pub skipped: usize,
}

#[derive(Serialize)]
struct PointMeta {
    fingerprint: String,
    #[serde(rename = "B")]
    b: usize,
    n: usize,
    real_equivalent_n: usize,
    k: usize,
    seed: u64,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    run_mode: &'static str,
    master_seed: u64,
    ebn0_definition: &'static str,
    ost_variance_convention: String,
    spec: &'a ExperimentSpec,
    points: Vec<PointMeta>,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".json");
    out.with_file_name(name)
}

fn write_sidecar(out: &Path, sidecar: &impl Serialize) -> Result<()> {
    let path = sidecar_path(out);
    let text = serde_json::to_string_pretty(sidecar)?;
    std::fs::write(&path, text + "\n").map_err(|e| CliError::Io(path, e))
}

/// Opens `out` for appending rows. With `resume`, complete rows already in
/// the file are kept (a torn final line is dropped) and returned; otherwise
/// the file is truncated. The header is written to an empty file.
fn open_rows(out: &Path, resume: bool) -> Result<(File, Vec<ExperimentResult>)> {
    let io = |e| CliError::Io(out.to_path_buf(), e);
    let mut file = OpenOptions::new()
        .read(true)
        .write(true)
        .create(true)
        .truncate(!resume)
        .open(out)
        .map_err(io)?;
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(io)?;
    let complete = text.rfind('\n').map_or(0, |i| i + 1);
    let mut rows = Vec::new();
    if complete > 0 {
        let body = &text[..complete];
        if !body.starts_with(CSV_HEADER) {
            return Err(CliError::Spec(format!("{} has an unexpected header", out.display())));
        }
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        for row in reader.deserialize() {
            rows.push(row?);
        }
    }
    file.set_len(complete as u64).map_err(io)?;
    file.seek(SeekFrom::End(0)).map_err(io)?;
    if complete == 0 {
        writeln!(file, "{CSV_HEADER}").map_err(io)?;
        file.flush().map_err(io)?;
    }
    Ok((file, rows))
}

fn append_row(file: &mut File, out: &Path, row: &ExperimentResult) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    writer.serialize(row)?;
    let bytes = writer.into_inner().map_err(|e| CliError::Io(out.to_path_buf(), e.into_error()))?;
    file.write_all(&bytes).map_err(|e| CliError::Io(out.to_path_buf(), e))?;
    file.flush().map_err(|e| CliError::Io(out.to_path_buf(), e))
}

/// Runs the CHIRRUP sweep described by `spec`, appending one CSV row per
/// evaluated point to `out` and writing `<out>.json` alongside.
///
/// Rows are flushed as they are produced. With `resume`, points whose rows
/// are already present are skipped, so an interrupted run picks up where it
/// stopped and ends with the same row set.
pub fn run(spec: &ExperimentSpec, out: &Path, resume: bool) -> Result<RunSummary> {
    spec.validate_chirrup()?;
    let grid = spec.grid()?;
    let ks = spec.k_values();
    let bisect = spec.ebn0_db.is_auto();

    let points = grid
        .iter()
        .flat_map(|c| {
            ks.iter().map(move |&k| PointMeta {
                fingerprint: c.fingerprint(),
                b: c.message_bits(),
                n: c.total_len(),
                real_equivalent_n: real_equivalent_len(c),
                k,
                seed: point_seed(spec.seed, c, k),
            })
        })
        .collect();
    write_sidecar(
        out,
        &Sidecar {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            run_mode: "chirrup",
            master_seed: spec.seed,
            ebn0_definition: "10*log10(n*Q/(2*B)), n = 2^(m+p+r) channel uses",
            ost_variance_convention: spec
                .ost
                .as_ref()
                .map(|o| o.convention)
                .unwrap_or_default()
                .to_string(),
            spec,
            points,
        },
    )?;

    let (mut file, existing) = open_rows(out, resume)?;
    let done: HashSet<RowKey> = existing.iter().map(|r| RowKey::of_row(r, bisect)).collect();
    let mut summary = RunSummary::default();

    for config in &grid {
        for &k in &ks {
            let seed = point_seed(spec.seed, config, k);
            let config = config.clone().with_expected_messages(k);
            let key = |ebn0: Option<f64>| RowKey {
                mode: config.mode.to_string(),
                m: config.m,
                p: config.p,
                r: config.r,
                b: config.message_bits(),
                k,
                trials: spec.trials,
                seed,
                ebn0: ebn0.map(micro_db),
            };
            match &spec.ebn0_db {
                Ebn0Plan::Auto(_) => {
                    if done.contains(&key(None)) {
                        summary.skipped += 1;
                        continue;
                    }
                    let found = find_min_ebn0(&config, k, spec.target_error, spec.trials, seed)?;
                    let row = ExperimentResult::from_estimate(&config, found.estimate(), seed);
                    append_row(&mut file, out, &row)?;
                    summary.written += 1;
                }
                Ebn0Plan::List(dbs) => {
                    for &db in dbs {
                        if done.contains(&key(Some(db))) {
                            summary.skipped += 1;
                            continue;
                        }
                        let q = power_for_ebn0(db, &config);
                        let est = evaluate_point(&config, k, q, spec.trials, seed)?;
                        let row = ExperimentResult::from_estimate(&config, &est, seed);
                        append_row(&mut file, out, &row)?;
                        summary.written += 1;
                    }
                }
            }
        }
    }
    Ok(summary)
}
