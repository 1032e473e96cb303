//! AWGN channel simulation and the evaluation metrics: per-user error and
//! energy per bit.
//!
//! Noise has unit variance per real dimension. Complex entries therefore carry
//! total noise variance 2, so a complex block of `n` entries uses the same
//! `2n` real dimensions as a real block of length `2n`.

use std::collections::HashSet;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chirrup::{chirrup_decode, superimpose, CodeConfig};
use crate::codebook::CodebookMode;
use crate::rng::rng_from;
use crate::{Bits, Error, Result};

/// Lowest and highest Eb/N0 (dB) searched by [`find_min_ebn0`].
pub const EBN0_WINDOW_DB: (f64, f64) = (-5.0, 25.0);
pub const EBN0_RESOLUTION_DB: f64 = 0.25;

const TRIAL_DOMAIN: u64 = 0x0074_7269_616c;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Noise {
    Off,
    Awgn,
}

/// `k` distinct uniformly random `b`-bit messages, in draw order.
pub fn draw_messages<R: Rng + ?Sized>(k: usize, b: usize, rng: &mut R) -> Vec<Bits> {
    let mut seen = HashSet::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let msg: Bits = (0..b).map(|_| rng.random()).collect();
        if seen.insert(msg.clone()) {
            out.push(msg);
        }
    }
    out
}

/// Sum of the encoded messages plus one noise draw.
pub fn transmit<R: Rng + ?Sized>(
    messages: &[Bits],
    config: &CodeConfig,
    noise: Noise,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    config.validate()?;
    let mut y = vec![Complex64::new(0.0, 0.0); config.total_len()];
    for msg in messages {
        superimpose(&mut y, msg, config)?;
    }
    if noise == Noise::Awgn {
        for v in y.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = match config.mode {
                CodebookMode::Complex => rng.sample(StandardNormal),
                CodebookMode::Real => 0.0,
            };
            *v += Complex64::new(re, im);
        }
    }
    Ok(y)
}

/// Fraction of `sent` missing from `recovered`.
pub fn per_user_error(sent: &[Bits], recovered: &[Bits]) -> Result<f64> {
    if sent.is_empty() {
        return Err(Error::NoMessages);
    }
    let got: HashSet<&Bits> = recovered.iter().collect();
    let missed = sent.iter().filter(|m| !got.contains(m)).count();
    Ok(missed as f64 / sent.len() as f64)
}

/// `10 log10(n Q / 2B)` with `n = 2^(m+p+r)`.
pub fn ebn0_db(power: f64, config: &CodeConfig) -> f64 {
    10.0 * (config.total_len() as f64 * power / (2.0 * config.message_bits() as f64)).log10()
}

/// Inverse of [`ebn0_db`].
pub fn power_for_ebn0(db: f64, config: &CodeConfig) -> f64 {
    2.0 * config.message_bits() as f64 * 10f64.powf(db / 10.0) / config.total_len() as f64
}

/// Number of real dimensions occupied by the block.
pub fn real_equivalent_len(config: &CodeConfig) -> usize {
    match config.mode {
        CodebookMode::Complex => 2 * config.total_len(),
        CodebookMode::Real => config.total_len(),
    }
}

/// Monte-Carlo estimate at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub k: usize,
    pub power: f64,
    pub ebn0_db: f64,
    pub trials: usize,
    /// Missed messages summed over trials.
    pub missed: usize,
    pub per_user_error: f64,
    /// Wall-clock seconds per decode, in trial order.
    pub decode_seconds: Vec<f64>,
    /// Per-trial per-user error, in trial order.
    pub trial_errors: Vec<f64>,
}

impl PointEstimate {
    pub fn mean_decode_seconds(&self) -> f64 {
        if self.decode_seconds.is_empty() {
            return 0.0;
        }
        self.decode_seconds.iter().sum::<f64>() / self.decode_seconds.len() as f64
    }

    pub fn median_decode_seconds(&self) -> f64 {
        median(&self.decode_seconds)
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

/// Runs `trials` independent transmissions of `k` messages at power `power`.
///
/// Trial `t` draws its messages, noise and decoder seed from a stream keyed on
/// `(seed, t)`, so the same trials are replayed at every power level and the
/// estimate is independent of thread count. Only decoding is timed.
pub fn evaluate_point(config: &CodeConfig, k: usize, power: f64, trials: usize, seed: u64) -> Result<PointEstimate> {
    let config = config.clone().with_power(power);
    config.validate()?;
    let b = config.message_bits();
    let outcomes: Vec<Result<(usize, f64)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from(seed, &[TRIAL_DOMAIN, t as u64]);
            let messages = draw_messages(k, b, &mut rng);
            let y = transmit(&messages, &config, Noise::Awgn, &mut rng)?;
            let decode_seed: u64 = rng.random();
            let start = Instant::now();
            let recovered = chirrup_decode(&y, &config, decode_seed)?;
            let elapsed = start.elapsed().as_secs_f64();
            let got: HashSet<&Bits> = recovered.iter().collect();
            let missed = messages.iter().filter(|m| !got.contains(m)).count();
            Ok((missed, elapsed))
        })
        .collect();
    let mut missed = 0;
    let mut decode_seconds = Vec::with_capacity(trials);
    let mut trial_errors = Vec::with_capacity(trials);
    for o in outcomes {
        let (miss, secs) = o?;
        missed += miss;
        decode_seconds.push(secs);
        trial_errors.push(if k == 0 { 0.0 } else { miss as f64 / k as f64 });
    }
    let total = k * trials;
    Ok(PointEstimate {
        k,
        power,
        ebn0_db: ebn0_db(power, &config),
        trials,
        missed,
        per_user_error: if total == 0 { 0.0 } else { missed as f64 / total as f64 },
        decode_seconds,
        trial_errors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum MinEbn0 {
    Found { ebn0_db: f64, estimate: PointEstimate },
    /// Even the top of the window misses the target; carries that probe.
    Infeasible { estimate: PointEstimate },
}

impl MinEbn0 {
    pub fn db(&self) -> Option<f64> {
        match self {
            MinEbn0::Found { ebn0_db, .. } => Some(*ebn0_db),
            MinEbn0::Infeasible { .. } => None,
        }
    }

    /// The estimate at the returned point, or at the window top if infeasible.
    pub fn estimate(&self) -> &PointEstimate {
        match self {
            MinEbn0::Found { estimate, .. } | MinEbn0::Infeasible { estimate } => estimate,
        }
    }
}

/// Smallest Eb/N0 on the search window at which the estimated per-user error
/// is at most `target`, located by bisection to [`EBN0_RESOLUTION_DB`].
///
/// Assumes the error is non-increasing in power. Every probe replays the same
/// trials (see [`evaluate_point`]).
pub fn find_min_ebn0(config: &CodeConfig, k: usize, target: f64, trials: usize, seed: u64) -> Result<MinEbn0> {
    if trials < 20 {
        return Err(Error::InvalidConfig(format!("need at least 20 trials, got {trials}")));
    }
    let probe = |db: f64| evaluate_point(config, k, power_for_ebn0(db, config), trials, seed);
    let ok = |e: &PointEstimate| e.per_user_error <= target;
    let (mut lo, mut hi) = EBN0_WINDOW_DB;
    let mut best = probe(hi)?;
    if !ok(&best) {
        return Ok(MinEbn0::Infeasible { estimate: best });
    }
    let low = probe(lo)?;
    if ok(&low) {
        return Ok(MinEbn0::Found {
            ebn0_db: lo,
            estimate: low,
        });
    }
    while hi - lo > EBN0_RESOLUTION_DB {
        let mid = 0.5 * (lo + hi);
        let est = probe(mid)?;
        if ok(&est) {
            hi = mid;
            best = est;
        } else {
            lo = mid;
        }
    }
    Ok(MinEbn0::Found {
        ebn0_db: hi,
        estimate: best,
    })
}

/// One output row of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub mode: String,
    pub m: usize,
    pub p: usize,
    pub r: usize,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "Q")]
    pub q: f64,
    pub ebn0_db: f64,
    pub trials: usize,
    pub per_user_error: f64,
    pub time_decode_mean_s: f64,
    pub time_decode_median_s: f64,
    pub seed: u64,
}

impl ExperimentResult {
    pub fn from_estimate(config: &CodeConfig, est: &PointEstimate, seed: u64) -> Self {
        Self {
            mode: config.mode.to_string(),
            m: config.m,
            p: config.p,
            r: config.r,
            b: config.message_bits(),
            k: est.k,
            q: est.power,
            ebn0_db: est.ebn0_db,
            trials: est.trials,
            per_user_error: est.per_user_error,
            time_decode_mean_s: est.mean_decode_seconds(),
            time_decode_median_s: est.median_decode_seconds(),
            seed,
        }
    }
}
