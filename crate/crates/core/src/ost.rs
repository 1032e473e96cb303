//! One-step thresholding against an explicit codebook, and the Gaussian
//! asymptotic predictor for its phase transition.
//!
//! With codebook entries i.i.d. `N(0, Q)`, unit noise and `K` active columns,
//! the normalised correlations `g_i / (nQ)` are asymptotically normal with
//! mean 1 (active) or 0 (inactive) and variance `rho = (K + 1/Q) / n`.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal as NormalSampler, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::rng::rng_from;
use crate::{Error, Result};

const MAX_FIXED_POINT_ITERS: usize = 100;
const MC_DOMAIN: u64 = 0x006f_7374;

/// How `rho` enters the limiting tail probabilities.
///
/// `StdDev` treats `rho` as a variance and divides by `sqrt(rho)`, which is
/// what the limiting distributions imply. `PaperLiteral` divides by `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceConvention {
    PaperLiteral,
    #[default]
    StdDev,
}

impl VarianceConvention {
    fn scale(self, rho: f64) -> f64 {
        match self {
            VarianceConvention::PaperLiteral => rho,
            VarianceConvention::StdDev => rho.sqrt(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VarianceConvention::PaperLiteral => "paper-literal",
            VarianceConvention::StdDev => "std-dev",
        }
    }
}

impl std::fmt::Display for VarianceConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VarianceConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-literal" => Ok(Self::PaperLiteral),
            "std-dev" => Ok(Self::StdDev),
            other => Err(Error::InvalidConfig(format!("unknown variance convention {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OstAsymptotics {
    pub delta: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub convention: VarianceConvention,
}

impl OstAsymptotics {
    pub fn validate(&self) -> Result<()> {
        let ok = self.delta > 0.0
            && self.delta < 1.0
            && self.rho > 0.0
            && self.epsilon > 0.0
            && self.epsilon < 1.0
            && !self.lambda.is_nan();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid asymptotic parameters {self:?}")))
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Indices of the `k` largest entries of `x^T y`, largest first (ties keep
/// the lower index first).
pub fn ost_decode(y: &DVector<f64>, codebook: &DMatrix<f64>, k: usize) -> Result<Vec<usize>> {
    if y.len() != codebook.nrows() {
        return Err(Error::DimensionMismatch {
            expected: codebook.nrows(),
            actual: y.len(),
        });
    }
    let cols = codebook.ncols();
    if k > cols {
        return Err(Error::TooManyIndices {
            requested: k,
            available: cols,
        });
    }
    let g = codebook.tr_mul(y);
    Ok(top_k(g.as_slice(), k))
}

fn top_k(g: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..g.len()).collect();
    idx.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Limiting `(E P_lambda, E Q_lambda)`: the fractions of the codebook that are
/// active and above `lambda`, and inactive and above `lambda`.
pub fn ost_rates(lambda: f64, asym: &OstAsymptotics) -> (f64, f64) {
    let s = asym.convention.scale(asym.rho);
    let n = std_normal();
    let ep = asym.delta * n.sf((lambda - 1.0) / s);
    let eq = (1.0 - asym.delta) * n.sf(lambda / s);
    (ep, eq)
}

/// Threshold at which the expected number of exceedances equals `delta`.
fn solve_lambda(delta: f64, rho: f64, convention: VarianceConvention) -> Result<f64> {
    let s = convention.scale(rho);
    let n = std_normal();
    let odds = (1.0 - delta) / delta;
    // expected exceedances over delta; strictly decreasing in lambda
    let f = |l: f64| n.sf((l - 1.0) / s) + odds * n.sf(l / s) - 1.0;
    let (mut lo, mut hi) = (-1.0, 2.0);
    let mut grow = 0;
    while f(lo) < 0.0 || f(hi) > 0.0 {
        lo = 1.0 - 2.0 * (1.0 - lo);
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::NoRoot(format!("threshold for delta={delta}, rho={rho}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves `E P = (1-eps) delta`, `E(P+Q) = delta` for `(lambda, rho)`.
pub fn ost_solve(delta: f64, epsilon: f64, convention: VarianceConvention) -> Result<OstAsymptotics> {
    if !(delta > 0.0 && delta < 1.0 && epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "need 0 < delta, epsilon < 1, got delta={delta}, epsilon={epsilon}"
        )));
    }
    let n = std_normal();
    let s_for = |rho: f64| convention.scale(rho);
    // detection minus target; decreasing in rho
    let g = |rho: f64| -> Result<f64> {
        let lambda = solve_lambda(delta, rho, convention)?;
        Ok(n.sf((lambda - 1.0) / s_for(rho)) - (1.0 - epsilon))
    };
    let (mut lo, mut hi) = (1e-300f64.ln(), 1e6f64.ln());
    if g(lo.exp())? < 0.0 || g(hi.exp())? > 0.0 {
        return Err(Error::NoRoot(format!("rho for delta={delta}, epsilon={epsilon}")));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if g(mid.exp())? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi.exp() - lo.exp() < 1e-13 * hi.exp().max(1e-4) {
            break;
        }
    }
    let rho = (0.5 * (lo + hi)).exp();
    Ok(OstAsymptotics {
        delta,
        rho,
        epsilon,
        lambda: solve_lambda(delta, rho, convention)?,
        convention,
    })
}

/// The phase-transition load `rho = c(delta, epsilon)`.
pub fn ost_phase_transition(delta: f64, epsilon: f64, convention: VarianceConvention) -> Result<f64> {
    Ok(ost_solve(delta, epsilon, convention)?.rho)
}

/// Largest number of messages OST supports at per-user error `epsilon`, from
/// the fixed point of `K = rho(K / 2^B, epsilon) n - 1/Q`.
///
/// `B` is a float so that explicit codebook sizes can be passed as
/// `log2(C)`. Returns 0 when even a single message is not supported.
pub fn ost_predict_k(n: usize, b: f64, power: f64, epsilon: f64, convention: VarianceConvention) -> Result<f64> {
    if n == 0 || !(b > 0.0) || !(power > 0.0) {
        return Err(Error::InvalidConfig(format!("need positive n, B, Q; got {n}, {b}, {power}")));
    }
    let codebook = b.exp2();
    let map = |k: f64| -> Result<f64> {
        let delta = (k.max(1.0) / codebook).min(0.5);
        Ok(ost_phase_transition(delta, epsilon, convention)? * n as f64 - 1.0 / power)
    };
    let mut k = map(1.0)?;
    for _ in 0..MAX_FIXED_POINT_ITERS {
        if k <= 0.0 {
            return Ok(0.0);
        }
        let next = map(k)?;
        if (next - k).abs() < 1e-9 * k.abs().max(1.0) {
            return Ok(next.max(0.0));
        }
        k = next;
    }
    Err(Error::NoConvergence(MAX_FIXED_POINT_ITERS))
}

/// Codebook matrix with i.i.d. `N(0, Q)` entries.
pub fn gaussian_codebook<R: Rng + ?Sized>(n: usize, size: usize, power: f64, rng: &mut R) -> DMatrix<f64> {
    let dist = NormalSampler::new(0.0, power.sqrt()).expect("positive power");
    DMatrix::from_fn(n, size, |_, _| dist.sample(rng))
}

/// Sum of the selected columns plus unit-variance noise.
pub fn gaussian_observation<R: Rng + ?Sized>(codebook: &DMatrix<f64>, active: &[usize], rng: &mut R) -> DVector<f64> {
    let mut y = DVector::from_fn(codebook.nrows(), |_, _| rng.sample::<f64, _>(StandardNormal));
    for &j in active {
        y += codebook.column(j);
    }
    y
}

/// Per-user OST error for each `K` in `ks`, averaged over `trials`.
///
/// Each trial draws one codebook and one ordering of the codebook; the `K`
/// active messages are the first `K` of that ordering, so the scan over `K`
/// shares randomness within a trial.
pub fn ost_monte_carlo(
    n: usize,
    codebook_size: usize,
    power: f64,
    ks: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let k_max = ks.iter().copied().max().unwrap_or(0);
    if k_max > codebook_size {
        return Err(Error::TooManyIndices {
            requested: k_max,
            available: codebook_size,
        });
    }
    if ks.contains(&0) {
        return Err(Error::NoMessages);
    }
    let per_trial: Vec<Result<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from(seed, &[MC_DOMAIN, t as u64]);
            let x = gaussian_codebook(n, codebook_size, power, &mut rng);
            let order = sample(&mut rng, codebook_size, k_max).into_vec();
            let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            ks.iter()
                .map(|&k| {
                    let active = &order[..k];
                    let mut y = noise.clone();
                    for &j in active {
                        y += x.column(j);
                    }
                    let found = ost_decode(&y, &x, k)?;
                    let missed = active.iter().filter(|a| !found.contains(a)).count();
                    Ok(missed as f64 / k as f64)
                })
                .collect()
        })
        .collect();
    let mut sums = vec![0.0; ks.len()];
    for row in per_trial {
        for (s, e) in sums.iter_mut().zip(row?) {
            *s += e;
        }
    }
    Ok(sums.into_iter().map(|s| s / trials.max(1) as f64).collect())
}

/// Largest `K` in the scan whose error is at most `target`.
pub fn largest_supported_k(ks: &[usize], errors: &[f64], target: f64) -> Option<usize> {
    ks.iter()
        .zip(errors)
        .filter(|(_, &e)| e <= target)
        .map(|(&k, _)| k)
        .max()
}

/// Normalised correlations `g_i / (nQ)` for the active and for a sample of
/// inactive columns of one random problem.
pub fn normalised_correlations<R: Rng + ?Sized>(
    n: usize,
    codebook_size: usize,
    k: usize,
    inactive: usize,
    power: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if k + inactive > codebook_size {
        return Err(Error::TooManyIndices {
            requested: k + inactive,
            available: codebook_size,
        });
    }
    // only the sampled columns are ever correlated, so only they are drawn
    let x = gaussian_codebook(n, k + inactive, power, rng);
    let active: Vec<usize> = (0..k).collect();
    let y = gaussian_observation(&x, &active, rng);
    let g = x.tr_mul(&y) / (n as f64 * power);
    Ok((g.as_slice()[..k].to_vec(), g.as_slice()[k..].to_vec()))
}
