//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's own transforms or quadratic-form tables.
#![allow(dead_code)]

use chirrup_core::{ChirpParams, Complex64};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Binomial, DiscreteCDF};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn bit(x: u32, i: usize) -> i64 {
    ((x >> i) & 1) as i64
}

/// `aᵀPa` as a plain integer double sum.
pub fn quad_form(params: &ChirpParams, a: u32) -> i64 {
    let m = params.m();
    let mut s = 0;
    for i in 0..m {
        for j in 0..m {
            s += bit(a, i) * params.p(i, j) as i64 * bit(a, j);
        }
    }
    s
}

pub fn dot(x: u32, a: u32, m: usize) -> i64 {
    (0..m).map(|i| bit(x, i) * bit(a, i)).sum()
}

/// `P e` as a bit vector.
pub fn mat_vec(params: &ChirpParams, e: u32) -> u32 {
    let m = params.m();
    (0..m).fold(0, |acc, i| {
        let s: i64 = (0..m).map(|j| params.p(i, j) as i64 * bit(e, j)).sum();
        acc | (((s & 1) as u32) << i)
    })
}

pub fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

/// `√Q · i^{2bᵀa + aᵀPa}`.
pub fn chirp_entry(params: &ChirpParams, q: f64, a: u32) -> Complex64 {
    i_pow(2 * dot(params.b(), a, params.m()) + quad_form(params, a)) * q.sqrt()
}

pub fn chirp(params: &ChirpParams, q: f64) -> Vec<Complex64> {
    (0..1u32 << params.m()).map(|a| chirp_entry(params, q, a)).collect()
}

pub fn complex_noise<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

pub fn mixture(components: &[(ChirpParams, Complex64)], q: f64, noise: &[Complex64]) -> Vec<Complex64> {
    let mut y = noise.to_vec();
    for (p, coeff) in components {
        for (ya, x) in y.iter_mut().zip(chirp(p, q)) {
            *ya += coeff * x;
        }
    }
    y
}

/// Right-hand side of the shift-and-multiply identity for
/// `y = Σ c_k φ_k + z`: every (k, l) pair is evaluated from the closed form
/// `conj(φ_k(a)) φ_l(a⊕e) = φ_l(e) √Q i^{2(b_l + b_k + P_l e)ᵀa + aᵀP_l a − aᵀP_k a}`,
/// and the noise terms are added explicitly.
pub fn shift_multiply_rhs(components: &[(ChirpParams, Complex64)], q: f64, noise: &[Complex64], e: u32) -> Vec<Complex64> {
    let n = noise.len();
    let m = n.trailing_zeros() as usize;
    let signal = mixture(components, q, &vec![c(0.0, 0.0); n]);
    (0..n as u32)
        .map(|a| {
            let mut total = c(0.0, 0.0);
            for (pk, ck) in components {
                for (pl, cl) in components {
                    let lin = pl.b() ^ pk.b() ^ mat_vec(pl, e);
                    let exp = 2 * dot(lin, a, m) + quad_form(pl, a) - quad_form(pk, a);
                    total += ck.conj() * cl * chirp_entry(pl, q, e) * q.sqrt() * i_pow(exp);
                }
            }
            let (a, ae) = (a as usize, (a ^ e) as usize);
            total + noise[a].conj() * signal[ae] + noise[ae] * signal[a].conj() + noise[a].conj() * noise[ae]
        })
        .collect()
}

pub fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    diff / scale.max(f64::MIN_POSITIVE)
}

/// `argmax_b |⟨φ_{P,b}, y⟩|` by explicit inner products over every `b`.
pub fn b_search(rows: &[u32], y: &[Complex64]) -> u32 {
    let m = rows.len();
    let mut best = (0, -1.0);
    for b in 0..1u32 << m {
        let params = ChirpParams::new(m, rows.to_vec(), b).unwrap();
        let corr: Complex64 = (0..y.len() as u32)
            .map(|a| chirp_entry(&params, 1.0, a).conj() * y[a as usize])
            .sum();
        if corr.norm() > best.1 + 1e-9 {
            best = (b, corr.norm());
        }
    }
    best.0
}

/// Orthogonal matching pursuit with `k` steps over explicit dictionary
/// columns; a dense least-squares refit after every selection.
pub fn omp(dict: &DMatrix<Complex64>, y: &[Complex64], k: usize) -> Vec<usize> {
    let y = DVector::from_column_slice(y);
    let mut residual = y.clone();
    let mut chosen: Vec<usize> = Vec::new();
    for _ in 0..k {
        let corr = dict.ad_mul(&residual);
        let pick = (0..dict.ncols())
            .filter(|j| !chosen.contains(j))
            .max_by(|&a, &b| corr[a].norm().total_cmp(&corr[b].norm()).then(b.cmp(&a)))
            .unwrap();
        chosen.push(pick);
        let sub = dict.select_columns(&chosen);
        let coeffs = sub.clone().svd(true, true).solve(&y, 1e-12).unwrap();
        residual = &y - sub * coeffs;
    }
    chosen
}

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov p-value with the usual small-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = 2.0 * (-1f64).powf(j - 1.0) * (-2.0 * j * j * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// One-sided sign-test p-value for `wins` out of `wins + losses` untied pairs.
pub fn sign_test_p(wins: u64, losses: u64) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let dist = Binomial::new(0.5, n).unwrap();
    if wins == 0 {
        1.0
    } else {
        dist.sf(wins - 1)
    }
}
