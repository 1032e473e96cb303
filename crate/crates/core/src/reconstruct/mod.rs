//! Chirp reconstruction: greedy recovery of a sparse superposition of binary
//! chirps in O(n K (K + log² n)) time.
//!
//! Each iteration identifies one active `(P, b)` from the residual. Rows of `P`
//! are read off as Walsh–Hadamard peaks of shift-and-multiply products
//! `conj(y_a) y_{a ⊕ e}`, then `b` is the peak of the transform of the
//! dechirped residual. The selected codewords are refitted by least squares
//! after every step.

mod lsq;

pub use lsq::LsqState;

use num_complex::Complex64;
use rand::Rng;

use crate::codebook::{encode_chirp, low_mask, quadratic_form_table, ChirpParams, CodebookMode, I_POW};
use crate::wht::{check_len, fwht_in_place};
use crate::{Error, Result};

/// Default tree branching factor.
pub const DEFAULT_CHILDREN: usize = 3;
/// Default leaf acceptance multiple of the off-peak RMS.
pub const DEFAULT_ALPHA: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    /// Iteration cap S.
    pub max_components: usize,
    /// Stop once the residual norm falls to this value.
    pub residual_tol: f64,
    /// Candidates tried per row of `P`; 1 disables the tree search.
    pub children: usize,
    pub alpha: f64,
    pub mode: CodebookMode,
    /// Per-entry power of the codewords being fitted.
    pub power: f64,
}

impl DecoderParams {
    /// Defaults for a length-`2^m` measurement with AWGN of unit variance per
    /// real dimension: stop when the residual is indistinguishable from noise.
    pub fn for_noise(m: usize, mode: CodebookMode, power: f64, max_components: usize) -> Self {
        let per_entry = match mode {
            CodebookMode::Complex => 2.0,
            CodebookMode::Real => 1.0,
        };
        Self {
            max_components,
            residual_tol: 1.05 * ((1usize << m) as f64 * per_entry).sqrt(),
            children: DEFAULT_CHILDREN,
            alpha: DEFAULT_ALPHA,
            mode,
            power,
        }
    }

    /// Defaults for noise-free measurements.
    pub fn noiseless(m: usize, mode: CodebookMode, power: f64, max_components: usize) -> Self {
        Self {
            residual_tol: 1e-6 * ((1usize << m) as f64 * power).sqrt(),
            ..Self::for_noise(m, mode, power, max_components)
        }
    }

    pub fn with_children(mut self, children: usize) -> Self {
        self.children = children;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_components == 0 || self.children == 0 || !(self.alpha > 0.0) || !(self.power > 0.0) {
            return Err(Error::InvalidConfig(format!("invalid decoder parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedComponent {
    pub params: ChirpParams,
    pub coeff: Complex64,
}

/// `conj(y_a) * y_{a ⊕ e}` for every index `a`.
pub fn shift_multiply(y: &[Complex64], e: u32) -> Result<Vec<Complex64>> {
    let m = check_len(y.len())?;
    if e & !low_mask(m) != 0 {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: 32 - e.leading_zeros() as usize,
        });
    }
    Ok((0..y.len()).map(|a| y[a].conj() * y[a ^ e as usize]).collect())
}

/// `i^{-(aᵀPa mod 4)} * y_a`, where `rows` are the rows of `P`.
pub fn dechirp(y: &[Complex64], rows: &[u32]) -> Result<Vec<Complex64>> {
    let m = check_len(y.len())?;
    if rows.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: rows.len(),
        });
    }
    let quad = quadratic_form_table(rows);
    Ok(y.iter()
        .zip(quad)
        .map(|(ya, q)| I_POW[((4 - q) % 4) as usize] * ya)
        .collect())
}

fn abs_wht(mut x: Vec<Complex64>) -> Vec<f64> {
    fwht_in_place(&mut x).expect("length checked by caller");
    x.into_iter().map(|z| z.norm()).collect()
}

/// Indices of the `c` largest entries, best first; ties go to the lower index.
fn top_indices(h: &[f64], c: usize) -> Vec<usize> {
    let mut best: Vec<usize> = Vec::with_capacity(c + 1);
    for (i, &x) in h.iter().enumerate() {
        let pos = best.iter().position(|&j| x > h[j]).unwrap_or(best.len());
        if pos < c {
            best.insert(pos, i);
            best.truncate(c);
        }
    }
    best
}

fn argmax(h: &[f64]) -> usize {
    top_indices(h, 1)[0]
}

/// Magnitude spectra of the two shift-and-multiply products used for each
/// row. They depend only on the residual, so one set serves every node of the
/// tree search.
struct RowScores {
    single: Vec<Vec<f64>>,
    /// `pair[r]` peaks at `row_r ⊕ row_{r-1}`; empty for `r = 0`.
    pair: Vec<Vec<f64>>,
}

impl RowScores {
    fn new(y: &[Complex64], m: usize) -> Self {
        let single = (0..m)
            .map(|r| abs_wht(shift_multiply(y, 1 << r).unwrap()))
            .collect();
        let pair = (0..m)
            .map(|r| {
                if r == 0 {
                    Vec::new()
                } else {
                    abs_wht(shift_multiply(y, (1 << r) | (1 << (r - 1))).unwrap())
                }
            })
            .collect();
        Self { single, pair }
    }

    /// Score of every candidate for row `r`, given the chosen row `r - 1`.
    fn level(&self, r: usize, prev: u32) -> Vec<f64> {
        if r == 0 {
            return self.single[0].clone();
        }
        let pair = &self.pair[r];
        self.single[r]
            .iter()
            .enumerate()
            .map(|(v, s)| s + pair[v ^ prev as usize])
            .collect()
    }
}

/// Builds a symmetric `P` from independently recovered rows. Entry `(i, j)`
/// with `i > j` is taken from row `i` (the later-recovered row wins);
/// real mode forces a zero diagonal.
fn assemble(rows: &[u32], mode: CodebookMode) -> Vec<u32> {
    let m = rows.len();
    let mut out = vec![0u32; m];
    for i in 0..m {
        for j in 0..=i {
            let set = (rows[i] >> j) & 1 == 1 && !(i == j && mode == CodebookMode::Real);
            if set {
                out[i] |= 1 << j;
                out[j] |= 1 << i;
            }
        }
    }
    out
}

struct BStage {
    b: u32,
    peak: f64,
    off_peak_rms: f64,
}

fn find_b(y: &[Complex64], rows: &[u32]) -> BStage {
    let w = abs_wht(dechirp(y, rows).expect("dimensions checked by caller"));
    let b = argmax(&w);
    let peak = w[b];
    let total: f64 = w.iter().map(|x| x * x).sum();
    let off_peak_rms = if w.len() > 1 {
        ((total - peak * peak).max(0.0) / (w.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    BStage {
        b: b as u32,
        peak,
        off_peak_rms,
    }
}

fn check_signal(y: &[Complex64]) -> Result<usize> {
    let m = check_len(y.len())?;
    if y.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::DegenerateResidual);
    }
    Ok(m)
}

/// Single-candidate component search: greedy row choice, then the `b` peak.
pub fn find_pb(y: &[Complex64], params: &DecoderParams) -> Result<ChirpParams> {
    let m = check_signal(y)?;
    let scores = RowScores::new(y, m);
    let mut rows = Vec::with_capacity(m);
    let mut prev = 0u32;
    for r in 0..m {
        prev = argmax(&scores.level(r, prev)) as u32;
        rows.push(prev);
    }
    let rows = assemble(&rows, params.mode);
    let b = find_b(y, &rows).b;
    Ok(ChirpParams::new(m, rows, b).expect("assembled matrix is symmetric"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeOutcome {
    pub params: ChirpParams,
    /// True when no leaf passed the acceptance test and `params` is random.
    pub fallback: bool,
    pub leaves_visited: usize,
}

/// Depth-first search over the top-`c` candidates for each row of `P`.
///
/// A leaf is accepted when the `b` peak is at least `alpha` times the RMS of
/// the remaining transform entries. If every leaf fails, a uniformly random
/// `(P, b)` drawn from `rng` is returned and flagged. With `children == 1`
/// this is exactly [`find_pb`].
pub fn find_pb_tree<R: Rng + ?Sized>(
    y: &[Complex64],
    params: &DecoderParams,
    rng: &mut R,
) -> Result<TreeOutcome> {
    if params.children <= 1 {
        return Ok(TreeOutcome {
            params: find_pb(y, params)?,
            fallback: false,
            leaves_visited: 1,
        });
    }
    let m = check_signal(y)?;
    let scores = RowScores::new(y, m);
    let mut search = TreeSearch {
        y,
        scores: &scores,
        params,
        m,
        rows: Vec::with_capacity(m),
        leaves: 0,
    };
    match search.descend(0, 0) {
        Some(found) => Ok(TreeOutcome {
            params: found,
            fallback: false,
            leaves_visited: search.leaves,
        }),
        None => Ok(TreeOutcome {
            params: ChirpParams::random(m, params.mode, rng),
            fallback: true,
            leaves_visited: search.leaves,
        }),
    }
}

struct TreeSearch<'a> {
    y: &'a [Complex64],
    scores: &'a RowScores,
    params: &'a DecoderParams,
    m: usize,
    rows: Vec<u32>,
    leaves: usize,
}

impl TreeSearch<'_> {
    fn descend(&mut self, level: usize, prev: u32) -> Option<ChirpParams> {
        if level == self.m {
            self.leaves += 1;
            let rows = assemble(&self.rows, self.params.mode);
            let stage = find_b(self.y, &rows);
            let accept = stage.peak > 0.0 && stage.peak >= self.params.alpha * stage.off_peak_rms;
            return accept.then(|| ChirpParams::new(self.m, rows, stage.b).expect("symmetric"));
        }
        for cand in top_indices(&self.scores.level(level, prev), self.params.children) {
            self.rows.push(cand as u32);
            let found = self.descend(level + 1, cand as u32);
            self.rows.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }
}

/// Result of one reconstruction run.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Pre-seeded components first, then newly found ones, with coefficients
    /// from the final joint least-squares fit.
    pub components: Vec<DecodedComponent>,
    /// How many leading entries of `components` were supplied up front.
    pub known: usize,
    /// Residual norm before the first search and after every accepted column.
    pub residual_history: Vec<f64>,
    pub fallbacks: usize,
}

impl Reconstruction {
    pub fn found(&self) -> &[DecodedComponent] {
        &self.components[self.known..]
    }
}

/// Greedy chirp reconstruction of `y`.
pub fn chirp_reconstruct<R: Rng + ?Sized>(
    y: &[Complex64],
    params: &DecoderParams,
    rng: &mut R,
) -> Result<Vec<DecodedComponent>> {
    Ok(reconstruct_with_known(y, &[], params, rng)?.components)
}

/// Chirp reconstruction with `known` components fitted (peeled) before the
/// search starts. At most `params.max_components` new components are added;
/// the search stops early when the residual is within tolerance, when the
/// search returns an already selected `(P, b)`, or when a new codeword is
/// numerically dependent on the current fit.
pub fn reconstruct_with_known<R: Rng + ?Sized>(
    y: &[Complex64],
    known: &[ChirpParams],
    params: &DecoderParams,
    rng: &mut R,
) -> Result<Reconstruction> {
    let m = check_len(y.len())?;
    params.validate()?;
    let mut lsq = LsqState::new(y);
    let mut selected: Vec<ChirpParams> = Vec::new();
    for k in known {
        if k.m() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: k.m(),
            });
        }
        if selected.contains(k) {
            continue;
        }
        let column = encode_chirp(k, params.power, params.mode)?;
        if lsq.add_column(&column).is_ok() {
            selected.push(k.clone());
        }
    }
    let n_known = selected.len();
    let mut history = vec![lsq.residual_norm()];
    let mut fallbacks = 0;
    let mut iterations = 0;
    while lsq.residual_norm() > params.residual_tol && iterations < params.max_components {
        iterations += 1;
        let outcome = match find_pb_tree(lsq.residual(), params, rng) {
            Ok(o) => o,
            Err(Error::DegenerateResidual) => break,
            Err(e) => return Err(e),
        };
        if selected.contains(&outcome.params) {
            break;
        }
        fallbacks += outcome.fallback as usize;
        let column = encode_chirp(&outcome.params, params.power, params.mode)?;
        match lsq.add_column(&column) {
            Ok(_) => selected.push(outcome.params),
            Err(Error::DependentColumn) => break,
            Err(e) => return Err(e),
        }
        history.push(lsq.residual_norm());
    }
    let coeffs = lsq.coefficients();
    Ok(Reconstruction {
        components: selected
            .into_iter()
            .zip(coeffs)
            .map(|(params, coeff)| DecodedComponent { params, coeff })
            .collect(),
        known: n_known,
        residual_history: history,
        fallbacks,
    })
}
