//! Binary chirp codewords and the bit layout that maps patch bit strings to
//! chirp parameters and slot indices.
//!
//! Entry index `a` of a length-`2^m` codeword is identified with the binary
//! vector whose `i`-th coordinate is bit `i` of `a` (little-endian). The same
//! convention is used by [`crate::wht`] and [`crate::reconstruct`].

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Bits, Error, Result};

/// Largest supported `m`; row masks are `u32`.
pub const MAX_M: usize = 24;

/// Powers of the imaginary unit, indexed by the exponent mod 4.
pub const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodebookMode {
    Complex,
    Real,
}

impl CodebookMode {
    /// Bits carried by one `(P, b)` pair before reserving the check digit.
    pub fn pb_bits(self, m: usize) -> usize {
        match self {
            CodebookMode::Complex => m * (m + 3) / 2,
            CodebookMode::Real => m * (m + 1) / 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CodebookMode::Complex => "complex",
            CodebookMode::Real => "real",
        }
    }
}

impl std::fmt::Display for CodebookMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CodebookMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complex" => Ok(CodebookMode::Complex),
            "real" => Ok(CodebookMode::Real),
            other => Err(Error::InvalidConfig(format!("unknown codebook mode {other:?}"))),
        }
    }
}

/// One chirp codeword: a symmetric binary `m x m` matrix `P` and a binary
/// `m`-vector `b`.
///
/// Row `i` of `P` is stored as a bitmask whose bit `j` is `P[i][j]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChirpParams {
    m: usize,
    rows: Vec<u32>,
    b: u32,
}

impl ChirpParams {
    pub fn new(m: usize, rows: Vec<u32>, b: u32) -> Result<Self> {
        if m == 0 || m > MAX_M {
            return Err(Error::InvalidConfig(format!("m = {m} outside 1..={MAX_M}")));
        }
        if rows.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: rows.len(),
            });
        }
        let mask = low_mask(m);
        if b & !mask != 0 {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: 32 - b.leading_zeros() as usize,
            });
        }
        for (i, &row) in rows.iter().enumerate() {
            if row & !mask != 0 {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: 32 - row.leading_zeros() as usize,
                });
            }
            for j in 0..i {
                if bit(row, j) != bit(rows[j], i) {
                    return Err(Error::NotSymmetric(i, j));
                }
            }
        }
        Ok(Self { m, rows, b })
    }

    pub fn zero(m: usize) -> Self {
        Self {
            m,
            rows: vec![0; m],
            b: 0,
        }
    }

    /// Uniformly random parameters valid for `mode`.
    pub fn random<R: Rng + ?Sized>(m: usize, mode: CodebookMode, rng: &mut R) -> Self {
        let mut rows = vec![0u32; m];
        for i in 0..m {
            let lo = if mode == CodebookMode::Real { i + 1 } else { i };
            for j in lo..m {
                if rng.random::<bool>() {
                    rows[i] |= 1 << j;
                    rows[j] |= 1 << i;
                }
            }
        }
        let b = rng.random::<u32>() & low_mask(m);
        Self { m, rows, b }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn p(&self, i: usize, j: usize) -> bool {
        bit(self.rows[i], j)
    }

    pub fn has_zero_diagonal(&self) -> bool {
        (0..self.m).all(|i| !self.p(i, i))
    }

    pub fn validate_for(&self, mode: CodebookMode) -> Result<()> {
        if mode == CodebookMode::Real {
            if let Some(i) = (0..self.m).find(|&i| self.p(i, i)) {
                return Err(Error::NonZeroDiagonal(i));
            }
        }
        Ok(())
    }

    /// The reserved entry `P[0][1]` separating primary from secondary copies.
    pub fn check_digit(&self) -> bool {
        self.m >= 2 && self.p(0, 1)
    }

    pub fn with_check_digit(&self, value: bool) -> Self {
        let mut out = self.clone();
        out.set_p(0, 1, value);
        out
    }

    fn set_p(&mut self, i: usize, j: usize, value: bool) {
        if value {
            self.rows[i] |= 1 << j;
            self.rows[j] |= 1 << i;
        } else {
            self.rows[i] &= !(1 << j);
            self.rows[j] &= !(1 << i);
        }
    }

    fn set_b(&mut self, i: usize, value: bool) {
        if value {
            self.b |= 1 << i;
        } else {
            self.b &= !(1 << i);
        }
    }
}

#[inline]
fn bit(word: u32, i: usize) -> bool {
    (word >> i) & 1 == 1
}

#[inline]
pub(crate) fn low_mask(m: usize) -> u32 {
    if m >= 32 {
        u32::MAX
    } else {
        (1u32 << m) - 1
    }
}

/// `(2 b·v + vᵀ P v) mod 4`, both products taken as integer sums.
pub fn chirp_exponent(v: u32, params: &ChirpParams) -> Result<u8> {
    if v & !low_mask(params.m) != 0 {
        return Err(Error::DimensionMismatch {
            expected: params.m,
            actual: 32 - v.leading_zeros() as usize,
        });
    }
    let linear = 2 * (params.b & v).count_ones();
    let quadratic: u32 = (0..params.m)
        .filter(|&i| bit(v, i))
        .map(|i| (params.rows[i] & v).count_ones())
        .sum();
    Ok(((linear + quadratic) % 4) as u8)
}

/// `aᵀ P a mod 4` for every `a` in `0..2^m`, in O(2^m).
///
/// Uses `Q(a ⊕ e_i) = Q(a) + P_ii + 2·(row_i · a)` for `a < 2^i`.
pub fn quadratic_form_table(rows: &[u32]) -> Vec<u8> {
    let m = rows.len();
    let mut table = vec![0u8; 1 << m];
    for (i, &row) in rows.iter().enumerate() {
        let half = 1usize << i;
        let diag = (row >> i) & 1;
        for a in 0..half {
            let cross = 2 * ((row & a as u32).count_ones() & 1);
            table[half | a] = ((table[a] as u32 + diag + cross) % 4) as u8;
        }
    }
    table
}

/// The codeword `sqrt(Q) * i^(2 b·v + vᵀPv)` of length `2^m`.
pub fn encode_chirp(params: &ChirpParams, power: f64, mode: CodebookMode) -> Result<Vec<Complex64>> {
    params.validate_for(mode)?;
    let mut out = vec![Complex64::new(0.0, 0.0); 1 << params.m];
    add_chirp(&mut out, params, power.sqrt());
    Ok(out)
}

/// Adds `amplitude * i^(2 b·v + vᵀPv)` to `out` entrywise.
pub(crate) fn add_chirp(out: &mut [Complex64], params: &ChirpParams, amplitude: f64) {
    debug_assert_eq!(out.len(), 1 << params.m);
    let quad = quadratic_form_table(&params.rows);
    for (a, (o, q)) in out.iter_mut().zip(quad).enumerate() {
        let e = (q as u32 + 2 * ((params.b & a as u32).count_ones() & 1)) % 4;
        *o += I_POW[e as usize] * amplitude;
    }
}

/// One `(P, b)` payload coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PbField {
    B(usize),
    P(usize, usize),
}

/// Map between a patch bit string and `(P, b, primary slot)`.
///
/// A patch string is `[(P, b) bits | slot bits]`. The `(P, b)` part lists
/// `b_0..b_{m-1}`, then the upper triangle of `P` row by row (diagonal
/// included in complex mode, excluded in real mode), skipping the check digit
/// `P[0][1]`. The last `p` bits hold the primary slot index, least significant
/// first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitLayout {
    m: usize,
    p: usize,
    mode: CodebookMode,
    fields: Vec<PbField>,
    translate_source: Vec<usize>,
}

impl BitLayout {
    pub fn new(m: usize, p: usize, mode: CodebookMode) -> Result<Self> {
        if !(2..=MAX_M).contains(&m) {
            return Err(Error::InvalidConfig(format!("m = {m} outside 2..={MAX_M}")));
        }
        if p >= 32 {
            return Err(Error::InvalidConfig(format!("p = {p} too large")));
        }
        let mut fields: Vec<PbField> = (0..m).map(PbField::B).collect();
        for i in 0..m {
            let lo = if mode == CodebookMode::Real { i + 1 } else { i };
            for j in lo..m {
                if (i, j) != (0, 1) {
                    fields.push(PbField::P(i, j));
                }
            }
        }
        debug_assert_eq!(fields.len(), mode.pb_bits(m) - 1);
        if p > fields.len() {
            return Err(Error::InvalidConfig(format!(
                "p = {p} exceeds the {} (P, b) bits available for the translate",
                fields.len()
            )));
        }
        let mut translate_source: Vec<usize> = (0..p.min(m)).collect();
        let strict_upper = fields
            .iter()
            .enumerate()
            .filter(|(_, f)| matches!(f, PbField::P(i, j) if i < j))
            .map(|(k, _)| k);
        translate_source.extend(strict_upper.take(p.saturating_sub(m)));
        if translate_source.len() != p {
            return Err(Error::InvalidConfig(format!(
                "p = {p} exceeds the bits usable for the translate"
            )));
        }
        Ok(Self {
            m,
            p,
            mode,
            fields,
            translate_source,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn mode(&self) -> CodebookMode {
        self.mode
    }

    /// Number of bits in one patch string.
    pub fn patch_bits(&self) -> usize {
        self.fields.len() + self.p
    }

    /// Positions (within the patch string) of the translate bits, lowest first.
    pub fn translate_source(&self) -> &[usize] {
        &self.translate_source
    }

    /// Positions of the primary-slot bits, lowest first.
    pub fn slot_bit_positions(&self) -> std::ops::Range<usize> {
        self.fields.len()..self.patch_bits()
    }

    fn field_value(&self, field: PbField, params: &ChirpParams) -> bool {
        match field {
            PbField::B(i) => bit(params.b, i),
            PbField::P(i, j) => params.p(i, j),
        }
    }

    /// The translate carried by `params` (independent of the check digit).
    pub fn translate_of(&self, params: &ChirpParams) -> u32 {
        self.translate_source
            .iter()
            .enumerate()
            .filter(|&(_, &pos)| self.field_value(self.fields[pos], params))
            .fold(0, |acc, (k, _)| acc | 1 << k)
    }

    pub fn bits_to_params(&self, bits: &[bool]) -> Result<(ChirpParams, u32, u32)> {
        if bits.len() != self.patch_bits() {
            return Err(Error::DimensionMismatch {
                expected: self.patch_bits(),
                actual: bits.len(),
            });
        }
        let mut params = ChirpParams::zero(self.m);
        for (&field, &value) in self.fields.iter().zip(bits) {
            match field {
                PbField::B(i) => params.set_b(i, value),
                PbField::P(i, j) => params.set_p(i, j, value),
            }
        }
        let slot = bits[self.slot_bit_positions()]
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0u32, |acc, (k, _)| acc | 1 << k);
        let translate = self.translate_of(&params);
        Ok((params, slot, translate))
    }

    pub fn params_to_bits(&self, params: &ChirpParams, primary_slot: u32) -> Result<Bits> {
        if params.m != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                actual: params.m,
            });
        }
        if params.check_digit() {
            return Err(Error::CheckDigitSet);
        }
        params.validate_for(self.mode)?;
        if primary_slot as u64 >= 1u64 << self.p {
            return Err(Error::InvalidConfig(format!(
                "slot {primary_slot} out of range for p = {}",
                self.p
            )));
        }
        let mut bits: Bits = self
            .fields
            .iter()
            .map(|&f| self.field_value(f, params))
            .collect();
        bits.extend((0..self.p).map(|k| (primary_slot >> k) & 1 == 1));
        Ok(bits)
    }
}

/// Bits per patch string: `m(m+3)/2 + p - 1` (complex) or `m(m+1)/2 + p - 1` (real).
pub fn payload_capacity(m: usize, p: usize, mode: CodebookMode) -> Result<usize> {
    BitLayout::new(m, p, mode).map(|l| l.patch_bits())
}

pub fn bits_to_params(patch_bits: &[bool], layout: &BitLayout) -> Result<(ChirpParams, u32, u32)> {
    layout.bits_to_params(patch_bits)
}

pub fn params_to_bits(params: &ChirpParams, primary_slot: u32, layout: &BitLayout) -> Result<Bits> {
    layout.params_to_bits(params, primary_slot)
}
