//! The full slotted scheme: patches, parity checks, two-slot transmission and
//! the peeling decoder.
//!
//! A block of `2^(m+p+r)` channel uses is split into `2^r` sub-blocks (one per
//! patch), each holding `2^p` slots of length `2^m`. Every patch of a message
//! is sent twice within its sub-block: once in its primary slot with check
//! digit 0, and once in `primary ⊕ translate` with check digit 1.

pub mod parity;
pub mod stitch;

use std::collections::HashSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{add_chirp, BitLayout, ChirpParams, CodebookMode};
use crate::reconstruct::{reconstruct_with_known, DecoderParams};
use crate::rng::rng_from;
use crate::{Bits, Error, Result};

pub use parity::{parity_encode, ParityChecks};
pub use stitch::{tree_stitch, tree_stitch_detailed, StitchOutcome};

pub const DEFAULT_CYCLES: usize = 5;

/// Acceptance window for a fitted coefficient; true components sit at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionTest {
    /// Complex mode: keep when `|c - 1| < complex_radius`.
    pub complex_radius: f64,
    /// Real mode: keep when `|Re c - 1| < real_tol` and `|Im c| < imag_tol`.
    pub real_tol: f64,
    pub imag_tol: f64,
}

impl Default for RetentionTest {
    fn default() -> Self {
        Self {
            complex_radius: 0.3,
            real_tol: 0.1,
            imag_tol: 0.1,
        }
    }
}

impl RetentionTest {
    pub fn accepts(&self, coeff: Complex64, mode: CodebookMode) -> bool {
        match mode {
            CodebookMode::Complex => (coeff - 1.0).norm() < self.complex_radius,
            CodebookMode::Real => (coeff.re - 1.0).abs() < self.real_tol && coeff.im.abs() < self.imag_tol,
        }
    }
}

pub fn retention_test(coeff: Complex64, config: &CodeConfig) -> bool {
    config.retention.accepts(coeff, config.mode)
}

/// Parity allocation used when none is given: `[0]`, `[0, 15]`, `[0, 10, 10, 15]`.
pub fn default_parity_bits(r: usize) -> Option<Vec<usize>> {
    match r {
        0 => Some(vec![0]),
        1 => Some(vec![0, 15]),
        2 => Some(vec![0, 10, 10, 15]),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeConfig {
    pub m: usize,
    pub p: usize,
    pub r: usize,
    pub mode: CodebookMode,
    /// Parity bits per patch; `parity_bits[0]` is always 0.
    pub parity_bits: Vec<usize>,
    /// Per-entry power Q of every transmitted codeword.
    pub power: f64,
    pub decoder: DecoderParams,
    /// Peeling cycles d.
    pub cycles: usize,
    pub retention: RetentionTest,
    pub parity_seed: u64,
}

impl CodeConfig {
    /// Geometry with default decoder settings for one expected message, unit
    /// power and AWGN-calibrated stopping.
    pub fn new(m: usize, p: usize, r: usize, mode: CodebookMode) -> Result<Self> {
        let parity_bits = default_parity_bits(r)
            .ok_or_else(|| Error::InvalidConfig(format!("no default parity allocation for r = {r}")))?;
        Self::with_geometry(m, p, r, mode, parity_bits)
    }

    pub fn with_geometry(m: usize, p: usize, r: usize, mode: CodebookMode, parity_bits: Vec<usize>) -> Result<Self> {
        let config = Self {
            m,
            p,
            r,
            mode,
            parity_bits,
            power: 1.0,
            decoder: DecoderParams::for_noise(m, mode, 1.0, 3),
            cycles: DEFAULT_CYCLES,
            retention: RetentionTest::default(),
            parity_seed: 0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_parity_bits(mut self, parity_bits: Vec<usize>) -> Result<Self> {
        self.parity_bits = parity_bits;
        self.validate()?;
        Ok(self)
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self.decoder.power = power;
        self
    }

    /// Sets the iteration cap to three times the expected per-slot load
    /// `⌈2K / 2^p⌉`.
    pub fn with_expected_messages(mut self, k: usize) -> Self {
        self.decoder.max_components = 3 * (2 * k).div_ceil(self.slots()).max(1);
        self
    }

    /// Stops reconstruction only once the residual vanishes.
    pub fn noiseless(mut self) -> Self {
        self.decoder.residual_tol = DecoderParams::noiseless(self.m, self.mode, self.power, 1).residual_tol;
        self
    }

    pub fn with_cycles(mut self, cycles: usize) -> Self {
        self.cycles = cycles;
        self
    }

    pub fn with_parity_seed(mut self, seed: u64) -> Self {
        self.parity_seed = seed;
        self
    }

    pub fn with_decoder(mut self, decoder: DecoderParams) -> Self {
        self.decoder = decoder;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let layout = BitLayout::new(self.m, self.p, self.mode)?;
        if self.r > 6 {
            return Err(Error::InvalidConfig(format!("r = {} too large", self.r)));
        }
        if self.parity_bits.len() != 1 << self.r {
            return Err(Error::InvalidConfig(format!(
                "parity allocation has {} entries, expected 2^r = {}",
                self.parity_bits.len(),
                1 << self.r
            )));
        }
        if self.parity_bits[0] != 0 {
            return Err(Error::InvalidConfig("the first patch carries no parity bits".into()));
        }
        if self.parity_bits.iter().any(|&l| l >= layout.patch_bits()) {
            return Err(Error::InvalidConfig("parity allocation leaves no payload in a patch".into()));
        }
        if !(self.power > 0.0) || self.cycles == 0 {
            return Err(Error::InvalidConfig("power and cycle count must be positive".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> BitLayout {
        BitLayout::new(self.m, self.p, self.mode).expect("validated geometry")
    }

    /// Bits in one patch string (payload plus parity).
    pub fn patch_bits(&self) -> usize {
        self.mode.pb_bits(self.m) - 1 + self.p
    }

    pub fn payload_lengths(&self) -> Vec<usize> {
        self.parity_bits.iter().map(|l| self.patch_bits() - l).collect()
    }

    /// Information bits per message, B.
    pub fn message_bits(&self) -> usize {
        self.patches() * self.patch_bits() - self.parity_bits.iter().sum::<usize>()
    }

    pub fn slot_len(&self) -> usize {
        1 << self.m
    }

    pub fn slots(&self) -> usize {
        1 << self.p
    }

    pub fn patches(&self) -> usize {
        1 << self.r
    }

    pub fn sub_block_len(&self) -> usize {
        1 << (self.m + self.p)
    }

    /// Total channel uses n.
    pub fn total_len(&self) -> usize {
        1 << (self.m + self.p + self.r)
    }

    /// Short key identifying everything that affects results.
    pub fn fingerprint(&self) -> String {
        format!(
            "{}-m{}-p{}-r{}-l{:?}-d{}-c{}-a{}-S{}-tol{:e}-ps{}",
            self.mode,
            self.m,
            self.p,
            self.r,
            self.parity_bits,
            self.cycles,
            self.decoder.children,
            self.decoder.alpha,
            self.decoder.max_components,
            self.decoder.residual_tol,
            self.parity_seed
        )
    }
}

/// One patch as placed on the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchCodeword {
    /// Parameters of the primary copy (check digit 0).
    pub params: ChirpParams,
    pub primary_slot: u32,
    pub secondary_slot: u32,
}

pub fn split_message(message: &[bool], config: &CodeConfig) -> Result<Vec<Bits>> {
    let b = config.message_bits();
    if message.len() != b {
        return Err(Error::DimensionMismatch {
            expected: b,
            actual: message.len(),
        });
    }
    let mut rest = message;
    Ok(config
        .payload_lengths()
        .into_iter()
        .map(|len| {
            let (head, tail) = rest.split_at(len);
            rest = tail;
            head.to_vec()
        })
        .collect())
}

/// Maps a message to the chirp parameters and slots of each of its patches.
pub fn patch_codewords(message: &[bool], config: &CodeConfig) -> Result<Vec<PatchCodeword>> {
    let patches = parity_encode(&split_message(message, config)?, config)?;
    let layout = config.layout();
    patches
        .iter()
        .map(|bits| {
            let (params, primary_slot, translate) = layout.bits_to_params(bits)?;
            Ok(PatchCodeword {
                params,
                primary_slot,
                secondary_slot: primary_slot ^ translate,
            })
        })
        .collect()
}

/// Adds the transmission of `message` to `y` (length `2^(m+p+r)`).
pub fn superimpose(y: &mut [Complex64], message: &[bool], config: &CodeConfig) -> Result<()> {
    if y.len() != config.total_len() {
        return Err(Error::DimensionMismatch {
            expected: config.total_len(),
            actual: y.len(),
        });
    }
    let amplitude = config.power.sqrt();
    let slot_len = config.slot_len();
    for (patch, cw) in patch_codewords(message, config)?.iter().enumerate() {
        let base = patch * config.sub_block_len();
        let primary = base + cw.primary_slot as usize * slot_len;
        add_chirp(&mut y[primary..primary + slot_len], &cw.params, amplitude);
        let secondary = base + cw.secondary_slot as usize * slot_len;
        add_chirp(
            &mut y[secondary..secondary + slot_len],
            &cw.params.with_check_digit(true),
            amplitude,
        );
    }
    Ok(())
}

/// The noiseless channel signal of a single message.
pub fn chirrup_encode(message: &[bool], config: &CodeConfig) -> Result<Vec<Complex64>> {
    config.validate()?;
    let mut y = vec![Complex64::new(0.0, 0.0); config.total_len()];
    superimpose(&mut y, message, config)?;
    Ok(y)
}

/// A decoded patch string with the smallest `|c - 1|` seen for it.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchCandidate {
    pub bits: Bits,
    pub score: f64,
    /// Cycle in which the candidate was first decoded.
    pub cycle: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub messages: Vec<Bits>,
    /// Sum of patch scores per message; lower is more confident.
    pub scores: Vec<f64>,
    pub per_patch: Vec<Vec<PatchCandidate>>,
    pub stitch: StitchOutcome,
    pub slot_decodes: usize,
}

impl DecodeOutcome {
    /// The `k` most confident messages.
    pub fn top(&self, k: usize) -> Vec<Bits> {
        let mut order: Vec<usize> = (0..self.messages.len()).collect();
        order.sort_by(|&a, &b| self.scores[a].total_cmp(&self.scores[b]));
        order.into_iter().take(k).map(|i| self.messages[i].clone()).collect()
    }
}

const DECODE_DOMAIN: u64 = 0x6465_636f_6465;

struct SlotState {
    peel: Vec<ChirpParams>,
    /// Peel list length at the last decode; `None` before the first.
    decoded_with: Option<usize>,
}

struct SubBlockOutcome {
    candidates: Vec<PatchCandidate>,
    slot_decodes: usize,
}

fn decode_sub_block(block: &[Complex64], patch: usize, config: &CodeConfig, seed: u64) -> Result<SubBlockOutcome> {
    let layout = config.layout();
    let slot_len = config.slot_len();
    let mut decoder = config.decoder.clone();
    decoder.power = config.power;
    let mut slots: Vec<SlotState> = (0..config.slots())
        .map(|_| SlotState {
            peel: Vec::new(),
            decoded_with: None,
        })
        .collect();
    let mut candidates: Vec<PatchCandidate> = Vec::new();
    let mut slot_decodes = 0;

    for cycle in 0..config.cycles {
        // Slots whose peel list is unchanged since their last decode would
        // repeat it, so only the rest are visited.
        let pending: Vec<usize> = (0..slots.len())
            .filter(|&s| slots[s].decoded_with != Some(slots[s].peel.len()))
            .collect();
        if pending.is_empty() {
            break;
        }
        slot_decodes += pending.len();
        let results: Vec<Result<Vec<(ChirpParams, Complex64)>>> = pending
            .par_iter()
            .map(|&s| {
                let y = &block[s * slot_len..(s + 1) * slot_len];
                let mut rng = rng_from(seed, &[DECODE_DOMAIN, patch as u64, cycle as u64, s as u64]);
                let rec = reconstruct_with_known(y, &slots[s].peel, &decoder, &mut rng)?;
                Ok(rec
                    .found()
                    .iter()
                    .filter(|c| config.retention.accepts(c.coeff, config.mode))
                    .map(|c| (c.params.clone(), c.coeff))
                    .collect())
            })
            .collect();

        // Barrier: merge every slot's findings before the next cycle.
        let mut inserts: Vec<(usize, ChirpParams)> = Vec::new();
        for (&s, found) in pending.iter().zip(results) {
            slots[s].decoded_with = Some(slots[s].peel.len());
            for (params, coeff) in found? {
                let translate = layout.translate_of(&params);
                let secondary = params.check_digit();
                let primary = if secondary { s as u32 ^ translate } else { s as u32 };
                let twin = s as u32 ^ translate;
                let bits = layout.params_to_bits(&params.with_check_digit(false), primary)?;
                let score = (coeff - 1.0).norm();
                match candidates.iter_mut().find(|c| c.bits == bits) {
                    Some(c) => c.score = c.score.min(score),
                    None => candidates.push(PatchCandidate { bits, score, cycle }),
                }
                inserts.push((twin as usize, params.with_check_digit(!secondary)));
                inserts.push((s, params));
            }
        }
        for (slot, params) in inserts {
            if !slots[slot].peel.contains(&params) {
                slots[slot].peel.push(params);
            }
        }
    }
    Ok(SubBlockOutcome {
        candidates,
        slot_decodes,
    })
}

/// Decodes every sub-block with `config.cycles` peeling cycles, then stitches
/// patches into messages. `seed` drives the random fallback of the tree
/// search; results do not depend on thread count.
pub fn chirrup_decode_detailed(y: &[Complex64], config: &CodeConfig, seed: u64) -> Result<DecodeOutcome> {
    config.validate()?;
    if y.len() != config.total_len() {
        return Err(Error::DimensionMismatch {
            expected: config.total_len(),
            actual: y.len(),
        });
    }
    let sub = config.sub_block_len();
    let mut per_patch = Vec::with_capacity(config.patches());
    let mut slot_decodes = 0;
    for patch in 0..config.patches() {
        let out = decode_sub_block(&y[patch * sub..(patch + 1) * sub], patch, config, seed)?;
        slot_decodes += out.slot_decodes;
        per_patch.push(out.candidates);
    }
    let lists: Vec<Vec<Bits>> = per_patch
        .iter()
        .map(|l| l.iter().map(|c| c.bits.clone()).collect())
        .collect();
    let stitch = tree_stitch_detailed(&lists, config)?;

    let mut scores = Vec::with_capacity(stitch.messages.len());
    let payload_lengths = config.payload_lengths();
    for (msg, &root) in stitch.messages.iter().zip(&stitch.roots) {
        let mut score = per_patch[0][root].score;
        let mut offset = payload_lengths[0];
        for (patch, &len) in payload_lengths.iter().enumerate().skip(1) {
            let payload = &msg[offset..offset + len];
            score += per_patch[patch]
                .iter()
                .filter(|c| &c.bits[..len] == payload)
                .map(|c| c.score)
                .fold(f64::INFINITY, f64::min);
            offset += len;
        }
        scores.push(score);
    }
    Ok(DecodeOutcome {
        messages: stitch.messages.clone(),
        scores,
        per_patch,
        stitch,
        slot_decodes,
    })
}

/// All messages the decoder recovers from `y`, without truncation to K.
pub fn chirrup_decode(y: &[Complex64], config: &CodeConfig, seed: u64) -> Result<Vec<Bits>> {
    Ok(chirrup_decode_detailed(y, config, seed)?.messages)
}

/// Distinct messages, as a set.
pub fn message_set(messages: &[Bits]) -> HashSet<&Bits> {
    messages.iter().collect()
}
