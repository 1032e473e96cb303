//! Random linear parity checks that tie the patches of one message together.
//!
//! Patch `i > 0` carries `l_i` bits equal to `G_i` times the concatenated
//! payloads of patches `0..i`. Each `G_i` is drawn from a ChaCha stream keyed
//! on the parity seed and `i`, so encoder and decoder agree without sharing
//! anything but the configuration.

use crate::chirrup::CodeConfig;
use crate::gf2::BitMatrix;
use crate::rng::rng_from;
use crate::{Bits, Error, Result};

const PARITY_DOMAIN: u64 = 0x7061_7269_7479;

#[derive(Debug, Clone)]
pub struct ParityChecks {
    /// `matrices[i]` is `G_i`; `None` for the first patch.
    matrices: Vec<Option<BitMatrix>>,
}

impl ParityChecks {
    pub fn new(config: &CodeConfig) -> Self {
        let lens = config.payload_lengths();
        let mut preceding = 0;
        let matrices = (0..config.patches())
            .map(|i| {
                let g = (i > 0).then(|| {
                    let mut rng = rng_from(config.parity_seed, &[PARITY_DOMAIN, i as u64]);
                    BitMatrix::random(config.parity_bits[i], preceding, &mut rng)
                });
                preceding += lens[i];
                g
            })
            .collect();
        Self { matrices }
    }

    pub fn matrix(&self, patch: usize) -> Option<&BitMatrix> {
        self.matrices[patch].as_ref()
    }

    /// Parity bits for `patch` given the payloads of all earlier patches.
    pub fn parity(&self, patch: usize, preceding_payload: &[bool]) -> Bits {
        match &self.matrices[patch] {
            Some(g) => g.mul_vec(preceding_payload),
            None => Vec::new(),
        }
    }
}

/// Appends each patch's parity bits to its payload.
pub fn parity_encode(patch_payloads: &[Bits], config: &CodeConfig) -> Result<Vec<Bits>> {
    let lens = config.payload_lengths();
    if patch_payloads.len() != lens.len() {
        return Err(Error::DimensionMismatch {
            expected: lens.len(),
            actual: patch_payloads.len(),
        });
    }
    for (payload, &len) in patch_payloads.iter().zip(&lens) {
        if payload.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                actual: payload.len(),
            });
        }
    }
    let checks = ParityChecks::new(config);
    let mut preceding: Bits = Vec::new();
    let mut out = Vec::with_capacity(lens.len());
    for (i, payload) in patch_payloads.iter().enumerate() {
        let mut patch = payload.clone();
        patch.extend(checks.parity(i, &preceding));
        preceding.extend_from_slice(payload);
        out.push(patch);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::CodebookMode;
    use crate::rng::rng_from;
    use rand::Rng;

    fn random_payloads(config: &CodeConfig, seed: u64) -> Vec<Bits> {
        let mut rng = rng_from(seed, &[]);
        config
            .payload_lengths()
            .iter()
            .map(|&len| (0..len).map(|_| rng.random()).collect())
            .collect()
    }

    #[test]
    fn single_patch_is_identity() {
        let config = CodeConfig::new(5, 3, 0, CodebookMode::Complex).unwrap();
        let payloads = random_payloads(&config, 1);
        assert_eq!(parity_encode(&payloads, &config).unwrap(), payloads);
    }

    #[test]
    fn zero_payload_gives_zero_parity() {
        let config = CodeConfig::new(5, 3, 2, CodebookMode::Complex).unwrap();
        let payloads: Vec<Bits> = config.payload_lengths().iter().map(|&l| vec![false; l]).collect();
        for patch in parity_encode(&payloads, &config).unwrap() {
            assert!(patch.iter().all(|&b| !b));
        }
    }

    #[test]
    fn flipping_a_bit_flips_the_matching_column() {
        let config = CodeConfig::new(6, 4, 1, CodebookMode::Complex)
            .unwrap()
            .with_parity_bits(vec![0, 15])
            .unwrap();
        let payloads = random_payloads(&config, 2);
        let base = parity_encode(&payloads, &config).unwrap();
        let g = ParityChecks::new(&config).matrix(1).unwrap().clone();
        let len1 = payloads[1].len();
        for col in [0, 7, payloads[0].len() - 1] {
            let mut flipped = payloads.clone();
            flipped[0][col] ^= true;
            let out = parity_encode(&flipped, &config).unwrap();
            for k in 0..15 {
                assert_eq!(out[1][len1 + k] ^ base[1][len1 + k], g.get(k, col));
            }
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let config = CodeConfig::new(5, 3, 1, CodebookMode::Complex).unwrap();
        let mut payloads = random_payloads(&config, 3);
        payloads[1].pop();
        assert!(matches!(
            parity_encode(&payloads, &config),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
