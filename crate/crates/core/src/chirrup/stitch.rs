//! Tree decoding of per-patch candidate lists into whole messages.

use std::collections::HashSet;

use crate::chirrup::parity::ParityChecks;
use crate::chirrup::CodeConfig;
use crate::{Bits, Error, Result};

/// Partial paths kept per root before the root is abandoned as ambiguous.
const MAX_PARTIAL_PATHS: usize = 256;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StitchOutcome {
    pub messages: Vec<Bits>,
    /// Index of the first-patch candidate each message grew from.
    pub roots: Vec<usize>,
    /// Roots with more than one complete, parity-consistent path.
    pub ambiguous: usize,
    /// Roots with no complete path.
    pub dead: usize,
}

/// Joins per-patch candidates into messages, breadth first. A candidate for
/// patch `i` extends a path iff its parity bits equal `G_i` applied to the
/// path's accumulated payload. Only roots with exactly one complete path
/// produce a message.
pub fn tree_stitch(per_patch: &[Vec<Bits>], config: &CodeConfig) -> Result<Vec<Bits>> {
    Ok(tree_stitch_detailed(per_patch, config)?.messages)
}

pub fn tree_stitch_detailed(per_patch: &[Vec<Bits>], config: &CodeConfig) -> Result<StitchOutcome> {
    if per_patch.len() != config.patches() {
        return Err(Error::DimensionMismatch {
            expected: config.patches(),
            actual: per_patch.len(),
        });
    }
    let l = config.patch_bits();
    for cand in per_patch.iter().flatten() {
        if cand.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                actual: cand.len(),
            });
        }
    }
    if config.patches() == 1 {
        return Ok(StitchOutcome {
            messages: per_patch[0].clone(),
            roots: (0..per_patch[0].len()).collect(),
            ..Default::default()
        });
    }

    // Deduplicate later lists; equal candidates would fake an ambiguity.
    let later: Vec<Vec<&Bits>> = per_patch[1..]
        .iter()
        .map(|list| {
            let mut seen = HashSet::new();
            list.iter().filter(|c| seen.insert(*c)).collect()
        })
        .collect();
    let checks = ParityChecks::new(config);
    let mut out = StitchOutcome::default();
    for (root, first) in per_patch[0].iter().enumerate() {
        let mut paths: Vec<Bits> = vec![first.clone()];
        for (k, list) in later.iter().enumerate() {
            let patch = k + 1;
            let payload_len = l - config.parity_bits[patch];
            let mut next = Vec::new();
            for path in &paths {
                let expected = checks.parity(patch, path);
                for cand in list {
                    if cand[payload_len..] == expected[..] {
                        let mut grown = path.clone();
                        grown.extend_from_slice(&cand[..payload_len]);
                        next.push(grown);
                    }
                }
            }
            paths = next;
            if paths.is_empty() || paths.len() > MAX_PARTIAL_PATHS {
                break;
            }
        }
        match paths.len() {
            0 => out.dead += 1,
            1 => {
                out.messages.push(paths.pop().unwrap());
                out.roots.push(root);
            }
            _ => out.ambiguous += 1,
        }
    }
    Ok(out)
}
