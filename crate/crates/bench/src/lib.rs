//! Fixtures shared by the benchmarks.

use chirrup_core::channel::{draw_messages, transmit, Noise};
use chirrup_core::codebook::{encode_chirp, ChirpParams};
use chirrup_core::rng::rng_from;
use chirrup_core::{CodeConfig, CodebookMode, Complex64};

/// Noiseless sum of `k` random unit-power chirps of length `2^m`.
pub fn chirp_mixture(m: usize, k: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = rng_from(seed, &[m as u64, k as u64]);
    let mut y = vec![Complex64::new(0.0, 0.0); 1 << m];
    for _ in 0..k {
        let params = ChirpParams::random(m, CodebookMode::Complex, &mut rng);
        let c = encode_chirp(&params, 1.0, CodebookMode::Complex).expect("valid chirp");
        for (a, b) in y.iter_mut().zip(c) {
            *a += b;
        }
    }
    y
}

/// A full CHIRRUP block with `k` messages at power `q`, plus the decoding
/// configuration.
pub fn chirrup_block(m: usize, p: usize, r: usize, k: usize, q: f64, seed: u64) -> (CodeConfig, Vec<Complex64>) {
    let config = CodeConfig::new(m, p, r, CodebookMode::Complex)
        .expect("valid geometry")
        .with_expected_messages(k)
        .with_power(q);
    let mut rng = rng_from(seed, &[]);
    let messages = draw_messages(k, config.message_bits(), &mut rng);
    let y = transmit(&messages, &config, Noise::Awgn, &mut rng).expect("valid block");
    (config, y)
}
