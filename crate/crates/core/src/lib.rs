//! Binary chirp codes and the CHIRRUP decoder for unsourced multiple access.
//!
//! Messages are mapped to second-order Reed–Muller (binary chirp) codewords,
//! each sent to two slots of a slotted AWGN channel. The receiver recovers the
//! active chirps in every slot with a sublinear shift-and-multiply search,
//! peels decoded components across twin slots, and stitches multi-patch
//! messages back together with random parity checks.
//!
//! The crate also carries a One-Step-Thresholding baseline and its Gaussian
//! asymptotic phase-transition predictor.

pub mod channel;
pub mod chirrup;
pub mod codebook;
mod error;
pub mod gf2;
pub mod ost;
pub mod reconstruct;
pub mod rng;
pub mod wht;

pub use num_complex::Complex64;

pub use channel::{ebn0_db, per_user_error, ExperimentResult, PointEstimate};
pub use ost::{ost_decode, ost_phase_transition, ost_predict_k, ost_rates, OstAsymptotics, VarianceConvention};
pub use chirrup::{chirrup_decode, chirrup_encode, tree_stitch, CodeConfig, RetentionTest};
pub use codebook::{BitLayout, ChirpParams, CodebookMode};
pub use error::{Error, Result};
pub use reconstruct::{chirp_reconstruct, DecodedComponent, DecoderParams};

/// A bit string, most significant position first in the order fields are laid out.
pub type Bits = Vec<bool>;
