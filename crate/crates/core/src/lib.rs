//! Product codes with shortened BCH components: bounded distance decoding,
//! conventional iterative BDD (IBDD) and IBDD with scaled reliability
//! (IBDD-SR), a BICM/AWGN channel and a Monte Carlo BER harness.
//!
//! Channel and decoder arithmetic is generic over [`Real`] (`f32`/`f64`);
//! the aliases below fix the scalar for everyday use.

pub mod bch;
pub mod channel;
pub mod decoder;
pub mod galois;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod product;
pub mod scalar;
pub mod sim;

pub use bch::{BchCode, BchError, DecodeOutcome, DecodeStatus};
pub use channel::{
    ebn0_to_sigma2, hard_decision, Channel, ChannelConfig, ChannelError, Interleaver,
    InterleaverMode, Modulation,
};
pub use decoder::{
    extract_message, ibdd, ibdd_sr, DecoderError, IterationConfig, IterativeDecoder,
};
pub use galois::{Field, GaloisError};
pub use product::{BitMatrix, ProductCode, ProductError};
pub use scalar::Real;
pub use sim::{BerMode, BerPoint, DecoderKind, SimConfig, SimError};

/// LLR matrix in double precision.
pub type LlrMatrix = channel::LlrMatrix<f64>;
/// LLR matrix in single precision.
pub type LlrMatrix32 = channel::LlrMatrix<f32>;
