//! Bit-level I/O and an adaptive binary arithmetic coder.

mod arith;
mod bits;
mod ints;

pub use arith::{ArithDecoder, ArithEncoder, ContextModel};
pub use bits::{decode_uint_exp_golomb, encode_uint_exp_golomb, BitReader, BitWriter};
pub use ints::{IntContexts, MagnitudeContexts};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EntropyError {
    #[error("bit stream exhausted at bit {0}")]
    Exhausted(usize),
    #[error("exp-golomb prefix too long")]
    Overflow,
}
