//! Adaptive binarization of integers for residual and coefficient coding.

use super::{ArithDecoder, ArithEncoder, ContextModel};

const UNARY_LEN: usize = 14;

/// Contexts for non-negative magnitudes: `>0`, `>1`, a truncated unary run,
/// then an Exp-Golomb escape in bypass mode.
#[derive(Debug, Clone)]
pub struct MagnitudeContexts {
    gt0: ContextModel,
    gt1: ContextModel,
    unary: [ContextModel; UNARY_LEN],
}

impl Default for MagnitudeContexts {
    fn default() -> Self {
        Self {
            gt0: ContextModel::new(),
            gt1: ContextModel::new(),
            unary: [ContextModel::new(); UNARY_LEN],
        }
    }
}

impl MagnitudeContexts {
    pub fn encode(&mut self, enc: &mut ArithEncoder, v: u64) {
        enc.encode(&mut self.gt0, v > 0);
        if v == 0 {
            return;
        }
        enc.encode(&mut self.gt1, v > 1);
        if v == 1 {
            return;
        }
        let rest = v - 2;
        for i in 0..UNARY_LEN {
            let more = rest > i as u64;
            enc.encode(&mut self.unary[i], more);
            if !more {
                return;
            }
        }
        enc.encode_exp_golomb_bypass(rest - UNARY_LEN as u64, 1);
    }

    pub fn decode(&mut self, dec: &mut ArithDecoder<'_>) -> Option<u64> {
        if !dec.decode(&mut self.gt0) {
            return Some(0);
        }
        if !dec.decode(&mut self.gt1) {
            return Some(1);
        }
        for i in 0..UNARY_LEN {
            if !dec.decode(&mut self.unary[i]) {
                return Some(2 + i as u64);
            }
        }
        let esc = dec.decode_exp_golomb_bypass(1)?;
        (2 + UNARY_LEN as u64).checked_add(esc)
    }
}

/// Signed integers: magnitude plus an adaptive sign bit.
#[derive(Debug, Clone, Default)]
pub struct IntContexts {
    magnitude: MagnitudeContexts,
    sign: ContextModel,
}

impl IntContexts {
    pub fn encode(&mut self, enc: &mut ArithEncoder, v: i64) {
        self.magnitude.encode(enc, v.unsigned_abs());
        if v != 0 {
            enc.encode(&mut self.sign, v < 0);
        }
    }

    pub fn decode(&mut self, dec: &mut ArithDecoder<'_>) -> Option<i64> {
        let m = self.magnitude.decode(dec)?;
        if m == 0 {
            return Some(0);
        }
        let m = i64::try_from(m).ok()?;
        Some(if dec.decode(&mut self.sign) { -m } else { m })
    }
}
