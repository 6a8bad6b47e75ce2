//! Binary range coder with count-based adaptive contexts.
//!
//! The coder is the classic carry-propagating 32-bit range coder; each
//! binary decision is coded against a 16-bit probability of a zero.

const PROB_BITS: u32 = 16;
const PROB_ONE: u32 = 1 << PROB_BITS;
const TOP: u32 = 1 << 24;
/// Counts are halved once their sum passes this.
const COUNT_LIMIT: u32 = 1024;

/// Adaptive estimate of the probability of a zero, from halved counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextModel {
    zeros: u16,
    ones: u16,
}

impl Default for ContextModel {
    fn default() -> Self {
        Self { zeros: 1, ones: 1 }
    }
}

impl ContextModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Probability of a zero scaled to 16 bits, always in `[1, 65535]`.
    pub fn p0(&self) -> u32 {
        let total = self.zeros as u32 + self.ones as u32;
        ((self.zeros as u32) << PROB_BITS) / total
    }

    pub fn probability_zero(&self) -> f64 {
        self.p0() as f64 / PROB_ONE as f64
    }

    pub fn update(&mut self, bit: bool) {
        if bit {
            self.ones += 1;
        } else {
            self.zeros += 1;
        }
        if self.zeros as u32 + self.ones as u32 > COUNT_LIMIT {
            self.zeros = self.zeros.div_ceil(2);
            self.ones = self.ones.div_ceil(2);
        }
    }
}

#[inline]
fn clamp_p0(p0: u32) -> u32 {
    p0.clamp(1, PROB_ONE - 1)
}

#[derive(Debug, Clone)]
pub struct ArithEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for ArithEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl ArithEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut temp = self.cache;
            loop {
                self.out.push(temp.wrapping_add(carry));
                temp = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    fn encode_with(&mut self, bit: bool, p0: u32) {
        let bound = (self.range >> PROB_BITS) * clamp_p0(p0);
        if bit {
            self.low += bound as u64;
            self.range -= bound;
        } else {
            self.range = bound;
        }
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    /// Codes one bit against `ctx` and adapts it.
    pub fn encode(&mut self, ctx: &mut ContextModel, bit: bool) {
        self.encode_with(bit, ctx.p0());
        ctx.update(bit);
    }

    /// Codes one equiprobable bit.
    pub fn encode_bypass(&mut self, bit: bool) {
        self.encode_with(bit, PROB_ONE / 2);
    }

    pub fn encode_bits_bypass(&mut self, value: u64, n: u32) {
        for i in (0..n).rev() {
            self.encode_bypass((value >> i) & 1 == 1);
        }
    }

    /// Exp-Golomb code of order `k` with bypass bits.
    pub fn encode_exp_golomb_bypass(&mut self, value: u64, k: u32) {
        let v = value as u128 + (1u128 << k);
        let len = 128 - v.leading_zeros();
        for _ in 0..(len - 1 - k) {
            self.encode_bypass(false);
        }
        for i in (0..len).rev() {
            self.encode_bypass((v >> i) & 1 == 1);
        }
    }

    /// Bytes emitted so far plus the pending carry chain.
    pub fn approx_len(&self) -> usize {
        self.out.len() + self.cache_size as usize + 4
    }

    /// Flushes the coder state; the result is byte-aligned.
    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

#[derive(Debug, Clone)]
pub struct ArithDecoder<'a> {
    data: &'a [u8],
    pos: usize,
    range: u32,
    code: u32,
}

impl<'a> ArithDecoder<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        let mut d = Self {
            data,
            pos: 0,
            range: u32::MAX,
            code: 0,
        };
        for _ in 0..5 {
            d.code = (d.code << 8) | d.next_byte() as u32;
        }
        d
    }

    fn next_byte(&mut self) -> u8 {
        let b = self.data.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    /// True when the decoder has consumed bytes beyond the end of its input.
    pub fn overran(&self) -> bool {
        self.pos > self.data.len() + 1
    }

    fn decode_with(&mut self, p0: u32) -> bool {
        let bound = (self.range >> PROB_BITS) * clamp_p0(p0);
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte() as u32;
        }
        bit
    }

    pub fn decode(&mut self, ctx: &mut ContextModel) -> bool {
        let bit = self.decode_with(ctx.p0());
        ctx.update(bit);
        bit
    }

    pub fn decode_bypass(&mut self) -> bool {
        self.decode_with(PROB_ONE / 2)
    }

    pub fn decode_bits_bypass(&mut self, n: u32) -> u64 {
        let mut v = 0u64;
        for _ in 0..n {
            v = v << 1 | self.decode_bypass() as u64;
        }
        v
    }

    /// Returns `None` when the prefix is implausibly long (corrupt input).
    pub fn decode_exp_golomb_bypass(&mut self, k: u32) -> Option<u64> {
        let mut zeros = 0u32;
        while !self.decode_bypass() {
            zeros += 1;
            if zeros + k > 63 {
                return None;
            }
        }
        let rest = self.decode_bits_bypass(zeros + k);
        let v = (1u128 << (zeros + k)) | rest as u128;
        Some((v - (1u128 << k)) as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn entropy(p: f64) -> f64 {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }

    #[test]
    fn probability_stays_inside_unit_interval() {
        let mut c = ContextModel::new();
        for _ in 0..100_000 {
            c.update(false);
            let p = c.probability_zero();
            assert!(p > 0.0 && p < 1.0);
        }
        for _ in 0..100_000 {
            c.update(true);
            let p = c.probability_zero();
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn random_bits_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bits: Vec<bool> = (0..10_000).map(|_| rng.gen()).collect();
        let mut ctx = ContextModel::new();
        let mut enc = ArithEncoder::new();
        for &b in &bits {
            enc.encode(&mut ctx, b);
        }
        let bytes = enc.finish();
        let mut ctx = ContextModel::new();
        let mut dec = ArithDecoder::new(&bytes);
        for &b in &bits {
            assert_eq!(dec.decode(&mut ctx), b);
        }
    }

    #[test]
    fn all_zero_stream_is_tiny() {
        let mut ctx = ContextModel::new();
        let mut enc = ArithEncoder::new();
        for _ in 0..1024 {
            enc.encode(&mut ctx, false);
        }
        let bytes = enc.finish();
        assert!(bytes.len() < 64, "{} bytes", bytes.len());
    }

    #[test]
    fn alternating_bits_with_parity_contexts() {
        let mut ctxs = [ContextModel::new(); 2];
        let mut enc = ArithEncoder::new();
        for i in 0..1024 {
            enc.encode(&mut ctxs[i % 2], i % 2 == 1);
        }
        let bytes = enc.finish();
        assert!(bytes.len() < 32, "{} bytes", bytes.len());
        let mut ctxs = [ContextModel::new(); 2];
        let mut dec = ArithDecoder::new(&bytes);
        for i in 0..1024 {
            assert_eq!(dec.decode(&mut ctxs[i % 2]), i % 2 == 1);
        }
    }

    #[test]
    fn bernoulli_streams_approach_entropy() {
        let n = 100_000;
        for (seed, p) in [(10u64, 0.1), (11, 0.3), (12, 0.5)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ctx = ContextModel::new();
            let mut enc = ArithEncoder::new();
            for _ in 0..n {
                enc.encode(&mut ctx, rng.gen_bool(p));
            }
            let bits = enc.finish().len() as f64 * 8.0;
            let ideal = n as f64 * entropy(p);
            assert!((bits - ideal).abs() / ideal < 0.05, "p={p}: {bits} vs {ideal}");
        }
    }

    #[test]
    fn mixed_context_bypass_and_golomb() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ops: Vec<(u8, u64)> = (0..5000)
            .map(|_| match rng.gen_range(0..3) {
                0 => (0, rng.gen_range(0..2)),
                1 => (1, rng.gen_range(0..2)),
                _ => (2, rng.gen_range(0..100_000)),
            })
            .collect();
        let mut ctxs = [ContextModel::new(); 4];
        let mut enc = ArithEncoder::new();
        for (i, &(kind, v)) in ops.iter().enumerate() {
            match kind {
                0 => enc.encode(&mut ctxs[i % 4], v == 1),
                1 => enc.encode_bypass(v == 1),
                _ => enc.encode_exp_golomb_bypass(v, 2),
            }
        }
        let bytes = enc.finish();
        let mut ctxs = [ContextModel::new(); 4];
        let mut dec = ArithDecoder::new(&bytes);
        for (i, &(kind, v)) in ops.iter().enumerate() {
            let got = match kind {
                0 => dec.decode(&mut ctxs[i % 4]) as u64,
                1 => dec.decode_bypass() as u64,
                _ => dec.decode_exp_golomb_bypass(2).unwrap(),
            };
            assert_eq!(got, v);
        }
    }
}
