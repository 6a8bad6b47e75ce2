use super::EntropyError;

/// MSB-first bit packer.
#[derive(Debug, Clone, Default)]
pub struct BitWriter {
    buf: Vec<u8>,
    nbits: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write_bit(&mut self, bit: bool) {
        if self.nbits % 8 == 0 {
            self.buf.push(0);
        }
        if bit {
            let last = self.buf.last_mut().unwrap();
            *last |= 0x80 >> (self.nbits % 8);
        }
        self.nbits += 1;
    }

    /// Writes the low `n` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, n: u32) {
        for i in (0..n).rev() {
            self.write_bit((value >> i) & 1 == 1);
        }
    }

    pub fn bit_len(&self) -> usize {
        self.nbits
    }

    /// Pads with zeros to a byte boundary and returns the buffer.
    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn read_bit(&mut self) -> Result<bool, EntropyError> {
        let byte = *self.data.get(self.pos / 8).ok_or(EntropyError::Exhausted(self.pos))?;
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, n: u32) -> Result<u64, EntropyError> {
        let mut v = 0u64;
        for _ in 0..n {
            v = v << 1 | self.read_bit()? as u64;
        }
        Ok(v)
    }

    pub fn bit_position(&self) -> usize {
        self.pos
    }
}

/// Writes `value` as a k-th order Exp-Golomb code.
pub fn encode_uint_exp_golomb(w: &mut BitWriter, value: u64, k: u32) {
    let v = value as u128 + (1u128 << k);
    let len = 128 - v.leading_zeros();
    for _ in 0..(len - 1 - k) {
        w.write_bit(false);
    }
    for i in (0..len).rev() {
        w.write_bit((v >> i) & 1 == 1);
    }
}

pub fn decode_uint_exp_golomb(r: &mut BitReader<'_>, k: u32) -> Result<u64, EntropyError> {
    let mut zeros = 0u32;
    while !r.read_bit()? {
        zeros += 1;
        if zeros + k > 63 {
            return Err(EntropyError::Overflow);
        }
    }
    let rest = r.read_bits(zeros + k)?;
    let v = (1u128 << (zeros + k)) | rest as u128;
    Ok((v - (1u128 << k)) as u64)
}
