//! Single-channel images, padding, and the pluggable image codec.

use std::io::{Read, Write};

use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;
use flate2::Compression;

use super::VpccError;
use crate::bytes::{ByteReader, ByteWriter};
use crate::cloud::round_half_away;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u16>,
}

impl Image {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; (width * height) as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.data[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: u16) {
        self.data[(y * self.width + x) as usize] = v;
    }
}

pub const PAD_ITERATIONS: usize = 16;

/// Fills unoccupied pixels by repeated averaging of already-filled
/// 4-neighbours (each pass reads the previous pass). Pixels still empty
/// after [`PAD_ITERATIONS`] passes take the mean of the occupied pixels.
pub fn pad_image(img: &mut Image, occupied: &[bool]) {
    let (w, h) = (img.width as usize, img.height as usize);
    let mut filled = occupied.to_vec();
    let count = occupied.iter().filter(|&&o| o).count();
    if count == 0 {
        img.data.iter_mut().for_each(|v| *v = 0);
        return;
    }
    for _ in 0..PAD_ITERATIONS {
        let prev = img.data.clone();
        let prev_filled = filled.clone();
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if prev_filled[i] {
                    continue;
                }
                let mut sum = 0u64;
                let mut n = 0u64;
                let mut take = |j: usize| {
                    if prev_filled[j] {
                        sum += prev[j] as u64;
                        n += 1;
                    }
                };
                if x > 0 {
                    take(i - 1);
                }
                if x + 1 < w {
                    take(i + 1);
                }
                if y > 0 {
                    take(i - w);
                }
                if y + 1 < h {
                    take(i + w);
                }
                if n > 0 {
                    img.data[i] = round_half_away(sum as f64 / n as f64) as u16;
                    filled[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    if filled.iter().any(|&f| !f) {
        let mean: f64 = img
            .data
            .iter()
            .zip(occupied)
            .filter(|(_, &o)| o)
            .map(|(&v, _)| v as f64)
            .sum::<f64>()
            / count as f64;
        let mean = round_half_away(mean) as u16;
        for (v, f) in img.data.iter_mut().zip(&filled) {
            if !f {
                *v = mean;
            }
        }
    }
}

/// A 2D codec for one image plane; `qstep` 1 must be lossless.
pub trait ImageCodec: Sync {
    fn encode(&self, img: &Image, qstep: u16) -> Vec<u8>;
    fn decode(&self, data: &[u8]) -> Result<Image, VpccError>;
}

/// Uniform scalar quantization followed by deflate.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceCodec;

pub(crate) fn deflate(raw: &[u8]) -> Vec<u8> {
    let mut z = ZlibEncoder::new(Vec::new(), Compression::best());
    z.write_all(raw).expect("writing to a Vec cannot fail");
    z.finish().expect("writing to a Vec cannot fail")
}

pub(crate) fn inflate(data: &[u8], limit: usize) -> Result<Vec<u8>, VpccError> {
    let mut out = Vec::new();
    ZlibDecoder::new(data)
        .take(limit as u64 + 1)
        .read_to_end(&mut out)
        .map_err(|_| VpccError::Corrupt("deflate payload"))?;
    if out.len() > limit {
        return Err(VpccError::Corrupt("deflate payload too large"));
    }
    Ok(out)
}

/// Largest plane the decoder will accept, in pixels.
const MAX_PIXELS: usize = 1 << 28;

impl ImageCodec for ReferenceCodec {
    fn encode(&self, img: &Image, qstep: u16) -> Vec<u8> {
        let qstep = qstep.max(1);
        let q: Vec<u16> = img
            .data
            .iter()
            .map(|&v| round_half_away(v as f64 / qstep as f64) as u16)
            .collect();
        let wide = q.iter().any(|&v| v > 255);
        let mut raw = Vec::with_capacity(q.len() * 2);
        for v in &q {
            if wide {
                raw.extend_from_slice(&v.to_le_bytes());
            } else {
                raw.push(*v as u8);
            }
        }
        let mut w = ByteWriter::new();
        w.u32(img.width).u32(img.height).u16(qstep).u8(if wide { 16 } else { 8 });
        w.section(&deflate(&raw));
        w.into_inner()
    }

    fn decode(&self, data: &[u8]) -> Result<Image, VpccError> {
        let mut r = ByteReader::new(data);
        let width = r.u32()?;
        let height = r.u32()?;
        let qstep = r.u16()?.max(1);
        let bits = r.u8()?;
        let n = width as usize * height as usize;
        if n > MAX_PIXELS || !(bits == 8 || bits == 16) {
            return Err(VpccError::Corrupt("image header"));
        }
        let bytes_per = bits as usize / 8;
        let raw = inflate(r.section()?, n * bytes_per)?;
        if raw.len() != n * bytes_per {
            return Err(VpccError::Corrupt("image size"));
        }
        let data = (0..n)
            .map(|i| {
                let q = if bytes_per == 2 {
                    u16::from_le_bytes([raw[2 * i], raw[2 * i + 1]])
                } else {
                    raw[i] as u16
                };
                q.saturating_mul(qstep)
            })
            .collect();
        Ok(Image { width, height, data })
    }
}
