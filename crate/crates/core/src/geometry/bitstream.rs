//! The `GPCB` geometry container.

use super::prep::{ConversionParams, QuantizationParams};
use super::GeometryError;
use crate::bytes::{ByteReader, ByteWriter, FrameError};

const MAGIC: &str = "GPCB";
const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GeometryMode {
    Lossless,
    Trisoup,
}

/// One independently decodable slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceStream {
    /// Added to every decoded voxel.
    pub origin: [u32; 3],
    pub depth: u32,
    /// Level where the octree stops; equals `depth` for lossless slices.
    pub level: u32,
    pub dcm: bool,
    /// Number of input points in the slice.
    pub point_count: u32,
    pub occupancy: Vec<u8>,
    pub dcm_bits: Vec<u8>,
    pub trisoup: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryBitstream {
    pub mode: GeometryMode,
    pub conversion: ConversionParams,
    pub quantization: Option<QuantizationParams>,
    pub slices: Vec<SliceStream>,
}

impl GeometryBitstream {
    pub fn point_count(&self) -> usize {
        self.slices.iter().map(|s| s.point_count as usize).sum()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.raw(MAGIC.as_bytes()).u8(VERSION);
        w.u8(match self.mode {
            GeometryMode::Lossless => 0,
            GeometryMode::Trisoup => 1,
        });
        for t in self.conversion.translation {
            w.f64(t);
        }
        w.f64(self.conversion.scale);
        match &self.quantization {
            None => {
                w.u8(0);
            }
            Some(q) => {
                w.u8(1).f64(q.scale);
                for m in q.min {
                    w.f64(m);
                }
                w.u8(q.dedup as u8);
            }
        }
        w.u32(self.slices.len() as u32);
        for s in &self.slices {
            for o in s.origin {
                w.u32(o);
            }
            w.u8(s.depth as u8).u8(s.level as u8).u8(s.dcm as u8).u32(s.point_count);
            w.section(&s.occupancy).section(&s.dcm_bits).section(&s.trisoup);
        }
        w.into_inner()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, GeometryError> {
        let mut r = ByteReader::new(data);
        r.expect_magic(MAGIC)?;
        let version = r.u8()?;
        if version != VERSION {
            return Err(FrameError::Version(version).into());
        }
        let mode = match r.u8()? {
            0 => GeometryMode::Lossless,
            1 => GeometryMode::Trisoup,
            _ => return Err(FrameError::Invalid("geometry mode").into()),
        };
        let translation = [r.f64()?, r.f64()?, r.f64()?];
        let conversion = ConversionParams {
            translation,
            scale: r.f64()?,
        };
        if !conversion.is_valid() {
            return Err(FrameError::Invalid("conversion scale").into());
        }
        let quantization = match r.u8()? {
            0 => None,
            1 => {
                let scale = r.f64()?;
                let min = [r.f64()?, r.f64()?, r.f64()?];
                let dedup = r.u8()? != 0;
                let q = QuantizationParams { scale, min, dedup };
                if !q.is_valid() {
                    return Err(FrameError::Invalid("quantization scale").into());
                }
                Some(q)
            }
            _ => return Err(FrameError::Invalid("quantization flag").into()),
        };
        let count = r.u32()? as usize;
        // Each slice header takes at least 31 bytes.
        if count > r.remaining() / 31 {
            return Err(FrameError::Invalid("slice count").into());
        }
        let mut slices = Vec::with_capacity(count);
        for _ in 0..count {
            let origin = [r.u32()?, r.u32()?, r.u32()?];
            let depth = r.u8()? as u32;
            let level = r.u8()? as u32;
            let dcm = r.u8()? != 0;
            let point_count = r.u32()?;
            if depth > crate::spatial::MAX_OCTREE_DEPTH || level > depth {
                return Err(FrameError::Invalid("slice depth").into());
            }
            slices.push(SliceStream {
                origin,
                depth,
                level,
                dcm,
                point_count,
                occupancy: r.section()?.to_vec(),
                dcm_bits: r.section()?.to_vec(),
                trisoup: r.section()?.to_vec(),
            });
        }
        if r.remaining() != 0 {
            return Err(FrameError::Invalid("trailing bytes").into());
        }
        Ok(Self {
            mode,
            conversion,
            quantization,
            slices,
        })
    }
}
