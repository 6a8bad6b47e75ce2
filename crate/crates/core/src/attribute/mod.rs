//! Attribute coding: color transfer, level-of-detail prediction, lifting and
//! RAHT, plus the `GPCA` container.

mod lifting;
mod lod;
mod predict;
mod raht;
mod transfer;

pub use lifting::{influence_weights, lifting_forward, lifting_inverse, update_coefficient};
pub use lod::{default_thresholds, generate_lod, validate_thresholds, LodPartition};
pub use predict::{predict_value, prediction_weights, Predictors};
pub use raht::{butterfly, raht_forward, raht_inverse, RahtPlan};
pub use transfer::{attribute_transfer, recolor};

use rayon::prelude::*;
use thiserror::Error;

use crate::bytes::{ByteReader, ByteWriter, FrameError};
use crate::cloud::{CloudError, ColorSpace, PointCloud};

#[derive(Debug, Error)]
pub enum AttributeError {
    #[error("cloud has no colors")]
    MissingColors,
    #[error("invalid level-of-detail thresholds: {0}")]
    InvalidThresholds(String),
    #[error("stream codes {expected} points but the geometry has {got}")]
    PointCountMismatch { expected: usize, got: usize },
    #[error("stream was produced by a different coder")]
    CoderMismatch,
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Cloud(#[from] CloudError),
    #[error("corrupt attribute stream: {0}")]
    Corrupt(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AttributeCoder {
    Raht,
    Predict,
    Lifting,
}

impl AttributeCoder {
    fn tag(self) -> u8 {
        match self {
            Self::Raht => 0,
            Self::Predict => 1,
            Self::Lifting => 2,
        }
    }

    fn from_tag(t: u8) -> Option<Self> {
        match t {
            0 => Some(Self::Raht),
            1 => Some(Self::Predict),
            2 => Some(Self::Lifting),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AttributeConfig {
    pub coder: AttributeCoder,
    /// Per-channel quantization step; 0 codes losslessly (1 also does for
    /// the predict coder).
    pub qsteps: [f64; 3],
    /// Neighbours per prediction.
    pub k: usize,
    /// Number of detail levels when `thresholds` is unset.
    pub lod_count: usize,
    pub thresholds: Option<Vec<f64>>,
}

impl Default for AttributeConfig {
    fn default() -> Self {
        Self {
            coder: AttributeCoder::Raht,
            qsteps: [0.0; 3],
            k: 3,
            lod_count: 8,
            thresholds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeBitstream {
    pub coder: AttributeCoder,
    pub color_space: ColorSpace,
    pub qsteps: [f64; 3],
    /// Step actually applied per channel (RAHT picks one when lossless).
    pub steps: [f64; 3],
    pub k: u32,
    pub thresholds: Vec<f64>,
    pub point_count: u32,
    pub channels: [Vec<u8>; 3],
}

const MAGIC: &str = "GPCA";
const VERSION: u8 = 1;

impl AttributeBitstream {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.raw(MAGIC.as_bytes()).u8(VERSION).u8(self.coder.tag());
        w.u8(match self.color_space {
            ColorSpace::Rgb => 0,
            ColorSpace::Yuv => 1,
        });
        for v in self.qsteps.iter().chain(&self.steps) {
            w.f64(*v);
        }
        w.u8(self.k as u8).u8(self.thresholds.len() as u8);
        for t in &self.thresholds {
            w.f64(*t);
        }
        w.u32(self.point_count);
        for c in &self.channels {
            w.section(c);
        }
        w.into_inner()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, AttributeError> {
        let mut r = ByteReader::new(data);
        r.expect_magic(MAGIC)?;
        let version = r.u8()?;
        if version != VERSION {
            return Err(FrameError::Version(version).into());
        }
        let coder = AttributeCoder::from_tag(r.u8()?).ok_or(FrameError::Invalid("attribute coder"))?;
        let color_space = match r.u8()? {
            0 => ColorSpace::Rgb,
            1 => ColorSpace::Yuv,
            _ => return Err(FrameError::Invalid("color space").into()),
        };
        let mut qsteps = [0.0; 3];
        let mut steps = [0.0; 3];
        for v in qsteps.iter_mut().chain(steps.iter_mut()) {
            *v = r.f64()?;
            if !(v.is_finite() && *v >= 0.0) {
                return Err(FrameError::Invalid("quantization step").into());
            }
        }
        let k = r.u8()? as u32;
        let count = r.u8()? as usize;
        let thresholds = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let point_count = r.u32()?;
        let channels = [r.section()?.to_vec(), r.section()?.to_vec(), r.section()?.to_vec()];
        if r.remaining() != 0 {
            return Err(FrameError::Invalid("trailing bytes").into());
        }
        if coder != AttributeCoder::Raht {
            validate_thresholds(&thresholds)?;
        }
        Ok(Self {
            coder,
            color_space,
            qsteps,
            steps,
            k,
            thresholds,
            point_count,
            channels,
        })
    }
}

fn cube_side(cloud: &PointCloud) -> f64 {
    let span = cloud
        .extent()
        .map(|(lo, hi)| (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max))
        .unwrap_or(0.0);
    (span.ceil().max(1.0) as u64).next_power_of_two() as f64
}

fn channel_values(colors: &[[u8; 3]], order: &[usize], ch: usize) -> Vec<i64> {
    order.iter().map(|&i| colors[i][ch] as i64).collect()
}

/// Per-coder state derived from geometry alone, shared by encoder and
/// decoder.
enum Structure {
    Raht(RahtPlan),
    Lod {
        lod: LodPartition,
        pred: Predictors,
        weights: Vec<f64>,
    },
}

fn structure(cloud: &PointCloud, coder: AttributeCoder, k: usize, thresholds: &[f64], lifting: bool) -> Result<Structure, AttributeError> {
    if coder == AttributeCoder::Raht {
        return Ok(Structure::Raht(RahtPlan::new(&cloud.voxels()?)));
    }
    let lod = generate_lod(&cloud.positions, thresholds, 0)?;
    let pred = Predictors::build(&cloud.positions, &lod, k.max(1));
    let weights = if lifting {
        influence_weights(&lod, &pred)
    } else {
        Vec::new()
    };
    Ok(Structure::Lod { lod, pred, weights })
}

/// Codes the colors of `cloud` with the configured transform. The three
/// channels are coded independently.
pub fn encode_attributes(cloud: &PointCloud, config: &AttributeConfig) -> Result<AttributeBitstream, AttributeError> {
    let colors = cloud.colors.as_ref().ok_or(AttributeError::MissingColors)?;
    cloud.validate()?;
    let thresholds = match &config.thresholds {
        Some(t) => t.clone(),
        None => default_thresholds(cube_side(cloud), config.lod_count),
    };
    let lifting = config.coder == AttributeCoder::Lifting;
    let st = if cloud.is_empty() {
        None
    } else {
        Some(structure(cloud, config.coder, config.k, &thresholds, lifting)?)
    };
    let coded: Vec<(Vec<u8>, f64)> = (0..3)
        .into_par_iter()
        .map(|ch| {
            let qstep = config.qsteps[ch];
            match &st {
                None => (Vec::new(), qstep),
                Some(Structure::Raht(plan)) => {
                    let vals: Vec<i64> = colors.iter().map(|c| c[ch] as i64).collect();
                    let f: Vec<f64> = vals.iter().map(|&v| v as f64).collect();
                    let coeffs = plan.forward(&f);
                    let step = if qstep == 0.0 {
                        raht::lossless_step(plan, &vals, &coeffs)
                    } else {
                        qstep
                    };
                    let q: Vec<i64> = coeffs.iter().map(|&c| raht::quantize(c, step)).collect();
                    (code_ints(&q), step)
                }
                Some(Structure::Lod { lod, pred, weights }) => {
                    let vals = channel_values(colors, &lod.order(), ch);
                    if lifting {
                        (lifting::encode_channel(&vals, lod, pred, weights, qstep), qstep)
                    } else {
                        (predict::encode_channel(&vals, pred, qstep).0, qstep)
                    }
                }
            }
        })
        .collect();
    let mut channels: [Vec<u8>; 3] = Default::default();
    let mut steps = [0.0; 3];
    for (ch, (bytes, step)) in coded.into_iter().enumerate() {
        channels[ch] = bytes;
        steps[ch] = step;
    }
    Ok(AttributeBitstream {
        coder: config.coder,
        color_space: cloud.color_space,
        qsteps: config.qsteps,
        steps,
        k: config.k.max(1) as u32,
        thresholds: if config.coder == AttributeCoder::Raht {
            Vec::new()
        } else {
            thresholds
        },
        point_count: cloud.len() as u32,
        channels,
    })
}

fn code_ints(values: &[i64]) -> Vec<u8> {
    let mut enc = crate::entropy::ArithEncoder::new();
    let mut ctx = crate::entropy::IntContexts::default();
    for &v in values {
        ctx.encode(&mut enc, v);
    }
    enc.finish()
}

fn decode_ints(data: &[u8], n: usize) -> Option<Vec<i64>> {
    let mut dec = crate::entropy::ArithDecoder::new(data);
    let mut ctx = crate::entropy::IntContexts::default();
    let out = (0..n).map(|_| ctx.decode(&mut dec)).collect::<Option<Vec<_>>>()?;
    (!dec.overran()).then_some(out)
}

/// Attaches decoded colors to `geometry`, which must be the decoded geometry
/// in decoding order.
pub fn attribute_decode(stream: &AttributeBitstream, geometry: &PointCloud) -> Result<PointCloud, AttributeError> {
    let n = geometry.len();
    if stream.point_count as usize != n {
        return Err(AttributeError::PointCountMismatch {
            expected: stream.point_count as usize,
            got: n,
        });
    }
    let mut out = geometry.clone();
    out.color_space = stream.color_space;
    if n == 0 {
        out.colors = Some(Vec::new());
        return Ok(out);
    }
    let lifting = stream.coder == AttributeCoder::Lifting;
    let st = structure(geometry, stream.coder, stream.k as usize, &stream.thresholds, lifting)?;
    let decoded: Vec<Option<Vec<i64>>> = (0..3)
        .into_par_iter()
        .map(|ch| {
            let data = &stream.channels[ch];
            match &st {
                Structure::Raht(plan) => {
                    let step = stream.steps[ch];
                    if step <= 0.0 {
                        return None;
                    }
                    decode_ints(data, n).map(|q| raht::reconstruct(plan, &q, step))
                }
                Structure::Lod { lod, pred, weights } => {
                    let in_order = if lifting {
                        lifting::decode_channel(data, lod, pred, weights, stream.steps[ch])?
                    } else {
                        predict::decode_channel(data, pred, stream.steps[ch])?
                    };
                    let mut vals = vec![0i64; n];
                    for (pos, &i) in lod.order().iter().enumerate() {
                        vals[i] = in_order[pos];
                    }
                    Some(vals)
                }
            }
        })
        .collect();
    let mut colors = vec![[0u8; 3]; n];
    for (ch, vals) in decoded.into_iter().enumerate() {
        let vals = vals.ok_or(AttributeError::Corrupt("channel payload"))?;
        for (c, v) in colors.iter_mut().zip(vals) {
            c[ch] = v.clamp(0, 255) as u8;
        }
    }
    out.colors = Some(colors);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(seed: u64, n: usize) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = std::collections::BTreeSet::new();
        while set.len() < n {
            set.insert([0; 3].map(|_: u8| rng.gen_range(0..200u32)));
        }
        let vox: Vec<[u32; 3]> = set.into_iter().collect();
        let colors = vox
            .iter()
            .map(|v| [(v[0] + v[1]) as u8, (v[2] * 3) as u8, rng.gen()])
            .collect();
        PointCloud::from_voxels(&vox, Some(colors))
    }

    #[test]
    fn lossless_round_trip_every_coder() {
        let c = random_cloud(1, 700);
        for coder in [AttributeCoder::Raht, AttributeCoder::Predict, AttributeCoder::Lifting] {
            let cfg = AttributeConfig {
                coder,
                ..Default::default()
            };
            let bs = encode_attributes(&c, &cfg).unwrap();
            let back = AttributeBitstream::from_bytes(&bs.to_bytes()).unwrap();
            assert_eq!(back, bs);
            let dec = attribute_decode(&back, &PointCloud::new(c.positions.clone())).unwrap();
            assert_eq!(dec.colors, c.colors, "{coder:?}");
        }
    }

    #[test]
    fn error_shrinks_with_finer_steps() {
        let c = random_cloud(2, 500);
        for coder in [AttributeCoder::Raht, AttributeCoder::Predict, AttributeCoder::Lifting] {
            let mut last = f64::INFINITY;
            for q in [64.0, 16.0, 4.0, 0.0] {
                let cfg = AttributeConfig {
                    coder,
                    qsteps: [q; 3],
                    ..Default::default()
                };
                let bs = encode_attributes(&c, &cfg).unwrap();
                let dec = attribute_decode(&bs, &PointCloud::new(c.positions.clone())).unwrap();
                let err: f64 = dec
                    .colors
                    .unwrap()
                    .iter()
                    .zip(c.colors.as_ref().unwrap())
                    .map(|(a, b)| (0..3).map(|k| (a[k] as f64 - b[k] as f64).powi(2)).sum::<f64>())
                    .sum();
                assert!(err <= last, "{coder:?} q={q}");
                last = err;
            }
            assert_eq!(last, 0.0);
        }
    }

    #[test]
    fn mismatched_geometry_rejected() {
        let c = random_cloud(3, 50);
        let bs = encode_attributes(&c, &AttributeConfig::default()).unwrap();
        let fewer = PointCloud::new(c.positions[..49].to_vec());
        assert!(matches!(
            attribute_decode(&bs, &fewer),
            Err(AttributeError::PointCountMismatch { .. })
        ));
    }

    #[test]
    fn missing_colors_rejected() {
        let c = PointCloud::new(vec![[0.0; 3]]);
        assert!(matches!(
            encode_attributes(&c, &AttributeConfig::default()),
            Err(AttributeError::MissingColors)
        ));
    }
}
