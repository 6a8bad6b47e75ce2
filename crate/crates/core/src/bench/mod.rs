//! End-to-end encode/decode pipeline, the `PCCX` container and the
//! rate-distortion sweep harness.

mod sweep;

pub use sweep::{
    bd_table, ladder, run_sweep, write_bd_csv, write_rows_csv, write_timing_csv, BdRow, ExperimentConfig, RdRow,
    SweepResult, TimingRow,
};

use std::collections::HashMap;

use thiserror::Error;

use crate::attribute::{attribute_decode, attribute_transfer, encode_attributes, AttributeBitstream, AttributeCoder, AttributeConfig, AttributeError};
use crate::bytes::{ByteReader, ByteWriter, FrameError};
use crate::cloud::{ColorSpace, PointCloud};
use crate::geometry::{
    decode_geometry, dequantize_positions, encode_geometry, quantize_positions, voxels_to_world, GeometryBitstream,
    GeometryConfig, GeometryError, GeometryMode, QuantizationParams,
};
use crate::metrics::{distance_report, rgb_to_yuv, yuv_to_rgb, MetricsError, PSNR_CAP};
use crate::vpcc::{decode_vpcc, encode_vpcc, ReferenceCodec, VpccConfig, VpccError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Attribute(#[from] AttributeError),
    #[error(transparent)]
    Vpcc(#[from] VpccError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("container is missing its {0} section")]
    MissingSection(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coder {
    Raht,
    Predict,
    Lifting,
    Vpcc,
}

impl Coder {
    pub fn name(self) -> &'static str {
        match self {
            Self::Raht => "raht",
            Self::Predict => "predict",
            Self::Lifting => "lifting",
            Self::Vpcc => "vpcc",
        }
    }

    fn attribute(self) -> Option<AttributeCoder> {
        match self {
            Self::Raht => Some(AttributeCoder::Raht),
            Self::Predict => Some(AttributeCoder::Predict),
            Self::Lifting => Some(AttributeCoder::Lifting),
            Self::Vpcc => None,
        }
    }
}

impl std::str::FromStr for Coder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "raht" => Ok(Self::Raht),
            "predict" | "pred" => Ok(Self::Predict),
            "lifting" | "lift" => Ok(Self::Lifting),
            "vpcc" => Ok(Self::Vpcc),
            _ => Err(format!("unknown coder {s:?}")),
        }
    }
}

/// Everything needed to encode one cloud.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PipelineConfig {
    pub coder: Coder,
    /// Position quantization scale (PQS); 1 keeps integer input exact.
    pub pqs: f64,
    pub geometry: GeometryConfig,
    /// Attribute quantization step; 0 is lossless.
    pub qstep: f64,
    /// Number of detail levels (LODC).
    pub lodc: usize,
    pub k: usize,
    pub vpcc: VpccConfig,
    /// Code colors in YUV instead of RGB.
    pub yuv: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            coder: Coder::Raht,
            pqs: 1.0,
            geometry: GeometryConfig::default(),
            qstep: 0.0,
            lodc: 8,
            k: 3,
            vpcc: VpccConfig::default(),
            yuv: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(self.pqs > 0.0 && self.pqs.is_finite()) {
            return bad(format!("position quantization scale must be positive, got {}", self.pqs));
        }
        if !(self.qstep >= 0.0 && self.qstep.is_finite()) {
            return bad(format!("attribute step must be non-negative, got {}", self.qstep));
        }
        if self.geometry.mode == GeometryMode::Trisoup && self.geometry.dbodl == 0 {
            return bad("trisoup needs a block size exponent of at least 1".into());
        }
        if self.lodc == 0 {
            return bad("at least one level of detail is required".into());
        }
        if self.coder == Coder::Vpcc && self.geometry.mode == GeometryMode::Trisoup {
            return bad("the projection coder has its own geometry path".into());
        }
        Ok(())
    }

    /// Both geometry and colors survive unchanged.
    pub fn is_lossless(&self) -> bool {
        let colors = match self.coder {
            Coder::Vpcc => self.vpcc.texture_qstep <= 1,
            Coder::Predict => self.qstep <= 1.0,
            _ => self.qstep == 0.0,
        };
        let geometry = match self.coder {
            Coder::Vpcc => self.vpcc.geometry_qstep <= 1,
            _ => self.geometry.mode == GeometryMode::Lossless,
        };
        self.pqs == 1.0 && geometry && colors && !self.yuv
    }
}

/// A coded cloud with its size broken down by content.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub bytes: Vec<u8>,
    pub geometry_bytes: usize,
    pub color_bytes: usize,
    pub input_points: usize,
}

impl Encoded {
    pub fn bpp_geometry(&self) -> f64 {
        self.geometry_bytes as f64 * 8.0 / self.input_points.max(1) as f64
    }

    pub fn bpp_color(&self) -> f64 {
        self.color_bytes as f64 * 8.0 / self.input_points.max(1) as f64
    }

    /// Geometry plus color; container framing and the config echo are not
    /// counted.
    pub fn bpp_total(&self) -> f64 {
        self.bpp_geometry() + self.bpp_color()
    }
}

const MAGIC: &str = "PCCX";
const VERSION: u8 = 1;
const TAG_GEOMETRY: u8 = 1;
const TAG_ATTRIBUTE: u8 = 2;
const TAG_VPCC: u8 = 3;
const TAG_TRAILER: u8 = 4;

fn write_container(sections: &[(u8, Vec<u8>)]) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.raw(MAGIC.as_bytes()).u8(VERSION).u8(sections.len() as u8);
    for (tag, _) in sections {
        w.u8(*tag);
    }
    for (_, body) in sections {
        w.section(body);
    }
    w.into_inner()
}

fn read_container(data: &[u8]) -> Result<HashMap<u8, &[u8]>, PipelineError> {
    let mut r = ByteReader::new(data);
    r.expect_magic(MAGIC)?;
    let version = r.u8()?;
    if version != VERSION {
        return Err(FrameError::Version(version).into());
    }
    let n = r.u8()? as usize;
    let tags = r.take(n)?.to_vec();
    let mut out = HashMap::new();
    for tag in tags {
        if !(TAG_GEOMETRY..=TAG_TRAILER).contains(&tag) {
            return Err(FrameError::Invalid("section tag").into());
        }
        if out.insert(tag, r.section()?).is_some() {
            return Err(FrameError::Invalid("repeated section").into());
        }
    }
    if r.remaining() != 0 {
        return Err(FrameError::Invalid("trailing bytes").into());
    }
    Ok(out)
}

/// Reads back the configuration echoed into a container.
pub fn container_config(data: &[u8]) -> Result<PipelineConfig, PipelineError> {
    let sections = read_container(data)?;
    let trailer = sections.get(&TAG_TRAILER).ok_or(PipelineError::MissingSection("trailer"))?;
    serde_json::from_slice(trailer).map_err(|e| PipelineError::Config(e.to_string()))
}

/// Geometry and color byte counts of a container, split as in [`Encoded`].
pub fn container_sizes(data: &[u8]) -> Result<(usize, usize), PipelineError> {
    let sections = read_container(data)?;
    if let Some(body) = sections.get(&TAG_VPCC) {
        let frame = body.get(33..).ok_or(FrameError::Invalid("projection section"))?;
        let texture = frame.len() - crate::vpcc::geometry_prefix_len(frame)?;
        return Ok((body.len() - texture, texture));
    }
    let g = sections.get(&TAG_GEOMETRY).ok_or(PipelineError::MissingSection("geometry"))?;
    Ok((g.len(), sections.get(&TAG_ATTRIBUTE).map_or(0, |a| a.len())))
}

fn to_coding_space(cloud: &PointCloud, yuv: bool) -> Result<PointCloud, PipelineError> {
    if yuv && cloud.has_colors() && cloud.color_space == ColorSpace::Rgb {
        Ok(rgb_to_yuv(cloud)?)
    } else {
        Ok(cloud.clone())
    }
}

fn to_rgb(cloud: PointCloud) -> Result<PointCloud, PipelineError> {
    if cloud.has_colors() && cloud.color_space == ColorSpace::Yuv {
        Ok(yuv_to_rgb(&cloud)?)
    } else {
        Ok(cloud)
    }
}

/// Encodes `cloud` into a `PCCX` container.
pub fn encode(cloud: &PointCloud, config: &PipelineConfig) -> Result<Encoded, PipelineError> {
    config.validate()?;
    cloud.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
    if cloud.is_empty() {
        return Err(PipelineError::Config("cannot encode an empty cloud".into()));
    }
    let source = to_coding_space(cloud, config.yuv)?;
    let qp = QuantizationParams::for_cloud(&source, config.pqs, true);
    let (quantized, _) = quantize_positions(&source, &qp);
    let echo = serde_json::to_vec(config).expect("config serializes");
    let mut sections = Vec::new();
    let (geometry_bytes, color_bytes);
    match config.coder.attribute() {
        None => {
            let (frame, sizes) = encode_vpcc(&quantized, &config.vpcc, &ReferenceCodec)?;
            let mut w = ByteWriter::new();
            w.f64(qp.scale);
            for m in qp.min {
                w.f64(m);
            }
            w.u8((quantized.color_space == ColorSpace::Yuv) as u8);
            w.raw(&frame);
            let body = w.into_inner();
            geometry_bytes = body.len() - sizes.texture;
            color_bytes = sizes.texture;
            sections.push((TAG_VPCC, body));
        }
        Some(coder) => {
            let mut gs = encode_geometry(&quantized, &config.geometry)?;
            gs.quantization = Some(qp);
            let decoded = decode_geometry(&gs)?;
            let geometry = gs.to_bytes();
            geometry_bytes = geometry.len();
            sections.push((TAG_GEOMETRY, geometry));
            if quantized.has_colors() {
                let colored = color_decoded(&source, &quantized, decoded, &qp, config.geometry.mode)?;
                let acfg = AttributeConfig {
                    coder,
                    qsteps: [config.qstep; 3],
                    k: config.k,
                    lod_count: config.lodc,
                    thresholds: None,
                };
                let attr = encode_attributes(&colored, &acfg)?.to_bytes();
                color_bytes = attr.len();
                sections.push((TAG_ATTRIBUTE, attr));
            } else {
                color_bytes = 0;
            }
        }
    }
    sections.push((TAG_TRAILER, echo));
    Ok(Encoded {
        bytes: write_container(&sections),
        geometry_bytes,
        color_bytes,
        input_points: cloud.len(),
    })
}

/// Colors the decoded voxels: an exact voxel match takes the quantized
/// point's color, otherwise the nearest original point's color is used.
fn color_decoded(
    source: &PointCloud,
    quantized: &PointCloud,
    decoded: PointCloud,
    qp: &QuantizationParams,
    mode: GeometryMode,
) -> Result<PointCloud, PipelineError> {
    if mode == GeometryMode::Lossless {
        let colors = quantized.colors()?;
        let at: HashMap<[u64; 3], [u8; 3]> = quantized
            .positions
            .iter()
            .zip(colors)
            .map(|(p, &c)| (p.map(|v| v as u64), c))
            .collect();
        let picked: Option<Vec<[u8; 3]>> = decoded.positions.iter().map(|p| at.get(&p.map(|v| v as u64)).copied()).collect();
        if let Some(c) = picked {
            let mut out = decoded;
            out.colors = Some(c);
            out.color_space = quantized.color_space;
            return Ok(out);
        }
    }
    Ok(attribute_transfer(source, &decoded, qp)?)
}

impl From<crate::cloud::CloudError> for PipelineError {
    fn from(e: crate::cloud::CloudError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

/// Decodes a `PCCX` container into a world-coordinate RGB cloud.
pub fn decode(data: &[u8]) -> Result<PointCloud, PipelineError> {
    let sections = read_container(data)?;
    if let Some(body) = sections.get(&TAG_VPCC) {
        let mut r = ByteReader::new(body);
        let scale = r.f64()?;
        let min = [r.f64()?, r.f64()?, r.f64()?];
        let yuv = r.u8()? != 0;
        let qp = QuantizationParams { scale, min, dedup: true };
        if !qp.is_valid() || min.iter().any(|m| !m.is_finite()) {
            return Err(FrameError::Invalid("quantization parameters").into());
        }
        let mut voxels = decode_vpcc(&body[r.position()..], &ReferenceCodec)?;
        if yuv {
            voxels.color_space = ColorSpace::Yuv;
        }
        return to_rgb(dequantize_positions(&voxels, &qp));
    }
    let geometry = sections.get(&TAG_GEOMETRY).ok_or(PipelineError::MissingSection("geometry"))?;
    let gs = GeometryBitstream::from_bytes(geometry)?;
    let voxels = decode_geometry(&gs)?;
    let voxels = match sections.get(&TAG_ATTRIBUTE) {
        Some(a) => attribute_decode(&AttributeBitstream::from_bytes(a)?, &voxels)?,
        None => voxels,
    };
    to_rgb(voxels_to_world(&voxels, &gs))
}

/// Quality of a decoded cloud against the original, both in RGB; color
/// PSNR is measured on YUV.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Evaluation {
    pub psnr_geometry: f64,
    pub psnr_yuv: Option<[f64; 3]>,
}

pub fn evaluate(original: &PointCloud, decoded: &PointCloud) -> Result<Evaluation, PipelineError> {
    let yuv = |c: &PointCloud| -> Result<PointCloud, PipelineError> {
        if c.has_colors() && c.color_space == ColorSpace::Rgb {
            Ok(rgb_to_yuv(c)?)
        } else {
            Ok(c.clone())
        }
    };
    let report = distance_report(&yuv(original)?, &yuv(decoded)?)?;
    Ok(Evaluation {
        psnr_geometry: report.psnr_geometry.min(PSNR_CAP),
        psnr_yuv: report.psnr_color,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn surface(rng: &mut ChaCha8Rng) -> PointCloud {
        let mut v = Vec::new();
        let mut c = Vec::new();
        for x in 0..30u32 {
            for y in 0..30u32 {
                let z = 40 + (x * x + y) / 40;
                v.push([x + 100, y + 7, z]);
                c.push([(x * 8) as u8, (y * 8) as u8, rng.gen_range(90..110)]);
            }
        }
        PointCloud::from_voxels(&v, Some(c))
    }

    #[test]
    fn lossless_round_trip_every_coder() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = surface(&mut rng);
        for coder in [Coder::Raht, Coder::Predict, Coder::Lifting, Coder::Vpcc] {
            let cfg = PipelineConfig {
                coder,
                ..Default::default()
            };
            let enc = encode(&c, &cfg).unwrap();
            assert_eq!(container_sizes(&enc.bytes).unwrap(), (enc.geometry_bytes, enc.color_bytes));
            let back = decode(&enc.bytes).unwrap();
            if coder != Coder::Vpcc {
                assert_eq!(back.sorted_entries(), c.sorted_entries(), "{coder:?}");
            }
            let e = evaluate(&c, &back).unwrap();
            if coder != Coder::Vpcc {
                assert_eq!(e.psnr_geometry, PSNR_CAP);
                assert_eq!(e.psnr_yuv, Some([PSNR_CAP; 3]));
            }
            assert_eq!(container_config(&enc.bytes).unwrap(), cfg);
        }
    }

    #[test]
    fn world_coordinates_survive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut c = surface(&mut rng);
        for p in &mut c.positions {
            p[0] -= 500.0;
            p[2] += 0.25;
        }
        let cfg = PipelineConfig {
            pqs: 4.0,
            ..Default::default()
        };
        let back = decode(&encode(&c, &cfg).unwrap().bytes).unwrap();
        assert_eq!(back.sorted_entries(), c.sorted_entries());
    }

    #[test]
    fn lossy_yuv_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = surface(&mut rng);
        let cfg = PipelineConfig {
            coder: Coder::Lifting,
            qstep: 8.0,
            yuv: true,
            pqs: 0.5,
            ..Default::default()
        };
        let enc = encode(&c, &cfg).unwrap();
        assert!(enc.color_bytes > 0 && enc.geometry_bytes > 0);
        let back = decode(&enc.bytes).unwrap();
        assert_eq!(back.color_space, ColorSpace::Rgb);
        let e = evaluate(&c, &back).unwrap();
        assert!(e.psnr_geometry > 20.0 && e.psnr_geometry < PSNR_CAP);
        assert!(e.psnr_yuv.unwrap()[0] > 20.0);
    }

    #[test]
    fn trisoup_needs_a_block() {
        let cfg = PipelineConfig {
            geometry: GeometryConfig {
                mode: GeometryMode::Trisoup,
                dbodl: 0,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
    }

    #[test]
    fn colorless_cloud() {
        let c = PointCloud::from_voxels(&[[1, 2, 3], [4, 5, 6]], None);
        let back = decode(&encode(&c, &PipelineConfig::default()).unwrap().bytes).unwrap();
        assert_eq!(back.sorted_entries(), c.sorted_entries());
    }

    #[test]
    fn corrupt_containers() {
        let c = PointCloud::from_voxels(&[[1, 2, 3], [4, 5, 6]], Some(vec![[1; 3], [2; 3]]));
        let bytes = encode(&c, &PipelineConfig::default()).unwrap().bytes;
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
        assert!(decode(b"PCCX").is_err());
        let mut bad = bytes.clone();
        bad[5] = 9;
        assert!(decode(&bad).is_err());
    }
}
