//! Coordinate conversion and position quantization.

use crate::cloud::{round_half_away, PointCloud};
use std::collections::HashMap;

/// World-to-frame transform: `frame = (world - translation) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConversionParams {
    pub translation: [f64; 3],
    pub scale: f64,
}

impl Default for ConversionParams {
    fn default() -> Self {
        Self {
            translation: [0.0; 3],
            scale: 1.0,
        }
    }
}

impl ConversionParams {
    pub fn is_valid(&self) -> bool {
        self.scale > 0.0 && self.scale.is_finite()
    }

    pub fn forward(&self, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|a| (p[a] - self.translation[a]) / self.scale)
    }

    pub fn inverse(&self, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|a| p[a] * self.scale + self.translation[a])
    }
}

pub fn convert_coordinates(cloud: &PointCloud, params: &ConversionParams) -> PointCloud {
    let mut out = cloud.clone();
    for p in &mut out.positions {
        *p = params.forward(*p);
    }
    out
}

pub fn restore_coordinates(cloud: &PointCloud, params: &ConversionParams) -> PointCloud {
    let mut out = cloud.clone();
    for p in &mut out.positions {
        *p = params.inverse(*p);
    }
    out
}

/// Quantization `round((X - X_min) * q)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuantizationParams {
    pub scale: f64,
    pub min: [f64; 3],
    pub dedup: bool,
}

impl QuantizationParams {
    /// Parameters with `min` taken from the cloud's per-axis minimum.
    pub fn for_cloud(cloud: &PointCloud, scale: f64, dedup: bool) -> Self {
        let min = cloud.extent().map(|(lo, _)| lo).unwrap_or([0.0; 3]);
        Self { scale, min, dedup }
    }

    pub fn is_valid(&self) -> bool {
        self.scale > 0.0 && self.scale.is_finite()
    }

    pub fn quantize(&self, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|a| round_half_away((p[a] - self.min[a]) * self.scale))
    }

    pub fn dequantize(&self, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|a| p[a] / self.scale + self.min[a])
    }
}

/// For every input point, the index of the output point it landed on.
pub type DuplicateMap = Vec<usize>;

/// Quantizes positions; with `dedup` set, points sharing a voxel collapse to
/// the first of them (its color and normal are kept).
pub fn quantize_positions(cloud: &PointCloud, params: &QuantizationParams) -> (PointCloud, DuplicateMap) {
    let quantized: Vec<[f64; 3]> = cloud.positions.iter().map(|&p| params.quantize(p)).collect();
    if !params.dedup {
        let mut out = cloud.clone();
        out.positions = quantized;
        return (out, (0..cloud.len()).collect());
    }
    let mut first: HashMap<[u64; 3], usize> = HashMap::with_capacity(quantized.len());
    let mut keep = Vec::new();
    let mut map = Vec::with_capacity(quantized.len());
    for (i, q) in quantized.iter().enumerate() {
        let key = q.map(f64::to_bits);
        let next = keep.len();
        let slot = *first.entry(key).or_insert(next);
        if slot == next {
            keep.push(i);
        }
        map.push(slot);
    }
    let mut out = cloud.select(&keep);
    out.positions = keep.iter().map(|&i| quantized[i]).collect();
    (out, map)
}

pub fn dequantize_positions(cloud: &PointCloud, params: &QuantizationParams) -> PointCloud {
    let mut out = cloud.clone();
    for p in &mut out.positions {
        *p = params.dequantize(*p);
    }
    out
}
