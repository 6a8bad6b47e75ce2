//! Nearest-neighbour prediction and the closed-loop predict transform.

use super::lod::LodPartition;
use crate::cloud::round_half_away;
use crate::entropy::{ArithDecoder, ArithEncoder, IntContexts};
use crate::spatial::kd_build;

/// For each point in coding order, its predictors as
/// `(coding-order position, squared distance)`. A point in `R_s` is
/// predicted only from `LoD_{s-1}`, so predictors always come earlier.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictors {
    pub neighbors: Vec<Vec<(usize, f64)>>,
}

impl Predictors {
    pub fn build(positions: &[[f64; 3]], lod: &LodPartition, k: usize) -> Self {
        let order = lod.order();
        let mut neighbors = vec![Vec::new(); order.len()];
        let mut start = 1;
        for r in &lod.refinements {
            if r.is_empty() {
                continue;
            }
            let coarse: Vec<[f64; 3]> = order[..start].iter().map(|&i| positions[i]).collect();
            let tree = kd_build(&coarse, 8);
            for (off, &i) in r.iter().enumerate() {
                neighbors[start + off] = tree.k_nearest_sq(&positions[i], k);
            }
            start += r.len();
        }
        Self { neighbors }
    }
}

/// Normalized prediction weights: inverse squared distance, or equal
/// weights over the coincident neighbours when any distance is zero.
pub fn prediction_weights(neighbors: &[(usize, f64)]) -> Vec<f64> {
    let zeros = neighbors.iter().filter(|n| n.1 == 0.0).count();
    if zeros > 0 {
        return neighbors
            .iter()
            .map(|n| if n.1 == 0.0 { 1.0 / zeros as f64 } else { 0.0 })
            .collect();
    }
    let total: f64 = neighbors.iter().map(|n| 1.0 / n.1).sum();
    neighbors.iter().map(|n| (1.0 / n.1) / total).collect()
}

/// Rounded weighted average of the neighbours' values.
pub fn predict_value(neighbors: &[(usize, f64)], values: &[i64]) -> i64 {
    if neighbors.is_empty() {
        return 0;
    }
    let w = prediction_weights(neighbors);
    let p: f64 = neighbors.iter().zip(&w).map(|(n, w)| w * values[n.0] as f64).sum();
    round_half_away(p) as i64
}

pub(crate) fn quantize(r: i64, qstep: f64) -> i64 {
    if qstep <= 1.0 {
        r
    } else {
        round_half_away(r as f64 / qstep) as i64
    }
}

pub(crate) fn dequantize(q: i64, qstep: f64) -> i64 {
    if qstep <= 1.0 {
        q
    } else {
        round_half_away(q as f64 * qstep) as i64
    }
}

/// Codes one channel (values in coding order). Returns the payload and the
/// reconstruction the decoder will produce.
pub(crate) fn encode_channel(values: &[i64], pred: &Predictors, qstep: f64) -> (Vec<u8>, Vec<i64>) {
    let mut enc = ArithEncoder::new();
    let mut ctx = IntContexts::default();
    let mut recon = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        if i == 0 {
            enc.encode_bits_bypass(v.clamp(0, 255) as u64, 8);
            recon.push(v.clamp(0, 255));
            continue;
        }
        let p = predict_value(&pred.neighbors[i], &recon);
        let q = quantize(v - p, qstep);
        ctx.encode(&mut enc, q);
        recon.push((p + dequantize(q, qstep)).clamp(0, 255));
    }
    (enc.finish(), recon)
}

pub(crate) fn decode_channel(data: &[u8], pred: &Predictors, qstep: f64) -> Option<Vec<i64>> {
    let n = pred.neighbors.len();
    let mut dec = ArithDecoder::new(data);
    let mut ctx = IntContexts::default();
    let mut recon = Vec::with_capacity(n);
    for i in 0..n {
        if i == 0 {
            recon.push(dec.decode_bits_bypass(8) as i64);
            continue;
        }
        let p = predict_value(&pred.neighbors[i], &recon);
        let q = ctx.decode(&mut dec)?;
        recon.push(p.saturating_add(dequantize(q, qstep)).clamp(0, 255));
    }
    if dec.overran() {
        return None;
    }
    Some(recon)
}
