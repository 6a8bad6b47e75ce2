//! Integer lifting transform over the level-of-detail hierarchy.
//!
//! Values are indexed by coding-order position. Rounding both the predict
//! and the update step keeps the transform exactly invertible on integers.

use super::lod::LodPartition;
use super::predict::{predict_value, Predictors};
use crate::cloud::round_half_away;
use crate::entropy::{ArithDecoder, ArithEncoder, IntContexts};

/// Update coefficient for a predictor at squared distance `d2`.
pub fn update_coefficient(d2: f64) -> f64 {
    1.0 / d2.max(1.0)
}

/// Ranges of coding-order positions per refinement level.
fn level_ranges(lod: &LodPartition) -> Vec<std::ops::Range<usize>> {
    let mut start = 1;
    lod.refinements
        .iter()
        .map(|r| {
            let range = start..start + r.len();
            start += r.len();
            range
        })
        .collect()
}

/// Influence weights, accumulated from the finest level down to the
/// coarsest: `w(ψ) += ζ·w(φ)` for each point φ that ψ predicts.
pub fn influence_weights(lod: &LodPartition, pred: &Predictors) -> Vec<f64> {
    let mut w = vec![1.0; pred.neighbors.len()];
    for range in level_ranges(lod).into_iter().rev() {
        for i in range {
            for &(j, d2) in &pred.neighbors[i] {
                w[j] += update_coefficient(d2) * w[i];
            }
        }
    }
    w
}

/// Per-predictor update offsets for one level's residuals.
fn update_offsets(range: std::ops::Range<usize>, pred: &Predictors, w: &[f64], d: &[i64]) -> Vec<(usize, i64)> {
    let mut num: std::collections::BTreeMap<usize, (f64, f64)> = Default::default();
    for i in range {
        for &(j, d2) in &pred.neighbors[i] {
            let zw = update_coefficient(d2) * w[i];
            let e = num.entry(j).or_insert((0.0, 0.0));
            e.0 += zw * d[i] as f64;
            e.1 += zw;
        }
    }
    num.into_iter()
        .map(|(j, (n, den))| (j, round_half_away(n / den) as i64))
        .collect()
}

/// Forward transform: returns detail coefficients for every position except
/// 0, which holds the final low-pass value.
pub fn lifting_forward(values: &[i64], lod: &LodPartition, pred: &Predictors, weights: &[f64]) -> Vec<i64> {
    let mut a = values.to_vec();
    for range in level_ranges(lod).into_iter().rev() {
        for i in range.clone() {
            a[i] -= predict_value(&pred.neighbors[i], &a);
        }
        for (j, u) in update_offsets(range, pred, weights, &a) {
            a[j] += u;
        }
    }
    a
}

pub fn lifting_inverse(coeffs: &[i64], lod: &LodPartition, pred: &Predictors, weights: &[f64]) -> Vec<i64> {
    let mut a = coeffs.to_vec();
    for range in level_ranges(lod) {
        for (j, u) in update_offsets(range.clone(), pred, weights, &a) {
            a[j] -= u;
        }
        for i in range {
            a[i] = a[i].saturating_add(predict_value(&pred.neighbors[i], &a));
        }
    }
    a
}

pub(crate) fn quantize(c: i64, w: f64, qstep: f64) -> i64 {
    if qstep == 0.0 {
        c
    } else {
        round_half_away(c as f64 * w.sqrt() / qstep) as i64
    }
}

pub(crate) fn dequantize(q: i64, w: f64, qstep: f64) -> i64 {
    if qstep == 0.0 {
        q
    } else {
        round_half_away(q as f64 * qstep / w.sqrt()) as i64
    }
}

pub(crate) fn encode_channel(values: &[i64], lod: &LodPartition, pred: &Predictors, weights: &[f64], qstep: f64) -> Vec<u8> {
    let coeffs = lifting_forward(values, lod, pred, weights);
    let mut enc = ArithEncoder::new();
    let mut ctx = IntContexts::default();
    for (c, &w) in coeffs.iter().zip(weights) {
        ctx.encode(&mut enc, quantize(*c, w, qstep));
    }
    enc.finish()
}

pub(crate) fn decode_channel(
    data: &[u8],
    lod: &LodPartition,
    pred: &Predictors,
    weights: &[f64],
    qstep: f64,
) -> Option<Vec<i64>> {
    let mut dec = ArithDecoder::new(data);
    let mut ctx = IntContexts::default();
    let mut coeffs = Vec::with_capacity(weights.len());
    for &w in weights {
        coeffs.push(dequantize(ctx.decode(&mut dec)?, w, qstep));
    }
    if dec.overran() {
        return None;
    }
    Some(
        lifting_inverse(&coeffs, lod, pred, weights)
            .into_iter()
            .map(|v| v.clamp(0, 255))
            .collect(),
    )
}
