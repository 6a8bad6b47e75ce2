//! Region-adaptive hierarchical transform.
//!
//! The transform is compiled into a list of weighted butterflies over value
//! slots. Points sharing a voxel are merged first; then each octree level
//! merges siblings along x, then y, then z. Every butterfly keeps its
//! low-pass output in the first slot and retires the second slot as a
//! high-pass coefficient.

use crate::cloud::round_half_away;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Butterfly {
    a: usize,
    b: usize,
    wa: f64,
    wb: f64,
}

/// Compiled transform for one geometry; reusable for every channel.
#[derive(Debug, Clone, PartialEq)]
pub struct RahtPlan {
    /// Point index held by each slot at the start.
    slot_point: Vec<usize>,
    ops: Vec<Butterfly>,
    /// Slot holding the DC coefficient at the end.
    root: Option<usize>,
}

/// Key with x in bit `3b`, y in `3b+1`, z in `3b+2`, so the lowest bit is
/// the first to be merged.
fn raht_key(v: [u32; 3], depth: u32) -> u64 {
    let mut key = 0u64;
    for b in 0..depth {
        for a in 0..3 {
            key |= (((v[a] >> b) & 1) as u64) << (3 * b + a as u32);
        }
    }
    key
}

impl RahtPlan {
    pub fn new(voxels: &[[u32; 3]]) -> Self {
        let max = voxels.iter().flat_map(|v| v.iter().copied()).max().unwrap_or(0);
        let depth = 32 - max.leading_zeros();
        let keys: Vec<u64> = voxels.iter().map(|&v| raht_key(v, depth)).collect();
        let mut slot_point: Vec<usize> = (0..voxels.len()).collect();
        slot_point.sort_unstable_by_key(|&i| (keys[i], i));
        let mut ops = Vec::new();
        // (key, weight, slot)
        let mut nodes: Vec<(u64, f64, usize)> = Vec::with_capacity(voxels.len());
        for (slot, &i) in slot_point.iter().enumerate() {
            match nodes.last_mut() {
                Some(last) if last.0 == keys[i] => {
                    ops.push(Butterfly {
                        a: last.2,
                        b: slot,
                        wa: last.1,
                        wb: 1.0,
                    });
                    last.1 += 1.0;
                }
                _ => nodes.push((keys[i], 1.0, slot)),
            }
        }
        for _ in 0..3 * depth {
            let mut next = Vec::with_capacity(nodes.len());
            let mut k = 0;
            while k < nodes.len() {
                let (key, w, slot) = nodes[k];
                if k + 1 < nodes.len() && nodes[k + 1].0 >> 1 == key >> 1 {
                    let (_, w2, slot2) = nodes[k + 1];
                    ops.push(Butterfly {
                        a: slot,
                        b: slot2,
                        wa: w,
                        wb: w2,
                    });
                    next.push((key >> 1, w + w2, slot));
                    k += 2;
                } else {
                    next.push((key >> 1, w, slot));
                    k += 1;
                }
            }
            nodes = next;
        }
        let root = nodes.first().map(|n| n.2);
        Self { slot_point, ops, root }
    }

    pub fn len(&self) -> usize {
        self.slot_point.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot_point.is_empty()
    }

    /// Coefficients: DC first, then high-pass values in butterfly order.
    pub fn forward(&self, values: &[f64]) -> Vec<f64> {
        let mut s: Vec<f64> = self.slot_point.iter().map(|&i| values[i]).collect();
        let mut out = Vec::with_capacity(s.len());
        let mut high = Vec::with_capacity(s.len().saturating_sub(1));
        for op in &self.ops {
            let (l, h) = butterfly(s[op.a], s[op.b], op.wa, op.wb);
            s[op.a] = l;
            high.push(h);
        }
        if let Some(r) = self.root {
            out.push(s[r]);
        }
        out.extend(high);
        out
    }

    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.len()];
        if let Some(r) = self.root {
            s[r] = coeffs[0];
        }
        for (k, op) in self.ops.iter().enumerate().rev() {
            // The butterfly matrix is symmetric and orthogonal: its own inverse.
            let (a, b) = butterfly(s[op.a], coeffs[k + 1], op.wa, op.wb);
            s[op.a] = a;
            s[op.b] = b;
        }
        let mut out = vec![0.0; self.len()];
        for (slot, &i) in self.slot_point.iter().enumerate() {
            out[i] = s[slot];
        }
        out
    }
}

/// `L = (√w1·a + √w2·b)/√W`, `H = (√w2·a − √w1·b)/√W`.
pub fn butterfly(a: f64, b: f64, w1: f64, w2: f64) -> (f64, f64) {
    let s1 = w1.sqrt();
    let s2 = w2.sqrt();
    let n = (w1 + w2).sqrt();
    ((s1 * a + s2 * b) / n, (s2 * a - s1 * b) / n)
}

pub fn raht_forward(voxels: &[[u32; 3]], values: &[f64]) -> Vec<f64> {
    RahtPlan::new(voxels).forward(values)
}

pub fn raht_inverse(voxels: &[[u32; 3]], coeffs: &[f64]) -> Vec<f64> {
    RahtPlan::new(voxels).inverse(coeffs)
}

pub(crate) fn quantize(c: f64, step: f64) -> i64 {
    round_half_away(c / step) as i64
}

/// Integer reconstruction from quantized coefficients.
pub(crate) fn reconstruct(plan: &RahtPlan, q: &[i64], step: f64) -> Vec<i64> {
    let c: Vec<f64> = q.iter().map(|&v| v as f64 * step).collect();
    plan.inverse(&c)
        .into_iter()
        .map(|v| round_half_away(v).clamp(0.0, 255.0) as i64)
        .collect()
}

/// Largest power-of-two step not above 1 whose reconstruction is exact.
pub(crate) fn lossless_step(plan: &RahtPlan, values: &[i64], coeffs: &[f64]) -> f64 {
    let mut step = 1.0;
    for _ in 0..40 {
        let q: Vec<i64> = coeffs.iter().map(|&c| quantize(c, step)).collect();
        if reconstruct(plan, &q, step) == values {
            return step;
        }
        step /= 2.0;
    }
    step
}
