//! Partitioning a cloud into independently coded slices.

use std::collections::BTreeMap;

use crate::cloud::PointCloud;
use crate::spatial::interleave;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum SliceMethod {
    /// Cut along the longest axis at intervals of the shortest extent (or
    /// the given interval).
    LongestEdge { interval: Option<f64> },
    /// One slice per occupied cell of an octree cut at `depth`.
    Octree { depth: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub indices: Vec<usize>,
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub method: SliceMethod,
}

fn slice_of(cloud: &PointCloud, indices: Vec<usize>, method: SliceMethod) -> Slice {
    let sub = cloud.select(&indices);
    let (min, max) = sub.extent().unwrap_or(([0.0; 3], [0.0; 3]));
    Slice {
        indices,
        min,
        max,
        method,
    }
}

/// Splits the cloud into disjoint, exhaustive slices. Empty slices are
/// dropped; points keep ascending index order within a slice.
pub fn partition_slices(cloud: &PointCloud, method: SliceMethod) -> Vec<Slice> {
    let Some((lo, hi)) = cloud.extent() else {
        return Vec::new();
    };
    let ext = [0, 1, 2].map(|a| hi[a] - lo[a]);
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    match method {
        SliceMethod::LongestEdge { interval } => {
            let mut axis = 0;
            for a in 1..3 {
                if ext[a] > ext[axis] {
                    axis = a;
                }
            }
            let edge_min = ext.iter().copied().fold(f64::INFINITY, f64::min);
            let step = interval.unwrap_or(edge_min);
            let count = if step > 0.0 && ext[axis] > 0.0 {
                (ext[axis] / step).ceil().max(1.0) as u64
            } else {
                1
            };
            for (i, p) in cloud.positions.iter().enumerate() {
                let k = if count == 1 {
                    0
                } else {
                    (((p[axis] - lo[axis]) / step).floor() as u64).min(count - 1)
                };
                groups.entry(k).or_default().push(i);
            }
        }
        SliceMethod::Octree { depth } => {
            let span = ext.iter().copied().fold(0.0, f64::max).ceil() as u64;
            let bits = 64 - span.leading_zeros();
            let shift = bits.saturating_sub(depth);
            for (i, p) in cloud.positions.iter().enumerate() {
                let cell = [0, 1, 2].map(|a| (((p[a] - lo[a]).floor() as u64) >> shift) as u32);
                groups.entry(interleave(cell, depth.min(21))).or_default().push(i);
            }
        }
    }
    groups
        .into_values()
        .map(|idx| slice_of(cloud, idx, method))
        .collect()
}
