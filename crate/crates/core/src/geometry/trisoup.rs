//! Triangle-soup surface coding of leaf blocks.
//!
//! Each occupied block of side `W` may carry a vertex on any of its twelve
//! edges. An edge is shared by up to four blocks and is coded once.

use std::collections::{BTreeSet, HashMap};

use super::GeometryError;
use crate::cloud::round_half_away;
use crate::entropy::{ArithDecoder, ArithEncoder, ContextModel};

/// An edge along `axis` starting at `corner` (in block units).
pub(crate) type EdgeKey = (u8, [u32; 3]);

fn block_edge_keys(block: [u32; 3]) -> [EdgeKey; 12] {
    let mut out = [(0u8, [0u32; 3]); 12];
    let mut k = 0;
    for axis in 0..3usize {
        let u = (axis + 1) % 3;
        let v = (axis + 2) % 3;
        for i in 0..2 {
            for j in 0..2 {
                let mut c = block;
                c[u] += i;
                c[v] += j;
                out[k] = (axis as u8, c);
                k += 1;
            }
        }
    }
    out
}

/// Every edge of the occupied blocks, sorted and unique.
pub(crate) fn edges_of(blocks: &[[u32; 3]]) -> Vec<EdgeKey> {
    let set: BTreeSet<EdgeKey> = blocks.iter().flat_map(|&b| block_edge_keys(b)).collect();
    set.into_iter().collect()
}

/// Mean along-edge offset of the voxels adjacent to each edge.
///
/// A voxel is adjacent to an edge when, on both perpendicular axes, it sits
/// in one of the two voxel layers touching the edge line.
pub(crate) fn edge_offsets(voxels: &[[u32; 3]], w_log2: u32) -> HashMap<EdgeKey, f64> {
    let w = 1u32 << w_log2;
    let mut acc: HashMap<EdgeKey, (f64, u32)> = HashMap::new();
    for v in voxels {
        for axis in 0..3usize {
            let u = (axis + 1) % 3;
            let vv = (axis + 2) % 3;
            let cands = |c: u32| {
                let mut out = [None, None];
                if c % w == 0 {
                    out[0] = Some(c / w);
                }
                if c % w == w - 1 {
                    out[1] = Some(c / w + 1);
                }
                out
            };
            for cu in cands(v[u]).into_iter().flatten() {
                for cv in cands(v[vv]).into_iter().flatten() {
                    let mut corner = [0u32; 3];
                    corner[axis] = v[axis] / w;
                    corner[u] = cu;
                    corner[vv] = cv;
                    let e = acc.entry((axis as u8, corner)).or_insert((0.0, 0));
                    e.0 += (v[axis] % w) as f64;
                    e.1 += 1;
                }
            }
        }
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Quantizes a relative offset `t` in `[0, W)` to `w_log2` bits.
pub(crate) fn quantize_offset(t: f64, w_log2: u32) -> u32 {
    let w = (1u32 << w_log2) as f64;
    let levels = 1u32 << w_log2;
    (round_half_away(t / w * levels as f64).max(0.0) as u32).min(levels - 1)
}

pub(crate) fn dequantize_offset(q: u32, w_log2: u32) -> f64 {
    let w = (1u32 << w_log2) as f64;
    q as f64 * w / (1u32 << w_log2) as f64
}

pub(crate) fn encode_trisoup(voxels: &[[u32; 3]], blocks: &[[u32; 3]], w_log2: u32) -> Vec<u8> {
    let offsets = edge_offsets(voxels, w_log2);
    let mut enc = ArithEncoder::new();
    let mut flag = [ContextModel::new(); 3];
    for key in edges_of(blocks) {
        let t = offsets.get(&key);
        enc.encode(&mut flag[key.0 as usize], t.is_some());
        if let Some(&t) = t {
            enc.encode_bits_bypass(quantize_offset(t, w_log2) as u64, w_log2);
        }
    }
    enc.finish()
}

/// Decoded vertex positions in voxel coordinates, keyed by edge.
pub(crate) fn decode_vertices(
    data: &[u8],
    blocks: &[[u32; 3]],
    w_log2: u32,
) -> Result<HashMap<EdgeKey, [f64; 3]>, GeometryError> {
    let w = (1u32 << w_log2) as f64;
    let mut dec = ArithDecoder::new(data);
    let mut flag = [ContextModel::new(); 3];
    let mut out = HashMap::new();
    for key in edges_of(blocks) {
        if dec.decode(&mut flag[key.0 as usize]) {
            let q = dec.decode_bits_bypass(w_log2) as u32;
            let axis = key.0 as usize;
            let mut p = key.1.map(|c| c as f64 * w - 0.5);
            p[axis] = key.1[axis] as f64 * w + dequantize_offset(q, w_log2);
            out.insert(key, p);
        }
    }
    if dec.overran() {
        return Err(GeometryError::Corrupt("trisoup stream exhausted"));
    }
    Ok(out)
}

/// Orders vertices around their centroid, looking down the axis along which
/// they spread least.
pub(crate) fn fan_order(verts: &[[f64; 3]]) -> (Vec<usize>, [f64; 3]) {
    let n = verts.len() as f64;
    let centroid = [0, 1, 2].map(|a| verts.iter().map(|p| p[a]).sum::<f64>() / n);
    let spread = [0, 1, 2].map(|a| {
        let lo = verts.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min);
        let hi = verts.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    });
    let mut dominant = 0;
    for a in 1..3 {
        if spread[a] < spread[dominant] {
            dominant = a;
        }
    }
    let i = (dominant + 1) % 3;
    let j = (dominant + 2) % 3;
    let angle = |p: &[f64; 3]| (p[j] - centroid[j]).atan2(p[i] - centroid[i]);
    let mut order: Vec<usize> = (0..verts.len()).collect();
    order.sort_by(|&a, &b| angle(&verts[a]).total_cmp(&angle(&verts[b])).then(a.cmp(&b)));
    (order, centroid)
}

/// Triangles covering the block's vertices: a single triangle for three, a
/// centroid fan for more. Fewer than three vertices give degenerate
/// triangles (a point or a segment).
pub(crate) fn triangulate(verts: &[[f64; 3]]) -> Vec<[[f64; 3]; 3]> {
    match verts.len() {
        0 => Vec::new(),
        1 => vec![[verts[0]; 3]],
        2 => vec![[verts[0], verts[1], verts[1]]],
        3 => vec![[verts[0], verts[1], verts[2]]],
        n => {
            let (order, c) = fan_order(verts);
            (0..n)
                .map(|k| [c, verts[order[k]], verts[order[(k + 1) % n]]])
                .collect()
        }
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    crate::cloud::dist2(a, b).sqrt()
}

/// Samples a triangle at unit pitch and snaps samples to voxels inside
/// `[lo, hi]`.
pub(crate) fn rasterize(tri: &[[f64; 3]; 3], lo: [u32; 3], hi: [u32; 3], out: &mut BTreeSet<[u32; 3]>) {
    let [a, b, c] = tri;
    let longest = dist(a, b).max(dist(b, c)).max(dist(a, c));
    let n = (longest.ceil() as usize).max(1);
    for i in 0..=n {
        for j in 0..=(n - i) {
            let s = i as f64 / n as f64;
            let t = j as f64 / n as f64;
            let v = [0, 1, 2].map(|k| {
                let p = a[k] + (b[k] - a[k]) * s + (c[k] - a[k]) * t;
                (round_half_away(p).max(lo[k] as f64) as u32).clamp(lo[k], hi[k])
            });
            out.insert(v);
        }
    }
}

/// Reconstructs voxels for every block from the decoded edge vertices.
pub(crate) fn reconstruct(
    blocks: &[[u32; 3]],
    vertices: &HashMap<EdgeKey, [f64; 3]>,
    w_log2: u32,
) -> Vec<[u32; 3]> {
    let w = 1u32 << w_log2;
    let mut out = BTreeSet::new();
    for &b in blocks {
        let lo = b.map(|c| c * w);
        let hi = lo.map(|c| c + w - 1);
        let verts: Vec<[f64; 3]> = block_edge_keys(b)
            .iter()
            .filter_map(|k| vertices.get(k).copied())
            .collect();
        if verts.is_empty() {
            out.insert(lo.map(|c| c + w / 2));
            continue;
        }
        for tri in triangulate(&verts) {
            rasterize(&tri, lo, hi, &mut out);
        }
    }
    out.into_iter().collect()
}
