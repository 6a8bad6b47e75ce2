//! Breadth-first occupancy coding with direct coding of isolated points.

use std::collections::HashSet;

use super::GeometryError;
use crate::entropy::{ArithDecoder, ArithEncoder, BitReader, BitWriter, ContextModel};
use crate::spatial::interleave;

const NEIGHBOR_BUCKETS: usize = 4;
const SET_BUCKETS: usize = 4;
const CONTEXTS: usize = 2 * NEIGHBOR_BUCKETS * 8 * SET_BUCKETS;

const FACES: [[i64; 3]; 6] = [
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
];

struct Contexts {
    occupancy: Vec<ContextModel>,
    dcm: ContextModel,
}

impl Contexts {
    fn new() -> Self {
        Self {
            occupancy: vec![ContextModel::new(); CONTEXTS],
            dcm: ContextModel::new(),
        }
    }
}

fn neighbor_count(set: &HashSet<[u32; 3]>, c: [u32; 3]) -> usize {
    FACES
        .iter()
        .filter(|d| {
            let n = [0, 1, 2].map(|a| c[a] as i64 + d[a]);
            n.iter().all(|&v| v >= 0 && v <= u32::MAX as i64)
                && set.contains(&n.map(|v| v as u32))
        })
        .count()
}

fn neighbor_bucket(n: usize) -> usize {
    match n {
        0 => 0,
        1 | 2 => 1,
        3 | 4 => 2,
        _ => 3,
    }
}

fn ctx_index(level: u32, depth: u32, nbucket: usize, bit: usize, set: usize) -> usize {
    let deep = (level * 2 >= depth) as usize;
    ((deep * NEIGHBOR_BUCKETS + nbucket) * 8 + bit) * SET_BUCKETS + set.min(SET_BUCKETS - 1)
}

fn child_coord(parent: [u32; 3], child: usize) -> [u32; 3] {
    [
        parent[0] << 1 | (child >> 2 & 1) as u32,
        parent[1] << 1 | (child >> 1 & 1) as u32,
        parent[2] << 1 | (child & 1) as u32,
    ]
}

fn encode_byte(enc: &mut ArithEncoder, ctx: &mut Contexts, byte: u8, level: u32, depth: u32, nb: usize) {
    let mut set = 0;
    for bit in 0..8 {
        if bit == 7 && set == 0 {
            break;
        }
        let on = byte >> bit & 1 == 1;
        enc.encode(&mut ctx.occupancy[ctx_index(level, depth, nb, bit, set)], on);
        set += on as usize;
    }
}

fn decode_byte(dec: &mut ArithDecoder<'_>, ctx: &mut Contexts, level: u32, depth: u32, nb: usize) -> u8 {
    let mut set = 0;
    let mut byte = 0u8;
    for bit in 0..8 {
        if bit == 7 && set == 0 {
            byte |= 0x80;
            break;
        }
        if dec.decode(&mut ctx.occupancy[ctx_index(level, depth, nb, bit, set)]) {
            byte |= 1 << bit;
            set += 1;
        }
    }
    byte
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct OctreeStreams {
    pub occupancy: Vec<u8>,
    pub dcm: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct OctreeResult {
    /// Points recovered directly from DCM, full resolution.
    pub direct: Vec<[u32; 3]>,
    /// Occupied nodes at the stop level, in node units.
    pub nodes: Vec<[u32; 3]>,
}

/// Codes the octree of `voxels` (all inside the `2^depth` cube, unique when
/// `stop == depth`) down to level `stop`.
pub(crate) fn encode_octree(voxels: &[[u32; 3]], depth: u32, stop: u32, dcm: bool) -> (OctreeStreams, OctreeResult) {
    let mut keyed: Vec<(u64, [u32; 3])> = voxels.iter().map(|&v| (interleave(v, depth), v)).collect();
    keyed.sort_unstable_by_key(|e| e.0);
    let mut enc = ArithEncoder::new();
    let mut bits = BitWriter::new();
    let mut ctx = Contexts::new();
    let mut result = OctreeResult::default();
    if keyed.is_empty() {
        return (OctreeStreams::default(), result);
    }

    let mut nodes: Vec<([u32; 3], std::ops::Range<usize>)> = vec![([0; 3], 0..keyed.len())];
    for level in 0..stop {
        let set: HashSet<[u32; 3]> = nodes.iter().map(|n| n.0).collect();
        let rem = depth - level;
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for (coord, range) in nodes {
            let nc = neighbor_count(&set, coord);
            if dcm && level >= 1 && nc == 0 {
                let single = range.len() == 1;
                enc.encode(&mut ctx.dcm, single);
                if single {
                    let v = keyed[range.start].1;
                    for a in 0..3 {
                        bits.write_bits((v[a] & ((1u32 << rem) - 1)) as u64, rem);
                    }
                    result.direct.push(v);
                    continue;
                }
            }
            let shift = 3 * (rem - 1);
            let mut byte = 0u8;
            let mut start = range.start;
            while start < range.end {
                let child = (keyed[start].0 >> shift & 7) as usize;
                let mut end = start + 1;
                while end < range.end && (keyed[end].0 >> shift & 7) as usize == child {
                    end += 1;
                }
                byte |= 1 << child;
                next.push((child_coord(coord, child), start..end));
                start = end;
            }
            encode_byte(&mut enc, &mut ctx, byte, level, depth, neighbor_bucket(nc));
        }
        nodes = next;
    }
    result.nodes = nodes.into_iter().map(|n| n.0).collect();
    let streams = OctreeStreams {
        occupancy: enc.finish(),
        dcm: bits.finish(),
    };
    (streams, result)
}

/// Inverse of [`encode_octree`]. `max_points` bounds the number of nodes and
/// direct points so corrupt input cannot blow up memory.
pub(crate) fn decode_octree(
    streams: &OctreeStreams,
    depth: u32,
    stop: u32,
    dcm: bool,
    max_points: usize,
) -> Result<OctreeResult, GeometryError> {
    let mut result = OctreeResult::default();
    if max_points == 0 {
        return Ok(result);
    }
    let mut dec = ArithDecoder::new(&streams.occupancy);
    let mut bits = BitReader::new(&streams.dcm);
    let mut ctx = Contexts::new();
    let mut nodes: Vec<[u32; 3]> = vec![[0; 3]];
    for level in 0..stop {
        let set: HashSet<[u32; 3]> = nodes.iter().copied().collect();
        let rem = depth - level;
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for coord in nodes {
            let nc = neighbor_count(&set, coord);
            if dcm && level >= 1 && nc == 0 && dec.decode(&mut ctx.dcm) {
                let mut v = [0u32; 3];
                for a in 0..3 {
                    let low = bits
                        .read_bits(rem)
                        .map_err(|_| GeometryError::Corrupt("direct-coded bits exhausted"))?;
                    v[a] = coord[a] << rem | low as u32;
                }
                result.direct.push(v);
            } else {
                let byte = decode_byte(&mut dec, &mut ctx, level, depth, neighbor_bucket(nc));
                for child in 0..8 {
                    if byte >> child & 1 == 1 {
                        next.push(child_coord(coord, child));
                    }
                }
            }
            if next.len() + result.direct.len() > max_points {
                return Err(GeometryError::Corrupt("more nodes than points"));
            }
        }
        if dec.overran() {
            return Err(GeometryError::Corrupt("occupancy stream exhausted"));
        }
        nodes = next;
    }
    result.nodes = nodes;
    Ok(result)
}
