use std::ops::Range;

use super::SpatialError;
use crate::cloud::PointCloud;

/// Keys are 64-bit with three bits per level.
pub const MAX_OCTREE_DEPTH: u32 = 21;

/// Interleaves voxel coordinates so that the three bits of each level form
/// the child index `4·x + 2·y + z`.
pub fn interleave(v: [u32; 3], depth: u32) -> u64 {
    let mut key = 0u64;
    for b in 0..depth {
        let x = ((v[0] >> b) & 1) as u64;
        let y = ((v[1] >> b) & 1) as u64;
        let z = ((v[2] >> b) & 1) as u64;
        key |= (x << 2 | y << 1 | z) << (3 * b);
    }
    key
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OctreeNode {
    /// Node coordinates in units of the node side at its level.
    pub coord: [u32; 3],
    pub occupancy: u8,
    /// Range into [`OctreeCursor::order`] covering the node's points.
    pub points: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafVoxel {
    pub coord: [u32; 3],
    pub points: Range<usize>,
}

/// Breadth-first octree over a voxelized cloud.
///
/// `levels[l]` holds the occupied nodes at level `l` (side `2^(depth-l)`),
/// in child-index order, each with its eight-bit child occupancy.
#[derive(Debug, Clone)]
pub struct OctreeCursor {
    pub depth: u32,
    pub levels: Vec<Vec<OctreeNode>>,
    pub leaves: Vec<LeafVoxel>,
    /// Point indices sorted by voxel key, then by index.
    pub order: Vec<usize>,
}

impl OctreeCursor {
    /// Side length of a node at `level`.
    pub fn node_side(&self, level: u32) -> u64 {
        1u64 << (self.depth - level)
    }

    /// All occupancy bytes in breadth-first order.
    pub fn occupancy_bytes(&self) -> Vec<u8> {
        self.levels.iter().flatten().map(|n| n.occupancy).collect()
    }
}

/// Recursively splits the `2^depth` cube, recording one occupancy byte per
/// occupied node down to the target depth.
pub fn octree_decompose(cloud: &PointCloud, depth: u32) -> Result<OctreeCursor, SpatialError> {
    if depth > MAX_OCTREE_DEPTH {
        return Err(SpatialError::DepthTooLarge(depth));
    }
    let voxels = cloud
        .voxels()
        .map_err(|_| first_bad(cloud))?;
    let limit = 1u64 << depth;
    if let Some(index) = voxels
        .iter()
        .position(|v| v.iter().any(|&c| c as u64 >= limit))
    {
        return Err(SpatialError::OutsideCube { index, depth });
    }
    let keys: Vec<u64> = voxels.iter().map(|&v| interleave(v, depth)).collect();
    let mut order: Vec<usize> = (0..voxels.len()).collect();
    order.sort_unstable_by_key(|&i| (keys[i], i));

    let mut levels = Vec::with_capacity(depth as usize);
    for level in 0..depth {
        let shift = 3 * (depth - level);
        let child_shift = shift - 3;
        let mut nodes: Vec<OctreeNode> = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            let prefix = keys[i] >> shift;
            let child = ((keys[i] >> child_shift) & 7) as u8;
            match nodes.last_mut() {
                Some(n) if keys[order[n.points.start]] >> shift == prefix => {
                    n.occupancy |= 1 << child;
                    n.points.end = pos + 1;
                }
                _ => nodes.push(OctreeNode {
                    coord: voxels[i].map(|c| c >> (depth - level)),
                    occupancy: 1 << child,
                    points: pos..pos + 1,
                }),
            }
        }
        levels.push(nodes);
    }

    let mut leaves: Vec<LeafVoxel> = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        match leaves.last_mut() {
            Some(l) if l.coord == voxels[i] => l.points.end = pos + 1,
            _ => leaves.push(LeafVoxel {
                coord: voxels[i],
                points: pos..pos + 1,
            }),
        }
    }
    Ok(OctreeCursor {
        depth,
        levels,
        leaves,
        order,
    })
}

fn first_bad(cloud: &PointCloud) -> SpatialError {
    let index = cloud
        .positions
        .iter()
        .position(|p| p.iter().any(|&c| !(c >= 0.0 && c.fract() == 0.0)))
        .unwrap_or(0);
    SpatialError::NotVoxelized { index }
}
