//! Geometry coding: coordinate preparation, slicing, lossless octree coding
//! with direct coding of isolated points, and lossy triangle-soup coding.

mod bitstream;
mod occupancy;
mod prep;
mod slice;
pub(crate) mod trisoup;

pub use bitstream::{GeometryBitstream, GeometryMode, SliceStream};
pub use prep::{
    convert_coordinates, dequantize_positions, quantize_positions, restore_coordinates, ConversionParams,
    DuplicateMap, QuantizationParams,
};
pub use slice::{partition_slices, Slice, SliceMethod};

use rayon::prelude::*;
use thiserror::Error;

use crate::bytes::FrameError;
use crate::cloud::{CloudError, PointCloud};
use crate::spatial::{SpatialError, MAX_OCTREE_DEPTH};
use occupancy::{decode_octree, encode_octree, OctreeStreams};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error("duplicate position at point {0}")]
    DuplicatePositions(usize),
    #[error("octree level {level} must be below depth {depth}")]
    InvalidLevel { level: u32, depth: u32 },
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("corrupt geometry stream: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Cloud(#[from] CloudError),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GeometryConfig {
    pub mode: GeometryMode,
    pub dcm: bool,
    /// Trisoup block size exponent, `d - l`.
    pub dbodl: u32,
    pub slicing: Option<SliceMethod>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            mode: GeometryMode::Lossless,
            dcm: true,
            dbodl: 1,
            slicing: None,
        }
    }
}

fn depth_for(voxels: &[[u32; 3]]) -> Result<u32, GeometryError> {
    let max = voxels.iter().flat_map(|v| v.iter().copied()).max().unwrap_or(0);
    let depth = 32 - max.leading_zeros();
    if depth > MAX_OCTREE_DEPTH {
        return Err(SpatialError::DepthTooLarge(depth).into());
    }
    Ok(depth)
}

fn check_unique(voxels: &[[u32; 3]]) -> Result<(), GeometryError> {
    let mut idx: Vec<usize> = (0..voxels.len()).collect();
    idx.sort_unstable_by_key(|&i| (voxels[i], i));
    for w in idx.windows(2) {
        if voxels[w[0]] == voxels[w[1]] {
            return Err(GeometryError::DuplicatePositions(w[1]));
        }
    }
    Ok(())
}

fn lossless_slice(voxels: &[[u32; 3]], origin: [u32; 3], dcm: bool) -> Result<SliceStream, GeometryError> {
    let local: Vec<[u32; 3]> = voxels.iter().map(|v| [0, 1, 2].map(|a| v[a] - origin[a])).collect();
    check_unique(&local)?;
    let depth = depth_for(&local)?;
    let (streams, _) = encode_octree(&local, depth, depth, dcm);
    Ok(SliceStream {
        origin,
        depth,
        level: depth,
        dcm,
        point_count: local.len() as u32,
        occupancy: streams.occupancy,
        dcm_bits: streams.dcm,
        trisoup: Vec::new(),
    })
}

fn trisoup_slice(voxels: &[[u32; 3]], origin: [u32; 3], depth: u32, level: u32) -> Result<SliceStream, GeometryError> {
    if level >= depth {
        return Err(GeometryError::InvalidLevel { level, depth });
    }
    if depth > MAX_OCTREE_DEPTH {
        return Err(SpatialError::DepthTooLarge(depth).into());
    }
    let local: Vec<[u32; 3]> = voxels.iter().map(|v| [0, 1, 2].map(|a| v[a] - origin[a])).collect();
    if let Some(index) = local.iter().position(|v| v.iter().any(|&c| (c as u64) >> depth != 0)) {
        return Err(SpatialError::OutsideCube { index, depth }.into());
    }
    let (streams, result) = encode_octree(&local, depth, level, false);
    let payload = trisoup::encode_trisoup(&local, &result.nodes, depth - level);
    Ok(SliceStream {
        origin,
        depth,
        level,
        dcm: false,
        point_count: local.len() as u32,
        occupancy: streams.occupancy,
        dcm_bits: Vec::new(),
        trisoup: payload,
    })
}

fn bare(mode: GeometryMode, slices: Vec<SliceStream>) -> GeometryBitstream {
    GeometryBitstream {
        mode,
        conversion: ConversionParams::default(),
        quantization: None,
        slices,
    }
}

/// Lossless octree coding of a voxelized cloud with unique positions.
pub fn encode_geometry_lossless(cloud: &PointCloud, dcm: bool) -> Result<GeometryBitstream, GeometryError> {
    let voxels = cloud.voxels()?;
    Ok(bare(GeometryMode::Lossless, vec![lossless_slice(&voxels, [0; 3], dcm)?]))
}

/// Codes the octree down to `level` of a `2^depth` cube and the leaf blocks
/// (side `2^(depth - level)`) as triangle soups.
pub fn encode_geometry_trisoup(cloud: &PointCloud, depth: u32, level: u32) -> Result<GeometryBitstream, GeometryError> {
    let voxels = cloud.voxels()?;
    Ok(bare(GeometryMode::Trisoup, vec![trisoup_slice(&voxels, [0; 3], depth, level)?]))
}

/// Slices the cloud as configured and codes the slices in parallel.
pub fn encode_geometry(cloud: &PointCloud, config: &GeometryConfig) -> Result<GeometryBitstream, GeometryError> {
    let voxels = cloud.voxels()?;
    let groups: Vec<(Vec<[u32; 3]>, [u32; 3])> = match config.slicing {
        None => vec![(voxels, [0; 3])],
        Some(method) => partition_slices(cloud, method)
            .into_iter()
            .map(|s| {
                let pts: Vec<[u32; 3]> = s.indices.iter().map(|&i| voxels[i]).collect();
                (pts, s.min.map(|m| m as u32))
            })
            .collect(),
    };
    let slices = groups
        .par_iter()
        .map(|(pts, origin)| match config.mode {
            GeometryMode::Lossless => lossless_slice(pts, *origin, config.dcm),
            GeometryMode::Trisoup => {
                let local: Vec<[u32; 3]> = pts.iter().map(|v| [0, 1, 2].map(|a| v[a] - origin[a])).collect();
                let depth = depth_for(&local)?.max(config.dbodl + 1);
                trisoup_slice(pts, *origin, depth, depth - config.dbodl)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(bare(config.mode, slices))
}

fn decode_slice(mode: GeometryMode, s: &SliceStream) -> Result<Vec<[u32; 3]>, GeometryError> {
    let streams = OctreeStreams {
        occupancy: s.occupancy.clone(),
        dcm: s.dcm_bits.clone(),
    };
    let count = s.point_count as usize;
    let mut local = match mode {
        GeometryMode::Lossless => {
            if s.level != s.depth {
                return Err(GeometryError::Corrupt("lossless slice stops early"));
            }
            let r = decode_octree(&streams, s.depth, s.depth, s.dcm, count)?;
            let mut pts = r.direct;
            pts.extend(r.nodes);
            if pts.len() != count {
                return Err(GeometryError::Corrupt("point count mismatch"));
            }
            pts
        }
        GeometryMode::Trisoup => {
            if s.level >= s.depth {
                return Err(GeometryError::InvalidLevel {
                    level: s.level,
                    depth: s.depth,
                });
            }
            let r = decode_octree(&streams, s.depth, s.level, false, count)?;
            let w_log2 = s.depth - s.level;
            let verts = trisoup::decode_vertices(&s.trisoup, &r.nodes, w_log2)?;
            trisoup::reconstruct(&r.nodes, &verts, w_log2)
        }
    };
    local.sort_unstable_by_key(|&v| crate::spatial::interleave(v, s.depth));
    local
        .into_iter()
        .map(|v| {
            let mut g = [0u32; 3];
            for a in 0..3 {
                g[a] = v[a]
                    .checked_add(s.origin[a])
                    .ok_or(GeometryError::Corrupt("slice origin overflow"))?;
            }
            Ok(g)
        })
        .collect()
}

/// Decodes the voxel positions of every slice, in slice order.
pub fn decode_geometry(stream: &GeometryBitstream) -> Result<PointCloud, GeometryError> {
    let parts = stream
        .slices
        .par_iter()
        .map(|s| decode_slice(stream.mode, s))
        .collect::<Result<Vec<_>, _>>()?;
    let voxels: Vec<[u32; 3]> = parts.into_iter().flatten().collect();
    Ok(PointCloud::from_voxels(&voxels, None))
}

/// Maps decoded voxels back to world coordinates using the stream's
/// quantization and conversion parameters.
pub fn voxels_to_world(cloud: &PointCloud, stream: &GeometryBitstream) -> PointCloud {
    let mut out = match &stream.quantization {
        Some(q) => dequantize_positions(cloud, q),
        None => cloud.clone(),
    };
    out = restore_coordinates(&out, &stream.conversion);
    out
}
