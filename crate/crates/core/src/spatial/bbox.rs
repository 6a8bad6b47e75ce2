use super::SpatialError;
use crate::cloud::{CloudError, PointCloud};

/// Axis-aligned box with the cubical power-of-two extent used by the octree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
    /// Smallest `n` with `2^n >= ` the largest coordinate.
    pub cube_log2: u32,
    /// Largest coordinate over all axes.
    pub max_coord: u32,
}

impl BoundingBox {
    /// Number of bits needed to address every occupied voxel, i.e. the
    /// smallest `d` with `2^d > max_coord`.
    ///
    /// This differs from `cube_log2` when the largest coordinate is itself a
    /// power of two: the cube `[0, 2^n]` contains it, but voxel index `2^n`
    /// needs one more bit.
    pub fn octree_depth(&self) -> u32 {
        32 - self.max_coord.leading_zeros()
    }

    pub fn side(&self) -> u64 {
        1u64 << self.cube_log2
    }
}

/// Computes the cubical bounding box `(0,0,0)-(2^n,2^n,2^n)` of a voxelized
/// cloud, with `n` minimal.
pub fn bounding_cube(cloud: &PointCloud) -> Result<BoundingBox, SpatialError> {
    if cloud.is_empty() {
        return Err(SpatialError::Empty);
    }
    let voxels = cloud.voxels().map_err(|e| match e {
        CloudError::NotVoxelized { index } => SpatialError::NotVoxelized { index },
        _ => SpatialError::Empty,
    })?;
    let max_coord = voxels.iter().flat_map(|v| v.iter().copied()).max().unwrap_or(0);
    let cube_log2 = if max_coord <= 1 {
        0
    } else {
        32 - (max_coord - 1).leading_zeros()
    };
    let side = (1u64 << cube_log2) as f64;
    Ok(BoundingBox {
        min: [0.0; 3],
        max: [side; 3],
        cube_log2,
        max_coord,
    })
}
