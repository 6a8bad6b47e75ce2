//! Bounding cubes, octree decomposition and k-d trees.

mod bbox;
mod kdtree;
mod octree;

pub use bbox::{bounding_cube, BoundingBox};
pub use kdtree::{kd_build, KdTree, Neighbor};
pub use octree::{interleave, octree_decompose, LeafVoxel, OctreeCursor, OctreeNode, MAX_OCTREE_DEPTH};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpatialError {
    #[error("cloud is empty")]
    Empty,
    #[error("point {index} is not a non-negative integer voxel")]
    NotVoxelized { index: usize },
    #[error("point {index} lies outside the 2^{depth} cube")]
    OutsideCube { index: usize, depth: u32 },
    #[error("octree depth {0} exceeds the supported maximum")]
    DepthTooLarge(u32),
}
