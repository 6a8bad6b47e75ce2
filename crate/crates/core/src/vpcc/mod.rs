//! Projection-based coding: points are grouped into patches, projected onto
//! axis-aligned planes, packed into 2D depth and texture images and coded
//! with an image codec.

mod image;
mod normals;
mod pack;
mod patch;

pub use self::image::{pad_image, Image, ImageCodec, ReferenceCodec, PAD_ITERATIONS};
pub use normals::{cluster_to_planes, estimate_normals, plane_for, Plane};
pub use pack::{build_occupancy_map, pack_patches, OccupancyMap};
pub use patch::{connected_components, extract_patches, tangent_axes, Patch};

use rayon::prelude::*;
use thiserror::Error;

use crate::bytes::{ByteReader, ByteWriter, FrameError};
use crate::cloud::{CloudError, PointCloud};

#[derive(Debug, Error)]
pub enum VpccError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Cloud(#[from] CloudError),
    #[error("corrupt frame: {0}")]
    Corrupt(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VpccConfig {
    /// Neighbours used for normal estimation.
    pub normal_k: usize,
    /// Surface thickness: far-layer depth stays within `near + delta`.
    pub delta: u32,
    pub block: u32,
    pub sub_block: u32,
    /// Initial grid width.
    pub width: u32,
    pub geometry_qstep: u16,
    pub texture_qstep: u16,
}

impl Default for VpccConfig {
    fn default() -> Self {
        Self {
            normal_k: 16,
            delta: 4,
            block: 16,
            sub_block: 4,
            width: 1280,
            geometry_qstep: 1,
            texture_qstep: 1,
        }
    }
}

/// Patch placement and projection parameters, without pixel data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchInfo {
    pub plane: Plane,
    pub u_min: u32,
    pub v_min: u32,
    pub depth_ref: u32,
    pub width: u32,
    pub height: u32,
    pub u0: u32,
    pub v0: u32,
}

impl From<&Patch> for PatchInfo {
    fn from(p: &Patch) -> Self {
        Self {
            plane: p.plane,
            u_min: p.u_min,
            v_min: p.v_min,
            depth_ref: p.depth_ref,
            width: p.width,
            height: p.height,
            u0: p.u0,
            v0: p.v0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedFrames {
    pub patches: Vec<PatchInfo>,
    pub occupancy: OccupancyMap,
    pub near: Image,
    pub far: Image,
    pub texture_near: Option<[Image; 3]>,
    pub texture_far: Option<[Image; 3]>,
}

/// Runs the projection front end on a voxelized cloud and pads the images.
pub fn project(cloud: &PointCloud, config: &VpccConfig) -> Result<ProjectedFrames, VpccError> {
    let voxels = cloud.voxels()?;
    let normals = estimate_normals(cloud, config.normal_k);
    let labels = cluster_to_planes(&normals);
    let mut patches = extract_patches(&voxels, cloud.colors.as_deref(), &labels, config.delta);
    let block = config.block.max(config.sub_block).max(1);
    let (w, h) = pack_patches(&mut patches, config.width.max(block), block);
    let occupancy = build_occupancy_map(&patches, w, h, block, config.sub_block.max(1));
    let mut near = Image::new(w, h);
    let mut far = Image::new(w, h);
    let colored = cloud.colors.is_some();
    let mut tn = [Image::new(w, h), Image::new(w, h), Image::new(w, h)];
    let mut tf = tn.clone();
    for p in &patches {
        for y in 0..p.height {
            for x in 0..p.width {
                let i = (y * p.width + x) as usize;
                if !p.occupied[i] {
                    continue;
                }
                let (gx, gy) = (p.u0 + x, p.v0 + y);
                near.set(gx, gy, p.near[i]);
                far.set(gx, gy, p.far[i]);
                for c in 0..3 {
                    tn[c].set(gx, gy, p.color_near[i][c] as u16);
                    tf[c].set(gx, gy, p.color_far[i][c] as u16);
                }
            }
        }
    }
    let occ = &occupancy.pixels;
    let mut planes: Vec<&mut Image> = vec![&mut near, &mut far];
    if colored {
        planes.extend(tn.iter_mut());
        planes.extend(tf.iter_mut());
    }
    planes.into_par_iter().for_each(|img| pad_image(img, occ));
    Ok(ProjectedFrames {
        patches: patches.iter().map(PatchInfo::from).collect(),
        occupancy,
        near,
        far,
        texture_near: colored.then_some(tn),
        texture_far: colored.then_some(tf),
    })
}

/// Re-emits a point for every occupied pixel (and a second one where the
/// far layer differs from the near layer).
pub fn reconstruct_cloud(frames: &ProjectedFrames) -> Result<PointCloud, VpccError> {
    let occ = &frames.occupancy;
    let mut positions = Vec::new();
    let mut colors = Vec::new();
    for p in &frames.patches {
        if p.u0 + p.width > occ.width || p.v0 + p.height > occ.height {
            return Err(VpccError::Corrupt("patch outside the grid"));
        }
        let axis = p.plane.axis();
        let (ua, va) = tangent_axes(axis);
        let coord = |d: u16| -> Result<u32, VpccError> {
            if p.plane.positive() {
                p.depth_ref.checked_sub(d as u32)
            } else {
                p.depth_ref.checked_add(d as u32)
            }
            .ok_or(VpccError::Corrupt("depth out of range"))
        };
        for y in 0..p.height {
            for x in 0..p.width {
                let (gx, gy) = (p.u0 + x, p.v0 + y);
                if !occ.get(gx, gy) {
                    continue;
                }
                let d0 = frames.near.get(gx, gy);
                let d1 = frames.far.get(gx, gy);
                let layers: &[(u16, Option<&[Image; 3]>)] = if d1 != d0 {
                    &[(d0, frames.texture_near.as_ref()), (d1, frames.texture_far.as_ref())]
                } else {
                    &[(d0, frames.texture_near.as_ref())]
                };
                for &(d, tex) in layers {
                    let mut pos = [0.0; 3];
                    pos[axis] = coord(d)? as f64;
                    pos[ua] = (p.u_min + x) as f64;
                    pos[va] = (p.v_min + y) as f64;
                    positions.push(pos);
                    if let Some(t) = tex {
                        colors.push([0, 1, 2].map(|c| t[c].get(gx, gy).min(255) as u8));
                    }
                }
            }
        }
    }
    let mut out = PointCloud::new(positions);
    if frames.texture_near.is_some() {
        out.colors = Some(colors);
    }
    Ok(out)
}

const MAGIC: &str = "GPCV";
const VERSION: u8 = 1;

/// Byte counts of the coded frame, split by what they describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VpccSizes {
    pub geometry: usize,
    pub texture: usize,
}

fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

/// Projects and codes a voxelized cloud into a `GPCV` frame.
pub fn encode_vpcc(cloud: &PointCloud, config: &VpccConfig, codec: &dyn ImageCodec) -> Result<(Vec<u8>, VpccSizes), VpccError> {
    let frames = project(cloud, config)?;
    Ok(write_frames(&frames, config, codec))
}

pub fn write_frames(frames: &ProjectedFrames, config: &VpccConfig, codec: &dyn ImageCodec) -> (Vec<u8>, VpccSizes) {
    let occ = &frames.occupancy;
    let mut w = ByteWriter::new();
    w.raw(MAGIC.as_bytes()).u8(VERSION);
    w.u32(occ.width).u32(occ.height).u16(occ.block as u16).u16(occ.sub_block as u16);
    w.u8(frames.texture_near.is_some() as u8);
    w.u32(frames.patches.len() as u32);
    for p in &frames.patches {
        w.u8(p.plane.index());
        for v in [p.u_min, p.v_min, p.depth_ref, p.width, p.height, p.u0, p.v0] {
            w.u32(v);
        }
    }
    w.section(&image::deflate(&pack_bits(&occ.pixels)));
    let geo = [&frames.near, &frames.far];
    let coded: Vec<Vec<u8>> = geo.par_iter().map(|img| codec.encode(img, config.geometry_qstep)).collect();
    for c in &coded {
        w.section(c);
    }
    let geometry_len = w.clone().into_inner().len();
    if let (Some(tn), Some(tf)) = (&frames.texture_near, &frames.texture_far) {
        let planes: Vec<&Image> = tn.iter().chain(tf.iter()).collect();
        let coded: Vec<Vec<u8>> = planes.par_iter().map(|img| codec.encode(img, config.texture_qstep)).collect();
        for c in &coded {
            w.section(c);
        }
    }
    let bytes = w.into_inner();
    let sizes = VpccSizes {
        geometry: geometry_len,
        texture: bytes.len() - geometry_len,
    };
    (bytes, sizes)
}

/// Length of the leading part of a frame that describes geometry: header,
/// patch table, occupancy and the two depth images.
pub fn geometry_prefix_len(data: &[u8]) -> Result<usize, VpccError> {
    let mut r = ByteReader::new(data);
    r.expect_magic(MAGIC)?;
    r.take(1 + 4 + 4 + 2 + 2 + 1)?;
    let count = r.u32()? as usize;
    r.take(count.checked_mul(29).ok_or(VpccError::Corrupt("patch count"))?)?;
    for _ in 0..3 {
        r.section()?;
    }
    Ok(r.position())
}

pub fn read_frames(data: &[u8], codec: &dyn ImageCodec) -> Result<ProjectedFrames, VpccError> {
    let mut r = ByteReader::new(data);
    r.expect_magic(MAGIC)?;
    let version = r.u8()?;
    if version != VERSION {
        return Err(FrameError::Version(version).into());
    }
    let width = r.u32()?;
    let height = r.u32()?;
    let block = r.u16()? as u32;
    let sub_block = r.u16()? as u32;
    let colored = r.u8()? != 0;
    let n = width as usize * height as usize;
    if n > 1 << 28 || block == 0 || sub_block == 0 {
        return Err(VpccError::Corrupt("frame header"));
    }
    let count = r.u32()? as usize;
    if count > r.remaining() / 29 {
        return Err(VpccError::Corrupt("patch count"));
    }
    let mut patches = Vec::with_capacity(count);
    for _ in 0..count {
        let plane = Plane::from_index(r.u8()?).ok_or(VpccError::Corrupt("plane"))?;
        let mut v = [0u32; 7];
        for x in &mut v {
            *x = r.u32()?;
        }
        patches.push(PatchInfo {
            plane,
            u_min: v[0],
            v_min: v[1],
            depth_ref: v[2],
            width: v[3],
            height: v[4],
            u0: v[5],
            v0: v[6],
        });
    }
    let bits = image::inflate(r.section()?, n.div_ceil(8))?;
    if bits.len() != n.div_ceil(8) {
        return Err(VpccError::Corrupt("occupancy size"));
    }
    let pixels = (0..n).map(|i| bits[i / 8] >> (i % 8) & 1 == 1).collect();
    let occupancy = OccupancyMap::from_pixels(width, height, block, sub_block, pixels);
    let mut next = || -> Result<Image, VpccError> {
        let img = codec.decode(r.section()?)?;
        if img.width != width || img.height != height {
            return Err(VpccError::Corrupt("image size"));
        }
        Ok(img)
    };
    let near = next()?;
    let far = next()?;
    let (texture_near, texture_far) = if colored {
        (Some([next()?, next()?, next()?]), Some([next()?, next()?, next()?]))
    } else {
        (None, None)
    };
    if r.remaining() != 0 {
        return Err(FrameError::Invalid("trailing bytes").into());
    }
    Ok(ProjectedFrames {
        patches,
        occupancy,
        near,
        far,
        texture_near,
        texture_far,
    })
}

pub fn decode_vpcc(data: &[u8], codec: &dyn ImageCodec) -> Result<PointCloud, VpccError> {
    reconstruct_cloud(&read_frames(data, codec)?)
}
