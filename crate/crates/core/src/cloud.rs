//! The point-cloud model shared by every pipeline stage.

use thiserror::Error;

/// Which color space the 8-bit color triplets are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum ColorSpace {
    #[default]
    Rgb,
    Yuv,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CloudError {
    #[error("{what} has {got} entries but the cloud has {expected} points")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("cloud has no colors")]
    MissingColors,
    #[error("position {index} is not a non-negative integer voxel")]
    NotVoxelized { index: usize },
    #[error("cloud is empty")]
    Empty,
}

/// An ordered list of points with optional per-point colors and normals.
///
/// Positions are stored as `f64` so that real-valued input survives until
/// quantization; after quantization every coordinate is an exact integer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub positions: Vec<[f64; 3]>,
    pub colors: Option<Vec<[u8; 3]>>,
    pub color_space: ColorSpace,
    pub normals: Option<Vec<[f64; 3]>>,
}

impl PointCloud {
    pub fn new(positions: Vec<[f64; 3]>) -> Self {
        Self {
            positions,
            ..Default::default()
        }
    }

    pub fn with_colors(positions: Vec<[f64; 3]>, colors: Vec<[u8; 3]>) -> Self {
        Self {
            positions,
            colors: Some(colors),
            ..Default::default()
        }
    }

    /// Builds a cloud from integer voxel coordinates.
    pub fn from_voxels(voxels: &[[u32; 3]], colors: Option<Vec<[u8; 3]>>) -> Self {
        Self {
            positions: voxels
                .iter()
                .map(|v| [v[0] as f64, v[1] as f64, v[2] as f64])
                .collect(),
            colors,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn has_colors(&self) -> bool {
        self.colors.is_some()
    }

    pub fn colors(&self) -> Result<&[[u8; 3]], CloudError> {
        self.colors.as_deref().ok_or(CloudError::MissingColors)
    }

    pub fn validate(&self) -> Result<(), CloudError> {
        let n = self.len();
        if let Some(c) = &self.colors {
            if c.len() != n {
                return Err(CloudError::LengthMismatch {
                    what: "colors",
                    got: c.len(),
                    expected: n,
                });
            }
        }
        if let Some(nm) = &self.normals {
            if nm.len() != n {
                return Err(CloudError::LengthMismatch {
                    what: "normals",
                    got: nm.len(),
                    expected: n,
                });
            }
        }
        Ok(())
    }

    /// Returns the positions as integer voxels, failing if any coordinate is
    /// negative, fractional or too large for `u32`.
    pub fn voxels(&self) -> Result<Vec<[u32; 3]>, CloudError> {
        self.positions
            .iter()
            .enumerate()
            .map(|(index, p)| {
                let mut v = [0u32; 3];
                for a in 0..3 {
                    let c = p[a];
                    if !(c >= 0.0 && c <= u32::MAX as f64 && c.fract() == 0.0) {
                        return Err(CloudError::NotVoxelized { index });
                    }
                    v[a] = c as u32;
                }
                Ok(v)
            })
            .collect()
    }

    /// Copies out the points at `indices`, keeping colors and normals aligned.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            positions: indices.iter().map(|&i| self.positions[i]).collect(),
            colors: self
                .colors
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
            color_space: self.color_space,
            normals: self
                .normals
                .as_ref()
                .map(|n| indices.iter().map(|&i| n[i]).collect()),
        }
    }

    /// Component-wise minimum and maximum of the positions.
    pub fn extent(&self) -> Option<([f64; 3], [f64; 3])> {
        let first = *self.positions.first()?;
        let mut lo = first;
        let mut hi = first;
        for p in &self.positions[1..] {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        Some((lo, hi))
    }

    /// Position/color pairs sorted lexicographically; used to compare clouds
    /// as sets regardless of point order.
    pub fn sorted_entries(&self) -> Vec<([u64; 3], [u8; 3])> {
        let mut v: Vec<_> = self
            .positions
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let key = [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()];
                let c = self.colors.as_ref().map(|c| c[i]).unwrap_or([0; 3]);
                (key, c)
            })
            .collect();
        v.sort_unstable_by(|a, b| {
            let pa = a.0.map(f64::from_bits);
            let pb = b.0.map(f64::from_bits);
            pa.partial_cmp(&pb).unwrap().then(a.1.cmp(&b.1))
        });
        v
    }
}

#[inline]
pub(crate) fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Rounds half away from zero; the single tie rule used by every quantizer.
#[inline]
pub fn round_half_away(x: f64) -> f64 {
    x.round()
}
