//! Connected patches and their orthographic projection.

use std::collections::HashMap;

use super::normals::Plane;

/// Tangent axes `(u, v)` for a projection axis.
pub fn tangent_axes(axis: usize) -> (usize, usize) {
    ((axis + 1) % 3, (axis + 2) % 3)
}

/// One projected patch. Pixel `(x, y)` of the patch maps to tangent
/// coordinates `(u_min + x, v_min + y)`. Depth is measured from
/// `depth_ref` towards the inside of the surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub plane: Plane,
    pub u_min: u32,
    pub v_min: u32,
    pub depth_ref: u32,
    pub width: u32,
    pub height: u32,
    /// Position on the packed grid, set by packing.
    pub u0: u32,
    pub v0: u32,
    pub occupied: Vec<bool>,
    pub near: Vec<u16>,
    pub far: Vec<u16>,
    pub color_near: Vec<[u8; 3]>,
    pub color_far: Vec<[u8; 3]>,
    /// Input points represented by the near or far layer.
    pub points: Vec<usize>,
}

impl Patch {
    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    /// Depth of a voxel coordinate along the patch axis.
    pub fn depth_of(&self, c: u32) -> u32 {
        if self.plane.positive() {
            self.depth_ref - c
        } else {
            c - self.depth_ref
        }
    }

    pub fn coord_of(&self, depth: u32) -> Option<u32> {
        if self.plane.positive() {
            self.depth_ref.checked_sub(depth)
        } else {
            self.depth_ref.checked_add(depth)
        }
    }
}

/// Groups same-label voxels into 26-connected components, ordered by their
/// smallest point index.
pub fn connected_components(voxels: &[[u32; 3]], labels: &[Plane]) -> Vec<Vec<usize>> {
    let mut at: HashMap<[u32; 3], Vec<usize>> = HashMap::with_capacity(voxels.len());
    for (i, v) in voxels.iter().enumerate() {
        at.entry(*v).or_default().push(i);
    }
    let mut seen = vec![false; voxels.len()];
    let mut out = Vec::new();
    for start in 0..voxels.len() {
        if seen[start] {
            continue;
        }
        let label = labels[start];
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            comp.push(i);
            let v = voxels[i];
            for dx in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dz in -1i64..=1 {
                        let n = [v[0] as i64 + dx, v[1] as i64 + dy, v[2] as i64 + dz];
                        if n.iter().any(|&c| c < 0 || c > u32::MAX as i64) {
                            continue;
                        }
                        if let Some(list) = at.get(&n.map(|c| c as u32)) {
                            for &j in list {
                                if !seen[j] && labels[j] == label {
                                    seen[j] = true;
                                    stack.push(j);
                                }
                            }
                        }
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Projects each component onto its plane, keeping per pixel the nearest
/// depth and the farthest depth within `delta` of it.
pub fn extract_patches(voxels: &[[u32; 3]], colors: Option<&[[u8; 3]]>, labels: &[Plane], delta: u32) -> Vec<Patch> {
    connected_components(voxels, labels)
        .into_iter()
        .map(|comp| project_component(voxels, colors, labels[comp[0]], &comp, delta))
        .collect()
}

fn project_component(voxels: &[[u32; 3]], colors: Option<&[[u8; 3]]>, plane: Plane, comp: &[usize], delta: u32) -> Patch {
    let axis = plane.axis();
    let (ua, va) = tangent_axes(axis);
    let u_min = comp.iter().map(|&i| voxels[i][ua]).min().unwrap();
    let v_min = comp.iter().map(|&i| voxels[i][va]).min().unwrap();
    let u_max = comp.iter().map(|&i| voxels[i][ua]).max().unwrap();
    let v_max = comp.iter().map(|&i| voxels[i][va]).max().unwrap();
    let depth_ref = if plane.positive() {
        comp.iter().map(|&i| voxels[i][axis]).max().unwrap()
    } else {
        comp.iter().map(|&i| voxels[i][axis]).min().unwrap()
    };
    let width = u_max - u_min + 1;
    let height = v_max - v_min + 1;
    let size = (width * height) as usize;
    let mut patch = Patch {
        plane,
        u_min,
        v_min,
        depth_ref,
        width,
        height,
        u0: 0,
        v0: 0,
        occupied: vec![false; size],
        near: vec![0; size],
        far: vec![0; size],
        color_near: vec![[0; 3]; size],
        color_far: vec![[0; 3]; size],
        points: Vec::new(),
    };
    let pix = |i: usize| ((voxels[i][va] - v_min) * width + voxels[i][ua] - u_min) as usize;
    let color = |i: usize| colors.map(|c| c[i]).unwrap_or([0; 3]);
    let mut near_idx = vec![usize::MAX; size];
    for &i in comp {
        let p = pix(i);
        let d = patch.depth_of(voxels[i][axis]).min(u16::MAX as u32) as u16;
        if !patch.occupied[p] || d < patch.near[p] {
            patch.occupied[p] = true;
            patch.near[p] = d;
            near_idx[p] = i;
        }
    }
    let mut far_idx = near_idx.clone();
    for &i in comp {
        let p = pix(i);
        let d = patch.depth_of(voxels[i][axis]).min(u16::MAX as u32) as u16;
        if d as u32 <= patch.near[p] as u32 + delta && d > patch.far[p].max(patch.near[p]) {
            patch.far[p] = d;
            far_idx[p] = i;
        }
    }
    for p in 0..size {
        if patch.occupied[p] {
            patch.far[p] = patch.far[p].max(patch.near[p]);
            patch.color_near[p] = color(near_idx[p]);
            patch.color_far[p] = color(far_idx[p]);
            patch.points.push(near_idx[p]);
            if far_idx[p] != near_idx[p] {
                patch.points.push(far_idx[p]);
            }
        }
    }
    patch
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(z: u32, x0: u32) -> Vec<[u32; 3]> {
        let mut v = Vec::new();
        for x in x0..x0 + 5 {
            for y in 0..5 {
                v.push([x, y, z]);
            }
        }
        v
    }

    #[test]
    fn flat_square_is_one_patch() {
        let v = square(7, 0);
        let labels = vec![Plane::PosZ; v.len()];
        let p = extract_patches(&v, None, &labels, 4);
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].width, p[0].height), (5, 5));
        assert!(p[0].occupied.iter().all(|&o| o));
        assert_eq!(p[0].near, p[0].far);
    }

    #[test]
    fn disjoint_squares_split() {
        let mut v = square(7, 0);
        v.extend(square(7, 10));
        let labels = vec![Plane::PosZ; v.len()];
        assert_eq!(extract_patches(&v, None, &labels, 4).len(), 2);
    }

    #[test]
    fn near_takes_min_far_takes_max() {
        let v = vec![[0, 0, 10], [0, 0, 12], [0, 0, 11], [0, 0, 20]];
        let colors = vec![[1; 3], [2; 3], [3; 3], [4; 3]];
        let labels = vec![Plane::NegZ; 3].into_iter().chain([Plane::NegZ]).collect::<Vec<_>>();
        // Point at z = 20 is not 26-connected to the rest.
        let p = extract_patches(&v, Some(&colors), &labels, 4);
        assert_eq!(p.len(), 2);
        let a = &p[0];
        assert_eq!((a.near[0], a.far[0]), (0, 2));
        assert_eq!(a.color_near[0], [1; 3]);
        assert_eq!(a.color_far[0], [2; 3]);
        assert_eq!(a.coord_of(a.far[0] as u32), Some(12));
    }

    #[test]
    fn far_layer_clipped_to_delta() {
        let v: Vec<[u32; 3]> = (0..8).map(|z| [0, 0, z]).collect();
        let labels = vec![Plane::PosZ; v.len()];
        let p = extract_patches(&v, None, &labels, 3);
        assert_eq!((p[0].near[0], p[0].far[0]), (0, 3));
        assert_eq!(p[0].coord_of(0), Some(7));
    }
}
