//! PCA normals and six-plane clustering.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::spatial::kd_build;

/// Axis-aligned projection planes, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Plane {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl Plane {
    pub const ALL: [Plane; 6] = [Plane::PosX, Plane::NegX, Plane::PosY, Plane::NegY, Plane::PosZ, Plane::NegZ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(i as usize).copied()
    }

    pub fn axis(self) -> usize {
        self.index() as usize / 2
    }

    pub fn positive(self) -> bool {
        self.index() % 2 == 0
    }

    pub fn normal(self) -> [f64; 3] {
        let mut n = [0.0; 3];
        n[self.axis()] = if self.positive() { 1.0 } else { -1.0 };
        n
    }
}

/// Unit normals from the covariance of each point's `k` nearest neighbours
/// (the point included), flipped to face away from the centroid. Normals
/// perpendicular to the centroid direction get a positive largest
/// component.
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Vec<[f64; 3]> {
    let n = cloud.len();
    if n == 0 {
        return Vec::new();
    }
    let k = k.max(3).min(n);
    let centroid = [0, 1, 2].map(|a| cloud.positions.iter().map(|p| p[a]).sum::<f64>() / n as f64);
    let tree = kd_build(&cloud.positions, 8);
    cloud
        .positions
        .par_iter()
        .map(|p| {
            let nb = tree.k_nearest_sq(p, k);
            let m = nb.len() as f64;
            let mean = [0, 1, 2].map(|a| nb.iter().map(|&(i, _)| cloud.positions[i][a]).sum::<f64>() / m);
            let mut cov = Matrix3::<f64>::zeros();
            for &(i, _) in &nb {
                let d = Vector3::from_fn(|a, _| cloud.positions[i][a] - mean[a]);
                cov += d * d.transpose();
            }
            let eig = SymmetricEigen::new(cov / m);
            let mut best = 0;
            for j in 1..3 {
                if eig.eigenvalues[j] < eig.eigenvalues[best] {
                    best = j;
                }
            }
            let v = eig.eigenvectors.column(best);
            let norm = v.norm();
            let mut nrm = [v[0] / norm, v[1] / norm, v[2] / norm];
            let out: f64 = (0..3).map(|a| nrm[a] * (p[a] - centroid[a])).sum();
            let flip = if out.abs() > 1e-9 {
                out < 0.0
            } else {
                let mut big = 0;
                for a in 1..3 {
                    if nrm[a].abs() > nrm[big].abs() {
                        big = a;
                    }
                }
                nrm[big] < 0.0
            };
            if flip {
                nrm = nrm.map(|c| -c);
            }
            nrm
        })
        .collect()
}

/// The plane whose normal has the largest dot product with `n`; earlier
/// planes win ties.
pub fn plane_for(n: &[f64; 3]) -> Plane {
    let mut best = Plane::PosX;
    let mut best_dot = f64::NEG_INFINITY;
    for p in Plane::ALL {
        let pn = p.normal();
        let d = n[0] * pn[0] + n[1] * pn[1] + n[2] * pn[2];
        if d > best_dot {
            best = p;
            best_dot = d;
        }
    }
    best
}

pub fn cluster_to_planes(normals: &[[f64; 3]]) -> Vec<Plane> {
    normals.iter().map(plane_for).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plane_normals_are_vertical() {
        let mut pts = Vec::new();
        for x in 0..20 {
            for y in 0..20 {
                pts.push([x as f64, y as f64, 0.0]);
            }
        }
        for n in estimate_normals(&PointCloud::new(pts), 8) {
            assert!((n[2].abs() - 1.0).abs() < 1e-6);
            assert!(n[0].abs() < 1e-6 && n[1].abs() < 1e-6);
        }
    }

    #[test]
    fn sphere_normals_are_radial() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<[f64; 3]> = (0..2000)
            .map(|_| {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = (1.0 - z * z).sqrt();
                [50.0 * r * t.cos(), 50.0 * r * t.sin(), 50.0 * z]
            })
            .collect();
        let normals = estimate_normals(&PointCloud::new(pts.clone()), 12);
        for (p, n) in pts.iter().zip(&normals) {
            let dot = (0..3).map(|a| p[a] / 50.0 * n[a]).sum::<f64>();
            assert!(dot >= 0.99, "{dot}");
        }
    }

    #[test]
    fn three_points_give_their_plane() {
        let c = PointCloud::new(vec![[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]);
        for n in estimate_normals(&c, 3) {
            assert!((n[2].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_points_still_get_a_unit_normal() {
        let c = PointCloud::new((0..10).map(|i| [i as f64, 0.0, 0.0]).collect());
        for n in estimate_normals(&c, 4) {
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            assert!((len - 1.0).abs() < 1e-9);
            assert!(n[0].abs() < 1e-9);
        }
    }

    #[test]
    fn plane_labels() {
        assert_eq!(plane_for(&[0.0, 0.0, 1.0]), Plane::PosZ);
        let s = 0.5f64.sqrt();
        assert_eq!(plane_for(&[s, s, 0.0]), Plane::PosX);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = [0; 3].map(|_: u8| rng.gen_range(-1.0..1.0));
            let dots = Plane::ALL.map(|p| {
                let pn = p.normal();
                n[0] * pn[0] + n[1] * pn[1] + n[2] * pn[2]
            });
            let mut want = 0;
            for i in 1..6 {
                if dots[i] > dots[want] {
                    want = i;
                }
            }
            assert_eq!(plane_for(&n), Plane::ALL[want]);
        }
    }
}
