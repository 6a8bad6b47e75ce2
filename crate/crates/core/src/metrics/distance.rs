//! Point-to-point distances and PSNR.

use rayon::prelude::*;

use super::MetricsError;
use crate::cloud::PointCloud;
use crate::spatial::kd_build;

/// Reported when the distortion is exactly zero.
pub const PSNR_CAP: f64 = 999.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Channel {
    Geometry,
    /// First color component (Y, or R for RGB clouds).
    Y,
    U,
    V,
}

impl Channel {
    fn color_index(self) -> Option<usize> {
        match self {
            Channel::Geometry => None,
            Channel::Y => Some(0),
            Channel::U => Some(1),
            Channel::V => Some(2),
        }
    }
}

/// Squared error of every point of `a` against its nearest neighbour in `b`.
fn squared_errors(a: &PointCloud, b: &PointCloud, channel: Channel) -> Result<Vec<f64>, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::Empty);
    }
    let colors = match channel.color_index() {
        None => None,
        Some(ch) => {
            let ca = a.colors.as_ref().ok_or(MetricsError::MissingColors)?;
            let cb = b.colors.as_ref().ok_or(MetricsError::MissingColors)?;
            Some((ch, ca, cb))
        }
    };
    let tree = kd_build(&b.positions, 8);
    Ok(a.positions
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let nn = tree.k_nearest_sq(p, 1)[0];
            match colors {
                None => nn.1,
                Some((ch, ca, cb)) => {
                    let d = ca[i][ch] as f64 - cb[nn.0][ch] as f64;
                    d * d
                }
            }
        })
        .collect())
}

/// Root mean squared error from each point of `a` to its nearest neighbour
/// in `b`; color channels are compared at the geometric nearest neighbour.
pub fn d_rms(a: &PointCloud, b: &PointCloud, channel: Channel) -> Result<f64, MetricsError> {
    let e = squared_errors(a, b, channel)?;
    Ok((e.iter().sum::<f64>() / e.len() as f64).sqrt())
}

/// Symmetric distance: the worse of the two directions.
pub fn d_s_rms(a: &PointCloud, b: &PointCloud, channel: Channel) -> Result<f64, MetricsError> {
    Ok(d_rms(a, b, channel)?.max(d_rms(b, a, channel)?))
}

/// Largest axis-aligned extent of the cloud.
pub fn omega(cloud: &PointCloud) -> Result<f64, MetricsError> {
    let (lo, hi) = cloud.extent().ok_or(MetricsError::Empty)?;
    Ok((0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max))
}

/// `10·log10(peak² / d²)`, capped when `d` is zero.
pub fn psnr(peak: f64, d: f64) -> f64 {
    if d == 0.0 {
        PSNR_CAP
    } else {
        10.0 * (peak * peak / (d * d)).log10()
    }
}

/// Geometry PSNR with the peak taken from the original cloud's extent.
pub fn psnr_geometry(original: &PointCloud, reconstructed: &PointCloud) -> Result<f64, MetricsError> {
    let d = d_s_rms(original, reconstructed, Channel::Geometry)?;
    Ok(psnr(omega(original)?, d))
}

pub fn psnr_color(original: &PointCloud, reconstructed: &PointCloud, channel: Channel) -> Result<f64, MetricsError> {
    if channel == Channel::Geometry {
        return Err(MetricsError::WrongChannel);
    }
    let d = d_s_rms(original, reconstructed, channel)?;
    Ok(psnr(255.0, d))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DistanceReport {
    pub d_rms_forward: f64,
    pub d_rms_backward: f64,
    pub d_s_rms: f64,
    pub omega: f64,
    pub psnr_geometry: f64,
    /// Per color channel, when both clouds carry colors.
    pub psnr_color: Option<[f64; 3]>,
}

pub fn distance_report(original: &PointCloud, reconstructed: &PointCloud) -> Result<DistanceReport, MetricsError> {
    let f = d_rms(original, reconstructed, Channel::Geometry)?;
    let b = d_rms(reconstructed, original, Channel::Geometry)?;
    let om = omega(original)?;
    let psnr_color = if original.has_colors() && reconstructed.has_colors() {
        Some([
            psnr_color(original, reconstructed, Channel::Y)?,
            psnr_color(original, reconstructed, Channel::U)?,
            psnr_color(original, reconstructed, Channel::V)?,
        ])
    } else {
        None
    };
    Ok(DistanceReport {
        d_rms_forward: f,
        d_rms_backward: b,
        d_s_rms: f.max(b),
        omega: om,
        psnr_geometry: psnr(om, f.max(b)),
        psnr_color,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::dist2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_d_rms(a: &PointCloud, b: &PointCloud) -> f64 {
        let s: f64 = a
            .positions
            .iter()
            .map(|p| b.positions.iter().map(|q| dist2(p, q)).fold(f64::INFINITY, f64::min))
            .sum();
        (s / a.len() as f64).sqrt()
    }

    fn random(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
        PointCloud::with_colors(
            (0..n).map(|_| [0; 3].map(|_: u8| rng.gen_range(0.0..100.0))).collect(),
            (0..n).map(|_| [0; 3].map(|_: u8| rng.gen())).collect(),
        )
    }

    #[test]
    fn three_four_five() {
        let a = PointCloud::new(vec![[0.0; 3]]);
        let b = PointCloud::new(vec![[3.0, 4.0, 0.0]]);
        assert_eq!(d_rms(&a, &b, Channel::Geometry).unwrap(), 5.0);
    }

    #[test]
    fn identical_clouds_are_capped() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random(&mut rng, 50);
        for ch in [Channel::Geometry, Channel::Y, Channel::U, Channel::V] {
            assert_eq!(d_s_rms(&a, &a, ch).unwrap(), 0.0);
        }
        assert_eq!(psnr_geometry(&a, &a).unwrap(), PSNR_CAP);
        assert_eq!(psnr_color(&a, &a, Channel::V).unwrap(), PSNR_CAP);
    }

    #[test]
    fn psnr_examples() {
        assert!((psnr(1023.0, 1.0) - 60.198).abs() < 1e-3);
        assert_eq!(psnr(255.0, 255.0), 0.0);
        assert!((psnr(255.0, 8.0) - 30.069).abs() < 1e-3);
        let c = PointCloud::new(vec![[0.0; 3], [1023.0, 5.0, 1023.0]]);
        assert_eq!(omega(&c).unwrap(), 1023.0);
    }

    #[test]
    fn matches_brute_force_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a = random(&mut rng, 100);
            let b = random(&mut rng, 80);
            let d = d_rms(&a, &b, Channel::Geometry).unwrap();
            assert!((d - brute_d_rms(&a, &b)).abs() <= 1e-12);
            assert_eq!(d_s_rms(&a, &b, Channel::U).unwrap(), d_s_rms(&b, &a, Channel::U).unwrap());
        }
    }

    #[test]
    fn extra_far_point_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(&mut rng, 100);
        let mut b = a.clone();
        b.positions.push([1000.0, 0.0, 0.0]);
        b.colors.as_mut().unwrap().push([0; 3]);
        let fwd = d_rms(&a, &b, Channel::Geometry).unwrap();
        let bwd = d_rms(&b, &a, Channel::Geometry).unwrap();
        assert_eq!(fwd, 0.0);
        assert_eq!(d_s_rms(&a, &b, Channel::Geometry).unwrap(), bwd);
        assert!((bwd - brute_d_rms(&b, &a)).abs() <= 1e-12);
    }

    #[test]
    fn empty_and_colorless_rejected() {
        let e = PointCloud::default();
        let a = PointCloud::new(vec![[0.0; 3]]);
        assert!(matches!(d_rms(&e, &a, Channel::Geometry), Err(MetricsError::Empty)));
        assert!(matches!(d_rms(&a, &a, Channel::Y), Err(MetricsError::MissingColors)));
    }
}
