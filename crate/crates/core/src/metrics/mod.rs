//! Quality metrics: point-to-point distances, PSNR, color conversion and
//! Bjøntegaard-delta statistics.

mod bd;
mod color;
mod distance;

pub use bd::{bd_stats, RdPoint};
pub use color::{rgb_to_yuv, rgb_to_yuv_pixel, yuv_to_rgb, yuv_to_rgb_pixel};
pub use distance::{
    d_rms, d_s_rms, distance_report, omega, psnr, psnr_color, psnr_geometry, Channel, DistanceReport, PSNR_CAP,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("cloud is empty")]
    Empty,
    #[error("cloud has no colors")]
    MissingColors,
    #[error("color channel required")]
    WrongChannel,
    #[error("cloud is tagged with the wrong color space")]
    WrongColorSpace,
    #[error("invalid rate-distortion curve: {0}")]
    InvalidCurve(&'static str),
}
