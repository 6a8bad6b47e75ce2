//! BT.709 full-range RGB/YUV conversion on 8-bit values.

use super::MetricsError;
use crate::cloud::{round_half_away, ColorSpace, PointCloud};

const KR: f64 = 0.2126;
const KB: f64 = 0.0722;
const KG: f64 = 1.0 - KR - KB;

fn to_u8(v: f64) -> u8 {
    round_half_away(v).clamp(0.0, 255.0) as u8
}

pub fn rgb_to_yuv_pixel(c: [u8; 3]) -> [u8; 3] {
    let [r, g, b] = c.map(f64::from);
    let y = KR * r + KG * g + KB * b;
    let u = (b - y) / (2.0 * (1.0 - KB)) + 128.0;
    let v = (r - y) / (2.0 * (1.0 - KR)) + 128.0;
    [to_u8(y), to_u8(u), to_u8(v)]
}

pub fn yuv_to_rgb_pixel(c: [u8; 3]) -> [u8; 3] {
    let y = c[0] as f64;
    let u = c[1] as f64 - 128.0;
    let v = c[2] as f64 - 128.0;
    let r = y + 2.0 * (1.0 - KR) * v;
    let b = y + 2.0 * (1.0 - KB) * u;
    let g = (y - KR * r - KB * b) / KG;
    [to_u8(r), to_u8(g), to_u8(b)]
}

fn convert(cloud: &PointCloud, from: ColorSpace, to: ColorSpace, f: fn([u8; 3]) -> [u8; 3]) -> Result<PointCloud, MetricsError> {
    if cloud.color_space != from {
        return Err(MetricsError::WrongColorSpace);
    }
    let colors = cloud.colors.as_ref().ok_or(MetricsError::MissingColors)?;
    let mut out = cloud.clone();
    out.colors = Some(colors.iter().map(|&c| f(c)).collect());
    out.color_space = to;
    Ok(out)
}

pub fn rgb_to_yuv(cloud: &PointCloud) -> Result<PointCloud, MetricsError> {
    convert(cloud, ColorSpace::Rgb, ColorSpace::Yuv, rgb_to_yuv_pixel)
}

pub fn yuv_to_rgb(cloud: &PointCloud) -> Result<PointCloud, MetricsError> {
    convert(cloud, ColorSpace::Yuv, ColorSpace::Rgb, yuv_to_rgb_pixel)
}
