//! Moving colors between geometries by nearest-neighbour lookup.

use super::AttributeError;
use crate::cloud::PointCloud;
use crate::geometry::{dequantize_positions, QuantizationParams};
use crate::spatial::kd_build;

/// Gives each target point the color of its nearest source point; ties go
/// to the lowest source index.
pub fn recolor(target: &PointCloud, source: &PointCloud) -> Result<PointCloud, AttributeError> {
    let colors = source.colors.as_ref().ok_or(AttributeError::MissingColors)?;
    if source.is_empty() {
        return Err(AttributeError::MissingColors);
    }
    let tree = kd_build(&source.positions, 8);
    let mut out = target.clone();
    out.colors = Some(
        target
            .positions
            .iter()
            .map(|p| colors[tree.nearest(p).expect("non-empty tree").index])
            .collect(),
    );
    out.color_space = source.color_space;
    Ok(out)
}

/// Colors quantized geometry from the original cloud, matching the
/// dequantized positions against the original ones.
pub fn attribute_transfer(
    original: &PointCloud,
    quantized: &PointCloud,
    params: &QuantizationParams,
) -> Result<PointCloud, AttributeError> {
    let back = dequantize_positions(quantized, params);
    let colored = recolor(&back, original)?;
    let mut out = quantized.clone();
    out.colors = colored.colors;
    out.color_space = colored.color_space;
    Ok(out)
}
