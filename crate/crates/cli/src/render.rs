//! Grayscale heatmaps of 2-D fields.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{GrayImage, ImageEncoder, Luma};

use phasespace::observables::reduce_axis;
use phasespace::{AxisLabel, Field};

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("cannot render: {0}")]
    Field(String),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Maps a sample to a gray level, with zero at mid-gray and `±scale` at the
/// ends of the range.
pub fn gray_level(v: f64, scale: f64) -> u8 {
    if scale <= 0.0 {
        return 128;
    }
    (127.5 + 127.5 * v / scale).round().clamp(0.0, 255.0) as u8
}

/// Reduces `field` to the plane spanned by `axes` (horizontal, vertical) and
/// maps its real part to gray levels. The vertical axis increases upward.
pub fn heatmap(field: &Field, axes: (AxisLabel, AxisLabel)) -> Result<GrayImage, RenderError> {
    let grid = field.grid();
    for label in [axes.0, axes.1] {
        if !grid.has_axis(label) {
            return Err(RenderError::Field(format!("the field has no `{label}` axis")));
        }
    }
    if axes.0 == axes.1 {
        return Err(RenderError::Field("the two image axes must differ".into()));
    }
    if !field.is_all_direct() {
        return Err(RenderError::Field("the field is not in the direct representation".into()));
    }
    let mut plane = field.clone();
    for label in grid.labels() {
        if label != axes.0 && label != axes.1 {
            plane = reduce_axis(&plane, label).map_err(|e| RenderError::Field(e.to_string()))?;
        }
    }
    let g = plane.grid();
    let (ih, iv) = (g.axis_index(axes.0).expect("kept"), g.axis_index(axes.1).expect("kept"));
    let shape = g.shape();
    let (w, h) = (shape[ih], shape[iv]);
    let values = plane.real_parts();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let at = |i: usize, j: usize| {
        let mut idx = [0usize; 2];
        idx[ih] = i;
        idx[iv] = j;
        values[idx[0] * shape[1] + idx[1]]
    };
    Ok(GrayImage::from_fn(w as u32, h as u32, |col, row| {
        Luma([gray_level(at(col as usize, h - 1 - row as usize), scale)])
    }))
}

/// Writes a binary portable graymap.
pub fn write_pgm(image: &GrayImage, path: &Path) -> Result<(), RenderError> {
    let out = BufWriter::new(File::create(path)?);
    PnmEncoder::new(out).with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary)).write_image(
        image.as_raw(),
        image.width(),
        image.height(),
        image::ExtendedColorType::L8,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_mapping() {
        assert_eq!(gray_level(0.0, 1.0), 128);
        assert_eq!(gray_level(1.0, 1.0), 255);
        assert_eq!(gray_level(-1.0, 1.0), 0);
        assert_eq!(gray_level(0.5, 0.0), 128);
    }
}
