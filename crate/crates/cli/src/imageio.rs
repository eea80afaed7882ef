//! Lossless PNG loading and saving.

use std::path::Path;

use evoimage_core::RasterImage;
use image::{ImageFormat, ImageReader, RgbImage};

use crate::error::CliError;

fn has_png_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Loads a PNG as 8-bit RGB; alpha is dropped. Other formats are refused
/// because pixel comparisons are exact.
pub fn load_png(path: &Path) -> Result<RasterImage, CliError> {
    if !has_png_extension(path) {
        return Err(CliError::Usage(format!(
            "{}: only lossless PNG input is accepted",
            path.display()
        )));
    }
    let reader = ImageReader::open(path)
        .map_err(|e| CliError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| CliError::io(path, e))?;
    if reader.format() != Some(ImageFormat::Png) {
        return Err(CliError::Usage(format!(
            "{}: file content is not PNG",
            path.display()
        )));
    }
    let decoded = reader.decode().map_err(|e| CliError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(RasterImage::from_rgb_bytes(w as usize, h as usize, rgb.as_raw())?)
}

pub fn save_png(path: &Path, image: &RasterImage) -> Result<(), CliError> {
    let buf = RgbImage::from_raw(
        image.width() as u32,
        image.height() as u32,
        image.to_rgb_bytes(),
    )
    .expect("buffer size matches dimensions");
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| CliError::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}
