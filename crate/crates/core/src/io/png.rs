use super::FormatError;
use crate::geometry::Raster;
use std::path::Path;

/// Loads an 8-bit PNG into a 3-channel raster with values in [0, 1].
pub fn read_png_raster(path: &Path) -> Result<Raster, FormatError> {
    let img = image::open(path)
        .map_err(|e| FormatError::Image(format!("{}: {e}", path.display())))?
        .into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut out = Raster::zeros(w, h, 3);
    for (x, y, px) in img.enumerate_pixels() {
        for ch in 0..3 {
            *out.at_mut(x as usize, y as usize, ch) = px.0[ch] as f64 / 255.0;
        }
    }
    Ok(out)
}

/// Writes a 1- or 3-channel raster as an 8-bit RGB PNG, clamping to [0, 1].
pub fn write_png_raster(path: &Path, raster: &Raster) -> Result<(), FormatError> {
    assert!(
        raster.channels == 1 || raster.channels == 3,
        "PNG output needs 1 or 3 channels"
    );
    let mut img = image::RgbImage::new(raster.width as u32, raster.height as u32);
    for (x, y, px) in img.enumerate_pixels_mut() {
        for ch in 0..3 {
            let src = if raster.channels == 1 { 0 } else { ch };
            let v = raster.at(x as usize, y as usize, src).clamp(0.0, 1.0);
            px.0[ch] = (v * 255.0).round() as u8;
        }
    }
    img.save(path)
        .map_err(|e| FormatError::Image(format!("{}: {e}", path.display())))
}
