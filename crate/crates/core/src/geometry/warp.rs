//! Whole-image warps between camera rasters and the ERP lattice.

use super::{dir_to_erp, erp_to_dir, CameraModel, ErpGrid, GeometryError};

/// Row-major multichannel raster of `f64` samples; pixel `(col, row)` has its
/// sample point at continuous coordinate `(col + 0.5, row + 0.5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Raster {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    #[inline]
    pub fn at(&self, col: usize, row: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    #[inline]
    pub fn at_mut(&mut self, col: usize, row: usize, ch: usize) -> &mut f64 {
        &mut self.data[(row * self.width + col) * self.channels + ch]
    }

    /// Bilinear sample at continuous coordinates, clamping at all borders.
    pub fn sample_clamped(&self, x: f64, y: f64, ch: usize) -> f64 {
        let (c0, c1, ax) = Self::axis_clamped(x, self.width);
        let (r0, r1, ay) = Self::axis_clamped(y, self.height);
        self.bilinear(c0, c1, r0, r1, ax, ay, ch)
    }

    /// Bilinear sample with longitude wrap-around in `x` (period `width`)
    /// and latitude clamp in `y`, for ERP rasters.
    pub fn sample_erp(&self, x: f64, y: f64, ch: usize) -> f64 {
        let w = self.width as f64;
        let xf = (x - 0.5).rem_euclid(w);
        let c0 = xf.floor() as usize % self.width;
        let c1 = (c0 + 1) % self.width;
        let ax = xf - xf.floor();
        let (r0, r1, ay) = Self::axis_clamped(y, self.height);
        self.bilinear(c0, c1, r0, r1, ax, ay, ch)
    }

    fn axis_clamped(coord: f64, extent: usize) -> (usize, usize, f64) {
        let f = (coord - 0.5).clamp(0.0, (extent - 1) as f64);
        let i0 = f.floor() as usize;
        let i1 = (i0 + 1).min(extent - 1);
        (i0, i1, f - i0 as f64)
    }

    #[inline]
    fn bilinear(
        &self,
        c0: usize,
        c1: usize,
        r0: usize,
        r1: usize,
        ax: f64,
        ay: f64,
        ch: usize,
    ) -> f64 {
        // Nested lerps so constant rasters are reproduced exactly.
        let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
        let top = lerp(self.at(c0, r0, ch), self.at(c1, r0, ch), ax);
        let bot = lerp(self.at(c0, r1, ch), self.at(c1, r1, ch), ax);
        lerp(top, bot, ay)
    }
}

/// Resamples a camera image onto the ERP lattice.
///
/// For every ERP pixel the center ray is projected into the camera; pixels
/// whose projection is in-FOV and inside the image rectangle are bilinearly
/// sampled and marked valid in the returned mask.
pub fn warp_camera_to_erp(
    image: &Raster,
    model: &CameraModel,
    grid: ErpGrid,
) -> Result<(Raster, Vec<bool>), GeometryError> {
    if image.width != model.width || image.height != model.height {
        return Err(GeometryError::RasterMismatch {
            got_w: image.width,
            got_h: image.height,
            want_w: model.width,
            want_h: model.height,
        });
    }
    let mut out = Raster::zeros(grid.width(), grid.height(), image.channels);
    let mut mask = vec![false; grid.len()];
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            let (x, y) = grid.pixel_center(col, row);
            let ray = erp_to_dir(x, y, grid).expect("pixel centers are in range");
            if let Some((u, v)) = model.project(ray) {
                // Sample every in-FOV pixel (clamped at the image border) so
                // that resampling back to the camera stays seam-free; the
                // mask marks only projections inside the image rectangle.
                mask[row * grid.width() + col] = model.in_bounds(u, v);
                for ch in 0..image.channels {
                    *out.at_mut(col, row, ch) = image.sample_clamped(u, v, ch);
                }
            }
        }
    }
    Ok((out, mask))
}

/// Renders a camera-view image from an ERP raster (inverse of
/// [`warp_camera_to_erp`], with bilinear sampling and longitude wrap).
pub fn warp_erp_to_camera(erp: &Raster, model: &CameraModel) -> Result<Raster, GeometryError> {
    if erp.width != 2 * erp.height {
        return Err(GeometryError::BadGrid {
            width: erp.width,
            height: erp.height,
        });
    }
    let grid = ErpGrid::new(erp.width, erp.height)?;
    let mut out = Raster::zeros(model.width, model.height, erp.channels);
    for row in 0..model.height {
        for col in 0..model.width {
            let (u, v) = (col as f64 + 0.5, row as f64 + 0.5);
            if let Some(ray) = model.unproject(u, v) {
                let (x, y) = dir_to_erp(ray, grid);
                for ch in 0..erp.channels {
                    *out.at_mut(col, row, ch) = erp.sample_erp(x, y, ch);
                }
            }
        }
    }
    Ok(out)
}
