//! Spherical camera geometry.
//!
//! Conventions used throughout the crate: `+z` forward, `+x` right, `+y` up.
//! The equirectangular (ERP) lattice is `W×H` with `W = 2H`, origin at the
//! top-left; longitude `λ = atan2(dx, dz)` and latitude `φ = asin(dy)` map to
//! continuous pixel coordinates
//!
//! ```text
//! x = (λ/2π + 1/2)·W,    y = (1/2 − φ/π)·H.
//! ```
//!
//! Continuous coordinate `x = i + 0.5` is the sample point of pixel column
//! `i` (same for rows), so pixel centers cover equal longitude/latitude
//! intervals symmetrically.

mod camera;
mod warp;

pub use camera::{CameraKind, CameraModel};
pub use warp::{warp_camera_to_erp, warp_erp_to_camera, Raster};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("ERP coordinate ({x}, {y}) outside grid {width}x{height}")]
    OutOfRange {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
    #[error("invalid ERP grid {width}x{height}: width must equal 2*height and both must be > 0")]
    BadGrid { width: usize, height: usize },
    #[error("invalid camera parameters: {0}")]
    InvalidCamera(String),
    #[error("raster dimensions {got_w}x{got_h} do not match camera model {want_w}x{want_h}")]
    RasterMismatch {
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
}

/// Unit-norm viewing direction in the camera/world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitRay {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl UnitRay {
    /// Builds a ray from arbitrary (non-zero) direction components,
    /// normalizing them.
    pub fn new(dx: f64, dy: f64, dz: f64) -> Self {
        let n = (dx * dx + dy * dy + dz * dz).sqrt();
        debug_assert!(n > 0.0, "zero direction");
        Self {
            dx: dx / n,
            dy: dy / n,
            dz: dz / n,
        }
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.dx, self.dy, self.dz)
    }

    /// Polar angle from the `+z` axis, in radians (0 = forward, π = backward).
    pub fn polar_angle(&self) -> f64 {
        self.dz.clamp(-1.0, 1.0).acos()
    }

    pub fn norm_error(&self) -> f64 {
        ((self.dx * self.dx + self.dy * self.dy + self.dz * self.dz) - 1.0).abs()
    }
}

/// W×H equirectangular lattice, `W = 2H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErpGrid {
    width: usize,
    height: usize,
}

impl ErpGrid {
    pub fn new(width: usize, height: usize) -> Result<Self, GeometryError> {
        if height == 0 || width != 2 * height {
            return Err(GeometryError::BadGrid { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Continuous sample coordinate of pixel `(col, row)` (its center).
    pub fn pixel_center(&self, col: usize, row: usize) -> (f64, f64) {
        (col as f64 + 0.5, row as f64 + 0.5)
    }
}

/// Maps a unit ray to continuous ERP pixel coordinates.
///
/// Total on the sphere; at the exact poles (`dx = dz = 0`) the longitude
/// convention `atan2(0, 0) = 0` applies, so the output is deterministic.
/// The returned `x` always satisfies `0 ≤ x < W` (longitude `π` wraps to
/// `−π`), and `0 ≤ y ≤ H`.
pub fn dir_to_erp(d: UnitRay, grid: ErpGrid) -> (f64, f64) {
    let lambda = d.dx.atan2(d.dz);
    let phi = d.dy.clamp(-1.0, 1.0).asin();
    let w = grid.width as f64;
    let h = grid.height as f64;
    let mut x = (lambda / std::f64::consts::TAU + 0.5) * w;
    if x >= w {
        x -= w;
    }
    let y = (0.5 - phi / std::f64::consts::PI) * h;
    (x, y)
}

/// Inverse of [`dir_to_erp`]: continuous ERP coordinates to a unit ray.
pub fn erp_to_dir(x: f64, y: f64, grid: ErpGrid) -> Result<UnitRay, GeometryError> {
    let w = grid.width as f64;
    let h = grid.height as f64;
    if !(0.0..w).contains(&x) || !(0.0..=h).contains(&y) {
        return Err(GeometryError::OutOfRange {
            x,
            y,
            width: grid.width,
            height: grid.height,
        });
    }
    let lambda = (x / w - 0.5) * std::f64::consts::TAU;
    let phi = (0.5 - y / h) * std::f64::consts::PI;
    let (sl, cl) = lambda.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Ok(UnitRay {
        dx: sl * cp,
        dy: sp,
        dz: cl * cp,
    })
}
