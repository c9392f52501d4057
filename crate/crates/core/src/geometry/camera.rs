//! Central camera models: pinhole, equidistant fisheye, and double-sphere.
//!
//! All three map pixels to unit viewing rays through a single projection
//! center. The camera frame follows the image axes: `+x` along `+u`, `+y`
//! along `+v`, `+z` forward, so `unproject(u, v)` for the pinhole model is
//! `normalize((u−cx)/fx, (v−cy)/fy, 1)`.
//!
//! `project` returns `None` for rays outside the field of view (an expected
//! outcome, not an error); `unproject` returns `None` for pixels outside the
//! image bounds or outside the model's valid projection region.

use super::{GeometryError, UnitRay};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraKind {
    Pinhole,
    Equidistant,
    DoubleSphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub kind: CameraKind,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Double-sphere center displacement ξ; unused by other kinds.
    #[serde(default)]
    pub xi: f64,
    /// Double-sphere blend α ∈ [0, 1); unused by other kinds.
    #[serde(default)]
    pub alpha: f64,
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

/// Tolerance for the FOV boundary so that roundtrips of pixels exactly on
/// the boundary circle do not flap between valid and invalid.
const FOV_EPS: f64 = 1e-9;

impl CameraModel {
    pub fn pinhole(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        fov_deg: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, GeometryError> {
        let m = Self {
            kind: CameraKind::Pinhole,
            fx,
            fy,
            cx,
            cy,
            xi: 0.0,
            alpha: 0.0,
            fov_deg,
            width,
            height,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn equidistant(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        fov_deg: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, GeometryError> {
        let m = Self {
            kind: CameraKind::Equidistant,
            fx,
            fy,
            cx,
            cy,
            xi: 0.0,
            alpha: 0.0,
            fov_deg,
            width,
            height,
        };
        m.validate()?;
        Ok(m)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn double_sphere(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        xi: f64,
        alpha: f64,
        fov_deg: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, GeometryError> {
        let m = Self {
            kind: CameraKind::DoubleSphere,
            fx,
            fy,
            cx,
            cy,
            xi,
            alpha,
            fov_deg,
            width,
            height,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeometryError::InvalidCamera(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg <= 360.0) {
            return Err(GeometryError::InvalidCamera(format!(
                "fov_deg must be in (0, 360], got {}",
                self.fov_deg
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(GeometryError::InvalidCamera(
                "principal point must be finite".into(),
            ));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GeometryError::InvalidCamera(format!(
                "image size must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        match self.kind {
            CameraKind::Pinhole => {
                if self.fov_deg >= 180.0 {
                    return Err(GeometryError::InvalidCamera(format!(
                        "pinhole fov_deg must be < 180, got {}",
                        self.fov_deg
                    )));
                }
            }
            CameraKind::DoubleSphere => {
                if !(0.0..1.0).contains(&self.alpha) {
                    return Err(GeometryError::InvalidCamera(format!(
                        "double-sphere alpha must be in [0, 1), got {}",
                        self.alpha
                    )));
                }
                if !self.xi.is_finite() {
                    return Err(GeometryError::InvalidCamera("xi must be finite".into()));
                }
            }
            CameraKind::Equidistant => {}
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self, GeometryError> {
        let m: Self = serde_json::from_str(json)
            .map_err(|e| GeometryError::InvalidCamera(format!("camera JSON: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn half_fov_rad(&self) -> f64 {
        self.fov_deg.to_radians() / 2.0
    }

    fn in_fov(&self, polar: f64) -> bool {
        polar <= self.half_fov_rad() + FOV_EPS
    }

    /// Continuous pixel coordinates within the image rectangle.
    pub fn in_bounds(&self, u: f64, v: f64) -> bool {
        (0.0..=self.width as f64).contains(&u) && (0.0..=self.height as f64).contains(&v)
    }

    /// Projects a unit ray to pixel coordinates, or `None` when the ray lies
    /// outside the field of view (or outside the model's projection domain).
    pub fn project(&self, d: UnitRay) -> Option<(f64, f64)> {
        let polar = d.polar_angle();
        if !self.in_fov(polar) {
            return None;
        }
        match self.kind {
            CameraKind::Pinhole => {
                if d.dz <= 0.0 {
                    return None;
                }
                Some((
                    self.cx + self.fx * d.dx / d.dz,
                    self.cy + self.fy * d.dy / d.dz,
                ))
            }
            CameraKind::Equidistant => {
                let rxy = (d.dx * d.dx + d.dy * d.dy).sqrt();
                if rxy < 1e-15 {
                    // On the optical axis: forward maps to the principal
                    // point, exactly backward has no defined azimuth.
                    return if d.dz > 0.0 {
                        Some((self.cx, self.cy))
                    } else {
                        None
                    };
                }
                Some((
                    self.cx + self.fx * polar * d.dx / rxy,
                    self.cy + self.fy * polar * d.dy / rxy,
                ))
            }
            CameraKind::DoubleSphere => {
                let (x, y, z) = (d.dx, d.dy, d.dz);
                let d1 = 1.0; // unit ray
                if !self.ds_projectable(z, d1) {
                    return None;
                }
                let gamma = self.xi * d1 + z;
                let d2 = (x * x + y * y + gamma * gamma).sqrt();
                let denom = self.alpha * d2 + (1.0 - self.alpha) * gamma;
                if denom < 1e-12 {
                    return None;
                }
                Some((self.cx + self.fx * x / denom, self.cy + self.fy * y / denom))
            }
        }
    }

    /// Closed-form validity bound for the double-sphere projection: the ray
    /// must satisfy `z > −w2·‖d‖`.
    fn ds_projectable(&self, z: f64, d1: f64) -> bool {
        let w1 = if self.alpha <= 0.5 {
            self.alpha / (1.0 - self.alpha)
        } else {
            (1.0 - self.alpha) / self.alpha
        };
        let w2 = (w1 + self.xi) / (2.0 * w1 * self.xi + self.xi * self.xi + 1.0).sqrt();
        z > -w2 * d1
    }

    /// Unprojects a pixel to a unit ray, or `None` when the pixel is outside
    /// the image bounds or the model's valid projection region.
    pub fn unproject(&self, u: f64, v: f64) -> Option<UnitRay> {
        if !self.in_bounds(u, v) {
            return None;
        }
        let mx = (u - self.cx) / self.fx;
        let my = (v - self.cy) / self.fy;
        let ray = match self.kind {
            CameraKind::Pinhole => UnitRay::new(mx, my, 1.0),
            CameraKind::Equidistant => {
                let r = (mx * mx + my * my).sqrt();
                if r > std::f64::consts::PI {
                    return None;
                }
                if r < 1e-15 {
                    UnitRay {
                        dx: 0.0,
                        dy: 0.0,
                        dz: 1.0,
                    }
                } else {
                    let (s, c) = r.sin_cos();
                    UnitRay::new(s * mx / r, s * my / r, c)
                }
            }
            CameraKind::DoubleSphere => {
                let r2 = mx * mx + my * my;
                let alpha = self.alpha;
                let xi = self.xi;
                if alpha > 0.5 && r2 > 1.0 / (2.0 * alpha - 1.0) {
                    return None;
                }
                let mz = (1.0 - alpha * alpha * r2)
                    / (alpha * (1.0 - (2.0 * alpha - 1.0) * r2).max(0.0).sqrt() + 1.0 - alpha);
                let mz2 = mz * mz;
                let denom = mz2 + r2;
                if denom < 1e-15 {
                    return None;
                }
                let coeff = (mz * xi + (mz2 + (1.0 - xi * xi) * r2).sqrt()) / denom;
                UnitRay::new(coeff * mx, coeff * my, coeff * mz - xi)
            }
        };
        if !self.in_fov(ray.polar_angle()) {
            return None;
        }
        Some(ray)
    }
}
