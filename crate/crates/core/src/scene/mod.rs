//! Analytic synthetic scenes: an axis-aligned box room with optional spheres,
//! rendered to exact ERP depth and Lambertian-shaded images for arbitrary
//! rigs. Serves as the closed-form oracle for fusion, metrics, and
//! end-to-end tests.

mod render;
mod rig;

pub use render::{render_depth, render_shaded};
pub use rig::{make_ring_rig, RingRigSpec};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("camera at {0:?} is not strictly inside free space")]
    CameraOutsideFreeSpace(Vector3<f64>),
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("invalid ring spec: {0}")]
    BadRingSpec(String),
    #[error("scene JSON: {0}")]
    BadJson(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sphere {
    pub center: [f64; 3],
    pub radius: f64,
    #[serde(default = "default_albedo")]
    pub albedo: f64,
}

fn default_albedo() -> f64 {
    0.8
}

fn default_wall_albedo() -> [f64; 6] {
    // -x, +x, -y, +y, -z, +z
    [0.7, 0.7, 0.5, 0.9, 0.6, 0.8]
}

/// Box room (camera inside) with optional solid spheres.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scene {
    /// Half-extents of the room along x, y, z, meters.
    pub half_extents: [f64; 3],
    #[serde(default)]
    pub spheres: Vec<Sphere>,
    /// Per-wall albedo in the order -x, +x, -y, +y, -z, +z.
    #[serde(default = "default_wall_albedo")]
    pub wall_albedo: [f64; 6],
}

impl Scene {
    pub fn room(ax: f64, ay: f64, az: f64) -> Self {
        Self {
            half_extents: [ax, ay, az],
            spheres: Vec::new(),
            wall_albedo: default_wall_albedo(),
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.half_extents.iter().any(|&a| !(a > 0.0)) {
            return Err(SceneError::Invalid(format!(
                "half extents must be positive, got {:?}",
                self.half_extents
            )));
        }
        for s in &self.spheres {
            if !(s.radius > 0.0) {
                return Err(SceneError::Invalid(format!(
                    "sphere radius must be positive, got {}",
                    s.radius
                )));
            }
            if !(0.0..=1.0).contains(&s.albedo) {
                return Err(SceneError::Invalid("sphere albedo out of [0,1]".into()));
            }
        }
        if self.wall_albedo.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(SceneError::Invalid("wall albedo out of [0,1]".into()));
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self, SceneError> {
        let s: Scene = serde_json::from_str(json).map_err(|e| SceneError::BadJson(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// True when `p` lies strictly inside the room and outside every sphere.
    pub fn in_free_space(&self, p: Vector3<f64>) -> bool {
        let [ax, ay, az] = self.half_extents;
        if p.x.abs() >= ax || p.y.abs() >= ay || p.z.abs() >= az {
            return false;
        }
        self.spheres.iter().all(|s| {
            (p - Vector3::new(s.center[0], s.center[1], s.center[2])).norm() > s.radius
        })
    }

    /// Unsigned distance from `p` to the nearest scene surface (walls or
    /// sphere boundaries). Zero exactly on a surface.
    pub fn surface_distance(&self, p: Vector3<f64>) -> f64 {
        let [ax, ay, az] = self.half_extents;
        let mut d = (ax - p.x.abs()).abs();
        d = d.min((ay - p.y.abs()).abs());
        d = d.min((az - p.z.abs()).abs());
        for s in &self.spheres {
            let c = Vector3::new(s.center[0], s.center[1], s.center[2]);
            d = d.min(((p - c).norm() - s.radius).abs());
        }
        d
    }
}
