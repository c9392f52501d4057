use super::SceneError;
use crate::fusion::{Pose, Rig};
use crate::geometry::{CameraModel, UnitRay};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Horizontal ring of outward-facing cameras.
///
/// `baseline_m` is the Euclidean distance between adjacent camera centers;
/// the ring radius follows as `baseline / (2·sin(separation/2))`, so a
/// 4-camera ring at 90° separation with a 20√2 mm baseline sits on a 20 mm
/// circle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RingRigSpec {
    pub count: usize,
    pub baseline_m: f64,
    pub separation_deg: f64,
    pub fov_deg: f64,
}

impl RingRigSpec {
    /// The fixed 4×220° ring used by the synthetic oracle scenes.
    pub fn standard_four_camera() -> Self {
        Self {
            count: 4,
            baseline_m: 0.02 * std::f64::consts::SQRT_2,
            separation_deg: 90.0,
            fov_deg: 220.0,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.count == 0 {
            return Err(SceneError::BadRingSpec("count must be >= 1".into()));
        }
        if self.count > 1 {
            let closed = self.count as f64 * self.separation_deg;
            if (closed - 360.0).abs() > 1e-9 {
                return Err(SceneError::BadRingSpec(format!(
                    "count * separation must equal 360 deg for a closed ring, got {closed}"
                )));
            }
            if !(self.baseline_m > 0.0) {
                return Err(SceneError::BadRingSpec("baseline must be positive".into()));
            }
        }
        if !(self.fov_deg > 0.0 && self.fov_deg <= 360.0) {
            return Err(SceneError::BadRingSpec(format!(
                "fov_deg must be in (0, 360], got {}",
                self.fov_deg
            )));
        }
        Ok(())
    }

    pub fn ring_radius(&self) -> f64 {
        if self.count == 1 {
            0.0
        } else {
            let half_sep = (self.separation_deg.to_radians()) / 2.0;
            self.baseline_m / (2.0 * half_sep.sin())
        }
    }
}

/// Picks intrinsics so the FOV circle fills ~95% of the image half-width.
fn camera_for_fov(fov_deg: f64, size: usize) -> CameraModel {
    let (w, h) = (size, size);
    let (cx, cy) = (size as f64 / 2.0, size as f64 / 2.0);
    // The double-sphere parameters below cover polar angles up to ~122 deg;
    // wider lenses fall back to the equidistant model.
    if fov_deg <= 240.0 {
        let (xi, alpha) = (-0.2, 0.6);
        let probe = CameraModel::double_sphere(1.0, 1.0, 0.0, 0.0, xi, alpha, fov_deg, 1, 1)
            .expect("probe parameters are valid");
        let boundary = fov_deg.to_radians() / 2.0;
        let ray = UnitRay::new(boundary.sin(), 0.0, boundary.cos());
        let (bu, _) = probe
            .project(ray)
            .expect("boundary ray projects for these parameters");
        let f = 0.95 * (size as f64 / 2.0) / bu;
        CameraModel::double_sphere(f, f, cx, cy, xi, alpha, fov_deg, w, h)
            .expect("derived parameters are valid")
    } else {
        let f = 0.95 * (size as f64 / 2.0) / (fov_deg.to_radians() / 2.0);
        CameraModel::equidistant(f, f, cx, cy, fov_deg, w, h)
            .expect("derived parameters are valid")
    }
}

/// Builds the ring: camera `s` yaws by `s·separation` and sits on the ring
/// circle along its own optical axis, facing outward with zero pitch/roll.
pub fn make_ring_rig(spec: &RingRigSpec) -> Result<Rig, SceneError> {
    spec.validate()?;
    let radius = spec.ring_radius();
    let mut cameras = Vec::with_capacity(spec.count);
    let mut poses = Vec::with_capacity(spec.count);
    for s in 0..spec.count {
        let yaw = (s as f64 * spec.separation_deg).to_radians();
        let pose = Pose::yaw(yaw, Vector3::zeros());
        let center = pose.rotate(Vector3::new(0.0, 0.0, radius));
        poses.push(Pose::yaw(yaw, center));
        cameras.push(camera_for_fov(spec.fov_deg, 640));
    }
    Rig::new(cameras, poses).map_err(|e| SceneError::BadRingSpec(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn adjacent_axes_are_orthogonal_at_90_deg_separation() {
        let rig = make_ring_rig(&RingRigSpec::standard_four_camera()).unwrap();
        for s in 0..4 {
            let a = rig.poses[s].rotate(Vector3::new(0.0, 0.0, 1.0));
            let b = rig.poses[(s + 1) % 4].rotate(Vector3::new(0.0, 0.0, 1.0));
            assert_abs_diff_eq!(a.dot(&b), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn adjacent_centers_are_one_baseline_apart() {
        let spec = RingRigSpec::standard_four_camera();
        let rig = make_ring_rig(&spec).unwrap();
        for s in 0..4 {
            let a = rig.poses[s].translation();
            let b = rig.poses[(s + 1) % 4].translation();
            assert_abs_diff_eq!((a - b).norm(), spec.baseline_m, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(rig.poses[0].translation().norm(), 0.02, epsilon = 1e-12);
    }

    #[test]
    fn single_camera_ring_sits_at_the_origin() {
        let spec = RingRigSpec {
            count: 1,
            baseline_m: 0.0,
            separation_deg: 360.0,
            fov_deg: 220.0,
        };
        let rig = make_ring_rig(&spec).unwrap();
        assert_eq!(rig.frame_count(), 1);
        assert_abs_diff_eq!(rig.poses[0].translation().norm(), 0.0);
    }

    #[test]
    fn open_rings_are_rejected() {
        let spec = RingRigSpec {
            count: 4,
            baseline_m: 0.02,
            separation_deg: 80.0,
            fov_deg: 220.0,
        };
        assert!(make_ring_rig(&spec).is_err());
    }

    #[test]
    fn ring_cameras_cover_their_fov() {
        let rig = make_ring_rig(&RingRigSpec::standard_four_camera()).unwrap();
        let cam = &rig.cameras[0];
        // A ray at 109.9 deg polar angle must project inside the image.
        let th: f64 = 109.9f64.to_radians();
        let (u, v) = cam.project(UnitRay::new(th.sin(), 0.0, th.cos())).unwrap();
        assert!(cam.in_bounds(u, v), "boundary ray at ({u}, {v})");
    }
}
