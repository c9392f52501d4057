use super::FusionError;
use crate::geometry::CameraModel;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Rigid transform from a camera frame to the common rig/world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, FusionError> {
        let residual = (rotation.transpose() * rotation - Matrix3::identity()).norm();
        if residual > 1e-9 || (rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(FusionError::BadRotation(residual));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Rotation about the `+y` (up) axis; positive angle turns `+z` toward `+x`.
    pub fn yaw(angle_rad: f64, translation: Vector3<f64>) -> Self {
        let (s, c) = angle_rad.sin_cos();
        Self {
            rotation: Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn rotate(&self, d: Vector3<f64>) -> Vector3<f64> {
        self.rotation * d
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }
}

/// Camera models plus per-frame extrinsics in a common world frame.
#[derive(Debug, Clone)]
pub struct Rig {
    pub cameras: Vec<CameraModel>,
    pub poses: Vec<Pose>,
}

#[derive(Serialize, Deserialize)]
struct PoseJson {
    #[serde(rename = "R")]
    r: [f64; 9],
    t: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct RigJson {
    cameras: Vec<CameraModel>,
    poses: Vec<PoseJson>,
}

impl Rig {
    pub fn new(cameras: Vec<CameraModel>, poses: Vec<Pose>) -> Result<Self, FusionError> {
        if cameras.is_empty() {
            return Err(FusionError::EmptyRig);
        }
        if cameras.len() != poses.len() {
            return Err(FusionError::RigArityMismatch {
                cameras: cameras.len(),
                poses: poses.len(),
            });
        }
        Ok(Self { cameras, poses })
    }

    pub fn frame_count(&self) -> usize {
        self.cameras.len()
    }

    pub fn from_json(json: &str) -> Result<Self, FusionError> {
        let raw: RigJson =
            serde_json::from_str(json).map_err(|e| FusionError::BadRigJson(e.to_string()))?;
        let mut poses = Vec::with_capacity(raw.poses.len());
        for p in &raw.poses {
            let m = Matrix3::new(
                p.r[0], p.r[1], p.r[2], p.r[3], p.r[4], p.r[5], p.r[6], p.r[7], p.r[8],
            );
            poses.push(Pose::new(m, Vector3::new(p.t[0], p.t[1], p.t[2]))?);
        }
        for c in &raw.cameras {
            c.validate()
                .map_err(|e| FusionError::BadRigJson(e.to_string()))?;
        }
        Rig::new(raw.cameras, poses)
    }

    pub fn to_json(&self) -> String {
        let raw = RigJson {
            cameras: self.cameras.clone(),
            poses: self
                .poses
                .iter()
                .map(|p| {
                    let m = p.rotation();
                    PoseJson {
                        r: [
                            m[(0, 0)],
                            m[(0, 1)],
                            m[(0, 2)],
                            m[(1, 0)],
                            m[(1, 1)],
                            m[(1, 2)],
                            m[(2, 0)],
                            m[(2, 1)],
                            m[(2, 2)],
                        ],
                        t: [p.translation().x, p.translation().y, p.translation().z],
                    }
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("rig serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pose_rejects_non_rotation() {
        let m = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Pose::new(m, Vector3::zeros()).is_err());
        // Reflection: orthonormal but det = -1.
        let refl = Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Pose::new(refl, Vector3::zeros()).is_err());
    }

    #[test]
    fn yaw_quarter_turn_sends_z_to_x() {
        let p = Pose::yaw(std::f64::consts::FRAC_PI_2, Vector3::zeros());
        let v = p.rotate(Vector3::new(0.0, 0.0, 1.0));
        assert_abs_diff_eq!(v.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_composes_to_identity() {
        let p = Pose::yaw(0.7, Vector3::new(1.0, -2.0, 3.0));
        let q = p.inverse();
        let x = Vector3::new(0.3, 0.4, 0.5);
        let back = q.apply(p.apply(x));
        assert_abs_diff_eq!((back - x).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rig_json_roundtrip() {
        let cam = CameraModel::equidistant(80.0, 80.0, 160.0, 160.0, 220.0, 320, 320).unwrap();
        let rig = Rig::new(
            vec![cam.clone(), cam],
            vec![
                Pose::identity(),
                Pose::yaw(std::f64::consts::FRAC_PI_2, Vector3::new(0.02, 0.0, 0.0)),
            ],
        )
        .unwrap();
        let json = rig.to_json();
        let back = Rig::from_json(&json).unwrap();
        assert_eq!(back.frame_count(), 2);
        assert_abs_diff_eq!(
            (back.poses[1].rotation() - rig.poses[1].rotation()).norm(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn rig_arity_is_checked() {
        let cam = CameraModel::equidistant(80.0, 80.0, 160.0, 160.0, 220.0, 320, 320).unwrap();
        assert!(Rig::new(vec![cam], vec![]).is_err());
        assert!(Rig::new(vec![], vec![]).is_err());
    }
}
