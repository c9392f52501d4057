//! Multi-view ERP depth fusion.
//!
//! Per-frame depth fields are lifted to 3D through their rig extrinsics,
//! re-expressed in a reference frame, splatted back onto that frame's ERP
//! lattice with a distance-aware z-buffer, and merged per pixel by one of the
//! mean / nearest / confidence-weighted strategies.

mod field;
mod fuse;
mod rig;
mod splat;

pub use field::DepthField;
pub use fuse::{fuse_mean, fuse_nearest, fuse_weighted, hole_fill};
pub use rig::{Pose, Rig};
pub use splat::{lift_to_world, splat_to_erp, transform_points, FootprintTable, PointSample};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("rotation is not a proper orthonormal matrix (|R^T R - I| = {0:.3e})")]
    BadRotation(f64),
    #[error("rig has {cameras} cameras but {poses} poses")]
    RigArityMismatch { cameras: usize, poses: usize },
    #[error("rig must contain at least one frame")]
    EmptyRig,
    #[error("depth fields live on different grids: {0}x{1} vs {2}x{3}")]
    GridMismatch(usize, usize, usize, usize),
    #[error("no depth fields to fuse")]
    NoFields,
    #[error("footprint lookup needs a positive distance, got {0}")]
    NonPositiveDistance(f64),
    #[error("depth field invariant violated: {0}")]
    BadField(String),
    #[error("rig JSON: {0}")]
    BadRigJson(String),
}
