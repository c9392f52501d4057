//! Omnidirectional multi-view depth estimation toolkit.
//!
//! The crate is organized around a spherical (equirectangular) working domain:
//!
//! - [`geometry`]: central camera models (pinhole, equidistant, double-sphere)
//!   and the pixel ↔ unit-ray ↔ ERP conversions plus whole-image warps.
//! - [`numeric`]: minimal dense f64 tensor kernels (linear, layer norm, GELU,
//!   softmax, multi-head self-attention, one-hidden-layer MLP) with analytic
//!   gradients checked against a finite-difference oracle.
//! - [`aha`]: the hierarchical attention depth network — convolutional stem,
//!   window/frame/global attention blocks over local and summary tokens,
//!   windowed refinement, depth/confidence head, and the analytic complexity
//!   model.
//! - [`fusion`]: ERP→3D lifting, distance-aware z-buffer splatting back onto a
//!   shared ERP lattice, hole filling, and mean/nearest/confidence-weighted
//!   multi-frame fusion.
//! - [`loss`] / [`metrics`]: latitude-weighted training losses with analytic
//!   gradients, and the masked depth-error metric suite.
//! - [`scene`]: analytic box/sphere scenes rendered to ground-truth ERP depth
//!   and shaded images, used as the oracle for fusion and end-to-end tests.
//! - [`bench`]: f32 timing harness comparing hierarchical attention against
//!   full attention.
//! - [`io`]: PFM / PGM / PNG rasters and the raw tensor dump format.

pub mod aha;
pub mod bench;
pub mod fusion;
pub mod geometry;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod numeric;
pub mod scene;
