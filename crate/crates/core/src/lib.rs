//! Geometry core for monocular clothed-human reconstruction.
//!
//! The crate covers the deterministic parts of the reconstruction pipeline:
//!
//! - [`mesh`]: triangle meshes, OBJ/PLY I/O, the orthographic camera,
//!   barycentric sampling, uniform Laplacians and nearest-neighbor queries.
//! - [`sle`]: Fourier expansion of body points and z-buffered projection of
//!   the expanded features into image-aligned stacks.
//! - [`jla`]: masked uniform perturbation of body parameters.
//! - [`splat`]: 14-parameter Gaussians, forward splat rendering, density
//!   grids and isosurface export.
//! - [`wlr`]: normal-map rasterization, the multi-view normal loss, its
//!   vertex gradients and the remeshing loop.
//! - [`metrics`]: Chamfer distance, normal consistency, f-score, PSNR, SSIM.
//!
//! All world coordinates are centimeters.

// `!(x > 0.0)` is used on purpose so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod jla;
pub mod mesh;
pub mod metrics;
pub mod pngio;
pub mod registry;
pub mod sle;
pub mod splat;
pub mod wlr;

pub use error::{Error, Result};
pub use registry::Registry;
