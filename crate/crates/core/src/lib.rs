//! Evaluation toolkit for equirectangular (360°) depth maps.
//!
//! Covers direct depth errors and accuracies (plain, spherically weighted and
//! icosahedron-sampled), depth-boundary metrics, surface-smoothness metrics,
//! 3D geometric metrics, depth-regression losses with analytic gradients, and
//! a longitude-periodic displacement warp.

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accum;
pub mod boundary;
pub mod direct;
pub mod error;
pub mod geom;
pub mod grid;
pub mod icosphere;
pub mod io;
pub mod losses;
pub mod report;
pub mod sphere;
pub mod vec3;
pub mod warp;

pub use error::{Error, Result};
pub use grid::Grid;
pub use icosphere::{build_icosphere, IcoSphere};
pub use io::DepthPanorama;
