//! Quasihyperbolic geometry of planar domains: distances and geodesics,
//! smoothed densities and their curvature, CAT(0) audits, and universal
//! covers of punctured planes.

pub mod density;
pub mod domain;
pub mod error;
pub mod geometry;
pub mod cat0;
pub mod cli;
pub mod covering;
pub mod graph;
pub mod metric;
pub mod path;
pub mod quadrature;
pub mod refine;
pub mod smoothing;

pub use domain::Domain;
pub use error::{Error, Result};
pub use geometry::{Point, Rect};
pub use path::Path;
