use thiserror::Error;

use crate::geometry::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {0} is not inside the domain")]
    NotContained(Point),

    #[error("no path between the endpoints at this resolution (window or resolution too coarse)")]
    NoPath,

    #[error("metric graph is empty: no lattice node passes the clearance test")]
    EmptyGraph,

    #[error("path touches the boundary near {0}")]
    BoundaryContact(Point),

    #[error("kernel under-resolved: eps = {eps} < 3h = {}", 3.0 * h)]
    KernelUnderresolved { eps: f64, h: f64 },

    #[error("density is not positive at cell ({i}, {j})")]
    NonPositiveDensity { i: usize, j: usize },

    #[error("endpoint {0} is not in the basepoint component of the smoothed domain")]
    ComponentMismatch(Point),

    #[error("lengths ({0}, {1}, {2}) violate the triangle inequality")]
    NotATriangle(f64, f64, f64),

    #[error("distances do not form a metric quadruple: triple ({0}, {1}, {2}) fails")]
    NotAQuadruple(usize, usize, usize),

    #[error("point {0} coincides with the puncture")]
    AtPuncture(Point),

    #[error("crossing word {0:?} is not freely reduced or uses unknown cuts")]
    InvalidWord(Vec<i32>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
