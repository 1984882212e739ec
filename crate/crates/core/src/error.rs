use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid axes ({0}, {1}) for a planar rotation")]
    InvalidAxes(usize, usize),
    #[error("hint direction is parallel to the stretch direction")]
    DegenerateHint,
    #[error("antipodal directions do not determine a unique great-circle arc")]
    AmbiguousArc,
    #[error("point is outside the range of the Zorich map (the origin)")]
    OutsideRange,
    #[error("point is not in the fundamental set")]
    NotInFundamentalSet,
    #[error("map is undefined at the origin")]
    UndefinedAtOrigin,
    #[error("Zorich transform undefined: f(Z(x)) = 0")]
    TransformUndefined,
    #[error("radius {radius} outside shell [{inner}, {outer}]")]
    OutsideShell { radius: f64, inner: f64, outer: f64 },
    #[error("chart singularity (chart coordinates vanish)")]
    ChartSingularity,
    #[error("point within {margin} of a differentiability-region boundary")]
    NearSingularRegion { margin: f64 },
    #[error("finite-difference stencil failed at {0:?}")]
    Stencil(Vec<f64>),
    #[error("degenerate derivative (Jacobian {0:e})")]
    DegenerateDerivative(f64),
    #[error("direction sampling failed: {0}")]
    Sampling(String),
    #[error("waypoints {0} and {1} are antipodal; insert an intermediate waypoint")]
    RequiresIntermediateWaypoint(usize, usize),
}

pub type Result<T> = std::result::Result<T, Error>;
