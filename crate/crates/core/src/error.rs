use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no level crossing in the field: contour is empty")]
    NoContour,

    #[error("level set has {0} closed components, expected exactly one")]
    MultipleComponents(usize),

    #[error("collar of half-width {halfwidth} is not embedded: transversal segments intersect")]
    CollarOverlap { halfwidth: f64 },

    #[error("transversal field is tilted: min N·nu = {min_alignment} < {required}")]
    FrameTilt { min_alignment: f64, required: f64 },

    #[error("curve leaves the collar at transversal {index}")]
    OutsideCollar { index: usize },

    #[error("curve is not a graph over the reference: transversal {index} has {hits} intersections")]
    NonGraphical { index: usize, hits: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("solver did not converge: residual {residual:e} after {sweeps} sweeps")]
    NoConvergence { residual: f64, sweeps: usize },

    #[error("contact set touches the box margin; enlarge the domain")]
    BoxTooSmall,

    #[error("bisection failed: {0}")]
    BisectionFailed(String),

    #[error("Newtonian kernel evaluated at the origin")]
    OriginSingularity,

    #[error("evaluation point is within 0.1 arc spacings of the curve")]
    TooCloseToCurve,

    #[error("curve is degenerate: {0}")]
    DegenerateCurve(String),

    #[error("obstacle Laplacian too small at boundary vertex {index}: |{value}| < rho/2")]
    DegenerateLaplacian { index: usize, value: f64 },

    #[error("no free boundary: contact set is empty")]
    EmptyBoundary,

    #[error("theta fixed point diverged: contraction estimate {ratio}")]
    FixedPointDiverged { ratio: f64 },

    #[error("external field grows too slowly at the box boundary")]
    QGrowthTooSlow,

    #[error("flavor not supported by this solver: {0}")]
    UnsupportedFlavor(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
