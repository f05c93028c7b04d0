use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("root finder failed at z = {z}: residuals {residuals:?}")]
    RootFinding { z: Complex64, residuals: Vec<f64> },

    #[error("singular evaluation at z = {z}: derivative undefined on the discriminant")]
    SingularEvaluation { z: Complex64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("degenerate height H = {height:e} at radius {radius} (map is Q[[0]] near the center)")]
    DegenerateHeight { height: f64, radius: f64 },

    #[error("degenerate rescaling: D(x, s) = {0:e}")]
    DegenerateRescaling(f64),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("covering did not terminate within {depth} levels (N = {count}); check tolerances and delta")]
    NonTermination { depth: usize, count: usize },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("no mesh ring near radius {0}")]
    Resolution(f64),

    #[error("internal logic error: {0}")]
    InternalLogic(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
