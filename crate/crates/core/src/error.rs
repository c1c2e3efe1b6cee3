use thiserror::Error;

/// Errors produced anywhere in the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("mode {index} leaks {leak:.3e} of its power outside the grid")]
    GridTooSmall { index: usize, leak: f64 },

    #[error("sampling too coarse: {0}")]
    Undersampled(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("zero matrix has no defined fidelity or efficiency")]
    ZeroMatrix,

    #[error("grating {index} has no nonzero coefficient")]
    EmptyGrating { index: usize },

    #[error("aperture centred at ({x:.4e}, {y:.4e}) m is not contained in the grid")]
    ApertureOutsideGrid { x: f64, y: f64 },

    #[error("propagation over {distance:.4e} m aliases ({fraction:.2e} of the power wraps); pitch must be at least {required_pitch:.3e} m or the grid enlarged")]
    Aliasing {
        distance: f64,
        fraction: f64,
        required_pitch: f64,
    },

    #[error("apertures of radius {radius:.4e} m overlap (minimum spot separation {separation:.4e} m)")]
    OverlappingApertures { radius: f64, separation: f64 },

    #[error("state vector is identically zero")]
    ZeroState,

    #[error("calibration: {0}")]
    Calibration(String),

    #[error("no SIC fiducial found for d = {d} after {restarts} restarts (best deviation {best:.3e})")]
    SicSearch { d: usize, restarts: usize, best: f64 },

    #[error("invalid fiducial: {0}")]
    InvalidFiducial(String),

    #[error("reconstruction did not converge (residual {residual:.3e} after {iterations} iterations)")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("order finding failed: {0}")]
    OrderFinding(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
