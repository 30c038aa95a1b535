use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The Monge-Ampère density `1 + Δu/2` is not positive everywhere.
    #[error("potential is not Kähler: minimum Monge-Ampère density {min_density:.3e}")]
    NotKahler { min_density: f64 },

    #[error("total masses differ: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },

    #[error("inputs are not equidistributed (discrepancy {discrepancy:.3e})")]
    NotEquidistributed { discrepancy: f64 },

    /// A flow substep moved some point by more than one cell width.
    #[error("flow substep unstable: displacement {displacement:.3e} exceeds cell width {cell_width:.3e}")]
    StepUnstable { displacement: f64, cell_width: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// A damped Newton iterate left the space of potentials.
    #[error("iterate left the space of potentials at t = {time}, cell {cell}")]
    PositivityLoss { time: f64, cell: usize },

    #[error("perturbed endpoint is not a Kähler potential (min density {min_density:.3e})")]
    PerturbationTooLarge { min_density: f64 },

    #[error("competitor generation failed after {shrinkages} amplitude shrinkages")]
    GenerationFailed { shrinkages: usize },

    #[error("Lagrangian {spec} is not positively homogeneous")]
    HomogeneityRequired { spec: String },

    #[error("Young weight {label} failed the convexity probe at t = {at}")]
    NotConvex { label: String, at: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
