//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A field does not have one entry per grid node.
    #[error("input shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    /// Local stretch ratio fell to zero or below (lambda = 1 + eps <= 0).
    #[error("degenerate deformation at node {node}: stretch eps = {eps}")]
    DegenerateDeformation { node: usize, eps: f64 },

    /// The macro equilibrium solve did not converge.
    #[error("equilibrium solve failed: {reason} (last residual {residual:.3e})")]
    SolverFailure { reason: String, residual: f64 },

    /// The shooting oracle did not converge.
    #[error("shooting oracle failed: {reason} (last residual {residual:.3e})")]
    OracleFailure { reason: String, residual: f64 },

    /// A constitutive function returned a non-finite or out-of-range value.
    #[error("constitutive evaluation error: {0}")]
    ConstitutiveEval(String),

    /// Operation requires a restricted constitutive form (e.g. sigma_x-only).
    #[error("mode error: {0}")]
    Mode(String),

    /// A propagator or state lost unitarity beyond the monitored tolerance.
    #[error("unitarity lost at node {node}: defect {defect:.3e} exceeds {tol:.3e}")]
    UnitarityLost { node: usize, defect: f64, tol: f64 },

    /// Fock-space tail occupation exceeded the truncation threshold.
    #[error("truncation error at node {node}, t = {time}: tail occupation {tail:.3e} exceeds {threshold:.3e}")]
    Truncation {
        node: usize,
        time: f64,
        tail: f64,
        threshold: f64,
    },

    /// U^dag dU is too far from antihermitian; the grid is too coarse for
    /// the stored unitary field (or the field is not unitary at all).
    #[error("discretization consistency error at node {node}: antihermitian defect {defect:.3e} exceeds {tol:.3e} relative to the gradient scale")]
    AntihermitianDefect { node: usize, defect: f64, tol: f64 },

    /// The fixed-point coupling iteration did not contract.
    #[error("coupling divergence at step {step} (t = {time}): inner iteration did not reach {tol:.3e} in {max_inner} passes; try a smaller dt or beta")]
    CouplingDivergence {
        step: usize,
        time: f64,
        tol: f64,
        max_inner: usize,
    },

    /// An error from a lower level, annotated with the step it occurred in.
    #[error("at step {step} (t = {time}): {source}")]
    AtStep {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    /// Configuration file could not be read.
    #[error("cannot read config {path}: {reason}")]
    ConfigRead { path: String, reason: String },

    /// Configuration file is not valid TOML.
    #[error("config syntax error in {path}: {message}")]
    ConfigSyntax { path: String, message: String },

    /// One or more validation failures; all of them are listed.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    ConfigInvalid(Vec<String>),

    /// Filesystem failure, with the offending path attached.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attach step/time context to an error bubbling out of the time loop.
    pub fn at_step(self, step: usize, time: f64) -> Error {
        Error::AtStep {
            step,
            time,
            source: Box::new(self),
        }
    }

    /// True for errors a user can fix by editing the configuration.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ConfigRead { .. } | Error::ConfigSyntax { .. } | Error::ConfigInvalid(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
