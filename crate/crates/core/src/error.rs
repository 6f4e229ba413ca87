use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate Lévy model: {0}")]
    DegenerateModel(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("time grids do not match")]
    GridMismatch,

    #[error("chaos elements live on different bases")]
    BasisMismatch,

    #[error("test function is not admissible: gauge {gauge} must be < 1")]
    Inadmissible { gauge: f64 },

    #[error(
        "truncation budget violated: variance deficit {deficit:.3e} is {relative:.2}% of the \
         represented variance (budget {budget:.2}%); grid.t_min must be <= {required_t_min:.4e}"
    )]
    TruncationBudget {
        deficit: f64,
        relative: f64,
        budget: f64,
        required_t_min: f64,
    },

    #[error("resolvent series diverges: term norms {0:?} did not decrease")]
    Divergence(Vec<f64>),

    #[error("iteration did not converge after {iterations} steps (last update {last_update:.3e}, decay ratios {ratios:?})")]
    NonConvergence {
        iterations: usize,
        last_update: f64,
        ratios: Vec<f64>,
    },

    #[error("step guard violated: h * C_eff = {value:.3} must be < 0.5")]
    StepGuard { value: f64 },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Checks the standing fractional range `0 < beta < 1/2`.
pub(crate) fn check_hurst_range(name: &'static str, beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 0.5 {
        Ok(())
    } else {
        Err(invalid(
            name,
            format!("{beta} is outside the admissible range (0, 1/2)"),
        ))
    }
}
