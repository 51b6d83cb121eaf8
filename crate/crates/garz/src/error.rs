//! Error types shared across the solver.

use thiserror::Error;

/// Everything that can go wrong while building models, meshes, or running the scheme.
#[derive(Debug, Clone, Error)]
pub enum GarzError {
    /// A structural assumption on the velocity pair or the induced flux failed
    /// on the validation grid. `name` identifies the assumption, `worst_point`
    /// is the (rho, w) sample where the violation is largest.
    #[error("model assumption `{name}` violated at (rho={:.6}, w={:.6}): {worst_value:.3e}", worst_point.0, worst_point.1)]
    AssumptionViolation {
        name: &'static str,
        worst_point: (f64, f64),
        worst_value: f64,
    },

    /// An argument left its admissible interval by more than the fp allowance.
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    DomainError {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// The flux derivative does not change sign on [0, 1]; the model has no
    /// interior critical point.
    #[error("critical point not bracketed: dflux(0)={df0:.3e}, dflux(1)={df1:.3e}")]
    RootNotBracketed { df0: f64, df1: f64 },

    /// Branch inversion was asked for a level outside [0, max f].
    #[error("level {level} outside [0, {fmax}] for branch inversion")]
    OutOfRange { level: f64, fmax: f64 },

    /// Neither flux slice dominates the other pointwise; the germ enumeration
    /// of the two-flux interface is not defined in that case.
    #[error("flux slices are not ordered pointwise (w_left={w_left}, w_right={w_right})")]
    OrderingError { w_left: f64, w_right: f64 },

    /// Initial density dips below the vacuum threshold.
    #[error("initial density {value:.6} below vacuum threshold {epsilon:.6} in cell {cell}")]
    VacuumError {
        cell: usize,
        value: f64,
        epsilon: f64,
    },

    /// The CFL constraint rejects the requested time step ratio.
    #[error("CFL violated: lambda={lambda:.6} exceeds max stable {max_stable:.6}")]
    CflViolation { lambda: f64, max_stable: f64 },

    /// Internal bug sentinel: a quantity the scheme guarantees left its range.
    #[error("scheme invariant violated at step {step}, cell {cell}: {detail}")]
    InvariantViolation {
        step: usize,
        cell: usize,
        detail: String,
    },

    /// No intermediate density in [epsilon, 1] matches the target velocity;
    /// the data sit in the vacuum-adjacent regime excluded from scope.
    #[error("no intermediate state: target velocity {target:.6} outside [{lo:.6}, {hi:.6}]")]
    NoIntermediateState { target: f64, lo: f64, hi: f64 },

    /// A tracked discontinuity of w could not be located in its search window.
    #[error("front {front} lost at step {step} (no level crossing in window)")]
    FrontLost { front: usize, step: usize },

    /// A test function's support leaves the simulated space-time box.
    #[error("test function support [{t_lo:.4},{t_hi:.4}]x[{x_lo:.4},{x_hi:.4}] exits the domain")]
    SupportError {
        t_lo: f64,
        t_hi: f64,
        x_lo: f64,
        x_hi: f64,
    },

    /// Invalid run configuration (shape-level, before any numerics).
    #[error("invalid configuration: {0}")]
    ConfigError(String),
}

pub type Result<T> = std::result::Result<T, GarzError>;
