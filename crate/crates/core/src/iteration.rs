//! Bookkeeping shared by every iterative solver.

use std::fmt;

use crate::error::{Error, Result};

/// Termination rule. The certificate is the error-free fixed-point residual
/// of the underlying operator; `log_every` thins the recorded history
/// (the first and the terminal iterations are always logged).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    pub tol: f64,
    pub max_iters: usize,
    pub log_every: usize,
    pub keep_iterates: bool,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 100_000,
            log_every: 1,
            keep_iterates: false,
        }
    }
}

impl StopCriteria {
    pub fn new(tol: f64, max_iters: usize) -> Self {
        Self {
            tol,
            max_iters,
            ..Self::default()
        }
    }

    /// Runs exactly `iters` steps without testing the residual, for
    /// step-by-step comparisons between solvers. Divergence still stops the run.
    pub fn fixed(iters: usize) -> Self {
        Self::new(f64::NEG_INFINITY, iters)
    }

    pub fn with_log_every(mut self, k: usize) -> Self {
        self.log_every = k;
        self
    }

    pub fn keep_iterates(mut self) -> Self {
        self.keep_iterates = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fixed = self.tol == f64::NEG_INFINITY;
        if !fixed && !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be finite and nonnegative, got {}",
                self.tol
            )));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidParameter("log_every must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn should_log(&self, n: usize, terminal: bool) -> bool {
        terminal || n.is_multiple_of(self.log_every)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIters,
    Diverged,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIters => "max-iters",
            Status::Diverged => "diverged",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Subspace-membership diagnostics for a primal-dual pair `(x_n, y_n)`,
/// which must satisfy `x_n ∈ V` and `y_n ∈ V⊥`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    /// `‖P_{V⊥} x_n‖`
    pub x_complement: f64,
    pub x_norm: f64,
    /// `‖P_V y_n‖`
    pub y_projection: f64,
    pub y_norm: f64,
}

impl Membership {
    /// Largest of the two relative membership defects
    /// `‖P_{V⊥}x‖ / (1 + ‖x‖)` and `‖P_V y‖ / (1 + ‖y‖)`.
    pub fn relative_defect(&self) -> f64 {
        (self.x_complement / (1.0 + self.x_norm)).max(self.y_projection / (1.0 + self.y_norm))
    }
}

/// One logged iteration.
///
/// `residual` is the fixed-point residual at iterate `n`; `dx` and `dy` are
/// the norms of the step taken from iterate `n` to `n + 1` (on the terminal
/// record, the step the method would take next).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub n: usize,
    pub lambda: f64,
    pub residual: f64,
    pub dx: f64,
    pub dy: Option<f64>,
    pub objective: Option<f64>,
    pub membership: Option<Membership>,
    /// `‖P_V B x_n − P_V B x̄‖`, filled in once the run is over with the
    /// final iterate standing in for `x̄`.
    pub forward_gap: Option<f64>,
}

impl IterationRecord {
    pub(crate) fn new(n: usize, lambda: f64, residual: f64, dx: f64) -> Self {
        Self {
            n,
            lambda,
            residual,
            dx,
            dy: None,
            objective: None,
            membership: None,
            forward_gap: None,
        }
    }
}

pub(crate) fn all_finite(v: &crate::Vector) -> bool {
    v.iter().all(|c| c.is_finite())
}
