//! Dense numerical primitives shared by the rest of the crate.
//!
//! Everything here is a pure function of its inputs.

mod fd;
mod linalg;
mod lp;
mod nelder_mead;
mod root;

pub use fd::fd_gradient;
pub use linalg::{orthocomplement_basis, orthonormal_span, rank};
pub use lp::{lp_solve, LpProblem, LpSolution};
pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use root::{invert_increasing, solve_decreasing_root, solve_decreasing_root_with, Domain};

use crate::error::{Error, Result};

/// Numerical tolerances used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Residual bound for scalar root finding.
    pub root_abs: f64,
    /// Gradient norm at which Newton iterations stop.
    pub grad_norm: f64,
    /// Feasibility / positivity threshold for linear programs.
    pub lp_feas: f64,
    /// Step for central differences.
    pub fd_step: f64,
    /// Total-variation radius under which two optima are the same.
    pub cluster_tv: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { root_abs: 1e-12, grad_norm: 1e-9, lp_feas: 1e-9, fd_step: 1e-6, cluster_tv: 1e-5 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("root_abs", self.root_abs),
            ("grad_norm", self.grad_norm),
            ("lp_feas", self.lp_feas),
            ("fd_step", self.fd_step),
            ("cluster_tv", self.cluster_tv),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("tolerance {name} must be strictly positive, got {v}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
