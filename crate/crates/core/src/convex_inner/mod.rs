//! Smooth unconstrained minimization and small cone-constrained
//! convex subproblems.

mod cone_qp;
mod lbfgs;
mod newton;
mod nnls;

use serde::{Deserialize, Serialize};

use crate::error::{CnError, Result};

pub use cone_qp::{cone_lp_certificate, slater_direction, solve_cone_qp, ConeQpResult, ConeQpStatus, TRUST_RADIUS};
pub use lbfgs::{minimize_smooth, InnerResult};
pub use nnls::nnls;

/// Settings for [`minimize_smooth`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerConfig {
    pub tol_grad: f64,
    /// Cap on quasi-Newton iterations. An unconverged run may add up to 50
    /// damped Newton steps on top.
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    /// Number of stored curvature pairs.
    pub memory: usize,
    /// Largest change of any coordinate in one iteration. `None` lets the
    /// line search take full quasi-Newton steps.
    pub max_step: Option<f64>,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self { tol_grad: 1e-8, max_iters: 5000, armijo_c: 1e-4, backtrack: 0.5, memory: 10, max_step: None }
    }
}

impl InnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_grad > 0.0 && self.tol_grad < 1.0) {
            return Err(CnError::BadConfig(format!("tol_grad must lie in (0, 1), got {}", self.tol_grad)));
        }
        if self.max_iters == 0 {
            return Err(CnError::BadConfig("max_iters must be positive".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(CnError::BadConfig(format!("armijo_c must lie in (0, 1), got {}", self.armijo_c)));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(CnError::BadConfig(format!("backtrack must lie in (0, 1), got {}", self.backtrack)));
        }
        if let Some(m) = self.max_step {
            if !(m > 0.0) {
                return Err(CnError::BadConfig(format!("max_step must be positive, got {m}")));
            }
        }
        Ok(())
    }
}
