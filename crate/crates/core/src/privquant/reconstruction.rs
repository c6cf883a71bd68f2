//! Reconstruction-protection level of the mechanism.
//!
//! An adversary whose prior has log-density bounded by `rho0` cannot
//! reconstruct the input to within `sqrt(2) - 2a` except with probability at
//! most
//!
//! ```text
//! omega(a) = sqrt(8) exp(-(r - 1) a^2 / 2) exp(epsilon + rho0)
//! ```
//!
//! where `r` is the rank of the reconstruction target.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionBound {
    /// `ln omega(a)`; `omega` itself overflows for budgets in the hundreds.
    pub log_omega: f64,
    /// `sqrt(2) - 2a`.
    pub breach_radius: f64,
}

impl ReconstructionBound {
    pub fn omega(&self) -> f64 {
        self.log_omega.exp()
    }
}

pub fn reconstruction_protection(epsilon: f64, rho0: f64, recon_rank: u64, a: f64) -> Result<ReconstructionBound> {
    if recon_rank < 2 {
        return Err(invalid(format!("reconstruction rank must be at least 2, got {recon_rank}")));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(invalid(format!("a must lie in [0, 1], got {a}")));
    }
    if !epsilon.is_finite() || !rho0.is_finite() {
        return Err(invalid("epsilon and rho0 must be finite"));
    }
    let log_omega = 1.5 * std::f64::consts::LN_2 - (recon_rank - 1) as f64 * a * a / 2.0 + epsilon + rho0;
    Ok(ReconstructionBound { log_omega, breach_radius: std::f64::consts::SQRT_2 - 2.0 * a })
}
