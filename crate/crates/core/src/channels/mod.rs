//! Loss and dephasing channels, the exact inverse loss map and its quasi-probability
//! decomposition into photon-subtraction channels.

pub mod decomposition;
pub mod dephasing;
pub mod inverse;
pub mod loss;
pub mod superoperator;
pub mod tmsv;

pub use decomposition::{
    decompose_inverse, decompose_inverse_local, DecompositionTerm, InverseDecomposition,
};
pub use dephasing::{
    apply_dephasing, apply_dephasing_kraus, dephasing_kraus, inverse_dephasing_exact,
    DephasingParams,
};
pub use inverse::inverse_loss_exact;
pub use loss::{apply_loss, kraus_set, loss_kraus, KrausSet};
pub use superoperator::LossSuperoperator;
pub use tmsv::{tmsv_convergence_ratio, tmsv_omega, TmsvOmega};

use crate::error::{Error, Result};

/// Per-mode loss parameters `γ_i ∈ [0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossParams {
    gamma: Vec<f64>,
}

impl LossParams {
    pub fn new(gamma: &[f64]) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidParameter(
                "loss parameters need at least one mode".into(),
            ));
        }
        for (i, &g) in gamma.iter().enumerate() {
            check_gamma(g).map_err(|_| {
                Error::InvalidParameter(format!("gamma[{i}] = {g} must lie in [0, 1)"))
            })?;
        }
        Ok(Self {
            gamma: gamma.to_vec(),
        })
    }

    pub fn uniform(num_modes: usize, gamma: f64) -> Result<Self> {
        Self::new(&vec![gamma; num_modes])
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn num_modes(&self) -> usize {
        self.gamma.len()
    }

    /// Amplification factors `g₀ = 1/√(1 − γ_i)` that undo the loss on average.
    pub fn g0(&self) -> Vec<f64> {
        self.gamma.iter().map(|g| 1.0 / (1.0 - g).sqrt()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.gamma.iter().all(|&g| g == 0.0)
    }

    pub(crate) fn ensure_modes(&self, n: usize) -> Result<()> {
        if self.gamma.len() == n {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!(
                "{} loss parameters for a {n}-mode space",
                self.gamma.len()
            )))
        }
    }
}

pub(crate) fn check_gamma(g: f64) -> Result<()> {
    if (0.0..1.0).contains(&g) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "gamma = {g} must lie in [0, 1)"
        )))
    }
}
