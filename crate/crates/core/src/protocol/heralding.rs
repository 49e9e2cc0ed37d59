use crate::channels::decomposition::amplify;
use crate::channels::loss::loss_coefficients;
use crate::channels::{check_gamma, LossParams};
use crate::error::{Error, Result};
use crate::fock::{modewise, FockSpace, FockState};

/// Amplification and beam-splitter tap-off that realise the subtraction channels.
///
/// The input is amplified by `g_μ = 1/√((1−γ)(1−μ))` per mode and then sent through a
/// beam splitter of reflectivity `μ`; detecting `j` photons in the tap-off heralds
/// `K_j(μ) ρ_amp K_j†(μ) / p_j`, which equals the decomposition channel `E_j[ρ₀]`.
#[derive(Debug, Clone)]
pub struct HeraldingSetup {
    initial: FockState,
    loss: LossParams,
    mu: Vec<f64>,
    g_mu: Vec<f64>,
    amplified: FockState,
    probabilities: Vec<f64>,
}

/// `g_μ = 1/√((1−γ)(1−μ))`.
pub fn herald_gain(gamma: f64, mu: f64) -> f64 {
    1.0 / ((1.0 - gamma) * (1.0 - mu)).sqrt()
}

/// Squeezing of `g^n̂ S(r₀)|0⟩`: `tanh r_amp = g² tanh r₀`.
pub fn amplified_squeezing(r0: f64, g: f64) -> Result<f64> {
    let product = g * g * r0.tanh();
    if product >= 1.0 {
        return Err(Error::UnphysicalAmplification { product });
    }
    Ok(product.atanh())
}

/// Squeezing of an amplified two-mode squeezed vacuum: `tanh r_amp = g₁ g₂ tanh r₀`.
pub fn amplified_tmsv_squeezing(r0: f64, g1: f64, g2: f64) -> Result<f64> {
    let product = g1 * g2 * r0.tanh();
    if product >= 1.0 {
        return Err(Error::UnphysicalAmplification { product });
    }
    Ok(product.atanh())
}

/// Tap-off click distribution over flat pattern indices for a (normalised) amplified
/// photon-number distribution: binomial thinning with probability `μ_i` per mode.
pub(crate) fn click_distribution(space: &FockSpace, diag: &[f64], mu: &[f64]) -> Vec<f64> {
    let mut p = diag.to_vec();
    for (m, &u) in mu.iter().enumerate() {
        p = modewise::thin_distribution(space, m, u, &p);
    }
    p
}

impl HeraldingSetup {
    pub fn new(initial: &FockState, loss: &LossParams, mu: &[f64]) -> Result<Self> {
        let space = initial.space();
        loss.ensure_modes(space.num_modes())?;
        if mu.len() != space.num_modes() {
            return Err(Error::SpaceMismatch(format!(
                "{} reflectivities for {} modes",
                mu.len(),
                space.num_modes()
            )));
        }
        for (i, &u) in mu.iter().enumerate() {
            check_gamma(u).map_err(|_| {
                Error::InvalidParameter(format!("mu[{i}] = {u} must lie in [0, 1)"))
            })?;
        }
        let initial = initial.normalized()?;
        let g_mu: Vec<f64> = loss
            .gamma()
            .iter()
            .zip(mu)
            .map(|(&g, &u)| herald_gain(g, u))
            .collect();
        let amplified = amplify(&initial, &g_mu)?.normalized()?;
        amplified.check_leakage("amplification by g_mu")?;
        let probabilities = click_distribution(space, &amplified.diagonal(), mu);
        Ok(Self {
            initial,
            loss: loss.clone(),
            mu: mu.to_vec(),
            g_mu,
            amplified,
            probabilities,
        })
    }

    pub fn initial(&self) -> &FockState {
        &self.initial
    }

    pub fn loss(&self) -> &LossParams {
        &self.loss
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn g_mu(&self) -> &[f64] {
        &self.g_mu
    }

    pub fn amplified_state(&self) -> &FockState {
        &self.amplified
    }

    pub fn space(&self) -> &FockSpace {
        self.initial.space()
    }

    /// `p_j` indexed by the flat basis index of the pattern `j`.
    pub fn herald_probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, pattern: &[usize]) -> f64 {
        let space = self.space();
        if pattern.len() != space.num_modes()
            || pattern
                .iter()
                .enumerate()
                .any(|(m, &j)| j > space.cutoff(m))
        {
            return 0.0;
        }
        self.probabilities[space.index(pattern)]
    }

    /// Unnormalised `K_j(μ) ρ_amp K_j†(μ)`; its trace is `p_j`.
    pub fn heralded_branch(&self, pattern: &[usize]) -> Result<FockState> {
        let space = self.space();
        if pattern.len() != space.num_modes() {
            return Err(Error::InvalidParameter(format!(
                "pattern {pattern:?} does not match {} modes",
                space.num_modes()
            )));
        }
        let tables: Vec<Vec<Vec<f64>>> = self
            .mu
            .iter()
            .enumerate()
            .map(|(m, &u)| loss_coefficients(u, space.mode_dim(m)))
            .collect();
        if pattern
            .iter()
            .enumerate()
            .any(|(m, &j)| j > space.cutoff(m))
        {
            return Ok(self.amplified.scaled(0.0));
        }
        // every mode is acted on, including j = 0, since K_0(μ) = (1−μ)^{n̂/2} ≠ 1
        let mut state = self.amplified.clone();
        for (m, &j) in pattern.iter().enumerate() {
            state = apply_shift(space, &state, m, j, &tables[m][j])?;
        }
        Ok(state)
    }

    /// Normalised heralded state, `None` when `p_j = 0`.
    pub fn heralded_state(&self, pattern: &[usize]) -> Result<Option<FockState>> {
        let branch = self.heralded_branch(pattern)?;
        let p = branch.trace();
        if p > 0.0 {
            Ok(Some(branch.scaled(1.0 / p)))
        } else {
            Ok(None)
        }
    }
}

fn apply_shift(
    space: &FockSpace,
    state: &FockState,
    mode: usize,
    j: usize,
    coeff: &[f64],
) -> Result<FockState> {
    use crate::fock::Representation;
    match state.representation() {
        Representation::Pure(v) => {
            FockState::from_vector(space.clone(), modewise::shift_vec(space, mode, j, coeff, v))
        }
        Representation::Mixed(rho) => FockState::from_density(
            space.clone(),
            modewise::shift_density(space, mode, j, coeff, rho),
        ),
    }
}

pub fn build_heralding(
    initial: &FockState,
    loss: &LossParams,
    mu: &[f64],
) -> Result<HeraldingSetup> {
    HeraldingSetup::new(initial, loss, mu)
}
