use std::collections::HashMap;

use nalgebra::DVector;
use num_complex::Complex64;

use super::LossParams;
use crate::error::{Error, Result};
use crate::fock::math::{factorial, lowering_coefficients};
use crate::fock::{modewise, FockSpace, FockState, Representation};

/// One term `ω_j E_j` of the quasi-probability decomposition of `Λ⁻¹[ρ₀]`.
#[derive(Debug, Clone)]
pub struct DecompositionTerm {
    /// Photons subtracted per mode.
    pub pattern: Vec<usize>,
    /// `ω_j = Π_i (−γ_i)^{j_i}/j_i! · N_j`.
    pub weight: f64,
    /// `N_j = Tr[â^j g₀^n̂ ρ₀ g₀^n̂ â†^j]`.
    pub normalization: f64,
    /// Normalised `E_j[ρ₀]`; `None` when `N_j = 0`, in which case `ω_j = 0` exactly.
    pub channel: Option<FockState>,
}

/// `Λ⁻¹[ρ₀] = Σ_j ω_j E_j[ρ₀]` restricted to a chosen set of subtraction patterns.
#[derive(Debug, Clone)]
pub struct InverseDecomposition {
    gamma: Vec<f64>,
    g0: Vec<f64>,
    terms: Vec<DecompositionTerm>,
    index: HashMap<Vec<usize>, usize>,
}

impl InverseDecomposition {
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn g0(&self) -> &[f64] {
        &self.g0
    }

    pub fn terms(&self) -> &[DecompositionTerm] {
        &self.terms
    }

    pub fn term(&self, pattern: &[usize]) -> Option<&DecompositionTerm> {
        self.index.get(pattern).map(|&i| &self.terms[i])
    }

    /// `ω_j`, or `None` if the pattern was not computed.
    pub fn weight(&self, pattern: &[usize]) -> Option<f64> {
        self.term(pattern).map(|t| t.weight)
    }

    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// `Σ |ω_j|`.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.weight.abs()).sum()
    }

    /// `Σ_j ω_j E_j[ρ₀]` over the given patterns (all computed ones if `None`).
    pub fn pseudo_state(&self, patterns: Option<&[Vec<usize>]>) -> Result<FockState> {
        let selected: Vec<(f64, &FockState)> = match patterns {
            None => self
                .terms
                .iter()
                .filter_map(|t| t.channel.as_ref().map(|c| (t.weight, c)))
                .collect(),
            Some(ps) => ps
                .iter()
                .filter_map(|p| self.term(p))
                .filter_map(|t| t.channel.as_ref().map(|c| (t.weight, c)))
                .collect(),
        };
        FockState::linear_combination(&selected)
    }
}

/// Apply `g₀^n̂` mode by mode (unnormalised).
pub(crate) fn amplify(state: &FockState, gains: &[f64]) -> Result<FockState> {
    let space = state.space();
    let tables: Vec<Vec<f64>> = gains
        .iter()
        .enumerate()
        .map(|(m, &g)| crate::fock::operator::local::gain_diagonal(space.mode_dim(m), g))
        .collect::<Result<_>>()?;
    match state.representation() {
        Representation::Pure(v) => {
            let mut w = v.clone();
            for (m, t) in tables.iter().enumerate() {
                modewise::scale_vec(space, m, t, &mut w);
            }
            FockState::from_vector(space.clone(), w)
        }
        Representation::Mixed(rho) => {
            let mut w = rho.clone();
            for (m, t) in tables.iter().enumerate() {
                modewise::scale_density(space, m, t, &mut w);
            }
            FockState::from_density(space.clone(), w)
        }
    }
}

/// `â^j` applied mode by mode with per-mode coefficient tables (unnormalised).
pub(crate) fn subtract(
    space: &FockSpace,
    state: &FockState,
    pattern: &[usize],
    tables: &[Vec<Vec<f64>>],
) -> Result<FockState> {
    match state.representation() {
        Representation::Pure(v) => {
            let mut w: DVector<Complex64> = v.clone();
            for (m, &j) in pattern.iter().enumerate() {
                if j > 0 {
                    w = modewise::shift_vec(space, m, j, &tables[m][j], &w);
                }
            }
            FockState::from_vector(space.clone(), w)
        }
        Representation::Mixed(rho) => {
            let mut w = rho.clone();
            for (m, &j) in pattern.iter().enumerate() {
                if j > 0 {
                    w = modewise::shift_density(space, m, j, &tables[m][j], &w);
                }
            }
            FockState::from_density(space.clone(), w)
        }
    }
}

/// Lowering tables `tables[mode][j][n] = √((n+j)!/n!)`.
pub(crate) fn lowering_tables(space: &FockSpace) -> Vec<Vec<Vec<f64>>> {
    (0..space.num_modes())
        .map(|m| {
            let d = space.mode_dim(m);
            (0..d).map(|j| lowering_coefficients(d, j)).collect()
        })
        .collect()
}

/// Decompose `Λ⁻¹[ρ₀]` over the given subtraction patterns.
///
/// Channels are kept in the representation of `ρ₀`: pure inputs give pure `E_j`,
/// which keeps large two-mode problems within memory.
pub fn decompose_inverse(
    state: &FockState,
    params: &LossParams,
    patterns: &[Vec<usize>],
) -> Result<InverseDecomposition> {
    let space = state.space();
    params.ensure_modes(space.num_modes())?;
    let g0 = params.g0();
    let amplified = amplify(&state.normalized()?, &g0)?;
    amplified
        .normalized()?
        .check_leakage("amplification by g0 for the inverse decomposition")?;
    let tables = lowering_tables(space);
    let mut terms = Vec::with_capacity(patterns.len());
    let mut index = HashMap::new();
    for pattern in patterns {
        if pattern.len() != space.num_modes() {
            return Err(Error::InvalidParameter(format!(
                "pattern {pattern:?} does not match {} modes",
                space.num_modes()
            )));
        }
        if index.contains_key(pattern) {
            continue;
        }
        let prefactor: f64 = pattern
            .iter()
            .zip(params.gamma())
            .map(|(&j, &g)| (-g).powi(j as i32) / factorial(j))
            .product();
        let fits = pattern
            .iter()
            .enumerate()
            .all(|(m, &j)| j < space.mode_dim(m));
        let (normalization, channel) = if prefactor == 0.0 || !fits {
            (0.0, None)
        } else {
            let raw = subtract(space, &amplified, pattern, &tables)?;
            let n = raw.trace();
            if n > 0.0 {
                (n, Some(raw.scaled(1.0 / n)))
            } else {
                (0.0, None)
            }
        };
        let weight = if channel.is_some() {
            prefactor * normalization
        } else {
            0.0
        };
        index.insert(pattern.clone(), terms.len());
        terms.push(DecompositionTerm {
            pattern: pattern.clone(),
            weight,
            normalization,
            channel,
        });
    }
    if terms.iter().all(|t| t.channel.is_none()) {
        return Err(Error::EmptyDecomposition);
    }
    Ok(InverseDecomposition {
        gamma: params.gamma().to_vec(),
        g0,
        terms,
        index,
    })
}

/// All patterns with `j_i ≤ max_per_mode` on every mode.
pub fn decompose_inverse_local(
    state: &FockState,
    params: &LossParams,
    max_per_mode: usize,
) -> Result<InverseDecomposition> {
    let patterns = crate::protocol::JSet::local(max_per_mode).patterns(state.space().num_modes());
    decompose_inverse(state, params, &patterns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::inverse_loss_exact;
    use crate::fock::factories;

    #[test]
    fn trivial_cases() {
        let s = FockSpace::single(40).unwrap();
        let sq = factories::squeezed_vacuum(&s, 0.4).unwrap();
        let dec = decompose_inverse_local(&sq, &LossParams::new(&[0.0]).unwrap(), 8).unwrap();
        assert!((dec.weight(&[0]).unwrap() - 1.0).abs() < 1e-14);
        assert!(dec.terms().iter().skip(1).all(|t| t.weight == 0.0));

        let vac = FockState::vacuum(&s);
        let dec = decompose_inverse_local(&vac, &LossParams::new(&[0.4]).unwrap(), 8).unwrap();
        assert!((dec.weight(&[0]).unwrap() - 1.0).abs() < 1e-15);
        for t in dec.terms().iter().skip(1) {
            assert_eq!(t.normalization, 0.0);
            assert_eq!(t.weight, 0.0);
            assert!(t.channel.is_none());
        }
    }

    #[test]
    fn reproduces_exact_inverse_for_squeezed_vacuum() {
        let s = FockSpace::single(160).unwrap();
        let sq = factories::squeezed_vacuum(&s, 1.0).unwrap();
        let p = LossParams::new(&[0.1]).unwrap();
        // |ω_j| decays roughly like 0.52^j here, so 45 terms leave a ~1e-12 tail
        let dec = decompose_inverse_local(&sq, &p, 45).unwrap();
        for t in dec.terms() {
            let sign = if t.pattern[0] % 2 == 0 { 1.0 } else { -1.0 };
            assert!(t.weight * sign > 0.0);
        }
        let pseudo = dec.pseudo_state(None).unwrap();
        let exact = inverse_loss_exact(&sq, &p).unwrap();
        let d = pseudo.trace_distance(&exact).unwrap();
        assert!(d < 1e-9, "{d}");
        assert!((dec.weight_sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mixed_and_pure_inputs_agree() {
        let s = FockSpace::single(30).unwrap();
        let cat = factories::cat_state(&s, Complex64::new(1.0, 0.2), 0.3).unwrap();
        let p = LossParams::new(&[0.25]).unwrap();
        let a = decompose_inverse_local(&cat, &p, 4).unwrap();
        let b = decompose_inverse_local(&cat.clone().into_mixed(), &p, 4).unwrap();
        for (x, y) in a.terms().iter().zip(b.terms()) {
            assert!((x.weight - y.weight).abs() < 1e-13);
            let (cx, cy) = (x.channel.as_ref().unwrap(), y.channel.as_ref().unwrap());
            assert!(cx.clone().into_mixed().trace_distance(cy).unwrap() < 1e-12);
        }
    }
}
