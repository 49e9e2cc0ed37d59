//! Monte-Carlo sampling of the initial state.
//!
//! When `Λ⁻¹[ρ₀] = Σ_k w_k σ_k` has a short closed form, each shot prepares `σ_k` with
//! probability `|w_k|/S` (`S = Σ|w_k|`) and multiplies the outcome by `S·sgn(w_k)`.
//! The estimator is unbiased with overhead close to `S²`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gamma::{cumulative, GammaDistribution};
use super::observable::{Dynamics, Observable};
use super::shots::{run, run_many, ListSource, ShotOptions, ShotRecord};
use crate::channels::LossParams;
use crate::error::{Error, Result};
use crate::fock::{factories, FockSpace, FockState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum StateFamily {
    /// `|1⟩` on a single mode.
    SinglePhoton,
    /// `(|α⟩ + e^{iφ}|−α⟩)/A_φ`.
    Cat { alpha: f64, phi: f64 },
    /// `(|α⟩|β⟩ + s|−α⟩|−β⟩)/B_s` with `s = ±1`.
    Ecs { alpha: f64, beta: f64, sign: f64 },
    /// `rails` dual-rail qubits, each `|0⟩|1⟩`, on `2·rails` modes.
    DualRail { rails: usize },
}

#[derive(Debug, Clone)]
pub struct MonteCarloPlan {
    pub states: Vec<FockState>,
    /// Signed weights `w_k`, summing to one.
    pub weights: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub signs: Vec<f64>,
    /// `Σ |w_k|`.
    pub s: f64,
    /// The ideal state `ρ₀`.
    pub target: FockState,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    pub mean: f64,
    /// `√(shot_variance / n)`, population-style.
    pub standard_error: f64,
    /// Population variance of the weighted single-shot values `S·sgn·o`.
    pub shot_variance: f64,
    pub s: f64,
    /// `S²`, the approximate sampling overhead.
    pub approx_overhead: f64,
    pub shots: usize,
}

/// `S` for a cat state: `(e^{2γ|α̃|²} + cos φ e^{−2|α̃|²}) / (1 + cos φ e^{−2|α|²})`
/// with `α̃ = α/√(1−γ)`.
pub fn cat_sampling_norm(alpha: f64, phi: f64, gamma: f64) -> f64 {
    let a2 = alpha * alpha;
    let at2 = a2 / (1.0 - gamma);
    ((2.0 * gamma * at2).exp() + phi.cos() * (-2.0 * at2).exp())
        / (1.0 + phi.cos() * (-2.0 * a2).exp())
}

/// `S` for `rails` dual-rail qubits: `((1+γ)/(1−γ))^rails`.
pub fn dual_rail_sampling_norm(rails: usize, gamma: f64) -> f64 {
    ((1.0 + gamma) / (1.0 - gamma)).powi(rails as i32)
}

/// Weights of the two superposition states produced by inverting loss on a two-component
/// coherent superposition with relative phase `cos_phi` (±1 for ECS).
///
/// `x` and `x_tilde` are `Σ|α_i|²` before and after the `1/√(1−γ_i)` rescaling, and
/// `cross = e^{2 Σ γ_i |α̃_i|²}` is the amplification of the coherences.
fn superposition_weights(cos_phi: f64, x: f64, x_tilde: f64, cross: f64) -> Result<(f64, f64)> {
    let a2 = 2.0 * (1.0 + cos_phi * (-2.0 * x).exp());
    let same = 2.0 * (1.0 + cos_phi * (-2.0 * x_tilde).exp());
    let other = 2.0 * (1.0 - cos_phi * (-2.0 * x_tilde).exp());
    if a2 < 1e-12 {
        return Err(Error::DegenerateNormalization(a2));
    }
    Ok((
        same * (1.0 + cross) / (2.0 * a2),
        other * (1.0 - cross) / (2.0 * a2),
    ))
}

/// Build the sampling plan for `family` under `loss` on the given space.
pub fn monte_carlo_state_plan(
    space: &FockSpace,
    family: &StateFamily,
    loss: &LossParams,
) -> Result<MonteCarloPlan> {
    loss.ensure_modes(space.num_modes())?;
    let g = loss.gamma();
    let (target, mut entries): (FockState, Vec<(f64, FockState)>) = match family {
        StateFamily::SinglePhoton => {
            let one = FockState::basis(space, &[1])?;
            let vac = FockState::vacuum(space);
            (
                one.clone(),
                vec![(1.0 / (1.0 - g[0]), one), (-g[0] / (1.0 - g[0]), vac)],
            )
        }
        StateFamily::Cat { alpha, phi } => {
            let target = factories::cat_state(space, Complex64::new(*alpha, 0.0), *phi)?;
            let at = alpha / (1.0 - g[0]).sqrt();
            let cross = (2.0 * g[0] * at * at).exp();
            let (w_same, w_other) =
                superposition_weights(phi.cos(), alpha * alpha, at * at, cross)?;
            let same = factories::cat_state(space, Complex64::new(at, 0.0), *phi)?;
            let mut entries = vec![(w_same, same)];
            if w_other != 0.0 {
                entries.push((
                    w_other,
                    factories::cat_state(
                        space,
                        Complex64::new(at, 0.0),
                        phi + std::f64::consts::PI,
                    )?,
                ));
            }
            (target, entries)
        }
        StateFamily::Ecs { alpha, beta, sign } => {
            let c = |x: f64| Complex64::new(x, 0.0);
            let target = factories::entangled_coherent_state(space, c(*alpha), c(*beta), *sign)?;
            let at = alpha / (1.0 - g[0]).sqrt();
            let bt = beta / (1.0 - g[1]).sqrt();
            let cross = (2.0 * (g[0] * at * at + g[1] * bt * bt)).exp();
            let (w_same, w_other) = superposition_weights(
                *sign,
                alpha * alpha + beta * beta,
                at * at + bt * bt,
                cross,
            )?;
            let mut entries = vec![(
                w_same,
                factories::entangled_coherent_state(space, c(at), c(bt), *sign)?,
            )];
            if w_other != 0.0 {
                entries.push((
                    w_other,
                    factories::entangled_coherent_state(space, c(at), c(bt), -sign)?,
                ));
            }
            (target, entries)
        }
        StateFamily::DualRail { rails } => {
            if *rails == 0 || space.num_modes() != 2 * rails {
                return Err(Error::InvalidParameter(format!(
                    "{rails} dual-rail qubits need {} modes, space has {}",
                    2 * rails,
                    space.num_modes()
                )));
            }
            let logical: Vec<usize> = (0..2 * rails).map(|m| m % 2).collect();
            let target = FockState::basis(space, &logical)?;
            // each rail independently: |01⟩ with 1/(1−γ), |00⟩ with −γ/(1−γ)
            let mut entries = Vec::with_capacity(1 << rails);
            for mask in 0..(1usize << rails) {
                let mut occ = logical.clone();
                let mut w = 1.0;
                for r in 0..*rails {
                    let gr = g[2 * r + 1];
                    if mask >> r & 1 == 1 {
                        occ[2 * r + 1] = 0;
                        w *= -gr / (1.0 - gr);
                    } else {
                        w *= 1.0 / (1.0 - gr);
                    }
                }
                entries.push((w, FockState::basis(space, &occ)?));
            }
            (target, entries)
        }
    };
    entries.retain(|(w, _)| *w != 0.0);
    let s: f64 = entries.iter().map(|(w, _)| w.abs()).sum();
    if !(s > 0.0) {
        return Err(Error::DegenerateNormalization(s));
    }
    for (_, st) in &entries {
        st.check_leakage("Monte-Carlo plan state")?;
    }
    Ok(MonteCarloPlan {
        probabilities: entries.iter().map(|(w, _)| w.abs() / s).collect(),
        signs: entries.iter().map(|(w, _)| w.signum()).collect(),
        weights: entries.iter().map(|(w, _)| *w).collect(),
        states: entries.into_iter().map(|(_, st)| st).collect(),
        s,
        target,
    })
}

/// Raw Monte-Carlo shots; `herald_pattern` holds the index of the prepared plan state.
pub fn monte_carlo_shots(
    plan: &MonteCarloPlan,
    dynamics: &Dynamics,
    observable: &Observable,
    gamma: &GammaDistribution,
    opts: &ShotOptions,
) -> Result<Vec<ShotRecord>> {
    let source = ListSource {
        states: &plan.states,
        cdf: cumulative(&plan.probabilities),
    };
    run(
        &source,
        plan.target.space().num_modes(),
        dynamics,
        observable,
        gamma,
        opts,
    )
}

/// [`monte_carlo_shots`] once per seed (`opts.seed` is ignored), sharing the samplers.
pub fn monte_carlo_shots_repeated(
    plan: &MonteCarloPlan,
    dynamics: &Dynamics,
    observable: &Observable,
    gamma: &GammaDistribution,
    opts: &ShotOptions,
    seeds: &[u64],
) -> Result<Vec<Vec<ShotRecord>>> {
    let source = ListSource {
        states: &plan.states,
        cdf: cumulative(&plan.probabilities),
    };
    run_many(
        &source,
        plan.target.space().num_modes(),
        dynamics,
        observable,
        gamma,
        opts,
        seeds,
    )
}

/// Weighted outcomes `S·sgn(w_k)·o` of Monte-Carlo shots.
pub fn weighted_values(plan: &MonteCarloPlan, records: &[ShotRecord]) -> Vec<f64> {
    records
        .iter()
        .map(|r| plan.s * plan.signs[r.herald_pattern[0]] * r.observable_value)
        .collect()
}

pub fn monte_carlo_run(
    plan: &MonteCarloPlan,
    dynamics: &Dynamics,
    observable: &Observable,
    gamma: &GammaDistribution,
    opts: &ShotOptions,
) -> Result<MonteCarloReport> {
    let records = monte_carlo_shots(plan, dynamics, observable, gamma, opts)?;
    Ok(summarize(plan, &weighted_values(plan, &records)))
}

fn summarize(plan: &MonteCarloPlan, values: &[f64]) -> MonteCarloReport {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let shot_variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    MonteCarloReport {
        mean,
        standard_error: (shot_variance / n as f64).sqrt(),
        shot_variance,
        s: plan.s,
        approx_overhead: plan.s * plan.s,
        shots: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_plan_is_the_state_itself() {
        let s = FockSpace::single(20).unwrap();
        let plan = monte_carlo_state_plan(
            &s,
            &StateFamily::Cat {
                alpha: 1.0,
                phi: 0.0,
            },
            &LossParams::new(&[0.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(plan.states.len(), 1);
        assert!((plan.s - 1.0).abs() < 1e-15);
        assert!(plan.states[0].trace_distance(&plan.target).unwrap() < 1e-12);
    }

    #[test]
    fn single_photon_plan() {
        let s = FockSpace::single(4).unwrap();
        let g = 0.1;
        let plan = monte_carlo_state_plan(
            &s,
            &StateFamily::SinglePhoton,
            &LossParams::new(&[g]).unwrap(),
        )
        .unwrap();
        assert!((plan.s - (1.0 + g) / (1.0 - g)).abs() < 1e-12);
        assert!((plan.probabilities[0] - (1.0 / (1.0 - g)) / plan.s).abs() < 1e-12);
        assert!((plan.probabilities[1] - (g / (1.0 - g)) / plan.s).abs() < 1e-12);
        assert_eq!(plan.signs, vec![1.0, -1.0]);
    }

    #[test]
    fn cat_weights_sum_to_one_and_match_closed_form() {
        let s = FockSpace::single(40).unwrap();
        for (alpha, phi, g) in [
            (1.0, 0.0, 0.2),
            (1.3, std::f64::consts::PI, 0.1),
            (0.8, 1.0, 0.3),
        ] {
            let plan = monte_carlo_state_plan(
                &s,
                &StateFamily::Cat { alpha, phi },
                &LossParams::new(&[g]).unwrap(),
            )
            .unwrap();
            assert!((plan.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((plan.s - cat_sampling_norm(alpha, phi, g)).abs() < 1e-12);
        }
    }

    #[test]
    fn plan_reproduces_inverse_map() {
        // Λ[Σ w_k σ_k] = ρ₀
        let s = FockSpace::single(40).unwrap();
        let loss = LossParams::new(&[0.25]).unwrap();
        let plan = monte_carlo_state_plan(
            &s,
            &StateFamily::Cat {
                alpha: 1.1,
                phi: 0.7,
            },
            &loss,
        )
        .unwrap();
        let terms: Vec<(f64, &FockState)> = plan
            .weights
            .iter()
            .copied()
            .zip(plan.states.iter())
            .collect();
        let pseudo = FockState::linear_combination(&terms).unwrap();
        let out = crate::channels::apply_loss(&pseudo, &loss).unwrap();
        assert!(out.trace_distance(&plan.target).unwrap() < 1e-10);
    }

    #[test]
    fn ecs_plan_reproduces_inverse_map() {
        let s = FockSpace::new(&[20, 20]).unwrap();
        let loss = LossParams::new(&[0.2, 0.3]).unwrap();
        let plan = monte_carlo_state_plan(
            &s,
            &StateFamily::Ecs {
                alpha: 1.0,
                beta: 0.8,
                sign: -1.0,
            },
            &loss,
        )
        .unwrap();
        let terms: Vec<(f64, &FockState)> = plan
            .weights
            .iter()
            .copied()
            .zip(plan.states.iter())
            .collect();
        let out =
            crate::channels::apply_loss(&FockState::linear_combination(&terms).unwrap(), &loss)
                .unwrap();
        assert!(out.trace_distance(&plan.target).unwrap() < 1e-9);
    }

    #[test]
    fn dual_rail_norm() {
        for rails in 1..=3 {
            let s = FockSpace::new(&vec![3; 2 * rails]).unwrap();
            let plan = monte_carlo_state_plan(
                &s,
                &StateFamily::DualRail { rails },
                &LossParams::uniform(2 * rails, 0.2).unwrap(),
            )
            .unwrap();
            assert!((plan.s - dual_rail_sampling_norm(rails, 0.2)).abs() < 1e-12);
            assert_eq!(plan.states.len(), 1 << rails);
        }
    }
}
