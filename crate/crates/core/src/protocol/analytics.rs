use serde::Serialize;

use super::heralding::HeraldingSetup;
use super::jset::JSet;
use super::observable::{Dynamics, Observable, PreparedObservable};
use crate::channels::{decompose_inverse, InverseDecomposition, LossParams};
use crate::error::Result;
use crate::fock::FockState;

#[derive(Debug, Clone, Default)]
pub struct AnalyticOptions {
    /// Loss assumed by the experimenter when building the decomposition (and the
    /// amplification); defaults to the true loss.
    pub assumed_gamma: Option<Vec<f64>>,
    /// Tap-off reflectivities; needed for herald probabilities and overheads.
    pub mu: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelExpectation {
    pub pattern: Vec<usize>,
    pub weight: f64,
    pub normalization: f64,
    /// `⟨O⟩_{j,noisy}`; `NaN` when `N_j = 0`.
    pub mean: f64,
    pub variance: f64,
    /// Herald probability conditioned on landing inside J, when `μ` is given.
    pub herald_probability: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticReport {
    pub ideal: f64,
    pub noisy: f64,
    pub noisy_variance: f64,
    pub mitigated: f64,
    pub exact_bias: f64,
    pub percentage_bias: f64,
    pub unmitigated_percentage_bias: f64,
    pub fractional_bias_estimate: f64,
    pub weight_sum: f64,
    pub one_norm: f64,
    pub per_channel: Vec<ChannelExpectation>,
    /// `Σ ω_j² / p_j` (herald probabilities conditioned on J).
    pub weight_overhead: Option<f64>,
    /// `Σ ω_j² / p_j · Var_j / Var_noisy`.
    pub sampling_overhead: Option<f64>,
    /// Probability that a shot lands inside J.
    pub kept_probability: Option<f64>,
}

/// Deterministic bias and overhead bookkeeping for the heralded protocol.
pub fn analytic_expectations(
    initial: &FockState,
    loss: &LossParams,
    dynamics: &Dynamics,
    observable: &Observable,
    j_set: &JSet,
    options: &AnalyticOptions,
) -> Result<AnalyticReport> {
    let space = initial.space();
    let n = space.num_modes();
    loss.ensure_modes(n)?;
    j_set.validate(n)?;
    let initial = initial.normalized()?;
    let prepared = observable.prepare(space, dynamics)?;
    let gamma = loss.gamma();
    let (ideal, _) = prepared.moments(&initial, &vec![0.0; n])?;
    let (noisy, noisy_second) = prepared.moments(&initial, gamma)?;
    let noisy_variance = noisy_second - noisy * noisy;

    let assumed = match &options.assumed_gamma {
        Some(g) => {
            let p = LossParams::new(g)?;
            p.ensure_modes(n)?;
            p
        }
        None => loss.clone(),
    };
    let patterns = j_set.patterns(n);
    let dec = decompose_inverse(&initial, &assumed, &patterns)?;
    let heralding = match &options.mu {
        Some(mu) => Some(HeraldingSetup::new(&initial, &assumed, mu)?),
        None => None,
    };
    let kept = heralding
        .as_ref()
        .map(|h| patterns.iter().map(|p| h.probability(p)).sum::<f64>());

    let mut per_channel = Vec::with_capacity(patterns.len());
    let mut mitigated = 0.0;
    let mut weight_overhead = heralding.as_ref().map(|_| 0.0);
    let mut sampling_overhead = heralding.as_ref().map(|_| 0.0);
    for term in dec.terms() {
        let (mean, variance) = match &term.channel {
            Some(c) => {
                let (m, s) = prepared.moments(c, gamma)?;
                (m, s - m * m)
            }
            None => (f64::NAN, f64::NAN),
        };
        if term.weight != 0.0 {
            mitigated += term.weight * mean;
        }
        let p = heralding
            .as_ref()
            .map(|h| h.probability(&term.pattern) / kept.unwrap());
        if let (Some(p), Some(w), Some(s)) =
            (p, weight_overhead.as_mut(), sampling_overhead.as_mut())
        {
            if term.weight != 0.0 {
                let w2 = term.weight * term.weight;
                *w += w2 / p;
                *s += w2 / p * variance / noisy_variance;
            }
        }
        per_channel.push(ChannelExpectation {
            pattern: term.pattern.clone(),
            weight: term.weight,
            normalization: term.normalization,
            mean,
            variance,
            herald_probability: p,
        });
    }
    let weight_sum = dec.weight_sum();
    let exact_bias = mitigated - ideal;
    Ok(AnalyticReport {
        ideal,
        noisy,
        noisy_variance,
        mitigated,
        exact_bias,
        percentage_bias: 100.0 * exact_bias.abs() / ideal.abs(),
        unmitigated_percentage_bias: 100.0 * (noisy - ideal).abs() / ideal.abs(),
        fractional_bias_estimate: (1.0 - weight_sum).abs(),
        weight_sum,
        one_norm: dec.one_norm(),
        per_channel,
        weight_overhead,
        sampling_overhead,
        kept_probability: kept,
    })
}

/// Expectation of a prepared observable on the pseudo-state `Σ_{j∈J} ω_j E_j`, followed by
/// the noisy dynamics. Equal to the `mitigated` field of [`analytic_expectations`].
pub fn pseudo_state_expectation(
    decomposition: &InverseDecomposition,
    prepared: &PreparedObservable,
    gamma: &[f64],
) -> Result<f64> {
    let mut acc = 0.0;
    for t in decomposition.terms() {
        if let Some(c) = &t.channel {
            acc += t.weight * prepared.moments(c, gamma)?.0;
        }
    }
    Ok(acc)
}

/// Smallest eigenvalue of the (possibly non-positive) pseudo-state over the given
/// patterns. Dense diagonalisation: meant for small spaces.
pub fn pseudo_state_min_eigenvalue(
    decomposition: &InverseDecomposition,
    patterns: &[Vec<usize>],
) -> Result<f64> {
    Ok(decomposition.pseudo_state(Some(patterns))?.min_eigenvalue())
}
