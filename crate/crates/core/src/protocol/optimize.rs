//! Choice of the tap-off reflectivity `μ`.
//!
//! Weights `ω_j` and channels `E_j` do not depend on `μ`; only the herald probabilities
//! do. The model below computes the decomposition once and re-evaluates the overhead
//! from photon-number statistics alone for every candidate `μ`.

use serde::Serialize;

use super::heralding::{click_distribution, herald_gain};
use super::jset::JSet;
use super::observable::{Dynamics, Observable};
use crate::channels::{decompose_inverse, LossParams};
use crate::error::{Error, Result};
use crate::fock::operator::local::gain_diagonal;
use crate::fock::{FockSpace, FockState};

pub const DEFAULT_MU_STEP: f64 = 0.005;
pub const DEFAULT_MU_MAX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum OverheadObjective {
    /// `Σ ω_j² / p_j`.
    #[default]
    WeightOnly,
    /// `Σ ω_j² / p_j · Var_j / Var_noisy`.
    Full,
}

#[derive(Debug, Clone, Serialize)]
pub struct MuPoint {
    pub mu: f64,
    pub g_mu: Vec<f64>,
    pub weight_overhead: f64,
    pub full_overhead: Option<f64>,
    pub kept_probability: f64,
    /// `false` when the amplified state leaks past the cutoff.
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub struct OverheadModel {
    space: FockSpace,
    gamma: Vec<f64>,
    diag: Vec<f64>,
    patterns: Vec<Vec<usize>>,
    weights: Vec<f64>,
    variance_ratios: Option<Vec<f64>>,
}

impl OverheadModel {
    /// With `observable` the full objective is available as well.
    pub fn new(
        initial: &FockState,
        loss: &LossParams,
        j_set: &JSet,
        observable: Option<(&Dynamics, &Observable)>,
    ) -> Result<Self> {
        let space = initial.space().clone();
        let n = space.num_modes();
        loss.ensure_modes(n)?;
        j_set.validate(n)?;
        let initial = initial.normalized()?;
        let patterns = j_set.patterns(n);
        let dec = decompose_inverse(&initial, loss, &patterns)?;
        let weights: Vec<f64> = patterns
            .iter()
            .map(|p| dec.weight(p).unwrap_or(0.0))
            .collect();
        let variance_ratios = match observable {
            None => None,
            Some((dynamics, obs)) => {
                let prep = obs.prepare(&space, dynamics)?;
                let (m, s) = prep.moments(&initial, loss.gamma())?;
                let noisy = s - m * m;
                let mut ratios = Vec::with_capacity(patterns.len());
                for p in &patterns {
                    ratios.push(match dec.term(p).and_then(|t| t.channel.as_ref()) {
                        Some(c) => {
                            let (m, s) = prep.moments(c, loss.gamma())?;
                            (s - m * m) / noisy
                        }
                        None => 0.0,
                    });
                }
                Some(ratios)
            }
        };
        Ok(Self {
            space,
            gamma: loss.gamma().to_vec(),
            diag: initial.diagonal(),
            patterns,
            weights,
            variance_ratios,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn patterns(&self) -> &[Vec<usize>] {
        &self.patterns
    }

    /// Overheads with the same `μ` on every mode.
    pub fn evaluate(&self, mu: f64) -> Result<MuPoint> {
        if !(0.0..1.0).contains(&mu) {
            return Err(Error::InvalidParameter(format!(
                "mu = {mu} must lie in [0, 1)"
            )));
        }
        let space = &self.space;
        let g_mu: Vec<f64> = self.gamma.iter().map(|&g| herald_gain(g, mu)).collect();
        let mut amp = self.diag.clone();
        for (m, &g) in g_mu.iter().enumerate() {
            let gain = gain_diagonal(space.mode_dim(m), g)?;
            for (idx, p) in amp.iter_mut().enumerate() {
                let f = gain[space.occupation_of(idx, m)];
                *p *= f * f;
            }
        }
        let total: f64 = amp.iter().sum();
        amp.iter_mut().for_each(|p| *p /= total);
        let feasible = diagonal_leakage(space, &amp) <= space.leakage_tolerance();
        let clicks = click_distribution(space, &amp, &vec![mu; space.num_modes()]);
        let probs: Vec<f64> = self
            .patterns
            .iter()
            .map(|p| clicks[space.index(p)])
            .collect();
        let kept: f64 = probs.iter().sum();
        let (mut w, mut full) = (0.0, 0.0);
        for (k, (&om, &p)) in self.weights.iter().zip(&probs).enumerate() {
            if om == 0.0 {
                continue;
            }
            let term = if p > 0.0 {
                om * om * kept / p
            } else {
                f64::INFINITY
            };
            w += term;
            if let Some(r) = &self.variance_ratios {
                full += term * r[k];
            }
        }
        Ok(MuPoint {
            mu,
            g_mu,
            weight_overhead: w,
            full_overhead: self.variance_ratios.as_ref().map(|_| full),
            kept_probability: kept,
            feasible,
        })
    }

    pub fn curve(&self, mus: &[f64]) -> Result<Vec<MuPoint>> {
        mus.iter().map(|&m| self.evaluate(m)).collect()
    }

    /// Grid search over `μ ∈ {0, step, 2·step, …} ∩ [0, max]`, skipping leaky points.
    pub fn optimize(&self, objective: OverheadObjective, step: f64, max: f64) -> Result<MuPoint> {
        if objective == OverheadObjective::Full && self.variance_ratios.is_none() {
            return Err(Error::InvalidParameter(
                "the full overhead objective needs an observable".into(),
            ));
        }
        if !(step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mu step must be positive, got {step}"
            )));
        }
        let n = (max / step + 1e-9).floor() as usize;
        let mut best: Option<(f64, MuPoint)> = None;
        for k in 0..=n {
            let mu = (k as f64 * step).min(max);
            if mu >= 1.0 {
                break;
            }
            let point = self.evaluate(mu)?;
            if !point.feasible {
                continue;
            }
            let value = match objective {
                OverheadObjective::WeightOnly => point.weight_overhead,
                OverheadObjective::Full => point.full_overhead.unwrap(),
            };
            if value.is_finite() && best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, point));
            }
        }
        best.map(|(_, p)| p)
            .ok_or_else(|| Error::Unsupported("no feasible reflectivity on the search grid".into()))
    }
}

fn diagonal_leakage(space: &FockSpace, diag: &[f64]) -> f64 {
    (0..space.num_modes())
        .map(|m| {
            let d = space.mode_dim(m);
            let lo = d.saturating_sub(2).max(1);
            diag.iter()
                .enumerate()
                .filter(|(idx, _)| space.occupation_of(*idx, m) >= lo)
                .map(|(_, p)| p.abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Best uniform `μ` for the given objective on the default 0.005 grid over `[0, 0.5]`.
pub fn optimize_mu(
    initial: &FockState,
    loss: &LossParams,
    j_set: &JSet,
    observable: Option<(&Dynamics, &Observable)>,
    objective: OverheadObjective,
) -> Result<MuPoint> {
    OverheadModel::new(initial, loss, j_set, observable)?.optimize(
        objective,
        DEFAULT_MU_STEP,
        DEFAULT_MU_MAX,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::factories;
    use crate::protocol::analytics::{analytic_expectations, AnalyticOptions};

    #[test]
    fn matches_analytic_overheads() {
        let s = FockSpace::single(100).unwrap();
        let sq = factories::squeezed_vacuum(&s, 0.75).unwrap();
        let loss = LossParams::new(&[0.1]).unwrap();
        let obs = Observable::fidelity(&sq);
        let j = JSet::local(1);
        let model = OverheadModel::new(&sq, &loss, &j, Some((&Dynamics::Identity, &obs))).unwrap();
        let p = model.evaluate(0.1).unwrap();
        let a = analytic_expectations(
            &sq,
            &loss,
            &Dynamics::Identity,
            &obs,
            &j,
            &AnalyticOptions {
                mu: Some(vec![0.1]),
                ..Default::default()
            },
        )
        .unwrap();
        assert!((p.weight_overhead - a.weight_overhead.unwrap()).abs() < 1e-9 * p.weight_overhead);
        assert!(
            (p.full_overhead.unwrap() - a.sampling_overhead.unwrap()).abs()
                < 1e-9 * p.weight_overhead
        );
    }

    #[test]
    fn optimum_is_interior_and_on_grid() {
        let s = FockSpace::single(100).unwrap();
        let sq = factories::squeezed_vacuum(&s, 0.75).unwrap();
        let best = optimize_mu(
            &sq,
            &LossParams::new(&[0.1]).unwrap(),
            &JSet::local(1),
            None,
            OverheadObjective::WeightOnly,
        )
        .unwrap();
        assert!(best.mu > 0.0 && best.mu < DEFAULT_MU_MAX);
        assert!(((best.mu / DEFAULT_MU_STEP).round() * DEFAULT_MU_STEP - best.mu).abs() < 1e-12);
    }
}
