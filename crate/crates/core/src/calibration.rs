//! Loss calibration from coherent probes.
//!
//! A coherent probe `⊗|α_i⟩` sent through a passive interferometer with uniform loss
//! leaves a product of Poisson photon counts with total mean `(1−γ) Σ|α_i|²`, whatever
//! the interferometer. The estimator `γ̂ = 1 − N̄_out / Σ|α_i|²` therefore has variance
//! `(1−γ)/(N_shots Σ|α_i|²)`, bounded above by `1/(N_shots Σ|α_i|²)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::seed::stage_rng;

const BATCH: usize = 8192;

#[derive(Debug, Clone)]
pub struct ProbeConfig {
    pub amplitudes: Vec<Complex64>,
    pub n_shots: usize,
    /// Treat the ideal dynamics as passive (energy conserving); required for the estimator.
    pub assume_passive_ideal: bool,
}

impl ProbeConfig {
    pub fn new(amplitudes: Vec<Complex64>, n_shots: usize) -> Self {
        Self {
            amplitudes,
            n_shots,
            assume_passive_ideal: true,
        }
    }

    /// `M = Σ|α_i|²`.
    pub fn total_intensity(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn validate(&self) -> Result<()> {
        if !(self.total_intensity() > 0.0) {
            return Err(Error::InvalidParameter(
                "probe has zero input intensity".into(),
            ));
        }
        if self.n_shots == 0 {
            return Err(Error::InvalidParameter(
                "probe needs at least one shot".into(),
            ));
        }
        if !self.assume_passive_ideal {
            return Err(Error::Unsupported(
                "intensity calibration assumes passive ideal dynamics".into(),
            ));
        }
        Ok(())
    }
}

/// Uniform loss `γ` on every mode followed by an optional passive mode transformation.
#[derive(Debug, Clone)]
pub struct Device {
    pub gamma: f64,
    pub passive: Option<DMatrix<Complex64>>,
}

impl Device {
    pub fn new(gamma: f64) -> Result<Self> {
        crate::channels::check_gamma(gamma)?;
        Ok(Self {
            gamma,
            passive: None,
        })
    }

    /// Attach an `M × M` unitary acting on the mode operators.
    pub fn with_passive(mut self, unitary: DMatrix<Complex64>) -> Result<Self> {
        let n = unitary.nrows();
        let defect = (unitary.adjoint() * &unitary - DMatrix::<Complex64>::identity(n, n)).norm();
        if unitary.ncols() != n || defect > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "passive transformation must be unitary (defect {defect:.3e})"
            )));
        }
        self.passive = Some(unitary);
        Ok(self)
    }

    /// Mean photon number per output mode for a coherent input.
    pub fn output_means(&self, amplitudes: &[Complex64]) -> Result<Vec<f64>> {
        let a = DVector::from_column_slice(amplitudes);
        let out = match &self.passive {
            Some(u) if u.nrows() != a.len() => {
                return Err(Error::SpaceMismatch(format!(
                    "{}-mode probe on a {}-mode device",
                    a.len(),
                    u.nrows()
                )))
            }
            Some(u) => u * a,
            None => a,
        };
        Ok(out
            .iter()
            .map(|x| (1.0 - self.gamma) * x.norm_sqr())
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaEstimate {
    pub gamma_hat: f64,
    /// Empirical variance of `γ̂`: sample variance of the total count over `N M²`.
    pub variance: f64,
    pub n_shots_used: usize,
}

/// Sample total output photon numbers shot by shot.
pub fn sample_counts(
    probe: &ProbeConfig,
    device: &Device,
    seed: u64,
    execution: Execution,
) -> Result<Vec<u64>> {
    probe.validate()?;
    let means = device.output_means(&probe.amplitudes)?;
    let dists: Vec<Option<Poisson<f64>>> = means
        .iter()
        .map(|&m| (m > 0.0).then(|| Poisson::new(m).expect("positive mean")))
        .collect();
    let n_batches = probe.n_shots.div_ceil(BATCH);
    let batches = execution.map_range(n_batches, |b| {
        let mut rng = stage_rng(seed, "calibration", b as u64);
        let len = BATCH.min(probe.n_shots - b * BATCH);
        (0..len)
            .map(|_| {
                dists
                    .iter()
                    .flatten()
                    .map(|d| d.sample(&mut rng) as u64)
                    .sum::<u64>()
            })
            .collect::<Vec<_>>()
    });
    Ok(batches.into_iter().flatten().collect())
}

/// `γ̂ = 1 − N̄_out / Σ|α_i|²`.
pub fn estimate_gamma(probe: &ProbeConfig, device: &Device, seed: u64) -> Result<GammaEstimate> {
    estimate_gamma_with(probe, device, seed, Execution::default())
}

pub fn estimate_gamma_with(
    probe: &ProbeConfig,
    device: &Device,
    seed: u64,
    execution: Execution,
) -> Result<GammaEstimate> {
    let counts = sample_counts(probe, device, seed, execution)?;
    Ok(from_counts(&counts, probe.total_intensity()))
}

fn from_counts(counts: &[u64], intensity: f64) -> GammaEstimate {
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = if counts.len() > 1 {
        counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    GammaEstimate {
        gamma_hat: 1.0 - mean / intensity,
        variance: var / (n * intensity * intensity),
        n_shots_used: counts.len(),
    }
}

/// Average several probe settings, weighting each by its shot count times intensity
/// (inverse of its worst-case variance). Each probe draws from its own sub-seed.
pub fn estimate_gamma_multi(
    probes: &[ProbeConfig],
    device: &Device,
    seed: u64,
) -> Result<GammaEstimate> {
    if probes.is_empty() {
        return Err(Error::InvalidParameter("no probe settings given".into()));
    }
    let mut acc = 0.0;
    let mut wsum = 0.0;
    let mut var = 0.0;
    let mut shots = 0;
    let mut estimates = Vec::with_capacity(probes.len());
    for (k, p) in probes.iter().enumerate() {
        let e = estimate_gamma(p, device, crate::seed::derive_seed(seed, "probe", k as u64))?;
        let w = p.n_shots as f64 * p.total_intensity();
        acc += w * e.gamma_hat;
        wsum += w;
        shots += e.n_shots_used;
        estimates.push((w, e));
    }
    for (w, e) in &estimates {
        var += (w / wsum).powi(2) * e.variance;
    }
    Ok(GammaEstimate {
        gamma_hat: acc / wsum,
        variance: var,
        n_shots_used: shots,
    })
}

/// Exact variance of `γ̂` for Poisson counts: `(1−γ)/(N M)`.
pub fn poisson_variance(gamma: f64, n_shots: usize, intensity: f64) -> f64 {
    (1.0 - gamma) / (n_shots as f64 * intensity)
}

/// The commonly quoted variance `(1−γ)²/(N M)`. It agrees with [`poisson_variance`] to
/// first order only for small `γ`.
pub fn variance_formula(gamma: f64, n_shots: usize, intensity: f64) -> f64 {
    (1.0 - gamma).powi(2) / (n_shots as f64 * intensity)
}

/// Smallest `N` with `P(|γ̂ − γ| ≥ ε) ≤ 1 − confidence` by Chebyshev's inequality,
/// using the worst-case variance `1/(N M)`: `N > 1/(M ε² (1 − confidence))`.
pub fn plan_shots(accuracy: f64, confidence: f64, total_intensity: f64) -> Result<u64> {
    if !(accuracy > 0.0 && accuracy < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "accuracy must lie in (0, 1), got {accuracy}"
        )));
    }
    if !(0.0..1.0).contains(&confidence) {
        return Err(Error::InvalidParameter(format!(
            "confidence must lie in [0, 1), got {confidence}"
        )));
    }
    if !(total_intensity > 0.0) {
        return Err(Error::InvalidParameter(
            "probe has zero input intensity".into(),
        ));
    }
    if confidence == 0.0 {
        return Ok(1);
    }
    let x = 1.0 / (total_intensity * accuracy * accuracy * (1.0 - confidence));
    // 1/(1e-4 · 1e-2) is not exact in binary; snap values that are integers up to rounding
    let snapped = if (x - x.round()).abs() <= 1e-9 * x {
        x.round()
    } else {
        x.floor()
    };
    if snapped >= u64::MAX as f64 {
        return Err(Error::Overflow(format!(
            "shot count {x:e} does not fit in 64 bits"
        )));
    }
    Ok(snapped as u64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planner_examples() {
        assert_eq!(plan_shots(0.01, 0.99, 1.0).unwrap(), 1_000_001);
        assert_eq!(plan_shots(0.01, 0.99, 4.0).unwrap(), 250_001);
        assert_eq!(plan_shots(0.1, 0.99, 1.0).unwrap(), 10_001);
        assert_eq!(plan_shots(0.1, 0.0, 1.0).unwrap(), 1);
        assert!(plan_shots(0.0, 0.5, 1.0).is_err());
        assert!(plan_shots(0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn lossless_device_gives_zero() {
        let probe = ProbeConfig::new(vec![Complex64::new(1.0, 0.0); 4], 10_000);
        let e = estimate_gamma(&probe, &Device::new(0.0).unwrap(), 3).unwrap();
        assert!(e.gamma_hat.abs() < 4.0 * poisson_variance(0.0, 10_000, 4.0).sqrt());
    }

    #[test]
    fn zero_intensity_rejected() {
        let probe = ProbeConfig::new(vec![Complex64::new(0.0, 0.0); 2], 10);
        assert!(estimate_gamma(&probe, &Device::new(0.1).unwrap(), 0).is_err());
    }

    #[test]
    fn sequential_matches_parallel() {
        let probe = ProbeConfig::new(
            vec![Complex64::new(1.0, 0.5), Complex64::new(0.3, 0.0)],
            20_000,
        );
        let d = Device::new(0.3).unwrap();
        let a = estimate_gamma_with(&probe, &d, 9, Execution::Sequential).unwrap();
        let b = estimate_gamma_with(&probe, &d, 9, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
