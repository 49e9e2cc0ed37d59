use std::collections::BTreeMap;

use serde::Serialize;

use super::jset::JSet;
use super::shots::ShotRecord;
use crate::channels::InverseDecomposition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ChannelStats {
    pub pattern: Vec<usize>,
    pub weight: f64,
    pub count: usize,
    pub mean: f64,
    /// Sample variance (`n − 1`); `None` with fewer than two shots.
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorReport {
    pub mitigated_mean: f64,
    pub per_channel: Vec<ChannelStats>,
    /// `fractional_bias_estimate · |mitigated_mean|`.
    pub bias_estimate: f64,
    /// `|Σ_{j∉J} ω_j| = |1 − Σ_{j∈J} ω_j|`, since all weights sum to one.
    pub fractional_bias_estimate: f64,
    /// `Σ ω_j² Var_j / N_j`.
    pub variance: f64,
    /// `Σ ω_j² / p̂_j` with `p̂_j = N_j / N_kept`: the weight-only overhead, discards excluded.
    pub sampling_overhead: f64,
    pub shots_total: usize,
    pub shots_discarded: usize,
    pub warnings: Vec<String>,
}

impl EstimatorReport {
    /// `Σ ω_j² / p̂_j · Var_j / Var_noisy` given the unmitigated single-shot variance.
    pub fn full_overhead(&self, noisy_variance: f64) -> f64 {
        let kept = (self.shots_total - self.shots_discarded) as f64;
        self.per_channel
            .iter()
            .filter(|c| c.count > 0)
            .map(|c| c.weight * c.weight * kept / c.count as f64 * c.variance.unwrap_or(0.0))
            .sum::<f64>()
            / noisy_variance
    }

    pub fn channel(&self, pattern: &[usize]) -> Option<&ChannelStats> {
        self.per_channel.iter().find(|c| c.pattern == pattern)
    }
}

/// `Ō_mit = Σ_{j∈J} ω_j Ō_{j,noisy}` from heralded shot records.
pub fn mitigated_estimator(
    records: &[ShotRecord],
    decomposition: &InverseDecomposition,
    j_set: &JSet,
) -> Result<EstimatorReport> {
    let num_modes = decomposition.gamma().len();
    j_set.validate(num_modes)?;
    let patterns = j_set.patterns(num_modes);

    let mut sums: BTreeMap<&[usize], (usize, f64, f64)> = BTreeMap::new();
    let mut discarded = 0;
    for r in records {
        if r.discarded || !j_set.contains(&r.herald_pattern) {
            discarded += 1;
            continue;
        }
        let e = sums.entry(r.herald_pattern.as_slice()).or_default();
        e.0 += 1;
        e.1 += r.observable_value;
    }
    let means: BTreeMap<&[usize], f64> = sums.iter().map(|(k, v)| (*k, v.1 / v.0 as f64)).collect();
    // second pass for numerically stable variances
    for r in records {
        if let Some(m) = means.get(r.herald_pattern.as_slice()) {
            if !r.discarded {
                let d = r.observable_value - m;
                sums.get_mut(r.herald_pattern.as_slice()).unwrap().2 += d * d;
            }
        }
    }

    let kept = records.len() - discarded;
    let mut missing = Vec::new();
    let mut warnings = Vec::new();
    let mut per_channel = Vec::with_capacity(patterns.len());
    let (mut mean, mut variance, mut overhead, mut weight_sum) = (0.0, 0.0, 0.0, 0.0);
    for p in &patterns {
        let weight = decomposition.weight(p).ok_or_else(|| {
            Error::InvalidParameter(format!("decomposition has no weight for pattern {p:?}"))
        })?;
        weight_sum += weight;
        let (count, sum, ss) = sums.get(p.as_slice()).copied().unwrap_or_default();
        if count == 0 {
            if weight != 0.0 {
                missing.push(format!("{p:?}"));
            }
            per_channel.push(ChannelStats {
                pattern: p.clone(),
                weight,
                count,
                mean: f64::NAN,
                variance: None,
            });
            continue;
        }
        let m = sum / count as f64;
        let var = (count > 1).then(|| ss / (count - 1) as f64);
        if var.is_none() && weight != 0.0 {
            warnings.push(format!(
                "channel {p:?} has a single shot; its variance is unavailable"
            ));
        }
        mean += weight * m;
        variance += weight * weight * var.unwrap_or(0.0) / count as f64;
        overhead += weight * weight * kept as f64 / count as f64;
        per_channel.push(ChannelStats {
            pattern: p.clone(),
            weight,
            count,
            mean: m,
            variance: var,
        });
    }
    if !missing.is_empty() {
        return Err(Error::MissingChannels(missing.join(", ")));
    }
    let fractional = (1.0 - weight_sum).abs();
    Ok(EstimatorReport {
        mitigated_mean: mean,
        per_channel,
        bias_estimate: fractional * mean.abs(),
        fractional_bias_estimate: fractional,
        variance,
        sampling_overhead: overhead,
        shots_total: records.len(),
        shots_discarded: discarded,
        warnings,
    })
}

/// Mean and sample variance of non-discarded outcomes.
pub fn sample_mean_variance(records: &[ShotRecord]) -> (f64, f64, usize) {
    let values: Vec<f64> = records
        .iter()
        .filter(|r| !r.discarded)
        .map(|r| r.observable_value)
        .collect();
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        f64::NAN
    };
    (mean, var, n)
}
