use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Default number of discretisation nodes for fluctuating loss.
pub const DEFAULT_BINS: usize = 21;
/// Default two-sided Gaussian mass dropped outside the outermost nodes.
pub const DEFAULT_TAIL_MASS: f64 = 1e-7;

/// Per-shot loss parameters: fixed, or an independent discretised Gaussian per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GammaDistribution {
    Fixed {
        gamma: Vec<f64>,
    },
    Gaussian {
        mean: Vec<f64>,
        sd: Vec<f64>,
        #[serde(default = "default_bins")]
        bins: usize,
        #[serde(default = "default_tail")]
        tail_mass: f64,
    },
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn default_tail() -> f64 {
    DEFAULT_TAIL_MASS
}

impl GammaDistribution {
    pub fn fixed(gamma: &[f64]) -> Self {
        GammaDistribution::Fixed {
            gamma: gamma.to_vec(),
        }
    }

    /// Gaussian with standard deviation `sd_fraction · mean` per mode and the default grid.
    pub fn gaussian(mean: &[f64], sd_fraction: f64) -> Self {
        GammaDistribution::Gaussian {
            mean: mean.to_vec(),
            sd: mean.iter().map(|m| m * sd_fraction).collect(),
            bins: DEFAULT_BINS,
            tail_mass: DEFAULT_TAIL_MASS,
        }
    }

    pub fn mean(&self) -> &[f64] {
        match self {
            GammaDistribution::Fixed { gamma } => gamma,
            GammaDistribution::Gaussian { mean, .. } => mean,
        }
    }

    pub fn num_modes(&self) -> usize {
        self.mean().len()
    }

    /// Nodes and probabilities per mode.
    ///
    /// Gaussian modes use `bins` equally spaced nodes across `mean ± kσ`, where `k` puts
    /// `tail_mass` of the distribution outside that range. Each node gets the Gaussian
    /// mass of its cell (midpoints between neighbours, the outer cells extended by half a
    /// spacing), renormalised to sum to one.
    pub fn discretize(&self) -> Result<GammaTable> {
        let modes: Vec<(Vec<f64>, Vec<f64>)> = match self {
            GammaDistribution::Fixed { gamma } => gamma
                .iter()
                .map(|&g| {
                    crate::channels::check_gamma(g)?;
                    Ok((vec![g], vec![1.0]))
                })
                .collect::<Result<_>>()?,
            GammaDistribution::Gaussian {
                mean,
                sd,
                bins,
                tail_mass,
            } => {
                if mean.len() != sd.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{} means but {} standard deviations",
                        mean.len(),
                        sd.len()
                    )));
                }
                if *bins == 0 {
                    return Err(Error::InvalidParameter(
                        "at least one bin is required".into(),
                    ));
                }
                if !(*tail_mass > 0.0 && *tail_mass < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "tail mass must lie in (0, 1), got {tail_mass}"
                    )));
                }
                mean.iter()
                    .zip(sd)
                    .enumerate()
                    .map(|(m, (&mu, &s))| discretize_mode(m, mu, s, *bins, *tail_mass))
                    .collect::<Result<_>>()?
            }
        };
        if modes.is_empty() {
            return Err(Error::InvalidParameter(
                "gamma distribution has no modes".into(),
            ));
        }
        Ok(GammaTable::new(modes))
    }
}

fn discretize_mode(
    mode: usize,
    mean: f64,
    sd: f64,
    bins: usize,
    tail: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    crate::channels::check_gamma(mean)?;
    if !(sd >= 0.0 && sd.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sd[{mode}] = {sd} must be >= 0"
        )));
    }
    if sd == 0.0 || bins == 1 {
        return Ok((vec![mean], vec![1.0]));
    }
    let std = Normal::standard();
    let k = std.inverse_cdf(1.0 - tail / 2.0);
    let lo = mean - k * sd;
    let h = 2.0 * k * sd / (bins - 1) as f64;
    let nodes: Vec<f64> = (0..bins).map(|i| lo + i as f64 * h).collect();
    if nodes[0] < 0.0 || nodes[bins - 1] >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "discretised loss for mode {mode} spans [{:.4}, {:.4}], outside [0, 1)",
            nodes[0],
            nodes[bins - 1]
        )));
    }
    let dist = Normal::new(mean, sd).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut w: Vec<f64> = nodes
        .iter()
        .map(|&x| dist.cdf(x + h / 2.0) - dist.cdf(x - h / 2.0))
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Ok((nodes, w))
}

/// Discretised per-mode loss distribution ready for sampling.
#[derive(Debug, Clone)]
pub struct GammaTable {
    nodes: Vec<Vec<f64>>,
    probs: Vec<Vec<f64>>,
    cdfs: Vec<Vec<f64>>,
}

impl GammaTable {
    fn new(modes: Vec<(Vec<f64>, Vec<f64>)>) -> Self {
        let (nodes, probs): (Vec<_>, Vec<_>) = modes.into_iter().unzip();
        let cdfs = probs.iter().map(|p| cumulative(p)).collect();
        Self { nodes, probs, cdfs }
    }

    pub fn num_modes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self, mode: usize) -> &[f64] {
        &self.nodes[mode]
    }

    pub fn probabilities(&self, mode: usize) -> &[f64] {
        &self.probs[mode]
    }

    pub fn gamma_of(&self, bins: &[u16]) -> Vec<f64> {
        bins.iter()
            .enumerate()
            .map(|(m, &b)| self.nodes[m][b as usize])
            .collect()
    }

    pub(crate) fn sample_bins<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<u16>) {
        out.clear();
        for cdf in &self.cdfs {
            out.push(if cdf.len() == 1 {
                0
            } else {
                sample_cdf(cdf, rng) as u16
            });
        }
    }
}

pub(crate) fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = p
        .iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        // guard against round-off leaving the top of the CDF below a uniform draw
        let total = *last;
        for v in out.iter_mut() {
            *v /= total;
        }
    }
    out
}

pub(crate) fn sample_cdf<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}
