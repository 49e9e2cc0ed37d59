use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use super::gamma::{cumulative, sample_cdf};
use crate::channels::loss::{branch_overlap, for_each_branch, lossy_density};
use crate::error::{Error, Result};
use crate::fock::operator::local;
use crate::fock::{modewise, BosonicOperator, FockSpace, FockState, Representation};

/// Ideal dynamics following the loss: `U_noisy = U_ideal ∘ Λ_γ`.
#[derive(Debug, Clone, Default)]
pub enum Dynamics {
    #[default]
    Identity,
    Unitary(BosonicOperator),
}

/// A measured quantity. Each shot yields one real outcome.
#[derive(Debug, Clone)]
pub enum Observable {
    /// `|φ⟩⟨φ|` for a pure `φ`; outcomes are 0 or 1, and the mean is the fidelity.
    Projector(FockState),
    /// `scale · Π_i x̂_i^{p_i}` from simultaneous homodyne detection of `x` on every mode
    /// with `p_i > 0`. A covariance entry of a zero-mean state is
    /// `σ_kl = 2⟨x_k x_l⟩` (`scale = 2`, one power on each of two modes, or a square).
    Quadrature { powers: Vec<u32>, scale: f64 },
    /// Photon counting on one mode.
    Number { mode: usize },
    /// General Hermitian operator, sampled from its eigendecomposition (small spaces).
    Hermitian(BosonicOperator),
}

impl Observable {
    pub fn fidelity(target: &FockState) -> Self {
        Observable::Projector(target.clone())
    }

    /// `σ_kl` on quadratures `x` (covariance of a zero-mean state).
    pub fn covariance_xx(num_modes: usize, k: usize, l: usize) -> Self {
        let mut powers = vec![0; num_modes];
        powers[k] += 1;
        powers[l] += 1;
        Observable::Quadrature { powers, scale: 2.0 }
    }

    /// Precompute everything that does not depend on the measured state.
    pub fn prepare(&self, space: &FockSpace, dynamics: &Dynamics) -> Result<PreparedObservable> {
        if let Dynamics::Unitary(u) = dynamics {
            space.ensure_same(u.space(), "dynamics")?;
        }
        let needs_identity = |what: &str| -> Result<()> {
            if matches!(dynamics, Dynamics::Identity) {
                Ok(())
            } else {
                Err(Error::Unsupported(format!(
                    "{what} sampling requires identity dynamics; use a Hermitian observable instead"
                )))
            }
        };
        Ok(match self {
            Observable::Projector(phi) => {
                space.ensure_same(phi.space(), "projector")?;
                let phi = phi.normalized()?;
                let v = phi.amplitudes().ok_or_else(|| {
                    Error::InvalidParameter("projector target must be pure".into())
                })?;
                let rotated = match dynamics {
                    Dynamics::Identity => v.clone(),
                    Dynamics::Unitary(u) => u.matrix().adjoint() * v,
                };
                PreparedObservable::Projector { phi: rotated }
            }
            Observable::Quadrature { powers, scale } => {
                needs_identity("quadrature")?;
                if powers.len() != space.num_modes() {
                    return Err(Error::InvalidParameter(format!(
                        "{} quadrature powers for {} modes",
                        powers.len(),
                        space.num_modes()
                    )));
                }
                let measured: Vec<usize> = (0..powers.len()).filter(|&m| powers[m] > 0).collect();
                let bases = measured
                    .iter()
                    .map(|&m| {
                        let eig = SymmetricEigen::new(local::quadrature_x_real(space.mode_dim(m)));
                        let vt = eig.eigenvectors.transpose().map(|x| Complex64::new(x, 0.0));
                        (eig.eigenvalues.iter().copied().collect(), vt)
                    })
                    .collect();
                PreparedObservable::Quadrature {
                    powers: measured.iter().map(|&m| powers[m]).collect(),
                    measured,
                    scale: *scale,
                    bases,
                }
            }
            Observable::Number { mode } => {
                needs_identity("photon-number")?;
                space.check_mode(*mode)?;
                PreparedObservable::Number { mode: *mode }
            }
            Observable::Hermitian(op) => {
                space.ensure_same(op.space(), "observable")?;
                let defect = op.hermiticity_defect();
                if defect > 1e-12 {
                    return Err(Error::NotHermitian(defect));
                }
                let h = (op.matrix() + op.matrix().adjoint()) * Complex64::new(0.5, 0.0);
                let eig = SymmetricEigen::new(h);
                let basis = match dynamics {
                    Dynamics::Identity => eig.eigenvectors,
                    Dynamics::Unitary(u) => u.matrix().adjoint() * eig.eigenvectors,
                };
                PreparedObservable::Hermitian {
                    values: eig.eigenvalues.iter().copied().collect(),
                    basis,
                }
            }
        })
    }
}

/// An observable with its state-independent data (eigenbases, rotated targets) cached.
#[derive(Debug, Clone)]
pub enum PreparedObservable {
    Projector {
        phi: DVector<Complex64>,
    },
    Quadrature {
        measured: Vec<usize>,
        powers: Vec<u32>,
        scale: f64,
        /// Per measured mode: eigenvalues of the truncated `x̂` and `Vᵀ`.
        bases: Vec<(Vec<f64>, DMatrix<Complex64>)>,
    },
    Number {
        mode: usize,
    },
    Hermitian {
        values: Vec<f64>,
        basis: DMatrix<Complex64>,
    },
}

/// Outcome distribution for one (state, loss) pair.
#[derive(Debug, Clone)]
pub enum OutcomeSampler {
    Bernoulli(f64),
    Discrete {
        values: Vec<f64>,
        cdf: Vec<f64>,
    },
    /// Joint truncated-`x̂` outcome followed by the loss as a Gaussian channel:
    /// `x_out = √(1−γ) x + √(γ/2) z`.
    Homodyne {
        measured: Vec<usize>,
        powers: Vec<u32>,
        scale: f64,
        nodes: Vec<Vec<f64>>,
        cdf: Vec<f64>,
    },
    /// Input photon number, thinned binomially with the shot's transmissivity.
    Photons {
        mode: usize,
        cdf: Vec<f64>,
    },
}

impl OutcomeSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, gamma: &[f64]) -> f64 {
        match self {
            OutcomeSampler::Bernoulli(p) => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            OutcomeSampler::Discrete { values, cdf } => values[sample_cdf(cdf, rng)],
            OutcomeSampler::Homodyne {
                measured,
                powers,
                scale,
                nodes,
                cdf,
            } => {
                let mut k = sample_cdf(cdf, rng);
                // decode the joint index, last measured mode fastest
                let mut idx = vec![0usize; nodes.len()];
                for i in (0..nodes.len()).rev() {
                    idx[i] = k % nodes[i].len();
                    k /= nodes[i].len();
                }
                let mut value = *scale;
                for (i, &m) in measured.iter().enumerate() {
                    let g = gamma[m];
                    let mut x = (1.0 - g).sqrt() * nodes[i][idx[i]];
                    if g > 0.0 {
                        let z: f64 = rng.sample(StandardNormal);
                        x += (g / 2.0).sqrt() * z;
                    }
                    value *= x.powi(powers[i] as i32);
                }
                value
            }
            OutcomeSampler::Photons { mode, cdf } => {
                let n = sample_cdf(cdf, rng) as u64;
                let t = 1.0 - gamma[*mode];
                if n == 0 || t >= 1.0 {
                    n as f64
                } else {
                    Binomial::new(n, t).expect("valid binomial").sample(rng) as f64
                }
            }
        }
    }
}

/// `E[(a x + b z)^p]` for standard normal `z`.
fn gaussian_smeared_power(x: f64, a: f64, b: f64, p: u32) -> f64 {
    let mut acc = 0.0;
    let mut dfact = 1.0; // (l−1)!! for even l
    let mut binom = 1.0; // C(p, l)
    let mut l = 0u32;
    while l <= p {
        acc += binom * (a * x).powi((p - l) as i32) * b.powi(l as i32) * dfact;
        // advance l by 2
        if l + 2 > p {
            break;
        }
        binom *= ((p - l) * (p - l - 1)) as f64 / ((l + 1) * (l + 2)) as f64;
        dfact *= (l + 1) as f64;
        l += 2;
    }
    acc
}

impl PreparedObservable {
    /// Whether the outcome distribution must be rebuilt for every loss value, or the
    /// loss can be applied at sampling time.
    pub fn depends_on_gamma(&self) -> bool {
        matches!(
            self,
            PreparedObservable::Projector { .. } | PreparedObservable::Hermitian { .. }
        )
    }

    /// Homodyne outcome probabilities over the joint grid of measured modes.
    fn homodyne_distribution(&self, state: &FockState) -> Vec<f64> {
        let PreparedObservable::Quadrature {
            measured, bases, ..
        } = self
        else {
            unreachable!()
        };
        let space = state.space();
        let diag: Vec<f64> = match state.representation() {
            Representation::Pure(v) => {
                let mut w = v.clone();
                for (i, &m) in measured.iter().enumerate() {
                    w = modewise::apply_vec(space, m, &bases[i].1, &w);
                }
                w.iter().map(|x| x.norm_sqr()).collect()
            }
            Representation::Mixed(rho) => {
                let mut w = rho.clone();
                for (i, &m) in measured.iter().enumerate() {
                    w = modewise::conjugate(space, m, &bases[i].1, &w);
                }
                (0..w.nrows()).map(|i| w[(i, i)].re).collect()
            }
        };
        let dims: Vec<usize> = measured.iter().map(|&m| space.mode_dim(m)).collect();
        let total: usize = dims.iter().product();
        let mut out = vec![0.0; total];
        for (idx, p) in diag.iter().enumerate() {
            let mut k = 0;
            for (i, &m) in measured.iter().enumerate() {
                k = k * dims[i] + space.occupation_of(idx, m);
            }
            out[k] += p;
        }
        out
    }

    fn projector_probability(
        phi: &DVector<Complex64>,
        state: &FockState,
        gamma: &[f64],
    ) -> Result<f64> {
        Ok(match state.representation() {
            Representation::Pure(v) => branch_overlap(state.space(), gamma, phi, v),
            Representation::Mixed(_) => {
                let rho = lossy_density(state, gamma)?;
                phi.dotc(&(rho * phi)).re
            }
        })
    }

    fn eigen_probabilities(
        basis: &DMatrix<Complex64>,
        state: &FockState,
        gamma: &[f64],
    ) -> Result<Vec<f64>> {
        let n = basis.ncols();
        Ok(match state.representation() {
            Representation::Pure(v) => {
                let mut p = vec![0.0; n];
                let bh = basis.adjoint();
                for_each_branch(state.space(), gamma, v, 0.0, &mut |w| {
                    let c = &bh * w;
                    for (k, x) in c.iter().enumerate() {
                        p[k] += x.norm_sqr();
                    }
                });
                p
            }
            Representation::Mixed(_) => {
                let rho = lossy_density(state, gamma)?;
                let m = basis.adjoint() * rho * basis;
                (0..n).map(|k| m[(k, k)].re).collect()
            }
        })
    }

    /// Exact mean and second moment of single-shot outcomes on `U Λ_γ[ρ] U†`.
    pub fn moments(&self, state: &FockState, gamma: &[f64]) -> Result<(f64, f64)> {
        let norm = state.trace();
        if !(norm > 0.0) {
            return Err(Error::DegenerateNormalization(norm));
        }
        let space = state.space();
        if gamma.len() != space.num_modes() {
            return Err(Error::SpaceMismatch(format!(
                "{} loss values for {} modes",
                gamma.len(),
                space.num_modes()
            )));
        }
        Ok(match self {
            PreparedObservable::Projector { phi } => {
                let p = Self::projector_probability(phi, state, gamma)? / norm;
                (p, p)
            }
            PreparedObservable::Quadrature {
                measured,
                powers,
                scale,
                bases,
            } => {
                let probs = self.homodyne_distribution(state);
                let dims: Vec<usize> = bases.iter().map(|b| b.0.len()).collect();
                let mut m1 = 0.0;
                let mut m2 = 0.0;
                for (k, &p) in probs.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let mut rest = k;
                    let mut f1 = 1.0;
                    let mut f2 = 1.0;
                    for i in (0..dims.len()).rev() {
                        let x = bases[i].0[rest % dims[i]];
                        rest /= dims[i];
                        let g = gamma[measured[i]];
                        let (a, b) = ((1.0 - g).sqrt(), (g / 2.0).sqrt());
                        f1 *= gaussian_smeared_power(x, a, b, powers[i]);
                        f2 *= gaussian_smeared_power(x, a, b, 2 * powers[i]);
                    }
                    m1 += p * f1;
                    m2 += p * f2;
                }
                (scale * m1 / norm, scale * scale * m2 / norm)
            }
            PreparedObservable::Number { mode } => {
                let pops = state.populations(*mode)?;
                let t = 1.0 - gamma[*mode];
                let (mut n1, mut n2) = (0.0, 0.0);
                for (n, p) in pops.iter().enumerate() {
                    let n = n as f64;
                    n1 += p * n;
                    n2 += p * n * n;
                }
                let (n1, n2) = (n1 / norm, n2 / norm);
                (t * n1, t * t * n2 + t * (1.0 - t) * n1)
            }
            PreparedObservable::Hermitian { values, basis } => {
                let p = Self::eigen_probabilities(basis, state, gamma)?;
                let m1: f64 = p.iter().zip(values).map(|(p, v)| p * v).sum();
                let m2: f64 = p.iter().zip(values).map(|(p, v)| p * v * v).sum();
                (m1 / norm, m2 / norm)
            }
        })
    }

    /// Build the outcome sampler. For loss-independent kinds `gamma` is ignored and the
    /// loss is applied per shot by [`OutcomeSampler::sample`].
    pub fn sampler(&self, state: &FockState, gamma: &[f64]) -> Result<OutcomeSampler> {
        let norm = state.trace();
        if !(norm > 0.0) {
            return Err(Error::DegenerateNormalization(norm));
        }
        Ok(match self {
            PreparedObservable::Projector { phi } => {
                let p = Self::projector_probability(phi, state, gamma)? / norm;
                OutcomeSampler::Bernoulli(p.clamp(0.0, 1.0))
            }
            PreparedObservable::Quadrature {
                measured,
                powers,
                scale,
                bases,
            } => {
                let probs: Vec<f64> = self
                    .homodyne_distribution(state)
                    .into_iter()
                    .map(|p| p.max(0.0))
                    .collect();
                OutcomeSampler::Homodyne {
                    measured: measured.clone(),
                    powers: powers.clone(),
                    scale: *scale,
                    nodes: bases.iter().map(|b| b.0.clone()).collect(),
                    cdf: cumulative(&probs),
                }
            }
            PreparedObservable::Number { mode } => {
                let pops: Vec<f64> = state
                    .populations(*mode)?
                    .into_iter()
                    .map(|p| p.max(0.0))
                    .collect();
                OutcomeSampler::Photons {
                    mode: *mode,
                    cdf: cumulative(&pops),
                }
            }
            PreparedObservable::Hermitian { values, basis } => {
                let p: Vec<f64> = Self::eigen_probabilities(basis, state, gamma)?
                    .into_iter()
                    .map(|p| p.max(0.0))
                    .collect();
                OutcomeSampler::Discrete {
                    values: values.clone(),
                    cdf: cumulative(&p),
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{covariance_matrix, factories};

    #[test]
    fn smeared_powers() {
        // E[(a x + b z)^2] = a²x² + b²; E[(a x + b z)^4] = a⁴x⁴ + 6a²x²b² + 3b⁴
        let (x, a, b) = (0.7, 0.9, 0.4);
        assert!((gaussian_smeared_power(x, a, b, 1) - a * x).abs() < 1e-15);
        assert!((gaussian_smeared_power(x, a, b, 2) - (a * a * x * x + b * b)).abs() < 1e-15);
        let e4 = (a * x).powi(4) + 6.0 * (a * x).powi(2) * b * b + 3.0 * b.powi(4);
        assert!((gaussian_smeared_power(x, a, b, 4) - e4).abs() < 1e-14);
    }

    #[test]
    fn covariance_moments_match_fock_core() {
        let s = FockSpace::new(&[50, 50]).unwrap();
        let t = factories::two_mode_squeezed_vacuum(&s, 0.6).unwrap();
        let sigma = covariance_matrix(&t).unwrap();
        let prep = Observable::covariance_xx(2, 0, 1)
            .prepare(&s, &Dynamics::Identity)
            .unwrap();
        let (m, _) = prep.moments(&t, &[0.0, 0.0]).unwrap();
        assert!((m - sigma[(0, 2)]).abs() < 1e-9);
        let prep = Observable::covariance_xx(2, 0, 0)
            .prepare(&s, &Dynamics::Identity)
            .unwrap();
        let (m, _) = prep.moments(&t, &[0.0, 0.0]).unwrap();
        assert!((m - sigma[(0, 0)]).abs() < 1e-9);
    }

    #[test]
    fn lossy_quadrature_matches_heisenberg_picture() {
        // ⟨x²⟩ after loss = (1−γ)⟨x²⟩ + γ/2
        let s = FockSpace::single(40).unwrap();
        let sq = factories::squeezed_vacuum(&s, 0.5).unwrap();
        let prep = Observable::Quadrature {
            powers: vec![2],
            scale: 1.0,
        }
        .prepare(&s, &Dynamics::Identity)
        .unwrap();
        let (ideal, _) = prep.moments(&sq, &[0.0]).unwrap();
        let (noisy, _) = prep.moments(&sq, &[0.3]).unwrap();
        assert!((noisy - (0.7 * ideal + 0.15)).abs() < 1e-12);
        let lossy =
            crate::channels::apply_loss(&sq, &crate::channels::LossParams::new(&[0.3]).unwrap())
                .unwrap();
        let x = crate::fock::quadrature_x(&s, 0).unwrap();
        let direct = lossy.expectation(&x.compose(&x).unwrap()).unwrap().re;
        assert!((noisy - direct).abs() < 1e-9);
    }

    #[test]
    fn number_and_hermitian_moments_agree() {
        let s = FockSpace::single(20).unwrap();
        let coh = factories::coherent_state(&s, &[Complex64::new(1.1, 0.3)]).unwrap();
        let g = [0.25];
        let a = Observable::Number { mode: 0 }
            .prepare(&s, &Dynamics::Identity)
            .unwrap();
        let b = Observable::Hermitian(crate::fock::number_op(&s, 0).unwrap())
            .prepare(&s, &Dynamics::Identity)
            .unwrap();
        let (ma, sa) = a.moments(&coh, &g).unwrap();
        let (mb, sb) = b.moments(&coh, &g).unwrap();
        assert!((ma - mb).abs() < 1e-10 && (sa - sb).abs() < 1e-10);
    }
}
