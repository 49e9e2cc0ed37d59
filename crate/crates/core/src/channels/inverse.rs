use super::LossParams;
use crate::error::Result;
use crate::fock::math::{ln_binom, ln_pow};
use crate::fock::{modewise, FockState};

/// `b[k][n] = √(C(n+k, k) (γ/(1−γ))^k) g₀ⁿ`; the inverse map is
/// `Λ⁻¹[ρ]_{mn} = Σ_k (−1)^k b_k(m) b_k(n) ρ_{m+k, n+k}`.
pub(crate) fn inverse_coefficients(gamma: f64, d: usize) -> Vec<Vec<f64>> {
    let ratio = gamma / (1.0 - gamma);
    let ln_g0 = -0.5 * (1.0 - gamma).ln();
    (0..d)
        .map(|k| {
            (0..d)
                .map(|n| {
                    if n + k >= d {
                        0.0
                    } else {
                        (0.5 * (ln_binom(n + k, k) + ln_pow(ratio, k)) + n as f64 * ln_g0).exp()
                    }
                })
                .collect()
        })
        .collect()
}

/// Exact inverse loss map `Λ_γ⁻¹[ρ] = Σ_j (−γ)^j/j! â^j g₀^n̂ ρ g₀^n̂ â†^j` on every mode.
///
/// The loss channel never raises photon number, so on a truncated space the sum over
/// `j` is finite and this is the exact inverse of the truncated forward channel. The
/// output is a Hermitian, unit-trace pseudo-state that may have negative eigenvalues.
/// Fails with a leakage error when `g₀^n̂ ρ g₀^n̂` reaches the top of the truncation.
pub fn inverse_loss_exact(state: &FockState, params: &LossParams) -> Result<FockState> {
    let space = state.space();
    params.ensure_modes(space.num_modes())?;
    if params.is_identity() {
        return Ok(state.clone().into_mixed());
    }
    let mut rho = state.density();
    let mut amplified = rho.clone();
    for (mode, g0) in params.g0().iter().enumerate() {
        let diag: Vec<f64> = (0..space.mode_dim(mode))
            .map(|n| g0.powi(n as i32))
            .collect();
        modewise::scale_density(space, mode, &diag, &mut amplified);
    }
    FockState::from_density(space.clone(), amplified)?
        .normalized()?
        .check_leakage("amplification by g0 inside the inverse loss map")?;
    for (mode, &g) in params.gamma().iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let d = space.mode_dim(mode);
        let coeffs = inverse_coefficients(g, d);
        let signs: Vec<f64> = (0..d)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        rho = modewise::shift_sum_density(space, mode, &coeffs, &signs, &rho);
    }
    FockState::from_density(space.clone(), rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::apply_loss;
    use crate::fock::{factories, FockSpace};
    use num_complex::Complex64;

    #[test]
    fn single_photon_closed_form() {
        let s = FockSpace::single(10).unwrap();
        for &g in &[0.05, 0.1, 0.3, 0.7] {
            let one = FockState::basis(&s, &[1]).unwrap();
            let inv = inverse_loss_exact(&one, &LossParams::new(&[g]).unwrap())
                .unwrap()
                .density();
            assert!((inv[(1, 1)].re - 1.0 / (1.0 - g)).abs() < 1e-12);
            assert!((inv[(0, 0)].re + g / (1.0 - g)).abs() < 1e-12);
        }
    }

    #[test]
    fn coherent_state_is_amplified() {
        let s = FockSpace::single(40).unwrap();
        let g: f64 = 0.2;
        let alpha = Complex64::new(0.8, 0.5);
        let coh = factories::coherent_state(&s, &[alpha]).unwrap();
        let inv = inverse_loss_exact(&coh, &LossParams::new(&[g]).unwrap()).unwrap();
        let target = factories::coherent_state(&s, &[alpha / (1.0 - g).sqrt()]).unwrap();
        assert!(inv.trace_distance(&target.into_mixed()).unwrap() < 1e-9);
    }

    #[test]
    fn round_trip_and_fock_cancellation() {
        let s = FockSpace::single(12).unwrap();
        let p = LossParams::new(&[0.3]).unwrap();
        for m in 0..=6 {
            let fock = FockState::basis(&s, &[m]).unwrap();
            let back = apply_loss(&inverse_loss_exact(&fock, &p).unwrap(), &p).unwrap();
            assert!(back.trace_distance(&fock.clone().into_mixed()).unwrap() < 1e-9);
        }
    }

    #[test]
    fn leakage_is_detected() {
        let s = FockSpace::single(10).unwrap();
        let top = FockState::basis(&s, &[9]).unwrap();
        assert!(inverse_loss_exact(&top, &LossParams::new(&[0.1]).unwrap()).is_err());
    }
}
