//! Constructors for the states used throughout the protocol. Every factory
//! renormalises after truncation and then enforces the space's leakage tolerance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::math::ln_sqrt_factorial;
use super::{FockSpace, FockState};
use crate::error::{Error, Result};

/// Truncated coherent amplitudes `e^{−|α|²/2} αⁿ/√n!` for `n = 0..d`.
pub fn coherent_amplitudes(alpha: Complex64, d: usize) -> DVector<Complex64> {
    let r = alpha.norm();
    let theta = alpha.arg();
    DVector::from_fn(d, |n, _| {
        if r == 0.0 {
            return if n == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            };
        }
        let ln_mag = -0.5 * r * r + n as f64 * r.ln() - ln_sqrt_factorial(n);
        Complex64::from_polar(ln_mag.exp(), n as f64 * theta)
    })
}

fn require_modes(space: &FockSpace, n: usize, what: &str) -> Result<()> {
    if space.num_modes() == n {
        Ok(())
    } else {
        Err(Error::SpaceMismatch(format!(
            "{what} needs a {n}-mode space, got {} modes",
            space.num_modes()
        )))
    }
}

fn finish(space: &FockSpace, v: DVector<Complex64>, what: &str) -> Result<FockState> {
    let state = FockState::from_vector(space.clone(), v)?.normalized()?;
    state.check_leakage(what)?;
    Ok(state)
}

/// Product coherent state with one amplitude per mode.
pub fn coherent_state(space: &FockSpace, amplitudes: &[Complex64]) -> Result<FockState> {
    require_modes(space, amplitudes.len(), "coherent state")?;
    let mut v = DVector::from_element(1, Complex64::new(1.0, 0.0));
    for (m, &a) in amplitudes.iter().enumerate() {
        v = v.kronecker(&coherent_amplitudes(a, space.mode_dim(m)));
    }
    finish(space, v, "coherent state")
}

/// Single-mode squeezed vacuum `S(r)|0⟩`.
pub fn squeezed_vacuum(space: &FockSpace, r: f64) -> Result<FockState> {
    require_modes(space, 1, "squeezed vacuum")?;
    let v = squeezed_amplitudes(r, space.mode_dim(0))?;
    finish(space, v, "squeezed vacuum")
}

fn squeezed_amplitudes(r: f64, d: usize) -> Result<DVector<Complex64>> {
    if !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "squeezing must be finite, got {r}"
        )));
    }
    let t = r.tanh();
    let mut v = DVector::zeros(d);
    v[0] = Complex64::new(1.0, 0.0);
    if t != 0.0 {
        let lt = (t.abs() / 2.0).ln();
        for k in 1..=(d - 1) / 2 {
            // (tanh r / 2)^k √((2k)!) / k!
            let ln = k as f64 * lt + ln_sqrt_factorial(2 * k) - 2.0 * ln_sqrt_factorial(k);
            let sign = if t < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
            v[2 * k] = Complex64::new(sign * ln.exp(), 0.0);
        }
    }
    Ok(v)
}

fn cat_amplitudes(alpha: Complex64, phi: f64, d: usize) -> DVector<Complex64> {
    coherent_amplitudes(alpha, d) + coherent_amplitudes(-alpha, d) * Complex64::from_polar(1.0, phi)
}

/// `(|α⟩ + e^{iφ}|−α⟩)/A_φ(α)`.
pub fn cat_state(space: &FockSpace, alpha: Complex64, phi: f64) -> Result<FockState> {
    require_modes(space, 1, "cat state")?;
    let norm2 = 2.0 * (1.0 + phi.cos() * (-2.0 * alpha.norm_sqr()).exp());
    if norm2 < 1e-12 {
        return Err(Error::DegenerateNormalization(norm2));
    }
    finish(
        space,
        cat_amplitudes(alpha, phi, space.mode_dim(0)),
        "cat state",
    )
}

/// Two-mode squeezed vacuum `Σ tanhⁿ(r) |n, n⟩ / cosh r`.
pub fn two_mode_squeezed_vacuum(space: &FockSpace, r: f64) -> Result<FockState> {
    require_modes(space, 2, "two-mode squeezed vacuum")?;
    if !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "squeezing must be finite, got {r}"
        )));
    }
    let t = r.tanh();
    let mut v = DVector::zeros(space.dimension());
    for n in 0..space.mode_dim(0).min(space.mode_dim(1)) {
        v[space.index(&[n, n])] = Complex64::new(t.powi(n as i32), 0.0);
    }
    finish(space, v, "two-mode squeezed vacuum")
}

/// `(|α⟩|β⟩ ± |−α⟩|−β⟩)/B_±(α, β)`.
pub fn entangled_coherent_state(
    space: &FockSpace,
    alpha: Complex64,
    beta: Complex64,
    sign: f64,
) -> Result<FockState> {
    require_modes(space, 2, "entangled coherent state")?;
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::InvalidParameter(format!(
            "sign must be ±1, got {sign}"
        )));
    }
    let norm2 = 2.0 * (1.0 + sign * (-2.0 * (alpha.norm_sqr() + beta.norm_sqr())).exp());
    if norm2 < 1e-12 {
        return Err(Error::DegenerateNormalization(norm2));
    }
    let (d0, d1) = (space.mode_dim(0), space.mode_dim(1));
    let v = coherent_amplitudes(alpha, d0).kronecker(&coherent_amplitudes(beta, d1))
        + coherent_amplitudes(-alpha, d0).kronecker(&coherent_amplitudes(-beta, d1))
            * Complex64::new(sign, 0.0);
    finish(space, v, "entangled coherent state")
}

/// Thermal state with mean photon number `nbar` on a single mode.
pub fn thermal_state(space: &FockSpace, nbar: f64) -> Result<FockState> {
    require_modes(space, 1, "thermal state")?;
    if !(nbar >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean photon number must be >= 0, got {nbar}"
        )));
    }
    let d = space.mode_dim(0);
    let q = nbar / (1.0 + nbar);
    let diag = DVector::from_fn(d, |n, _| {
        Complex64::new(q.powi(n as i32) / (1.0 + nbar), 0.0)
    });
    let state =
        FockState::from_density(space.clone(), DMatrix::from_diagonal(&diag))?.normalized()?;
    state.check_leakage("thermal state")?;
    Ok(state)
}
