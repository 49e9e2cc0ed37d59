//! Bosonic dephasing `ρ_mn → e^{−γ_D (m−n)²/2} ρ_mn` on every mode, its Kraus form
//! `D_j = √(γ_D^j/j!) n̂^j e^{−γ_D n̂²/2}`, and its exact inverse.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::math::{ln_pow, ln_sqrt_factorial};
use crate::fock::{modewise, BosonicOperator, FockSpace, FockState};

/// Largest `γ_D N_max²` for which the inverse is evaluated.
pub const MAX_INVERSE_EXPONENT: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingParams {
    pub gamma_d: f64,
}

impl DephasingParams {
    pub fn new(gamma_d: f64) -> Result<Self> {
        if gamma_d >= 0.0 && gamma_d.is_finite() {
            Ok(Self { gamma_d })
        } else {
            Err(Error::InvalidParameter(format!(
                "gamma_D must be >= 0, got {gamma_d}"
            )))
        }
    }
}

fn local_dephasing_kraus(gamma_d: f64, d: usize, j: usize) -> DMatrix<Complex64> {
    // √(γ^j/j!) n^j e^{−γn²/2} in log space; n^j alone overflows long before the product does
    let half_ln_pref = 0.5 * ln_pow(gamma_d, j) - ln_sqrt_factorial(j);
    DMatrix::from_fn(d, d, |r, c| {
        if r != c || (r == 0 && j > 0) {
            return Complex64::default();
        }
        let n = r as f64;
        let ln = half_ln_pref + ln_pow(n, j) - gamma_d * n * n / 2.0;
        Complex64::new(ln.exp(), 0.0)
    })
}

pub fn dephasing_kraus(
    space: &FockSpace,
    mode: usize,
    gamma_d: f64,
    j: usize,
) -> Result<BosonicOperator> {
    DephasingParams::new(gamma_d)?;
    space.check_mode(mode)?;
    BosonicOperator::embed(
        space,
        mode,
        &local_dephasing_kraus(gamma_d, space.mode_dim(mode), j),
    )
}

fn damp(state: &FockState, exponent_sign: f64, gamma_d: f64) -> Result<FockState> {
    let space = state.space();
    let mut rho = state.density();
    let d = space.dimension();
    for c in 0..d {
        for r in 0..d {
            let mut e = 0.0;
            for m in 0..space.num_modes() {
                let diff = space.occupation_of(r, m) as f64 - space.occupation_of(c, m) as f64;
                e += diff * diff;
            }
            if e != 0.0 {
                rho[(r, c)] *= (exponent_sign * gamma_d * e / 2.0).exp();
            }
        }
    }
    FockState::from_density(space.clone(), rho)
}

pub fn apply_dephasing(state: &FockState, gamma_d: f64) -> Result<FockState> {
    DephasingParams::new(gamma_d)?;
    damp(state, -1.0, gamma_d)
}

/// The same channel evaluated as `Σ_j D_j ρ D_j†` on every mode, truncated once the
/// Kraus terms fall below double-precision resolution.
pub fn apply_dephasing_kraus(state: &FockState, gamma_d: f64) -> Result<FockState> {
    DephasingParams::new(gamma_d)?;
    let space = state.space();
    let mut rho = state.density();
    for mode in 0..space.num_modes() {
        let d = space.mode_dim(mode);
        let mut acc = DMatrix::<Complex64>::zeros(rho.nrows(), rho.ncols());
        let nmax = (d - 1) as f64;
        // the j-th term scales like (γ_D N²)^j / j! · e^{−γ_D N²}
        let jmax = (gamma_d * nmax * nmax * 4.0 + 60.0) as usize;
        for j in 0..=jmax {
            let k = local_dephasing_kraus(gamma_d, d, j);
            acc += modewise::conjugate(space, mode, &k, &rho);
        }
        rho = acc;
    }
    FockState::from_density(space.clone(), rho)
}

/// Exact inverse `ρ_mn → e^{+γ_D (m−n)²/2} ρ_mn`.
pub fn inverse_dephasing_exact(state: &FockState, gamma_d: f64) -> Result<FockState> {
    DephasingParams::new(gamma_d)?;
    let space = state.space();
    let worst: f64 = space
        .cutoffs()
        .iter()
        .map(|&c| (c * c) as f64)
        .fold(0.0, f64::max);
    if gamma_d * worst > MAX_INVERSE_EXPONENT {
        return Err(Error::Overflow(format!(
            "inverse dephasing needs e^(gamma_D N_max^2 / 2) with gamma_D N_max^2 = {:.1} > {MAX_INVERSE_EXPONENT}",
            gamma_d * worst
        )));
    }
    damp(state, 1.0, gamma_d)
}
