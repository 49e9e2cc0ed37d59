use crate::error::{Error, Result};
use crate::fock::math::ln_binom;

/// Threshold above which the two-mode squeezed-vacuum weights are known to grow with `j`.
pub const TMSV_WARNING_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmsvOmega {
    pub value: f64,
    /// Set when `tanh r₀ / √((1−γ₁)(1−γ₂)) > 0.9`; the weights then tend to grow
    /// with the number of subtracted photons and truncated estimators misbehave.
    pub warning: bool,
}

/// `tanh r₀ / √((1−γ₁)(1−γ₂))`; the closed-form series converges iff this is below 1.
pub fn tmsv_convergence_ratio(r0: f64, gamma1: f64, gamma2: f64) -> f64 {
    r0.tanh().abs() / ((1.0 - gamma1) * (1.0 - gamma2)).sqrt()
}

/// Closed-form quasi-probability for a two-mode squeezed vacuum,
/// `Ω_j = (−γ₁)^{j₁}(−γ₂)^{j₂}/cosh²r₀ · Σ_n C(n, j₁) C(n, j₂) xⁿ` with
/// `x = tanh²r₀ / ((1−γ₁)(1−γ₂))`.
pub fn tmsv_omega(r0: f64, gamma1: f64, gamma2: f64, j1: usize, j2: usize) -> Result<TmsvOmega> {
    for g in [gamma1, gamma2] {
        super::check_gamma(g)?;
    }
    let ratio = tmsv_convergence_ratio(r0, gamma1, gamma2);
    if !(ratio < 1.0) {
        return Err(Error::Divergence(format!(
            "tanh(r0)/sqrt((1-g1)(1-g2)) = {ratio:.4} >= 1"
        )));
    }
    let warning = ratio > TMSV_WARNING_RATIO;
    let prefactor = (-gamma1).powi(j1 as i32) * (-gamma2).powi(j2 as i32) / r0.cosh().powi(2);
    if prefactor == 0.0 {
        return Ok(TmsvOmega {
            value: 0.0,
            warning,
        });
    }
    let x = ratio * ratio;
    if x == 0.0 {
        let value = if j1 == 0 && j2 == 0 { prefactor } else { 0.0 };
        return Ok(TmsvOmega { value, warning });
    }
    let lx = x.ln();
    let start = j1.max(j2);
    let mut sum = 0.0;
    let mut n = start;
    // terms rise to a single maximum then decay geometrically
    let mut peaked = false;
    let mut last = 0.0;
    loop {
        let term = (ln_binom(n, j1) + ln_binom(n, j2) + n as f64 * lx).exp();
        sum += term;
        if term < last {
            peaked = true;
        }
        if peaked && term < 1e-17 * sum {
            break;
        }
        last = term;
        n += 1;
        if n > 50_000_000 {
            return Err(Error::Divergence("Omega series failed to converge".into()));
        }
    }
    Ok(TmsvOmega {
        value: prefactor * sum,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{decompose_inverse_local, LossParams};
    use crate::fock::{factories, FockSpace};

    #[test]
    fn trivial_and_geometric() {
        let w = tmsv_omega(0.8, 0.0, 0.0, 0, 0).unwrap();
        assert!((w.value - 1.0).abs() < 1e-14);
        assert_eq!(tmsv_omega(0.8, 0.0, 0.0, 1, 0).unwrap().value, 0.0);
        let (r, g1, g2): (f64, f64, f64) = (0.75, 0.15, 0.2);
        let x = r.tanh().powi(2) / ((1.0 - g1) * (1.0 - g2));
        let closed = 1.0 / (1.0 - x) / r.cosh().powi(2);
        assert!((tmsv_omega(r, g1, g2, 0, 0).unwrap().value - closed).abs() < 1e-13);
    }

    #[test]
    fn warning_and_divergence() {
        let w = tmsv_omega(1.0, 0.2, 0.2, 0, 0).unwrap();
        assert!(w.warning);
        assert!((tmsv_convergence_ratio(1.0, 0.2, 0.2) - 0.952).abs() < 1e-3);
        assert!(!tmsv_omega(1.0, 0.15, 0.15, 0, 0).unwrap().warning);
        assert!(matches!(
            tmsv_omega(2.0, 0.5, 0.5, 0, 0),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn matches_numerical_decomposition() {
        let s = FockSpace::new(&[70, 70]).unwrap();
        let t = factories::two_mode_squeezed_vacuum(&s, 0.75).unwrap();
        let dec = decompose_inverse_local(&t, &LossParams::new(&[0.15, 0.1]).unwrap(), 3).unwrap();
        for term in dec.terms() {
            let (j1, j2) = (term.pattern[0], term.pattern[1]);
            let closed = tmsv_omega(0.75, 0.15, 0.1, j1, j2).unwrap().value;
            assert!(
                (closed - term.weight).abs() < 1e-8,
                "{j1} {j2}: {closed} vs {}",
                term.weight
            );
        }
    }
}
