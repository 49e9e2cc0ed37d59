use nalgebra::DMatrix;
use num_complex::Complex64;

use super::operator::local;
use super::FockState;
use crate::error::Result;

/// Covariance matrix `σ_kl = ⟨{r_k, r_l}⟩ − 2⟨r_k⟩⟨r_l⟩` with
/// `r = (x₁, p₁, x₂, p₂, …)` and `x = (a + a†)/√2`. The vacuum gives the identity.
pub fn covariance_matrix(state: &FockState) -> Result<DMatrix<f64>> {
    let space = state.space();
    let modes = space.num_modes();
    let norm = state.trace();
    let quad = |mode: usize, k: usize| {
        let d = space.mode_dim(mode);
        if k == 0 {
            local::quadrature_x(d)
        } else {
            local::quadrature_p(d)
        }
    };
    let mut means = vec![0.0; 2 * modes];
    for (k, mean) in means.iter_mut().enumerate() {
        let mut f: Vec<Option<DMatrix<Complex64>>> = vec![None; modes];
        f[k / 2] = Some(quad(k / 2, k % 2));
        *mean = state.product_expectation(&f)?.re / norm;
    }
    let mut sigma = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..2 * modes {
        for l in k..2 * modes {
            let (mk, ml) = (k / 2, l / 2);
            let mut f: Vec<Option<DMatrix<Complex64>>> = vec![None; modes];
            let anti = if mk == ml {
                let (a, b) = (quad(mk, k % 2), quad(ml, l % 2));
                f[mk] = Some(&a * &b + &b * &a);
                state.product_expectation(&f)?.re
            } else {
                f[mk] = Some(quad(mk, k % 2));
                f[ml] = Some(quad(ml, l % 2));
                2.0 * state.product_expectation(&f)?.re
            };
            let v = anti / norm - 2.0 * means[k] * means[l];
            sigma[(k, l)] = v;
            sigma[(l, k)] = v;
        }
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{factories, FockSpace};

    #[test]
    fn vacuum_is_identity() {
        let s = FockSpace::new(&[6, 6]).unwrap();
        let sigma = covariance_matrix(&FockState::vacuum(&s)).unwrap();
        assert!((sigma - DMatrix::identity(4, 4)).abs().max() < 1e-14);
    }

    #[test]
    fn tmsv_closed_form() {
        let s = FockSpace::new(&[70, 70]).unwrap();
        let r: f64 = 0.75;
        let t = factories::two_mode_squeezed_vacuum(&s, r).unwrap();
        let sigma = covariance_matrix(&t).unwrap();
        assert!((sigma[(0, 0)] - (2.0 * r).cosh()).abs() < 1e-8);
        assert!((sigma[(0, 2)] - (2.0 * r).sinh()).abs() < 1e-8);
        assert!((sigma[(1, 3)] + (2.0 * r).sinh()).abs() < 1e-8);
        assert!((sigma[(0, 0)] - 2.352409615243247).abs() < 1e-8);
        assert!(sigma[(0, 1)].abs() < 1e-12);
    }
}
