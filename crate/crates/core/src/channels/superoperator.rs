use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use super::{loss_kraus, LossParams};
use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockState};

/// Dense superoperator of the loss channel acting on column-stacked density matrices.
///
/// This is an independent oracle for the operator-sum inverse: the truncated loss
/// channel is triangular in photon number with a non-zero diagonal, so the
/// superoperator is invertible and its pseudo-inverse is the ordinary inverse, solved
/// here by LU factorisation. The Kraus operators are real, so the matrix is too.
/// Cost is `O(D⁶)` in the space dimension `D`; intended for small checks.
pub struct LossSuperoperator {
    space: FockSpace,
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl LossSuperoperator {
    pub fn new(space: &FockSpace, params: &LossParams) -> Result<Self> {
        params.ensure_modes(space.num_modes())?;
        let d = space.dimension();
        let n = d * d;
        let mut matrix = DMatrix::<f64>::identity(n, n);
        for (mode, &g) in params.gamma().iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            // vec(K ρ Kᵀ) = (K ⊗ K) vec(ρ) for real K
            let mut local = DMatrix::<f64>::zeros(n, n);
            for j in 0..space.mode_dim(mode) {
                let k = loss_kraus(space, mode, g, j)?.matrix().map(|z| z.re);
                local += k.kronecker(&k);
            }
            matrix = local * matrix;
        }
        let lu = matrix.clone().lu();
        Ok(Self {
            space: space.clone(),
            matrix,
            lu,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        let (re, im) = self.vectorize(state)?;
        self.unvectorize(&self.matrix * re, &self.matrix * im)
    }

    /// Solve `S x = vec(ρ)`.
    pub fn inverse_apply(&self, state: &FockState) -> Result<FockState> {
        let (re, im) = self.vectorize(state)?;
        let singular = || Error::Unsupported("loss superoperator is singular".into());
        let xr = self.lu.solve(&re).ok_or_else(singular)?;
        let xi = self.lu.solve(&im).ok_or_else(singular)?;
        self.unvectorize(xr, xi)
    }

    fn vectorize(&self, state: &FockState) -> Result<(DVector<f64>, DVector<f64>)> {
        self.space.ensure_same(state.space(), "superoperator")?;
        let rho = state.density();
        Ok((
            DVector::from_iterator(rho.len(), rho.iter().map(|z| z.re)),
            DVector::from_iterator(rho.len(), rho.iter().map(|z| z.im)),
        ))
    }

    fn unvectorize(&self, re: DVector<f64>, im: DVector<f64>) -> Result<FockState> {
        let d = self.space.dimension();
        let v: Vec<Complex64> = re
            .iter()
            .zip(im.iter())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        FockState::from_density(self.space.clone(), DMatrix::from_vec(d, d, v))
    }
}
