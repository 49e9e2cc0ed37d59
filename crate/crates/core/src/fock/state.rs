use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{modewise, BosonicOperator, FockSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Pure(DVector<Complex64>),
    Mixed(DMatrix<Complex64>),
}

/// A pure state or density matrix on a [`FockSpace`].
///
/// States need not be normalised: pseudo-states produced by the inverse loss map are
/// Hermitian with unit trace but may have negative eigenvalues, and intermediate
/// results (e.g. unnormalised subtraction branches) carry their weight in the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    space: FockSpace,
    repr: Representation,
}

impl FockState {
    pub fn from_vector(space: FockSpace, v: DVector<Complex64>) -> Result<Self> {
        if v.len() != space.dimension() {
            return Err(Error::SpaceMismatch(format!(
                "vector length {} for a space of dimension {}",
                v.len(),
                space.dimension()
            )));
        }
        Ok(Self {
            space,
            repr: Representation::Pure(v),
        })
    }

    pub fn from_density(space: FockSpace, rho: DMatrix<Complex64>) -> Result<Self> {
        let d = space.dimension();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::SpaceMismatch(format!(
                "{}x{} density matrix for a space of dimension {d}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        Ok(Self {
            space,
            repr: Representation::Mixed(rho),
        })
    }

    /// Fock basis state `|n_0, n_1, …⟩`.
    pub fn basis(space: &FockSpace, occupation: &[usize]) -> Result<Self> {
        if occupation.len() != space.num_modes() {
            return Err(Error::SpaceMismatch(format!(
                "{} occupations for {} modes",
                occupation.len(),
                space.num_modes()
            )));
        }
        for (m, &n) in occupation.iter().enumerate() {
            if n > space.cutoff(m) {
                return Err(Error::InvalidParameter(format!(
                    "occupation {n} exceeds cutoff {} of mode {m}",
                    space.cutoff(m)
                )));
            }
        }
        let mut v = DVector::zeros(space.dimension());
        v[space.index(occupation)] = Complex64::new(1.0, 0.0);
        Self::from_vector(space.clone(), v)
    }

    pub fn vacuum(space: &FockSpace) -> Self {
        Self::basis(space, &vec![0; space.num_modes()]).expect("vacuum always fits")
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Representation::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&DVector<Complex64>> {
        match &self.repr {
            Representation::Pure(v) => Some(v),
            Representation::Mixed(_) => None,
        }
    }

    /// Density matrix (outer product for pure states).
    pub fn density(&self) -> DMatrix<Complex64> {
        match &self.repr {
            Representation::Pure(v) => v * v.adjoint(),
            Representation::Mixed(m) => m.clone(),
        }
    }

    pub fn into_mixed(self) -> Self {
        match self.repr {
            Representation::Pure(_) => Self {
                repr: Representation::Mixed(self.density()),
                space: self.space,
            },
            _ => self,
        }
    }

    /// Squared norm for pure states, real part of the trace for density matrices.
    pub fn trace(&self) -> f64 {
        match &self.repr {
            Representation::Pure(v) => v.norm_squared(),
            Representation::Mixed(m) => m.trace().re,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let repr = match &self.repr {
            Representation::Pure(v) => Representation::Pure(v * Complex64::new(factor.sqrt(), 0.0)),
            Representation::Mixed(m) => Representation::Mixed(m * Complex64::new(factor, 0.0)),
        };
        Self {
            space: self.space.clone(),
            repr,
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if !(t.is_finite() && t > 1e-300) {
            return Err(Error::DegenerateNormalization(t));
        }
        Ok(self.scaled(1.0 / t))
    }

    /// Photon-number distribution of one mode (unnormalised if the state is).
    pub fn populations(&self, mode: usize) -> Result<Vec<f64>> {
        self.space.check_mode(mode)?;
        Ok(match &self.repr {
            Representation::Pure(v) => modewise::populations_pure(&self.space, mode, v),
            Representation::Mixed(m) => modewise::populations_mixed(&self.space, mode, m),
        })
    }

    /// Full photon-number distribution over flat basis indices.
    pub fn diagonal(&self) -> Vec<f64> {
        match &self.repr {
            Representation::Pure(v) => v.iter().map(|x| x.norm_sqr()).collect(),
            Representation::Mixed(m) => (0..m.nrows()).map(|i| m[(i, i)].re).collect(),
        }
    }

    pub fn mean_photon_number(&self, mode: usize) -> Result<f64> {
        let p = self.populations(mode)?;
        Ok(p.iter().enumerate().map(|(n, x)| n as f64 * x).sum::<f64>() / self.trace())
    }

    /// Largest relative probability mass sitting in the top two Fock levels of any mode.
    pub fn leakage(&self) -> f64 {
        let t = self.trace();
        (0..self.space.num_modes())
            .map(|m| {
                let p = self.populations(m).expect("mode in range");
                let d = p.len();
                let lo = d.saturating_sub(2).max(1);
                p[lo..].iter().map(|x| x.abs()).sum::<f64>() / t.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Fail when [`leakage`](Self::leakage) exceeds the space's tolerance.
    pub fn check_leakage(&self, context: &str) -> Result<()> {
        let mass = self.leakage();
        let tol = self.space.leakage_tolerance();
        if mass.is_finite() && mass <= tol {
            Ok(())
        } else {
            Err(Error::leakage(mass, tol, context))
        }
    }

    pub fn expectation(&self, op: &BosonicOperator) -> Result<Complex64> {
        self.space.ensure_same(op.space(), "expectation")?;
        let m = op.matrix();
        Ok(match &self.repr {
            Representation::Pure(v) => v.dotc(&(m * v)),
            Representation::Mixed(rho) => (m * rho).trace(),
        })
    }

    /// `⟨ψ|ρ|ψ⟩` for a pure, normalised target.
    pub fn fidelity_with_pure(&self, target: &FockState) -> Result<f64> {
        self.space.ensure_same(&target.space, "fidelity")?;
        let psi = target
            .amplitudes()
            .ok_or_else(|| Error::InvalidParameter("fidelity target must be pure".into()))?;
        Ok(match &self.repr {
            Representation::Pure(v) => psi.dotc(v).norm_sqr(),
            Representation::Mixed(rho) => psi.dotc(&(rho * psi)).re,
        })
    }

    /// Overlap `⟨φ|ψ⟩` between two pure states.
    pub fn inner(&self, other: &FockState) -> Result<Complex64> {
        self.space.ensure_same(&other.space, "inner product")?;
        match (&self.repr, &other.repr) {
            (Representation::Pure(a), Representation::Pure(b)) => Ok(a.dotc(b)),
            _ => Err(Error::InvalidParameter(
                "inner product needs pure states".into(),
            )),
        }
    }

    /// Reduced state on `keep` (in the given order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<FockState> {
        let sub = self.space.subspace(keep)?;
        let n = self.space.num_modes();
        let traced: Vec<usize> = (0..n).filter(|m| !keep.contains(m)).collect();
        let dk = sub.dimension();
        let tspace = if traced.is_empty() {
            None
        } else {
            Some(self.space.subspace(&traced)?)
        };
        let dt = tspace.as_ref().map_or(1, |s| s.dimension());
        // full index from (kept index, traced index)
        let full_index = |ik: usize, it: usize| -> usize {
            let mut idx = 0;
            for (pos, &m) in keep.iter().enumerate() {
                idx += sub.occupation_of(ik, pos) * self.space.stride(m);
            }
            if let Some(ts) = &tspace {
                for (pos, &m) in traced.iter().enumerate() {
                    idx += ts.occupation_of(it, pos) * self.space.stride(m);
                }
            }
            idx
        };
        let map: Vec<Vec<usize>> = (0..dk)
            .map(|ik| (0..dt).map(|it| full_index(ik, it)).collect())
            .collect();
        let mut out = DMatrix::<Complex64>::zeros(dk, dk);
        match &self.repr {
            Representation::Pure(v) => {
                for a in 0..dk {
                    for b in 0..dk {
                        let mut acc = Complex64::default();
                        for it in 0..dt {
                            acc += v[map[a][it]] * v[map[b][it]].conj();
                        }
                        out[(a, b)] = acc;
                    }
                }
            }
            Representation::Mixed(rho) => {
                for a in 0..dk {
                    for b in 0..dk {
                        let mut acc = Complex64::default();
                        for it in 0..dt {
                            acc += rho[(map[a][it], map[b][it])];
                        }
                        out[(a, b)] = acc;
                    }
                }
            }
        }
        FockState::from_density(sub, out)
    }

    /// Tensor product; modes of `self` come first.
    pub fn tensor(&self, other: &FockState) -> Result<FockState> {
        let space = self.space.product(&other.space)?;
        match (&self.repr, &other.repr) {
            (Representation::Pure(a), Representation::Pure(b)) => {
                FockState::from_vector(space, a.kronecker(b))
            }
            _ => FockState::from_density(space, self.density().kronecker(&other.density())),
        }
    }

    /// Trace distance `½‖ρ − σ‖₁`, via the eigenvalues of the Hermitian difference.
    pub fn trace_distance(&self, other: &FockState) -> Result<f64> {
        self.space.ensure_same(&other.space, "trace distance")?;
        if let (Representation::Pure(a), Representation::Pure(b)) = (&self.repr, &other.repr) {
            // rank-two difference: eigenvalues from a 2x2 problem. `na·nb − |⟨a|b⟩|²` is
            // taken as `na·‖b_⊥‖²` with `b_⊥` the part of b orthogonal to a, which avoids
            // cancellation for nearly identical states.
            let (na, nb) = (a.norm_squared(), b.norm_squared());
            let gram = if na > 0.0 {
                let c = a.dotc(b) / Complex64::new(na, 0.0);
                na * (b - a * c).norm_squared()
            } else {
                0.0
            };
            let tr = na - nb;
            let det = -gram;
            let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
            return Ok(0.5 * (((tr + disc) / 2.0).abs() + ((tr - disc) / 2.0).abs()));
        }
        let diff = self.density() - other.density();
        let h = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = h.symmetric_eigenvalues();
        Ok(0.5 * eig.iter().map(|x| x.abs()).sum::<f64>())
    }

    /// Largest elementwise deviation from Hermiticity (0 for pure states).
    pub fn hermiticity_defect(&self) -> f64 {
        match &self.repr {
            Representation::Pure(_) => 0.0,
            Representation::Mixed(m) => max_abs(&(m - m.adjoint())),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match &self.repr {
            Representation::Pure(_) => 0.0_f64.min(self.trace()),
            Representation::Mixed(m) => {
                let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
                h.symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// `O ρ O†` (or `O|ψ⟩`) for a full-space operator.
    pub fn transformed(&self, op: &BosonicOperator) -> Result<FockState> {
        self.space.ensure_same(op.space(), "operator application")?;
        let m = op.matrix();
        let repr = match &self.repr {
            Representation::Pure(v) => Representation::Pure(m * v),
            Representation::Mixed(rho) => Representation::Mixed(m * rho * m.adjoint()),
        };
        Ok(FockState {
            space: self.space.clone(),
            repr,
        })
    }

    /// `A ρ A†` with a single-mode matrix `A` acting on `mode`.
    pub fn transformed_mode(&self, mode: usize, op: &DMatrix<Complex64>) -> Result<FockState> {
        self.space.check_mode(mode)?;
        let d = self.space.mode_dim(mode);
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::SpaceMismatch(format!(
                "{}x{} single-mode matrix on a mode of dimension {d}",
                op.nrows(),
                op.ncols()
            )));
        }
        let repr = match &self.repr {
            Representation::Pure(v) => {
                Representation::Pure(modewise::apply_vec(&self.space, mode, op, v))
            }
            Representation::Mixed(rho) => {
                Representation::Mixed(modewise::conjugate(&self.space, mode, op, rho))
            }
        };
        Ok(FockState {
            space: self.space.clone(),
            repr,
        })
    }

    /// `⟨⊗_m A_m⟩` for a product of single-mode matrices (`None` = identity).
    pub fn product_expectation(&self, factors: &[Option<DMatrix<Complex64>>]) -> Result<Complex64> {
        if factors.len() != self.space.num_modes() {
            return Err(Error::SpaceMismatch(format!(
                "{} factors for {} modes",
                factors.len(),
                self.space.num_modes()
            )));
        }
        match &self.repr {
            Representation::Pure(v) => {
                let mut w = v.clone();
                for (m, f) in factors.iter().enumerate() {
                    if let Some(a) = f {
                        w = modewise::apply_vec(&self.space, m, a, &w);
                    }
                }
                Ok(v.dotc(&w))
            }
            Representation::Mixed(rho) => {
                let mut w = rho.clone();
                for (m, f) in factors.iter().enumerate() {
                    if let Some(a) = f {
                        w = modewise::apply_left(&self.space, m, a, &w);
                    }
                }
                Ok(w.trace())
            }
        }
    }

    /// Linear combination `Σ c_i ρ_i` as a density matrix (pseudo-states allowed).
    pub fn linear_combination(terms: &[(f64, &FockState)]) -> Result<FockState> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty linear combination".into()))?;
        let space = first.1.space.clone();
        let d = space.dimension();
        let mut acc = DMatrix::<Complex64>::zeros(d, d);
        for (c, s) in terms {
            space.ensure_same(&s.space, "linear combination")?;
            match &s.repr {
                Representation::Pure(v) => {
                    acc.ger_rank1(Complex64::new(*c, 0.0), v, v);
                }
                Representation::Mixed(m) => acc += m * Complex64::new(*c, 0.0),
            }
        }
        FockState::from_density(space, acc)
    }
}

trait GerRank1 {
    fn ger_rank1(&mut self, alpha: Complex64, x: &DVector<Complex64>, y: &DVector<Complex64>);
}

impl GerRank1 for DMatrix<Complex64> {
    fn ger_rank1(&mut self, alpha: Complex64, x: &DVector<Complex64>, y: &DVector<Complex64>) {
        // self += alpha x y†
        for c in 0..self.ncols() {
            let yc = alpha * y[c].conj();
            if yc.re == 0.0 && yc.im == 0.0 {
                continue;
            }
            for r in 0..self.nrows() {
                self[(r, c)] += x[r] * yc;
            }
        }
    }
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::factories;

    #[test]
    fn fidelity_of_self_is_one() {
        let s = FockSpace::single(30).unwrap();
        let psi = factories::coherent_state(&s, &[Complex64::new(0.7, 0.2)]).unwrap();
        assert!((psi.fidelity_with_pure(&psi).unwrap() - 1.0).abs() < 1e-12);
        let rho = psi.clone().into_mixed();
        assert!((rho.fidelity_with_pure(&psi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn number_expectation_on_fock_state() {
        let s = FockSpace::single(5).unwrap();
        let two = FockState::basis(&s, &[2]).unwrap();
        let n = crate::fock::number_op(&s, 0).unwrap();
        assert!((two.expectation(&n).unwrap().re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn tmsv_reduced_state_is_thermal() {
        let s = FockSpace::new(&[25, 25]).unwrap();
        let r: f64 = 0.5;
        let t = factories::two_mode_squeezed_vacuum(&s, r).unwrap();
        let red = t.partial_trace(&[0]).unwrap();
        let rho = red.density();
        let t2 = r.tanh().powi(2);
        for n in 0..26 {
            let expect = t2.powi(n as i32) / r.cosh().powi(2);
            assert!((rho[(n, n)].re - expect).abs() < 1e-12);
        }
        assert!(super::max_abs(&(rho.clone() - DMatrix::from_diagonal(&rho.diagonal()))) < 1e-14);
    }

    #[test]
    fn tensor_then_trace_recovers_factors() {
        let a = FockSpace::single(12).unwrap();
        let b = FockSpace::single(24).unwrap();
        let x = factories::coherent_state(&a, &[Complex64::new(0.5, -0.3)]).unwrap();
        let y = factories::squeezed_vacuum(&b, 0.3).unwrap().into_mixed();
        let xy = x.tensor(&y).unwrap();
        let rx = xy.partial_trace(&[0]).unwrap();
        let ry = xy.partial_trace(&[1]).unwrap();
        assert!(rx.trace_distance(&x.clone().into_mixed()).unwrap() < 1e-12);
        assert!(ry.trace_distance(&y).unwrap() < 1e-12);
    }

    #[test]
    fn pure_trace_distance_matches_dense() {
        let s = FockSpace::single(15).unwrap();
        let x = factories::coherent_state(&s, &[Complex64::new(0.5, 0.0)]).unwrap();
        let y = factories::coherent_state(&s, &[Complex64::new(0.0, 0.6)]).unwrap();
        let fast = x.trace_distance(&y).unwrap();
        let dense = x
            .clone()
            .into_mixed()
            .trace_distance(&y.clone().into_mixed())
            .unwrap();
        assert!((fast - dense).abs() < 1e-12);
        let f = x.fidelity_with_pure(&y).unwrap();
        assert!((fast - (1.0 - f).sqrt()).abs() < 1e-12);
    }
}
