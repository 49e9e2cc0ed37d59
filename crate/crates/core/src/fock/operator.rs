use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::state::max_abs;
use super::FockSpace;
use crate::error::{Error, Result};

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// A dense operator on the full truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct BosonicOperator {
    space: FockSpace,
    matrix: DMatrix<Complex64>,
    hermitian_hint: bool,
}

impl BosonicOperator {
    pub fn new(space: FockSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = space.dimension();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::SpaceMismatch(format!(
                "{}x{} operator for a space of dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            space,
            matrix,
            hermitian_hint: false,
        })
    }

    /// Like [`new`](Self::new) but validates Hermiticity to 1e-12.
    pub fn hermitian(space: FockSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        let mut op = Self::new(space, matrix)?;
        let defect = op.hermiticity_defect();
        if defect > 1e-12 {
            return Err(Error::NotHermitian(defect));
        }
        op.hermitian_hint = true;
        Ok(op)
    }

    pub fn identity(space: &FockSpace) -> Self {
        let d = space.dimension();
        Self {
            space: space.clone(),
            matrix: DMatrix::identity(d, d),
            hermitian_hint: true,
        }
    }

    /// Embed a single-mode matrix acting on `mode`.
    pub fn embed(space: &FockSpace, mode: usize, local: &DMatrix<Complex64>) -> Result<Self> {
        space.check_mode(mode)?;
        let dm = space.mode_dim(mode);
        if local.nrows() != dm || local.ncols() != dm {
            return Err(Error::SpaceMismatch(format!(
                "{}x{} single-mode matrix on a mode of dimension {dm}",
                local.nrows(),
                local.ncols()
            )));
        }
        let d = space.dimension();
        let stride = space.stride(mode);
        let mut m = DMatrix::zeros(d, d);
        for c in 0..d {
            let nc = space.occupation_of(c, mode);
            let base = c - nc * stride;
            for nr in 0..dm {
                let v = local[(nr, nc)];
                if v != C0 {
                    m[(base + nr * stride, c)] = v;
                }
            }
        }
        let hermitian_hint = max_abs(&(local - local.adjoint())) < 1e-12;
        Ok(Self {
            space: space.clone(),
            matrix: m,
            hermitian_hint,
        })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
            hermitian_hint: self.hermitian_hint,
        }
    }

    pub fn compose(&self, rhs: &BosonicOperator) -> Result<Self> {
        self.space.ensure_same(&rhs.space, "operator product")?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &rhs.matrix,
            hermitian_hint: false,
        })
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::identity(&self.space);
        for _ in 0..k {
            acc.matrix = &acc.matrix * &self.matrix;
        }
        acc.hermitian_hint = self.hermitian_hint;
        acc
    }

    /// Max elementwise distance to another operator.
    pub fn distance(&self, other: &BosonicOperator) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }
}

/// Single-mode building blocks on a `d`-level mode.
pub mod local {
    use super::*;

    pub fn annihilation(d: usize) -> DMatrix<Complex64> {
        let mut a = DMatrix::zeros(d, d);
        for n in 1..d {
            a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        a
    }

    pub fn number(d: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(d, d, |r, c| {
            if r == c {
                Complex64::new(r as f64, 0.0)
            } else {
                C0
            }
        })
    }

    /// `x̂ = (â + â†)/√2`.
    pub fn quadrature_x(d: usize) -> DMatrix<Complex64> {
        let a = annihilation(d);
        (&a + a.adjoint()) * Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
    }

    /// `p̂ = (â − â†)/(i√2)`.
    pub fn quadrature_p(d: usize) -> DMatrix<Complex64> {
        let a = annihilation(d);
        (&a - a.adjoint()) * Complex64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2)
    }

    /// Real symmetric truncated `x̂`.
    pub fn quadrature_x_real(d: usize) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(d, d);
        for n in 1..d {
            let v = (n as f64 / 2.0).sqrt();
            x[(n - 1, n)] = v;
            x[(n, n - 1)] = v;
        }
        x
    }

    /// Diagonal `g^n̂` entries, failing if `g^{d−1}` is not representable.
    pub fn gain_diagonal(d: usize, g: f64) -> Result<Vec<f64>> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gain must be positive, got {g}"
            )));
        }
        let top = ((d - 1) as f64) * g.ln();
        if !top.is_finite() || top.abs() > 700.0 {
            return Err(Error::Overflow(format!(
                "gain {g}^{} is not representable in double precision",
                d - 1
            )));
        }
        Ok((0..d).map(|n| (n as f64 * g.ln()).exp()).collect())
    }
}

pub fn annihilation(space: &FockSpace, mode: usize) -> Result<BosonicOperator> {
    space.check_mode(mode)?;
    BosonicOperator::embed(space, mode, &local::annihilation(space.mode_dim(mode)))
}

pub fn creation(space: &FockSpace, mode: usize) -> Result<BosonicOperator> {
    Ok(annihilation(space, mode)?.adjoint())
}

pub fn number_op(space: &FockSpace, mode: usize) -> Result<BosonicOperator> {
    space.check_mode(mode)?;
    BosonicOperator::embed(space, mode, &local::number(space.mode_dim(mode)))
}

pub fn quadrature_x(space: &FockSpace, mode: usize) -> Result<BosonicOperator> {
    space.check_mode(mode)?;
    BosonicOperator::embed(space, mode, &local::quadrature_x(space.mode_dim(mode)))
}

pub fn quadrature_p(space: &FockSpace, mode: usize) -> Result<BosonicOperator> {
    space.check_mode(mode)?;
    BosonicOperator::embed(space, mode, &local::quadrature_p(space.mode_dim(mode)))
}

/// Noiseless-amplification operator `g^n̂` on one mode.
pub fn gain_op(space: &FockSpace, mode: usize, g: f64) -> Result<BosonicOperator> {
    space.check_mode(mode)?;
    let diag = local::gain_diagonal(space.mode_dim(mode), g)?;
    let local = DMatrix::from_fn(diag.len(), diag.len(), |r, c| {
        if r == c {
            Complex64::new(diag[r], 0.0)
        } else {
            C0
        }
    });
    BosonicOperator::embed(space, mode, &local)
}

/// Two-mode beam splitter coupling `mode_a` (the signal) and `mode_b` (the tap-off).
///
/// With `θ = arccos √T` the unitary is `exp[θ(â† b̂ − b̂† â)]`, so a single photon in
/// `mode_a` ends up as `√T |1,0⟩ − √(1−T) |0,1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeBeamSplitter {
    pub transmissivity: f64,
    pub mode_a: usize,
    pub mode_b: usize,
}

pub fn beam_splitter_unitary(
    space: &FockSpace,
    bs: &TwoModeBeamSplitter,
) -> Result<BosonicOperator> {
    space.check_mode(bs.mode_a)?;
    space.check_mode(bs.mode_b)?;
    if bs.mode_a == bs.mode_b {
        return Err(Error::InvalidParameter(
            "beam splitter needs two distinct modes".into(),
        ));
    }
    let t = bs.transmissivity;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "transmissivity must lie in (0, 1], got {t}"
        )));
    }
    let theta = t.sqrt().acos();
    let d = space.dimension();
    let (sa, sb) = (space.stride(bs.mode_a), space.stride(bs.mode_b));
    let (ca, cb) = (space.cutoff(bs.mode_a), space.cutoff(bs.mode_b));
    let mut u = DMatrix::<Complex64>::zeros(d, d);

    // The generator preserves n_a + n_b and leaves other modes alone, so exponentiate
    // each (other modes, total) block separately.
    let mut done = vec![false; d];
    for start in 0..d {
        if done[start] {
            continue;
        }
        let na0 = space.occupation_of(start, bs.mode_a);
        let nb0 = space.occupation_of(start, bs.mode_b);
        let rest = start - na0 * sa - nb0 * sb;
        let total = na0 + nb0;
        let members: Vec<(usize, usize)> = (0..=total.min(ca))
            .filter(|&na| total - na <= cb)
            .map(|na| (na, rest + na * sa + (total - na) * sb))
            .collect();
        for &(_, idx) in &members {
            done[idx] = true;
        }
        let k = members.len();
        // H = -i G, G = θ(a†b − b†a): Hermitian, purely imaginary
        let mut h = DMatrix::<Complex64>::zeros(k, k);
        for (i, &(na, _)) in members.iter().enumerate() {
            // a† b : (na, nb) -> (na+1, nb-1)
            if i + 1 < k {
                let nb = total - na;
                let amp = theta * (((na + 1) * nb) as f64).sqrt();
                // G[i+1, i] = amp ; G[i, i+1] = -amp
                h[(i + 1, i)] = Complex64::new(0.0, -amp);
                h[(i, i + 1)] = Complex64::new(0.0, amp);
            }
        }
        let eig = SymmetricEigen::new(h);
        let phases = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                Complex64::from_polar(1.0, eig.eigenvalues[r])
            } else {
                C0
            }
        });
        let block = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
        for (i, &(_, ri)) in members.iter().enumerate() {
            for (j, &(_, cj)) in members.iter().enumerate() {
                u[(ri, cj)] = block[(i, j)];
            }
        }
    }
    BosonicOperator::new(space.clone(), u)
}
