//! Kernels that act on a single mode of a flat multi-mode vector or matrix without
//! building the full-space operator.
//!
//! A flat index decomposes as `outer * (d * stride) + n * stride + inner`, where `n` is
//! the occupation of the target mode.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::FockSpace;

#[derive(Clone, Copy)]
pub(crate) struct Split {
    pub d: usize,
    pub stride: usize,
    pub outer: usize,
}

impl Split {
    pub fn new(space: &FockSpace, mode: usize) -> Self {
        let d = space.mode_dim(mode);
        let stride = space.stride(mode);
        Split {
            d,
            stride,
            outer: space.dimension() / (d * stride),
        }
    }

    #[inline]
    pub fn occ(&self, index: usize) -> usize {
        (index / self.stride) % self.d
    }
}

/// `(1 ⊗ op ⊗ 1) v` with `op` a `d × d` single-mode matrix.
pub(crate) fn apply_vec(
    space: &FockSpace,
    mode: usize,
    op: &DMatrix<Complex64>,
    v: &DVector<Complex64>,
) -> DVector<Complex64> {
    let sp = Split::new(space, mode);
    let mut out = DVector::zeros(v.len());
    let block = sp.d * sp.stride;
    let mut buf = vec![Complex64::default(); sp.d];
    for o in 0..sp.outer {
        for i in 0..sp.stride {
            let base = o * block + i;
            for (m, b) in buf.iter_mut().enumerate() {
                *b = v[base + m * sp.stride];
            }
            for n in 0..sp.d {
                let mut acc = Complex64::default();
                for (m, b) in buf.iter().enumerate() {
                    let c = op[(n, m)];
                    if c.re != 0.0 || c.im != 0.0 {
                        acc += c * b;
                    }
                }
                out[base + n * sp.stride] = acc;
            }
        }
    }
    out
}

/// `(1 ⊗ op ⊗ 1) ρ` (left multiplication only).
pub(crate) fn apply_left(
    space: &FockSpace,
    mode: usize,
    op: &DMatrix<Complex64>,
    rho: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let dim = rho.nrows();
    let mut out = DMatrix::zeros(dim, dim);
    for c in 0..dim {
        let col: DVector<Complex64> = rho.column(c).into_owned();
        out.set_column(c, &apply_vec(space, mode, op, &col));
    }
    out
}

/// `(1 ⊗ op ⊗ 1) ρ (1 ⊗ op ⊗ 1)†`.
pub(crate) fn conjugate(
    space: &FockSpace,
    mode: usize,
    op: &DMatrix<Complex64>,
    rho: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let left = apply_left(space, mode, op, rho).adjoint();
    apply_left(space, mode, op, &left).adjoint()
}

/// Lowering-type action `out[.., n, ..] = coeff[n] · v[.., n + j, ..]`.
pub(crate) fn shift_vec(
    space: &FockSpace,
    mode: usize,
    j: usize,
    coeff: &[f64],
    v: &DVector<Complex64>,
) -> DVector<Complex64> {
    let sp = Split::new(space, mode);
    let mut out = DVector::zeros(v.len());
    if j >= sp.d {
        return out;
    }
    let block = sp.d * sp.stride;
    for o in 0..sp.outer {
        for n in 0..sp.d - j {
            let c = coeff[n];
            if c == 0.0 {
                continue;
            }
            let dst = o * block + n * sp.stride;
            let src = dst + j * sp.stride;
            for i in 0..sp.stride {
                out[dst + i] = v[src + i] * c;
            }
        }
    }
    out
}

/// Diagonal scaling `out[.., n, ..] = f[n] · v[.., n, ..]`, in place.
pub(crate) fn scale_vec(space: &FockSpace, mode: usize, f: &[f64], v: &mut DVector<Complex64>) {
    let sp = Split::new(space, mode);
    for (idx, x) in v.iter_mut().enumerate() {
        *x *= f[sp.occ(idx)];
    }
}

/// Diagonal conjugation `out[r, c] = f[n_r] f[n_c] ρ[r, c]`, in place.
pub(crate) fn scale_density(
    space: &FockSpace,
    mode: usize,
    f: &[f64],
    rho: &mut DMatrix<Complex64>,
) {
    let sp = Split::new(space, mode);
    let dim = rho.nrows();
    for c in 0..dim {
        let fc = f[sp.occ(c)];
        for r in 0..dim {
            rho[(r, c)] *= f[sp.occ(r)] * fc;
        }
    }
}

/// Generic shift-diagonal operator sum on one mode of a density matrix:
/// `out[r, c] = Σ_k w_k · coeffs[k][n_r] · coeffs[k][n_c] · ρ[r + k s, c + k s]`.
///
/// The loss channel, its inverse and photon subtraction all have this form.
pub(crate) fn shift_sum_density(
    space: &FockSpace,
    mode: usize,
    coeffs: &[Vec<f64>],
    weights: &[f64],
    rho: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let sp = Split::new(space, mode);
    let dim = rho.nrows();
    let mut out = DMatrix::zeros(dim, dim);
    let kmax = coeffs.len().min(sp.d);
    for c in 0..dim {
        let nc = sp.occ(c);
        for r in 0..dim {
            let nr = sp.occ(r);
            let top = sp.d - nr.max(nc);
            let mut acc = Complex64::default();
            for k in 0..kmax.min(top) {
                let w = weights[k] * coeffs[k][nr] * coeffs[k][nc];
                if w != 0.0 {
                    acc += rho[(r + k * sp.stride, c + k * sp.stride)] * w;
                }
            }
            out[(r, c)] = acc;
        }
    }
    out
}

/// Single-term version of [`shift_sum_density`]: `K ρ K†` for a shift-diagonal `K`.
pub(crate) fn shift_density(
    space: &FockSpace,
    mode: usize,
    j: usize,
    coeff: &[f64],
    rho: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let sp = Split::new(space, mode);
    let dim = rho.nrows();
    let mut out = DMatrix::zeros(dim, dim);
    if j >= sp.d {
        return out;
    }
    for c in 0..dim {
        let nc = sp.occ(c);
        if nc + j >= sp.d || coeff[nc] == 0.0 {
            continue;
        }
        for r in 0..dim {
            let nr = sp.occ(r);
            if nr + j >= sp.d {
                continue;
            }
            out[(r, c)] = rho[(r + j * sp.stride, c + j * sp.stride)] * (coeff[nr] * coeff[nc]);
        }
    }
    out
}

/// Photon-number distribution of one mode: `P(n) = Σ_{rest} |ψ[.., n, ..]|²`.
pub(crate) fn populations_pure(space: &FockSpace, mode: usize, v: &DVector<Complex64>) -> Vec<f64> {
    let sp = Split::new(space, mode);
    let mut p = vec![0.0; sp.d];
    for (idx, x) in v.iter().enumerate() {
        p[sp.occ(idx)] += x.norm_sqr();
    }
    p
}

pub(crate) fn populations_mixed(
    space: &FockSpace,
    mode: usize,
    rho: &DMatrix<Complex64>,
) -> Vec<f64> {
    let sp = Split::new(space, mode);
    let mut p = vec![0.0; sp.d];
    for idx in 0..rho.nrows() {
        p[sp.occ(idx)] += rho[(idx, idx)].re;
    }
    p
}

/// Binomial thinning of a distribution over flat indices along one mode:
/// `out[.., k, ..] = Σ_{n ≥ k} C(n, k) t^k (1 − t)^{n − k} · p[.., n, ..]`.
pub(crate) fn thin_distribution(space: &FockSpace, mode: usize, t: f64, p: &[f64]) -> Vec<f64> {
    let sp = Split::new(space, mode);
    let table = crate::fock::math::binomial_table(sp.d, t);
    let mut out = vec![0.0; p.len()];
    let block = sp.d * sp.stride;
    for o in 0..sp.outer {
        for i in 0..sp.stride {
            let base = o * block + i;
            for n in 0..sp.d {
                let pn = p[base + n * sp.stride];
                if pn == 0.0 {
                    continue;
                }
                for k in 0..=n {
                    out[base + k * sp.stride] += table[n][k] * pn;
                }
            }
        }
    }
    out
}
