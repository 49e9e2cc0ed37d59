use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{check_gamma, LossParams};
use crate::error::Result;
use crate::fock::math::{ln_binom, ln_pow};
use crate::fock::{modewise, BosonicOperator, FockSpace, FockState, Representation};

/// `c[j][n] = √(C(n+j, j) γ^j (1−γ)^n)`, the amplitude with which `K_j(γ)` maps
/// `|n + j⟩` to `|n⟩`. Zero where `n + j` leaves the truncated space.
pub fn loss_coefficients(gamma: f64, d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|j| {
            (0..d)
                .map(|n| {
                    if n + j >= d {
                        0.0
                    } else {
                        (0.5 * (ln_binom(n + j, j) + ln_pow(gamma, j) + ln_pow(1.0 - gamma, n)))
                            .exp()
                    }
                })
                .collect()
        })
        .collect()
}

/// Single-mode `K_j(γ) = √(γ^j/j!) (1−γ)^{n̂/2} â^j` as a `d × d` matrix.
pub fn local_kraus(gamma: f64, d: usize, j: usize) -> DMatrix<Complex64> {
    let c = &loss_coefficients(gamma, d);
    let mut k = DMatrix::zeros(d, d);
    if j < d {
        for n in 0..d - j {
            k[(n, n + j)] = Complex64::new(c[j][n], 0.0);
        }
    }
    k
}

/// `K_j(γ)` on `mode` of the full space.
pub fn loss_kraus(space: &FockSpace, mode: usize, gamma: f64, j: usize) -> Result<BosonicOperator> {
    space.check_mode(mode)?;
    check_gamma(gamma)?;
    BosonicOperator::embed(space, mode, &local_kraus(gamma, space.mode_dim(mode), j))
}

#[derive(Debug, Clone)]
pub struct KrausSet {
    pub operators: Vec<BosonicOperator>,
    /// `max |Σ K†K − I|`.
    pub completeness_defect: f64,
}

/// All Kraus operators `K_0 … K_{N_max}` of the loss channel on one mode.
pub fn kraus_set(space: &FockSpace, mode: usize, gamma: f64) -> Result<KrausSet> {
    space.check_mode(mode)?;
    check_gamma(gamma)?;
    let operators: Vec<BosonicOperator> = (0..space.mode_dim(mode))
        .map(|j| loss_kraus(space, mode, gamma, j))
        .collect::<Result<_>>()?;
    let d = space.dimension();
    let mut sum = DMatrix::<Complex64>::zeros(d, d);
    for k in &operators {
        sum += k.matrix().adjoint() * k.matrix();
    }
    sum -= DMatrix::identity(d, d);
    let completeness_defect = sum.iter().map(|x| x.norm()).fold(0.0, f64::max);
    Ok(KrausSet {
        operators,
        completeness_defect,
    })
}

/// `Λ_γ[ρ] = Σ_j K_j ρ K_j†` on every mode. The output is always a density matrix.
pub fn apply_loss(state: &FockState, params: &LossParams) -> Result<FockState> {
    let space = state.space();
    params.ensure_modes(space.num_modes())?;
    let mut rho = state.density();
    for (mode, &g) in params.gamma().iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let d = space.mode_dim(mode);
        let coeffs = loss_coefficients(g, d);
        rho = modewise::shift_sum_density(space, mode, &coeffs, &vec![1.0; d], &rho);
    }
    FockState::from_density(space.clone(), rho)
}

/// Visit every Kraus branch `(⊗_i K_{k_i}) |v⟩` of the multi-mode loss channel applied
/// to a pure vector. Branches whose squared norm drops below `prune` are skipped.
pub(crate) fn for_each_branch(
    space: &FockSpace,
    gammas: &[f64],
    v: &DVector<Complex64>,
    prune: f64,
    visit: &mut dyn FnMut(&DVector<Complex64>),
) {
    let tables: Vec<Vec<Vec<f64>>> = gammas
        .iter()
        .enumerate()
        .map(|(m, &g)| loss_coefficients(g, space.mode_dim(m)))
        .collect();
    fn recurse(
        space: &FockSpace,
        tables: &[Vec<Vec<f64>>],
        gammas: &[f64],
        mode: usize,
        v: &DVector<Complex64>,
        prune: f64,
        visit: &mut dyn FnMut(&DVector<Complex64>),
    ) {
        if mode == tables.len() {
            visit(v);
            return;
        }
        if gammas[mode] == 0.0 {
            recurse(space, tables, gammas, mode + 1, v, prune, visit);
            return;
        }
        for (j, coeff) in tables[mode].iter().enumerate() {
            let w = modewise::shift_vec(space, mode, j, coeff, v);
            if w.norm_squared() <= prune {
                continue;
            }
            recurse(space, tables, gammas, mode + 1, &w, prune, visit);
        }
    }
    recurse(space, &tables, gammas, 0, v, prune, visit);
}

/// `Σ_k |⟨φ|(⊗_i K_{k_i})|v⟩|²` over every multi-mode Kraus branch. Only the nonzero
/// entries of `v` are visited, so sparse inputs such as a TMSV cost `Σ_n Π_i (n_i + 1)`
/// rather than one dense vector per branch.
pub(crate) fn branch_overlap(
    space: &FockSpace,
    gammas: &[f64],
    phi: &DVector<Complex64>,
    v: &DVector<Complex64>,
) -> f64 {
    let m = space.num_modes();
    let tables: Vec<Vec<Vec<f64>>> = gammas
        .iter()
        .enumerate()
        .map(|(k, &g)| loss_coefficients(g, space.mode_dim(k)))
        .collect();
    // branch amplitudes, indexed by the branch pattern read as a Fock index
    let mut acc = vec![Complex64::new(0.0, 0.0); space.dimension()];
    let mut j = vec![0usize; m];
    for (idx, &a) in v.iter().enumerate() {
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let occ = space.occupation(idx);
        let limits: Vec<usize> = (0..m)
            .map(|k| if gammas[k] == 0.0 { 0 } else { occ[k] })
            .collect();
        j.fill(0);
        'branches: loop {
            let mut coeff = 1.0;
            let mut out = idx;
            let mut branch = 0;
            for k in 0..m {
                coeff *= tables[k][j[k]][occ[k] - j[k]];
                out -= j[k] * space.stride(k);
                branch += j[k] * space.stride(k);
            }
            if coeff != 0.0 {
                acc[branch] += phi[out].conj() * a * coeff;
            }
            let mut k = m;
            loop {
                if k == 0 {
                    break 'branches;
                }
                k -= 1;
                j[k] += 1;
                if j[k] <= limits[k] {
                    break;
                }
                j[k] = 0;
            }
        }
    }
    acc.iter().map(|z| z.norm_sqr()).sum()
}

/// Loss applied state-wise: returns the mixed output for any representation.
pub(crate) fn lossy_density(state: &FockState, gammas: &[f64]) -> Result<DMatrix<Complex64>> {
    let params = LossParams::new(gammas)?;
    match state.representation() {
        Representation::Mixed(_) => Ok(apply_loss(state, &params)?.density()),
        Representation::Pure(v) => {
            let space = state.space();
            if space.dimension() > 400 {
                // branch sum keeps peak memory at one extra vector per mode
                let d = space.dimension();
                let mut rho = DMatrix::<Complex64>::zeros(d, d);
                for_each_branch(space, gammas, v, 0.0, &mut |w| {
                    rho.gerc(Complex64::new(1.0, 0.0), w, w, Complex64::new(1.0, 0.0));
                });
                Ok(rho)
            } else {
                Ok(apply_loss(state, &params)?.density())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::factories;

    #[test]
    fn branch_overlap_matches_dense_branches() {
        let s = FockSpace::new(&[6, 5]).unwrap();
        let v = DVector::from_fn(s.dimension(), |i, _| {
            Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())
        });
        let phi = DVector::from_fn(s.dimension(), |i, _| {
            Complex64::new((i as f64 * 0.23).cos(), 0.1 * i as f64)
        });
        for g in [[0.3, 0.1], [0.0, 0.4], [0.2, 0.0]] {
            let mut dense = 0.0;
            for_each_branch(&s, &g, &v, 0.0, &mut |w| dense += phi.dotc(w).norm_sqr());
            let sparse = branch_overlap(&s, &g, &phi, &v);
            assert!(
                (dense - sparse).abs() < 1e-12 * dense.max(1.0),
                "{dense} vs {sparse}"
            );
        }
    }

    #[test]
    fn kraus_examples() {
        let s = FockSpace::single(8).unwrap();
        let k0 = loss_kraus(&s, 0, 0.0, 0).unwrap();
        assert!(k0.distance(&BosonicOperator::identity(&s)) < 1e-15);
        let k1 = loss_kraus(&s, 0, 0.3, 1).unwrap();
        let out = FockState::basis(&s, &[1])
            .unwrap()
            .transformed(&k1)
            .unwrap();
        let amp = out.amplitudes().unwrap();
        assert!((amp[0].re - 0.3f64.sqrt()).abs() < 1e-15);
        assert!(amp.iter().skip(1).all(|x| x.norm() == 0.0));
    }

    #[test]
    fn kraus_orderings_agree() {
        // √(γ^j/j!) (1−γ)^{n/2} a^j  versus  √(γ^j/j!) a^j (1−γ)^{(n−j)/2}... i.e. coefficient form
        let d = 12;
        let g: f64 = 0.37;
        let a = crate::fock::operator::local::annihilation(d);
        for j in 0..5 {
            let mut direct = DMatrix::<Complex64>::identity(d, d);
            for _ in 0..j {
                direct = &direct * &a;
            }
            let diag = DMatrix::from_fn(d, d, |r, c| {
                if r == c {
                    Complex64::new((1.0 - g).powf(r as f64 / 2.0), 0.0)
                } else {
                    Complex64::default()
                }
            });
            let pref = (g.powi(j as i32) / crate::fock::math::factorial(j)).sqrt();
            let left = &diag * &direct * Complex64::new(pref, 0.0);
            let right =
                &direct * &diag * Complex64::new(pref * (1.0 - g).powf(-(j as f64) / 2.0), 0.0);
            let k = local_kraus(g, d, j);
            assert!((&left - &k).iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-13);
            assert!((&right - &k).iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-13);
        }
    }

    #[test]
    fn completeness() {
        let s = FockSpace::single(30).unwrap();
        for &g in &[0.1, 0.5, 0.9] {
            assert!(kraus_set(&s, 0, g).unwrap().completeness_defect < 1e-10);
        }
    }

    #[test]
    fn apply_loss_examples() {
        let s = FockSpace::single(30).unwrap();
        let alpha = Complex64::new(1.2, -0.4);
        let coh = factories::coherent_state(&s, &[alpha]).unwrap();
        let same = apply_loss(&coh, &LossParams::new(&[0.0]).unwrap()).unwrap();
        assert!(same.trace_distance(&coh.clone().into_mixed()).unwrap() < 1e-15);
        let g: f64 = 0.3;
        let out = apply_loss(&coh, &LossParams::new(&[g]).unwrap()).unwrap();
        let target = factories::coherent_state(&s, &[alpha * (1.0 - g).sqrt()]).unwrap();
        assert!(1.0 - out.fidelity_with_pure(&target).unwrap() < 1e-9);

        let one = FockState::basis(&s, &[1]).unwrap();
        let rho = apply_loss(&one, &LossParams::new(&[0.3]).unwrap())
            .unwrap()
            .density();
        assert!((rho[(1, 1)].re - 0.7).abs() < 1e-15);
        assert!((rho[(0, 0)].re - 0.3).abs() < 1e-15);
    }

    #[test]
    fn branch_sum_matches_dense() {
        let s = FockSpace::new(&[6, 6]).unwrap();
        let t = factories::two_mode_squeezed_vacuum(&s.clone().with_leakage_tolerance(1.0), 0.3)
            .unwrap();
        let gammas = [0.2, 0.35];
        let dense = apply_loss(&t, &LossParams::new(&gammas).unwrap())
            .unwrap()
            .density();
        let d = s.dimension();
        let mut rho = DMatrix::<Complex64>::zeros(d, d);
        for_each_branch(&s, &gammas, t.amplitudes().unwrap(), 0.0, &mut |w| {
            rho += w * w.adjoint();
        });
        assert!((dense - rho).iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-14);
    }
}
