#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use photon_qec::fock::{FockSpace, FockState};
use photon_qec::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random pure state on a single mode, supported on `|0⟩..|support⟩`.
pub fn random_pure<R: Rng>(space: &FockSpace, support: usize, rng: &mut R) -> FockState {
    let mut v = DVector::zeros(space.dimension());
    for n in 0..=support {
        v[n] = gaussian(rng);
    }
    let norm = v.norm();
    FockState::from_vector(space.clone(), v / Complex64::new(norm, 0.0)).unwrap()
}

/// Random full-rank density matrix supported on `|0⟩..|support⟩` (single mode).
pub fn random_density<R: Rng>(space: &FockSpace, support: usize, rng: &mut R) -> FockState {
    let k = support + 1;
    let a = DMatrix::from_fn(k, k, |_, _| gaussian(rng));
    let small = &a * a.adjoint();
    let tr = small.trace().re;
    let mut rho = DMatrix::zeros(space.dimension(), space.dimension());
    rho.view_mut((0, 0), (k, k))
        .copy_from(&(small / Complex64::new(tr, 0.0)));
    FockState::from_density(space.clone(), rho).unwrap()
}
