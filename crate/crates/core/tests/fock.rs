use approx::assert_abs_diff_eq;
use photon_qec::fock::{
    annihilation, beam_splitter_unitary, cat_state, coherent_state, covariance_matrix,
    entangled_coherent_state, gain_op, number_op, squeezed_vacuum, two_mode_squeezed_vacuum,
    BosonicOperator, FockSpace, FockState, TwoModeBeamSplitter,
};
use photon_qec::{Complex64, Error};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn space_dimensions() {
    assert_eq!(FockSpace::make(1, &[30]).unwrap().dimension(), 31);
    assert_eq!(FockSpace::make(2, &[25, 25]).unwrap().dimension(), 676);
    assert_eq!(FockSpace::make(3, &[1, 1, 1]).unwrap().dimension(), 8);
    assert!(matches!(
        FockSpace::make(2, &[0, 3]),
        Err(Error::InvalidSpace(_))
    ));
    assert!(matches!(
        FockSpace::new(&[300, 300]),
        Err(Error::DimensionOverflow { .. })
    ));
}

#[test]
fn coherent_examples() {
    let s = FockSpace::single(30).unwrap();
    let vac = coherent_state(&s, &[c(0.0)]).unwrap();
    assert_abs_diff_eq!(
        vac.trace_distance(&FockState::vacuum(&s)).unwrap(),
        0.0,
        epsilon = 1e-15
    );
    let one = coherent_state(&s, &[c(1.0)]).unwrap();
    assert_abs_diff_eq!(one.mean_photon_number(0).unwrap(), 1.0, epsilon = 1e-10);
    let small = FockSpace::single(5).unwrap();
    assert!(matches!(
        coherent_state(&small, &[c(2.0)]),
        Err(Error::Leakage { .. })
    ));
}

#[test]
fn squeezed_examples() {
    let s = FockSpace::single(90).unwrap();
    let vac = squeezed_vacuum(&s, 0.0).unwrap();
    assert_abs_diff_eq!(
        vac.trace_distance(&FockState::vacuum(&s)).unwrap(),
        0.0,
        epsilon = 1e-15
    );
    let sq = squeezed_vacuum(&s, 1.0).unwrap();
    let pops = sq.populations(0).unwrap();
    assert!(pops.iter().skip(1).step_by(2).all(|&p| p == 0.0));
    assert_abs_diff_eq!(
        sq.mean_photon_number(0).unwrap(),
        1f64.sinh().powi(2),
        epsilon = 1e-6
    );

    // at cutoff 60 the top two levels hold ~1e-9 of the mass, above the default tolerance
    let s60 = FockSpace::single(60).unwrap();
    assert!(matches!(
        squeezed_vacuum(&s60, 1.0),
        Err(Error::Leakage { .. })
    ));
    let loose = s60.with_leakage_tolerance(1e-8);
    let sq = squeezed_vacuum(&loose, 1.0).unwrap();
    assert_abs_diff_eq!(
        sq.mean_photon_number(0).unwrap(),
        1f64.sinh().powi(2),
        epsilon = 1e-6
    );
}

#[test]
fn cat_examples() {
    let s = FockSpace::single(40).unwrap();
    let even = cat_state(&s, c(1.0), 0.0).unwrap();
    let odd = cat_state(&s, c(1.0), std::f64::consts::PI).unwrap();
    let pe = even.populations(0).unwrap();
    let po = odd.populations(0).unwrap();
    assert!(pe.iter().skip(1).step_by(2).all(|&p| p < 1e-30));
    assert!(po.iter().step_by(2).all(|&p| p < 1e-30));
    let a = annihilation(&s, 0).unwrap();
    let a2 = a.compose(&a).unwrap();
    let v = even.amplitudes().unwrap();
    assert!((a2.matrix() * v - v).norm() < 1e-9);
    assert!(matches!(
        cat_state(&s, c(0.0), std::f64::consts::PI),
        Err(Error::DegenerateNormalization(_))
    ));
}

#[test]
fn tmsv_examples() {
    let s = FockSpace::new(&[60, 60]).unwrap();
    let t = two_mode_squeezed_vacuum(&s, 0.75).unwrap();
    assert_abs_diff_eq!(
        t.mean_photon_number(0).unwrap(),
        0.75f64.sinh().powi(2),
        epsilon = 1e-8
    );
    // cutoff 25 is only usable with a looser leakage tolerance
    let s25 = FockSpace::new(&[25, 25]).unwrap();
    assert!(matches!(
        two_mode_squeezed_vacuum(&s25, 0.75),
        Err(Error::Leakage { .. })
    ));
    let t25 = two_mode_squeezed_vacuum(&s25.with_leakage_tolerance(1e-8), 0.75).unwrap();
    let s25 = t25.space().clone();
    for (i, a) in t25.amplitudes().unwrap().iter().enumerate() {
        let o = s25.occupation(i);
        if o[0] != o[1] {
            assert_eq!(a.norm(), 0.0);
        }
    }
    let r = two_mode_squeezed_vacuum(&s, 0.0).unwrap();
    assert!(r.trace_distance(&FockState::vacuum(&s)).unwrap() < 1e-15);
}

#[test]
fn ecs_examples() {
    let s = FockSpace::new(&[25, 25]).unwrap();
    let vac = entangled_coherent_state(&s, c(0.0), c(0.0), 1.0).unwrap();
    assert!(vac.trace_distance(&FockState::vacuum(&s)).unwrap() < 1e-15);
    let minus = entangled_coherent_state(&s, c(1.0), c(1.0), -1.0).unwrap();
    assert!(minus.amplitudes().unwrap()[0].norm() < 1e-15);
    assert_abs_diff_eq!(minus.trace(), 1.0, epsilon = 1e-10);
}

#[test]
fn operator_examples() {
    let s = FockSpace::single(10).unwrap();
    let a = annihilation(&s, 0).unwrap();
    let one = FockState::basis(&s, &[1]).unwrap();
    let out = a.matrix() * one.amplitudes().unwrap();
    assert_abs_diff_eq!(
        (out - FockState::vacuum(&s).amplitudes().unwrap()).norm(),
        0.0,
        epsilon = 1e-15
    );
    assert!(
        gain_op(&s, 0, 1.0)
            .unwrap()
            .distance(&BosonicOperator::identity(&s))
            < 1e-15
    );
    let two = FockState::basis(&s, &[2]).unwrap();
    assert_abs_diff_eq!(
        two.expectation(&number_op(&s, 0).unwrap()).unwrap().re,
        2.0,
        epsilon = 1e-15
    );
    // g^n̂ ∘ g^{-n̂} = 1
    for g in [0.5, 1.1, 2.0] {
        let prod = gain_op(&s, 0, g)
            .unwrap()
            .compose(&gain_op(&s, 0, 1.0 / g).unwrap())
            .unwrap();
        assert!(prod.distance(&BosonicOperator::identity(&s)) < 1e-10);
    }
    assert!(matches!(
        gain_op(&FockSpace::single(2000).unwrap(), 0, 2.0),
        Err(Error::Overflow(_))
    ));
}

#[test]
fn beam_splitter_examples() {
    let s = FockSpace::new(&[8, 8]).unwrap();
    let id = beam_splitter_unitary(
        &s,
        &TwoModeBeamSplitter {
            transmissivity: 1.0,
            mode_a: 0,
            mode_b: 1,
        },
    )
    .unwrap();
    assert!(id.distance(&BosonicOperator::identity(&s)) < 1e-12);
    let mu = 0.2;
    let u = beam_splitter_unitary(
        &s,
        &TwoModeBeamSplitter {
            transmissivity: 1.0 - mu,
            mode_a: 0,
            mode_b: 1,
        },
    )
    .unwrap();
    let out = u.matrix() * FockState::basis(&s, &[1, 0]).unwrap().amplitudes().unwrap();
    assert_abs_diff_eq!(out[s.index(&[1, 0])].re, (1.0 - mu).sqrt(), epsilon = 1e-12);
    assert_abs_diff_eq!(out[s.index(&[0, 1])].re, -mu.sqrt(), epsilon = 1e-12);
}

#[test]
fn fidelity_and_reduced_states() {
    let s = FockSpace::new(&[40, 40]).unwrap();
    let t = two_mode_squeezed_vacuum(&s, 0.6).unwrap();
    assert_abs_diff_eq!(t.fidelity_with_pure(&t).unwrap(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(
        t.clone().into_mixed().fidelity_with_pure(&t).unwrap(),
        1.0,
        epsilon = 1e-12
    );
    let reduced = t.partial_trace(&[0]).unwrap();
    let th = 0.6f64.tanh().powi(2);
    let pops = reduced.populations(0).unwrap();
    for (n, p) in pops.iter().enumerate().take(20) {
        assert_abs_diff_eq!(*p, (1.0 - th) * th.powi(n as i32), epsilon = 1e-12);
    }
}

#[test]
fn covariance_examples() {
    let s = FockSpace::new(&[70, 70]).unwrap();
    let sigma = covariance_matrix(&FockState::vacuum(&s)).unwrap();
    assert!(
        (sigma - nalgebra::DMatrix::<f64>::identity(4, 4))
            .abs()
            .max()
            < 1e-12
    );
    let t = two_mode_squeezed_vacuum(&s, 0.75).unwrap();
    let sigma = covariance_matrix(&t).unwrap();
    assert_abs_diff_eq!(sigma[(0, 0)], 1.5f64.cosh(), epsilon = 1e-8);
    assert_abs_diff_eq!(sigma[(0, 2)], 1.5f64.sinh(), epsilon = 1e-8);
    assert_abs_diff_eq!(sigma[(0, 0)], 2.3524, epsilon = 1e-4);
}
