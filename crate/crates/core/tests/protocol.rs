use approx::assert_abs_diff_eq;
use photon_qec::channels::{decompose_inverse, LossParams};
use photon_qec::fock::{
    cat_state, squeezed_vacuum, two_mode_squeezed_vacuum, FockSpace, FockState,
};
use photon_qec::protocol::{
    amplified_squeezing, amplified_tmsv_squeezing, analytic_expectations, build_heralding,
    herald_gain, mitigated_estimator, monte_carlo_run, monte_carlo_state_plan,
    sample_mean_variance, simulate_shots, AnalyticOptions, Dynamics, GammaDistribution, JSet,
    Observable, ShotOptions, ShotRecord, StateFamily,
};
use photon_qec::{Complex64, Error};

#[test]
fn heralding_setup_examples() {
    let s = FockSpace::single(60).unwrap();
    let sq = squeezed_vacuum(&s, 0.5).unwrap();
    let setup = build_heralding(&sq, &LossParams::new(&[0.0]).unwrap(), &[0.0]).unwrap();
    assert_eq!(setup.g_mu(), &[1.0]);
    assert!(setup.amplified_state().trace_distance(&sq).unwrap() < 1e-12);
    assert_abs_diff_eq!(setup.probability(&[0]), 1.0, epsilon = 1e-12);

    // amplified TMSV squeezing with the herald gain and with g0
    let g_mu = herald_gain(0.15, 0.105);
    assert_abs_diff_eq!(g_mu, 1.0 / (0.85f64 * 0.895).sqrt(), epsilon = 1e-15);
    assert_abs_diff_eq!(
        amplified_tmsv_squeezing(0.75, g_mu, g_mu).unwrap(),
        1.2041,
        epsilon = 1e-4
    );
    let g0 = 1.0 / 0.85f64.sqrt();
    assert_abs_diff_eq!(
        amplified_tmsv_squeezing(0.75, g0, g0).unwrap(),
        0.9666,
        epsilon = 1e-4
    );
    assert!(matches!(
        amplified_squeezing(1.33, 1.0 / 0.85f64.sqrt()),
        Err(Error::UnphysicalAmplification { .. })
    ));

    // cat of magnitude α₀ is amplified to g_μ α₀
    let cs = FockSpace::single(40).unwrap();
    let cat = cat_state(&cs, Complex64::new(1.0, 0.0), 0.0).unwrap();
    let setup = build_heralding(&cat, &LossParams::new(&[0.2]).unwrap(), &[0.1]).unwrap();
    let g = setup.g_mu()[0];
    let want = cat_state(&cs, Complex64::new(g, 0.0), 0.0).unwrap();
    assert!(setup.amplified_state().trace_distance(&want).unwrap() < 1e-12);
}

#[test]
fn herald_probability_examples() {
    let s = FockSpace::single(8).unwrap();
    let one = FockState::basis(&s, &[1]).unwrap();
    let setup = build_heralding(&one, &LossParams::new(&[0.0]).unwrap(), &[0.3]).unwrap();
    assert_abs_diff_eq!(setup.probability(&[1]), 0.3, epsilon = 1e-15);
    assert_abs_diff_eq!(setup.probability(&[0]), 0.7, epsilon = 1e-15);

    let s = FockSpace::new(&[70, 70]).unwrap();
    let t = two_mode_squeezed_vacuum(&s, 0.75).unwrap();
    let setup =
        build_heralding(&t, &LossParams::uniform(2, 0.15).unwrap(), &[0.105, 0.105]).unwrap();
    assert_abs_diff_eq!(
        setup.herald_probabilities().iter().sum::<f64>(),
        1.0,
        epsilon = 1e-9
    );
    assert!(setup.herald_probabilities().iter().all(|&p| p >= 0.0));
}

#[test]
fn heralded_states_equal_subtraction_channels() {
    for r0 in [0.5, 1.0] {
        let s = FockSpace::single(if r0 > 0.75 { 400 } else { 120 }).unwrap();
        let sq = squeezed_vacuum(&s, r0).unwrap();
        let loss = LossParams::new(&[0.1]).unwrap();
        let setup = build_heralding(&sq, &loss, &[0.05]).unwrap();
        let patterns: Vec<Vec<usize>> = (0..=4).map(|j| vec![j]).collect();
        let dec = decompose_inverse(&sq, &loss, &patterns).unwrap();
        for p in &patterns {
            let h = setup.heralded_state(p).unwrap().unwrap();
            let e = dec.term(p).unwrap().channel.as_ref().unwrap();
            assert!(h.trace_distance(e).unwrap() < 1e-10);
        }
    }
}

#[test]
fn trivial_shot_runs() {
    let s = FockSpace::single(30).unwrap();
    let sq = squeezed_vacuum(&s, 0.4).unwrap();
    let setup = build_heralding(&sq, &LossParams::new(&[0.0]).unwrap(), &[0.0]).unwrap();
    let g = GammaDistribution::fixed(&[0.0]);
    let obs = Observable::fidelity(&sq);
    let recs = simulate_shots(
        &setup,
        &Dynamics::Identity,
        &obs,
        &g,
        None,
        &ShotOptions::new(2000, 5),
    )
    .unwrap();
    assert!(recs.iter().all(|r| r.observable_value == 1.0));
    assert!(simulate_shots(
        &setup,
        &Dynamics::Identity,
        &obs,
        &g,
        None,
        &ShotOptions::new(0, 5)
    )
    .unwrap()
    .is_empty());
}

#[test]
fn herald_frequencies_match_probabilities() {
    let s = FockSpace::new(&[72, 72]).unwrap();
    let t = two_mode_squeezed_vacuum(&s, 0.75).unwrap();
    let mean = [0.15, 0.15];
    let setup = build_heralding(&t, &LossParams::new(&mean).unwrap(), &[0.105, 0.105]).unwrap();
    let n = 100_000;
    let recs = simulate_shots(
        &setup,
        &Dynamics::Identity,
        &Observable::Number { mode: 0 },
        &GammaDistribution::gaussian(&mean, 0.1),
        Some(&JSet::local(2)),
        &ShotOptions::new(n, 77),
    )
    .unwrap();
    let patterns = JSet::local(4).patterns(2);
    for p in &patterns {
        let expected = setup.probability(p);
        let observed = recs.iter().filter(|r| &r.herald_pattern == p).count() as f64 / n as f64;
        let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!(
            (observed - expected).abs() <= 4.0 * sigma + 1e-12,
            "{p:?}: {observed} vs {expected}"
        );
    }
    for r in &recs {
        assert_eq!(r.discarded, !JSet::local(2).contains(&r.herald_pattern));
    }
}

#[test]
fn single_photon_estimator_is_unbiased() {
    let s = FockSpace::single(6).unwrap();
    let one = FockState::basis(&s, &[1]).unwrap();
    let g = 0.2;
    let loss = LossParams::new(&[g]).unwrap();
    let setup = build_heralding(&one, &loss, &[0.2]).unwrap();
    let j = JSet::local(1);
    let dec = decompose_inverse(&one, &loss, &j.patterns(1)).unwrap();
    let recs = simulate_shots(
        &setup,
        &Dynamics::Identity,
        &Observable::fidelity(&one),
        &GammaDistribution::fixed(&[g]),
        Some(&j),
        &ShotOptions::new(200_000, 3),
    )
    .unwrap();
    let rep = mitigated_estimator(&recs, &dec, &j).unwrap();
    assert!(rep.fractional_bias_estimate < 1e-12);
    assert!(
        (rep.mitigated_mean - 1.0).abs() < 4.0 * rep.variance.sqrt(),
        "{rep:?}"
    );
    let counted: usize = rep.per_channel.iter().map(|c| c.count).sum();
    assert_eq!(counted + rep.shots_discarded, rep.shots_total);
}

#[test]
fn estimator_reproduces_analytic_mean_from_exact_channel_means() {
    let s = FockSpace::single(80).unwrap();
    let sq = squeezed_vacuum(&s, 0.75).unwrap();
    let loss = LossParams::new(&[0.1]).unwrap();
    let j = JSet::local(3);
    let obs = Observable::fidelity(&sq);
    let a = analytic_expectations(
        &sq,
        &loss,
        &Dynamics::Identity,
        &obs,
        &j,
        &AnalyticOptions::default(),
    )
    .unwrap();
    let dec = decompose_inverse(&sq, &loss, &j.patterns(1)).unwrap();
    let mut recs = Vec::new();
    for c in &a.per_channel {
        for _ in 0..2 {
            recs.push(ShotRecord {
                shot_index: recs.len() as u64,
                sampled_gamma: vec![0.1],
                herald_pattern: c.pattern.clone(),
                observable_value: c.mean,
                discarded: false,
            });
        }
    }
    let rep = mitigated_estimator(&recs, &dec, &j).unwrap();
    assert_abs_diff_eq!(rep.mitigated_mean, a.mitigated, epsilon = 1e-12);
}

fn fidelity_report(
    r0: f64,
    gamma: f64,
    j_max: usize,
    assumed: Option<f64>,
    mu: Option<f64>,
    cutoff: usize,
) -> photon_qec::protocol::AnalyticReport {
    let s = FockSpace::single(cutoff).unwrap();
    let sq = squeezed_vacuum(&s, r0).unwrap();
    analytic_expectations(
        &sq,
        &LossParams::new(&[gamma]).unwrap(),
        &Dynamics::Identity,
        &Observable::fidelity(&sq),
        &JSet::local(j_max),
        &AnalyticOptions {
            assumed_gamma: assumed.map(|g| vec![g]),
            mu: mu.map(|m| vec![m]),
        },
    )
    .unwrap()
}

#[test]
fn lossless_analytics_are_trivial() {
    let r = fidelity_report(0.8, 0.0, 2, None, Some(0.0), 80);
    assert!(r.exact_bias.abs() < 1e-14);
    assert_abs_diff_eq!(r.weight_overhead.unwrap(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r.sampling_overhead.unwrap(), 1.0, epsilon = 1e-9);
}

#[test]
fn zero_subtraction_already_helps() {
    for r0 in [0.5f64, 1.0, 1.33] {
        for gamma in [0.05, 0.1, 0.15] {
            // the inverse map only exists while g0² tanh r0 < 1
            if r0.tanh() / (1.0 - gamma) >= 1.0 {
                continue;
            }
            let r = fidelity_report(r0, gamma, 0, None, None, 800);
            assert!(
                r.percentage_bias < r.unmitigated_percentage_bias,
                "r0={r0} γ={gamma}"
            );
        }
    }
}

#[test]
fn overhead_grows_with_j_max() {
    let mut last = 0.0;
    for j in 0..=4 {
        let r = fidelity_report(1.0, 0.1, j, None, Some(0.1), 400);
        let w = r.weight_overhead.unwrap();
        assert!(w >= last - 1e-12, "J={j}: {w} < {last}");
        last = w;
    }
}

#[test]
fn partial_mitigation_beats_no_mitigation() {
    for k in 1..=10 {
        let assumed = 0.01 * k as f64;
        let r = fidelity_report(1.0, 0.1, 3, Some(assumed), None, 400);
        assert!(
            r.percentage_bias <= r.unmitigated_percentage_bias,
            "γ̃={assumed}"
        );
    }
}

#[test]
fn seeds_make_runs_reproducible() {
    let s = FockSpace::single(60).unwrap();
    let sq = squeezed_vacuum(&s, 0.6).unwrap();
    let setup = build_heralding(&sq, &LossParams::new(&[0.1]).unwrap(), &[0.1]).unwrap();
    let run = |seed| {
        simulate_shots(
            &setup,
            &Dynamics::Identity,
            &Observable::fidelity(&sq),
            &GammaDistribution::gaussian(&[0.1], 0.1),
            Some(&JSet::local(2)),
            &ShotOptions::new(5000, seed),
        )
        .unwrap()
    };
    let (a, b, c) = (run(1), run(1), run(2));
    assert_eq!(a.len(), b.len());
    assert!(a
        .iter()
        .zip(&b)
        .all(|(x, y)| x.herald_pattern == y.herald_pattern
            && x.sampled_gamma == y.sampled_gamma
            && x.observable_value.to_bits() == y.observable_value.to_bits()));
    assert!(a
        .iter()
        .zip(&c)
        .any(|(x, y)| x.sampled_gamma != y.sampled_gamma));
}

#[test]
fn monte_carlo_examples() {
    // S = 1 plan is an ordinary sample mean
    let s = FockSpace::single(40).unwrap();
    let plan = monte_carlo_state_plan(
        &s,
        &StateFamily::Cat {
            alpha: 1.0,
            phi: 0.0,
        },
        &LossParams::new(&[0.0]).unwrap(),
    )
    .unwrap();
    let g0 = GammaDistribution::fixed(&[0.0]);
    let obs = Observable::Number { mode: 0 };
    let opts = ShotOptions::new(20_000, 8);
    let rep = monte_carlo_run(&plan, &Dynamics::Identity, &obs, &g0, &opts).unwrap();
    let recs = photon_qec::protocol::simulate_unmitigated_shots(
        &plan.target,
        &Dynamics::Identity,
        &obs,
        &g0,
        &opts,
    )
    .unwrap();
    let (mean, _, _) = sample_mean_variance(&recs);
    assert_eq!(rep.mean, mean);

    // cat, γ = 0.1: |mean − 1| < 3 S/√n
    let g = 0.1;
    let plan = monte_carlo_state_plan(
        &s,
        &StateFamily::Cat {
            alpha: 1.0,
            phi: 0.0,
        },
        &LossParams::new(&[g]).unwrap(),
    )
    .unwrap();
    let n = 100_000;
    let rep = monte_carlo_run(
        &plan,
        &Dynamics::Identity,
        &Observable::fidelity(&plan.target),
        &GammaDistribution::fixed(&[g]),
        &ShotOptions::new(n, 9),
    )
    .unwrap();
    assert!((rep.mean - 1.0).abs() < 3.0 * plan.s / (n as f64).sqrt());
    assert_abs_diff_eq!(rep.approx_overhead, plan.s * plan.s, epsilon = 1e-12);

    // ECS α = β = 1, γ̄ = (0.2, 0.2)
    let s2 = FockSpace::new(&[25, 25]).unwrap();
    let mean_gamma = [0.2, 0.2];
    let plan = monte_carlo_state_plan(
        &s2,
        &StateFamily::Ecs {
            alpha: 1.0,
            beta: 1.0,
            sign: -1.0,
        },
        &LossParams::new(&mean_gamma).unwrap(),
    )
    .unwrap();
    let rep = monte_carlo_run(
        &plan,
        &Dynamics::Identity,
        &Observable::fidelity(&plan.target),
        &GammaDistribution::gaussian(&mean_gamma, 0.1),
        &ShotOptions::new(n, 10),
    )
    .unwrap();
    assert!((rep.mean - 1.0).abs() < 3.0 * rep.standard_error, "{rep:?}");
}
