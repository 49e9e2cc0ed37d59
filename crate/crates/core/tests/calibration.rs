use nalgebra::DMatrix;
use photon_qec::calibration::{
    estimate_gamma, estimate_gamma_multi, estimate_gamma_with, plan_shots, poisson_variance,
    variance_formula, Device, ProbeConfig,
};
use photon_qec::{Complex64, Error, Execution};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn estimates_are_consistent_across_gamma() {
    let n = 100_000;
    let probe = ProbeConfig::new(vec![c(1.0), c(0.5)], n);
    let m = probe.total_intensity();
    for (k, gamma) in [0.01, 0.05, 0.1, 0.2, 0.3].into_iter().enumerate() {
        let est = estimate_gamma(&probe, &Device::new(gamma).unwrap(), 1000 + k as u64).unwrap();
        let sd = poisson_variance(gamma, n, m).sqrt();
        assert!(
            (est.gamma_hat - gamma).abs() < 4.0 * sd,
            "γ={gamma}: {}",
            est.gamma_hat
        );
        assert_eq!(est.n_shots_used, n);
        // the reported variance is empirical; with 10⁵ shots it sits within a few percent of the Poisson value
        assert!((est.variance / poisson_variance(gamma, n, m) - 1.0).abs() < 0.05);
    }
}

#[test]
fn passive_unitary_does_not_change_the_estimate_distribution() {
    let (t, r) = (0.6f64.sqrt(), 0.4f64.sqrt());
    let u = DMatrix::from_row_slice(2, 2, &[c(t), c(-r), c(r), c(t)]);
    let probe = ProbeConfig::new(vec![c(1.2), c(0.3)], 50_000);
    let plain = Device::new(0.1).unwrap();
    let mixed = Device::new(0.1).unwrap().with_passive(u).unwrap();
    let total = |d: &Device| {
        d.output_means(&probe.amplitudes)
            .unwrap()
            .iter()
            .sum::<f64>()
    };
    assert!((total(&plain) - total(&mixed)).abs() < 1e-12);

    let runs = 200;
    let stats = |d: &Device| {
        let xs: Vec<f64> = (0..runs)
            .map(|s| estimate_gamma(&probe, d, s).unwrap().gamma_hat)
            .collect();
        let mean = xs.iter().sum::<f64>() / runs as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
        (mean, var)
    };
    let (ma, va) = stats(&plain);
    let (mb, vb) = stats(&mixed);
    let v = poisson_variance(0.1, probe.n_shots, probe.total_intensity());
    let se = (2.0 * v / runs as f64).sqrt();
    assert!((ma - mb).abs() < 4.0 * se);
    assert!(
        (va / v - 1.0).abs() < 0.35 && (vb / v - 1.0).abs() < 0.35,
        "{va} {vb} {v}"
    );
}

#[test]
fn non_unitary_passive_is_rejected() {
    let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
    assert!(Device::new(0.1).unwrap().with_passive(m).is_err());
}

#[test]
fn zero_intensity_and_bad_inputs() {
    let dev = Device::new(0.1).unwrap();
    let probe = ProbeConfig::new(vec![c(0.0)], 10);
    assert!(matches!(
        estimate_gamma(&probe, &dev, 1),
        Err(Error::InvalidParameter(_))
    ));
    assert!(estimate_gamma(&ProbeConfig::new(vec![c(1.0)], 0), &dev, 1).is_err());
    let mut active = ProbeConfig::new(vec![c(1.0)], 10);
    active.assume_passive_ideal = false;
    assert!(matches!(
        estimate_gamma(&active, &dev, 1),
        Err(Error::Unsupported(_))
    ));
    assert!(Device::new(1.0).is_err());
    assert!(Device::new(-0.1).is_err());
    assert!(plan_shots(0.01, 0.99, 0.0).is_err());
    assert!(estimate_gamma_multi(&[], &dev, 1).is_err());
}

#[test]
fn multi_setting_pools_intensity() {
    let dev = Device::new(0.15).unwrap();
    let probes = [
        ProbeConfig::new(vec![c(1.0)], 40_000),
        ProbeConfig::new(vec![c(2.0)], 10_000),
    ];
    let est = estimate_gamma_multi(&probes, &dev, 4).unwrap();
    // pooled N·M = 40 000 + 40 000
    let v = (1.0 - 0.15) / 80_000.0;
    assert!(
        (est.variance / v - 1.0).abs() < 0.05,
        "{} vs {v}",
        est.variance
    );
    assert!((est.gamma_hat - 0.15).abs() < 4.0 * v.sqrt());
    assert_eq!(est.n_shots_used, 50_000);
}

#[test]
fn sequential_and_parallel_agree() {
    let probe = ProbeConfig::new(vec![c(1.0), c(1.0)], 30_000);
    let dev = Device::new(0.2).unwrap();
    let a = estimate_gamma_with(&probe, &dev, 9, Execution::Sequential).unwrap();
    let b = estimate_gamma_with(&probe, &dev, 9, Execution::Parallel).unwrap();
    assert_eq!(a.gamma_hat.to_bits(), b.gamma_hat.to_bits());
}

#[test]
fn planner_examples() {
    assert_eq!(plan_shots(0.01, 0.99, 1.0).unwrap(), 1_000_001);
    assert_eq!(plan_shots(0.1, 0.0, 1.0).unwrap(), 1);
    assert!(plan_shots(0.01, 1.0, 1.0).is_err());
    assert!(plan_shots(0.0, 0.5, 1.0).is_err());
    assert!(variance_formula(0.1, 10, 1.0) < poisson_variance(0.1, 10, 1.0));
}
