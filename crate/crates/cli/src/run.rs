//! One runner per experiment kind. Each returns the tables to write plus a JSON summary
//! for the run manifest; nothing here touches the file system.

use photon_qec::calibration::{
    estimate_gamma, plan_shots, poisson_variance, variance_formula, Device, ProbeConfig,
};
use photon_qec::channels::{decompose_inverse, LossParams};
use photon_qec::fock::FockState;
use photon_qec::protocol::{
    amplified_squeezing, amplified_tmsv_squeezing, analytic_expectations, build_heralding,
    cat_sampling_norm, mitigated_estimator, monte_carlo_shots_repeated, monte_carlo_state_plan,
    optimize_mu, sample_mean_variance, simulate_shots_repeated,
    simulate_unmitigated_shots_repeated, weighted_values, AnalyticOptions, Dynamics,
    GammaDistribution, JSet, Observable, OverheadModel, OverheadObjective, ShotOptions, ShotRecord,
    StateFamily, DEFAULT_TAIL_MASS,
};
use photon_qec::seed::derive_seed;
use photon_qec::Execution;
use serde_json::json;

use crate::build;
use crate::config::{ExperimentConfig, ExperimentKind, MuSpec, Resolved, StateSpec};
use crate::error::{CliError, CliResult, Context};
use crate::output::{histogram, level_histogram, Cell, Table};

pub struct Outcome {
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
}

pub fn execute(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let errors = cfg.validate();
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    match cfg.experiment {
        ExperimentKind::BiasSweep => bias_sweep(cfg),
        ExperimentKind::OverheadSweep => overhead_sweep(cfg),
        ExperimentKind::MismatchSweep => mismatch_sweep(cfg),
        ExperimentKind::Shots => shots(cfg),
        ExperimentKind::TmsvCov => tmsv_cov(cfg),
        ExperimentKind::CatMc => cat_mc(cfg),
        ExperimentKind::EcsMc => ecs_mc(cfg),
        ExperimentKind::Calibrate => calibrate(cfg),
    }
}

fn columns<'a>(head: &[&'a str], modes: &'a [String], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter()
        .copied()
        .chain(modes.iter().map(String::as_str))
        .chain(tail.iter().copied())
        .collect()
}

fn mode_names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|m| format!("{prefix}_{m}")).collect()
}

fn loss(gamma: &[f64], what: &str) -> CliResult<LossParams> {
    LossParams::new(gamma).ctx(what)
}

fn distribution(cfg: &ExperimentConfig, mean: &[f64]) -> GammaDistribution {
    if cfg.loss.sd_fraction == 0.0 {
        GammaDistribution::fixed(mean)
    } else {
        GammaDistribution::Gaussian {
            mean: mean.to_vec(),
            sd: mean.iter().map(|g| g * cfg.loss.sd_fraction).collect(),
            bins: cfg.loss.bins,
            tail_mass: DEFAULT_TAIL_MASS,
        }
    }
}

/// Concrete tap-off reflectivities; `"optimize"` runs the weight-only grid search over
/// the series' J-set.
fn resolve_mu(
    r: &Resolved,
    initial: &FockState,
    mean_loss: &LossParams,
) -> CliResult<Option<Vec<f64>>> {
    match &r.mu {
        None => Ok(None),
        Some(MuSpec::Values(v)) => Ok(Some(v.clone())),
        Some(MuSpec::Keyword(_)) => {
            let best = optimize_mu(
                initial,
                mean_loss,
                &r.j_set,
                None,
                OverheadObjective::WeightOnly,
            )
            .ctx(&format!("optimising mu for {}", r.label))?;
            Ok(Some(vec![best.mu; initial.space().num_modes()]))
        }
    }
}

fn amplified_parameter(state: &StateSpec, g: &[f64]) -> f64 {
    match state {
        StateSpec::Squeezed { r } => amplified_squeezing(*r, g[0]).unwrap_or(f64::NAN),
        StateSpec::Tmsv { r } => amplified_tmsv_squeezing(*r, g[0], g[1]).unwrap_or(f64::NAN),
        _ => f64::NAN,
    }
}

fn nan_padded(values: Option<&[f64]>, n: usize) -> Vec<Cell> {
    (0..n)
        .map(|m| values.map_or(f64::NAN, |v| v[m]).into())
        .collect()
}

fn bias_sweep(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let space = build::space(cfg)?;
    let n = space.num_modes();
    let gammas = mode_names("gamma", n);
    let mus = mode_names("mu", n);
    let head = ["series", "state_parameter"];
    let mid = [
        "j_max",
        "ideal",
        "noisy",
        "mitigated",
        "percentage_bias",
        "unmitigated_percentage_bias",
        "fractional_bias_estimate",
        "weight_sum",
        "one_norm",
    ];
    let mut cols = columns(&head, &gammas, &mid);
    cols.extend(mus.iter().map(String::as_str));
    cols.extend(["weight_overhead", "kept_probability"]);
    let mut table = Table::new(None, &cols);

    let j_values = cfg.sweep.j_max.clone().unwrap_or_default();
    let resolved: Vec<Resolved> = cfg.series().iter().map(|s| cfg.resolve(s)).collect();
    let mut prepared = Vec::new();
    for r in &resolved {
        let initial = build::state(&space, &r.state)?;
        let mean = loss(&r.gamma, &format!("series {}", r.label))?;
        let mu = resolve_mu(r, &initial, &mean)?;
        let obs = build::observable(cfg, &space, &initial)?;
        prepared.push((r, initial, mean, mu, obs));
    }
    let points: Vec<(usize, usize)> = (0..prepared.len())
        .flat_map(|s| j_values.iter().map(move |&j| (s, j)))
        .collect();
    let rows = Execution::default().map(points, |(s, j)| -> CliResult<Vec<Cell>> {
        let (r, initial, mean, mu, obs) = &prepared[s];
        let j_set = match r.j_set {
            JSet::Global { .. } => JSet::global(j),
            _ => JSet::local(j),
        };
        let a = analytic_expectations(
            initial,
            mean,
            &Dynamics::Identity,
            obs,
            &j_set,
            &AnalyticOptions {
                assumed_gamma: None,
                mu: mu.clone(),
            },
        )
        .ctx(&format!("series {}, j_max {j}", r.label))?;
        let mut row: Vec<Cell> = vec![r.label.clone().into(), r.state.parameter().into()];
        row.extend(r.gamma.iter().map(|&g| Cell::from(g)));
        row.extend([
            Cell::from(j),
            a.ideal.into(),
            a.noisy.into(),
            a.mitigated.into(),
            a.percentage_bias.into(),
            a.unmitigated_percentage_bias.into(),
            a.fractional_bias_estimate.into(),
            a.weight_sum.into(),
            a.one_norm.into(),
        ]);
        row.extend(nan_padded(mu.as_deref(), r.gamma.len()));
        row.push(a.weight_overhead.unwrap_or(f64::NAN).into());
        row.push(a.kept_probability.unwrap_or(f64::NAN).into());
        Ok(row)
    });
    for row in rows {
        table.push(row?);
    }
    let summary = json!({
        "series": prepared.iter().map(|(r, _, _, mu, _)| json!({"label": r.label, "gamma": r.gamma, "mu": mu})).collect::<Vec<_>>(),
        "rows": table.rows.len(),
    });
    Ok(Outcome {
        tables: vec![table],
        summary,
    })
}

fn overhead_sweep(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let space = build::space(cfg)?;
    let n = space.num_modes();
    let gammas = mode_names("gamma", n);
    let g_names = mode_names("g_mu", n);
    let mut cols = columns(&["series", "state_parameter"], &gammas, &["j_max", "mu"]);
    cols.extend(g_names.iter().map(String::as_str));
    cols.extend([
        "r_amp",
        "weight_overhead",
        "full_overhead",
        "kept_probability",
        "feasible",
        "percentage_bias",
        "unmitigated_percentage_bias",
    ]);
    let mut table = Table::new(None, &cols);
    let mut best = Table::new(
        Some("optimum"),
        &columns(
            &["series", "state_parameter"],
            &gammas,
            &[
                "j_max",
                "mu",
                "r_amp",
                "r_amp_g0",
                "weight_overhead",
                "full_overhead",
                "percentage_bias",
            ],
        ),
    );

    let mu_grid = cfg.sweep.mu.clone().unwrap_or_default();
    let resolved: Vec<Resolved> = cfg.series().iter().map(|s| cfg.resolve(s)).collect();
    let results = Execution::default().map(
        resolved,
        |r| -> CliResult<(Resolved, Vec<Vec<Cell>>, Vec<Cell>)> {
            let ctx = format!("series {}", r.label);
            let initial = build::state(&space, &r.state)?;
            let mean = loss(&r.gamma, &ctx)?;
            let obs = build::observable(cfg, &space, &initial)?;
            let model =
                OverheadModel::new(&initial, &mean, &r.j_set, Some((&Dynamics::Identity, &obs)))
                    .ctx(&ctx)?;
            let a = analytic_expectations(
                &initial,
                &mean,
                &Dynamics::Identity,
                &obs,
                &r.j_set,
                &AnalyticOptions::default(),
            )
            .ctx(&ctx)?;
            let j_max = r.j_set.max_per_mode();
            let head = |row: &mut Vec<Cell>| {
                row.push(r.label.clone().into());
                row.push(r.state.parameter().into());
                row.extend(r.gamma.iter().map(|&g| Cell::from(g)));
                row.push(j_max.into());
            };
            let mut rows = Vec::new();
            for p in model.curve(&mu_grid).ctx(&ctx)? {
                let mut row = Vec::new();
                head(&mut row);
                row.push(p.mu.into());
                row.extend(p.g_mu.iter().map(|&g| Cell::from(g)));
                row.extend([
                    amplified_parameter(&r.state, &p.g_mu).into(),
                    p.weight_overhead.into(),
                    p.full_overhead.unwrap_or(f64::NAN).into(),
                    p.kept_probability.into(),
                    p.feasible.into(),
                    a.percentage_bias.into(),
                    a.unmitigated_percentage_bias.into(),
                ]);
                rows.push(row);
            }
            let opt = model
                .optimize(
                    OverheadObjective::WeightOnly,
                    photon_qec::protocol::DEFAULT_MU_STEP,
                    photon_qec::protocol::DEFAULT_MU_MAX,
                )
                .ctx(&ctx)?;
            let g0: Vec<f64> = r.gamma.iter().map(|g| 1.0 / (1.0 - g).sqrt()).collect();
            let mut b = Vec::new();
            head(&mut b);
            b.extend([
                opt.mu.into(),
                amplified_parameter(&r.state, &opt.g_mu).into(),
                amplified_parameter(&r.state, &g0).into(),
                opt.weight_overhead.into(),
                opt.full_overhead.unwrap_or(f64::NAN).into(),
                a.percentage_bias.into(),
            ]);
            Ok((r, rows, b))
        },
    );
    let mut series = Vec::new();
    for res in results {
        let (r, rows, b) = res?;
        rows.into_iter().for_each(|row| table.push(row));
        series.push(json!({"label": r.label, "optimal_mu": b[3 + r.gamma.len()].as_f64()}));
        best.push(b);
    }
    Ok(Outcome {
        tables: vec![table, best],
        summary: json!({ "series": series }),
    })
}

fn mismatch_sweep(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let space = build::space(cfg)?;
    let n = space.num_modes();
    let gammas = mode_names("gamma", n);
    let cols = columns(
        &["series", "state_parameter"],
        &gammas,
        &[
            "j_max",
            "assumed_gamma",
            "ideal",
            "noisy",
            "mitigated",
            "percentage_bias",
            "unmitigated_percentage_bias",
        ],
    );
    let mut table = Table::new(None, &cols);
    let grid = cfg.sweep.assumed_gamma.clone().unwrap_or_default();
    let resolved: Vec<Resolved> = cfg.series().iter().map(|s| cfg.resolve(s)).collect();
    let points: Vec<(usize, f64)> = (0..resolved.len())
        .flat_map(|s| grid.iter().map(move |&g| (s, g)))
        .collect();
    let rows = Execution::default().map(points, |(s, assumed)| -> CliResult<Vec<Cell>> {
        let r = &resolved[s];
        let ctx = format!("series {}, assumed gamma {assumed}", r.label);
        let initial = build::state(&space, &r.state)?;
        let obs = build::observable(cfg, &space, &initial)?;
        let a = analytic_expectations(
            &initial,
            &loss(&r.gamma, &ctx)?,
            &Dynamics::Identity,
            &obs,
            &r.j_set,
            &AnalyticOptions {
                assumed_gamma: Some(vec![assumed; n]),
                mu: None,
            },
        )
        .ctx(&ctx)?;
        let mut row: Vec<Cell> = vec![r.label.clone().into(), r.state.parameter().into()];
        row.extend(r.gamma.iter().map(|&g| Cell::from(g)));
        row.extend([
            Cell::from(r.j_set.max_per_mode()),
            assumed.into(),
            a.ideal.into(),
            a.noisy.into(),
            a.mitigated.into(),
            a.percentage_bias.into(),
            a.unmitigated_percentage_bias.into(),
        ]);
        Ok(row)
    });
    for row in rows {
        table.push(row?);
    }
    let summary = json!({ "rows": table.rows.len() });
    Ok(Outcome {
        tables: vec![table],
        summary,
    })
}

/// Result of one heralded experiment (mitigated run plus an unmitigated control run).
struct ShotExperiment {
    seed: u64,
    mitigated: f64,
    estimator_variance: f64,
    weight_overhead: f64,
    full_overhead: f64,
    unmitigated: f64,
    unmitigated_variance: f64,
    shots_total: usize,
    shots_discarded: usize,
    channels: Vec<(String, f64, usize, f64, f64)>,
}

struct ShotSeries {
    ideal: f64,
    noisy: f64,
    expected_mitigated: f64,
    mu: Vec<f64>,
    experiments: Vec<ShotExperiment>,
}

fn pattern_label(p: &[usize]) -> String {
    p.iter()
        .map(|j| j.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

fn heralded_experiments(
    cfg: &ExperimentConfig,
    r: &Resolved,
    series_seed: u64,
    label: &str,
    observable: Option<Observable>,
) -> CliResult<ShotSeries> {
    let ctx = format!("series {}", r.label);
    let space = build::space(cfg)?;
    let initial = build::state(&space, &r.state)?;
    let mean = loss(&r.gamma, &ctx)?;
    let obs = match observable {
        Some(o) => o,
        None => build::observable(cfg, &space, &initial)?,
    };
    // without an explicit μ the shot experiments use the overhead-optimal one
    let mu = match resolve_mu(r, &initial, &mean)? {
        Some(m) => m,
        None => {
            let mut opt = r.clone();
            opt.mu = Some(MuSpec::Keyword(crate::config::MuKeyword::Optimize));
            resolve_mu(&opt, &initial, &mean)?.unwrap_or_default()
        }
    };
    let setup = build_heralding(&initial, &mean, &mu).ctx(&format!("{ctx}: heralding"))?;
    let dec = decompose_inverse(&initial, &mean, &r.j_set.patterns(space.num_modes())).ctx(&ctx)?;
    let a = analytic_expectations(
        &initial,
        &mean,
        &Dynamics::Identity,
        &obs,
        &r.j_set,
        &AnalyticOptions {
            assumed_gamma: None,
            mu: Some(mu.clone()),
        },
    )
    .ctx(&ctx)?;
    let dist = distribution(cfg, &r.gamma);
    let seeds: Vec<u64> = (0..cfg.experiments as u64)
        .map(|e| derive_seed(series_seed, label, e))
        .collect();
    let raw_seeds: Vec<u64> = (0..cfg.experiments as u64)
        .map(|e| derive_seed(series_seed, &format!("{label}-raw"), e))
        .collect();
    let opts = ShotOptions::new(cfg.shots, 0);
    let runs = simulate_shots_repeated(
        &setup,
        &Dynamics::Identity,
        &obs,
        &dist,
        Some(&r.j_set),
        &opts,
        &seeds,
    )
    .ctx(&format!("{ctx}: mitigated shots"))?;
    let raw_runs = simulate_unmitigated_shots_repeated(
        &initial,
        &Dynamics::Identity,
        &obs,
        &dist,
        &opts,
        &raw_seeds,
    )
    .ctx(&format!("{ctx}: unmitigated shots"))?;
    let mut experiments = Vec::with_capacity(cfg.experiments);
    for (e, ((recs, raw), &seed)) in runs.iter().zip(&raw_runs).zip(&seeds).enumerate() {
        let rep =
            mitigated_estimator(recs, &dec, &r.j_set).ctx(&format!("{ctx}: experiment {e}"))?;
        let (raw_mean, raw_var, _) = sample_mean_variance(raw);
        experiments.push(ShotExperiment {
            seed,
            mitigated: rep.mitigated_mean,
            estimator_variance: rep.variance,
            weight_overhead: rep.sampling_overhead,
            full_overhead: rep.full_overhead(raw_var),
            unmitigated: raw_mean,
            unmitigated_variance: raw_var,
            shots_total: rep.shots_total,
            shots_discarded: rep.shots_discarded,
            channels: rep
                .per_channel
                .iter()
                .map(|c| {
                    (
                        pattern_label(&c.pattern),
                        c.weight,
                        c.count,
                        c.mean,
                        c.variance.unwrap_or(f64::NAN),
                    )
                })
                .collect(),
        });
    }
    Ok(ShotSeries {
        ideal: a.ideal,
        noisy: a.noisy,
        expected_mitigated: a.mitigated,
        mu,
        experiments,
    })
}

fn pct(x: f64, ideal: f64) -> f64 {
    100.0 * (x - ideal).abs() / ideal.abs()
}

fn shot_tables(suffix: Option<&str>, runs: &[(String, ShotSeries)]) -> (Table, Table) {
    let mut t = Table::new(
        suffix,
        &[
            "series",
            "experiment",
            "seed",
            "mitigated",
            "estimator_variance",
            "unmitigated",
            "unmitigated_variance",
            "weight_overhead",
            "full_overhead",
            "shots_total",
            "shots_discarded",
            "ideal",
            "noisy",
            "expected_mitigated",
            "percentage_bias",
            "unmitigated_percentage_bias",
        ],
    );
    let ch_suffix = suffix.map_or("channels".to_string(), |s| format!("{s}_channels"));
    let mut ch = Table::new(
        Some(&ch_suffix),
        &[
            "series",
            "experiment",
            "pattern",
            "weight",
            "count",
            "mean",
            "variance",
        ],
    );
    for (label, s) in runs {
        for (e, x) in s.experiments.iter().enumerate() {
            t.push(vec![
                label.clone().into(),
                e.into(),
                x.seed.into(),
                x.mitigated.into(),
                x.estimator_variance.into(),
                x.unmitigated.into(),
                x.unmitigated_variance.into(),
                x.weight_overhead.into(),
                x.full_overhead.into(),
                x.shots_total.into(),
                x.shots_discarded.into(),
                s.ideal.into(),
                s.noisy.into(),
                s.expected_mitigated.into(),
                pct(x.mitigated, s.ideal).into(),
                pct(x.unmitigated, s.ideal).into(),
            ]);
            for (p, w, c, m, v) in &x.channels {
                ch.push(vec![
                    label.clone().into(),
                    e.into(),
                    p.clone().into(),
                    (*w).into(),
                    (*c).into(),
                    (*m).into(),
                    (*v).into(),
                ]);
            }
        }
    }
    (t, ch)
}

fn mean_of(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn series_summary(label: &str, s: &ShotSeries) -> serde_json::Value {
    let mit = mean_of(s.experiments.iter().map(|x| x.mitigated));
    let raw = mean_of(s.experiments.iter().map(|x| x.unmitigated));
    json!({
        "label": label,
        "mu": s.mu,
        "ideal": s.ideal,
        "noisy": s.noisy,
        "mean_mitigated": mit,
        "mean_unmitigated": raw,
        "mitigated_percentage_bias": pct(mit, s.ideal),
        "unmitigated_percentage_bias": pct(raw, s.ideal),
        "mean_weight_overhead": mean_of(s.experiments.iter().map(|x| x.weight_overhead)),
        "mean_full_overhead": mean_of(s.experiments.iter().map(|x| x.full_overhead)),
    })
}

fn shots(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let mut runs = Vec::new();
    for (k, s) in cfg.series().iter().enumerate() {
        let r = cfg.resolve(s);
        let series_seed = derive_seed(cfg.seed, "series", k as u64);
        runs.push((
            r.label.clone(),
            heralded_experiments(cfg, &r, series_seed, "shots", None)?,
        ));
    }
    let (t, ch) = shot_tables(None, &runs);
    let summary =
        json!({ "series": runs.iter().map(|(l, s)| series_summary(l, s)).collect::<Vec<_>>() });
    Ok(Outcome {
        tables: vec![t, ch],
        summary,
    })
}

fn tmsv_cov(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let entries = [("sigma00", 0, 0), ("sigma02", 0, 1)];
    let mut tables = Vec::new();
    let mut lines = Table::new(
        Some("summary"),
        &[
            "observable",
            "series",
            "ideal",
            "noisy",
            "mean_mitigated",
            "mean_unmitigated",
            "mitigated_percentage_bias",
            "unmitigated_percentage_bias",
            "mean_weight_overhead",
            "mean_full_overhead",
        ],
    );
    let mut summary = Vec::new();
    for (name, k, l) in entries {
        let mut runs = Vec::new();
        for (i, s) in cfg.series().iter().enumerate() {
            let r = cfg.resolve(s);
            let series_seed = derive_seed(cfg.seed, "series", i as u64);
            let obs = Observable::covariance_xx(2, k, l);
            runs.push((
                r.label.clone(),
                heralded_experiments(cfg, &r, series_seed, name, Some(obs))?,
            ));
        }
        let (t, ch) = shot_tables(Some(name), &runs);
        tables.push(t);
        tables.push(ch);
        for (label, s) in &runs {
            let js = series_summary(label, s);
            let f = |key: &str| js[key].as_f64().unwrap_or(f64::NAN);
            lines.push(vec![
                name.into(),
                label.clone().into(),
                s.ideal.into(),
                s.noisy.into(),
                f("mean_mitigated").into(),
                f("mean_unmitigated").into(),
                f("mitigated_percentage_bias").into(),
                f("unmitigated_percentage_bias").into(),
                f("mean_weight_overhead").into(),
                f("mean_full_overhead").into(),
            ]);
            let mut js = js;
            js["observable"] = json!(name);
            summary.push(js);
            // shared bin edges so the two histograms overlay
            let mit: Vec<f64> = s.experiments.iter().map(|x| x.mitigated).collect();
            let raw: Vec<f64> = s.experiments.iter().map(|x| x.unmitigated).collect();
            let all = mit
                .iter()
                .chain(&raw)
                .chain([&s.ideal, &s.noisy])
                .copied()
                .filter(|v| v.is_finite());
            let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
            let tag = if runs.len() > 1 {
                format!("{name}_{label}")
            } else {
                name.to_string()
            };
            for (kind, vals) in [("mitigated", &mit), ("unmitigated", &raw)] {
                let mut h = histogram(vals, lo, hi, cfg.histogram_bins);
                h.suffix = Some(format!("{tag}_{kind}_hist"));
                tables.push(h);
            }
        }
    }
    tables.insert(0, lines);
    Ok(Outcome {
        tables,
        summary: json!({ "observables": summary }),
    })
}

fn cat_mc(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let (alpha0, phi) = match cfg.state {
        StateSpec::Cat { alpha, phi } => (alpha, phi),
        _ => unreachable!("validated"),
    };
    let alphas = cfg.sweep.alpha.clone().unwrap_or_else(|| vec![alpha0]);
    let gammas = cfg
        .sweep
        .gamma
        .clone()
        .unwrap_or_else(|| vec![cfg.loss.gamma[0]]);
    let mut table = Table::new(
        None,
        &[
            "alpha",
            "phi",
            "gamma",
            "s",
            "s_squared",
            "mean",
            "standard_error",
            "shot_variance",
        ],
    );
    let points: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| gammas.iter().map(move |&g| (a, g)))
        .collect();
    let sampled = cfg.shots > 0;
    let space = if sampled {
        Some(build::space(cfg)?)
    } else {
        None
    };
    let rows = Execution::default().map(
        points.into_iter().enumerate().collect(),
        |(i, (alpha, g))| -> CliResult<Vec<Cell>> {
            let s = cat_sampling_norm(alpha, phi, g);
            let (mut mean, mut se, mut var) = (f64::NAN, f64::NAN, f64::NAN);
            if let Some(space) = &space {
                let (m, e, v) = monte_carlo_experiments(
                    cfg,
                    space,
                    &StateFamily::Cat { alpha, phi },
                    &[g],
                    derive_seed(cfg.seed, "point", i as u64),
                )?
                .stats();
                (mean, se, var) = (m, e, v);
            }
            Ok(vec![
                alpha.into(),
                phi.into(),
                g.into(),
                s.into(),
                (s * s).into(),
                mean.into(),
                se.into(),
                var.into(),
            ])
        },
    );
    for row in rows {
        table.push(row?);
    }
    let summary = json!({ "points": table.rows.len(), "sampled": sampled });
    Ok(Outcome {
        tables: vec![table],
        summary,
    })
}

struct McRun {
    s: f64,
    /// (seed, mean, population variance of weighted values)
    experiments: Vec<(u64, f64, f64)>,
    shots: usize,
    first_records: Option<Vec<ShotRecord>>,
}

impl McRun {
    /// Mean over experiments, its combined standard error and the mean shot variance.
    fn stats(&self) -> (f64, f64, f64) {
        let k = self.experiments.len() as f64;
        let mean = self.experiments.iter().map(|e| e.1).sum::<f64>() / k;
        let var = self.experiments.iter().map(|e| e.2).sum::<f64>() / k;
        let se = (self
            .experiments
            .iter()
            .map(|e| e.2 / self.shots as f64)
            .sum::<f64>())
        .sqrt()
            / k;
        (mean, se, var)
    }
}

fn monte_carlo_experiments(
    cfg: &ExperimentConfig,
    space: &photon_qec::fock::FockSpace,
    family: &StateFamily,
    gamma: &[f64],
    point_seed: u64,
) -> CliResult<McRun> {
    let ctx = format!(
        "monte-carlo plan for {family:?} at gamma ({})",
        crate::config::join(gamma)
    );
    let plan = monte_carlo_state_plan(space, family, &loss(gamma, &ctx)?).ctx(&ctx)?;
    let obs = build::observable(cfg, space, &plan.target)?;
    let dist = distribution(cfg, gamma);
    let seeds: Vec<u64> = (0..cfg.experiments as u64)
        .map(|e| derive_seed(point_seed, "experiment", e))
        .collect();
    let runs = monte_carlo_shots_repeated(
        &plan,
        &Dynamics::Identity,
        &obs,
        &dist,
        &ShotOptions::new(cfg.shots, 0),
        &seeds,
    )
    .ctx(&ctx)?;
    let mut experiments = Vec::new();
    let mut first_records = None;
    for (e, (recs, &seed)) in runs.into_iter().zip(&seeds).enumerate() {
        let v = weighted_values(&plan, &recs);
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
        experiments.push((seed, m, var));
        if e == 0 && cfg.gamma_histogram {
            first_records = Some(recs);
        }
    }
    Ok(McRun {
        s: plan.s,
        experiments,
        shots: cfg.shots,
        first_records,
    })
}

fn ecs_mc(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let space = build::space(cfg)?;
    let n = space.num_modes();
    let gammas = mode_names("gamma", n);
    let mut per_exp = Table::new(
        Some("experiments"),
        &columns(
            &["series", "alpha"],
            &gammas,
            &[
                "experiment",
                "seed",
                "estimate",
                "standard_error",
                "s",
                "s_squared",
            ],
        ),
    );
    let mut table = Table::new(
        None,
        &columns(
            &["series", "alpha"],
            &gammas,
            &[
                "mean_estimate",
                "standard_error",
                "delta",
                "s",
                "s_squared",
                "empirical_variance",
                "mean_shot_variance",
            ],
        ),
    );
    let alphas = cfg
        .sweep
        .alpha
        .clone()
        .unwrap_or_else(|| vec![cfg.state.parameter()]);
    let mut hist_tables = Vec::new();
    let mut summary = Vec::new();
    for (si, s) in cfg.series().iter().enumerate() {
        let r = cfg.resolve(s);
        for (ai, &alpha) in alphas.iter().enumerate() {
            let state = if alpha.is_nan() {
                r.state.clone()
            } else {
                r.state
                    .with_parameter(alpha)
                    .unwrap_or_else(|| r.state.clone())
            };
            let family = state.monte_carlo_family().expect("validated");
            let point_seed = derive_seed(
                derive_seed(cfg.seed, "series", si as u64),
                "alpha",
                ai as u64,
            );
            let run = monte_carlo_experiments(cfg, &space, &family, &r.gamma, point_seed)?;
            let head = |row: &mut Vec<Cell>| {
                row.push(r.label.clone().into());
                row.push(alpha.into());
                row.extend(r.gamma.iter().map(|&g| Cell::from(g)));
            };
            for (e, &(seed, m, v)) in run.experiments.iter().enumerate() {
                let mut row = Vec::new();
                head(&mut row);
                row.extend([
                    Cell::from(e),
                    seed.into(),
                    m.into(),
                    (v / run.shots as f64).sqrt().into(),
                    run.s.into(),
                    (run.s * run.s).into(),
                ]);
                per_exp.push(row);
            }
            let (mean, se, shot_var) = run.stats();
            let ests: Vec<f64> = run.experiments.iter().map(|e| e.1).collect();
            let delta = ests.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - ests.iter().copied().fold(f64::INFINITY, f64::min);
            let emp_var = if ests.len() > 1 {
                ests.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (ests.len() - 1) as f64
            } else {
                f64::NAN
            };
            let mut row = Vec::new();
            head(&mut row);
            row.extend([
                Cell::from(mean),
                se.into(),
                delta.into(),
                run.s.into(),
                (run.s * run.s).into(),
                emp_var.into(),
                shot_var.into(),
            ]);
            table.push(row);
            summary.push(json!({"series": r.label, "alpha": alpha, "gamma": r.gamma, "mean_estimate": mean, "standard_error": se, "s_squared": run.s * run.s}));
            if let Some(recs) = run.first_records.filter(|_| hist_tables.is_empty()) {
                for m in 0..n {
                    let vals: Vec<f64> = recs.iter().map(|x| x.sampled_gamma[m]).collect();
                    let mut h = level_histogram(&vals);
                    h.suffix = Some(format!("gamma_hist_mode{m}"));
                    hist_tables.push(h);
                }
            }
        }
    }
    let mut tables = vec![table, per_exp];
    tables.extend(hist_tables);
    Ok(Outcome {
        tables,
        summary: json!({ "points": summary }),
    })
}

fn calibrate(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let spec = cfg.calibration.as_ref().expect("validated");
    let amplitudes: Vec<_> = spec.amplitudes.iter().map(|a| a.value()).collect();
    let gamma = cfg.loss.gamma[0];
    let intensity: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let planned =
        plan_shots(spec.accuracy, spec.confidence, intensity).ctx("calibration planner")?;
    let n_shots = if cfg.shots > 0 {
        cfg.shots
    } else {
        usize::try_from(planned)
            .map_err(|_| CliError::Numeric(format!("planned shot count {planned} is too large")))?
    };
    let probe = ProbeConfig::new(amplitudes, n_shots);
    let device = Device::new(gamma).ctx("loss.gamma")?;
    let mut table = Table::new(
        None,
        &[
            "experiment",
            "seed",
            "n_shots",
            "gamma",
            "gamma_hat",
            "abs_error",
            "within_accuracy",
            "empirical_variance",
            "poisson_variance",
            "formula_variance",
        ],
    );
    let mut within = 0usize;
    let mut hats = Vec::new();
    for e in 0..cfg.experiments as u64 {
        let seed = derive_seed(cfg.seed, "calibrate", e);
        let est =
            estimate_gamma(&probe, &device, seed).ctx(&format!("calibration experiment {e}"))?;
        let err = (est.gamma_hat - gamma).abs();
        within += (err < spec.accuracy) as usize;
        hats.push(est.gamma_hat);
        table.push(vec![
            e.into(),
            seed.into(),
            n_shots.into(),
            gamma.into(),
            est.gamma_hat.into(),
            err.into(),
            (err < spec.accuracy).into(),
            est.variance.into(),
            poisson_variance(gamma, n_shots, intensity).into(),
            variance_formula(gamma, n_shots, intensity).into(),
        ]);
    }
    let summary = json!({
        "planned_shots": planned,
        "shots_used": n_shots,
        "total_intensity": intensity,
        "mean_gamma_hat": mean_of(hats.iter().copied()),
        "fraction_within_accuracy": within as f64 / cfg.experiments as f64,
        "required_confidence": spec.confidence,
    });
    Ok(Outcome {
        tables: vec![table],
        summary,
    })
}
