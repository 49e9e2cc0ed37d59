//! Shot-level simulation.
//!
//! A run has three phases, each deterministic given the master seed:
//!
//! 1. per batch, draw the loss bins and the source (herald pattern or Monte-Carlo state);
//! 2. build one outcome sampler per distinct source (and, for observables whose
//!    distribution depends on the loss, per distinct loss bin);
//! 3. per batch, draw the measurement outcomes.
//!
//! Batches use sub-seeds derived from `(seed, stage, batch)`, so results do not depend
//! on scheduling or on [`Execution`].

use std::collections::BTreeMap;

use super::gamma::{cumulative, sample_cdf, GammaDistribution, GammaTable};
use super::heralding::HeraldingSetup;
use super::jset::JSet;
use super::observable::{Dynamics, Observable, OutcomeSampler, PreparedObservable};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock::FockState;
use crate::seed::stage_rng;

pub const DEFAULT_BATCH_SIZE: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub shot_index: u64,
    pub sampled_gamma: Vec<f64>,
    /// Detected photons per tap-off (or the source index for Monte-Carlo runs).
    pub herald_pattern: Vec<usize>,
    /// `NaN` for discarded shots.
    pub observable_value: f64,
    pub discarded: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ShotOptions {
    pub n_shots: usize,
    pub seed: u64,
    pub batch_size: usize,
    pub execution: Execution,
}

impl ShotOptions {
    pub fn new(n_shots: usize, seed: u64) -> Self {
        Self {
            n_shots,
            seed,
            batch_size: DEFAULT_BATCH_SIZE,
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }
}

/// Something that prepares one of finitely many states per shot.
pub(crate) trait ShotSource: Sync {
    fn cdf(&self) -> &[f64];
    fn label(&self, index: usize) -> Vec<usize>;
    fn kept(&self, index: usize) -> bool;
    fn state(&self, index: usize) -> Result<Option<FockState>>;
}

struct HeraldSource<'a> {
    setup: &'a HeraldingSetup,
    j_set: Option<&'a JSet>,
    cdf: Vec<f64>,
}

impl ShotSource for HeraldSource<'_> {
    fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    fn label(&self, index: usize) -> Vec<usize> {
        self.setup.space().occupation(index)
    }

    fn kept(&self, index: usize) -> bool {
        self.j_set.is_none_or(|j| j.contains(&self.label(index)))
    }

    fn state(&self, index: usize) -> Result<Option<FockState>> {
        self.setup.heralded_state(&self.label(index))
    }
}

/// A fixed list of states drawn with given probabilities.
pub(crate) struct ListSource<'a> {
    pub states: &'a [FockState],
    pub cdf: Vec<f64>,
}

impl ShotSource for ListSource<'_> {
    fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    fn label(&self, index: usize) -> Vec<usize> {
        vec![index]
    }

    fn kept(&self, _index: usize) -> bool {
        true
    }

    fn state(&self, index: usize) -> Result<Option<FockState>> {
        Ok(Some(self.states[index].clone()))
    }
}

struct Selection {
    source: u32,
    bins: Vec<u16>,
}

/// Heralded shots on the amplified state: each shot draws a loss value from `gamma`,
/// a subtraction pattern from the herald distribution, and one outcome of `observable`
/// on `U Λ_γ[E_j[ρ₀]] U†`. Patterns outside `j_set` are recorded as discarded.
///
/// Herald statistics only involve the amplifier and the tap-off, which act before the
/// loss, so they do not depend on the per-shot loss value.
pub fn simulate_shots(
    setup: &HeraldingSetup,
    dynamics: &Dynamics,
    observable: &Observable,
    gamma: &GammaDistribution,
    j_set: Option<&JSet>,
    opts: &ShotOptions,
) -> Result<Vec<ShotRecord>> {
    let space = setup.space();
    if let Some(j) = j_set {
        j.validate(space.num_modes())?;
    }
    let source = HeraldSource {
        setup,
        j_set,
        cdf: cumulative(setup.herald_probabilities()),
    };
    run(
        &source,
        space.num_modes(),
        dynamics,
        observable,
        gamma,
        opts,
    )
}

/// [`simulate_shots`] once per seed (`opts.seed` is ignored), building each outcome
/// sampler only once.
pub fn simulate_shots_repeated(
    setup: &HeraldingSetup,
    dynamics: &Dynamics,
    observable: &Observable,
    gamma: &GammaDistribution,
    j_set: Option<&JSet>,
    opts: &ShotOptions,
    seeds: &[u64],
) -> Result<Vec<Vec<ShotRecord>>> {
    let space = setup.space();
    if let Some(j) = j_set {
        j.validate(space.num_modes())?;
    }
    let source = HeraldSource {
        setup,
        j_set,
        cdf: cumulative(setup.herald_probabilities()),
    };
    run_many(
        &source,
        space.num_modes(),
        dynamics,
        observable,
        gamma,
        opts,
        seeds,
    )
}

/// Shots on the unmitigated state `U Λ_γ[ρ₀] U†`.
pub fn simulate_unmitigated_shots(
    initial: &FockState,
    dynamics: &Dynamics,
    observable: &Observable,
    gamma: &GammaDistribution,
    opts: &ShotOptions,
) -> Result<Vec<ShotRecord>> {
    let states = [initial.normalized()?];
    let source = ListSource {
        states: &states,
        cdf: vec![1.0],
    };
    let mut records = run(
        &source,
        initial.space().num_modes(),
        dynamics,
        observable,
        gamma,
        opts,
    )?;
    for r in &mut records {
        r.herald_pattern = vec![0; initial.space().num_modes()];
    }
    Ok(records)
}

/// [`simulate_unmitigated_shots`] once per seed (`opts.seed` is ignored).
pub fn simulate_unmitigated_shots_repeated(
    initial: &FockState,
    dynamics: &Dynamics,
    observable: &Observable,
    gamma: &GammaDistribution,
    opts: &ShotOptions,
    seeds: &[u64],
) -> Result<Vec<Vec<ShotRecord>>> {
    let states = [initial.normalized()?];
    let source = ListSource {
        states: &states,
        cdf: vec![1.0],
    };
    let n = initial.space().num_modes();
    let mut runs = run_many(&source, n, dynamics, observable, gamma, opts, seeds)?;
    for r in runs.iter_mut().flatten() {
        r.herald_pattern = vec![0; n];
    }
    Ok(runs)
}

pub(crate) fn run(
    source: &dyn ShotSource,
    num_modes: usize,
    dynamics: &Dynamics,
    observable: &Observable,
    gamma: &GammaDistribution,
    opts: &ShotOptions,
) -> Result<Vec<ShotRecord>> {
    let mut runs = run_many(
        source,
        num_modes,
        dynamics,
        observable,
        gamma,
        opts,
        &[opts.seed],
    )?;
    Ok(runs.pop().unwrap_or_default())
}

/// One run per seed, sharing the outcome samplers between runs. Each run is identical to
/// a single run with that seed.
pub(crate) fn run_many(
    source: &dyn ShotSource,
    num_modes: usize,
    dynamics: &Dynamics,
    observable: &Observable,
    gamma: &GammaDistribution,
    opts: &ShotOptions,
    seeds: &[u64],
) -> Result<Vec<Vec<ShotRecord>>> {
    if gamma.num_modes() != num_modes {
        return Err(Error::SpaceMismatch(format!(
            "loss distribution has {} modes, state has {num_modes}",
            gamma.num_modes()
        )));
    }
    if opts.n_shots == 0 {
        return Ok(vec![Vec::new(); seeds.len()]);
    }
    let table = gamma.discretize()?;
    let first = source.state(first_kept(source).unwrap_or(0))?;
    let space = match &first {
        Some(s) => s.space().clone(),
        None => return Err(Error::DegenerateNormalization(0.0)),
    };
    let prepared = observable.prepare(&space, dynamics)?;
    let batch = opts.batch_size.max(1);
    let n_batches = opts.n_shots.div_ceil(batch);
    let exec = opts.execution;
    let shots_in = |b: usize| batch.min(opts.n_shots - b * batch);

    // phase 1: loss bins and sources
    let selections: Vec<Vec<Vec<Selection>>> = seeds
        .iter()
        .map(|&seed| {
            exec.map_range(n_batches, |b| {
                let mut rng = stage_rng(seed, "select", b as u64);
                (0..shots_in(b))
                    .map(|_| {
                        let mut bins = Vec::with_capacity(num_modes);
                        table.sample_bins(&mut rng, &mut bins);
                        let source = sample_cdf(source.cdf(), &mut rng) as u32;
                        Selection { source, bins }
                    })
                    .collect()
            })
        })
        .collect();

    // phase 2: one sampler per distinct key across all runs
    let by_gamma = prepared.depends_on_gamma();
    let mut keys: BTreeMap<(u32, Vec<u16>), usize> = BTreeMap::new();
    for s in selections.iter().flatten().flatten() {
        if source.kept(s.source as usize) {
            let bins = if by_gamma { s.bins.clone() } else { Vec::new() };
            let next = keys.len();
            keys.entry((s.source, bins)).or_insert(next);
        }
    }
    let mut ordered: Vec<((u32, Vec<u16>), usize)> =
        keys.iter().map(|(k, &v)| (k.clone(), v)).collect();
    ordered.sort_by_key(|(_, v)| *v);
    let samplers: Vec<Result<Option<OutcomeSampler>>> = exec.map(ordered, |((src, bins), _)| {
        build_sampler(source, &prepared, &table, src as usize, &bins, num_modes)
    });
    let samplers = samplers.into_iter().collect::<Result<Vec<_>>>()?;

    // phase 3: outcomes
    let mut out = Vec::with_capacity(seeds.len());
    for (&seed, per_seed) in seeds.iter().zip(selections) {
        let batches: Vec<Vec<ShotRecord>> = exec.map(
            per_seed.into_iter().enumerate().collect(),
            |(b, sel): (usize, Vec<Selection>)| {
                let mut rng = stage_rng(seed, "outcome", b as u64);
                sel.into_iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let shot_index = (b * batch + i) as u64;
                        let sampled_gamma = table.gamma_of(&s.bins);
                        let herald_pattern = source.label(s.source as usize);
                        let kept = source.kept(s.source as usize);
                        let mut value = f64::NAN;
                        if kept {
                            let bins = if by_gamma { s.bins } else { Vec::new() };
                            if let Some(sampler) = &samplers[keys[&(s.source, bins)]] {
                                value = sampler.sample(&mut rng, &sampled_gamma);
                            }
                        }
                        ShotRecord {
                            shot_index,
                            sampled_gamma,
                            herald_pattern,
                            observable_value: value,
                            discarded: !kept,
                        }
                    })
                    .collect()
            },
        );
        out.push(batches.into_iter().flatten().collect());
    }
    Ok(out)
}

fn first_kept(source: &dyn ShotSource) -> Option<usize> {
    let cdf = source.cdf();
    (0..cdf.len()).find(|&i| source.kept(i))
}

fn build_sampler(
    source: &dyn ShotSource,
    prepared: &PreparedObservable,
    table: &GammaTable,
    index: usize,
    bins: &[u16],
    num_modes: usize,
) -> Result<Option<OutcomeSampler>> {
    let Some(state) = source.state(index)? else {
        return Ok(None);
    };
    let gamma = if bins.is_empty() {
        vec![0.0; num_modes]
    } else {
        table.gamma_of(bins)
    };
    prepared.sampler(&state, &gamma).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::LossParams;
    use crate::fock::{factories, FockSpace};

    fn squeezed_setup() -> HeraldingSetup {
        let s = FockSpace::single(40).unwrap();
        let sq = factories::squeezed_vacuum(&s, 0.5).unwrap();
        HeraldingSetup::new(&sq, &LossParams::new(&[0.1]).unwrap(), &[0.1]).unwrap()
    }

    #[test]
    fn trivial_runs() {
        let s = FockSpace::single(25).unwrap();
        let c = factories::coherent_state(&s, &[crate::Complex64::new(0.8, 0.0)]).unwrap();
        let setup = HeraldingSetup::new(&c, &LossParams::new(&[0.0]).unwrap(), &[0.0]).unwrap();
        let obs = Observable::fidelity(&c);
        let g = GammaDistribution::fixed(&[0.0]);
        let recs = simulate_shots(
            &setup,
            &Dynamics::Identity,
            &obs,
            &g,
            None,
            &ShotOptions::new(500, 1),
        )
        .unwrap();
        assert!(recs
            .iter()
            .all(|r| r.observable_value == 1.0 && r.herald_pattern == [0]));
        let none = simulate_shots(
            &setup,
            &Dynamics::Identity,
            &obs,
            &g,
            None,
            &ShotOptions::new(0, 1),
        )
        .unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn deterministic_and_schedule_independent() {
        let setup = squeezed_setup();
        let obs = Observable::Quadrature {
            powers: vec![2],
            scale: 2.0,
        };
        let g = GammaDistribution::gaussian(&[0.1], 0.1);
        let j = JSet::local(2);
        let base = ShotOptions::new(3000, 42).with_batch_size(700);
        let a = simulate_shots(&setup, &Dynamics::Identity, &obs, &g, Some(&j), &base).unwrap();
        let b = simulate_shots(
            &setup,
            &Dynamics::Identity,
            &obs,
            &g,
            Some(&j),
            &base.with_execution(Execution::Sequential),
        )
        .unwrap();
        assert_eq!(a.len(), 3000);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.herald_pattern, y.herald_pattern);
            assert_eq!(x.sampled_gamma, y.sampled_gamma);
            assert_eq!(x.observable_value.to_bits(), y.observable_value.to_bits());
        }
        for r in &a {
            assert_eq!(r.discarded, r.herald_pattern[0] > 2);
            assert_eq!(r.discarded, r.observable_value.is_nan());
        }
        let c = simulate_shots(
            &setup,
            &Dynamics::Identity,
            &obs,
            &g,
            Some(&j),
            &ShotOptions::new(3000, 43),
        )
        .unwrap();
        assert!(a
            .iter()
            .zip(&c)
            .any(|(x, y)| x.observable_value != y.observable_value));
    }

    #[test]
    fn repeated_runs_match_single_runs() {
        let setup = squeezed_setup();
        let obs = Observable::Quadrature {
            powers: vec![2],
            scale: 2.0,
        };
        let g = GammaDistribution::gaussian(&[0.1], 0.1);
        let j = JSet::local(2);
        let opts = ShotOptions::new(2000, 0).with_batch_size(300);
        let seeds = [5, 6, 7];
        let many = simulate_shots_repeated(
            &setup,
            &Dynamics::Identity,
            &obs,
            &g,
            Some(&j),
            &opts,
            &seeds,
        )
        .unwrap();
        assert_eq!(many.len(), 3);
        for (run, &seed) in many.iter().zip(&seeds) {
            let single = simulate_shots(
                &setup,
                &Dynamics::Identity,
                &obs,
                &g,
                Some(&j),
                &ShotOptions { seed, ..opts },
            )
            .unwrap();
            assert_eq!(run.len(), single.len());
            for (x, y) in run.iter().zip(&single) {
                assert_eq!(
                    (&x.herald_pattern, &x.sampled_gamma),
                    (&y.herald_pattern, &y.sampled_gamma)
                );
                assert_eq!(x.observable_value.to_bits(), y.observable_value.to_bits());
            }
        }
        let raw = simulate_unmitigated_shots_repeated(
            setup.initial(),
            &Dynamics::Identity,
            &obs,
            &g,
            &opts,
            &seeds[..1],
        )
        .unwrap();
        let single = simulate_unmitigated_shots(
            setup.initial(),
            &Dynamics::Identity,
            &obs,
            &g,
            &ShotOptions { seed: 5, ..opts },
        )
        .unwrap();
        assert_eq!(raw[0].len(), single.len());
        assert!(raw[0]
            .iter()
            .zip(&single)
            .all(|(a, b)| a.observable_value.to_bits() == b.observable_value.to_bits()));
    }
}
