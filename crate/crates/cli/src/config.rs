use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use photon_qec::protocol::{JSet, StateFamily};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    BiasSweep,
    OverheadSweep,
    MismatchSweep,
    Shots,
    CatMc,
    EcsMc,
    TmsvCov,
    Calibrate,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::BiasSweep => "bias-sweep",
            ExperimentKind::OverheadSweep => "overhead-sweep",
            ExperimentKind::MismatchSweep => "mismatch-sweep",
            ExperimentKind::Shots => "shots",
            ExperimentKind::CatMc => "cat-mc",
            ExperimentKind::EcsMc => "ecs-mc",
            ExperimentKind::TmsvCov => "tmsv-cov",
            ExperimentKind::Calibrate => "calibrate",
        }
    }

    fn samples(self) -> bool {
        matches!(
            self,
            ExperimentKind::Shots | ExperimentKind::EcsMc | ExperimentKind::TmsvCov
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family", deny_unknown_fields)]
pub enum StateSpec {
    Squeezed {
        r: f64,
    },
    Tmsv {
        r: f64,
    },
    Cat {
        alpha: f64,
        #[serde(default)]
        phi: f64,
    },
    /// `beta` defaults to `alpha`.
    Ecs {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default = "minus_one")]
        sign: f64,
    },
    Coherent {
        alpha: Vec<f64>,
    },
    SinglePhoton,
    Fock {
        occupation: Vec<usize>,
    },
    DualRail {
        rails: usize,
    },
}

fn minus_one() -> f64 {
    -1.0
}

impl StateSpec {
    pub fn num_modes(&self) -> usize {
        match self {
            StateSpec::Squeezed { .. } | StateSpec::Cat { .. } | StateSpec::SinglePhoton => 1,
            StateSpec::Tmsv { .. } | StateSpec::Ecs { .. } => 2,
            StateSpec::Coherent { alpha } => alpha.len(),
            StateSpec::Fock { occupation } => occupation.len(),
            StateSpec::DualRail { rails } => 2 * rails,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            StateSpec::Squeezed { .. } => "squeezed",
            StateSpec::Tmsv { .. } => "tmsv",
            StateSpec::Cat { .. } => "cat",
            StateSpec::Ecs { .. } => "ecs",
            StateSpec::Coherent { .. } => "coherent",
            StateSpec::SinglePhoton => "single-photon",
            StateSpec::Fock { .. } => "fock",
            StateSpec::DualRail { .. } => "dual-rail",
        }
    }

    /// The Monte-Carlo family, for states that have a closed-form plan.
    pub fn monte_carlo_family(&self) -> Option<StateFamily> {
        match *self {
            StateSpec::SinglePhoton => Some(StateFamily::SinglePhoton),
            StateSpec::Cat { alpha, phi } => Some(StateFamily::Cat { alpha, phi }),
            StateSpec::Ecs { alpha, beta, sign } => Some(StateFamily::Ecs {
                alpha,
                beta: beta.unwrap_or(alpha),
                sign,
            }),
            StateSpec::DualRail { rails } => Some(StateFamily::DualRail { rails }),
            _ => None,
        }
    }

    /// The squeezing / amplitude parameter a series may override.
    pub fn with_parameter(&self, value: f64) -> Option<StateSpec> {
        match self {
            StateSpec::Squeezed { .. } => Some(StateSpec::Squeezed { r: value }),
            StateSpec::Tmsv { .. } => Some(StateSpec::Tmsv { r: value }),
            StateSpec::Cat { phi, .. } => Some(StateSpec::Cat {
                alpha: value,
                phi: *phi,
            }),
            StateSpec::Ecs { beta, sign, .. } => Some(StateSpec::Ecs {
                alpha: value,
                beta: beta.map(|_| value),
                sign: *sign,
            }),
            StateSpec::Coherent { alpha } => Some(StateSpec::Coherent {
                alpha: vec![value; alpha.len()],
            }),
            _ => None,
        }
    }

    pub fn parameter(&self) -> f64 {
        match self {
            StateSpec::Squeezed { r } | StateSpec::Tmsv { r } => *r,
            StateSpec::Cat { alpha, .. } | StateSpec::Ecs { alpha, .. } => *alpha,
            StateSpec::Coherent { alpha } => alpha.first().copied().unwrap_or(f64::NAN),
            _ => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec {
    /// Mean loss per mode.
    pub gamma: Vec<f64>,
    /// Per-shot standard deviation as a fraction of the mean; 0 means fixed loss.
    #[serde(default)]
    pub sd_fraction: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_bins() -> usize {
    photon_qec::protocol::DEFAULT_BINS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSpec {
    Values(Vec<f64>),
    Keyword(MuKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuKeyword {
    Optimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum ObservableSpec {
    ProjectorOnInitial,
    Number { mode: usize },
    QuadratureCovarianceEntry { k: usize, l: usize },
    Custom { path: PathBuf },
}

/// One curve of a sweep: overrides applied to the base config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Squeezing `r` or coherent amplitude `α`, depending on the state family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_parameter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<MuSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumed_gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    pub fn value(&self) -> photon_qec::Complex64 {
        match *self {
            Amplitude::Real(re) => photon_qec::Complex64::new(re, 0.0),
            Amplitude::Complex([re, im]) => photon_qec::Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    /// Probe amplitudes `α_i`, real or `[re, im]`.
    pub amplitudes: Vec<Amplitude>,
    #[serde(default = "default_accuracy")]
    pub accuracy: f64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

fn default_accuracy() -> f64 {
    0.01
}

fn default_confidence() -> f64 {
    0.99
}

fn default_experiments() -> usize {
    1
}

fn default_histogram_bins() -> usize {
    30
}

fn default_j_set() -> JSet {
    JSet::local(3)
}

fn default_observable() -> ObservableSpec {
    ObservableSpec::ProjectorOnInitial
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub experiment: ExperimentKind,
    pub state: StateSpec,
    pub loss: LossSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<MuSpec>,
    #[serde(default = "default_j_set")]
    pub j_set: JSet,
    #[serde(default = "default_observable")]
    pub observable: ObservableSpec,
    /// Highest photon number kept per mode.
    pub cutoffs: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leakage_tolerance: Option<f64>,
    /// Shots per experiment; for `calibrate`, 0 means "use the Chebyshev planner".
    #[serde(default)]
    pub shots: usize,
    #[serde(default = "default_experiments")]
    pub experiments: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default = "default_histogram_bins")]
    pub histogram_bins: usize,
    /// Also write a histogram of the per-shot loss parameters (Monte-Carlo runs).
    #[serde(default)]
    pub gamma_histogram: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSpec>,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub shots: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub experiments: Option<usize>,
}

impl ExperimentConfig {
    /// Parse a config, or a run manifest carrying one under `config`.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::config(format!("invalid JSON: {e}")))?;
        let value = match value {
            serde_json::Value::Object(mut map)
                if map.contains_key("config") && !map.contains_key("experiment") =>
            {
                map.remove("config").unwrap_or_default()
            }
            other => other,
        };
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." {
                "<root>".to_string()
            } else {
                path
            };
            CliError::config(format!("{path}: {}", e.inner()))
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        // custom observable paths are relative to the config file
        if let ObservableSpec::Custom { path: obs } = &mut cfg.observable {
            if obs.is_relative() {
                if let Some(dir) = path.parent() {
                    *obs = dir.join(&*obs);
                }
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.shots {
            self.shots = s;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = &o.output {
            self.output = Some(p.clone());
        }
        if let Some(e) = o.experiments {
            self.experiments = e;
        }
    }

    pub fn num_modes(&self) -> usize {
        self.state.num_modes()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| PathBuf::from("results").join(&self.name))
    }

    /// The series of a sweep; a single unnamed series when none are listed.
    pub fn series(&self) -> Vec<SeriesSpec> {
        if self.sweep.series.is_empty() {
            vec![SeriesSpec::default()]
        } else {
            self.sweep.series.clone()
        }
    }

    /// Apply a series' overrides, returning the effective state, loss, μ and J-set.
    pub fn resolve(&self, s: &SeriesSpec) -> Resolved {
        let state = s
            .state_parameter
            .and_then(|p| self.state.with_parameter(p))
            .unwrap_or_else(|| self.state.clone());
        let gamma = s.gamma.clone().unwrap_or_else(|| self.loss.gamma.clone());
        let j_set = match (s.j_max, &self.j_set) {
            (Some(j), JSet::Global { .. }) => JSet::global(j),
            (Some(j), _) => JSet::local(j),
            (None, js) => js.clone(),
        };
        let label = s.label.clone().unwrap_or_else(|| {
            let mut l = format!("{}={}", state_parameter_name(&state), state.parameter());
            let _ = write!(l, ",gamma={}", join(&gamma));
            if let Some(j) = s.j_max {
                let _ = write!(l, ",j_max={j}");
            }
            l
        });
        Resolved {
            label,
            state,
            gamma,
            mu: s.mu.clone().or_else(|| self.mu.clone()),
            j_set,
        }
    }

    /// Every problem with the config, each prefixed by its field path.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Validator::default();
        let modes = self.num_modes();
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            v.err("name", "must be a non-empty file-name-safe string");
        }
        self.validate_state(&mut v, "state", &self.state);
        v.gammas("loss.gamma", &self.loss.gamma, modes);
        if !(self.loss.sd_fraction >= 0.0 && self.loss.sd_fraction.is_finite()) {
            v.err(
                "loss.sd_fraction",
                format!("must be >= 0, got {}", self.loss.sd_fraction),
            );
        }
        if self.loss.bins == 0 {
            v.err("loss.bins", "must be >= 1");
        }
        if let Some(mu) = &self.mu {
            v.mu("mu", mu, modes);
        }
        if self.cutoffs.len() != modes {
            v.err(
                "cutoffs",
                format!(
                    "expected {modes} entries for a {} state, got {}",
                    self.state.family(),
                    self.cutoffs.len()
                ),
            );
        }
        for (i, &c) in self.cutoffs.iter().enumerate() {
            if c < 2 {
                v.err(&format!("cutoffs[{i}]"), format!("must be >= 2, got {c}"));
            }
        }
        if let Some(t) = self.leakage_tolerance {
            if !(t > 0.0 && t < 1.0) {
                v.err("leakage_tolerance", format!("must lie in (0, 1), got {t}"));
            }
        }
        if let Err(e) = self.j_set.validate(modes) {
            v.err("j_set", e.to_string());
        }
        match &self.observable {
            ObservableSpec::ProjectorOnInitial => {}
            ObservableSpec::Number { mode } => {
                if *mode >= modes {
                    v.err("observable.mode", format!("must be < {modes}, got {mode}"));
                }
            }
            ObservableSpec::QuadratureCovarianceEntry { k, l } => {
                for (name, x) in [("k", k), ("l", l)] {
                    if *x >= modes {
                        v.err(
                            &format!("observable.{name}"),
                            format!("must be < {modes}, got {x}"),
                        );
                    }
                }
            }
            ObservableSpec::Custom { path } => {
                if !path.is_file() {
                    v.err(
                        "observable.path",
                        format!("file {} does not exist", path.display()),
                    );
                }
            }
        }
        if self.experiments == 0 {
            v.err("experiments", "must be >= 1");
        }
        if self.histogram_bins == 0 {
            v.err("histogram_bins", "must be >= 1");
        }
        if self.experiment.samples() && self.shots == 0 {
            v.err(
                "shots",
                format!("{} needs shots >= 1", self.experiment.as_str()),
            );
        }
        self.validate_sweep(&mut v, modes);
        self.validate_kind(&mut v);
        v.errors
    }

    fn validate_state(&self, v: &mut Validator, path: &str, s: &StateSpec) {
        match s {
            StateSpec::Squeezed { r } | StateSpec::Tmsv { r } => {
                v.finite_nonneg(&format!("{path}.r"), *r)
            }
            StateSpec::Cat { alpha, phi } => {
                v.finite(&format!("{path}.alpha"), *alpha);
                v.finite(&format!("{path}.phi"), *phi);
            }
            StateSpec::Ecs { alpha, beta, sign } => {
                v.finite(&format!("{path}.alpha"), *alpha);
                if let Some(b) = beta {
                    v.finite(&format!("{path}.beta"), *b);
                }
                if *sign != 1.0 && *sign != -1.0 {
                    v.err(
                        &format!("{path}.sign"),
                        format!("must be +1 or -1, got {sign}"),
                    );
                }
            }
            StateSpec::Coherent { alpha } => {
                if alpha.is_empty() {
                    v.err(&format!("{path}.alpha"), "needs at least one mode");
                }
                for (i, a) in alpha.iter().enumerate() {
                    v.finite(&format!("{path}.alpha[{i}]"), *a);
                }
            }
            StateSpec::SinglePhoton => {}
            StateSpec::Fock { occupation } => {
                if occupation.is_empty() {
                    v.err(&format!("{path}.occupation"), "needs at least one mode");
                }
                for (i, &n) in occupation.iter().enumerate() {
                    if let Some(&c) = self.cutoffs.get(i) {
                        if n > c {
                            v.err(
                                &format!("{path}.occupation[{i}]"),
                                format!("{n} exceeds cutoff {c}"),
                            );
                        }
                    }
                }
            }
            StateSpec::DualRail { rails } => {
                if *rails == 0 {
                    v.err(&format!("{path}.rails"), "must be >= 1");
                }
            }
        }
    }

    fn validate_sweep(&self, v: &mut Validator, modes: usize) {
        let sw = &self.sweep;
        let nonempty = |v: &mut Validator, name: &str, len: Option<usize>| {
            if len == Some(0) {
                v.err(&format!("sweep.{name}"), "empty sweep list");
            }
        };
        nonempty(v, "j_max", sw.j_max.as_ref().map(Vec::len));
        nonempty(v, "mu", sw.mu.as_ref().map(Vec::len));
        nonempty(v, "assumed_gamma", sw.assumed_gamma.as_ref().map(Vec::len));
        nonempty(v, "alpha", sw.alpha.as_ref().map(Vec::len));
        nonempty(v, "gamma", sw.gamma.as_ref().map(Vec::len));
        for (i, m) in sw.mu.iter().flatten().enumerate() {
            v.unit(&format!("sweep.mu[{i}]"), "μ", *m);
        }
        for (i, g) in sw.assumed_gamma.iter().flatten().enumerate() {
            v.unit(&format!("sweep.assumed_gamma[{i}]"), "γ", *g);
        }
        for (i, g) in sw.gamma.iter().flatten().enumerate() {
            v.unit(&format!("sweep.gamma[{i}]"), "γ", *g);
        }
        for (i, a) in sw.alpha.iter().flatten().enumerate() {
            v.finite(&format!("sweep.alpha[{i}]"), *a);
        }
        for (i, s) in sw.series.iter().enumerate() {
            let p = format!("sweep.series[{i}]");
            if let Some(g) = &s.gamma {
                v.gammas(&format!("{p}.gamma"), g, modes);
            }
            if let Some(mu) = &s.mu {
                v.mu(&format!("{p}.mu"), mu, modes);
            }
            if let Some(x) = s.state_parameter {
                match self.state.with_parameter(x) {
                    Some(st) => self.validate_state(v, &format!("{p}.state_parameter"), &st),
                    None => v.err(
                        &format!("{p}.state_parameter"),
                        format!("a {} state has no sweepable parameter", self.state.family()),
                    ),
                }
            }
            if let Some(j) = s.j_max {
                if let Err(e) = JSet::local(j).validate(modes) {
                    v.err(&format!("{p}.j_max"), e.to_string());
                }
            }
        }
    }

    fn validate_kind(&self, v: &mut Validator) {
        use ExperimentKind::*;
        let require = |v: &mut Validator, name: &str, present: bool| {
            if !present {
                v.err(
                    &format!("sweep.{name}"),
                    format!("required for {}", self.experiment.as_str()),
                );
            }
        };
        match self.experiment {
            BiasSweep => require(v, "j_max", self.sweep.j_max.is_some()),
            OverheadSweep => require(v, "mu", self.sweep.mu.is_some()),
            MismatchSweep => require(v, "assumed_gamma", self.sweep.assumed_gamma.is_some()),
            Shots => {}
            CatMc => {
                if !matches!(self.state, StateSpec::Cat { .. }) {
                    v.err(
                        "state.family",
                        format!("cat-mc needs a cat state, got {}", self.state.family()),
                    );
                }
            }
            EcsMc => {
                if self.state.monte_carlo_family().is_none() {
                    v.err(
                        "state.family",
                        format!(
                            "ecs-mc needs ecs, cat, single-photon or dual-rail, got {}",
                            self.state.family()
                        ),
                    );
                }
            }
            TmsvCov => {
                if !matches!(self.state, StateSpec::Tmsv { .. }) {
                    v.err(
                        "state.family",
                        format!("tmsv-cov needs a tmsv state, got {}", self.state.family()),
                    );
                }
            }
            Calibrate => match &self.calibration {
                None => v.err("calibration", "required for calibrate"),
                Some(c) => {
                    if c.amplitudes.is_empty() {
                        v.err("calibration.amplitudes", "needs at least one probe mode");
                    }
                    let m: f64 = c.amplitudes.iter().map(|a| a.value().norm_sqr()).sum();
                    if !(m > 0.0 && m.is_finite()) {
                        v.err(
                            "calibration.amplitudes",
                            "total probe intensity must be positive",
                        );
                    }
                    if !(c.accuracy > 0.0 && c.accuracy < 1.0) {
                        v.err(
                            "calibration.accuracy",
                            format!("must lie in (0, 1), got {}", c.accuracy),
                        );
                    }
                    if !(0.0..1.0).contains(&c.confidence) {
                        v.err(
                            "calibration.confidence",
                            format!("must lie in [0, 1), got {}", c.confidence),
                        );
                    }
                    if self.loss.gamma.iter().any(|&g| g != self.loss.gamma[0]) {
                        v.err(
                            "loss.gamma",
                            "calibration assumes uniform loss across modes",
                        );
                    }
                }
            },
        }
        if self.experiment != Calibrate && self.calibration.is_some() {
            v.err(
                "calibration",
                format!("only used by calibrate, not {}", self.experiment.as_str()),
            );
        }
    }

    /// Human-readable summary printed by `validate`.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "experiment: {} ({})",
            self.name,
            self.experiment.as_str()
        );
        let _ = writeln!(
            s,
            "state: {}",
            serde_json::to_string(&self.state).unwrap_or_default()
        );
        let _ = writeln!(
            s,
            "loss: γ̄ = ({}), sd = {}·γ̄, {} bins",
            join(&self.loss.gamma),
            self.loss.sd_fraction,
            self.loss.bins
        );
        for (i, series) in self.sweep.series.iter().enumerate() {
            let r = self.resolve(series);
            let _ = writeln!(s, "series {i}: {} γ̄ = ({})", r.label, join(&r.gamma));
        }
        if let Some(mu) = &self.mu {
            let _ = writeln!(s, "mu: {}", serde_json::to_string(mu).unwrap_or_default());
        }
        let _ = writeln!(
            s,
            "j_set: {}",
            serde_json::to_string(&self.j_set).unwrap_or_default()
        );
        let _ = writeln!(s, "cutoffs: {:?}", self.cutoffs);
        let _ = writeln!(
            s,
            "shots: {} × {} experiments, seed {}",
            self.shots, self.experiments, self.seed
        );
        let _ = write!(s, "output: {}", self.output_dir().display());
        s
    }
}

/// A series with its overrides applied.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub label: String,
    pub state: StateSpec,
    pub gamma: Vec<f64>,
    pub mu: Option<MuSpec>,
    pub j_set: JSet,
}

fn state_parameter_name(s: &StateSpec) -> &'static str {
    match s {
        StateSpec::Squeezed { .. } | StateSpec::Tmsv { .. } => "r0",
        _ => "alpha",
    }
}

pub(crate) fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Default)]
struct Validator {
    errors: Vec<String>,
}

impl Validator {
    fn err(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn finite(&mut self, path: &str, x: f64) {
        if !x.is_finite() {
            self.err(path, format!("must be finite, got {x}"));
        }
    }

    fn finite_nonneg(&mut self, path: &str, x: f64) {
        if !(x.is_finite() && x >= 0.0) {
            self.err(path, format!("must be finite and >= 0, got {x}"));
        }
    }

    fn unit(&mut self, path: &str, symbol: &str, x: f64) {
        if !(0.0..1.0).contains(&x) {
            self.err(path, format!("must lie in {symbol} ∈ [0, 1), got {x}"));
        }
    }

    fn gammas(&mut self, path: &str, g: &[f64], modes: usize) {
        if g.len() != modes {
            self.err(
                path,
                format!("expected {modes} entries (one per mode), got {}", g.len()),
            );
        }
        for (i, &x) in g.iter().enumerate() {
            self.unit(&format!("{path}[{i}]"), "γ", x);
        }
    }

    fn mu(&mut self, path: &str, mu: &MuSpec, modes: usize) {
        if let MuSpec::Values(m) = mu {
            if m.len() != modes {
                self.err(
                    path,
                    format!("expected {modes} entries (one per mode), got {}", m.len()),
                );
            }
            for (i, &x) in m.iter().enumerate() {
                self.unit(&format!("{path}[{i}]"), "μ", x);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "name": "t",
            "experiment": "bias-sweep",
            "state": {"family": "squeezed", "r": 1.0},
            "loss": {"gamma": [0.1]},
            "cutoffs": [60],
            "sweep": {"j_max": [0, 1, 2]}
        })
    }

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(&base().to_string()).unwrap();
        assert_eq!(cfg.j_set, JSet::local(3));
        assert_eq!(cfg.observable, ObservableSpec::ProjectorOnInitial);
        assert_eq!(cfg.experiments, 1);
        assert!(cfg.validate().is_empty());
    }

    #[test]
    fn parse_errors_carry_paths() {
        let mut v = base();
        v["loss"]["gamma"][0] = serde_json::json!("x");
        let err = ExperimentConfig::from_json(&v.to_string())
            .unwrap_err()
            .to_string();
        assert!(err.contains("loss.gamma[0]"), "{err}");
        let mut v = base();
        v["bogus"] = serde_json::json!(1);
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn validation_reports_every_problem() {
        let mut v = base();
        v["loss"]["gamma"] = serde_json::json!([1.0]);
        v["sweep"]["j_max"] = serde_json::json!([]);
        v["cutoffs"] = serde_json::json!([60, 60]);
        let errs = ExperimentConfig::from_json(&v.to_string())
            .unwrap()
            .validate();
        assert!(errs
            .iter()
            .any(|e| e.starts_with("loss.gamma[0]") && e.contains("γ ∈ [0, 1)")));
        assert!(errs
            .iter()
            .any(|e| e.starts_with("sweep.j_max") && e.contains("empty")));
        assert!(errs.iter().any(|e| e.starts_with("cutoffs")));
    }

    #[test]
    fn mu_accepts_values_or_optimize() {
        let mut v = base();
        v["mu"] = serde_json::json!("optimize");
        let cfg = ExperimentConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(cfg.mu, Some(MuSpec::Keyword(MuKeyword::Optimize)));
        v["mu"] = serde_json::json!([0.1]);
        let cfg = ExperimentConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(cfg.mu, Some(MuSpec::Values(vec![0.1])));
    }

    #[test]
    fn manifest_wrapper_is_unwrapped() {
        let wrapped = serde_json::json!({"tool": "photon-qec", "config": base()});
        let cfg = ExperimentConfig::from_json(&wrapped.to_string()).unwrap();
        assert_eq!(cfg.name, "t");
    }

    #[test]
    fn series_overrides() {
        let mut v = base();
        v["sweep"]["series"] =
            serde_json::json!([{"state_parameter": 0.5, "gamma": [0.2], "j_max": 1}]);
        let cfg = ExperimentConfig::from_json(&v.to_string()).unwrap();
        let r = cfg.resolve(&cfg.series()[0]);
        assert_eq!(r.state, StateSpec::Squeezed { r: 0.5 });
        assert_eq!(r.gamma, vec![0.2]);
        assert_eq!(r.j_set, JSet::local(1));
        assert_eq!(r.label, "r0=0.5,gamma=0.2,j_max=1");
    }
}
