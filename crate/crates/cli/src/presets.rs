//! Built-in configurations reproducing the figure set at desk scale.

use serde_json::{json, Value};

use crate::config::ExperimentConfig;

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// Rough wall-clock budget on a laptop-class machine with the default thread pool.
    pub budget: &'static str,
    build: fn() -> Value,
}

impl Preset {
    pub fn config(&self) -> ExperimentConfig {
        serde_json::from_value(self.build_value()).expect("built-in presets are valid")
    }

    pub fn build_value(&self) -> Value {
        (self.build)()
    }
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    // round to the grid's decimal resolution so values print cleanly
    (0..=n)
        .map(|k| ((start + k as f64 * step) * 1e6).round() / 1e6)
        .collect()
}

fn fig2() -> Value {
    let mut series: Vec<Value> = [0.05, 0.1, 0.15, 0.2]
        .iter()
        .map(|g| json!({"label": format!("a: r0=1,gamma={g}"), "state_parameter": 1.0, "gamma": [g]}))
        .collect();
    series.extend([0.5, 0.75, 1.0, 1.33].iter().map(
        |r| json!({"label": format!("b: r0={r},gamma=0.1"), "state_parameter": r, "gamma": [0.1]}),
    ));
    json!({
        "name": "fig2",
        "experiment": "bias-sweep",
        "state": {"family": "squeezed", "r": 1.0},
        "loss": {"gamma": [0.1]},
        "cutoffs": [800],
        "sweep": {"j_max": [0, 1, 2, 3, 4, 5, 6], "series": series},
        "seed": 2
    })
}

fn fig3() -> Value {
    let series: Vec<Value> = [(0.75, 1), (1.0, 2), (1.1, 3), (1.2, 3)]
        .iter()
        .map(|(r, j)| json!({"label": format!("r0={r},j_max={j}"), "state_parameter": r, "j_max": j}))
        .collect();
    json!({
        "name": "fig3",
        "experiment": "overhead-sweep",
        "state": {"family": "squeezed", "r": 1.0},
        "loss": {"gamma": [0.1]},
        "cutoffs": [600],
        "sweep": {"mu": grid(0.005, 0.5, 0.005), "series": series},
        "seed": 3
    })
}

fn fig4() -> Value {
    json!({
        "name": "fig4",
        "experiment": "mismatch-sweep",
        "state": {"family": "squeezed", "r": 1.0},
        "loss": {"gamma": [0.1]},
        "j_set": {"kind": "local", "j_max": 3},
        "cutoffs": [800],
        "sweep": {"assumed_gamma": grid(0.0, 0.2, 0.0025)},
        "seed": 4
    })
}

fn fig5() -> Value {
    json!({
        "name": "fig5",
        "experiment": "cat-mc",
        "state": {"family": "cat", "alpha": 1.0, "phi": 0.0},
        "loss": {"gamma": [0.1]},
        "cutoffs": [40],
        "sweep": {"alpha": grid(0.05, 3.0, 0.05), "gamma": grid(0.0, 0.5, 0.01)},
        "seed": 5
    })
}

fn fig6() -> Value {
    json!({
        "name": "fig6",
        "experiment": "tmsv-cov",
        "state": {"family": "tmsv", "r": 0.75},
        "loss": {"gamma": [0.15, 0.15], "sd_fraction": 0.1, "bins": 21},
        "mu": [0.105, 0.105],
        "j_set": {"kind": "local", "j_max": 3},
        "cutoffs": [72, 72],
        "shots": 100000,
        "experiments": 20,
        "histogram_bins": 20,
        "seed": 6
    })
}

fn tmsv_bias() -> Value {
    let series: Vec<Value> = [(0.5, 0.1, 0.1), (0.75, 0.15, 0.15), (1.0, 0.1, 0.1), (1.0, 0.05, 0.15), (0.75, 0.05, 0.05)]
        .iter()
        .map(|(r, g1, g2)| json!({"label": format!("({r}, {g1}, {g2})"), "state_parameter": r, "gamma": [g1, g2]}))
        .collect();
    json!({
        "name": "tmsv-bias",
        "experiment": "bias-sweep",
        "state": {"family": "tmsv", "r": 1.0},
        "loss": {"gamma": [0.1, 0.1]},
        "mu": "optimize",
        "j_set": {"kind": "local", "j_max": 1},
        "cutoffs": [180, 180],
        "sweep": {"j_max": [0, 1, 2, 3, 4], "series": series},
        "seed": 9
    })
}

fn fig7() -> Value {
    json!({
        "name": "fig7",
        "experiment": "ecs-mc",
        "state": {"family": "ecs", "alpha": 1.0, "sign": -1.0},
        "loss": {"gamma": [0.2, 0.2], "sd_fraction": 0.1, "bins": 21},
        "cutoffs": [45, 45],
        "shots": 20000,
        "experiments": 10,
        "sweep": {
            "alpha": grid(0.25, 2.0, 0.25),
            "series": [
                {"label": "a: gamma=(0.2, 0.2)", "gamma": [0.2, 0.2]},
                {"label": "b: gamma=(0.5, 0.6)", "gamma": [0.5, 0.6]}
            ]
        },
        "seed": 7
    })
}

fn fig8() -> Value {
    json!({
        "name": "fig8",
        "experiment": "ecs-mc",
        "state": {"family": "ecs", "alpha": 1.0, "sign": -1.0},
        "loss": {"gamma": [0.5, 0.6], "sd_fraction": 0.1, "bins": 21},
        "cutoffs": [30, 30],
        "shots": 100000,
        "experiments": 1,
        "gamma_histogram": true,
        "seed": 8
    })
}

fn calibrate() -> Value {
    json!({
        "name": "calibrate",
        "experiment": "calibrate",
        "state": {"family": "coherent", "alpha": [1.0]},
        "loss": {"gamma": [0.1]},
        "cutoffs": [20],
        "experiments": 20,
        "calibration": {"amplitudes": [1.0], "accuracy": 0.01, "confidence": 0.99},
        "seed": 10
    })
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig2",
        description: "squeezed vacuum: fidelity percentage bias against J_max, varying gamma (a) and r0 (b)",
        budget: "< 30 s",
        build: fig2,
    },
    Preset {
        name: "fig3",
        description: "squeezed vacuum: sampling overhead and r_amp against mu for r0 = 0.75, 1.0, 1.1, 1.2 at gamma = 0.1",
        budget: "< 30 s",
        build: fig3,
    },
    Preset {
        name: "fig4",
        description: "squeezed vacuum r0 = 1, gamma = 0.1, J_max = 3: mitigated fidelity against the assumed loss",
        budget: "< 30 s",
        build: fig4,
    },
    Preset {
        name: "fig5",
        description: "cat state: S^2 against gamma and |alpha| (closed form)",
        budget: "< 1 s",
        build: fig5,
    },
    Preset {
        name: "fig6",
        description: "TMSV r0 = 0.75: histograms of mitigated and unmitigated sigma00, sigma02 (20 x 1e5 shots)",
        budget: "< 2 min",
        build: fig6,
    },
    Preset {
        name: "fig7",
        description: "ECS fidelity against alpha for mean losses (0.2, 0.2) and (0.5, 0.6) (10 x 2e4 shots per point)",
        budget: "< 5 min",
        build: fig7,
    },
    Preset {
        name: "fig8",
        description: "ECS alpha = 1 at mean losses (0.5, 0.6): histogram of per-shot loss parameters",
        budget: "< 1 min",
        build: fig8,
    },
    Preset {
        name: "tmsv-bias",
        description: "TMSV: fidelity bias and overhead against J_max for several (r0, gamma1, gamma2)",
        budget: "< 2 min",
        build: tmsv_bias,
    },
    Preset {
        name: "calibrate",
        description: "loss calibration with a single coherent probe, Chebyshev-planned shot count",
        budget: "< 30 s",
        build: calibrate,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
