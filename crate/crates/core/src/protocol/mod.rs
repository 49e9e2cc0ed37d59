//! The error-cancellation protocol: amplification and heralded photon subtraction,
//! shot simulation, the mitigated estimator, analytic accounting and Monte-Carlo
//! sampling of the initial state.

pub mod analytics;
pub mod estimator;
pub mod gamma;
pub mod heralding;
pub mod jset;
pub mod monte_carlo;
pub mod observable;
pub mod optimize;
pub mod shots;

pub use analytics::{analytic_expectations, AnalyticOptions, AnalyticReport, ChannelExpectation};
pub use estimator::{mitigated_estimator, sample_mean_variance, ChannelStats, EstimatorReport};
pub use gamma::{GammaDistribution, GammaTable, DEFAULT_BINS, DEFAULT_TAIL_MASS};
pub use heralding::{
    amplified_squeezing, amplified_tmsv_squeezing, build_heralding, herald_gain, HeraldingSetup,
};
pub use jset::JSet;
pub use monte_carlo::{
    cat_sampling_norm, dual_rail_sampling_norm, monte_carlo_run, monte_carlo_shots,
    monte_carlo_shots_repeated, monte_carlo_state_plan, weighted_values, MonteCarloPlan,
    MonteCarloReport, StateFamily,
};
pub use observable::{Dynamics, Observable, OutcomeSampler, PreparedObservable};
pub use optimize::{
    optimize_mu, MuPoint, OverheadModel, OverheadObjective, DEFAULT_MU_MAX, DEFAULT_MU_STEP,
};
pub use shots::{
    simulate_shots, simulate_shots_repeated, simulate_unmitigated_shots,
    simulate_unmitigated_shots_repeated, ShotOptions, ShotRecord,
};
