//! Truncated Fock spaces, states and operators.

pub mod covariance;
pub mod factories;
pub mod math;
pub(crate) mod modewise;
pub mod operator;
pub mod space;
pub mod state;

pub use covariance::covariance_matrix;
pub use factories::{
    cat_state, coherent_state, entangled_coherent_state, squeezed_vacuum, thermal_state,
    two_mode_squeezed_vacuum,
};
pub use operator::{
    annihilation, beam_splitter_unitary, creation, gain_op, number_op, quadrature_p, quadrature_x,
    BosonicOperator, TwoModeBeamSplitter,
};
pub use space::{FockSpace, DEFAULT_LEAKAGE_TOLERANCE, DEFAULT_MAX_DIMENSION};
pub use state::{FockState, Representation};
