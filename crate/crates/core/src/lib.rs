//! Quantum error cancellation for photon loss, simulated on truncated Fock spaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`fock`]: truncated multi-mode Fock spaces, states, operators and state factories.
//! - [`channels`]: the pure-loss channel, its exact inverse and the quasi-probability
//!   decomposition of that inverse into photon-subtraction channels; bosonic dephasing.
//! - [`protocol`]: amplification and heralded photon subtraction, shot simulation,
//!   the mitigated estimator, analytic bias/overhead accounting and the Monte-Carlo
//!   initial-state variant.
//! - [`calibration`]: loss-parameter estimation from coherent probes.
//!
//! Shot loops run through [`exec`], which uses rayon when the `parallel` feature is
//! enabled (the default) and plain iterators otherwise. Every stochastic routine takes
//! an explicit master seed; sub-seeds come from [`seed::derive_seed`].

pub mod calibration;
pub mod channels;
pub mod error;
pub mod exec;
pub mod fock;
pub mod protocol;
pub mod seed;

pub use error::{Error, Result};
pub use exec::Execution;
pub use num_complex::Complex64;
