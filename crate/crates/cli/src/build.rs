//! Turning config specs into core objects.

use std::path::Path;

use nalgebra::DMatrix;
use photon_qec::fock::{factories, BosonicOperator, FockSpace, FockState};
use photon_qec::protocol::Observable;
use photon_qec::Complex64;

use crate::config::{ExperimentConfig, ObservableSpec, StateSpec};
use crate::error::{CliError, CliResult, Context};

/// Hermiticity tolerance for matrices read from text.
const FILE_HERMITICITY_TOL: f64 = 1e-10;

pub fn space(cfg: &ExperimentConfig) -> CliResult<FockSpace> {
    let s = FockSpace::new(&cfg.cutoffs).ctx("cutoffs")?;
    Ok(match cfg.leakage_tolerance {
        Some(t) => s.with_leakage_tolerance(t),
        None => s,
    })
}

pub fn state(space: &FockSpace, spec: &StateSpec) -> CliResult<FockState> {
    let re = |x: f64| Complex64::new(x, 0.0);
    let what = format!("preparing {} state", spec.family());
    match spec {
        StateSpec::Squeezed { r } => factories::squeezed_vacuum(space, *r),
        StateSpec::Tmsv { r } => factories::two_mode_squeezed_vacuum(space, *r),
        StateSpec::Cat { alpha, phi } => factories::cat_state(space, re(*alpha), *phi),
        StateSpec::Ecs { alpha, beta, sign } => factories::entangled_coherent_state(
            space,
            re(*alpha),
            re(beta.unwrap_or(*alpha)),
            *sign,
        ),
        StateSpec::Coherent { alpha } => {
            factories::coherent_state(space, &alpha.iter().map(|&a| re(a)).collect::<Vec<_>>())
        }
        StateSpec::SinglePhoton => FockState::basis(space, &[1]),
        StateSpec::Fock { occupation } => FockState::basis(space, occupation),
        StateSpec::DualRail { rails } => {
            let occ: Vec<usize> = (0..*rails).flat_map(|_| [0, 1]).collect();
            FockState::basis(space, &occ)
        }
    }
    .ctx(&what)
}

pub fn observable(
    cfg: &ExperimentConfig,
    space: &FockSpace,
    initial: &FockState,
) -> CliResult<Observable> {
    Ok(match &cfg.observable {
        ObservableSpec::ProjectorOnInitial => Observable::fidelity(initial),
        ObservableSpec::Number { mode } => Observable::Number { mode: *mode },
        ObservableSpec::QuadratureCovarianceEntry { k, l } => {
            Observable::covariance_xx(space.num_modes(), *k, *l)
        }
        ObservableSpec::Custom { path } => {
            let m = load_matrix(path)?;
            if m.nrows() != space.dimension() {
                return Err(CliError::config(format!(
                    "observable.path: matrix dimension {} does not match the Fock-space dimension {}",
                    m.nrows(),
                    space.dimension()
                )));
            }
            Observable::Hermitian(
                BosonicOperator::hermitian(space.clone(), m).ctx("observable.path")?,
            )
        }
    })
}

/// Read a complex matrix: a dimension `D` followed by `D²` row-major `re im` pairs.
/// Blank lines and `#` comments are ignored. Hermiticity is checked to 1e-10 and the
/// matrix is symmetrised to remove text round-off.
pub fn load_matrix(path: &Path) -> CliResult<DMatrix<Complex64>> {
    let err = |msg: String| CliError::config(format!("observable.path: {}: {msg}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let d: usize = tokens
        .next()
        .ok_or_else(|| err("empty file".into()))?
        .parse()
        .map_err(|e| err(format!("bad dimension header: {e}")))?;
    if d == 0 {
        return Err(err("dimension must be >= 1".into()));
    }
    let nums: Vec<f64> = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| err(format!("bad number {t:?}: {e}")))
        })
        .collect::<CliResult<_>>()?;
    if nums.len() != 2 * d * d {
        return Err(err(format!(
            "expected {} numbers for a {d}×{d} matrix, got {}",
            2 * d * d,
            nums.len()
        )));
    }
    let m = DMatrix::from_fn(d, d, |i, j| {
        let k = 2 * (i * d + j);
        Complex64::new(nums[k], nums[k + 1])
    });
    let defect = (&m - m.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if defect > FILE_HERMITICITY_TOL {
        return Err(err(format!(
            "matrix is not Hermitian (max deviation {defect:.3e})"
        )));
    }
    Ok((&m + m.adjoint()) * Complex64::new(0.5, 0.0))
}
