use crate::error::{Error, Result};

/// Default cap on the total Hilbert-space dimension.
pub const DEFAULT_MAX_DIMENSION: usize = 1 << 16;

/// Default bound on probability mass allowed in the top two Fock levels of any mode.
pub const DEFAULT_LEAKAGE_TOLERANCE: f64 = 1e-10;

/// A truncated multi-mode Fock space. Mode `i` holds photon numbers `0..=cutoffs[i]`.
///
/// Basis states are ordered row-major with mode 0 most significant, so a two-mode
/// pure state reshapes directly into a `(d0, d1)` amplitude matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FockSpace {
    cutoffs: Vec<usize>,
    strides: Vec<usize>,
    dimension: usize,
    leakage_tolerance: f64,
}

impl FockSpace {
    pub fn new(cutoffs: &[usize]) -> Result<Self> {
        Self::with_bound(cutoffs, DEFAULT_MAX_DIMENSION)
    }

    /// `num_modes` must agree with `cutoffs.len()`.
    pub fn make(num_modes: usize, cutoffs: &[usize]) -> Result<Self> {
        if num_modes != cutoffs.len() {
            return Err(Error::InvalidSpace(format!(
                "{num_modes} modes but {} cutoffs",
                cutoffs.len()
            )));
        }
        Self::new(cutoffs)
    }

    pub fn single(cutoff: usize) -> Result<Self> {
        Self::new(&[cutoff])
    }

    pub fn with_bound(cutoffs: &[usize], max_dimension: usize) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::InvalidSpace("at least one mode is required".into()));
        }
        if let Some(i) = cutoffs.iter().position(|&c| c == 0) {
            return Err(Error::InvalidSpace(format!(
                "cutoff of mode {i} must be >= 1"
            )));
        }
        let mut dimension: usize = 1;
        for &c in cutoffs {
            dimension = dimension
                .checked_mul(c + 1)
                .filter(|&d| d <= max_dimension)
                .ok_or(Error::DimensionOverflow {
                    dimension: cutoffs.iter().fold(1usize, |a, &c| a.saturating_mul(c + 1)),
                    bound: max_dimension,
                })?;
        }
        let mut strides = vec![1; cutoffs.len()];
        for m in (0..cutoffs.len() - 1).rev() {
            strides[m] = strides[m + 1] * (cutoffs[m + 1] + 1);
        }
        Ok(Self {
            cutoffs: cutoffs.to_vec(),
            strides,
            dimension,
            leakage_tolerance: DEFAULT_LEAKAGE_TOLERANCE,
        })
    }

    /// Override the truncation-leakage tolerance used by every check on this space.
    pub fn with_leakage_tolerance(mut self, tolerance: f64) -> Self {
        self.leakage_tolerance = tolerance;
        self
    }

    pub fn num_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn cutoff(&self, mode: usize) -> usize {
        self.cutoffs[mode]
    }

    /// Local dimension of `mode` (cutoff + 1).
    pub fn mode_dim(&self, mode: usize) -> usize {
        self.cutoffs[mode] + 1
    }

    pub fn stride(&self, mode: usize) -> usize {
        self.strides[mode]
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn leakage_tolerance(&self) -> f64 {
        self.leakage_tolerance
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.num_modes() {
            Ok(())
        } else {
            Err(Error::ModeOutOfRange {
                mode,
                num_modes: self.num_modes(),
            })
        }
    }

    /// Flat basis index of an occupation-number tuple.
    pub fn index(&self, occupation: &[usize]) -> usize {
        debug_assert_eq!(occupation.len(), self.num_modes());
        occupation
            .iter()
            .zip(&self.strides)
            .map(|(n, s)| n * s)
            .sum()
    }

    pub fn occupation(&self, index: usize) -> Vec<usize> {
        (0..self.num_modes())
            .map(|m| self.occupation_of(index, m))
            .collect()
    }

    #[inline]
    pub fn occupation_of(&self, index: usize, mode: usize) -> usize {
        (index / self.strides[mode]) % (self.cutoffs[mode] + 1)
    }

    /// Same mode structure (leakage tolerance is not compared).
    pub fn same_shape(&self, other: &FockSpace) -> bool {
        self.cutoffs == other.cutoffs
    }

    pub fn ensure_same(&self, other: &FockSpace, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!(
                "{what}: cutoffs {:?} vs {:?}",
                self.cutoffs, other.cutoffs
            )))
        }
    }

    /// Space made of a subset of modes, in the given order.
    pub fn subspace(&self, modes: &[usize]) -> Result<FockSpace> {
        for &m in modes {
            self.check_mode(m)?;
        }
        let cutoffs: Vec<usize> = modes.iter().map(|&m| self.cutoffs[m]).collect();
        Ok(FockSpace::with_bound(&cutoffs, usize::MAX)?
            .with_leakage_tolerance(self.leakage_tolerance))
    }

    /// Concatenation of two spaces' modes.
    pub fn product(&self, other: &FockSpace) -> Result<FockSpace> {
        let cutoffs: Vec<usize> = self.cutoffs.iter().chain(&other.cutoffs).copied().collect();
        Ok(FockSpace::new(&cutoffs)?
            .with_leakage_tolerance(self.leakage_tolerance.max(other.leakage_tolerance)))
    }
}
