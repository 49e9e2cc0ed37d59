use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which subtraction patterns enter the mitigated estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum JSet {
    /// Every mode subtracts at most `j_max` photons.
    Local {
        j_max: usize,
    },
    /// At most `j_max` photons in total.
    Global {
        j_max: usize,
    },
    Explicit {
        patterns: Vec<Vec<usize>>,
    },
}

impl JSet {
    pub fn local(j_max: usize) -> Self {
        JSet::Local { j_max }
    }

    pub fn global(j_max: usize) -> Self {
        JSet::Global { j_max }
    }

    pub fn contains(&self, pattern: &[usize]) -> bool {
        match self {
            JSet::Local { j_max } => pattern.iter().all(|&j| j <= *j_max),
            JSet::Global { j_max } => pattern.iter().sum::<usize>() <= *j_max,
            JSet::Explicit { patterns } => patterns.iter().any(|p| p == pattern),
        }
    }

    /// Members as patterns over `num_modes` modes, in lexicographic order.
    pub fn patterns(&self, num_modes: usize) -> Vec<Vec<usize>> {
        match self {
            JSet::Explicit { patterns } => {
                let mut p = patterns.clone();
                p.sort();
                p.dedup();
                p
            }
            JSet::Local { j_max } | JSet::Global { j_max } => {
                let mut out = Vec::new();
                let mut cur = vec![0usize; num_modes];
                loop {
                    if self.contains(&cur) {
                        out.push(cur.clone());
                    }
                    // odometer increment, last mode fastest
                    let mut m = num_modes;
                    loop {
                        if m == 0 {
                            return out;
                        }
                        m -= 1;
                        if cur[m] < *j_max {
                            cur[m] += 1;
                            for c in cur.iter_mut().skip(m + 1) {
                                *c = 0;
                            }
                            break;
                        }
                    }
                }
            }
        }
    }

    pub fn validate(&self, num_modes: usize) -> Result<()> {
        if let JSet::Explicit { patterns } = self {
            if patterns.is_empty() {
                return Err(Error::InvalidParameter("explicit J-set is empty".into()));
            }
            if let Some(p) = patterns.iter().find(|p| p.len() != num_modes) {
                return Err(Error::InvalidParameter(format!(
                    "pattern {p:?} does not match {num_modes} modes"
                )));
            }
            if !self.contains(&vec![0; num_modes]) {
                return Err(Error::InvalidParameter(
                    "J-set must contain the all-zero pattern".into(),
                ));
            }
        }
        Ok(())
    }

    /// Largest per-mode subtraction in the set.
    pub fn max_per_mode(&self) -> usize {
        match self {
            JSet::Local { j_max } | JSet::Global { j_max } => *j_max,
            JSet::Explicit { patterns } => patterns.iter().flatten().copied().max().unwrap_or(0),
        }
    }
}

impl Default for JSet {
    fn default() -> Self {
        JSet::local(1)
    }
}
