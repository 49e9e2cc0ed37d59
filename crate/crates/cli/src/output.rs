use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub const TOOL: &str = "photon-qec";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            // 17 significant digits round-trip every f64
            Cell::Real(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Real(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// A named table written as one CSV file (`<name>_<suffix>.csv`, or `<name>.csv`
/// for the main table).
#[derive(Debug, Clone)]
pub struct Table {
    pub suffix: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(suffix: Option<&str>, columns: &[&str]) -> Self {
        let mut seen = std::collections::HashSet::new();
        for c in columns {
            assert!(seen.insert(*c), "duplicate column {c}");
        }
        Self {
            suffix: suffix.map(str::to_string),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width does not match the header"
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn file_name(&self, base: &str) -> String {
        match &self.suffix {
            Some(s) => format!("{base}_{s}.csv"),
            None => format!("{base}.csv"),
        }
    }

    /// Write with `# key: value` metadata lines before the header row.
    pub fn write(&self, path: &Path, metadata: &[(String, String)]) -> CliResult<()> {
        let mut file = std::io::BufWriter::new(fs::File::create(path)?);
        for (k, v) in metadata {
            writeln!(file, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Equal-width histogram over `[lo, hi]`; the last bin is closed on the right.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Table {
    let mut counts = vec![0u64; bins];
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    };
    let width = (hi - lo) / bins as f64;
    for &v in values.iter().filter(|v| v.is_finite()) {
        if v < lo || v > hi {
            continue;
        }
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let mut t = Table::new(None, &["bin_left", "bin_right", "count"]);
    for (k, c) in counts.into_iter().enumerate() {
        t.push(vec![
            (lo + k as f64 * width).into(),
            (lo + (k + 1) as f64 * width).into(),
            c.into(),
        ]);
    }
    t
}

/// Histogram of values taking a few discrete levels: one bin per level, with edges at
/// the midpoints between neighbours.
pub fn level_histogram(values: &[f64]) -> Table {
    let mut levels: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut t = Table::new(None, &["bin_left", "bin_right", "count"]);
    if levels.is_empty() {
        return t;
    }
    let half = |i: usize| -> f64 {
        if levels.len() == 1 {
            0.5 * levels[0].abs().max(1e-3) * 1e-2
        } else if i + 1 < levels.len() {
            0.5 * (levels[i + 1] - levels[i])
        } else {
            0.5 * (levels[i] - levels[i - 1])
        }
    };
    let mut edges = Vec::with_capacity(levels.len() + 1);
    edges.push(levels[0] - half(0));
    for i in 0..levels.len() {
        edges.push(levels[i] + half(i));
    }
    for (i, &level) in levels.iter().enumerate() {
        let c = values.iter().filter(|&&v| v == level).count();
        t.push(vec![edges[i].into(), edges[i + 1].into(), c.into()]);
    }
    t
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: &'a ExperimentConfig,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

/// Metadata echoed at the top of every CSV. The output path is left out so that a
/// rerun into another directory produces identical files.
pub fn metadata(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let mut echo = cfg.clone();
    echo.output = None;
    vec![
        ("tool".into(), format!("{TOOL} {VERSION}")),
        ("seed".into(), cfg.seed.to_string()),
        (
            "config".into(),
            serde_json::to_string(&echo).unwrap_or_default(),
        ),
    ]
}

/// Write every table plus `manifest.json`; returns the paths written.
pub fn write_all(
    cfg: &ExperimentConfig,
    tables: &[Table],
    summary: serde_json::Value,
) -> CliResult<Vec<PathBuf>> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let meta = metadata(cfg);
    let mut written = Vec::new();
    for t in tables {
        let path = dir.join(t.file_name(&cfg.name));
        t.write(&path, &meta)?;
        written.push(path);
    }
    let manifest = Manifest {
        tool: TOOL,
        version: VERSION,
        seed: cfg.seed,
        config: cfg,
        outputs: written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        summary,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(&path, text + "\n")?;
    written.push(path);
    Ok(written)
}
