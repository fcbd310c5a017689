//! Named experiment presets and their on-disk artifacts.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::agents::AgentClass;
use crate::analytics::{analytics_row, AnalyticsError, AnalyticsRow};
use crate::netsim::{
    sweep, write_events, write_metrics, write_payoffs, ConfigError, RunMetrics, SimConfig,
};

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// Coalition sizes for a 150-player population; other populations scale them.
pub const BYZANTINE_SIZES: [usize; 5] = [0, 12, 25, 37, 49];
pub const RATIONAL_SIZES: [usize; 6] = [0, 1, 12, 25, 37, 50];
/// `(n, n_c)` pairs of the analytics table.
pub const ANALYTICS_POINTS: [(u64, u64); 2] = [(150, 50), (150, 38)];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PresetName {
    ForkLength,
    ChainQuality,
    RationalPayoff,
    Immunity,
    AnalyticsTable,
    Baseline,
}

impl PresetName {
    pub const ALL: [PresetName; 6] = [
        PresetName::ForkLength,
        PresetName::ChainQuality,
        PresetName::RationalPayoff,
        PresetName::Immunity,
        PresetName::AnalyticsTable,
        PresetName::Baseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::ForkLength => "fork_length",
            PresetName::ChainQuality => "chain_quality",
            PresetName::RationalPayoff => "rational_payoff",
            PresetName::Immunity => "immunity",
            PresetName::AnalyticsTable => "analytics_table",
            PresetName::Baseline => "baseline",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| ExperimentError::UnknownPreset(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPreset {
    pub name: PresetName,
    pub config: SimConfig,
    pub class: AgentClass,
    pub sizes: Vec<usize>,
}

fn scale(sizes: &[usize], n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = sizes
        .iter()
        .map(|&s| if s == 1 { 1 } else { (s * n + 75) / 150 })
        .map(|s| s.min(n))
        .collect();
    out.dedup();
    out
}

impl ExperimentPreset {
    /// Preset `name` on top of `config`, which carries any overrides.
    pub fn new(name: PresetName, config: SimConfig) -> Self {
        let n = config.n_players;
        let (class, sizes) = match name {
            PresetName::ForkLength | PresetName::Immunity => {
                (AgentClass::Byzantine, scale(&BYZANTINE_SIZES, n))
            }
            PresetName::ChainQuality | PresetName::RationalPayoff => {
                (AgentClass::Rational, scale(&RATIONAL_SIZES, n))
            }
            PresetName::Baseline => (AgentClass::Altruistic, vec![0]),
            PresetName::AnalyticsTable => (AgentClass::Altruistic, vec![]),
        };
        ExperimentPreset {
            name,
            config,
            class,
            sizes,
        }
    }

    pub fn manifest(&self) -> String {
        let sizes: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        let mut out = format!(
            "preset = {}\nversion = {}\ncoalition_class = {}\ncoalition_sizes = {}\n",
            self.name,
            VERSION,
            self.class,
            sizes.join(" ")
        );
        out.push_str(&self.config.to_string());
        out
    }

    pub fn run(&self) -> Result<Vec<RunMetrics>, ExperimentError> {
        self.config.validate()?;
        Ok(sweep(&self.config, &self.sizes, self.class)?)
    }
}

/// Files written by [`run_preset`].
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub rows: Vec<RunMetrics>,
    pub analytics: Vec<AnalyticsRow>,
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn finish(path: &Path, w: BufWriter<File>) -> Result<(), ExperimentError> {
    w.into_inner()
        .map_err(|e| e.into_error())
        .and_then(|f| f.sync_all())
        .map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn write_csv(
    dir: &Path,
    name: &str,
    rows: &[RunMetrics],
    f: fn(&mut BufWriter<File>, &[RunMetrics]) -> csv::Result<()>,
) -> Result<PathBuf, ExperimentError> {
    let path = dir.join(name);
    let mut w = create(&path)?;
    f(&mut w, rows).map_err(|source| ExperimentError::Csv {
        path: path.clone(),
        source,
    })?;
    finish(&path, w)?;
    Ok(path)
}

pub fn write_analytics<W: Write>(out: W, rows: &[AnalyticsRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "n_c",
        "expected_consecutive",
        "grinding_expectation",
        "harm_probability",
        "immunity_ratio",
    ])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.n_c.to_string(),
            format!("{:.6}", r.expected_consecutive),
            format!("{:.6}", r.grinding_expectation),
            format!("{:.6}", r.harm_probability),
            format!("{:.6}", r.immunity_ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the preset and writes its CSVs plus `manifest.txt` into `out_dir`.
pub fn run_preset(preset: &ExperimentPreset, out_dir: &Path) -> Result<Artifacts, ExperimentError> {
    fs::create_dir_all(out_dir).map_err(|source| ExperimentError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut art = Artifacts::default();
    let manifest = out_dir.join("manifest.txt");
    let mut w = create(&manifest)?;
    w.write_all(preset.manifest().as_bytes())
        .map_err(|source| ExperimentError::Io {
            path: manifest.clone(),
            source,
        })?;
    finish(&manifest, w)?;
    art.files.push(manifest);

    if preset.name == PresetName::AnalyticsTable {
        let c = &preset.config;
        for (n, n_c) in ANALYTICS_POINTS {
            art.analytics
                .push(analytics_row(n, n_c, c.k as u32, c.pun, c.c)?);
        }
        let path = out_dir.join("analytics.csv");
        let mut w = create(&path)?;
        write_analytics(&mut w, &art.analytics).map_err(|source| ExperimentError::Csv {
            path: path.clone(),
            source,
        })?;
        finish(&path, w)?;
        art.files.push(path);
        return Ok(art);
    }

    art.rows = preset.run()?;
    art.files
        .push(write_csv(out_dir, "metrics.csv", &art.rows, |w, r| {
            write_metrics(w, r)
        })?);
    art.files
        .push(write_csv(out_dir, "payoffs.csv", &art.rows, |w, r| {
            write_payoffs(w, r)
        })?);
    art.files.push(write_csv(
        out_dir,
        "finality_events.csv",
        &art.rows,
        |w, r| write_events(w, r),
    )?);
    Ok(art)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SimConfig {
        SimConfig {
            n_players: 30,
            slots: 150,
            runs: 2,
            ..SimConfig::default()
        }
    }

    #[test]
    fn names_roundtrip() {
        for p in PresetName::ALL {
            assert_eq!(p.as_str().parse::<PresetName>().unwrap(), p);
        }
        assert!("fig3".parse::<PresetName>().is_err());
    }

    #[test]
    fn sizes_scale_with_population() {
        let p = ExperimentPreset::new(PresetName::ForkLength, SimConfig::default());
        assert_eq!(p.sizes, BYZANTINE_SIZES);
        let p = ExperimentPreset::new(PresetName::ForkLength, tiny());
        assert_eq!(p.sizes, vec![0, 2, 5, 7, 10]);
        let p = ExperimentPreset::new(PresetName::RationalPayoff, tiny());
        assert_eq!(p.sizes, vec![0, 1, 2, 5, 7, 10]);
    }

    #[test]
    fn preset_writes_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = ExperimentPreset::new(PresetName::ForkLength, tiny());
        let art = run_preset(&p, dir.path()).unwrap();
        assert_eq!(art.files.len(), 4);
        assert_eq!(art.rows.len(), p.sizes.len() * 2);
        let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert_eq!(metrics.lines().count(), 1 + p.sizes.len() * 2);
        let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert!(manifest.contains("preset = fork_length"));
        assert!(manifest.contains("slots = 150"));
    }

    #[test]
    fn analytics_preset_writes_table() {
        let dir = tempfile::tempdir().unwrap();
        let p = ExperimentPreset::new(PresetName::AnalyticsTable, SimConfig::default());
        let art = run_preset(&p, dir.path()).unwrap();
        assert_eq!(art.analytics.len(), 2);
        let text = fs::read_to_string(dir.path().join("analytics.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn unwritable_dir_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let p = ExperimentPreset::new(PresetName::Baseline, tiny());
        assert!(matches!(
            run_preset(&p, &blocker.join("sub")),
            Err(ExperimentError::Io { .. })
        ));
    }
}
