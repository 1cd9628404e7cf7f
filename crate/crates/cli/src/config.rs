//! Experiment configs: a raw, mostly-optional TOML layer and the fully
//! resolved form that is written back into run manifests.

use std::path::{Path, PathBuf};

use lrd_core::{ErgodicityClass, ReturnTimeDistribution};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MAX_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Rate,
    Entropy,
    Excess,
    Variance,
    Classify,
    Simulate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Rate => "rate",
            ExperimentKind::Entropy => "entropy",
            ExperimentKind::Excess => "excess",
            ExperimentKind::Variance => "variance",
            ExperimentKind::Classify => "classify",
            ExperimentKind::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Geometric,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl LogBase {
    /// Multiplier converting nats to this base.
    pub fn scale(self) -> f64 {
        match self {
            LogBase::Nats => 1.0,
            LogBase::Bits => std::f64::consts::LOG2_E,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_time: Option<ReturnTimeDistribution>,
    /// Whitespace-separated row-stochastic matrix, one row per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_min: u64,
    pub n_max: u64,
    pub points: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    /// 9 geometric points over [2^10, 2^14].
    pub const POLYNOMIAL: GridSpec = GridSpec {
        n_min: 1 << 10,
        n_max: 1 << 14,
        points: 9,
        spacing: Spacing::Geometric,
    };

    /// Every n in 1..=32; geometric decay underflows long before 2^10.
    pub const GEOMETRIC: GridSpec = GridSpec {
        n_min: 1,
        n_max: 32,
        points: 32,
        spacing: Spacing::Linear,
    };

    pub fn values(&self) -> Vec<u64> {
        match self.spacing {
            Spacing::Geometric => {
                lrd_core::convergence::geometric_grid(self.n_min, self.n_max, self.points)
            }
            Spacing::Linear => lrd_core::convergence::linear_grid(self.n_min, self.n_max, self.points),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n_min: Option<u64>,
    n_max: Option<u64>,
    points: Option<usize>,
    spacing: Option<Spacing>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    init_state: Option<usize>,
    state: Option<usize>,
    tolerance: Option<f64>,
    seed: Option<u64>,
    reps: Option<usize>,
    output: Option<PathBuf>,
    log_base: Option<LogBase>,
    betas: Option<Vec<f64>>,
    length: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    label: Option<String>,
    #[serde(default)]
    experiment: ExperimentKind,
    chain: ChainSpec,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    run: RawRun,
}

/// A manifest wraps the resolved config in a `[config]` table.
#[derive(Debug, Deserialize)]
struct RawManifest {
    config: RawConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub init_state: usize,
    /// State whose visits are counted by `variance`.
    pub state: usize,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub reps: usize,
    pub output: PathBuf,
    pub log_base: LogBase,
    pub betas: Vec<f64>,
    /// Trajectory length for `simulate`.
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub label: String,
    pub experiment: ExperimentKind,
    pub chain: ChainSpec,
    pub grid: GridSpec,
    pub run: RunSpec,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid: Option<(u64, u64, usize)>,
    pub log_base: Option<LogBase>,
    pub tolerance: Option<f64>,
    pub experiment: Option<ExperimentKind>,
}

/// Parses `MIN:MAX:POINTS`.
pub fn parse_grid_flag(s: &str) -> Result<(u64, u64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected MIN:MAX:POINTS, got {s:?}"));
    };
    let num = |v: &str, what: &str| -> Result<u64, String> {
        v.trim().parse().map_err(|_| format!("{what} {v:?} is not a non-negative integer"))
    };
    Ok((num(a, "MIN")?, num(b, "MAX")?, num(c, "POINTS")? as usize))
}

/// Reads a config or a run manifest from disk and resolves it.
pub fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let fallback_label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    parse(&text, base, &fallback_label, overrides).map_err(|e| e.in_file(path))
}

/// Parses config text. Relative matrix paths resolve against `base`.
pub fn parse(
    text: &str,
    base: &Path,
    fallback_label: &str,
    overrides: &Overrides,
) -> Result<ExperimentConfig, CliError> {
    let table: toml::Table = toml::from_str(text).map_err(CliError::from_toml)?;
    let raw: RawConfig = if table.contains_key("config") && !table.contains_key("chain") {
        toml::from_str::<RawManifest>(text).map_err(CliError::from_toml)?.config
    } else {
        toml::from_str(text).map_err(CliError::from_toml)?
    };
    resolve(raw, base, fallback_label, overrides)
}

fn resolve(
    raw: RawConfig,
    base: &Path,
    fallback_label: &str,
    ov: &Overrides,
) -> Result<ExperimentConfig, CliError> {
    let mut chain = raw.chain;
    match (&chain.return_time, &chain.matrix_file) {
        (Some(d), None) => d.validate().map_err(|e| CliError::invalid("chain.return_time", e))?,
        (None, Some(p)) => {
            if p.is_relative() {
                chain.matrix_file = Some(base.join(p));
            }
        }
        (None, None) => return Err(CliError::missing("chain.return_time")),
        (Some(_), Some(_)) => {
            return Err(CliError::invalid(
                "chain",
                "give either return_time or matrix_file, not both",
            ))
        }
    }

    let default_grid = match &chain.return_time {
        Some(d) => match d.classify_ergodicity() {
            ErgodicityClass::Geometric => GridSpec::GEOMETRIC,
            _ => GridSpec::POLYNOMIAL,
        },
        None => GridSpec::GEOMETRIC,
    };
    let mut grid = GridSpec {
        n_min: raw.grid.n_min.unwrap_or(default_grid.n_min),
        n_max: raw.grid.n_max.unwrap_or(default_grid.n_max),
        points: raw.grid.points.unwrap_or(default_grid.points),
        spacing: raw.grid.spacing.unwrap_or(default_grid.spacing),
    };
    if let Some((n_min, n_max, points)) = ov.grid {
        grid.n_min = n_min;
        grid.n_max = n_max;
        grid.points = points;
    }

    let r = raw.run;
    let run = RunSpec {
        init_state: r.init_state.unwrap_or(0),
        state: r.state.unwrap_or(0),
        tolerance: ov.tolerance.or(r.tolerance).unwrap_or(DEFAULT_TOLERANCE),
        seed: ov.seed.or(r.seed),
        reps: r.reps.unwrap_or(0),
        output: ov
            .out
            .clone()
            .or(r.output)
            .unwrap_or_else(|| PathBuf::from("lrd-out")),
        log_base: ov.log_base.or(r.log_base).unwrap_or_default(),
        betas: r.betas.unwrap_or_default(),
        length: r.length.unwrap_or(1000),
    };

    let cfg = ExperimentConfig {
        label: raw.label.unwrap_or_else(|| fallback_label.to_string()),
        experiment: ov.experiment.unwrap_or(raw.experiment),
        chain,
        grid,
        run,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        if g.n_min < 1 {
            return Err(CliError::invalid("grid.n_min", "must be at least 1"));
        }
        if g.n_max <= g.n_min {
            return Err(CliError::invalid("grid.n_max", "must exceed grid.n_min"));
        }
        if g.points < 2 {
            return Err(CliError::invalid("grid.points", "must be at least 2"));
        }
        let t = self.run.tolerance;
        if !(t > 0.0 && t <= MAX_TOLERANCE) {
            return Err(CliError::invalid(
                "run.tolerance",
                format!("{t} is outside (0, {MAX_TOLERANCE}]"),
            ));
        }
        let needs_seed = self.run.reps > 0 || self.experiment == ExperimentKind::Simulate;
        if needs_seed && self.run.seed.is_none() {
            return Err(CliError::missing("run.seed"));
        }
        if self.run.reps == 1 {
            return Err(CliError::invalid("run.reps", "must be 0 or at least 2"));
        }
        if let Some(b) = self.run.betas.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return Err(CliError::invalid("run.betas", format!("{b} is not a finite non-negative number")));
        }
        if self.run.length == 0 {
            return Err(CliError::invalid("run.length", "must be at least 1"));
        }
        Ok(())
    }
}
