//! Artifact files and run manifests.

use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiment::{Artifact, Table};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_table(dir: &Path, table: &Table) -> Result<(), CliError> {
    let path = dir.join(table.file_name());
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush().map_err(io(&path))?;
    Ok(())
}

fn write_lines(dir: &Path, name: &str, values: &[usize]) -> Result<(), CliError> {
    let path = dir.join(format!("{name}.txt"));
    let mut text = String::with_capacity(values.len() * 4);
    for v in values {
        text.push_str(&v.to_string());
        text.push('\n');
    }
    fs::write(&path, text).map_err(io(&path))
}

pub fn write_run(
    dir: &Path,
    cfg: &ExperimentConfig,
    artifacts: &[Artifact],
    wall_time: Duration,
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    for a in artifacts {
        match a {
            Artifact::Csv(t) => write_table(dir, t)?,
            Artifact::Lines { name, values } => write_lines(dir, name, values)?,
        }
    }
    #[derive(Serialize)]
    struct Manifest<'a> {
        tool_version: &'a str,
        wall_time_seconds: f64,
        config: &'a ExperimentConfig,
    }
    write_manifest(
        dir,
        &Manifest {
            tool_version: TOOL_VERSION,
            wall_time_seconds: wall_time.as_secs_f64(),
            config: cfg,
        },
    )
}

/// Long-format tables: every artifact of every run, keyed by label, in
/// config order.
pub fn write_compare(
    dir: &Path,
    runs: &[(ExperimentConfig, Vec<Artifact>)],
    wall_time: Duration,
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut merged: Vec<Table> = Vec::new();
    for (cfg, artifacts) in runs {
        for a in artifacts {
            let table = match a {
                Artifact::Csv(t) => t.clone(),
                Artifact::Lines { name, values } => Table {
                    name,
                    header: vec!["t", "state"],
                    rows: values
                        .iter()
                        .enumerate()
                        .map(|(t, s)| vec![t.to_string(), s.to_string()])
                        .collect(),
                },
            };
            let rows = table
                .rows
                .into_iter()
                .map(|r| std::iter::once(cfg.label.clone()).chain(r).collect());
            match merged.iter_mut().find(|m| m.name == table.name) {
                Some(m) => m.rows.extend(rows),
                None => {
                    let mut header = vec!["label"];
                    header.extend(table.header);
                    merged.push(Table {
                        name: table.name,
                        header,
                        rows: rows.collect(),
                    });
                }
            }
        }
    }
    for t in &merged {
        write_table(dir, t)?;
    }
    #[derive(Serialize)]
    struct Manifest<'a> {
        tool_version: &'a str,
        wall_time_seconds: f64,
        configs: Vec<&'a ExperimentConfig>,
    }
    write_manifest(
        dir,
        &Manifest {
            tool_version: TOOL_VERSION,
            wall_time_seconds: wall_time.as_secs_f64(),
            configs: runs.iter().map(|(c, _)| c).collect(),
        },
    )
}

fn write_manifest<T: Serialize>(dir: &Path, manifest: &T) -> Result<(), CliError> {
    let path = dir.join("manifest.toml");
    let text = toml::to_string(manifest).map_err(|e| CliError::invalid("manifest", e))?;
    fs::write(&path, text).map_err(io(&path))
}
