//! File output. Everything the CLI writes goes through here.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::Format;
use crate::failure::{CliResult, Failure};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| Failure::parse(format!("{e:#}")))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::io)
}

pub fn to_json_string<S: Serialize>(value: &S) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable value");
    text.push('\n');
    text
}

pub fn write_json<S: Serialize>(dir: &Path, name: &str, value: &S) -> CliResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, to_json_string(value))
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::io)?;
    Ok(path)
}

/// Writes serde rows as `<stem>.csv` or `<stem>.json`.
pub fn write_rows<S: Serialize>(dir: &Path, stem: &str, rows: &[S], format: Format) -> CliResult<PathBuf> {
    match format {
        Format::Json => write_json(dir, &format!("{stem}.json"), &rows),
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            let result: anyhow::Result<()> = (|| {
                let mut w = csv::Writer::from_path(&path)?;
                for row in rows {
                    w.serialize(row)?;
                }
                w.flush()?;
                Ok(())
            })();
            result
                .with_context(|| format!("writing {}", path.display()))
                .map_err(Failure::io)?;
            Ok(path)
        }
    }
}

/// Writes a header and string records as CSV.
pub fn write_table(dir: &Path, name: &str, header: &[String], rows: &[Vec<String>]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    let result: anyhow::Result<()> = (|| {
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    })();
    result
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::io)?;
    Ok(path)
}
