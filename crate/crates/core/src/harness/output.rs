use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{Mode, ScenarioConfig, SweepRecord, SweepResult};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "snr_db,mode,mean_rate_bps_hz,std_err,trials";

#[derive(Serialize)]
struct Metadata<'a> {
    artifact: &'static str,
    version: &'static str,
    seed: u64,
    std_err_defined: bool,
    config: &'a ScenarioConfig,
}

fn sorted_records(result: &SweepResult) -> Vec<&SweepRecord> {
    let mut rows: Vec<&SweepRecord> = result.records.iter().collect();
    rows.sort_by(|a, b| a.mode.name().cmp(b.mode.name()).then(a.snr_db.total_cmp(&b.snr_db)));
    rows
}

/// Writes the CSV body. Floats use Rust's shortest round-trip formatting.
pub fn write_csv<W: Write>(result: &SweepResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in sorted_records(result) {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.snr_db, r.mode, r.mean_rate, r.std_err, r.trials_used
        )?;
    }
    out.flush()
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.toml");
    PathBuf::from(s)
}

/// Writes `path` and a `<path>.meta.toml` sidecar echoing the config.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| Error::Io { path: p, source }
    };
    let file = File::create(path).map_err(io(path))?;
    write_csv(result, BufWriter::new(file)).map_err(io(path))?;

    let meta = Metadata {
        artifact: env!("CARGO_PKG_NAME"),
        version: result.version,
        seed: result.seed,
        std_err_defined: result.std_err_defined(),
        config: &result.config,
    };
    let text = toml::to_string(&meta).map_err(|e| Error::internal("harness", e.to_string()))?;
    let meta_path = sidecar_path(path);
    std::fs::write(&meta_path, text).map_err(io(&meta_path))
}

/// Parses text produced by [`write_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(Error::Config(format!("unexpected CSV header {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |what: &str| Error::Config(format!("CSV line {}: bad {what} in `{line}`", i + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(bad("field count"));
            }
            Ok(SweepRecord {
                snr_db: fields[0].parse().map_err(|_| bad("snr_db"))?,
                mode: fields[1].parse::<Mode>().map_err(|_| bad("mode"))?,
                mean_rate: fields[2].parse().map_err(|_| bad("mean_rate_bps_hz"))?,
                std_err: fields[3].parse().map_err(|_| bad("std_err"))?,
                trials_used: fields[4].parse().map_err(|_| bad("trials"))?,
            })
        })
        .collect()
}
