//! Output files: CSV tables, run manifests and configuration hashes.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use dstc_core::harness::{BerPoint, RunConfig};

use crate::error::CliError;

/// Hex SHA-256 of the JSON encoding of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("configuration serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Serialize)]
struct BerRow<'a> {
    protocol: &'a str,
    sigma2sq: f64,
    #[serde(rename = "P_dB")]
    p_db: f64,
    p1: f64,
    p2: f64,
    p3: f64,
    blocks: usize,
    bit_errors: u64,
    ber: f64,
    ci_low: f64,
    ci_high: f64,
    config_hash: &'a str,
}

/// Writes `rows` as CSV with a header line.
pub fn write_csv<T: Serialize>(
    path: &Path,
    rows: impl IntoIterator<Item = T>,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::Output(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_ber_csv(path: &Path, points: &[BerPoint], hash: &str) -> Result<(), CliError> {
    write_csv(
        path,
        points.iter().map(|p| BerRow {
            protocol: p.protocol.name(),
            sigma2sq: p.sigma2_sq,
            p_db: p.p_db,
            p1: p.p1,
            p2: p.p2,
            p3: p.p3,
            blocks: p.blocks,
            bit_errors: p.bit_errors,
            ber: p.ber,
            ci_low: p.ci_low,
            ci_high: p.ci_high,
            config_hash: hash,
        }),
    )
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    seed: u64,
    version: &'static str,
    config_hash: &'a str,
    created_unix: u64,
    points: &'a [BerPoint],
}

/// Run manifest; the only output carrying a wall-clock timestamp.
pub fn write_manifest(
    path: &Path,
    config: &RunConfig,
    hash: &str,
    points: &[BerPoint],
) -> Result<(), CliError> {
    let manifest = Manifest {
        config,
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: hash,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        points,
    };
    write_json(path, &manifest)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
    serde_json::to_writer_pretty(&mut file, value).map_err(|e| CliError::Output(e.to_string()))?;
    file.write_all(b"\n").map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = serde_json::json!({"seed": 1, "blocks": 10});
        let b = serde_json::json!({"seed": 2, "blocks": 10});
        assert_eq!(config_hash(&a), config_hash(&a));
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
