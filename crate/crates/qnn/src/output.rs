//! Result files: `result.json`, `sweep.csv`, Wigner grids and `manifest.json`.
//! Every file is written to a temporary sibling and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use kerr_qnn_core::dynamics::Kerr;
use kerr_qnn_core::train::{CatTrainResult, SweepRow, XorTrainResult};
use kerr_qnn_core::wigner::WignerGrid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, TaskKind};

pub const RESULT_FILE: &str = "result.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Contents of `result.json`. Contains no timestamps, so a rerun with the
/// same config reproduces it byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub task: TaskKind,
    pub seed: u64,
    /// Coupling matrix actually used, row-major.
    pub coupling: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xor: Option<XorTrainResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cat: Option<CatTrainResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRow>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    /// SHA-256 of the config file bytes.
    pub config_sha256: String,
    pub seed: u64,
    pub versions: Versions,
    /// Seconds since the Unix epoch at the end of the run.
    pub created_unix: u64,
    pub files: Vec<String>,
    /// Parsed config; `qnn run manifest.json` repeats the run.
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Versions {
    pub kerr_qnn: String,
    pub kerr_qnn_core: String,
}

impl Versions {
    pub fn current() -> Self {
        Versions {
            kerr_qnn: env!("CARGO_PKG_VERSION").to_string(),
            kerr_qnn_core: kerr_qnn_core::VERSION.to_string(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn to_json(value: &impl Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("result types serialize");
    out.push(b'\n');
    out
}

pub fn format_alpha(alpha: Kerr) -> String {
    match alpha {
        Kerr::Finite(a) => format!("{a}"),
        Kerr::Infinite => "inf".to_string(),
    }
}

/// `alpha,error_mean,error_std,probability_mean`; the probability column is
/// empty for XOR rows.
pub fn sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["alpha", "error_mean", "error_std", "probability_mean"]).unwrap();
    for r in rows {
        w.write_record([
            format_alpha(r.alpha),
            r.error_mean.to_string(),
            r.error_std.to_string(),
            r.probability_mean.map(|p| p.to_string()).unwrap_or_default(),
        ])
        .unwrap();
    }
    w.into_inner().expect("in-memory writer")
}

/// `x,p,W` triples, `x` outer, `p` inner.
pub fn wigner_csv(grid: &WignerGrid) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "p", "W"]).unwrap();
    let g = &grid.geometry;
    for ix in 0..g.nx {
        for ip in 0..g.np {
            w.write_record([g.x(ix).to_string(), g.p(ip).to_string(), grid.value(ix, ip).to_string()])
                .unwrap();
        }
    }
    w.into_inner().expect("in-memory writer")
}

/// Reads an `x,p,W` file back into values in grid order.
pub fn read_wigner_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>, Box<dyn std::error::Error>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Name of the Wigner file of case `i`: the first case has no suffix.
pub fn wigner_file(kind: &str, i: usize) -> String {
    if i == 0 {
        format!("wigner_{kind}.csv")
    } else {
        format!("wigner_{kind}_{i}.csv")
    }
}

pub fn read_result(path: &Path) -> Result<ResultFile, Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?)
}

pub fn artifact_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
