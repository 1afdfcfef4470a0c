//! Task pipelines behind `qnn run`.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use kerr_qnn_core::train::cat::optimize_cat_mixing;
use kerr_qnn_core::train::sweep::{sort_rows, sweep_point};
use kerr_qnn_core::train::{train_xor, CatTaskConfig, SweepConfig, SweepRow, SweepTask};
use kerr_qnn_core::wigner::{target_cat_wigner, wigner_of_matrix, WignerGrid};
use kerr_qnn_core::C64;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig, ResolvedTask};
use crate::output::{self, Manifest, ResultFile, Versions};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] kerr_qnn_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("thread pool: {0}")]
    Pool(String),
}

impl RunError {
    /// Process exit status: 2 for config errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io { .. } | RunError::Pool(_) => 1,
        }
    }
}

/// Runs the configured task. `jobs` bounds the sweep-point parallelism;
/// `None` uses every core. The result does not depend on `jobs`.
pub fn execute(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<ResultFile, RunError> {
    let task = cfg.resolve()?;
    let coupling = cfg.network_params()?.coupling;
    let mut result = ResultFile {
        task: cfg.task,
        seed: cfg.seed,
        coupling,
        xor: None,
        cat: None,
        sweep: None,
    };
    match task {
        ResolvedTask::Xor(c) => result.xor = Some(train_xor(&c)?),
        ResolvedTask::Cat(c) => result.cat = Some(optimize_cat_mixing(&c)?),
        ResolvedTask::Sweep { task, sweep } => result.sweep = Some(parallel_sweep(&task, &sweep, jobs)?),
    }
    Ok(result)
}

/// Sweep points evaluated concurrently; rows come back sorted by Kerr strength.
pub fn parallel_sweep(task: &SweepTask, sweep: &SweepConfig, jobs: Option<usize>) -> Result<Vec<SweepRow>, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    let rows = pool.install(|| {
        (0..sweep.alpha_values.len())
            .into_par_iter()
            .map(|i| {
                let row = sweep_point(task, sweep, i);
                if let Ok(r) = &row {
                    log::info!("alpha = {}: error {:.4} +- {:.4}", r.alpha, r.error_mean, r.error_std);
                }
                row
            })
            .collect::<Result<Vec<_>, _>>()
    });
    let mut rows = rows?;
    sort_rows(&mut rows);
    Ok(rows)
}

/// Target and conditioned-output Wigner grids of every trained case.
pub fn cat_wigner_grids(cfg: &CatTaskConfig, result: &ResultFile) -> Result<Vec<(WignerGrid, WignerGrid)>, RunError> {
    let Some(cat) = &result.cat else { return Ok(Vec::new()) };
    cat.cases
        .iter()
        .map(|case| {
            let d = case.output_state.len();
            let rho = DMatrix::from_fn(d, d, |r, c| case.output_state[r][c]);
            let target = target_cat_wigner(C64::new(case.beta, 0.0), cfg.parity, &cfg.grid)?;
            let output = wigner_of_matrix(&rho, &cfg.grid)?;
            Ok((target, output))
        })
        .collect()
}

/// Runs `cfg` and writes every artifact into `dir`; returns the written paths.
pub fn run_to_dir(cfg: &ExperimentConfig, config_bytes: &[u8], dir: &Path, jobs: Option<usize>) -> Result<Vec<PathBuf>, RunError> {
    let result = execute(cfg, jobs)?;
    let mut files: Vec<(String, Vec<u8>)> = vec![(output::RESULT_FILE.to_string(), output::to_json(&result))];
    if let Some(rows) = &result.sweep {
        files.push((output::SWEEP_FILE.to_string(), output::sweep_csv(rows)));
    }
    if let ResolvedTask::Cat(c) = cfg.resolve()? {
        for (i, (target, out)) in cat_wigner_grids(&c, &result)?.iter().enumerate() {
            files.push((output::wigner_file("target", i), output::wigner_csv(target)));
            files.push((output::wigner_file("output", i), output::wigner_csv(out)));
        }
    }
    let manifest = Manifest {
        config_sha256: output::sha256_hex(config_bytes),
        seed: cfg.seed,
        versions: Versions::current(),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        files: files.iter().map(|(name, _)| name.clone()).collect(),
        config: cfg.clone(),
    };
    files.push((output::MANIFEST_FILE.to_string(), output::to_json(&manifest)));

    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = dir.join(name);
        output::write_atomic(&path, &bytes).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}
