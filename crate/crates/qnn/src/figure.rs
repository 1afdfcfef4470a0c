//! Plot-ready tables assembled from sweep results.

use std::path::Path;

use kerr_qnn_core::dynamics::Kerr;
use kerr_qnn_core::train::sweep::SweepRow;

use crate::config::TaskKind;
use crate::output::{format_alpha, read_result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    /// XOR error against Kerr strength.
    Fig1c,
    /// Cat-state Wigner error against Kerr strength.
    Fig4,
}

impl Figure {
    fn task(self) -> TaskKind {
        match self {
            Figure::Fig1c => TaskKind::SweepXor,
            Figure::Fig4 => TaskKind::SweepCat,
        }
    }
}

/// One row per Kerr strength: mean and population spread of all per-draw
/// errors recorded for that strength across the given result files.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureRow {
    pub alpha: Kerr,
    pub error_mean: f64,
    pub error_std: f64,
    pub samples: usize,
}

pub fn figure_rows(figure: Figure, results: &[impl AsRef<Path>]) -> Result<Vec<FigureRow>, Box<dyn std::error::Error>> {
    if results.is_empty() {
        return Err("no result files given".into());
    }
    let mut pooled: Vec<(Kerr, Vec<f64>)> = Vec::new();
    for path in results {
        let path = path.as_ref();
        let r = read_result(path)?;
        if r.task != figure.task() {
            return Err(format!("{}: task {:?} does not feed {figure:?}", path.display(), r.task).into());
        }
        let rows: Vec<SweepRow> = r.sweep.ok_or_else(|| format!("{}: no sweep rows", path.display()))?;
        for row in rows {
            match pooled.iter_mut().find(|(a, _)| *a == row.alpha) {
                Some((_, errors)) => errors.extend(&row.errors),
                None => pooled.push((row.alpha, row.errors)),
            }
        }
    }
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pooled
        .into_iter()
        .map(|(alpha, errors)| {
            let (error_mean, error_std) = kerr_qnn_core::train::mean_std(&errors);
            FigureRow {
                alpha,
                error_mean,
                error_std,
                samples: errors.len(),
            }
        })
        .collect())
}

/// `alpha,error_mean,error_std`.
pub fn figure_csv(rows: &[FigureRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["alpha", "error_mean", "error_std"]).unwrap();
    for r in rows {
        w.write_record([format_alpha(r.alpha), r.error_mean.to_string(), r.error_std.to_string()])
            .unwrap();
    }
    w.into_inner().expect("in-memory writer")
}
