//! Affine least-squares readout fitting.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::readout::LinearReadout;

/// Ridge added to the weight block of the normal equations.
pub const RIDGE: f64 = 1e-10;

/// Fits `y = W x + b` minimizing the mean squared error over all rows.
///
/// `features` has one row per sample, `targets` one row per sample with one
/// entry per output channel. The intercept is not penalized.
pub fn solve_readout_weights(features: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<LinearReadout> {
    let rows = features.len();
    if rows < 4 {
        return Err(Error::Shape(format!("need at least 4 samples, got {rows}")));
    }
    if targets.len() != rows {
        return Err(Error::Shape(format!("{rows} feature rows but {} target rows", targets.len())));
    }
    let f = features[0].len();
    let k = targets[0].len();
    if features.iter().any(|r| r.len() != f) || targets.iter().any(|r| r.len() != k) {
        return Err(Error::Shape("ragged feature or target rows".into()));
    }
    if features.iter().flatten().chain(targets.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("features", "non-finite entry"));
    }

    let x = DMatrix::from_fn(rows, f + 1, |r, c| if c < f { features[r][c] } else { 1.0 });
    let y = DMatrix::from_fn(rows, k, |r, c| targets[r][c]);
    let mut gram = x.transpose() * &x;
    for i in 0..f {
        gram[(i, i)] += RIDGE;
    }
    let rhs = x.transpose() * &y;
    let coef = match linalg::solve_dense(&gram, &rhs) {
        Some(c) => c,
        // only reachable when every feature column vanishes
        None => {
            let mut gram = gram;
            gram[(f, f)] += RIDGE;
            linalg::solve_dense(&gram, &rhs).ok_or_else(|| Error::Shape("singular normal equations".into()))?
        }
    };
    Ok(LinearReadout {
        weights: (0..k).map(|out| (0..f).map(|i| coef[(i, out)]).collect()).collect(),
        bias: (0..k).map(|out| coef[(f, out)]).collect(),
    })
}
