//! Task harnesses: XOR readout training, cat-state mixing optimization and
//! sweeps over the Kerr strength.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::Basis;
use crate::readout::MixingMatrix;

pub mod cat;
pub mod lstsq;
pub mod nelder_mead;
pub mod sweep;
pub mod xor;

pub use cat::{optimize_cat_mixing, CatCase, CatTaskConfig, CatTrainResult};
pub use lstsq::solve_readout_weights;
pub use nelder_mead::{minimize, Minimum, NelderMeadConfig};
pub use sweep::{sweep_nonlinearity, SweepConfig, SweepRow, SweepTask};
pub use xor::{run_xor_forward, train_xor, XorEncoding, XorTaskConfig, XorTrainResult};

/// Truncation of the network Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct BasisSpec {
    pub mode_dims: Vec<usize>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub total_cap: Option<usize>,
}

impl BasisSpec {
    pub fn uniform(n_modes: usize, dim: usize) -> Self {
        BasisSpec {
            mode_dims: vec![dim; n_modes],
            total_cap: None,
        }
    }

    /// Hard-core modes, the infinite-Kerr truncation.
    pub fn hard_core(n_modes: usize) -> Self {
        Self::uniform(n_modes, 2)
    }

    pub fn build(&self) -> Result<Arc<Basis>> {
        Basis::new(&self.mode_dims, self.total_cap)
    }
}

/// Per-case deviation between trained outputs and targets.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskError {
    pub mean_abs: f64,
    pub max_abs: f64,
}

/// Largest admissible max-case error of a working logic gate.
pub const SUCCESS_THRESHOLD: f64 = 0.5;

impl TaskError {
    pub fn success(&self) -> bool {
        self.max_abs < SUCCESS_THRESHOLD
    }
}

/// Absolute deviations over every case and output channel.
pub fn xor_task_error(outputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<TaskError> {
    if outputs.len() != targets.len() || outputs.is_empty() {
        return Err(Error::Shape(format!("{} outputs for {} targets", outputs.len(), targets.len())));
    }
    let mut sum = 0.0;
    let mut max = 0.0_f64;
    let mut count = 0usize;
    for (o, t) in outputs.iter().zip(targets) {
        if o.len() != t.len() {
            return Err(Error::Shape(format!("output has {} channels, target {}", o.len(), t.len())));
        }
        for (a, b) in o.iter().zip(t) {
            let e = (a - b).abs();
            sum += e;
            max = max.max(e);
            count += 1;
        }
    }
    Ok(TaskError {
        mean_abs: sum / count as f64,
        max_abs: max,
    })
}

/// Builds `W = exp(-i h)` from `N^2` reals: the `N` diagonal entries of `h`
/// followed by the real and imaginary parts of the upper triangle, row by row.
pub fn unitary_from_generator(theta: &[f64], n_modes: usize) -> Result<MixingMatrix> {
    if theta.len() != n_modes * n_modes {
        return Err(Error::DimensionMismatch {
            expected: n_modes * n_modes,
            got: theta.len(),
        });
    }
    let mut h = DMatrix::<C64>::zeros(n_modes, n_modes);
    for i in 0..n_modes {
        h[(i, i)] = C64::new(theta[i], 0.0);
    }
    let mut k = n_modes;
    for i in 0..n_modes {
        for j in i + 1..n_modes {
            let v = C64::new(theta[k], theta[k + 1]);
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
            k += 2;
        }
    }
    MixingMatrix::from_generator(h)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, num_traits::Float::sqrt(var))
}
