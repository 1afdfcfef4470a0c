//! Throughput of the master-equation right-hand side.

use std::sync::Arc;
use std::time::{Duration, Instant};

use kerr_qnn_core::dynamics::{Liouvillian, NetworkParams};
use kerr_qnn_core::fock::{Basis, DensityMatrix};
use kerr_qnn_core::{Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchReport {
    pub steps: usize,
    pub dim: usize,
    pub elapsed: Duration,
    /// Liouvillian applications per second.
    pub applies_per_second: f64,
}

/// Applies the Liouvillian `steps` times to the maximally mixed state.
pub fn liouvillian_apply_count_benchmark(params: &NetworkParams, basis: &Arc<Basis>, steps: usize) -> Result<BenchReport> {
    let l = Liouvillian::new(params, basis, true)?;
    let d = basis.dim();
    let rho = DensityMatrix::from_matrix(
        basis.clone(),
        nalgebra::DMatrix::from_diagonal_element(d, d, C64::new(1.0 / d as f64, 0.0)),
    )?;
    let src = rho.matrix().as_slice();
    let mut out = vec![C64::new(0.0, 0.0); d * d];
    let mut scratch = out.clone();
    let start = Instant::now();
    for _ in 0..steps {
        l.apply_hermitian(std::hint::black_box(src), &mut out, &mut scratch);
        std::hint::black_box(&out);
    }
    let elapsed = start.elapsed();
    Ok(BenchReport {
        steps,
        dim: d,
        elapsed,
        applies_per_second: steps as f64 / elapsed.as_secs_f64().max(1e-12),
    })
}
