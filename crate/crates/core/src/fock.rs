//! Truncated multimode Fock spaces: bases, states and reduced density matrices.
//!
//! Multi-indices `(n_1, ..., n_N)` are enumerated lexicographically with mode 0
//! varying slowest. A basis is either the full product of per-mode cutoffs or
//! the subset whose total excitation number stays below an optional cap.
//! A per-mode dimension of 2 gives hard-core modes, the infinite-Kerr limit.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg;
use crate::operator::Operator;

/// Lost weight above which constructed states are reported as badly truncated.
pub const TRUNCATION_WARN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    mode_dims: Vec<usize>,
    total_cap: Option<usize>,
    /// Flattened multi-indices, `n_modes` entries per state, sorted.
    states: Vec<u16>,
}

impl Basis {
    /// Enumerates every admissible multi-index for the given cutoffs.
    pub fn new(mode_dims: &[usize], total_cap: Option<usize>) -> Result<Arc<Self>> {
        if mode_dims.is_empty() {
            return Err(Error::EmptyModes);
        }
        if let Some(mode) = mode_dims.iter().position(|&d| d == 0) {
            return Err(Error::ZeroDimension { mode });
        }
        if mode_dims.iter().any(|&d| d > u16::MAX as usize) {
            return Err(Error::invalid("mode_dims", "cutoff exceeds 65535"));
        }
        let mut states = Vec::new();
        let mut current = vec![0u16; mode_dims.len()];
        enumerate(mode_dims, total_cap, 0, 0, &mut current, &mut states);
        Ok(Arc::new(Basis {
            mode_dims: mode_dims.to_vec(),
            total_cap,
            states,
        }))
    }

    pub fn single_mode(dim: usize) -> Result<Arc<Self>> {
        Self::new(&[dim], None)
    }

    pub fn dim(&self) -> usize {
        self.states.len() / self.mode_dims.len()
    }

    pub fn n_modes(&self) -> usize {
        self.mode_dims.len()
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    pub fn total_cap(&self) -> Option<usize> {
        self.total_cap
    }

    /// Occupation numbers of the basis state at `index`.
    pub fn state(&self, index: usize) -> &[u16] {
        let n = self.mode_dims.len();
        &self.states[index * n..(index + 1) * n]
    }

    pub fn states(&self) -> impl Iterator<Item = &[u16]> {
        self.states.chunks_exact(self.mode_dims.len())
    }

    /// Flat index of a multi-index, if it belongs to the basis.
    pub fn index_of(&self, occupation: &[u16]) -> Option<usize> {
        if occupation.len() != self.n_modes() {
            return None;
        }
        let (mut lo, mut hi) = (0usize, self.dim());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.state(mid).cmp(occupation) {
                core::cmp::Ordering::Less => lo = mid + 1,
                core::cmp::Ordering::Greater => hi = mid,
                core::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn excitations(&self, index: usize) -> usize {
        self.state(index).iter().map(|&n| n as usize).sum()
    }

    pub fn max_excitation(&self) -> usize {
        (0..self.dim()).map(|i| self.excitations(i)).max().unwrap_or(0)
    }

    /// Largest occupation any single mode reaches in this basis.
    pub fn effective_dim(&self, mode: usize) -> usize {
        match self.total_cap {
            Some(cap) => self.mode_dims[mode].min(cap + 1),
            None => self.mode_dims[mode],
        }
    }

    /// Whether every state reachable by a number-conserving mode mixing stays
    /// inside the basis.
    pub fn is_number_closed(&self) -> bool {
        if self.n_modes() == 1 {
            return true;
        }
        match self.total_cap {
            Some(cap) => self.mode_dims.iter().all(|&d| d > cap),
            None => false,
        }
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            Err(Error::ModeOutOfRange {
                mode,
                n_modes: self.n_modes(),
            })
        } else {
            Ok(())
        }
    }
}

fn enumerate(
    dims: &[usize],
    cap: Option<usize>,
    mode: usize,
    used: usize,
    current: &mut Vec<u16>,
    out: &mut Vec<u16>,
) {
    if mode == dims.len() {
        out.extend_from_slice(current);
        return;
    }
    let mut top = dims[mode];
    if let Some(cap) = cap {
        top = top.min(cap - used + 1);
    }
    for n in 0..top {
        current[mode] = n as u16;
        enumerate(dims, cap, mode + 1, used + n, current, out);
    }
    current[mode] = 0;
}

/// Pure state on a basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: Arc<Basis>,
    amplitudes: DVector<C64>,
    lost_weight: f64,
}

impl StateVector {
    /// Normalizes the given amplitudes; `lost_weight` records the weight that the
    /// truncation removed before renormalization.
    pub fn from_amplitudes(basis: Arc<Basis>, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !(norm > 1e-12) {
            return Err(Error::NearZeroNorm { norm });
        }
        Ok(StateVector {
            basis,
            amplitudes: amplitudes.unscale(norm),
            lost_weight: 0.0,
        })
    }

    /// The Fock state `|n_1, ..., n_N>`.
    pub fn fock(basis: Arc<Basis>, occupation: &[u16]) -> Result<Self> {
        let idx = basis
            .index_of(occupation)
            .ok_or_else(|| Error::invalid("occupation", "Fock state is outside the basis"))?;
        let mut amps = DVector::zeros(basis.dim());
        amps[idx] = C64::new(1.0, 0.0);
        Ok(StateVector {
            basis,
            amplitudes: amps,
            lost_weight: 0.0,
        })
    }

    pub fn vacuum(basis: Arc<Basis>) -> Self {
        let occupation = vec![0u16; basis.n_modes()];
        Self::fock(basis, &occupation).expect("vacuum is in every basis")
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    /// Weight discarded by the Fock cutoff before renormalization.
    pub fn lost_weight(&self) -> f64 {
        self.lost_weight
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> Result<C64> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        DensityMatrix {
            basis: self.basis.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Density matrix on a basis, stored densely.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    basis: Arc<Basis>,
    matrix: DMatrix<C64>,
}

/// Deviations of a density matrix from the physical set.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateHealth {
    /// `|Tr rho - 1|`.
    pub trace_deviation: f64,
    /// `max |rho - rho^dag|`.
    pub hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
}

impl StateHealth {
    pub fn is_physical(&self, trace_tol: f64, herm_tol: f64, eig_tol: f64) -> bool {
        self.trace_deviation < trace_tol
            && self.hermiticity_deviation < herm_tol
            && self.min_eigenvalue >= -eig_tol
    }
}

impl DensityMatrix {
    pub fn from_matrix(basis: Arc<Basis>, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: matrix.nrows(),
            });
        }
        Ok(DensityMatrix { basis, matrix })
    }

    pub fn vacuum(basis: Arc<Basis>) -> Self {
        StateVector::vacuum(basis).to_density_matrix()
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn health(&self) -> StateHealth {
        StateHealth {
            trace_deviation: (self.trace() - C64::new(1.0, 0.0)).norm(),
            hermiticity_deviation: linalg::hermiticity_deviation(&self.matrix),
            min_eigenvalue: linalg::min_hermitian_eigenvalue(&self.matrix),
        }
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `<psi| rho |psi>`.
    pub fn fidelity_with_pure(&self, psi: &StateVector) -> Result<f64> {
        if self.basis != psi.basis {
            return Err(Error::BasisMismatch);
        }
        let a = psi.amplitudes();
        Ok(a.dotc(&(&self.matrix * a)).re)
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(DensityMatrix {
            basis: self.basis.clone(),
            matrix: self.matrix.scale(w) + other.matrix.scale(1.0 - w),
        })
    }
}

/// Truncated coherent-state coefficients `e^{-|b|^2/2} b^n / sqrt(n!)`, `n < len`.
pub fn coherent_coefficients(beta: C64, len: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(len);
    let mut c = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for n in 0..len {
        if n > 0 {
            c = c * beta / (n as f64).sqrt();
        }
        out.push(c);
    }
    out
}

/// Product coherent state `|beta_1> (x) ... (x) |beta_N>` restricted to the basis
/// and renormalized.
pub fn coherent_state(basis: Arc<Basis>, amplitudes: &[C64]) -> Result<StateVector> {
    if amplitudes.len() != basis.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: basis.n_modes(),
            got: amplitudes.len(),
        });
    }
    if amplitudes.iter().any(|&z| !linalg::is_finite(z)) {
        return Err(Error::invalid("amplitudes", "non-finite coherent amplitude"));
    }
    let tables: Vec<Vec<C64>> = amplitudes
        .iter()
        .zip(basis.mode_dims())
        .map(|(&b, &d)| coherent_coefficients(b, d))
        .collect();
    let amps = DVector::from_iterator(
        basis.dim(),
        basis.states().map(|occ| {
            occ.iter()
                .zip(&tables)
                .fold(C64::new(1.0, 0.0), |acc, (&n, t)| acc * t[n as usize])
        }),
    );
    let kept = amps.norm_squared();
    let lost_weight = (1.0 - kept).max(0.0);
    if lost_weight > TRUNCATION_WARN {
        log::warn!("coherent state truncated: lost weight {lost_weight:.3e} before renormalization");
    }
    let mut state = StateVector::from_amplitudes(basis, amps)?;
    state.lost_weight = lost_weight;
    Ok(state)
}

/// Normalization `N = sqrt(2 (1 + (-1)^k e^{-2|beta|^2}))` of `|beta> + (-1)^k |-beta>`.
pub fn cat_normalization(beta: C64, k: u8) -> f64 {
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    (2.0 * (1.0 + sign * (-2.0 * beta.norm_sqr()).exp())).sqrt()
}

/// Smallest cutoff whose coherent-state tail weight is below `tail`.
pub fn cutoff_for(beta: C64, tail: f64) -> usize {
    let mean = beta.norm_sqr();
    let mut p = (-mean).exp();
    let mut acc = 0.0;
    let mut n = 0usize;
    loop {
        acc += p;
        n += 1;
        if 1.0 - acc < tail && n >= 2 && n as f64 > mean {
            return n;
        }
        p *= mean / n as f64;
        if n > 4096 {
            return n;
        }
    }
}

/// Single-mode cat state `(|beta> + (-1)^k |-beta>) / N` on a `dim`-level mode.
pub fn cat_state(beta: C64, k: u8, dim: usize) -> Result<StateVector> {
    if k > 1 {
        return Err(Error::invalid("k", "parity must be 0 or 1"));
    }
    let basis = Basis::single_mode(dim)?;
    let sign = if k == 0 { 1.0 } else { -1.0 };
    let plus = coherent_coefficients(beta, dim);
    let minus = coherent_coefficients(-beta, dim);
    let amps = DVector::from_iterator(dim, plus.iter().zip(&minus).map(|(a, b)| a + b * sign));
    let exact_norm = cat_normalization(beta, k);
    let norm = amps.norm();
    if !(norm > 1e-8) || !(exact_norm > 1e-8) {
        return Err(Error::NearZeroNorm { norm });
    }
    let lost_weight = (1.0 - (norm / exact_norm).powi(2)).max(0.0);
    if lost_weight > TRUNCATION_WARN {
        log::warn!("cat state truncated: lost weight {lost_weight:.3e} before renormalization");
    }
    let mut state = StateVector::from_amplitudes(basis, amps)?;
    state.lost_weight = lost_weight;
    Ok(state)
}

/// Cat state with the cutoff chosen so the coherent tail is negligible.
pub fn cat_state_auto(beta: C64, k: u8) -> Result<StateVector> {
    cat_state(beta, k, cutoff_for(beta, 1e-14).max(4))
}

/// Reduced density matrix on the `keep` modes (reported in ascending order).
///
/// The reduced basis is the plain product of the kept cutoffs; when the input
/// basis carries an excitation cap, the kept cutoffs are clipped to `cap + 1`
/// and the missing product states are zero-padded.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let basis = rho.basis();
    if keep.is_empty() {
        return Err(Error::invalid("keep", "at least one mode must be kept"));
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    for &m in &keep {
        basis.check_mode(m)?;
    }
    let traced: Vec<usize> = (0..basis.n_modes()).filter(|m| !keep.contains(m)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&m| basis.effective_dim(m)).collect();
    let reduced = Basis::new(&kept_dims, None)?;

    let mut groups: BTreeMap<Vec<u16>, Vec<(usize, usize)>> = BTreeMap::new();
    let mut kept_occ = vec![0u16; keep.len()];
    for (idx, occ) in basis.states().enumerate() {
        let env: Vec<u16> = traced.iter().map(|&m| occ[m]).collect();
        for (slot, &m) in keep.iter().enumerate() {
            kept_occ[slot] = occ[m];
        }
        let r = reduced.index_of(&kept_occ).expect("kept occupations fit the reduced cutoffs");
        groups.entry(env).or_default().push((idx, r));
    }

    let m = rho.matrix();
    let mut out = DMatrix::<C64>::zeros(reduced.dim(), reduced.dim());
    for members in groups.values() {
        for &(ci, cr) in members {
            for &(ri, rr) in members {
                out[(rr, cr)] += m[(ri, ci)];
            }
        }
    }
    DensityMatrix::from_matrix(reduced, out)
}

/// `Tr(op rho)`.
pub fn expectation(rho: &DensityMatrix, op: &Operator) -> Result<C64> {
    if rho.basis() != op.basis() {
        return Err(Error::BasisMismatch);
    }
    let m = rho.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for (r, c, v) in op.iter() {
        acc += v * m[(c, r)];
    }
    Ok(acc)
}
