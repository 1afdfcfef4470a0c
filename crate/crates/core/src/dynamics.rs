//! Network Hamiltonian, Lindblad master equation and classical mean-field dynamics.
//!
//! The Hamiltonian of an `N`-mode network is
//!
//! ```text
//! H = sum_i (E n_i + alpha a_i^dag a_i^dag a_i a_i)
//!   + sum_<ij> J_ij (a_i a_j^dag + a_i^dag a_j)
//!   + sum_i (P_i a_i^dag + P_i^* a_i)
//! ```
//!
//! with the hopping sum running once over every nearest-neighbour pair, and
//! every mode decays at rate `gamma`:
//!
//! ```text
//! d rho / dt = -i [H, rho] + (gamma / 2) sum_i (2 a_i rho a_i^dag - a_i^dag a_i rho - rho a_i^dag a_i)
//! ```

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{Basis, DensityMatrix};
use crate::integrate::{self, Trajectory};
use crate::linalg;
use crate::operator::Operator;
use crate::seed;

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Kerr strength `alpha`, or the hard-core limit `alpha -> infinity`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(from = "KerrRepr", into = "KerrRepr"))]
pub enum Kerr {
    Finite(f64),
    /// Hard-core bosons: every mode restricted to `{|0>, |1>}`.
    Infinite,
}

impl Kerr {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Kerr::Infinite)
    }

    /// Numeric strength, `+inf` for the hard-core limit.
    pub fn value(&self) -> f64 {
        match *self {
            Kerr::Finite(a) => a,
            Kerr::Infinite => f64::INFINITY,
        }
    }

    /// Total order with the hard-core limit last.
    pub fn total_cmp(&self, other: &Kerr) -> core::cmp::Ordering {
        self.value().total_cmp(&other.value())
    }
}

impl From<f64> for Kerr {
    fn from(a: f64) -> Self {
        if a.is_infinite() {
            Kerr::Infinite
        } else {
            Kerr::Finite(a)
        }
    }
}

impl core::fmt::Display for Kerr {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Kerr::Finite(a) => write!(f, "{a}"),
            Kerr::Infinite => f.write_str("inf"),
        }
    }
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
enum KerrRepr {
    Value(f64),
    Tag(InfiniteTag),
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
enum InfiniteTag {
    Infinite,
}

#[cfg(feature = "serde")]
impl From<KerrRepr> for Kerr {
    fn from(r: KerrRepr) -> Self {
        match r {
            KerrRepr::Value(a) => Kerr::Finite(a),
            KerrRepr::Tag(InfiniteTag::Infinite) => Kerr::Infinite,
        }
    }
}

#[cfg(feature = "serde")]
impl From<Kerr> for KerrRepr {
    fn from(k: Kerr) -> Self {
        match k {
            Kerr::Finite(a) => KerrRepr::Value(a),
            Kerr::Infinite => KerrRepr::Tag(InfiniteTag::Infinite),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Topology {
    /// Open 1D chain `0 - 1 - ... - (N-1)`.
    #[default]
    Chain,
    /// Closed chain with the extra bond `(N-1) - 0`.
    Ring,
}

impl Topology {
    pub fn edges(&self, n: usize) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        if *self == Topology::Ring && n > 2 {
            edges.push((0, n - 1));
        }
        edges
    }
}

/// Physical parameters of the network, in units of `gamma` (`hbar = 1`).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkParams {
    /// Onsite energy `E`.
    pub onsite: f64,
    pub kerr: Kerr,
    pub gamma: f64,
    pub topology: Topology,
    /// Symmetric coupling matrix `J`, row-major `N x N`.
    pub coupling: Vec<f64>,
    /// Coherent pump amplitude per mode.
    pub pump: Vec<C64>,
    /// Evolution time.
    pub tau: f64,
}

impl NetworkParams {
    /// Uncoupled, undriven, linear modes with `gamma = 1`, `tau = 1`.
    pub fn new(n_modes: usize) -> Self {
        NetworkParams {
            onsite: 0.0,
            kerr: Kerr::Finite(0.0),
            gamma: 1.0,
            topology: Topology::Chain,
            coupling: vec![0.0; n_modes * n_modes],
            pump: vec![ZERO; n_modes],
            tau: 1.0,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.pump.len()
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.n_modes() + j]
    }

    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) {
        let n = self.n_modes();
        self.coupling[i * n + j] = value;
        self.coupling[j * n + i] = value;
    }

    /// Nearest-neighbour bonds of the configured topology.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.topology.edges(self.n_modes())
    }

    pub fn with_kerr(mut self, kerr: Kerr) -> Self {
        self.kerr = kerr;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_modes();
        if n == 0 {
            return Err(Error::EmptyModes);
        }
        if self.coupling.len() != n * n {
            return Err(Error::invalid("coupling", format!("expected {} entries, got {}", n * n, self.coupling.len())));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid("gamma", format!("must be positive and finite, got {}", self.gamma)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::invalid("tau", format!("must be positive and finite, got {}", self.tau)));
        }
        if !self.onsite.is_finite() {
            return Err(Error::invalid("onsite", "must be finite"));
        }
        if let Kerr::Finite(a) = self.kerr {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(Error::invalid("kerr", format!("must be non-negative, got {a}")));
            }
        }
        if self.pump.iter().any(|&p| !linalg::is_finite(p)) {
            return Err(Error::invalid("pump", "must be finite"));
        }
        let edges = self.edges();
        for i in 0..n {
            for j in 0..n {
                let v = self.coupling(i, j);
                if !v.is_finite() {
                    return Err(Error::invalid("coupling", "must be finite"));
                }
                if v != self.coupling(j, i) {
                    return Err(Error::invalid("coupling", format!("J[{i}][{j}] != J[{j}][{i}]")));
                }
                let bonded = edges.contains(&(i.min(j), i.max(j)));
                if v != 0.0 && !bonded {
                    return Err(Error::invalid(
                        "coupling",
                        format!("J[{i}][{j}] = {v} is not a nearest-neighbour bond"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Coupling matrix with bond strengths drawn uniformly from `[0, j_max]`.
pub fn random_couplings(n: usize, topology: Topology, j_max: f64, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed, 0);
    let mut j = vec![0.0; n * n];
    for (a, b) in topology.edges(n) {
        let v = j_max * rng.gen::<f64>();
        j[a * n + b] = v;
        j[b * n + a] = v;
    }
    j
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum Method {
    /// Classical fourth-order Runge-Kutta at fixed step.
    Rk4,
    /// Dormand-Prince 5(4) with a max-abs local error bound.
    Adaptive { atol: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvolutionConfig {
    pub dt: f64,
    pub method: Method,
    /// Times at which the state is additionally recorded.
    pub record_times: Vec<f64>,
    /// `false` switches the dissipator off (closed-system evolution).
    pub dissipation: bool,
}

impl EvolutionConfig {
    pub fn new(dt: f64) -> Self {
        EvolutionConfig {
            dt,
            method: Method::Rk4,
            record_times: Vec::new(),
            dissipation: true,
        }
    }

    /// Default step `tau / 10^4`.
    pub fn for_tau(tau: f64) -> Self {
        Self::new(tau / 1e4)
    }

    pub fn validate(&self, tau: f64) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if self.dt > tau * (1.0 + 1e-12) {
            return Err(Error::invalid("dt", format!("dt = {} exceeds tau = {tau}", self.dt)));
        }
        if let Method::Adaptive { atol } = self.method {
            if !(atol > 0.0) {
                return Err(Error::invalid("atol", "must be positive"));
            }
        }
        if self.record_times.iter().any(|&t| !(t >= 0.0 && t <= tau)) {
            return Err(Error::invalid("record_times", "sample times must lie in [0, tau]"));
        }
        Ok(())
    }
}

/// Network Hamiltonian on `basis`, optionally including the coherent pump.
pub fn build_hamiltonian(params: &NetworkParams, basis: &Arc<Basis>, include_pump: bool) -> Result<Operator> {
    params.validate()?;
    let n = params.n_modes();
    if basis.n_modes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: basis.n_modes(),
        });
    }
    let alpha = match params.kerr {
        Kerr::Finite(a) => a,
        Kerr::Infinite => {
            if basis.mode_dims().iter().any(|&d| d != 2) {
                return Err(Error::invalid(
                    "kerr",
                    "the infinite-Kerr limit needs hard-core modes (dimension 2)",
                ));
            }
            0.0
        }
    };
    let bonds: Vec<(usize, usize, f64)> = params
        .edges()
        .into_iter()
        .map(|(i, j)| (i, j, params.coupling(i, j)))
        .filter(|&(_, _, v)| v != 0.0)
        .collect();

    let mut triplets = Vec::new();
    let mut occ = vec![0u16; n];
    for col in 0..basis.dim() {
        let state = basis.state(col);
        let diag: f64 = state
            .iter()
            .map(|&k| {
                let k = k as f64;
                params.onsite * k + alpha * k * (k - 1.0)
            })
            .sum();
        if diag != 0.0 {
            triplets.push((col, col, C64::new(diag, 0.0)));
        }
        for &(i, j, v) in &bonds {
            for (from, to) in [(i, j), (j, i)] {
                let nf = state[from];
                if nf == 0 {
                    continue;
                }
                occ.copy_from_slice(state);
                occ[from] -= 1;
                occ[to] += 1;
                if let Some(row) = basis.index_of(&occ) {
                    let amp = (nf as f64).sqrt() * ((state[to] + 1) as f64).sqrt();
                    triplets.push((row, col, C64::new(v * amp, 0.0)));
                }
            }
        }
        if include_pump {
            for (i, &p) in params.pump.iter().enumerate() {
                if p == ZERO {
                    continue;
                }
                let k = state[i];
                occ.copy_from_slice(state);
                occ[i] = k + 1;
                if let Some(row) = basis.index_of(&occ) {
                    triplets.push((row, col, p * ((k + 1) as f64).sqrt()));
                }
                if k > 0 {
                    occ[i] = k - 1;
                    if let Some(row) = basis.index_of(&occ) {
                        triplets.push((row, col, p.conj() * (k as f64).sqrt()));
                    }
                }
            }
        }
    }
    Operator::from_triplets(basis.clone(), triplets)
}

/// Reference right-hand side of the master equation, assembled term by term
/// from operator products. Works for any (not necessarily Hermitian) `rho`.
pub fn lindblad_derivative(rho: &DensityMatrix, h: &Operator, params: &NetworkParams) -> Result<DMatrix<C64>> {
    let basis = rho.basis();
    if h.basis() != basis {
        return Err(Error::BasisMismatch);
    }
    let m = rho.matrix();
    let h_rho = h.mul_dense(m)?;
    let rho_h = h.adjoint().mul_dense(&m.adjoint())?.adjoint();
    let mut out = (h_rho - rho_h) * (-I);
    for mode in 0..basis.n_modes() {
        let a = Operator::annihilation(basis.clone(), mode)?;
        let n = a.adjoint().mul(&a)?;
        let a_rho = a.mul_dense(m)?;
        let a_rho_adag = a.mul_dense(&a_rho.adjoint())?.adjoint();
        let n_rho = n.mul_dense(m)?;
        let rho_n = n.mul_dense(&m.adjoint())?.adjoint();
        out += (a_rho_adag.scale(2.0) - n_rho - rho_n).scale(0.5 * params.gamma);
    }
    Ok(out)
}

/// Vectorized Liouvillian `L(rho)` that never materializes the superoperator.
///
/// `L(rho) = -i (H_eff rho - rho H_eff^dag) + gamma sum_i a_i rho a_i^dag`
/// with `H_eff = H - i (gamma/2) N_total`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    h_eff: Operator,
    /// Per mode, the nonzero entries `(row, col, value)` of `a_i`.
    jumps: Vec<Vec<(usize, usize, f64)>>,
    gamma: f64,
}

impl Liouvillian {
    pub fn new(params: &NetworkParams, basis: &Arc<Basis>, dissipation: bool) -> Result<Self> {
        let h = build_hamiltonian(params, basis, true)?;
        let gamma = if dissipation { params.gamma } else { 0.0 };
        let h_eff = if gamma > 0.0 {
            h.add(&Operator::total_number(basis.clone()).scale(C64::new(0.0, -0.5 * gamma)))?
        } else {
            h
        };
        let mut jumps = Vec::new();
        if gamma > 0.0 {
            for mode in 0..basis.n_modes() {
                let a = Operator::annihilation(basis.clone(), mode)?;
                jumps.push(a.iter().map(|(r, c, v)| (r, c, v.re)).collect());
            }
        }
        Ok(Liouvillian {
            dim: basis.dim(),
            h_eff,
            jumps,
            gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian_nnz(&self) -> usize {
        self.h_eff.nnz()
    }

    /// `K = H_eff * rho` for column-major `rho`.
    fn heff_times(&self, rho: &[C64], k: &mut [C64]) {
        let d = self.dim;
        for c in 0..d {
            let src = &rho[c * d..(c + 1) * d];
            let dst = &mut k[c * d..(c + 1) * d];
            for (r, out) in dst.iter_mut().enumerate() {
                let (cols, vals) = self.h_eff.row(r);
                let mut acc = ZERO;
                for (&j, &v) in cols.iter().zip(vals) {
                    acc += v * src[j];
                }
                *out = acc;
            }
        }
    }

    fn add_jumps(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for jump in &self.jumps {
            for &(rc, kc, sc) in jump {
                let w = self.gamma * sc;
                for &(rr, kr, sr) in jump {
                    out[rr + rc * d] += rho[kr + kc * d] * (w * sr);
                }
            }
        }
    }

    /// `L(rho)` for Hermitian column-major `rho`, using `rho H_eff^dag = (H_eff rho)^dag`.
    /// The result is exactly Hermitian. `scratch` must hold `dim^2` entries.
    pub fn apply_hermitian(&self, rho: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let d = self.dim;
        self.heff_times(rho, scratch);
        for c in 0..d {
            for r in 0..d {
                out[r + c * d] = (scratch[r + c * d] - scratch[c + r * d].conj()) * (-I);
            }
        }
        self.add_jumps(rho, out);
    }

    /// `L(rho)` for arbitrary column-major `rho`.
    pub fn apply(&self, rho: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let d = self.dim;
        self.heff_times(rho, scratch);
        // rho H_eff^dag = (H_eff rho^dag)^dag
        let mut rho_dag = vec![ZERO; d * d];
        for c in 0..d {
            for r in 0..d {
                rho_dag[r + c * d] = rho[c + r * d].conj();
            }
        }
        let mut k2 = vec![ZERO; d * d];
        self.heff_times(&rho_dag, &mut k2);
        for c in 0..d {
            for r in 0..d {
                out[r + c * d] = (scratch[r + c * d] - k2[c + r * d].conj()) * (-I);
            }
        }
        self.add_jumps(rho, out);
    }
}

/// Result of a master-equation run.
#[derive(Debug, Clone)]
pub struct MasterEvolution {
    pub state: DensityMatrix,
    pub samples: Vec<(f64, DensityMatrix)>,
    pub steps: usize,
    /// Largest `|Tr rho(t) - Tr rho(0)|` seen after any step.
    pub max_trace_drift: f64,
}

/// Tolerance on the trace drift accumulated by the integrator.
pub const TRACE_TOLERANCE: f64 = 1e-8;

/// Integrates the master equation from `rho0` up to `params.tau`.
///
/// After each step the state is re-symmetrized to `(rho + rho^dag) / 2`; the run
/// aborts with [`Error::Unstable`] when the trace drifts by more than
/// [`TRACE_TOLERANCE`] or an entry leaves the unit disc.
pub fn evolve_master_equation(
    rho0: &DensityMatrix,
    params: &NetworkParams,
    cfg: &EvolutionConfig,
) -> Result<MasterEvolution> {
    params.validate()?;
    cfg.validate(params.tau)?;
    let basis = rho0.basis().clone();
    let liouvillian = Liouvillian::new(params, &basis, cfg.dissipation)?;
    let d = basis.dim();
    let trace0 = rho0.trace().re;
    let mut scratch = vec![ZERO; d * d];
    let mut max_drift = 0.0_f64;

    let Trajectory { state, samples, steps } = integrate::integrate(
        rho0.matrix().as_slice().to_vec(),
        params.tau,
        cfg.dt,
        cfg.method,
        &cfg.record_times,
        |y, out| liouvillian.apply_hermitian(y, out, &mut scratch),
        |t, y| {
            let mut trace = 0.0;
            let mut largest = 0.0_f64;
            for c in 0..d {
                for r in 0..c {
                    let avg = (y[r + c * d] + y[c + r * d].conj()) * 0.5;
                    y[r + c * d] = avg;
                    y[c + r * d] = avg.conj();
                    largest = largest.max(avg.norm());
                }
                let diag = &mut y[c + c * d];
                *diag = C64::new(diag.re, 0.0);
                trace += diag.re;
                largest = largest.max(diag.re.abs());
            }
            let drift = (trace - trace0).abs();
            max_drift = max_drift.max(drift);
            if !drift.is_finite() || drift > TRACE_TOLERANCE {
                return Err(Error::Unstable {
                    time: t,
                    reason: format!("trace drifted by {drift:e}"),
                });
            }
            if !largest.is_finite() || largest > trace0.abs() * (1.0 + 1e-6) {
                return Err(Error::Unstable {
                    time: t,
                    reason: format!("density-matrix entry grew to {largest:e}"),
                });
            }
            Ok(())
        },
    )?;
    let wrap = |v: Vec<C64>| DensityMatrix::from_matrix(basis.clone(), DMatrix::from_vec(d, d, v));
    let samples = samples
        .into_iter()
        .map(|(t, v)| wrap(v).map(|m| (t, m)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MasterEvolution {
        state: wrap(state)?,
        samples,
        steps,
        max_trace_drift: max_drift,
    })
}

/// Classical field amplitudes `psi_i`, one per mode.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanFieldState {
    pub psi: Vec<C64>,
}

impl MeanFieldState {
    pub fn vacuum(n_modes: usize) -> Self {
        MeanFieldState { psi: vec![ZERO; n_modes] }
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.psi.iter().map(|p| p.norm_sqr()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct MeanFieldEvolution {
    pub state: MeanFieldState,
    pub samples: Vec<(f64, MeanFieldState)>,
}

/// Mean-field right-hand side
/// `i dpsi_i/dt = (E - i gamma/2) psi_i + 2 alpha |psi_i|^2 psi_i + sum_j J_ij psi_j + P_i`.
pub fn mean_field_derivative(psi: &[C64], params: &NetworkParams, dissipation: bool, out: &mut [C64]) {
    let n = psi.len();
    let alpha = params.kerr.value();
    let damping = if dissipation { 0.5 * params.gamma } else { 0.0 };
    for i in 0..n {
        let mut acc = C64::new(params.onsite, -damping) * psi[i] + psi[i] * (2.0 * alpha * psi[i].norm_sqr()) + params.pump[i];
        for j in 0..n {
            let v = params.coupling[i * n + j];
            if v != 0.0 {
                acc += psi[j] * v;
            }
        }
        out[i] = acc * (-I);
    }
}

/// Integrates the mean-field equations from `psi0` up to `params.tau`.
pub fn evolve_mean_field(
    psi0: &MeanFieldState,
    params: &NetworkParams,
    cfg: &EvolutionConfig,
) -> Result<MeanFieldEvolution> {
    params.validate()?;
    cfg.validate(params.tau)?;
    if params.kerr.is_infinite() {
        return Err(Error::invalid("kerr", "mean-field dynamics needs a finite Kerr strength"));
    }
    if psi0.psi.len() != params.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: params.n_modes(),
            got: psi0.psi.len(),
        });
    }
    let traj = integrate::integrate(
        psi0.psi.clone(),
        params.tau,
        cfg.dt,
        cfg.method,
        &cfg.record_times,
        |y, out| mean_field_derivative(y, params, cfg.dissipation, out),
        |t, y| {
            if y.iter().any(|z| !linalg::is_finite(*z) || z.norm() > 1e150) {
                Err(Error::Divergence { time: t })
            } else {
                Ok(())
            }
        },
    )?;
    Ok(MeanFieldEvolution {
        state: MeanFieldState { psi: traj.state },
        samples: traj
            .samples
            .into_iter()
            .map(|(t, psi)| (t, MeanFieldState { psi }))
            .collect(),
    })
}

/// `<a_i>` of every mode.
pub fn mode_amplitudes(rho: &DensityMatrix) -> Result<Vec<C64>> {
    let basis = rho.basis();
    (0..basis.n_modes())
        .map(|m| crate::fock::expectation(rho, &Operator::annihilation(basis.clone(), m)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, StateVector};
    use approx::assert_abs_diff_eq;

    fn single(onsite: f64, alpha: f64) -> NetworkParams {
        let mut p = NetworkParams::new(1);
        p.onsite = onsite;
        p.kerr = Kerr::Finite(alpha);
        p
    }

    #[test]
    fn kerr_diagonal() {
        let b = Basis::single_mode(4).unwrap();
        let h = build_hamiltonian(&single(1.0, 0.5), &b, false).unwrap();
        assert_abs_diff_eq!(h.get(2, 2).re, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.get(1, 1).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.get(3, 3).re, 3.0 + 3.0, epsilon = 1e-15);
    }

    #[test]
    fn hopping_block_eigenvalues() {
        let b = Basis::new(&[2, 2], None).unwrap();
        let mut p = NetworkParams::new(2);
        p.onsite = 0.7;
        p.set_coupling(0, 1, 0.3);
        let h = build_hamiltonian(&p, &b, false).unwrap().to_dense();
        // single-excitation states |01>, |10> are indices 1, 2
        let block = h.view((1, 1), (2, 2)).into_owned();
        let ev = linalg::hermitian_eigenvalues(&block);
        assert_abs_diff_eq!(ev[0], 0.4, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn hamiltonian_is_hermitian_with_pump() {
        let b = Basis::new(&[4, 3, 3], Some(5)).unwrap();
        let mut p = NetworkParams::new(3);
        p.onsite = 0.3;
        p.kerr = Kerr::Finite(1.7);
        p.coupling = random_couplings(3, Topology::Chain, 2.0, 11);
        p.pump = vec![C64::new(0.4, -0.2), ZERO, C64::new(0.0, 1.1)];
        let h = build_hamiltonian(&p, &b, true).unwrap();
        assert!(h.hermiticity_deviation() < 1e-12);
        assert_abs_diff_eq!(h.get(b.index_of(&[1, 0, 0]).unwrap(), 0).re, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn infinite_kerr_needs_hard_core_modes() {
        let p = NetworkParams::new(2).with_kerr(Kerr::Infinite);
        assert!(build_hamiltonian(&p, &Basis::new(&[3, 2], None).unwrap(), true).is_err());
        let h = build_hamiltonian(&p, &Basis::new(&[2, 2], None).unwrap(), true).unwrap();
        assert_eq!(h.nnz(), 0);
    }

    #[test]
    fn validation_rejects_bad_params() {
        let mut p = NetworkParams::new(3);
        p.gamma = -1.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { field: "gamma", .. })));
        let mut p = NetworkParams::new(3);
        p.coupling[2] = 1.0;
        p.coupling[6] = 1.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { field: "coupling", .. })));
        p.topology = Topology::Ring;
        assert!(p.validate().is_ok());
        let mut p = NetworkParams::new(2);
        p.coupling[1] = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn random_couplings_are_nearest_neighbour() {
        let j = random_couplings(5, Topology::Chain, 2.0, 3);
        let mut p = NetworkParams::new(5);
        p.coupling = j.clone();
        p.validate().unwrap();
        assert!(j.iter().all(|&v| (0.0..=2.0).contains(&v)));
        assert_eq!(j, random_couplings(5, Topology::Chain, 2.0, 3));
    }

    #[test]
    fn vacuum_is_dark() {
        let b = Basis::new(&[3, 3], None).unwrap();
        let mut p = NetworkParams::new(2);
        p.set_coupling(0, 1, 1.0);
        p.kerr = Kerr::Finite(2.0);
        p.onsite = 0.5;
        let h = build_hamiltonian(&p, &b, true).unwrap();
        let d = lindblad_derivative(&DensityMatrix::vacuum(b), &h, &p).unwrap();
        assert_eq!(linalg::max_abs(&d), 0.0);
    }

    fn random_hermitian(d: usize, seed: u64) -> DMatrix<C64> {
        let mut rng = seed::rng(seed, 1);
        let a = DMatrix::from_fn(d, d, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        (&a + a.adjoint()).scale(0.5)
    }

    #[test]
    fn derivative_is_traceless_and_fast_kernel_agrees() {
        let b = Basis::new(&[3, 3, 2], None).unwrap();
        let mut p = NetworkParams::new(3);
        p.onsite = 0.2;
        p.kerr = Kerr::Finite(0.9);
        p.coupling = random_couplings(3, Topology::Chain, 1.5, 4);
        p.pump = vec![C64::new(0.3, 0.1), ZERO, C64::new(-0.2, 0.0)];
        let h = build_hamiltonian(&p, &b, true).unwrap();
        let m = random_hermitian(b.dim(), 9);
        let rho = DensityMatrix::from_matrix(b.clone(), m.clone()).unwrap();
        let reference = lindblad_derivative(&rho, &h, &p).unwrap();
        assert!(reference.trace().norm() < 1e-12);
        assert!(linalg::hermiticity_deviation(&reference) < 1e-12);

        let l = Liouvillian::new(&p, &b, true).unwrap();
        let d = b.dim();
        let mut out = vec![ZERO; d * d];
        let mut scratch = vec![ZERO; d * d];
        l.apply_hermitian(m.as_slice(), &mut out, &mut scratch);
        let fast = DMatrix::from_vec(d, d, out.clone());
        assert!(linalg::max_abs(&(fast - &reference)) < 1e-12);
        l.apply(m.as_slice(), &mut out, &mut scratch);
        let general = DMatrix::from_vec(d, d, out);
        assert!(linalg::max_abs(&(general - &reference)) < 1e-12);
    }

    #[test]
    fn dense_and_sparse_hamiltonian_application_agree() {
        let b = Basis::new(&[4, 4], None).unwrap();
        let mut p = NetworkParams::new(2);
        p.kerr = Kerr::Finite(0.4);
        p.set_coupling(0, 1, 0.8);
        p.pump = vec![C64::new(0.5, 0.0), ZERO];
        let h = build_hamiltonian(&p, &b, true).unwrap();
        let m = random_hermitian(b.dim(), 2);
        let sparse = h.mul_dense(&m).unwrap();
        let dense = h.to_dense() * &m;
        assert!(linalg::max_abs(&(sparse - dense)) < 1e-12);
    }

    #[test]
    fn general_kernel_handles_non_hermitian_input() {
        let b = Basis::new(&[3, 2], None).unwrap();
        let mut p = NetworkParams::new(2);
        p.set_coupling(0, 1, 0.6);
        p.kerr = Kerr::Finite(0.3);
        let h = build_hamiltonian(&p, &b, true).unwrap();
        let mut rng = seed::rng(5, 5);
        let m = DMatrix::from_fn(b.dim(), b.dim(), |_, _| C64::new(rng.gen(), rng.gen()));
        let rho = DensityMatrix::from_matrix(b.clone(), m.clone()).unwrap();
        let reference = lindblad_derivative(&rho, &h, &p).unwrap();
        let l = Liouvillian::new(&p, &b, true).unwrap();
        let d = b.dim();
        let (mut out, mut scratch) = (vec![ZERO; d * d], vec![ZERO; d * d]);
        l.apply(m.as_slice(), &mut out, &mut scratch);
        assert!(linalg::max_abs(&(DMatrix::from_vec(d, d, out) - reference)) < 1e-12);
    }

    #[test]
    fn coherent_number_decay_rate() {
        // d<n>/dt = -gamma <n> for a linear undriven mode
        let b = Basis::single_mode(20).unwrap();
        let p = single(0.0, 0.0);
        let rho = coherent_state(b.clone(), &[C64::new(1.0, 0.0)]).unwrap().to_density_matrix();
        let h = build_hamiltonian(&p, &b, true).unwrap();
        let d = lindblad_derivative(&rho, &h, &p).unwrap();
        let dn: f64 = (0..20).map(|k| k as f64 * d[(k, k)].re).sum();
        assert_abs_diff_eq!(dn, -1.0, epsilon = 1e-6);
    }

    #[test]
    fn fock_decay_follows_exponential() {
        let b = Basis::single_mode(3).unwrap();
        let mut p = single(0.0, 0.0);
        p.tau = 1.0;
        let rho0 = StateVector::fock(b.clone(), &[1]).unwrap().to_density_matrix();
        let out = evolve_master_equation(&rho0, &p, &EvolutionConfig::new(1e-3)).unwrap();
        let n = out.state.matrix()[(1, 1)].re;
        assert!(((n - (-1.0f64).exp()) / (-1.0f64).exp()).abs() < 1e-6);
        assert!(out.max_trace_drift < 1e-12);
        assert_eq!(out.steps, 1000);
    }

    #[test]
    fn vacuum_without_hamiltonian_is_static() {
        let b = Basis::new(&[3, 3], None).unwrap();
        let p = NetworkParams::new(2);
        let rho0 = DensityMatrix::vacuum(b);
        let out = evolve_master_equation(&rho0, &p, &EvolutionConfig::new(0.01)).unwrap();
        assert_eq!(out.state.matrix(), rho0.matrix());
    }

    #[test]
    fn unstable_step_is_reported() {
        let b = Basis::single_mode(8).unwrap();
        let mut p = single(0.0, 50.0);
        p.pump = vec![C64::new(20.0, 0.0)];
        p.tau = 1.0;
        let rho0 = DensityMatrix::vacuum(b);
        let err = evolve_master_equation(&rho0, &p, &EvolutionConfig::new(0.5)).unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }), "{err:?}");
    }

    #[test]
    fn record_times_are_validated() {
        let mut cfg = EvolutionConfig::new(0.1);
        cfg.record_times = vec![2.0];
        assert!(cfg.validate(1.0).is_err());
        assert!(EvolutionConfig::new(2.0).validate(1.0).is_err());
        assert_abs_diff_eq!(EvolutionConfig::for_tau(0.5).dt, 5e-5, epsilon = 1e-18);
    }

    #[test]
    fn mean_field_trivial_cases() {
        let mut p = single(0.3, 0.2);
        p.tau = 2.0;
        let out = evolve_mean_field(&MeanFieldState::vacuum(1), &p, &EvolutionConfig::new(1e-2)).unwrap();
        assert_eq!(out.state.psi[0], ZERO);

        let lin = single(0.7, 0.0);
        let psi0 = MeanFieldState { psi: vec![C64::new(1.0, 0.0)] };
        let out = evolve_mean_field(&psi0, &lin, &EvolutionConfig::new(1e-3)).unwrap();
        assert_abs_diff_eq!(out.state.psi[0].norm_sqr(), (-1.0f64).exp(), epsilon = 1e-8);
    }

    #[test]
    fn mean_field_linear_steady_state() {
        let mut p = single(0.8, 0.0);
        let pump = C64::new(0.6, -0.3);
        p.pump = vec![pump];
        p.tau = 40.0;
        let out = evolve_mean_field(&MeanFieldState::vacuum(1), &p, &EvolutionConfig::new(1e-2)).unwrap();
        let expected = -pump / C64::new(0.8, -0.5);
        assert_abs_diff_eq!((out.state.psi[0] - expected).norm(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn mean_field_divergence_is_reported() {
        let mut p = single(0.0, 1e6);
        p.tau = 1.0;
        let psi0 = MeanFieldState { psi: vec![C64::new(100.0, 0.0)] };
        let err = evolve_mean_field(&psi0, &p, &EvolutionConfig::new(0.1)).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }
}
