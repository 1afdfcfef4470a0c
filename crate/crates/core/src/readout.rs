//! Classical and quantum outputs of a network state.
//!
//! Classical: occupation numbers, multiplicative measurement noise and affine
//! readouts. Quantum: passive number-conserving mode mixing `c = W a` and the
//! single-mode state left when all other mixed modes are found in vacuum.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{Basis, DensityMatrix};
use crate::linalg;
use crate::operator::Operator;
use crate::seed;

/// Occupations below zero by less than this are clamped to zero.
pub const OCCUPATION_TOLERANCE: f64 = 1e-8;
/// Maximum tolerated `|W^dag W - I|`.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;
/// Conditioning outcomes rarer than this are rejected.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// `<n_i> = Tr(a_i^dag a_i rho)` for every mode.
pub fn occupations(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let basis = rho.basis();
    let m = rho.matrix();
    let mut occ = vec![0.0; basis.n_modes()];
    for (idx, state) in basis.states().enumerate() {
        let p = m[(idx, idx)].re;
        for (o, &k) in occ.iter_mut().zip(state) {
            *o += p * k as f64;
        }
    }
    for (mode, o) in occ.iter_mut().enumerate() {
        if *o < 0.0 {
            if *o < -OCCUPATION_TOLERANCE {
                return Err(Error::NegativeOccupation { mode, value: *o });
            }
            *o = 0.0;
        }
    }
    Ok(occ)
}

/// Multiplicative measurement error `n_i -> n_i (1 + u_i)`, `u_i ~ U[low, high]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct NoiseModel {
    pub low: f64,
    pub high: f64,
    pub seed: u64,
    /// Noise realizations per evaluation.
    pub samples: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            low: 0.0,
            high: 0.8,
            seed: 0,
            samples: 100,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.low >= 0.0 && self.low <= self.high && self.high.is_finite()) {
            return Err(Error::invalid(
                "noise",
                format!("fraction range [{}, {}] must satisfy 0 <= low <= high", self.low, self.high),
            ));
        }
        if self.samples == 0 {
            return Err(Error::invalid("noise", "samples must be at least 1"));
        }
        Ok(())
    }
}

/// Noisy copy of `n`. The draw is a pure function of `(seed, draw_index, i)`.
pub fn apply_measurement_noise(n: &[f64], model: &NoiseModel, draw_index: u64) -> Vec<f64> {
    let mut rng = seed::rng(model.seed, draw_index);
    n.iter()
        .map(|&x| {
            let u = model.low + (model.high - model.low) * rng.gen::<f64>();
            x * (1.0 + u)
        })
        .collect()
}

/// Affine map `y = W x + b` from features to output channels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearReadout {
    /// One row of feature weights per output channel.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearReadout {
    pub fn apply(&self, features: &[f64]) -> Result<Vec<f64>> {
        linear_readout(features, &self.weights, &self.bias)
    }
}

pub fn linear_readout(features: &[f64], weights: &[Vec<f64>], bias: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != bias.len() {
        return Err(Error::Shape(format!(
            "{} weight rows but {} biases",
            weights.len(),
            bias.len()
        )));
    }
    weights
        .iter()
        .zip(bias)
        .map(|(row, &b)| {
            if row.len() != features.len() {
                return Err(Error::Shape(format!(
                    "weight row has {} entries for {} features",
                    row.len(),
                    features.len()
                )));
            }
            Ok(b + row.iter().zip(features).map(|(w, x)| w * x).sum::<f64>())
        })
        .collect()
}

/// Unitary mode-mixing matrix `W = exp(-i h)` together with its Hermitian generator.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    w: DMatrix<C64>,
    generator: DMatrix<C64>,
}

impl MixingMatrix {
    pub fn identity(n: usize) -> Self {
        MixingMatrix {
            w: DMatrix::identity(n, n),
            generator: DMatrix::zeros(n, n),
        }
    }

    pub fn from_generator(h: DMatrix<C64>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::Shape(format!("generator is {}x{}", h.nrows(), h.ncols())));
        }
        let scale = linalg::max_abs(&h).max(1.0);
        let deviation = linalg::hermiticity_deviation(&h);
        if deviation > 1e-12 * scale {
            return Err(Error::NotHermitian { deviation });
        }
        let w = linalg::expm_minus_i_hermitian(&h);
        Ok(MixingMatrix { w, generator: h })
    }

    /// Recovers a generator `h = i log W` from the complex Schur form of `W`.
    pub fn from_unitary(w: DMatrix<C64>) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::Shape(format!("mixing matrix is {}x{}", w.nrows(), w.ncols())));
        }
        let deviation = linalg::unitarity_deviation(&w);
        if deviation > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        let (q, t) = w.clone().schur().unpack();
        let n = w.nrows();
        let mut scaled = q.clone();
        for k in 0..n {
            let theta = -t[(k, k)].arg();
            for r in 0..n {
                scaled[(r, k)] *= theta;
            }
        }
        let h = scaled * q.adjoint();
        let h = (&h + h.adjoint()).scale(0.5);
        let rebuilt = linalg::expm_minus_i_hermitian(&h);
        let mismatch = linalg::max_abs(&(rebuilt - &w));
        if mismatch > 1e-8 {
            return Err(Error::NotUnitary { deviation: mismatch });
        }
        Ok(MixingMatrix { w, generator: h })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.w
    }

    pub fn generator(&self) -> &DMatrix<C64> {
        &self.generator
    }

    pub fn n_modes(&self) -> usize {
        self.w.nrows()
    }

    pub fn unitarity_deviation(&self) -> f64 {
        linalg::unitarity_deviation(&self.w)
    }

    /// `self * other`, i.e. apply `other` first.
    pub fn compose(&self, other: &MixingMatrix) -> Result<MixingMatrix> {
        MixingMatrix::from_unitary(&self.w * &other.w)
    }
}

fn check_mixing(basis: &Basis, w: &MixingMatrix) -> Result<()> {
    if w.n_modes() != basis.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: basis.n_modes(),
            got: w.n_modes(),
        });
    }
    let deviation = w.unitarity_deviation();
    if deviation > UNITARITY_TOLERANCE {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

/// Fock-space unitary `U = exp(-i sum_ij h_ij a_i^dag a_j)` implementing
/// `U a_j^dag U^dag = sum_i W_ij a_i^dag`.
///
/// Columns are obtained by expanding `prod_j (sum_i W_ij a_i^dag)^{m_j} / sqrt(m_j!) |0>`.
/// `U` conserves the total excitation number, so on a number-closed basis
/// (see [`Basis::is_number_closed`]) the result is exactly unitary; on other
/// bases amplitudes leaving the basis are dropped.
pub fn mixing_unitary(w: &MixingMatrix, basis: &Arc<Basis>) -> Result<Operator> {
    check_mixing(basis, w)?;
    let n = basis.n_modes();
    let wm = w.matrix();
    let sqrt_fact = linalg::sqrt_factorials(basis.max_excitation() + 1);
    let mut triplets = Vec::new();
    for (col, occ) in basis.states().enumerate() {
        let mut poly: BTreeMap<Vec<u16>, C64> = BTreeMap::new();
        poly.insert(vec![0u16; n], C64::new(1.0, 0.0));
        let mut norm = 1.0;
        for (j, &m) in occ.iter().enumerate() {
            norm *= sqrt_fact[m as usize];
            for _ in 0..m {
                let mut next: BTreeMap<Vec<u16>, C64> = BTreeMap::new();
                for (mono, coeff) in &poly {
                    for i in 0..n {
                        let wij = wm[(i, j)];
                        if wij == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let mut key = mono.clone();
                        key[i] += 1;
                        *next.entry(key).or_insert(C64::new(0.0, 0.0)) += coeff * wij;
                    }
                }
                poly = next;
            }
        }
        for (mono, coeff) in poly {
            if let Some(row) = basis.index_of(&mono) {
                let weight: f64 = mono.iter().map(|&k| sqrt_fact[k as usize]).product();
                triplets.push((row, col, coeff * (weight / norm)));
            }
        }
    }
    Operator::from_triplets(basis.clone(), triplets)
}

/// Single-mode state heralded by finding every other mixed mode in vacuum.
#[derive(Debug, Clone)]
pub struct ConditionedOutput {
    pub rho_out: DensityMatrix,
    /// Probability of the vacuum outcome on the other modes.
    pub probability: f64,
}

/// Mixes the modes with `W`, projects every mode except `output_mode` onto
/// vacuum and returns the normalized remaining single-mode state.
///
/// Only the rows `<n e_c| U` of the Fock-space unitary are needed; they have
/// the closed form `<n e_c|U|m> = sqrt(n! / prod_i m_i!) prod_i W_ci^{m_i}` for
/// `|m| = n`, so the mixing is exact for any input basis. The output mode keeps
/// every level up to the largest excitation number of the input basis.
pub fn condition_on_vacuum(rho: &DensityMatrix, w: &MixingMatrix, output_mode: usize) -> Result<ConditionedOutput> {
    let basis = rho.basis();
    check_mixing(basis, w)?;
    basis.check_mode(output_mode)?;
    let out_dim = basis.max_excitation() + 1;
    let sqrt_fact = linalg::sqrt_factorials(out_dim);
    let wm = w.matrix();

    let mut sector = Vec::with_capacity(basis.dim());
    let mut coeff = Vec::with_capacity(basis.dim());
    for occ in basis.states() {
        let total: usize = occ.iter().map(|&k| k as usize).sum();
        let mut c = C64::new(sqrt_fact[total], 0.0);
        for (i, &k) in occ.iter().enumerate() {
            c = c * wm[(output_mode, i)].powu(k as u32) / sqrt_fact[k as usize];
        }
        sector.push(total);
        coeff.push(c);
    }

    let m = rho.matrix();
    let d = basis.dim();
    let mut block = DMatrix::<C64>::zeros(out_dim, out_dim);
    for c in 0..d {
        let uc = coeff[c].conj();
        if uc == C64::new(0.0, 0.0) {
            continue;
        }
        let nc = sector[c];
        for r in 0..d {
            block[(sector[r], nc)] += coeff[r] * m[(r, c)] * uc;
        }
    }
    let probability = block.trace().re;
    if !(probability >= PROBABILITY_FLOOR) {
        return Err(Error::VacuumConditionUnlikely { probability });
    }
    let rho_out = DensityMatrix::from_matrix(Basis::single_mode(out_dim)?, block.unscale(probability))?;
    Ok(ConditionedOutput {
        rho_out,
        probability: probability.min(1.0 + 1e-10),
    })
}
