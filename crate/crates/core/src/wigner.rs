//! Wigner functions on rectangular phase-space grids.
//!
//! Convention: `x = (a + a^dag)/sqrt(2)`, `p = (a - a^dag)/(i sqrt(2))`, `hbar = 1`,
//! and `W` integrates to one over the plane. A coherent state `|beta>` is a
//! Gaussian centred at `(sqrt(2) Re beta, sqrt(2) Im beta)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fock::{self, DensityMatrix};
use crate::linalg;

/// Largest tolerated fraction of Wigner weight outside a target grid.
pub const LEAKAGE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct GridGeometry {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl Default for GridGeometry {
    fn default() -> Self {
        GridGeometry::square(6.0, 201)
    }
}

impl GridGeometry {
    /// `[-half_width, half_width]^2` sampled with `points` nodes per axis.
    pub fn square(half_width: f64, points: usize) -> Self {
        GridGeometry {
            x_min: -half_width,
            x_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            nx: points,
            np: points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.p_min, self.p_max].iter().all(|v| v.is_finite());
        if !finite || !(self.x_max > self.x_min) || !(self.p_max > self.p_min) {
            return Err(Error::invalid("grid", "bounds must be finite and strictly increasing"));
        }
        if self.nx < 2 || self.np < 2 {
            return Err(Error::invalid("grid", "at least two nodes per axis"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.dx()
    }

    pub fn p(&self, ip: usize) -> f64 {
        self.p_min + ip as f64 * self.dp()
    }

    /// Same bounds with `2n - 1` nodes per axis, keeping every old node.
    pub fn refined(&self) -> Self {
        GridGeometry {
            nx: 2 * self.nx - 1,
            np: 2 * self.np - 1,
            ..*self
        }
    }

    /// Bounds multiplied by `s`; node counts unchanged.
    pub fn scaled(&self, s: f64) -> Self {
        GridGeometry {
            x_min: self.x_min * s,
            x_max: self.x_max * s,
            p_min: self.p_min * s,
            p_max: self.p_max * s,
            ..*self
        }
    }
}

/// Sampled Wigner function; `values[ix * np + ip] = W(x_ix, p_ip)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WignerGrid {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn value(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.geometry.np + ip]
    }

    /// Riemann sum of `W dx dp`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.geometry.dx() * self.geometry.dp()
    }

    /// Grid node carrying the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let (best, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let g = &self.geometry;
        (g.x(best / g.np), g.p(best % g.np))
    }
}

/// Wigner function of a single-mode density matrix given as a raw matrix.
pub fn wigner_of_matrix(rho: &DMatrix<C64>, geometry: &GridGeometry) -> Result<WignerGrid> {
    geometry.validate()?;
    let deviation = linalg::hermiticity_deviation(rho);
    if deviation > 1e-10 {
        return Err(Error::NotHermitian { deviation });
    }
    let dim = rho.nrows();
    let sqrt_n: Vec<f64> = (0..dim).map(|n| (n as f64).sqrt()).collect();
    let mut basis_fns = vec![C64::new(0.0, 0.0); dim];
    let mut values = Vec::with_capacity(geometry.nx * geometry.np);
    for ix in 0..geometry.nx {
        let x = geometry.x(ix);
        for ip in 0..geometry.np {
            let p = geometry.p(ip);
            values.push(wigner_point(rho, C64::new(x, p) / core::f64::consts::SQRT_2, &sqrt_n, &mut basis_fns));
        }
    }
    Ok(WignerGrid {
        geometry: *geometry,
        values,
    })
}

/// `W = sum_mn rho_mn w_nm(alpha)` with the Fock-basis Wigner functions
/// `w_nm` generated by their three-term recurrence (no factorials).
fn wigner_point(rho: &DMatrix<C64>, alpha: C64, sqrt_n: &[f64], w: &mut [C64]) -> f64 {
    let dim = rho.nrows();
    let two_a = alpha * 2.0;
    let two_a_conj = alpha.conj() * 2.0;
    w[0] = C64::new((-2.0 * alpha.norm_sqr()).exp() / core::f64::consts::PI, 0.0);
    let mut total = rho[(0, 0)].re * w[0].re;
    for n in 1..dim {
        w[n] = two_a * w[n - 1] / sqrt_n[n];
        total += 2.0 * (rho[(0, n)] * w[n]).re;
    }
    for m in 1..dim {
        let mut temp = w[m];
        w[m] = (two_a_conj * temp - w[m - 1] * sqrt_n[m]) / sqrt_n[m];
        total += (rho[(m, m)] * w[m]).re;
        for n in m + 1..dim {
            let next = (two_a * w[n - 1] - temp * sqrt_n[m]) / sqrt_n[n];
            temp = w[n];
            w[n] = next;
            total += 2.0 * (rho[(m, n)] * w[n]).re;
        }
    }
    total
}

pub fn wigner_of_state(rho: &DensityMatrix, geometry: &GridGeometry) -> Result<WignerGrid> {
    let n_modes = rho.basis().n_modes();
    if n_modes != 1 {
        return Err(Error::NotSingleMode { n_modes });
    }
    wigner_of_matrix(rho.matrix(), geometry)
}

/// Wigner function of the cat state `(|beta> + (-1)^k |-beta>)/N`, with the Fock
/// cutoff chosen automatically.
pub fn target_cat_wigner(beta: C64, k: u8, geometry: &GridGeometry) -> Result<WignerGrid> {
    let cat = fock::cat_state_auto(beta, k)?;
    let grid = wigner_of_state(&cat.to_density_matrix(), geometry)?;
    let leakage = (1.0 - grid.integral()).abs();
    if leakage > LEAKAGE_TOLERANCE {
        return Err(Error::GridTooSmall { leakage });
    }
    Ok(grid)
}

/// Normalized squared distance `int (W_O - W_T)^2 / int (W_O + W_T)^2`,
/// discretized on the shared grid.
pub fn wigner_error(output: &WignerGrid, target: &WignerGrid) -> Result<f64> {
    if output.geometry != target.geometry || output.values.len() != target.values.len() {
        return Err(Error::GridMismatch);
    }
    let (mut num, mut den) = (0.0_f64, 0.0_f64);
    for (o, t) in output.values.iter().zip(&target.values) {
        num += (o - t) * (o - t);
        den += (o + t) * (o + t);
    }
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}
