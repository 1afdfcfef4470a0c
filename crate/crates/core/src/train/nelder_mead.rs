//! Derivative-free simplex minimization.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct NelderMeadConfig {
    pub max_iterations: usize,
    /// Offset of the initial vertices along each coordinate axis.
    pub initial_scale: f64,
    /// Stop when every vertex lies within this distance of the best one.
    pub x_tol: f64,
    /// Stop when the cost values across the simplex differ by less than this.
    pub f_tol: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig {
            max_iterations: 2000,
            initial_scale: 0.1,
            x_tol: 1e-6,
            f_tol: 1e-8,
        }
    }
}

impl NelderMeadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        if !(self.initial_scale > 0.0) || !self.initial_scale.is_finite() {
            return Err(Error::invalid("initial_scale", "must be positive"));
        }
        if !(self.x_tol >= 0.0) || !(self.f_tol >= 0.0) {
            return Err(Error::invalid("tolerance", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best cost after each iteration, starting with the initial simplex.
    pub history: Vec<f64>,
}

/// Minimizes `f` starting from a right-angled simplex around `x0`.
///
/// Uses the standard coefficients (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). Non-finite costs are treated as `+inf`; errors returned by
/// `f` abort the search.
pub fn minimize<F>(mut f: F, x0: &[f64], cfg: &NelderMeadConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| -> Result<f64> {
        evaluations += 1;
        let v = f(x)?;
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)?));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += cfg.initial_scale;
        let v = eval(&x)?;
        simplex.push((x, v));
    }
    sort(&mut simplex);
    let mut history = vec![simplex[0].1];
    if n == 0 {
        let (x, value) = simplex.swap_remove(0);
        return Ok(Minimum {
            x,
            value,
            iterations: 0,
            evaluations,
            converged: true,
            history,
        });
    }

    let mut converged = false;
    let mut iterations = 0;
    let mut centroid = vec![0.0; n];
    while iterations < cfg.max_iterations {
        if has_converged(&simplex, cfg) {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let toward = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (w - c)).collect() };

        let reflected = toward(-1.0);
        let fr = eval(&reflected)?;
        if fr < simplex[0].1 {
            let expanded = toward(-2.0);
            let fe = eval(&expanded)?;
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < worst.1 {
                let x = toward(-0.5);
                let v = eval(&x)?;
                (x, v)
            } else {
                let x = toward(0.5);
                let v = eval(&x)?;
                (x, v)
            };
            if fc < fr.min(worst.1) {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for (xi, bi) in vertex.0.iter_mut().zip(&best) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    vertex.1 = eval(&vertex.0)?;
                }
            }
        }
        sort(&mut simplex);
        history.push(simplex[0].1);
    }
    if !converged {
        converged = has_converged(&simplex, cfg);
    }
    let (x, value) = simplex.swap_remove(0);
    Ok(Minimum {
        x,
        value,
        iterations,
        evaluations,
        converged,
        history,
    })
}

// stable, so ties keep their previous order and runs stay reproducible
fn sort(simplex: &mut [(Vec<f64>, f64)]) {
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
}

fn has_converged(simplex: &[(Vec<f64>, f64)], cfg: &NelderMeadConfig) -> bool {
    let best = &simplex[0];
    let spread = simplex.iter().map(|v| (v.1 - best.1).abs()).fold(0.0, f64::max);
    if spread.is_finite() && spread < cfg.f_tol {
        return true;
    }
    let diameter = simplex
        .iter()
        .map(|v| v.0.iter().zip(&best.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    diameter < cfg.x_tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let cfg = NelderMeadConfig {
            f_tol: 0.0,
            x_tol: 1e-9,
            ..Default::default()
        };
        let m = minimize(|x| Ok((x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2)), &[0.0, 0.0], &cfg).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let cfg = NelderMeadConfig {
            max_iterations: 5000,
            f_tol: 1e-14,
            x_tol: 1e-10,
            ..Default::default()
        };
        let m = minimize(
            |x| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)),
            &[-1.2, 1.0],
            &cfg,
        )
        .unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn history_is_monotone() {
        let m = minimize(
            |x| Ok(x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * (v - 0.3).powi(2)).sum()),
            &[0.0; 4],
            &NelderMeadConfig::default(),
        )
        .unwrap();
        assert!(m.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(m.history.len(), m.iterations + 1);
        assert_eq!(*m.history.last().unwrap(), m.value);
    }

    #[test]
    fn iteration_cap_is_respected() {
        let cfg = NelderMeadConfig {
            max_iterations: 3,
            ..Default::default()
        };
        let m = minimize(|x| Ok(x[0].powi(2) + x[1].powi(2)), &[5.0, 5.0], &cfg).unwrap();
        assert_eq!(m.iterations, 3);
        assert!(!m.converged);
    }

    #[test]
    fn nan_costs_are_avoided() {
        let m = minimize(
            |x| Ok(if x[0] > 0.05 { f64::NAN } else { (x[0] + 1.0).powi(2) }),
            &[0.0],
            &NelderMeadConfig::default(),
        )
        .unwrap();
        assert!((m.x[0] + 1.0).abs() < 1e-3);
    }

    #[test]
    fn errors_propagate() {
        let r = minimize(|_| Err(Error::ZeroDenominator), &[0.0], &NelderMeadConfig::default());
        assert!(matches!(r, Err(Error::ZeroDenominator)));
    }
}
