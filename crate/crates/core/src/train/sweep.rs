//! Retraining across Kerr strengths.

use alloc::vec::Vec;

use rand::Rng;

use crate::dynamics::Kerr;
use crate::error::{Error, Result};
use crate::fock::StateHealth;
use crate::seed;

use super::cat::{optimize_cat_mixing, CatTaskConfig};
use super::xor::{train_xor, XorTaskConfig};
use super::{mean_std, BasisSpec};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SweepTask {
    Xor(XorTaskConfig),
    Cat(CatTaskConfig),
}

/// Input amplitudes drawn uniformly from `[low, high]` for every sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RandomBetas {
    pub low: f64,
    pub high: f64,
    pub draws: usize,
}

impl Default for RandomBetas {
    fn default() -> Self {
        RandomBetas {
            low: 1.0,
            high: 1.4,
            draws: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepConfig {
    pub alpha_values: Vec<Kerr>,
    pub seeds: Vec<u64>,
    /// Cat task only: replaces the configured amplitude list.
    pub random_betas: Option<RandomBetas>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_values.is_empty() {
            return Err(Error::invalid("alpha_values", "must not be empty"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds", "must not be empty"));
        }
        if let Some(r) = &self.random_betas {
            if r.draws == 0 || !(r.low <= r.high) || !r.low.is_finite() || !r.high.is_finite() {
                return Err(Error::invalid("random_betas", "need draws >= 1 and low <= high"));
            }
        }
        Ok(())
    }
}

/// Aggregated errors of one Kerr strength.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub alpha: Kerr,
    /// XOR: max-case error per noise draw (or per seed without noise).
    /// Cat: Wigner error per input amplitude.
    pub errors: Vec<f64>,
    /// Conditioning probabilities, cat task only.
    pub probabilities: Vec<f64>,
    /// Input amplitudes behind `errors`, cat task only.
    pub betas: Vec<f64>,
    pub error_mean: f64,
    pub error_std: f64,
    pub probability_mean: Option<f64>,
    /// Health of every evolved and conditioned state behind the row.
    pub health: Vec<StateHealth>,
    /// Largest unitarity deviation of a trained mixing matrix; 0 for XOR.
    pub max_unitarity_deviation: f64,
}

/// Copy of the task at Kerr strength `alpha`; the hard-core limit switches to
/// two levels per mode.
pub fn task_at(task: &SweepTask, alpha: Kerr) -> SweepTask {
    let hard_core = |basis: &BasisSpec| {
        if alpha.is_infinite() {
            BasisSpec::hard_core(basis.mode_dims.len())
        } else {
            basis.clone()
        }
    };
    match task {
        SweepTask::Xor(c) => {
            let mut c = c.clone();
            c.params.kerr = alpha;
            c.basis = hard_core(&c.basis);
            SweepTask::Xor(c)
        }
        SweepTask::Cat(c) => {
            let mut c = c.clone();
            c.params.kerr = alpha;
            c.basis = hard_core(&c.basis);
            SweepTask::Cat(c)
        }
    }
}

/// Trains and scores every seed at one Kerr strength. `index` addresses the
/// random streams of this point, so points can run in any order.
pub fn sweep_point(task: &SweepTask, sweep: &SweepConfig, index: usize) -> Result<SweepRow> {
    sweep.validate()?;
    let alpha = *sweep
        .alpha_values
        .get(index)
        .ok_or_else(|| Error::invalid("alpha_values", "point index out of range"))?;
    let mut errors = Vec::new();
    let mut probabilities = Vec::new();
    let mut betas = Vec::new();
    let mut health = Vec::new();
    let mut max_unitarity_deviation = 0.0_f64;
    for &s in &sweep.seeds {
        match task_at(task, alpha) {
            SweepTask::Xor(mut c) => {
                if let Some(noise) = &mut c.noise {
                    noise.seed = seed::indexed(s, "xor-noise", index as u64);
                }
                let r = train_xor(&c)?;
                health.extend(r.state_health.iter().copied());
                if r.draw_errors.is_empty() {
                    errors.push(r.error.max_abs);
                } else {
                    errors.extend(r.draw_errors.iter().map(|e| e.max_abs));
                }
            }
            SweepTask::Cat(mut c) => {
                if let Some(draw) = &sweep.random_betas {
                    let mut rng = seed::rng(seed::substream(s, "cat-betas"), index as u64);
                    c.beta_list = (0..draw.draws).map(|_| rng.gen_range(draw.low..=draw.high)).collect();
                }
                let r = optimize_cat_mixing(&c)?;
                for case in &r.cases {
                    errors.push(case.delta);
                    probabilities.push(case.probability);
                    betas.push(case.beta);
                    health.push(case.network_health);
                    health.push(case.output_health);
                    max_unitarity_deviation = max_unitarity_deviation.max(case.unitarity_deviation);
                }
            }
        }
    }
    let (error_mean, error_std) = mean_std(&errors);
    let probability_mean = if probabilities.is_empty() {
        None
    } else {
        Some(probabilities.iter().sum::<f64>() / probabilities.len() as f64)
    };
    Ok(SweepRow {
        alpha,
        errors,
        probabilities,
        betas,
        error_mean,
        error_std,
        probability_mean,
        health,
        max_unitarity_deviation,
    })
}

/// Orders rows by Kerr strength with the hard-core limit last.
pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
}

/// Sequential sweep; one row per Kerr strength, sorted by strength.
pub fn sweep_nonlinearity(task: &SweepTask, sweep: &SweepConfig) -> Result<Vec<SweepRow>> {
    sweep.validate()?;
    let mut rows = (0..sweep.alpha_values.len())
        .map(|i| sweep_point(task, sweep, i))
        .collect::<Result<Vec<_>>>()?;
    sort_rows(&mut rows);
    Ok(rows)
}
