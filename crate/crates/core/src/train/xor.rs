//! XOR gate realized by an affine readout of network observables.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use num_complex::Complex64 as C64;

use crate::dynamics::{evolve_master_equation, evolve_mean_field, EvolutionConfig, MeanFieldState, NetworkParams};
use crate::error::{Error, Result};
use crate::fock::{coherent_state, DensityMatrix, StateHealth};
use crate::readout::{apply_measurement_noise, occupations, LinearReadout, NoiseModel};
use crate::seed;

use super::{lstsq, mean_std, xor_task_error, BasisSpec, TaskError};

/// Input bit pairs in truth-table order.
pub const XOR_INPUTS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// How input bits enter the network and which observables are read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum XorEncoding {
    /// Pump amplitude `input_level * bit` on the input modes, start in vacuum,
    /// read `<n>` of the output modes.
    PumpAmplitude,
    /// Coherent inputs with `<n> = input_level * bit`, no extra pump, read `<n>`.
    Occupation,
    /// Pump encoding in the mean-field model, read `Re psi` and `Im psi`.
    MeanFieldAmplitude,
    /// Pump encoding in the mean-field model, read `|psi|^2`.
    MeanFieldIntensity,
}

impl XorEncoding {
    pub fn is_mean_field(&self) -> bool {
        matches!(self, XorEncoding::MeanFieldAmplitude | XorEncoding::MeanFieldIntensity)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct XorTaskConfig {
    pub encoding: XorEncoding,
    pub params: NetworkParams,
    pub basis: BasisSpec,
    pub evolution: EvolutionConfig,
    /// Pump amplitude or input occupation representing a logical 1.
    pub input_level: f64,
    pub input_modes: Vec<usize>,
    pub output_modes: Vec<usize>,
    /// One row per input pair in [`XOR_INPUTS`] order, one column per output channel.
    pub targets: Vec<Vec<f64>>,
    pub noise: Option<NoiseModel>,
    /// Fresh noise realizations used to score the trained readout.
    pub eval_draws: usize,
}

impl XorTaskConfig {
    /// Inputs on modes 0 and 1, outputs on modes 2 and 3, single XOR target column.
    pub fn new(encoding: XorEncoding, params: NetworkParams, basis: BasisSpec) -> Self {
        let dt = params.tau / 1e4;
        XorTaskConfig {
            encoding,
            params,
            basis,
            evolution: EvolutionConfig::new(dt),
            input_level: 1.0,
            input_modes: vec![0, 1],
            output_modes: vec![2, 3],
            targets: xor_targets(),
            noise: None,
            eval_draws: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.evolution.validate(self.params.tau)?;
        let n = self.params.n_modes();
        if !self.encoding.is_mean_field() && self.basis.mode_dims.len() != n {
            return Err(Error::invalid(
                "basis",
                format!("{} mode dimensions for {n} modes", self.basis.mode_dims.len()),
            ));
        }
        if self.input_modes.len() != 2 {
            return Err(Error::invalid("input_modes", "exactly two input modes are required"));
        }
        if self.output_modes.is_empty() {
            return Err(Error::invalid("output_modes", "at least one output mode is required"));
        }
        if let Some(&m) = self.input_modes.iter().chain(&self.output_modes).find(|&&m| m >= n) {
            return Err(Error::ModeOutOfRange { mode: m, n_modes: n });
        }
        if !(self.input_level >= 0.0) || !self.input_level.is_finite() {
            return Err(Error::invalid("input_level", "must be non-negative and finite"));
        }
        if self.targets.len() != 4 || self.targets.iter().any(|r| r.is_empty() || r.len() != self.targets[0].len()) {
            return Err(Error::invalid("targets", "need four rows of equal, non-zero length"));
        }
        if self.targets.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("targets", "must be finite"));
        }
        if let Some(noise) = &self.noise {
            noise.validate()?;
            if self.eval_draws == 0 {
                return Err(Error::invalid("eval_draws", "must be at least 1"));
            }
        }
        Ok(())
    }
}

/// `[0, 1, 1, 0]` as a single output column.
pub fn xor_targets() -> Vec<Vec<f64>> {
    XOR_INPUTS.iter().map(|&(a, b)| vec![(a ^ b) as f64]).collect()
}

/// Noise-free features of one input pair, with the health of the final state
/// for the quantum encodings.
pub fn run_xor_forward_with_health(cfg: &XorTaskConfig, bits: (u8, u8)) -> Result<(Vec<f64>, Option<StateHealth>)> {
    if bits.0 > 1 || bits.1 > 1 {
        return Err(Error::invalid("input", format!("bits must be 0 or 1, got {bits:?}")));
    }
    let mut params = cfg.params.clone();
    let levels = [bits.0 as f64 * cfg.input_level, bits.1 as f64 * cfg.input_level];
    let pumped = cfg.encoding != XorEncoding::Occupation;
    if pumped {
        for (&m, &p) in cfg.input_modes.iter().zip(&levels) {
            params.pump[m] = C64::new(p, 0.0);
        }
    }

    if cfg.encoding.is_mean_field() {
        let evo = evolve_mean_field(&MeanFieldState::vacuum(params.n_modes()), &params, &cfg.evolution)?;
        let psi = &evo.state.psi;
        let features = match cfg.encoding {
            XorEncoding::MeanFieldAmplitude => cfg.output_modes.iter().flat_map(|&m| [psi[m].re, psi[m].im]).collect(),
            _ => cfg.output_modes.iter().map(|&m| psi[m].norm_sqr()).collect(),
        };
        return Ok((features, None));
    }

    let basis = cfg.basis.build()?;
    let rho0 = if pumped {
        DensityMatrix::vacuum(basis)
    } else {
        let mut amps = vec![C64::new(0.0, 0.0); params.n_modes()];
        for (&m, &n) in cfg.input_modes.iter().zip(&levels) {
            amps[m] = C64::new(n.sqrt(), 0.0);
        }
        coherent_state(basis, &amps)?.to_density_matrix()
    };
    let evo = evolve_master_equation(&rho0, &params, &cfg.evolution)?;
    let occ = occupations(&evo.state)?;
    Ok((cfg.output_modes.iter().map(|&m| occ[m]).collect(), Some(evo.state.health())))
}

/// Noise-free output-mode features for one input pair.
pub fn run_xor_forward(cfg: &XorTaskConfig, bits: (u8, u8)) -> Result<Vec<f64>> {
    run_xor_forward_with_health(cfg, bits).map(|r| r.0)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct XorTrainResult {
    pub readout: LinearReadout,
    /// Noise-free features per input pair.
    pub features: Vec<Vec<f64>>,
    /// Readout applied to the noise-free features.
    pub outputs: Vec<Vec<f64>>,
    pub clean_error: TaskError,
    /// One entry per evaluation noise draw; empty without noise.
    pub draw_errors: Vec<TaskError>,
    /// Errors averaged over the evaluation draws (the noise-free error without noise).
    pub error: TaskError,
    /// Spread of the max-case error over the evaluation draws.
    pub error_std: f64,
    pub state_health: Vec<StateHealth>,
}

/// Features of all four input pairs.
pub fn xor_features(cfg: &XorTaskConfig) -> Result<(Vec<Vec<f64>>, Vec<StateHealth>)> {
    cfg.validate()?;
    let mut features = Vec::with_capacity(4);
    let mut health = Vec::new();
    for &bits in &XOR_INPUTS {
        let (f, h) = run_xor_forward_with_health(cfg, bits)?;
        features.push(f);
        health.extend(h);
    }
    Ok((features, health))
}

fn noise_stream(model: &NoiseModel, name: &str) -> NoiseModel {
    NoiseModel {
        seed: seed::substream(model.seed, name),
        ..model.clone()
    }
}

/// Feature rows of evaluation (or training) draw `draw`, one per input pair.
fn noisy_rows(features: &[Vec<f64>], model: &NoiseModel, draw: usize) -> Vec<Vec<f64>> {
    features
        .iter()
        .enumerate()
        .map(|(case, f)| apply_measurement_noise(f, model, (draw * features.len() + case) as u64))
        .collect()
}

/// Least-squares readout; with noise, `samples` noisy copies of the truth table
/// are stacked into one problem.
pub fn fit_readout(cfg: &XorTaskConfig, features: &[Vec<f64>]) -> Result<LinearReadout> {
    match &cfg.noise {
        None => lstsq::solve_readout_weights(features, &cfg.targets),
        Some(model) => {
            let stream = noise_stream(model, "xor-train");
            let mut rows = Vec::with_capacity(4 * model.samples);
            let mut targets = Vec::with_capacity(4 * model.samples);
            for s in 0..model.samples {
                rows.extend(noisy_rows(features, &stream, s));
                targets.extend(cfg.targets.iter().cloned());
            }
            lstsq::solve_readout_weights(&rows, &targets)
        }
    }
}

/// Scores a readout on precomputed features.
pub fn evaluate_readout(
    cfg: &XorTaskConfig,
    features: &[Vec<f64>],
    readout: &LinearReadout,
    state_health: Vec<StateHealth>,
) -> Result<XorTrainResult> {
    let apply_all = |rows: &[Vec<f64>]| rows.iter().map(|f| readout.apply(f)).collect::<Result<Vec<_>>>();
    let outputs = apply_all(features)?;
    let clean_error = xor_task_error(&outputs, &cfg.targets)?;
    let mut draw_errors = Vec::new();
    if let Some(model) = &cfg.noise {
        let stream = noise_stream(model, "xor-eval");
        for d in 0..cfg.eval_draws {
            draw_errors.push(xor_task_error(&apply_all(&noisy_rows(features, &stream, d))?, &cfg.targets)?);
        }
    }
    let (error, error_std) = if draw_errors.is_empty() {
        (clean_error, 0.0)
    } else {
        let max: Vec<f64> = draw_errors.iter().map(|e| e.max_abs).collect();
        let mean: Vec<f64> = draw_errors.iter().map(|e| e.mean_abs).collect();
        let (max_mean, max_std) = mean_std(&max);
        (
            TaskError {
                mean_abs: mean_std(&mean).0,
                max_abs: max_mean,
            },
            max_std,
        )
    };
    Ok(XorTrainResult {
        readout: readout.clone(),
        features: features.to_vec(),
        outputs,
        clean_error,
        draw_errors,
        error,
        error_std,
        state_health,
    })
}

/// Evolves the four input cases, fits the readout and scores it.
pub fn train_xor(cfg: &XorTaskConfig) -> Result<XorTrainResult> {
    let (features, health) = xor_features(cfg)?;
    let readout = fit_readout(cfg, &features)?;
    evaluate_readout(cfg, &features, &readout, health)
}
