//! Cat-state generation: evolve a coherent input, mix the modes with a
//! trainable unitary, keep one mode conditioned on vacuum in the others and
//! compare its Wigner function with the target cat.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::dynamics::{evolve_master_equation, EvolutionConfig, NetworkParams};
use crate::error::{Error, Result};
use crate::fock::{coherent_state, DensityMatrix, StateHealth};
use crate::readout::{condition_on_vacuum, ConditionedOutput, PROBABILITY_FLOOR};
use crate::wigner::{target_cat_wigner, wigner_error, wigner_of_state, GridGeometry, WignerGrid};

use super::nelder_mead::{minimize, NelderMeadConfig};
use super::{mean_std, unitary_from_generator, BasisSpec};

/// Cost assigned to a case whose conditioning outcome is below the probability floor.
const FAILED_CASE_COST: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CatTaskConfig {
    /// Real coherent amplitudes of the input states.
    pub beta_list: Vec<f64>,
    /// Cat parity `k`: 0 even, 1 odd.
    pub parity: u8,
    pub params: NetworkParams,
    pub basis: BasisSpec,
    pub evolution: EvolutionConfig,
    /// Mode prepared in `|beta>`; the others start in vacuum.
    pub input_mode: usize,
    /// Mixed mode kept after conditioning the others on vacuum.
    pub output_mode: usize,
    pub grid: GridGeometry,
    pub optimizer: NelderMeadConfig,
    /// Train one mixing matrix for all amplitudes instead of one per amplitude.
    pub shared_mixing: bool,
    /// Soft lower bound on the conditioning probability; 0 disables it.
    pub min_probability: f64,
}

impl CatTaskConfig {
    pub fn new(beta_list: Vec<f64>, params: NetworkParams, basis: BasisSpec) -> Self {
        let dt = params.tau / 1e4;
        CatTaskConfig {
            beta_list,
            parity: 0,
            params,
            basis,
            evolution: EvolutionConfig::new(dt),
            input_mode: 0,
            output_mode: 0,
            grid: GridGeometry::default(),
            optimizer: NelderMeadConfig::default(),
            shared_mixing: false,
            min_probability: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.evolution.validate(self.params.tau)?;
        self.grid.validate()?;
        self.optimizer.validate()?;
        let n = self.params.n_modes();
        if self.basis.mode_dims.len() != n {
            return Err(Error::invalid(
                "basis",
                format!("{} mode dimensions for {n} modes", self.basis.mode_dims.len()),
            ));
        }
        for &m in &[self.input_mode, self.output_mode] {
            if m >= n {
                return Err(Error::ModeOutOfRange { mode: m, n_modes: n });
            }
        }
        if self.beta_list.is_empty() {
            return Err(Error::invalid("beta_list", "must not be empty"));
        }
        if self.parity > 1 {
            return Err(Error::invalid("parity", "must be 0 or 1"));
        }
        let reach = self.grid.x_max.min(-self.grid.x_min).min(self.grid.p_max).min(-self.grid.p_min);
        for &b in &self.beta_list {
            // the cat lobes sit at x = +-sqrt(2) beta
            if !b.is_finite() || b.abs() * core::f64::consts::SQRT_2 >= reach {
                return Err(Error::invalid("beta_list", format!("beta = {b} lies outside the Wigner grid")));
            }
        }
        if !(self.min_probability >= 0.0 && self.min_probability < 1.0) {
            return Err(Error::invalid("min_probability", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Outcome for one input amplitude.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CatCase {
    pub beta: f64,
    /// Generator parameters of the trained mixing matrix.
    pub theta: Vec<f64>,
    pub delta: f64,
    pub probability: f64,
    /// Error with the identity mixing matrix.
    pub initial_delta: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best cost after every optimizer iteration.
    pub history: Vec<f64>,
    /// Health of the evolved network state.
    pub network_health: StateHealth,
    /// Health of the conditioned output state.
    pub output_health: StateHealth,
    pub unitarity_deviation: f64,
    /// Conditioned single-mode density matrix, row by row.
    pub output_state: Vec<Vec<C64>>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CatTrainResult {
    pub cases: Vec<CatCase>,
    pub mean_delta: f64,
    pub delta_std: f64,
    pub mean_probability: f64,
}

/// Network state at `tau` for the coherent input `beta`.
pub fn evolve_cat_input(cfg: &CatTaskConfig, beta: f64) -> Result<DensityMatrix> {
    let basis = cfg.basis.build()?;
    let mut amps = vec![C64::new(0.0, 0.0); basis.n_modes()];
    amps[cfg.input_mode] = C64::new(beta, 0.0);
    let rho0 = coherent_state(basis, &amps)?.to_density_matrix();
    Ok(evolve_master_equation(&rho0, &cfg.params, &cfg.evolution)?.state)
}

/// Evolved state and target of a single amplitude; scoring a mixing matrix
/// needs no further time evolution.
pub struct CatObjective {
    pub beta: f64,
    pub network: DensityMatrix,
    pub target: WignerGrid,
    output_mode: usize,
    grid: GridGeometry,
}

#[derive(Debug, Clone)]
pub struct CatEvaluation {
    pub delta: f64,
    pub conditioned: ConditionedOutput,
    pub unitarity_deviation: f64,
}

impl CatObjective {
    pub fn new(cfg: &CatTaskConfig, beta: f64) -> Result<Self> {
        cfg.validate()?;
        let target = target_cat_wigner(C64::new(beta, 0.0), cfg.parity, &cfg.grid)?;
        let network = evolve_cat_input(cfg, beta)?;
        Ok(CatObjective {
            beta,
            network,
            target,
            output_mode: cfg.output_mode,
            grid: cfg.grid,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.network.basis().n_modes()
    }

    pub fn evaluate(&self, theta: &[f64]) -> Result<CatEvaluation> {
        let w = unitary_from_generator(theta, self.n_modes())?;
        let conditioned = condition_on_vacuum(&self.network, &w, self.output_mode)?;
        let output = wigner_of_state(&conditioned.rho_out, &self.grid)?;
        Ok(CatEvaluation {
            delta: wigner_error(&output, &self.target)?,
            conditioned,
            unitarity_deviation: w.unitarity_deviation(),
        })
    }

    /// Wigner error plus the probability penalty; failed conditionings cost
    /// more than any admissible outcome.
    fn cost(&self, theta: &[f64], min_probability: f64) -> Result<f64> {
        match self.evaluate(theta) {
            Ok(e) => {
                let p = e.conditioned.probability;
                let penalty = if min_probability > 0.0 && p < min_probability {
                    1.0 - p / min_probability
                } else {
                    0.0
                };
                Ok(e.delta + penalty)
            }
            Err(Error::VacuumConditionUnlikely { .. }) => Ok(FAILED_CASE_COST),
            Err(e) => Err(e),
        }
    }

    fn case(&self, theta: &[f64], initial_delta: f64, run: &super::Minimum) -> Result<CatCase> {
        let e = match self.evaluate(theta) {
            Err(Error::VacuumConditionUnlikely { .. }) => {
                return Err(Error::ConditioningFailed { floor: PROBABILITY_FLOOR })
            }
            other => other?,
        };
        let m = e.conditioned.rho_out.matrix();
        Ok(CatCase {
            beta: self.beta,
            theta: theta.to_vec(),
            delta: e.delta,
            probability: e.conditioned.probability,
            initial_delta,
            iterations: run.iterations,
            evaluations: run.evaluations,
            converged: run.converged,
            history: run.history.clone(),
            network_health: self.network.health(),
            output_health: e.conditioned.rho_out.health(),
            unitarity_deviation: e.unitarity_deviation,
            output_state: (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect(),
        })
    }
}

fn initial_delta(objective: &CatObjective, n: usize) -> f64 {
    objective.evaluate(&vec![0.0; n * n]).map(|e| e.delta).unwrap_or(f64::NAN)
}

/// Trains the mixing matrix by Nelder-Mead from `W = I`.
pub fn optimize_cat_mixing(cfg: &CatTaskConfig) -> Result<CatTrainResult> {
    cfg.validate()?;
    let objectives = cfg
        .beta_list
        .iter()
        .map(|&b| CatObjective::new(cfg, b))
        .collect::<Result<Vec<_>>>()?;
    optimize_objectives(cfg, &objectives)
}

/// Optimization over prepared objectives, so that evolved states can be reused.
pub fn optimize_objectives(cfg: &CatTaskConfig, objectives: &[CatObjective]) -> Result<CatTrainResult> {
    let n = cfg.params.n_modes();
    let x0 = vec![0.0; n * n];
    let mut cases = Vec::with_capacity(objectives.len());
    if cfg.shared_mixing {
        let run = minimize(
            |theta| {
                let mut total = 0.0;
                for o in objectives {
                    total += o.cost(theta, cfg.min_probability)?;
                }
                Ok(total / objectives.len() as f64)
            },
            &x0,
            &cfg.optimizer,
        )?;
        for o in objectives {
            cases.push(o.case(&run.x, initial_delta(o, n), &run)?);
        }
    } else {
        for o in objectives {
            let run = minimize(|theta| o.cost(theta, cfg.min_probability), &x0, &cfg.optimizer)?;
            cases.push(o.case(&run.x, initial_delta(o, n), &run)?);
        }
    }
    let deltas: Vec<f64> = cases.iter().map(|c| c.delta).collect();
    let (mean_delta, delta_std) = mean_std(&deltas);
    let mean_probability = cases.iter().map(|c| c.probability).sum::<f64>() / cases.len() as f64;
    Ok(CatTrainResult {
        cases,
        mean_delta,
        delta_std,
        mean_probability,
    })
}

/// Re-evaluates a stored case from its generator parameters.
pub fn recompute_case(cfg: &CatTaskConfig, case: &CatCase) -> Result<CatEvaluation> {
    CatObjective::new(cfg, case.beta)?.evaluate(&case.theta)
}
