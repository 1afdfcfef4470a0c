//! Experiment configuration files.
//!
//! A config is JSON (`.json`) or TOML (anything else). Every section rejects
//! unknown keys; `resolve` turns a parsed config into validated core task
//! configs and names the offending field on failure.

use std::path::{Path, PathBuf};

use kerr_qnn_core::dynamics::{random_couplings, EvolutionConfig, Kerr, Method, NetworkParams, Topology};
use kerr_qnn_core::error::Error as CoreError;
use kerr_qnn_core::readout::NoiseModel;
use kerr_qnn_core::seed;
use kerr_qnn_core::train::nelder_mead::NelderMeadConfig;
use kerr_qnn_core::train::sweep::RandomBetas;
use kerr_qnn_core::train::{BasisSpec, CatTaskConfig, SweepConfig, SweepTask, XorEncoding, XorTaskConfig};
use kerr_qnn_core::wigner::GridGeometry;
use kerr_qnn_core::C64;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Prefixes a core validation error with the config section it came from.
    fn from_core(section: &str, e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { field, reason } => Self::invalid(format!("{section}.{field}"), reason),
            other => Self::invalid(section, other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Xor,
    Cat,
    SweepXor,
    SweepCat,
}

impl TaskKind {
    pub fn is_sweep(self) -> bool {
        matches!(self, TaskKind::SweepXor | TaskKind::SweepCat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    /// Root of every random stream of the run.
    #[serde(default)]
    pub seed: u64,
    /// Directory receiving the artifacts; `--out` overrides it.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub physics: PhysicsConfig,
    pub basis: BasisConfig,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xor: Option<XorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cat: Option<CatSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Kerr strength: a non-negative number or the string `"infinite"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum KerrValue {
    Value(f64),
    Tag(InfiniteTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum InfiniteTag {
    Infinite,
}

impl Default for KerrValue {
    fn default() -> Self {
        KerrValue::Value(0.0)
    }
}

impl From<KerrValue> for Kerr {
    fn from(k: KerrValue) -> Self {
        match k {
            KerrValue::Value(a) => Kerr::Finite(a),
            KerrValue::Tag(InfiniteTag::Infinite) => Kerr::Infinite,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum TopologyName {
    #[default]
    Chain,
    Ring,
}

impl From<TopologyName> for Topology {
    fn from(t: TopologyName) -> Self {
        match t {
            TopologyName::Chain => Topology::Chain,
            TopologyName::Ring => Topology::Ring,
        }
    }
}

/// Nearest-neighbour couplings `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSpec {
    /// Bonds drawn uniformly from `[0, j_max]` with the `coupling` sub-stream of `seed`.
    Random { j_max: f64 },
    /// One value per bond, in topology order (`0-1, 1-2, ...`, closing bond last).
    Bonds(Vec<f64>),
    /// Full symmetric `N x N` matrix.
    Matrix(Vec<Vec<f64>>),
}

/// Coherent pump: one real value for every mode, one real per mode, or
/// `[re, im]` pairs per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum PumpSpec {
    Uniform(f64),
    Real(Vec<f64>),
    Complex(Vec<[f64; 2]>),
}

impl Default for PumpSpec {
    fn default() -> Self {
        PumpSpec::Uniform(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub n_modes: usize,
    #[serde(default)]
    pub onsite: f64,
    #[serde(default)]
    pub kerr: KerrValue,
    #[serde(default = "one")]
    pub gamma: f64,
    pub tau: f64,
    #[serde(default)]
    pub topology: TopologyName,
    pub coupling: CouplingSpec,
    #[serde(default)]
    pub pump: PumpSpec,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    /// Levels per mode, the same for every mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Levels per mode, one entry per mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_dims: Option<Vec<usize>>,
    /// Cap on the total excitation number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_cap: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Rk4,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    /// Step size (initial step for the adaptive method); default `tau / 10^4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default)]
    pub method: MethodName,
    /// Local error bound of the adaptive method.
    #[serde(default = "default_atol")]
    pub atol: f64,
}

fn default_atol() -> f64 {
    1e-9
}

impl Default for EvolutionSection {
    fn default() -> Self {
        EvolutionSection {
            dt: None,
            method: MethodName::Rk4,
            atol: default_atol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum EncodingName {
    PumpAmplitude,
    Occupation,
    MeanFieldAmplitude,
    MeanFieldIntensity,
}

impl From<EncodingName> for XorEncoding {
    fn from(e: EncodingName) -> Self {
        match e {
            EncodingName::PumpAmplitude => XorEncoding::PumpAmplitude,
            EncodingName::Occupation => XorEncoding::Occupation,
            EncodingName::MeanFieldAmplitude => XorEncoding::MeanFieldAmplitude,
            EncodingName::MeanFieldIntensity => XorEncoding::MeanFieldIntensity,
        }
    }
}

/// Multiplicative measurement noise `n (1 + u)`, `u ~ U[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub low: f64,
    #[serde(default = "default_noise_high")]
    pub high: f64,
    /// Noisy copies of each input stacked for training.
    #[serde(default = "default_draws")]
    pub samples: usize,
}

fn default_noise_high() -> f64 {
    0.8
}

fn default_draws() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct XorSection {
    pub encoding: EncodingName,
    /// Pump amplitude (pump encodings) or mean occupation (occupation encoding) of a `1` bit.
    #[serde(default = "one")]
    pub input_level: f64,
    #[serde(default = "default_input_modes")]
    pub input_modes: Vec<usize>,
    #[serde(default = "default_output_modes")]
    pub output_modes: Vec<usize>,
    /// Four rows in input order `00, 01, 10, 11`; defaults to the XOR column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    /// Fresh noise draws used to score the trained readout.
    #[serde(default = "default_draws")]
    pub eval_draws: usize,
}

fn default_input_modes() -> Vec<usize> {
    vec![0, 1]
}

fn default_output_modes() -> Vec<usize> {
    vec![2, 3]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridGeometry::default();
        GridSection {
            x_min: g.x_min,
            x_max: g.x_max,
            p_min: g.p_min,
            p_max: g.p_max,
            nx: g.nx,
            np: g.np,
        }
    }
}

impl From<GridSection> for GridGeometry {
    fn from(g: GridSection) -> Self {
        GridGeometry {
            x_min: g.x_min,
            x_max: g.x_max,
            p_min: g.p_min,
            p_max: g.p_max,
            nx: g.nx,
            np: g.np,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub max_iterations: usize,
    pub initial_scale: f64,
    pub x_tol: f64,
    pub f_tol: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = NelderMeadConfig::default();
        OptimizerSection {
            max_iterations: d.max_iterations,
            initial_scale: d.initial_scale,
            x_tol: d.x_tol,
            f_tol: d.f_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CatSection {
    #[serde(default = "default_betas")]
    pub beta_list: Vec<f64>,
    /// 0 even cat, 1 odd cat.
    #[serde(default)]
    pub parity: u8,
    #[serde(default)]
    pub input_mode: usize,
    #[serde(default)]
    pub output_mode: usize,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub shared_mixing: bool,
    #[serde(default)]
    pub min_probability: f64,
}

fn default_betas() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RandomBetasSection {
    #[serde(default = "one")]
    pub low: f64,
    #[serde(default = "default_beta_high")]
    pub high: f64,
    #[serde(default = "default_beta_draws")]
    pub draws: usize,
}

fn default_beta_high() -> f64 {
    1.4
}

fn default_beta_draws() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub alpha_values: Vec<KerrValue>,
    /// Repetitions per Kerr strength; defaults to the top-level seed alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    /// Cat sweeps only: draw the input amplitudes at random for every point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_betas: Option<RandomBetasSection>,
}

/// Task ready to run, with every physical parameter fixed.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedTask {
    Xor(XorTaskConfig),
    Cat(CatTaskConfig),
    Sweep { task: SweepTask, sweep: SweepConfig },
}

impl ExperimentConfig {
    pub fn from_str(text: &str, format: Format) -> Result<Self, String> {
        match format {
            Format::Json => serde_json::from_str(text).map_err(|e| e.to_string()),
            Format::Toml => toml::from_str(text).map_err(|e| e.to_string()),
        }
    }

    /// Reads and parses a config file; a run manifest is accepted too and
    /// yields the config it embeds.
    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let format = Format::of(path);
        let parse_err = |message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        };
        if format == Format::Json {
            if let Ok(m) = serde_json::from_str::<crate::output::Manifest>(&text) {
                return Ok((m.config, text));
            }
        }
        let cfg = Self::from_str(&text, format).map_err(parse_err)?;
        Ok((cfg, text))
    }

    pub fn resolve(&self) -> Result<ResolvedTask, ConfigError> {
        let params = self.network_params()?;
        let basis = self.basis_spec()?;
        let evolution = self.evolution_config(params.tau)?;
        let needs = |present: bool, name: &str| {
            if present {
                Ok(())
            } else {
                Err(ConfigError::invalid(name, format!("section required for task {:?}", self.task)))
            }
        };
        let unused = |present: bool, name: &str| {
            if present {
                Err(ConfigError::invalid(name, format!("section not used by task {:?}", self.task)))
            } else {
                Ok(())
            }
        };
        match self.task {
            TaskKind::Xor | TaskKind::SweepXor => {
                needs(self.xor.is_some(), "xor")?;
                unused(self.cat.is_some(), "cat")?;
            }
            TaskKind::Cat | TaskKind::SweepCat => {
                needs(self.cat.is_some(), "cat")?;
                unused(self.xor.is_some(), "xor")?;
            }
        }
        if self.task.is_sweep() {
            needs(self.sweep.is_some(), "sweep")?;
        } else {
            unused(self.sweep.is_some(), "sweep")?;
        }

        let task = match self.task {
            TaskKind::Xor | TaskKind::SweepXor => {
                SweepTask::Xor(self.xor_config(params, basis, evolution)?)
            }
            TaskKind::Cat | TaskKind::SweepCat => {
                SweepTask::Cat(self.cat_config(params, basis, evolution)?)
            }
        };
        Ok(match (self.task.is_sweep(), task) {
            (false, SweepTask::Xor(c)) => ResolvedTask::Xor(c),
            (false, SweepTask::Cat(c)) => ResolvedTask::Cat(c),
            (true, task) => {
                let sweep = self.sweep_config()?;
                if matches!(task, SweepTask::Xor(_)) && sweep.random_betas.is_some() {
                    return Err(ConfigError::invalid("sweep.random_betas", "only used by cat sweeps"));
                }
                ResolvedTask::Sweep { task, sweep }
            }
        })
    }

    pub fn network_params(&self) -> Result<NetworkParams, ConfigError> {
        let ph = &self.physics;
        let n = ph.n_modes;
        if n == 0 {
            return Err(ConfigError::invalid("physics.n_modes", "must be at least 1"));
        }
        let mut p = NetworkParams::new(n);
        p.onsite = ph.onsite;
        p.kerr = ph.kerr.into();
        p.gamma = ph.gamma;
        p.tau = ph.tau;
        p.topology = ph.topology.into();
        let edges = p.topology.edges(n);
        p.coupling = match &ph.coupling {
            CouplingSpec::Random { j_max } => {
                if !(*j_max >= 0.0) || !j_max.is_finite() {
                    return Err(ConfigError::invalid("physics.coupling.random.j_max", "must be non-negative"));
                }
                random_couplings(n, p.topology, *j_max, seed::substream(self.seed, "coupling"))
            }
            CouplingSpec::Bonds(values) => {
                if values.len() != edges.len() {
                    return Err(ConfigError::invalid(
                        "physics.coupling.bonds",
                        format!("{} values for {} bonds", values.len(), edges.len()),
                    ));
                }
                let mut j = vec![0.0; n * n];
                for (&(a, b), &v) in edges.iter().zip(values) {
                    j[a * n + b] = v;
                    j[b * n + a] = v;
                }
                j
            }
            CouplingSpec::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(ConfigError::invalid("physics.coupling.matrix", format!("must be {n} x {n}")));
                }
                rows.concat()
            }
        };
        p.pump = match &ph.pump {
            PumpSpec::Uniform(v) => vec![C64::new(*v, 0.0); n],
            PumpSpec::Real(v) => v.iter().map(|&x| C64::new(x, 0.0)).collect(),
            PumpSpec::Complex(v) => v.iter().map(|&[re, im]| C64::new(re, im)).collect(),
        };
        if p.pump.len() != n {
            return Err(ConfigError::invalid(
                "physics.pump",
                format!("{} values for {n} modes", p.pump.len()),
            ));
        }
        p.validate().map_err(|e| ConfigError::from_core("physics", e))?;
        Ok(p)
    }

    pub fn basis_spec(&self) -> Result<BasisSpec, ConfigError> {
        let n = self.physics.n_modes;
        let b = &self.basis;
        let mode_dims = match (b.dim, &b.mode_dims) {
            (Some(d), None) => vec![d; n],
            (None, Some(dims)) => {
                if dims.len() != n {
                    return Err(ConfigError::invalid(
                        "basis.mode_dims",
                        format!("{} entries for {n} modes", dims.len()),
                    ));
                }
                dims.clone()
            }
            _ => return Err(ConfigError::invalid("basis", "give exactly one of `dim` and `mode_dims`")),
        };
        if mode_dims.iter().any(|&d| d == 0) {
            return Err(ConfigError::invalid("basis", "every mode needs at least one level"));
        }
        Ok(BasisSpec {
            mode_dims,
            total_cap: b.total_cap,
        })
    }

    pub fn evolution_config(&self, tau: f64) -> Result<EvolutionConfig, ConfigError> {
        let e = &self.evolution;
        let mut cfg = EvolutionConfig::new(e.dt.unwrap_or(tau / 1e4));
        if e.method == MethodName::Adaptive {
            cfg.method = Method::Adaptive { atol: e.atol };
        }
        cfg.validate(tau).map_err(|e| ConfigError::from_core("evolution", e))?;
        Ok(cfg)
    }

    fn xor_config(&self, params: NetworkParams, basis: BasisSpec, evolution: EvolutionConfig) -> Result<XorTaskConfig, ConfigError> {
        let x = self.xor.as_ref().expect("checked by resolve");
        let mut c = XorTaskConfig::new(x.encoding.into(), params, basis);
        c.evolution = evolution;
        c.input_level = x.input_level;
        c.input_modes = x.input_modes.clone();
        c.output_modes = x.output_modes.clone();
        if let Some(t) = &x.targets {
            c.targets = t.clone();
        }
        c.eval_draws = x.eval_draws;
        c.noise = x.noise.map(|n| NoiseModel {
            low: n.low,
            high: n.high,
            seed: seed::substream(self.seed, "noise"),
            samples: n.samples,
        });
        c.validate().map_err(|e| ConfigError::from_core("xor", e))?;
        Ok(c)
    }

    fn cat_config(&self, params: NetworkParams, basis: BasisSpec, evolution: EvolutionConfig) -> Result<CatTaskConfig, ConfigError> {
        let s = self.cat.as_ref().expect("checked by resolve");
        let mut c = CatTaskConfig::new(s.beta_list.clone(), params, basis);
        c.evolution = evolution;
        c.parity = s.parity;
        c.input_mode = s.input_mode;
        c.output_mode = s.output_mode;
        c.grid = s.grid.into();
        c.optimizer = NelderMeadConfig {
            max_iterations: s.optimizer.max_iterations,
            initial_scale: s.optimizer.initial_scale,
            x_tol: s.optimizer.x_tol,
            f_tol: s.optimizer.f_tol,
        };
        c.shared_mixing = s.shared_mixing;
        c.min_probability = s.min_probability;
        c.validate().map_err(|e| ConfigError::from_core("cat", e))?;
        Ok(c)
    }

    fn sweep_config(&self) -> Result<SweepConfig, ConfigError> {
        let s = self.sweep.as_ref().expect("checked by resolve");
        let alpha_values: Vec<Kerr> = s.alpha_values.iter().map(|&k| k.into()).collect();
        for (i, a) in alpha_values.iter().enumerate() {
            if let Kerr::Finite(v) = a {
                if !(*v >= 0.0) || !v.is_finite() {
                    return Err(ConfigError::invalid(
                        format!("sweep.alpha_values[{i}]"),
                        format!("must be non-negative or \"infinite\", got {v}"),
                    ));
                }
            }
        }
        let cfg = SweepConfig {
            alpha_values,
            seeds: s.seeds.clone().unwrap_or_else(|| vec![self.seed]),
            random_betas: s.random_betas.map(|r| RandomBetas {
                low: r.low,
                high: r.high,
                draws: r.draws,
            }),
        };
        cfg.validate().map_err(|e| ConfigError::from_core("sweep", e))?;
        if let (Some(r), Some(c)) = (&cfg.random_betas, &self.cat) {
            let grid: GridGeometry = c.grid.into();
            let reach = grid.x_max.min(-grid.x_min).min(grid.p_max).min(-grid.p_min);
            if r.low.abs().max(r.high.abs()) * std::f64::consts::SQRT_2 >= reach {
                return Err(ConfigError::invalid("sweep.random_betas", "amplitudes reach outside the Wigner grid"));
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Toml,
}

impl Format {
    pub fn of(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

/// JSON schema of the config format.
pub fn schema_json() -> String {
    let schema = schemars::schema_for!(ExperimentConfig);
    serde_json::to_string_pretty(&schema).expect("schema serializes") + "\n"
}
