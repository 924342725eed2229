//! Simulation configuration file (JSON).
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "noise": "compose(phase_damping({p2}), amplitude_damping(0.999))",
//!   "protocol": { "n_qubits": 1, "lengths": [10], "n_mc": 50000, "seed": 7 },
//!   "cost": { "constant": { "alpha": 4, "beta": 1 } },
//!   "sweep": { "param": "p2", "values": [0.98, 0.99, 0.999] },
//!   "output": { "directory": "out", "svg": true }
//! }
//! ```
//!
//! A `{name}` placeholder in the noise text is replaced by each sweep value.

use std::path::PathBuf;

use serde::Deserialize;

use rbreuse::error::{Error, Result};
use rbreuse::liouville::{EffectVec, StateVec};
use rbreuse::noise::NoiseSpec;
use rbreuse::optimizer::CostModel;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub noise: String,
    pub protocol: Protocol,
    pub cost: CostSection,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Protocol {
    pub n_qubits: usize,
    pub lengths: Vec<usize>,
    /// Sequences sampled for the `A`, `B` estimates.
    pub n_mc: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Sequences per length for an optional shot-level decay table.
    #[serde(default)]
    pub sequences: Option<usize>,
    /// Shots per sequence for the decay table.
    #[serde(default)]
    pub reuse: Option<u64>,
    #[serde(default)]
    pub rho: Operator,
    #[serde(default)]
    pub effect: Operator,
}

/// `"zeros"` or explicit coefficients in the normalized Pauli basis.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(untagged)]
pub enum Operator {
    #[default]
    #[serde(skip)]
    Zeros,
    Named(String),
    Coefficients(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum CostSection {
    Constant { alpha: f64, beta: f64 },
    Ladder { c1: f64, c2: f64, rc: u64 },
}

impl CostSection {
    pub fn model(&self) -> CostModel {
        match *self {
            CostSection::Constant { alpha, beta } => CostModel::Constant { alpha, beta },
            CostSection::Ladder { c1, c2, rc } => CostModel::Ladder { c1, c2, rc },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.cost.model().validate()?;
        if cfg.protocol.lengths.is_empty() {
            return Err(Error::InvalidConfig("protocol.lengths must not be empty".into()));
        }
        if cfg.protocol.sequences.is_some() != cfg.protocol.reuse.is_some() {
            return Err(Error::InvalidConfig(
                "protocol.sequences and protocol.reuse must be given together".into(),
            ));
        }
        if let Some(sweep) = &cfg.sweep {
            if sweep.values.is_empty() {
                return Err(Error::InvalidConfig("sweep.values must not be empty".into()));
            }
            if !cfg.noise.contains(&format!("{{{}}}", sweep.param)) {
                return Err(Error::InvalidConfig(format!(
                    "noise text has no {{{}}} placeholder for the sweep parameter",
                    sweep.param
                )));
            }
        }
        // Validate every instantiated noise text up front.
        for (_, _, spec) in cfg.points()? {
            spec.validate(cfg.protocol.n_qubits)?;
        }
        Ok(cfg)
    }

    /// `(param, value, noise)` for every sweep point; a single `none` point without a sweep.
    pub fn points(&self) -> Result<Vec<(String, f64, NoiseSpec)>> {
        match &self.sweep {
            None => Ok(vec![("none".into(), 0.0, self.noise.parse()?)]),
            Some(sweep) => sweep
                .values
                .iter()
                .map(|&v| {
                    let text = self.noise.replace(&format!("{{{}}}", sweep.param), &format!("{v:?}"));
                    Ok((sweep.param.clone(), v, text.parse()?))
                })
                .collect(),
        }
    }

    pub fn rho(&self) -> Result<StateVec> {
        let n = self.protocol.n_qubits;
        match &self.protocol.rho {
            Operator::Zeros => StateVec::zeros(n),
            Operator::Named(name) if name == "zeros" => StateVec::zeros(n),
            Operator::Named(name) => Err(Error::InvalidConfig(format!("unknown state preset {name:?}"))),
            Operator::Coefficients(c) => StateVec::from_coefficients(n, c.clone()),
        }
    }

    pub fn effect(&self) -> Result<EffectVec> {
        let n = self.protocol.n_qubits;
        match &self.protocol.effect {
            Operator::Zeros => EffectVec::zeros(n),
            Operator::Named(name) if name == "zeros" => EffectVec::zeros(n),
            Operator::Named(name) => Err(Error::InvalidConfig(format!("unknown effect preset {name:?}"))),
            Operator::Coefficients(c) => EffectVec::from_coefficients(n, c.clone()),
        }
    }
}
