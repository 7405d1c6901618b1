//! Run configurations, one JSON document per command. Unknown keys are
//! rejected everywhere.

use std::path::Path;

use levygen::generator::{FunctionSpec, GeneratorForm};
use levygen::holder::{VariableOrderFn, VerdictStatus};
use levygen::lab::{LimitExperiment, MomentOptions};
use levygen::sim::{JumpSet, ProcessModel};
use levygen::Symbol;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::Failure;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolConfig {
    pub symbol: Symbol,
    pub states: Vec<Vec<f64>>,
    /// Frequencies at which `q(x, ξ)` is tabulated; a dyadic default.
    #[serde(default)]
    pub frequencies: Option<Vec<Vec<f64>>>,
    /// Largest radius for the Blumenthal–Getoor fit.
    #[serde(default)]
    pub r_max: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub symbol: Symbol,
    pub function: FunctionSpec,
    pub states: Vec<Vec<f64>>,
    /// Per-state form from `α(x)`.
    #[serde(default)]
    pub order: Option<VariableOrderFn>,
    /// One form for every state; overrides `order`.
    #[serde(default)]
    pub form: Option<GeneratorForm>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    pub model: ProcessModel,
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub step: f64,
    #[serde(default)]
    pub exit_radius: Option<f64>,
    #[serde(default = "one")]
    pub paths: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub experiment: LimitExperiment,
    pub study: Study,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Study {
    Limit {
        model: ProcessModel,
        function: FunctionSpec,
        x: Vec<f64>,
        #[serde(default)]
        options: MomentOptions,
        /// Known value of `Lf(x)`; computed by quadrature when absent.
        #[serde(default)]
        reference: Option<f64>,
    },
    Vague {
        model: ProcessModel,
        x: Vec<f64>,
        set: JumpSet,
    },
    Maximal {
        model: ProcessModel,
        x: Vec<f64>,
        #[serde(default = "levygen::lab::default_r_grid")]
        r_grid: Vec<f64>,
    },
    TailMoment {
        model: ProcessModel,
        x: Vec<f64>,
        a: f64,
        radius: f64,
    },
    Sweep {
        model: ProcessModel,
        function: FunctionSpec,
        states: Vec<Vec<f64>>,
        order: VariableOrderFn,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "suite", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VerifyConfig {
    /// Fractional moments of truncated stable measures against their
    /// Fourier-side integrals, including the divergent case `κ = α`.
    MomentIdentity {
        #[serde(default = "default_alphas")]
        alphas: Vec<f64>,
        #[serde(default = "default_offset")]
        kappa_offset: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    /// No Gaussian part where `β∞ < 2`.
    Diffusion {
        symbol: Symbol,
        states: Vec<Vec<f64>>,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    /// `|y|^α = c_α ∫ (1 − cos yξ) |ξ|^{−1−α} dξ`.
    Kernel {
        #[serde(default = "default_ys")]
        ys: Vec<f64>,
        #[serde(default = "default_alphas")]
        alphas: Vec<f64>,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    /// Domain certificate for a symbol and test function.
    Domain {
        symbol: Symbol,
        function: FunctionSpec,
        order: VariableOrderFn,
        states: Vec<Vec<f64>>,
        #[serde(default)]
        expect: Option<VerdictStatus>,
    },
}

fn default_alphas() -> Vec<f64> {
    vec![0.3, 0.8, 1.2, 1.7]
}

fn default_ys() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}

fn default_offset() -> f64 {
    0.2
}

fn default_tolerance() -> f64 {
    0.01
}
