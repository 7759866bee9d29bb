//! Scenario configuration and validation.
//!
//! Scenario files use the field names of [`ScenarioConfig`] with
//! `lambda`, `rho` (a number or the string `"inf"`) and `alpha` for the
//! intensity, infectivity and removal rate.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::diffusion::DiffusionSpec;
use crate::error::{ConfigViolation, Error, Result};
use crate::kernel::{kernel_mass, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rho {
    Finite(f64),
    Infinite,
}

impl Rho {
    pub fn is_infinite(self) -> bool {
        matches!(self, Rho::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Rho::Finite(r) => Some(r),
            Rho::Infinite => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl std::fmt::Display for Rho {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rho::Finite(r) => write!(f, "{r}"),
            Rho::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Rho {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Rho::Infinite);
        }
        let v: f64 = t.parse().map_err(|_| Error::Parse(format!("bad rho `{s}`")))?;
        Ok(if v.is_infinite() && v > 0.0 {
            Rho::Infinite
        } else {
            Rho::Finite(v)
        })
    }
}

impl Serialize for Rho {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Rho::Finite(r) => s.serialize_f64(*r),
            Rho::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Rho {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Rho::Finite(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Particles are stationary until infected.
    Delayed,
    /// Every particle moves from time zero.
    Diffusion,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Delayed => "delayed",
            ModelKind::Diffusion => "diffusion",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delayed" => Ok(ModelKind::Delayed),
            "diffusion" => Ok(ModelKind::Diffusion),
            _ => Err(Error::Parse(format!("unknown model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericsConfig {
    pub dt: f64,
    /// Paths are never extended past this time; epidemics still running at
    /// this time are stopped with a time-cap verdict.
    pub max_horizon: f64,
    /// Dominating rate for contact thinning. Defaults to `rho * mu_max`;
    /// couplings across `rho` need one common value.
    pub thinning_bound: Option<f64>,
    pub bridge_correction: bool,
    pub max_path_steps: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            max_horizon: 1e3,
            thinning_bound: None,
            bridge_correction: true,
            max_path_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProxyThresholds {
    pub n_max: usize,
    pub g_max: usize,
}

impl Default for ProxyThresholds {
    fn default() -> Self {
        Self { n_max: 500, g_max: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default = "default_model")]
    pub model: ModelKind,
    pub dimension: usize,
    pub lambda: f64,
    pub rho: Rho,
    pub alpha: f64,
    #[serde(default = "default_kernel")]
    pub kernel: KernelSpec,
    #[serde(default = "default_diffusion")]
    pub diffusion: DiffusionSpec,
    pub box_half_width: f64,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub proxy: ProxyThresholds,
    #[serde(default)]
    pub seed: u64,
}

fn default_model() -> ModelKind {
    ModelKind::Delayed
}

fn default_kernel() -> KernelSpec {
    KernelSpec::UnitBallIndicator
}

fn default_diffusion() -> DiffusionSpec {
    DiffusionSpec::StandardBrownian
}

impl ScenarioConfig {
    /// Delayed model, Brownian motion, unit-ball kernel, `rho = inf`.
    pub fn canonical(dimension: usize, lambda: f64, alpha: f64, box_half_width: f64) -> Self {
        Self {
            model: ModelKind::Delayed,
            dimension,
            lambda,
            rho: Rho::Infinite,
            alpha,
            kernel: KernelSpec::UnitBallIndicator,
            diffusion: DiffusionSpec::StandardBrownian,
            box_half_width,
            numerics: NumericsConfig::default(),
            proxy: ProxyThresholds::default(),
            seed: 0,
        }
    }

    /// Largest distance at which one particle can infect another.
    pub fn interaction_radius(&self) -> f64 {
        self.kernel.support_radius()
    }

    /// The dominating rate used when thinning contact processes.
    pub fn thinning_rate(&self) -> f64 {
        match self.rho {
            Rho::Infinite => f64::INFINITY,
            Rho::Finite(r) => self
                .numerics
                .thinning_bound
                .unwrap_or(r * self.kernel.mu_max()),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads a `.toml` or `.json` scenario file and validates it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text)?,
            _ => Self::from_toml_str(&text)?,
        };
        validate_config(cfg).map_err(Error::Config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Returns `cfg` unchanged when every invariant holds, otherwise all the
/// violations found.
pub fn validate_config(cfg: ScenarioConfig) -> std::result::Result<ScenarioConfig, Vec<ConfigViolation>> {
    let mut v = Vec::new();
    let mut push = |f: &str, m: &str| v.push(ConfigViolation::new(f, m));
    if cfg.dimension < 1 {
        push("dimension", "dimension must be at least 1");
    }
    if !positive(cfg.lambda) {
        push("lambda", "intensity must be positive");
    }
    if !(cfg.alpha.is_finite() && cfg.alpha >= 0.0) {
        push("alpha", "removal rate must be finite and non-negative");
    }
    match cfg.rho {
        Rho::Finite(r) if !positive(r) => push("rho", "infectivity must be positive"),
        Rho::Infinite if cfg.kernel.indicator_radius().is_none() => {
            push("kernel", "infinite-ρ requires compact indicator kernel")
        }
        _ => {}
    }
    if !positive(cfg.box_half_width) {
        push("box_half_width", "box half-width must be positive");
    }
    let n = &cfg.numerics;
    if !positive(n.dt) {
        push("numerics.dt", "time step must be positive");
    }
    if !(n.max_horizon > 0.0) {
        push("numerics.max_horizon", "horizon must be positive");
    }
    if n.max_path_steps == 0 {
        push("numerics.max_path_steps", "path step cap must be positive");
    }
    if let (Some(bound), Some(r)) = (n.thinning_bound, cfg.rho.finite()) {
        if !(bound.is_finite() && bound >= r * cfg.kernel.mu_max()) {
            push("numerics.thinning_bound", "thinning bound must dominate rho * mu_max");
        }
    }
    if cfg.proxy.n_max == 0 || cfg.proxy.g_max == 0 {
        push("proxy", "proxy thresholds must be positive");
    }
    cfg.kernel.validate("kernel", &mut v);
    if cfg.dimension >= 1 {
        cfg.diffusion.validate(cfg.dimension, "diffusion", &mut v);
        if v.iter().all(|x| x.field != "kernel") {
            let mass = kernel_mass(&cfg.kernel, cfg.dimension);
            if !positive(mass) {
                v.push(ConfigViolation::new("kernel", "kernel mass must be positive and finite"));
            }
        }
    }
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(v)
    }
}
