use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{validate_config, ModelKind, Rho, ScenarioConfig};
use crate::engine::{run_scenario, EpidemicOutcome, RunOptions, Verdict};
use crate::error::{Error, Result};

/// One replicate, reduced to what a results table needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub model: ModelKind,
    pub lambda: f64,
    pub alpha: f64,
    pub rho: Rho,
    pub seed: u64,
    pub replicate: u64,
    pub verdict: String,
    pub size: usize,
    /// Generation sizes `|I_0|;|I_1|;...`.
    pub generations: String,
    pub truncated: bool,
    pub stopped_early: bool,
}

impl RunSummary {
    pub fn new(cfg: &ScenarioConfig, o: &EpidemicOutcome) -> Self {
        let verdict = match o.verdict {
            Verdict::ExtinctWithSize(_) => "extinct".to_string(),
            Verdict::SurvivedProxy(r) => format!("survived_{}", serde_json::to_value(r).unwrap_or_default().as_str().unwrap_or("")),
            Verdict::BoundaryCensored => "boundary_censored".to_string(),
        };
        let generations = o.generation_sizes().iter().map(|g| g.to_string()).collect::<Vec<_>>().join(";");
        Self {
            model: cfg.model,
            lambda: cfg.lambda,
            alpha: cfg.alpha,
            rho: cfg.rho,
            seed: cfg.seed,
            replicate: o.replicate,
            verdict,
            size: o.size(),
            generations,
            truncated: o.truncated,
            stopped_early: o.stopped_early,
        }
    }
}

/// Runs replicates `0..replicates` of `cfg`, in replicate order.
pub fn simulate(cfg: &ScenarioConfig, replicates: u64, opts: RunOptions) -> Result<Vec<EpidemicOutcome>> {
    let cfg = validate_config(cfg.clone()).map_err(Error::Config)?;
    (0..replicates).into_par_iter().map(|rep| run_scenario(&cfg, rep, opts)).collect()
}
