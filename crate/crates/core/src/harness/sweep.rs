use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{validate_config, ModelKind, Rho, ScenarioConfig};
use crate::engine::{run_scenario, RunOptions};
use crate::error::{invalid, Error, Result};
use crate::stats::proportion;

/// Cells whose censoring rate exceeds this are flagged `UNRELIABLE`.
pub const UNRELIABLE_CENSORING: f64 = 0.2;

/// A grid of `(lambda, alpha)` cells over a base scenario.
///
/// Every cell uses `seed` as its master seed, so replicate `k` sees the same
/// underlying randomness in every cell (common random numbers): with nested
/// clouds and shared exponential clocks, delayed-model outcomes are then
/// monotone across the grid replicate by replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    /// Model, dimension, rho, kernel, motion, box, numerics and proxy
    /// thresholds; `lambda`, `alpha` and `seed` are overridden per cell.
    pub base: ScenarioConfig,
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    /// Proxy-frequency levels at which `alpha_c` is bisected.
    #[serde(default = "default_targets")]
    pub targets: Vec<f64>,
    #[serde(default = "default_iterations")]
    pub bisection_iterations: usize,
}

fn default_targets() -> Vec<f64> {
    vec![0.02, 0.05, 0.1]
}

fn default_iterations() -> usize {
    6
}

impl SweepPlan {
    pub fn new(base: ScenarioConfig, lambdas: Vec<f64>, alphas: Vec<f64>, replicates: usize, seed: u64) -> Self {
        Self {
            base,
            lambdas,
            alphas,
            replicates,
            seed,
            targets: default_targets(),
            bisection_iterations: default_iterations(),
        }
    }

    /// Reads a `.toml` or `.json` plan and validates it.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let plan: Self = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?,
            _ => toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.alphas.is_empty() {
            return Err(invalid("sweep grids must be nonempty"));
        }
        if self.replicates == 0 {
            return Err(invalid("replicates must be at least 1"));
        }
        if self.targets.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return Err(invalid("bisection targets must lie in (0, 1)"));
        }
        for &l in &self.lambdas {
            for &a in &self.alphas {
                validate_config(self.cell_config(l, a)).map_err(Error::Config)?;
            }
        }
        Ok(())
    }

    fn cell_config(&self, lambda: f64, alpha: f64) -> ScenarioConfig {
        ScenarioConfig {
            lambda,
            alpha,
            seed: self.seed,
            ..self.base.clone()
        }
    }
}

/// One output row; every parameter needed to interpret it is echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: ModelKind,
    pub lambda: f64,
    pub alpha: f64,
    pub rho: Rho,
    pub survived_freq: f64,
    pub stderr: f64,
    #[serde(rename = "mean_I")]
    pub mean_i: f64,
    pub censored_frac: f64,
    pub replicates: usize,
    pub seed: u64,
    /// `UNRELIABLE` when censoring exceeds [`UNRELIABLE_CENSORING`].
    pub flag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaCRow {
    pub model: ModelKind,
    pub lambda: f64,
    pub rho: Rho,
    pub q: f64,
    /// Geometric midpoint of the final bracket; empty when the grid does
    /// not bracket `q`.
    pub alpha_c: Option<f64>,
    pub alpha_lo: Option<f64>,
    pub alpha_hi: Option<f64>,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub alpha_c: Vec<AlphaCRow>,
}

/// Survival-proxy frequency (SurvivedProxy over all replicates; censored
/// runs count as not surviving), mean final size and censoring rate of one
/// cell.
pub fn run_cell(plan: &SweepPlan, lambda: f64, alpha: f64) -> Result<SweepRow> {
    let cfg = validate_config(plan.cell_config(lambda, alpha)).map_err(Error::Config)?;
    let outcomes: Vec<(bool, bool, usize)> = (0..plan.replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let o = run_scenario(&cfg, rep, RunOptions::proxy_only())?;
            Ok((o.verdict.survived(), o.verdict.censored(), o.size()))
        })
        .collect::<Result<_>>()?;
    let n = outcomes.len();
    let survived = outcomes.iter().filter(|o| o.0).count();
    let censored = outcomes.iter().filter(|o| o.1).count();
    let p = proportion(survived, n);
    let censored_frac = censored as f64 / n as f64;
    Ok(SweepRow {
        model: cfg.model,
        lambda,
        alpha,
        rho: cfg.rho,
        survived_freq: p.mean,
        stderr: p.stderr,
        mean_i: outcomes.iter().map(|o| o.2 as f64).sum::<f64>() / n as f64,
        censored_frac,
        replicates: n,
        seed: plan.seed,
        flag: if censored_frac > UNRELIABLE_CENSORING { "UNRELIABLE".into() } else { String::new() },
    })
}

/// Refines the `alpha` at which the proxy frequency crosses `q` between two
/// grid points, by bisection in `log alpha`. `row` holds the grid cells of
/// one `lambda`, sorted by `alpha`.
pub fn bisect_alpha_c(plan: &SweepPlan, lambda: f64, row: &[SweepRow], q: f64) -> Result<AlphaCRow> {
    let mut out = AlphaCRow {
        model: plan.base.model,
        lambda,
        rho: plan.base.rho,
        q,
        alpha_c: None,
        alpha_lo: None,
        alpha_hi: None,
        replicates: plan.replicates,
        seed: plan.seed,
    };
    let Some(k) = row.windows(2).position(|w| w[0].survived_freq > q && w[1].survived_freq <= q) else {
        return Ok(out);
    };
    let (mut lo, mut hi) = (row[k].alpha, row[k + 1].alpha);
    for _ in 0..plan.bisection_iterations {
        let mid = (lo * hi).sqrt();
        if run_cell(plan, lambda, mid)?.survived_freq > q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    out.alpha_c = Some((lo * hi).sqrt());
    out.alpha_lo = Some(lo);
    out.alpha_hi = Some(hi);
    Ok(out)
}

/// All cells, sorted by `(lambda, alpha)`, then the `alpha_c` bisections
/// for every `lambda` and target level. Output does not depend on the
/// number of worker threads.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let mut lambdas = plan.lambdas.clone();
    let mut alphas = plan.alphas.clone();
    lambdas.sort_by(f64::total_cmp);
    alphas.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(lambdas.len() * alphas.len());
    let mut alpha_c = Vec::new();
    for &l in &lambdas {
        let row: Vec<SweepRow> = alphas.iter().map(|&a| run_cell(plan, l, a)).collect::<Result<_>>()?;
        for &q in &plan.targets {
            alpha_c.push(bisect_alpha_c(plan, l, &row, q)?);
        }
        rows.extend(row);
    }
    Ok(SweepResult { rows, alpha_c })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan() -> SweepPlan {
        let mut base = ScenarioConfig::canonical(2, 1.0, 1.0, 6.0);
        base.proxy.n_max = 60;
        base.numerics.dt = 4e-3;
        SweepPlan::new(base, vec![0.8, 1.6], vec![0.25, 1.0, 4.0, 64.0], 60, 3)
    }

    #[test]
    fn rows_are_sorted_and_monotone_in_alpha() {
        let r = run_sweep(&plan()).unwrap();
        assert_eq!(r.rows.len(), 8);
        for row in r.rows.chunks(4) {
            assert!(row.windows(2).all(|w| w[0].alpha < w[1].alpha));
            // Common random numbers: survival can only be lost as alpha grows
            // unless censoring intervenes.
            for w in row.windows(2) {
                assert!(w[1].survived_freq <= w[0].survived_freq + w[0].censored_frac + w[1].censored_frac);
            }
            assert!(row.iter().all(|c| (0.0..=1.0).contains(&c.survived_freq)));
        }
        assert_eq!(r.alpha_c.len(), 6);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let p = plan();
        let a = crate::harness::with_threads(1, || run_cell(&p, 1.6, 1.0)).unwrap().unwrap();
        let b = crate::harness::with_threads(3, || run_cell(&p, 1.6, 1.0)).unwrap().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bisection_stays_inside_its_bracket() {
        let p = plan();
        let row: Vec<SweepRow> = p.alphas.iter().map(|&a| run_cell(&p, 1.6, a).unwrap()).collect();
        let ac = bisect_alpha_c(&p, 1.6, &row, 0.05).unwrap();
        if let (Some(c), Some(lo), Some(hi)) = (ac.alpha_c, ac.alpha_lo, ac.alpha_hi) {
            assert!(lo <= c && c <= hi);
            assert!(p.alphas[0] <= lo && hi <= p.alphas[3]);
        }
    }

    #[test]
    fn plan_round_trips_through_toml() {
        let p = plan();
        let text = toml::to_string(&p).unwrap();
        let back: SweepPlan = toml::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let mut p = plan();
        p.alphas.clear();
        assert!(run_sweep(&p).is_err());
        let mut p = plan();
        p.replicates = 0;
        assert!(p.validate().is_err());
    }
}
