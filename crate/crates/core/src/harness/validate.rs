use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{hitting_probability_2d, z_alpha};
use crate::bounds::{crude_bound_delayed, r_infinity_closed_form_2d, r_infinity_mc, r_rho_mc};
use crate::config::{ModelKind, ScenarioConfig};
use crate::diffusion::DiffusionSpec;
use crate::engine::{run_delayed_chronological, run_delayed_percolation};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::percolation::{brute_force_components, crossing_probability, DiskGraph};
use crate::rng::{Purpose, RngStreamKey, StreamFactory};
use crate::sampling::sample_poisson_cloud;
use crate::sausage::SausageMc;
use crate::stats::proportion;

pub const SUITES: [&str; 5] = ["coupling", "bounds", "sausage", "percolation", "all"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    /// Allowed `|observed - expected|`.
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            expected,
            tolerance,
            passed: (observed - expected).abs() <= tolerance,
        }
    }

    /// Passes when `observed <= expected + tolerance`.
    fn at_most(name: &str, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            passed: observed <= expected + tolerance,
            ..Self::new(name, observed, expected, tolerance)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Runs a named suite with `replicates` Monte Carlo replicates per check.
pub fn run_suite(name: &str, replicates: usize, seed: u64) -> Result<ValidationReport> {
    let n = replicates.max(1);
    let checks = match name {
        "coupling" => coupling(n, seed)?,
        "bounds" => bounds(n, seed)?,
        "sausage" => sausage(n, seed)?,
        "percolation" => percolation(n, seed),
        "all" => {
            let mut v = coupling(n, seed)?;
            v.extend(bounds(n, seed)?);
            v.extend(sausage(n, seed)?);
            v.extend(percolation(n, seed));
            v
        }
        other => return Err(Error::UnknownSuite(other.to_string())),
    };
    Ok(ValidationReport {
        suite: name.to_string(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn coupling(n: usize, seed: u64) -> Result<Vec<Check>> {
    let mut cfg = ScenarioConfig::canonical(2, 0.5, 1.0, 8.0);
    cfg.seed = seed;
    let mut hi = cfg.clone();
    hi.alpha = 2.0;
    let rows: Vec<(bool, bool)> = (0..n as u64)
        .into_par_iter()
        .map(|rep| {
            let a = run_delayed_chronological(&cfg, rep)?;
            let (b, _) = run_delayed_percolation(&cfg, rep)?;
            let same = a.events == b.events && a.verdict == b.verdict;
            let c = run_delayed_chronological(&hi, rep)?;
            let big = a.infected_set();
            let nested = c.infected_set().iter().all(|j| big.binary_search(j).is_ok());
            Ok((same, nested))
        })
        .collect::<Result<_>>()?;
    let frac = |f: fn(&(bool, bool)) -> bool| rows.iter().filter(|r| f(r)).count() as f64 / n as f64;
    Ok(vec![
        Check::new("engines_agree", frac(|r| r.0), 1.0, 0.0),
        Check::new("alpha_coupling_nested", frac(|r| r.1), 1.0, 0.0),
    ])
}

fn bounds(n: usize, seed: u64) -> Result<Vec<Check>> {
    let (lambda, alpha) = (0.1, 4.0);
    let mc = SausageMc::new(2, DiffusionSpec::StandardBrownian)
        .replicates(n)
        .seed(seed)
        .dt(1e-3)
        .points(128);
    let est = r_infinity_mc(ModelKind::Delayed, &mc, lambda, alpha)?;
    let exact = r_infinity_closed_form_2d(lambda, alpha)?;
    let rho = 2.0;
    let kernel = KernelSpec::UnitBallIndicator;
    let finite = r_rho_mc(ModelKind::Delayed, &mc, &kernel, lambda, rho, alpha)?;
    let crude = crude_bound_delayed(lambda, rho, &kernel, 2, alpha)?;
    Ok(vec![
        Check::new("r_infinity_vs_closed_form", est.value, exact.value, 3.0 * est.stderr),
        Check::at_most("r_rho_below_crude", finite.value, crude.value, 3.0 * finite.stderr),
        Check::at_most("r_rho_below_r_infinity", finite.value, exact.value, 3.0 * finite.stderr),
    ])
}

fn sausage(n: usize, seed: u64) -> Result<Vec<Check>> {
    let alpha = 1.0;
    let mc = SausageMc::new(2, DiffusionSpec::StandardBrownian).replicates(n).seed(seed).dt(1e-3);
    let p = mc.exponential_hitting_probabilities(&[2.0], alpha, true)?[0];
    let v = mc.points(128).exponential_time_volume(alpha, false)?;
    let d1 = SausageMc::new(1, DiffusionSpec::StandardBrownian).replicates(n).seed(seed).dt(1e-3);
    // E|range of B up to T| + 2 = 2 E max + 2, E max_{s<=T} B = 1/sqrt(2 alpha).
    let v1 = d1.exponential_time_volume(alpha, false)?;
    Ok(vec![
        Check::new("hitting_probability_norm_2", p.mean, hitting_probability_2d(2.0, alpha)?, 3.0 * p.stderr + 0.01),
        Check::new("exponential_volume_2d", v.mean, z_alpha(alpha)?, 3.0 * v.stderr + 0.02 * PI),
        Check::new("exponential_volume_1d", v1.mean, 2.0 + 2.0 / (2.0 * alpha).sqrt(), 3.0 * v1.stderr + 0.02),
    ])
}

fn percolation(n: usize, seed: u64) -> Vec<Check> {
    let f = StreamFactory::new(seed);
    let reps = n.min(50) as u64;
    let agree = (0..reps)
        .into_par_iter()
        .filter(|&rep| {
            let cloud = sample_poisson_cloud(1.0, 5.0, 2, &mut f.stream(RngStreamKey::new(rep, 0, Purpose::PointProcess)));
            let labels = brute_force_components(&cloud, 1.0);
            let mut g = DiskGraph::new(cloud, 1.0);
            (0..labels.len()).all(|i| (0..labels.len()).all(|j| g.connected(i, j) == (labels[i] == labels[j])))
        })
        .count();
    let low = crossing_probability(0.3, 2, 8.0, 1.0, n, seed);
    let high = crossing_probability(3.0, 2, 8.0, 1.0, n, seed);
    let agree = proportion(agree, reps as usize);
    vec![
        Check::new("union_find_matches_bfs", agree.mean, 1.0, 0.0),
        Check::at_most("sparse_cloud_rarely_crosses", low.mean, 0.0, 0.05 + 3.0 * low.stderr),
        Check::new("dense_cloud_crosses", high.mean, 1.0, 0.05 + 3.0 * high.stderr),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(matches!(run_suite("nope", 10, 0), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn small_suites_pass() {
        for s in ["coupling", "percolation"] {
            let r = run_suite(s, 40, 1).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(!r.checks.is_empty());
        }
    }
}
