//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `ACCEPTANCE_ONLY=C2,C7` runs a subset. The process exits nonzero on a
//! failure only when `ACCEPTANCE_STRICT=1`.

use std::time::Instant;

use rayon::prelude::*;
use slither_core::bessel::hitting_probability_2d;
use slither_core::bounds::{r_infinity_closed_form_2d, r_infinity_mc};
use slither_core::config::{ModelKind, Rho, ScenarioConfig};
use slither_core::diffusion::DiffusionSpec;
use slither_core::error::Error;
use slither_core::engine::{run_delayed_chronological, run_delayed_percolation, run_scenario, RunOptions, Verdict};
use slither_core::kernel::KernelSpec;
use slither_core::percolation::CrossingBisection;
use slither_core::sausage::SausageMc;
use slither_core::stats::{proportion, wilson95, Estimate};

type Outcome = (bool, String);
type Res<T> = Result<T, Error>;

fn bm2() -> SausageMc {
    SausageMc::new(2, DiffusionSpec::StandardBrownian)
}

fn z(a: &Estimate, b: f64) -> f64 {
    (a.mean - b) / a.stderr
}

fn subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|j| big.binary_search(j).is_ok())
}

const NORMS: [f64; 3] = [1.5, 2.0, 3.0];
const C1_ALPHAS: [f64; 3] = [0.5, 1.0, 2.0];
const C2_ALPHAS: [f64; 3] = [1.0, 4.0, 16.0];
const C2_DT: f64 = 2.5e-4;
const C2_REPS: usize = 4000;

fn c1_mc(alpha: f64) -> SausageMc {
    bm2().dt(1e-4).replicates(10_000).seed(101 + (alpha * 8.0) as u64)
}

fn c2_mc(lambda: f64, alpha: f64) -> SausageMc {
    bm2()
        .dt(C2_DT)
        .replicates(C2_REPS)
        .points(256)
        .seed(200 + (lambda * 10.0) as u64 * 100 + alpha as u64)
}

fn c1() -> Res<Outcome> {
    let mut worst: f64 = 0.0;
    let mut fails = Vec::new();
    for &alpha in &C1_ALPHAS {
        let est = c1_mc(alpha).exponential_hitting_probabilities(&NORMS, alpha, true)?;
        for (e, &x) in est.iter().zip(&NORMS) {
            let exact = hitting_probability_2d(x, alpha)?;
            let zz = z(e, exact);
            worst = worst.max(zz.abs());
            if zz.abs() > 3.0 {
                fails.push(format!("(|x|={x}, alpha={alpha}: {:.4} vs {exact:.4})", e.mean));
            }
        }
    }
    Ok((fails.is_empty(), format!("9 points, max |z| = {worst:.2} {}", fails.join(" "))))
}

fn c2() -> Res<Outcome> {
    let mut worst: f64 = 0.0;
    let mut fails = Vec::new();
    for lambda in [0.1, 0.2, 0.3] {
        for &alpha in &C2_ALPHAS {
            let mc = r_infinity_mc(ModelKind::Delayed, &c2_mc(lambda, alpha), lambda, alpha)?;
            let exact = r_infinity_closed_form_2d(lambda, alpha)?.value;
            let zz = z(&mc.estimate(), exact);
            worst = worst.max(zz.abs());
            if zz.abs() > 3.0 {
                fails.push(format!("(lambda={lambda}, alpha={alpha}: {:.4} vs {exact:.4})", mc.value));
            }
        }
    }
    Ok((fails.is_empty(), format!("9 cells, max |z| = {worst:.2} {}", fails.join(" "))))
}

fn c3() -> Res<Outcome> {
    let mut cfg = ScenarioConfig::canonical(2, 0.5, 1.0, 12.0);
    cfg.seed = 3;
    let rows: Vec<(bool, bool, usize)> = (0..1000u64)
        .into_par_iter()
        .map(|rep| {
            let a = run_delayed_chronological(&cfg, rep)?;
            let (b, _) = run_delayed_percolation(&cfg, rep)?;
            let same = a.infected_set() == b.infected_set() && a.parent_map() == b.parent_map();
            Ok((same, a.events == b.events, a.size()))
        })
        .collect::<Res<_>>()?;
    let mismatched = rows.iter().filter(|r| !r.0).count();
    let logs = rows.iter().filter(|r| !r.1).count();
    let mean = rows.iter().map(|r| r.2 as f64).sum::<f64>() / rows.len() as f64;
    Ok((
        mismatched == 0,
        format!("{mismatched} set/parent mismatches, {logs} event-log mismatches in 1000 replicates (mean |I| {mean:.2})"),
    ))
}

/// Configuration for the subcritical checks, with its certified estimate.
fn subcritical() -> Res<(ScenarioConfig, f64, f64, bool)> {
    let (lambda, alpha) = (0.1, 4.0);
    let r = r_infinity_mc(ModelKind::Delayed, &bm2().dt(1e-3).replicates(4000).seed(41), lambda, alpha)?;
    let mut cfg = ScenarioConfig::canonical(2, lambda, alpha, 20.0);
    cfg.seed = 42;
    Ok((cfg, r.value, r.stderr, r.certified() && r.value < 0.8))
}

fn subcritical_sizes(cfg: &ScenarioConfig) -> Res<Vec<Vec<usize>>> {
    let opts = RunOptions {
        stop_early: false,
        record_events: false,
    };
    (0..10_000u64)
        .into_par_iter()
        .map(|rep| Ok(run_scenario(cfg, rep, opts)?.generation_sizes()))
        .collect()
}

fn c4_c5() -> Res<(Outcome, Outcome)> {
    let (cfg, r, se, certified) = subcritical()?;
    let gens = subcritical_sizes(&cfg)?;
    let total: Vec<f64> = gens.iter().map(|g| g.iter().sum::<usize>() as f64).collect();
    let e = Estimate::from_samples(&total);
    let bound = 1.0 / (1.0 - r);
    let c4 = (
        certified && e.mean <= bound + 3.0 * e.stderr,
        format!("R = {r:.4} +- {se:.4} (certified: {certified}), E|I| = {:.4} +- {:.4} <= {bound:.4}", e.mean, e.stderr),
    );
    let mut ok = certified;
    let mut parts = Vec::new();
    for n in 1..=4 {
        let xs: Vec<f64> = gens.iter().map(|g| g.get(n).copied().unwrap_or(0) as f64).collect();
        let e = Estimate::from_samples(&xs);
        let b = r.powi(n as i32);
        ok &= e.mean <= b + 3.0 * e.stderr;
        parts.push(format!("n={n}: {:.4} <= {b:.4}", e.mean));
    }
    Ok((c4, (ok, parts.join(", "))))
}

fn c6() -> Res<Outcome> {
    let mut base = ScenarioConfig::canonical(2, 0.5, 1.0, 12.0);
    base.seed = 6;
    let mut a2 = base.clone();
    a2.alpha = 2.0;
    let mut r1 = base.clone();
    r1.rho = Rho::Finite(1.0);
    r1.numerics.thinning_bound = Some(4.0);
    let mut r4 = r1.clone();
    r4.rho = Rho::Finite(4.0);
    let rows: Vec<(bool, bool)> = (0..1000u64)
        .into_par_iter()
        .map(|rep| {
            let big = run_delayed_chronological(&base, rep)?.infected_set();
            let small = run_delayed_chronological(&a2, rep)?.infected_set();
            let lo = run_delayed_chronological(&r1, rep)?.infected_set();
            let hi = run_delayed_chronological(&r4, rep)?.infected_set();
            Ok((subset(&small, &big), subset(&lo, &hi)))
        })
        .collect::<Res<_>>()?;
    let a = rows.iter().filter(|r| r.0).count();
    let r = rows.iter().filter(|r| r.1).count();
    Ok((a == 1000 && r == 1000, format!("alpha 1 -> 2 nested in {a}/1000, rho 1 -> 4 nested in {r}/1000")))
}

fn c7() -> Res<Outcome> {
    let mut cfg = ScenarioConfig::canonical(2, 1.2, 1.0, 8.0);
    cfg.rho = Rho::Finite(8.0);
    cfg.numerics.dt = 2e-3;
    cfg.numerics.max_horizon = 200.0;
    cfg.proxy.n_max = 100;
    cfg.seed = 70;
    let r: f64 = 2.0;
    let mut scaled = cfg.clone();
    scaled.lambda /= r.powi(2);
    scaled.rho = Rho::Finite(8.0 / (r * r));
    scaled.alpha /= r * r;
    scaled.kernel = KernelSpec::BallIndicator { radius: r };
    scaled.box_half_width *= r;
    scaled.numerics.dt *= r * r;
    scaled.numerics.max_horizon *= r * r;
    scaled.seed = 71;
    let n = 2000;
    let freq = |c: &ScenarioConfig| -> Res<usize> {
        let hits: Vec<bool> = (0..n as u64)
            .into_par_iter()
            .map(|rep| Ok(run_scenario(c, rep, RunOptions::proxy_only())?.verdict.survived()))
            .collect::<Res<_>>()?;
        Ok(hits.into_iter().filter(|&h| h).count())
    };
    let (a, b) = (freq(&cfg)?, freq(&scaled)?);
    let (ca, cb) = (wilson95(a, n), wilson95(b, n));
    let overlap = ca.0 <= cb.1 && cb.0 <= ca.1;
    Ok((
        overlap,
        format!(
            "{:.4} [{:.4}, {:.4}] vs rescaled {:.4} [{:.4}, {:.4}]",
            a as f64 / n as f64,
            ca.0,
            ca.1,
            b as f64 / n as f64,
            cb.0,
            cb.1
        ),
    ))
}

fn c8() -> Res<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for lambda in [0.5, 1.0, 2.0] {
        for alpha in [0.5, 1.0] {
            let mut cfg = ScenarioConfig::canonical(1, lambda, alpha, 1000.0);
            cfg.proxy.n_max = 500;
            cfg.proxy.g_max = usize::MAX;
            cfg.seed = 80;
            let rows: Vec<(Verdict, usize)> = (0..1000u64)
                .into_par_iter()
                .map(|rep| {
                    let o = run_scenario(&cfg, rep, RunOptions::proxy_only())?;
                    Ok((o.verdict, o.size()))
                })
                .collect::<Res<_>>()?;
            let survived = rows.iter().filter(|r| r.0.survived()).count();
            let at_cap = rows.iter().filter(|r| r.1 >= 500).count();
            let tail = |n: usize| rows.iter().filter(|r| r.1 > n).count();
            let probe = [1, 10, 50, 100, 250, 499];
            let t: Vec<usize> = probe.iter().map(|&n| tail(n)).collect();
            let decreasing = t.windows(2).all(|w| w[1] <= w[0]) && t[0] > t[t.len() - 1];
            ok &= survived == 0 && at_cap == 0 && decreasing;
            parts.push(format!("(lambda={lambda}, alpha={alpha}: survived {survived}, tail {t:?})"));
        }
    }
    Ok((ok, parts.join(" ")))
}

fn c9() -> Res<Outcome> {
    let mut b = CrossingBisection::new(2, 20.0);
    b.seed = 90;
    let lc = b.run();
    let mut cfg = ScenarioConfig::canonical(2, 2.0 * lc, 1e3, 30.0);
    cfg.seed = 91;
    let hits = (0..1000u64)
        .into_par_iter()
        .map(|rep| Ok(run_scenario(&cfg, rep, RunOptions::proxy_only())?.verdict.survived() as usize))
        .collect::<Res<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();
    let p = proportion(hits, 1000);
    Ok((p.mean > 0.2, format!("lambda_c ~ {lc:.4}, lambda = {:.4}, survival frequency {:.3} +- {:.3}", 2.0 * lc, p.mean, p.stderr)))
}

fn c10() -> Res<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, t) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let base = bm2().dt(1e-3).replicates(4000).points(256);
        let diff = base.clone().seed(1000 + k as u64).difference_sausage_volume_estimate(t)?;
        let doubled = base.seed(2000 + k as u64).sausage_volume_estimate(2.0 * t)?;
        let se = diff.combined_stderr(&doubled);
        ok &= (diff.mean - doubled.mean).abs() <= 2.0 * se;
        parts.push(format!("t={t}: {:.4} vs {:.4} (z {:.2})", diff.mean, doubled.mean, (diff.mean - doubled.mean) / se));
    }
    Ok((ok, parts.join(", ")))
}

fn c11() -> Res<Outcome> {
    let mut hit: f64 = 0.0;
    for &alpha in &C1_ALPHAS {
        for r in c1_mc(alpha).exponential_hitting_refinement(&NORMS, alpha, true)? {
            hit = hit.max(r.shift.mean.abs() / r.coarse.stderr);
        }
    }
    let mut vol: f64 = 0.0;
    for &alpha in &C2_ALPHAS {
        let r = c2_mc(0.1, alpha).exponential_time_volume_refinement(alpha, false)?;
        vol = vol.max(r.shift.mean.abs() / r.coarse.stderr);
    }
    Ok((
        hit.max(vol) < 1.0,
        format!("largest |shift| / SE: hitting {hit:.3}, volume {vol:.3}"),
    ))
}

fn main() {
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').map(|t| t.trim().to_uppercase()).collect());
    let wanted = |id: &str| only.as_ref().is_none_or(|v| v.iter().any(|t| t == id));
    let mut failed = 0;
    let mut report = |id: &str, label: &str, start: Instant, r: Res<Outcome>| {
        let (pass, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += !pass as usize;
        println!(
            "{} {id:<3} {label}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    };
    type Check = fn() -> Res<Outcome>;
    let singles: [(&str, &str, Check); 4] = [
        ("C1", "sausage hitting probability vs Bessel ratio", c1),
        ("C2", "R(inf) Monte Carlo vs closed form", c2),
        ("C3", "percolation and chronological engines coincide", c3),
        ("C6", "monotone couplings in alpha and rho", c6),
    ];
    for (id, label, f) in singles {
        if wanted(id) {
            report(id, label, Instant::now(), f());
        }
    }
    if wanted("C4") || wanted("C5") {
        let start = Instant::now();
        match c4_c5() {
            Ok((a, b)) => {
                report("C4", "subcritical mean size bound", start, Ok(a));
                report("C5", "generation size bound", start, Ok(b));
            }
            Err(e) => {
                let msg = e.to_string();
                report("C4", "subcritical mean size bound", start, Err(Error::InvalidArgument(msg.clone())));
                report("C5", "generation size bound", start, Err(Error::InvalidArgument(msg)));
            }
        }
    }
    let rest: [(&str, &str, Check); 5] = [
        ("C7", "scaling relation", c7),
        ("C8", "one-dimensional extinction", c8),
        ("C9", "instantaneous percolation floor", c9),
        ("C10", "doubled-time identity", c10),
        ("C11", "discretization control", c11),
    ];
    for (id, label, f) in rest {
        if wanted(id) {
            report(id, label, Instant::now(), f());
        }
    }
    println!("acceptance: {failed} failing");
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
