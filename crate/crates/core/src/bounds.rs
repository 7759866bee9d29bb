//! Reproduction-number bounds and extinction certificates.
//!
//! Every function returns a [`BoundReport`]. A report certifies extinction
//! only when `value + 3 * stderr < 1`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bessel::z_alpha;
use crate::config::ModelKind;
use crate::diffusion::DiffusionSpec;
use crate::error::{invalid, Result};
use crate::kernel::{ball_volume, kernel_mass, KernelSpec};
use crate::rng::{Purpose, RngStreamKey};
use crate::sausage::{dilated_bbox, kernel_exposure, lifetime, uniform_points, volume_of_box, GrowthFit, SausageMc};
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    ClosedFormBessel,
    CrudeKernelBound,
    MonteCarloIntegral,
    BoundedMotion,
    GrowthEnvelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    ExtinctionCertified,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub model: ModelKind,
    pub method: BoundMethod,
    pub value: f64,
    pub stderr: f64,
    pub certificate: Certificate,
    pub inputs: BTreeMap<String, Value>,
}

impl BoundReport {
    fn new(model: ModelKind, method: BoundMethod, est: Estimate, inputs: Value) -> Self {
        let certificate = if est.mean + 3.0 * est.stderr < 1.0 {
            Certificate::ExtinctionCertified
        } else {
            Certificate::Inconclusive
        };
        let inputs = match inputs {
            Value::Object(m) => m.into_iter().collect(),
            _ => BTreeMap::new(),
        };
        Self {
            model,
            method,
            value: est.mean,
            stderr: est.stderr,
            certificate,
            inputs,
        }
    }

    pub fn certified(&self) -> bool {
        self.certificate == Certificate::ExtinctionCertified
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.value,
            stderr: self.stderr,
            n: 0,
        }
    }
}

fn check_rate(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

/// `lambda * rho * iota(mu) / alpha`, the bound that ignores the motion.
pub fn crude_bound_delayed(lambda: f64, rho: f64, kernel: &KernelSpec, d: usize, alpha: f64) -> Result<BoundReport> {
    check_rate("lambda", lambda)?;
    check_rate("rho", rho)?;
    check_rate("alpha", alpha)?;
    let iota = kernel_mass(kernel, d);
    Ok(BoundReport::new(
        ModelKind::Delayed,
        BoundMethod::CrudeKernelBound,
        Estimate::exact(lambda * rho * iota / alpha),
        json!({"lambda": lambda, "rho": rho, "alpha": alpha, "d": d, "kernel_mass": iota}),
    ))
}

/// `lambda * Z_alpha`: delayed model, planar Brownian motion, unit disc.
pub fn r_infinity_closed_form_2d(lambda: f64, alpha: f64) -> Result<BoundReport> {
    check_rate("lambda", lambda)?;
    Ok(BoundReport::new(
        ModelKind::Delayed,
        BoundMethod::ClosedFormBessel,
        Estimate::exact(lambda * z_alpha(alpha)?),
        json!({"lambda": lambda, "alpha": alpha, "d": 2}),
    ))
}

/// [`r_infinity_closed_form_2d`] after checking that the setting is the one
/// the closed form covers.
pub fn r_infinity_closed_form(
    model: ModelKind,
    diffusion: &DiffusionSpec,
    kernel: &KernelSpec,
    d: usize,
    lambda: f64,
    alpha: f64,
) -> Result<BoundReport> {
    if d != 2 || model != ModelKind::Delayed {
        return Err(invalid("the closed form needs the delayed model in d = 2"));
    }
    if *diffusion != DiffusionSpec::StandardBrownian || kernel.indicator_radius() != Some(1.0) {
        return Err(invalid("the closed form needs standard Brownian motion and the unit disc"));
    }
    r_infinity_closed_form_2d(lambda, alpha)
}

/// `lambda * E|Sigma_T|` with `T ~ Exp(alpha)`; the diffusion model uses
/// the sausage of `zeta - zeta'`. Motion, dimension, radius and Monte Carlo
/// sizes come from `mc`.
pub fn r_infinity_mc(model: ModelKind, mc: &SausageMc, lambda: f64, alpha: f64) -> Result<BoundReport> {
    check_rate("lambda", lambda)?;
    check_rate("alpha", alpha)?;
    let vol = mc.exponential_time_volume(alpha, model == ModelKind::Diffusion)?;
    Ok(BoundReport::new(
        model,
        BoundMethod::MonteCarloIntegral,
        vol.scale(lambda),
        mc_inputs(mc, lambda, alpha, None),
    ))
}

fn mc_inputs(mc: &SausageMc, lambda: f64, alpha: f64, rho: Option<f64>) -> Value {
    json!({
        "lambda": lambda,
        "alpha": alpha,
        "rho": rho.map_or(json!("inf"), |r| json!(r)),
        "d": mc.dim,
        "diffusion": mc.diffusion.label(),
        "radius": mc.radius,
        "dt": mc.dt,
        "replicates": mc.replicates,
        "points": mc.points,
        "seed": mc.seed,
    })
}

/// `lambda * E int (1 - exp(-rho int_0^T mu(x - zeta(s)) ds)) dx` with
/// `T ~ Exp(alpha)`, the spatial integral by hit-or-miss over the path's
/// bounding box dilated by the kernel support. `mc.radius` is ignored.
pub fn r_rho_mc(
    model: ModelKind,
    mc: &SausageMc,
    kernel: &KernelSpec,
    lambda: f64,
    rho: f64,
    alpha: f64,
) -> Result<BoundReport> {
    check_rate("lambda", lambda)?;
    check_rate("rho", rho)?;
    check_rate("alpha", alpha)?;
    let f = mc.factory();
    let reach = kernel.support_radius();
    let d = mc.dim;
    let vols: Vec<f64> = (0..mc.replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let t = lifetime(&f, rep, alpha);
            let p = mc.motion(&f, rep, model == ModelKind::Diffusion, t)?;
            let (lo, hi) = dilated_bbox(&p, p.steps(), reach);
            let mut rng = f.stream(RngStreamKey::new(rep, 0, Purpose::Sampling));
            let pts = uniform_points(&lo, &hi, mc.points, &mut rng);
            let sum: f64 = pts
                .chunks_exact(d)
                .map(|x| -(-rho * kernel_exposure(&p, x, kernel, t)).exp_m1())
                .sum();
            Ok(volume_of_box(&lo, &hi) * sum / mc.points as f64)
        })
        .collect::<Result<_>>()?;
    let mut inputs = mc_inputs(mc, lambda, alpha, Some(rho));
    inputs["kernel"] = serde_json::to_value(kernel).unwrap_or(Value::Null);
    Ok(BoundReport::new(model, BoundMethod::MonteCarloIntegral, Estimate::from_samples(&vols).scale(lambda), inputs))
}

/// Motion confined to a `cap`-ball: `lambda |S(cap + radius)|`, or
/// `lambda |S(2 (cap + radius))|` for the diffusion model where both
/// particles move.
pub fn bounded_motion_bound(model: ModelKind, d: usize, lambda: f64, cap: f64, radius: f64) -> Result<BoundReport> {
    check_rate("lambda", lambda)?;
    if !(cap >= 0.0 && radius > 0.0) {
        return Err(invalid("motion cap must be non-negative and the radius positive"));
    }
    let reach = match model {
        ModelKind::Delayed => cap + radius,
        ModelKind::Diffusion => 2.0 * (cap + radius),
    };
    Ok(BoundReport::new(
        model,
        BoundMethod::BoundedMotion,
        Estimate::exact(lambda * ball_volume(d, reach)),
        json!({"lambda": lambda, "d": d, "cap": cap, "radius": radius}),
    ))
}

/// From `E|Sigma_t| <= gamma e^{sigma t}`: `R <= lambda alpha gamma /
/// (alpha - sigma)`, certified iff `lambda gamma < 1` and
/// `alpha > sigma / (1 - lambda gamma)`.
///
/// The envelope already sits two standard errors above the data it was
/// fitted to, so the report carries no further error.
pub fn growth_envelope_certificate(model: ModelKind, lambda: f64, alpha: f64, fit: &GrowthFit) -> Result<BoundReport> {
    check_rate("lambda", lambda)?;
    check_rate("alpha", alpha)?;
    let (g, s) = (fit.gamma, fit.sigma);
    let value = if alpha > s { lambda * alpha * g / (alpha - s) } else { f64::INFINITY };
    let mut r = BoundReport::new(
        model,
        BoundMethod::GrowthEnvelope,
        Estimate::exact(value),
        json!({"lambda": lambda, "alpha": alpha, "gamma": g, "sigma": s}),
    );
    let lg = lambda * g;
    if !(lg < 1.0 && alpha > s / (1.0 - lg)) {
        r.certificate = Certificate::Inconclusive;
    }
    Ok(r)
}

/// Smallest `alpha` the envelope certifies, `sigma / (1 - lambda gamma)`,
/// or `None` when `lambda gamma >= 1`.
pub fn envelope_alpha_threshold(lambda: f64, fit: &GrowthFit) -> Option<f64> {
    let lg = lambda * fit.gamma;
    (lg < 1.0).then(|| fit.sigma / (1.0 - lg))
}
