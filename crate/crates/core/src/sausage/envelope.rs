//! Exponential envelopes `E|Sigma_t| <= gamma exp(sigma t)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::stats::Estimate;

use super::SausageMc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub gamma: f64,
    pub sigma: f64,
    pub times: Vec<f64>,
    pub estimates: Vec<Estimate>,
}

impl GrowthFit {
    pub fn envelope(&self, t: f64) -> f64 {
        self.gamma * (self.sigma * t).exp()
    }

    /// Whether the envelope lies above every estimate plus `k` standard
    /// errors.
    pub fn dominates(&self, k: f64) -> bool {
        self.times
            .iter()
            .zip(&self.estimates)
            .all(|(&t, e)| self.envelope(t) >= e.mean + k * e.stderr)
    }
}

/// Least-squares fit of `log E|Sigma_t|` against `t` (slope clipped at 0),
/// then `gamma` raised until the envelope covers each estimate plus two
/// standard errors.
pub fn fit_growth_envelope(times: &[f64], estimates: &[Estimate]) -> Result<GrowthFit> {
    if times.is_empty() || times.len() != estimates.len() {
        return Err(invalid("growth fit needs a nonempty grid with one estimate per time"));
    }
    if estimates.iter().any(|e| !(e.mean > 0.0)) {
        return Err(invalid("growth fit needs positive volume estimates"));
    }
    let n = times.len() as f64;
    let ys: Vec<f64> = estimates.iter().map(|e| e.mean.ln()).collect();
    let tm = times.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = times.iter().map(|t| (t - tm) * (t - tm)).sum();
    let sxy: f64 = times.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sigma = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
    let fitted = (ym - sigma * tm).exp();
    let needed = times
        .iter()
        .zip(estimates)
        .map(|(&t, e)| (e.mean + 2.0 * e.stderr) * (-sigma * t).exp())
        .fold(0.0, f64::max);
    Ok(GrowthFit {
        // The factor absorbs rounding in exp(-sigma t) exp(sigma t).
        gamma: fitted.max(needed) * (1.0 + 1e-12),
        sigma,
        times: times.to_vec(),
        estimates: estimates.to_vec(),
    })
}

impl SausageMc {
    /// Envelope for the sausage (or difference sausage) volume on `times`.
    pub fn fit_growth_envelope(&self, times: &[f64], difference: bool) -> Result<GrowthFit> {
        let est = self.volume_profile(times, difference)?;
        fit_growth_envelope(times, &est)
    }
}
