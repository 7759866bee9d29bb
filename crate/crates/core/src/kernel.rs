//! Infection kernels `mu`.

use serde::{Deserialize, Serialize};

use crate::error::ConfigViolation;

/// Volume of the closed `radius`-ball in `d` dimensions.
pub fn ball_volume(d: usize, radius: f64) -> f64 {
    unit_ball_volume(d) * radius.powi(d as i32)
}

fn unit_ball_volume(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

/// Gaussian kernels are cut off where they fall below this fraction of
/// their peak; contact searches ignore targets beyond the cutoff.
pub const GAUSSIAN_CUTOFF: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    UnitBallIndicator,
    BallIndicator {
        radius: f64,
    },
    /// `exp(-|x|^2 / (2 scale^2))`.
    GaussianRadial {
        scale: f64,
    },
    /// Piecewise-linear radial profile through `(radii[k], values[k])`,
    /// constant at `values[0]` inside `radii[0]` and zero beyond the last
    /// radius.
    RadialTable {
        radii: Vec<f64>,
        values: Vec<f64>,
        mu_max: f64,
        #[serde(default)]
        radially_decreasing: bool,
    },
}

impl KernelSpec {
    pub fn ball(radius: f64) -> Self {
        KernelSpec::BallIndicator { radius }
    }

    /// Radius of the ball when the kernel is the indicator of a closed ball.
    pub fn indicator_radius(&self) -> Option<f64> {
        match self {
            KernelSpec::UnitBallIndicator => Some(1.0),
            KernelSpec::BallIndicator { radius } => Some(*radius),
            _ => None,
        }
    }

    pub fn mu_max(&self) -> f64 {
        match self {
            KernelSpec::UnitBallIndicator | KernelSpec::BallIndicator { .. } => 1.0,
            KernelSpec::GaussianRadial { .. } => 1.0,
            KernelSpec::RadialTable { mu_max, .. } => *mu_max,
        }
    }

    /// Distance beyond which the kernel vanishes (or is below
    /// [`GAUSSIAN_CUTOFF`] for the Gaussian).
    pub fn support_radius(&self) -> f64 {
        match self {
            KernelSpec::UnitBallIndicator => 1.0,
            KernelSpec::BallIndicator { radius } => *radius,
            KernelSpec::GaussianRadial { scale } => scale * (-2.0 * GAUSSIAN_CUTOFF.ln()).sqrt(),
            KernelSpec::RadialTable { radii, .. } => radii.last().copied().unwrap_or(0.0),
        }
    }

    /// `mu_r(x) = mu(x / r)`.
    pub fn scaled(&self, r: f64) -> Self {
        match self {
            KernelSpec::UnitBallIndicator => KernelSpec::BallIndicator { radius: r },
            KernelSpec::BallIndicator { radius } => KernelSpec::BallIndicator { radius: radius * r },
            KernelSpec::GaussianRadial { scale } => KernelSpec::GaussianRadial { scale: scale * r },
            KernelSpec::RadialTable {
                radii,
                values,
                mu_max,
                radially_decreasing,
            } => KernelSpec::RadialTable {
                radii: radii.iter().map(|x| x * r).collect(),
                values: values.clone(),
                mu_max: *mu_max,
                radially_decreasing: *radially_decreasing,
            },
        }
    }

    #[inline]
    pub fn eval_sq(&self, norm_sq: f64) -> f64 {
        match self {
            KernelSpec::UnitBallIndicator => (norm_sq <= 1.0) as u8 as f64,
            KernelSpec::BallIndicator { radius } => (norm_sq <= radius * radius) as u8 as f64,
            KernelSpec::GaussianRadial { scale } => (-norm_sq / (2.0 * scale * scale)).exp(),
            KernelSpec::RadialTable { radii, values, .. } => table_value(radii, values, norm_sq.sqrt()),
        }
    }

    pub fn validate(&self, field: &str, out: &mut Vec<ConfigViolation>) {
        let mut bad = |m: &str| out.push(ConfigViolation::new(field, m));
        match self {
            KernelSpec::UnitBallIndicator => {}
            KernelSpec::BallIndicator { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    bad("ball radius must be positive and finite");
                }
            }
            KernelSpec::GaussianRadial { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    bad("gaussian scale must be positive and finite");
                }
            }
            KernelSpec::RadialTable {
                radii,
                values,
                mu_max,
                radially_decreasing,
            } => {
                if radii.is_empty() || radii.len() != values.len() {
                    bad("radial table needs equally many radii and values (at least one)");
                    return;
                }
                if radii[0] < 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
                    bad("radial table radii must be nonnegative and strictly increasing");
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    bad("kernel values must be finite and nonnegative");
                }
                let peak = values.iter().cloned().fold(0.0, f64::max);
                if !(mu_max.is_finite() && *mu_max >= peak) {
                    bad("mu_max must be finite and bound every table value");
                }
                if *radially_decreasing && values.windows(2).any(|w| w[1] > w[0]) {
                    bad("radially decreasing table must have non-increasing values");
                }
                if peak <= 0.0 || radii.last().copied().unwrap_or(0.0) <= 0.0 {
                    bad("kernel mass must be positive");
                }
            }
        }
    }
}

fn table_value(radii: &[f64], values: &[f64], r: f64) -> f64 {
    if r <= radii[0] {
        return values[0];
    }
    let last = radii.len() - 1;
    if r > radii[last] {
        return 0.0;
    }
    // first index with radii[k] >= r
    let k = radii.partition_point(|&x| x < r);
    let (r0, r1) = (radii[k - 1], radii[k]);
    let (v0, v1) = (values[k - 1], values[k]);
    v0 + (v1 - v0) * (r - r0) / (r1 - r0)
}

/// `mu(x)`; indicators use the closed ball, so the boundary counts as inside.
pub fn kernel_eval(k: &KernelSpec, x: &[f64]) -> f64 {
    k.eval_sq(x.iter().map(|v| v * v).sum())
}

/// The kernel's integral over `R^d`.
pub fn kernel_mass(k: &KernelSpec, d: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        KernelSpec::UnitBallIndicator => ball_volume(d, 1.0),
        KernelSpec::BallIndicator { radius } => ball_volume(d, *radius),
        KernelSpec::GaussianRadial { scale } => (2.0 * PI * scale * scale).powf(d as f64 / 2.0),
        KernelSpec::RadialTable { radii, values, .. } => {
            // |S^{d-1}| * int mu(r) r^{d-1} dr, exact for the piecewise-linear profile
            let surface = d as f64 * ball_volume(d, 1.0);
            let p = d as i32;
            let mut total = values[0] * radii[0].powi(p) / d as f64;
            for k in 1..radii.len() {
                let (a, b) = (radii[k - 1], radii[k]);
                let slope = (values[k] - values[k - 1]) / (b - a);
                let c0 = values[k - 1] - slope * a;
                total += c0 * (b.powi(p) - a.powi(p)) / d as f64
                    + slope * (b.powi(p + 1) - a.powi(p + 1)) / (d as f64 + 1.0);
            }
            surface * total
        }
    }
}
