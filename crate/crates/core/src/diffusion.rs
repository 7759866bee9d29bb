//! Diffusion laws `d zeta = a(zeta) dt + sigma(zeta) dW`, `zeta(0) = 0`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::ConfigViolation;
use crate::rng::Stream;

/// `f(x, out)` writes a vector (drift) or a row-major `d x d` matrix (sigma).
pub type Field = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// General SDE with user-supplied coefficient closures. Coefficients are
/// assumed locally Lipschitz; nothing checks this.
#[derive(Clone)]
pub struct CustomSde {
    pub label: String,
    pub drift: Field,
    pub sigma: Field,
}

impl fmt::Debug for CustomSde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSde").field("label", &self.label).finish_non_exhaustive()
    }
}

impl PartialEq for CustomSde {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.drift, &other.drift) && Arc::ptr_eq(&self.sigma, &other.sigma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffusionSpec {
    StandardBrownian,
    BrownianWithDrift {
        drift: Vec<f64>,
    },
    /// `d zeta = A zeta dt + dW`.
    OrnsteinUhlenbeck {
        matrix: Vec<Vec<f64>>,
    },
    /// General SDE with affine drift `offset + matrix x` and constant
    /// diffusion matrix; the file-representable general case.
    Linear {
        drift_offset: Vec<f64>,
        drift_matrix: Vec<Vec<f64>>,
        sigma: Vec<Vec<f64>>,
    },
    #[serde(skip)]
    Custom(CustomSde),
}

fn zeros(d: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; d]; d]
}

fn identity(d: usize) -> Vec<Vec<f64>> {
    let mut m = zeros(d);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

impl DiffusionSpec {
    /// `a = 0`, `sigma = 0`: particles never move.
    pub fn zero_motion(d: usize) -> Self {
        DiffusionSpec::Linear {
            drift_offset: vec![0.0; d],
            drift_matrix: zeros(d),
            sigma: zeros(d),
        }
    }

    /// Standard Brownian motion written as a general SDE (stepped by
    /// Euler-Maruyama rather than exact increments).
    pub fn brownian_as_sde(d: usize) -> Self {
        DiffusionSpec::Linear {
            drift_offset: vec![0.0; d],
            drift_matrix: zeros(d),
            sigma: identity(d),
        }
    }

    pub fn ou_isotropic(d: usize, rate: f64) -> Self {
        let mut m = identity(d);
        m.iter_mut().enumerate().for_each(|(i, row)| row[i] = -rate);
        DiffusionSpec::OrnsteinUhlenbeck { matrix: m }
    }

    pub fn custom(
        label: impl Into<String>,
        drift: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        sigma: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        DiffusionSpec::Custom(CustomSde {
            label: label.into(),
            drift: Arc::new(drift),
            sigma: Arc::new(sigma),
        })
    }

    pub fn label(&self) -> String {
        match self {
            DiffusionSpec::StandardBrownian => "brownian".into(),
            DiffusionSpec::BrownianWithDrift { .. } => "brownian_drift".into(),
            DiffusionSpec::OrnsteinUhlenbeck { .. } => "ornstein_uhlenbeck".into(),
            DiffusionSpec::Linear { .. } => "linear_sde".into(),
            DiffusionSpec::Custom(c) => c.label.clone(),
        }
    }

    /// Brownian motion with constant drift: increments are sampled exactly
    /// and paths can be refined by bridge midpoints.
    pub fn has_exact_increments(&self) -> bool {
        matches!(
            self,
            DiffusionSpec::StandardBrownian | DiffusionSpec::BrownianWithDrift { .. }
        )
    }

    /// Per-coordinate variance rate when it does not depend on position.
    pub fn constant_variance_rate(&self, d: usize) -> Option<f64> {
        match self {
            DiffusionSpec::StandardBrownian
            | DiffusionSpec::BrownianWithDrift { .. }
            | DiffusionSpec::OrnsteinUhlenbeck { .. } => Some(1.0),
            DiffusionSpec::Linear { sigma, .. } => {
                Some(sigma.iter().flatten().map(|s| s * s).sum::<f64>() / d as f64)
            }
            DiffusionSpec::Custom(_) => None,
        }
    }

    /// Per-coordinate variance rate `|sigma(x)|_F^2 / d` at `x`.
    pub fn variance_rate_at(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        let d = x.len();
        match self {
            DiffusionSpec::Custom(c) => {
                scratch.resize(d * d, 0.0);
                (c.sigma)(x, scratch);
                scratch.iter().map(|s| s * s).sum::<f64>() / d as f64
            }
            _ => self.constant_variance_rate(d).unwrap_or(1.0),
        }
    }

    pub fn validate(&self, d: usize, field: &str, out: &mut Vec<ConfigViolation>) {
        let square = |m: &Vec<Vec<f64>>| m.len() == d && m.iter().all(|r| r.len() == d);
        fn finite<'a>(mut xs: impl Iterator<Item = &'a f64>) -> bool {
            xs.all(|x| x.is_finite())
        }
        match self {
            DiffusionSpec::StandardBrownian | DiffusionSpec::Custom(_) => {}
            DiffusionSpec::BrownianWithDrift { drift } => {
                if drift.len() != d || !finite(drift.iter()) {
                    out.push(ConfigViolation::new(
                        format!("{field}.drift"),
                        format!("drift must be a finite vector of length {d}"),
                    ));
                }
            }
            DiffusionSpec::OrnsteinUhlenbeck { matrix } => {
                if !square(matrix) || !finite(matrix.iter().flatten()) {
                    out.push(ConfigViolation::new(
                        format!("{field}.matrix"),
                        format!("OU matrix must be a finite {d}x{d} matrix"),
                    ));
                }
            }
            DiffusionSpec::Linear {
                drift_offset,
                drift_matrix,
                sigma,
            } => {
                if drift_offset.len() != d || !finite(drift_offset.iter()) {
                    out.push(ConfigViolation::new(
                        format!("{field}.drift_offset"),
                        format!("must be a finite vector of length {d}"),
                    ));
                }
                for (name, m) in [("drift_matrix", drift_matrix), ("sigma", sigma)] {
                    if !square(m) || !finite(m.iter().flatten()) {
                        out.push(ConfigViolation::new(
                            format!("{field}.{name}"),
                            format!("must be a finite {d}x{d} matrix"),
                        ));
                    }
                }
            }
        }
    }

    pub fn stepper(&self, d: usize, dt: f64, rng: Stream) -> PathStepper {
        PathStepper {
            spec: self.clone(),
            dim: d,
            dt,
            sqrt_dt: dt.sqrt(),
            rng,
            z: vec![0.0; d],
            a: vec![0.0; d],
            s: vec![0.0; d * d],
        }
    }
}

/// One Euler-Maruyama (or exact Brownian) step at a time.
#[derive(Debug, Clone)]
pub struct PathStepper {
    spec: DiffusionSpec,
    dim: usize,
    dt: f64,
    sqrt_dt: f64,
    rng: Stream,
    z: Vec<f64>,
    a: Vec<f64>,
    s: Vec<f64>,
}

fn mat_vec(m: &[Vec<f64>], x: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

impl PathStepper {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn spec(&self) -> &DiffusionSpec {
        &self.spec
    }

    /// Advances `x` by one step into `out`.
    pub fn step(&mut self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for zi in self.z.iter_mut() {
            *zi = self.rng.sample(StandardNormal);
        }
        match &self.spec {
            DiffusionSpec::StandardBrownian => {
                for i in 0..d {
                    out[i] = x[i] + self.sqrt_dt * self.z[i];
                }
            }
            DiffusionSpec::BrownianWithDrift { drift } => {
                for i in 0..d {
                    out[i] = x[i] + drift[i] * self.dt + self.sqrt_dt * self.z[i];
                }
            }
            DiffusionSpec::OrnsteinUhlenbeck { matrix } => {
                mat_vec(matrix, x, &mut self.a);
                for i in 0..d {
                    out[i] = x[i] + self.a[i] * self.dt + self.sqrt_dt * self.z[i];
                }
            }
            DiffusionSpec::Linear {
                drift_offset,
                drift_matrix,
                sigma,
            } => {
                mat_vec(drift_matrix, x, &mut self.a);
                for i in 0..d {
                    let noise: f64 = sigma[i].iter().zip(&self.z).map(|(s, z)| s * z).sum();
                    out[i] = x[i] + (drift_offset[i] + self.a[i]) * self.dt + self.sqrt_dt * noise;
                }
            }
            DiffusionSpec::Custom(c) => {
                (c.drift)(x, &mut self.a);
                (c.sigma)(x, &mut self.s);
                for i in 0..d {
                    let row = &self.s[i * d..(i + 1) * d];
                    let noise: f64 = row.iter().zip(&self.z).map(|(s, z)| s * z).sum();
                    out[i] = x[i] + self.a[i] * self.dt + self.sqrt_dt * noise;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_round_trip_of_file_variants() {
        let specs = [
            DiffusionSpec::StandardBrownian,
            DiffusionSpec::BrownianWithDrift { drift: vec![1.0, 0.0] },
            DiffusionSpec::ou_isotropic(2, 1.0),
            DiffusionSpec::zero_motion(2),
        ];
        for s in specs {
            let text = serde_json::to_string(&s).unwrap();
            let back: DiffusionSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(s, back);
        }
        let v: DiffusionSpec = serde_json::from_str(r#"{"kind":"standard_brownian"}"#).unwrap();
        assert_eq!(v, DiffusionSpec::StandardBrownian);
    }

    #[test]
    fn custom_cannot_be_serialized() {
        let c = DiffusionSpec::custom("x", |_, a| a.fill(0.0), |_, s| s.fill(0.0));
        assert!(serde_json::to_string(&c).is_err());
    }

    #[test]
    fn dimension_mismatch_reported() {
        let mut v = Vec::new();
        DiffusionSpec::BrownianWithDrift { drift: vec![1.0] }.validate(2, "diffusion", &mut v);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "diffusion.drift");
    }
}
