//! Probability that a point is swept by the sausage before an independent
//! exponential time.

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::{Purpose, RngStreamKey};
use crate::stats::Estimate;

use super::hitting::first_hitting_time;
use super::volume::{lifetime, Refinement, SausageMc};

fn target(dim: usize, norm: f64) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    x[0] = norm;
    x
}

impl SausageMc {
    /// `P(x in Sigma_T)`, `T ~ Exp(alpha)`, for points at the given
    /// distances from the start (along the first axis). All distances share
    /// each replicate's path.
    pub fn exponential_hitting_probabilities(&self, norms: &[f64], alpha: f64, bridge: bool) -> Result<Vec<Estimate>> {
        Ok(self
            .hitting_indicators(norms, alpha, bridge, false)?
            .into_iter()
            .map(|r| r.coarse)
            .collect())
    }

    /// Hitting probabilities at step `dt` and on the same paths refined to
    /// `dt / 2`.
    pub fn exponential_hitting_refinement(&self, norms: &[f64], alpha: f64, bridge: bool) -> Result<Vec<Refinement>> {
        self.hitting_indicators(norms, alpha, bridge, true)
    }

    fn hitting_indicators(&self, norms: &[f64], alpha: f64, bridge: bool, refine: bool) -> Result<Vec<Refinement>> {
        let f = self.factory();
        let targets: Vec<Vec<f64>> = norms.iter().map(|&n| target(self.dim, n)).collect();
        let rows: Vec<Vec<(f64, f64)>> = (0..self.replicates as u64)
            .into_par_iter()
            .map(|rep| {
                let t = lifetime(&f, rep, alpha);
                let coarse = self.path(&f, rep, 0, t)?;
                let fine = if refine {
                    Some(coarse.refined(&mut f.stream(RngStreamKey::new(rep, 0, Purpose::Refinement)))?)
                } else {
                    None
                };
                Ok(targets
                    .iter()
                    .enumerate()
                    .map(|(j, x)| {
                        let u = f.random_access(RngStreamKey::new(rep, 0, Purpose::Bridge).with_sub(j as u64));
                        let u = bridge.then_some(&u);
                        let hit = |p| first_hitting_time(p, x, self.radius, t, u).is_some() as u8 as f64;
                        let a = hit(&coarse);
                        (a, fine.as_ref().map_or(a, hit))
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok((0..norms.len())
            .map(|j| {
                let a: Vec<f64> = rows.iter().map(|r| r[j].0).collect();
                let b: Vec<f64> = rows.iter().map(|r| r[j].1).collect();
                let s: Vec<f64> = rows.iter().map(|r| r[j].1 - r[j].0).collect();
                Refinement {
                    coarse: Estimate::from_samples(&a),
                    fine: Estimate::from_samples(&b),
                    shift: Estimate::from_samples(&s),
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use crate::bessel::hitting_probability_2d;
    use crate::diffusion::DiffusionSpec;
    use crate::sausage::SausageMc;

    #[test]
    fn planar_hitting_matches_bessel_ratio_at_coarse_step() {
        let mc = SausageMc::new(2, DiffusionSpec::StandardBrownian).replicates(3000).seed(6).dt(1e-3);
        let est = mc.exponential_hitting_probabilities(&[2.0], 1.0, true).unwrap();
        let exact = hitting_probability_2d(2.0, 1.0).unwrap();
        assert!((est[0].mean - exact).abs() < 3.0 * est[0].stderr, "{:?} vs {exact}", est[0]);
    }

    #[test]
    fn inside_points_are_always_hit() {
        let mc = SausageMc::new(2, DiffusionSpec::StandardBrownian).replicates(50).seed(7).dt(1e-2);
        let est = mc.exponential_hitting_probabilities(&[0.5, 1.0], 3.0, false).unwrap();
        assert!(est.iter().all(|e| e.mean == 1.0));
    }
}
