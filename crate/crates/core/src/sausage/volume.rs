//! Hit-or-miss estimates of mean sausage volumes.

use rand::Rng;
use rayon::prelude::*;

use crate::diffusion::DiffusionSpec;
use crate::error::Result;
use crate::geometry::{box_dist2, dist2};
use crate::kernel::ball_volume;
use crate::path::DiscretizedPath;
use crate::rng::{Purpose, RngStreamKey, Stream, StreamFactory};
use crate::sampling::sample_lifetime;
use crate::stats::{Accumulator, Estimate};

use super::hitting::BRIDGE_MARGIN_SQ;

/// Monte Carlo settings shared by the sausage estimators.
#[derive(Debug, Clone)]
pub struct SausageMc {
    pub dim: usize,
    pub diffusion: DiffusionSpec,
    pub radius: f64,
    pub dt: f64,
    /// Uniform points per path for the hit-or-miss volume.
    pub points: usize,
    pub replicates: usize,
    pub seed: u64,
    pub max_steps: usize,
    /// Count between-sample crossings through the Brownian-bridge
    /// approximation (see [`bridged_profile`]) instead of covering by
    /// samples only.
    pub bridge: bool,
}

impl SausageMc {
    pub fn new(dim: usize, diffusion: DiffusionSpec) -> Self {
        Self {
            dim,
            diffusion,
            radius: 1.0,
            dt: 1e-3,
            points: 256,
            replicates: 1000,
            seed: 0,
            max_steps: 1 << 26,
            bridge: true,
        }
    }

    pub fn bridge(mut self, on: bool) -> Self {
        self.bridge = on;
        self
    }

    /// Volumes up to each sample index in `upto`, by the estimator this
    /// configuration selects.
    pub(crate) fn profile(&self, path: &DiscretizedPath, upto: &[usize], rng: &mut Stream) -> Vec<f64> {
        if self.bridge {
            bridged_profile(path, self.radius, upto, self.points, rng)
        } else {
            hit_or_miss_profile(path, self.radius, upto, self.points, rng)
        }
    }

    pub fn replicates(mut self, n: usize) -> Self {
        self.replicates = n;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn points(mut self, n: usize) -> Self {
        self.points = n;
        self
    }

    pub fn radius(mut self, r: f64) -> Self {
        self.radius = r;
        self
    }

    pub(crate) fn factory(&self) -> StreamFactory {
        StreamFactory::new(self.seed)
    }

    /// Path `which` of replicate `rep`, extended to `t`.
    pub(crate) fn path(&self, f: &StreamFactory, rep: u64, which: u64, t: f64) -> Result<DiscretizedPath> {
        let rng = f.stream(RngStreamKey::new(rep, which, Purpose::Path));
        let mut p = DiscretizedPath::new(&self.diffusion, self.dim, self.dt, 0.0, rng, self.max_steps);
        p.extend_to(t)?;
        Ok(p)
    }

    /// `zeta` or, for the difference sausage, `zeta - zeta'`.
    pub(crate) fn motion(&self, f: &StreamFactory, rep: u64, difference: bool, t: f64) -> Result<DiscretizedPath> {
        let a = self.path(f, rep, 0, t)?;
        if difference {
            let b = self.path(f, rep, 1, t)?;
            DiscretizedPath::difference(&a, &b)
        } else {
            Ok(a)
        }
    }

    /// Mean volume of the sausage up to each time in `times`, all times
    /// sharing the same paths and sample points (so the profile is
    /// non-decreasing in `t` replicate by replicate).
    pub fn volume_profile(&self, times: &[f64], difference: bool) -> Result<Vec<Estimate>> {
        let f = self.factory();
        let t_max = times.iter().copied().fold(0.0, f64::max);
        let per_rep: Vec<Vec<f64>> = (0..self.replicates as u64)
            .into_par_iter()
            .map(|rep| {
                let p = self.motion(&f, rep, difference, t_max)?;
                let upto: Vec<usize> = times.iter().map(|&t| steps_within(t, self.dt)).collect();
                let mut rng = f.stream(RngStreamKey::new(rep, 0, Purpose::Sampling));
                Ok(self.profile(&p, &upto, &mut rng))
            })
            .collect::<Result<_>>()?;
        Ok((0..times.len())
            .map(|j| {
                let mut acc = Accumulator::default();
                per_rep.iter().for_each(|v| acc.push(v[j]));
                acc.estimate()
            })
            .collect())
    }

    /// `E|Sigma_t|`.
    pub fn sausage_volume_estimate(&self, t: f64) -> Result<Estimate> {
        Ok(self.volume_profile(&[t], false)?[0])
    }

    /// `E|Sigma'_t|` for the sausage of `zeta - zeta'`.
    pub fn difference_sausage_volume_estimate(&self, t: f64) -> Result<Estimate> {
        Ok(self.volume_profile(&[t], true)?[0])
    }

    /// `E|Sigma_T|` with `T ~ Exp(alpha)` independent of the motion.
    pub fn exponential_time_volume(&self, alpha: f64, difference: bool) -> Result<Estimate> {
        let f = self.factory();
        let vols: Vec<f64> = (0..self.replicates as u64)
            .into_par_iter()
            .map(|rep| {
                let t = lifetime(&f, rep, alpha);
                let p = self.motion(&f, rep, difference, t)?;
                let mut rng = f.stream(RngStreamKey::new(rep, 0, Purpose::Sampling));
                Ok(self.profile(&p, &[steps_within(t, self.dt)], &mut rng)[0])
            })
            .collect::<Result<_>>()?;
        Ok(Estimate::from_samples(&vols))
    }

    /// [`Self::exponential_time_volume`] at step `dt` and, on the same
    /// paths refined by Brownian-bridge midpoints and the same sample
    /// points, at step `dt / 2`.
    pub fn exponential_time_volume_refinement(&self, alpha: f64, difference: bool) -> Result<Refinement> {
        let f = self.factory();
        let pairs: Vec<(f64, f64)> = (0..self.replicates as u64)
            .into_par_iter()
            .map(|rep| {
                let t = lifetime(&f, rep, alpha);
                let refine = |which: u64| -> Result<(DiscretizedPath, DiscretizedPath)> {
                    let p = self.path(&f, rep, which, t)?;
                    let q = p.refined(&mut f.stream(RngStreamKey::new(rep, which, Purpose::Refinement)))?;
                    Ok((p, q))
                };
                let (coarse, fine) = if difference {
                    let ((a, a2), (b, b2)) = (refine(0)?, refine(1)?);
                    (DiscretizedPath::difference(&a, &b)?, DiscretizedPath::difference(&a2, &b2)?)
                } else {
                    refine(0)?
                };
                let k_coarse = steps_within(t, self.dt);
                let k_fine = steps_within(t, self.dt / 2.0);
                let margin = if self.bridge { bridge_margin(&coarse).max(bridge_margin(&fine)) } else { 0.0 };
                let (lo, hi) = dilated_bbox(&coarse, k_coarse, self.radius + margin);
                let (lo2, hi2) = dilated_bbox(&fine, k_fine, self.radius + margin);
                let lo: Vec<f64> = lo.iter().zip(&lo2).map(|(a, b)| a.min(*b)).collect();
                let hi: Vec<f64> = hi.iter().zip(&hi2).map(|(a, b)| a.max(*b)).collect();
                let mut rng = f.stream(RngStreamKey::new(rep, 0, Purpose::Sampling));
                let pts = uniform_points(&lo, &hi, self.points, &mut rng);
                let vol = volume_of_box(&lo, &hi);
                let frac = |p: &DiscretizedPath, k: usize| {
                    let r2 = self.radius * self.radius;
                    let covered: f64 = pts
                        .chunks_exact(self.dim)
                        .map(|x| {
                            if self.bridge {
                                bridge_coverage(p, x, self.radius, &[k])[0]
                            } else {
                                first_covering_index(p, x, r2, k).is_some() as u8 as f64
                            }
                        })
                        .sum();
                    vol * covered / self.points as f64
                };
                let (c, fi) = if self.dim == 1 {
                    (exact_interval_length(&coarse, k_coarse, self.radius), exact_interval_length(&fine, k_fine, self.radius))
                } else {
                    (frac(&coarse, k_coarse), frac(&fine, k_fine))
                };
                Ok((c, fi))
            })
            .collect::<Result<_>>()?;
        let coarse: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let fine: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let shift: Vec<f64> = pairs.iter().map(|p| p.1 - p.0).collect();
        Ok(Refinement {
            coarse: Estimate::from_samples(&coarse),
            fine: Estimate::from_samples(&fine),
            shift: Estimate::from_samples(&shift),
        })
    }
}

/// Paired estimates at step `dt` and `dt / 2` on coupled paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub coarse: Estimate,
    pub fine: Estimate,
    /// Replicate-wise `fine - coarse`.
    pub shift: Estimate,
}

pub(crate) fn lifetime(f: &StreamFactory, rep: u64, alpha: f64) -> f64 {
    sample_lifetime(alpha, &mut f.stream(RngStreamKey::new(rep, 0, Purpose::Lifetime)))
}

/// Index of the last grid sample at or before `t`.
pub(crate) fn steps_within(t: f64, dt: f64) -> usize {
    (t / dt + 1e-9).floor() as usize
}

/// First sample index `k <= upto` with `|x - zeta_k| <= r`.
pub(crate) fn first_covering_index(path: &DiscretizedPath, x: &[f64], r2: f64, upto: usize) -> Option<usize> {
    for c in 0..path.chunk_count() {
        let (start, end) = path.chunk_range(c);
        if start > upto {
            break;
        }
        let (lo, hi) = path.chunk_box(c);
        if box_dist2(x, lo, hi) > r2 {
            continue;
        }
        if let Some(k) = (start..=end.min(upto)).find(|&k| dist2(path.sample(k), x) <= r2) {
            return Some(k);
        }
    }
    None
}

pub(crate) fn dilated_bbox(path: &DiscretizedPath, upto: usize, r: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut lo, mut hi) = path.bbox(upto);
    lo.iter_mut().for_each(|x| *x -= r);
    hi.iter_mut().for_each(|x| *x += r);
    (lo, hi)
}

pub(crate) fn volume_of_box(lo: &[f64], hi: &[f64]) -> f64 {
    lo.iter().zip(hi).map(|(a, b)| b - a).product()
}

pub(crate) fn uniform_points(lo: &[f64], hi: &[f64], n: usize, rng: &mut Stream) -> Vec<f64> {
    let mut pts = Vec::with_capacity(n * lo.len());
    for _ in 0..n {
        for i in 0..lo.len() {
            pts.push(lo[i] + (hi[i] - lo[i]) * rng.random::<f64>());
        }
    }
    pts
}

/// In one dimension the sausage is an interval and its length is exact.
fn exact_interval_length(path: &DiscretizedPath, upto: usize, r: f64) -> f64 {
    let (lo, hi) = path.bbox(upto);
    hi[0] - lo[0] + 2.0 * r
}

/// Volume of the union of radius-`r` balls at samples `0..=upto[j]` for each
/// `j`, from one shared set of `n` uniform points in the dilated bounding
/// box of the longest prefix.
pub fn hit_or_miss_profile(path: &DiscretizedPath, r: f64, upto: &[usize], n: usize, rng: &mut Stream) -> Vec<f64> {
    if path.dim() == 1 {
        return upto.iter().map(|&k| exact_interval_length(path, k, r)).collect();
    }
    let k_max = upto.iter().copied().max().unwrap_or(0);
    let (lo, hi) = dilated_bbox(path, k_max, r);
    let vol = volume_of_box(&lo, &hi);
    let pts = uniform_points(&lo, &hi, n, rng);
    let firsts: Vec<Option<usize>> = pts
        .chunks_exact(path.dim())
        .map(|x| first_covering_index(path, x, r * r, k_max))
        .collect();
    upto.iter()
        .map(|&k| vol * firsts.iter().filter(|f| f.is_some_and(|i| i <= k)).count() as f64 / n as f64)
        .collect()
}

fn bridge_margin(path: &DiscretizedPath) -> f64 {
    (BRIDGE_MARGIN_SQ * path.max_variance_rate() * path.dt()).sqrt()
}

/// Probability, given the samples, that `x` lies in the sausage up to
/// sample `k`, for each `k` in `upto`. Between samples the distance to `x`
/// is treated as a Brownian bridge, as in [`super::first_hitting_time`].
pub(crate) fn bridge_coverage(path: &DiscretizedPath, x: &[f64], r: f64, upto: &[usize]) -> Vec<f64> {
    let k_max = upto.iter().copied().max().unwrap_or(0).min(path.steps());
    let reach = r + bridge_margin(path);
    let (r2, reach2) = (r * r, reach * reach);
    let dt = path.dt();
    // (k, probability of not crossing during step k); 0 when sample k is inside.
    let mut factors: Vec<(usize, f64)> = Vec::new();
    if dist2(path.sample(0), x) <= r2 {
        factors.push((0, 0.0));
    } else {
        'chunks: for c in 0..path.chunk_count() {
            let (start, end) = path.chunk_range(c);
            if start >= k_max {
                break;
            }
            let (lo, hi) = path.chunk_box(c);
            if box_dist2(x, lo, hi) > reach2 {
                continue;
            }
            let mut prev = dist2(path.sample(start), x);
            for k in start + 1..=end.min(k_max) {
                let cur = dist2(path.sample(k), x);
                if cur <= r2 {
                    factors.push((k, 0.0));
                    break 'chunks;
                }
                let v = path.variance_rate(k);
                if v > 0.0 {
                    let g = (prev.sqrt() - r) * (cur.sqrt() - r);
                    factors.push((k, -(-2.0 * g / (v * dt)).exp_m1()));
                }
                prev = cur;
            }
        }
    }
    upto.iter()
        .map(|&u| 1.0 - factors.iter().take_while(|f| f.0 <= u).map(|f| f.1).product::<f64>())
        .collect()
}

/// Like [`hit_or_miss_profile`], but each sample point contributes its
/// [`bridge_coverage`] probability rather than a 0/1 hit, which removes
/// most of the bias from gaps between samples. The box is widened by the
/// bridge margin.
pub fn bridged_profile(path: &DiscretizedPath, r: f64, upto: &[usize], n: usize, rng: &mut Stream) -> Vec<f64> {
    if path.dim() == 1 {
        return upto.iter().map(|&k| exact_interval_length(path, k, r)).collect();
    }
    let k_max = upto.iter().copied().max().unwrap_or(0);
    let (lo, hi) = dilated_bbox(path, k_max, r + bridge_margin(path));
    let vol = volume_of_box(&lo, &hi);
    let pts = uniform_points(&lo, &hi, n, rng);
    let mut sums = vec![0.0; upto.len()];
    for x in pts.chunks_exact(path.dim()) {
        for (s, c) in sums.iter_mut().zip(bridge_coverage(path, x, r, upto)) {
            *s += c;
        }
    }
    sums.into_iter().map(|s| vol * s / n as f64).collect()
}

/// `|S(r)|`, the volume of the sausage at time zero.
pub fn ball_sausage_volume(d: usize, r: f64) -> f64 {
    ball_volume(d, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn within(e: &Estimate, exact: f64, k: f64) -> bool {
        (e.mean - exact).abs() <= k * e.stderr.max(1e-12)
    }

    #[test]
    fn short_time_is_the_ball() {
        let mc = SausageMc::new(2, DiffusionSpec::StandardBrownian).replicates(400).seed(1);
        let e = mc.sausage_volume_estimate(1e-9).unwrap();
        assert!(within(&e, PI, 3.0), "{e:?}");
        let e = mc.difference_sausage_volume_estimate(1e-9).unwrap();
        assert!(within(&e, PI, 3.0), "{e:?}");
    }

    #[test]
    fn static_difference_sausage_is_the_ball() {
        let mc = SausageMc::new(2, DiffusionSpec::zero_motion(2)).replicates(400).seed(2);
        for t in [0.5, 3.0] {
            let e = mc.difference_sausage_volume_estimate(t).unwrap();
            assert!(within(&e, PI, 3.0), "{e:?}");
        }
    }

    #[test]
    fn profile_is_monotone_per_replicate() {
        let mc = SausageMc::new(2, DiffusionSpec::StandardBrownian).replicates(50).seed(3).dt(0.01);
        let f = mc.factory();
        for rep in 0..50 {
            let p = mc.motion(&f, rep, false, 4.0).unwrap();
            let upto: Vec<usize> = [0.5, 1.0, 2.0, 4.0].iter().map(|&t| steps_within(t, 0.01)).collect();
            let v = hit_or_miss_profile(&p, 1.0, &upto, 128, &mut f.stream(RngStreamKey::new(rep, 0, Purpose::Sampling)));
            assert!(v.windows(2).all(|w| w[0] <= w[1]), "{v:?}");
        }
    }

    #[test]
    fn one_dimensional_sausage_is_range_plus_diameter() {
        // Oracle: E[range of BM on [0, t]] = sqrt(8 t / pi).
        let mc = SausageMc::new(1, DiffusionSpec::StandardBrownian).replicates(4000).seed(4).dt(1e-4);
        let t = 1.0;
        let e = mc.sausage_volume_estimate(t).unwrap();
        assert!(within(&e, 2.0 + (8.0 * t / PI).sqrt(), 3.0), "{e:?}");
    }

    #[test]
    fn bounded_motion_stays_in_the_enlarged_ball() {
        // Drift at unit speed along the first axis until |zeta| reaches
        // delta, then stop: the sausage is a stadium of area pi + 2 delta.
        let delta = 2.0;
        let spec = DiffusionSpec::custom(
            "walk_then_stop",
            move |x: &[f64], a: &mut [f64]| {
                a.fill(0.0);
                if x[0] < delta {
                    a[0] = 1.0;
                }
            },
            |_: &[f64], s: &mut [f64]| s.fill(0.0),
        );
        let mc = SausageMc::new(2, spec).replicates(400).seed(5).dt(0.01);
        let e = mc.sausage_volume_estimate(5.0).unwrap();
        assert!(e.mean <= ball_volume(2, delta + 1.0));
        assert!(within(&e, PI + 2.0 * delta, 3.0), "{e:?}");
    }

    #[test]
    fn bridge_coverage_dominates_sample_coverage_and_grows() {
        let mc = SausageMc::new(2, DiffusionSpec::StandardBrownian).seed(6).dt(0.01);
        let f = mc.factory();
        let p = mc.motion(&f, 0, false, 2.0).unwrap();
        let upto = [0, 20, 100, 200];
        let mut rng = f.stream(RngStreamKey::new(0, 0, Purpose::Sampling));
        let (lo, hi) = dilated_bbox(&p, 200, 1.5);
        for x in uniform_points(&lo, &hi, 300, &mut rng).chunks_exact(2) {
            let c = bridge_coverage(&p, x, 1.0, &upto);
            assert!(c.windows(2).all(|w| w[0] <= w[1]), "{c:?}");
            for (j, &k) in upto.iter().enumerate() {
                let hit = first_covering_index(&p, x, 1.0, k).is_some();
                assert!(c[j] >= hit as u8 as f64);
                assert!((0.0..=1.0).contains(&c[j]));
            }
        }
    }

    #[test]
    fn bridge_estimate_is_close_to_the_fine_grid_estimate() {
        // The coarse bridged estimate should sit near a 16x finer grid.
        let coarse = SausageMc::new(2, DiffusionSpec::StandardBrownian).replicates(1500).seed(7).dt(0.016);
        let fine = coarse.clone().dt(0.001).bridge(false);
        let a = coarse.sausage_volume_estimate(1.0).unwrap();
        let b = fine.sausage_volume_estimate(1.0).unwrap();
        let plain = coarse.clone().bridge(false).sausage_volume_estimate(1.0).unwrap();
        assert!((a.mean - b.mean).abs() < (b.mean - plain.mean).abs(), "{a:?} {b:?} {plain:?}");
    }
}
