//! First hitting times of a point by a moving closed ball.

use crate::geometry::{box_dist2, dist2};
use crate::path::DiscretizedPath;
use crate::rng::RandomAccess;

/// Bridge crossings farther than this many standard deviations of a step
/// are ignored when pruning (probability below `exp(-40)`).
pub(crate) const BRIDGE_MARGIN_SQ: f64 = 20.0;

/// A ball of radius `radius` carried along `path`, and the point it should
/// reach, relative to the path's starting point.
#[derive(Debug, Clone, Copy)]
pub struct SausageQuery<'a> {
    pub path: &'a DiscretizedPath,
    pub radius: f64,
    pub target: &'a [f64],
    pub horizon: f64,
}

impl SausageQuery<'_> {
    pub fn first_hitting_time(&self, bridge: Option<&RandomAccess>) -> Option<f64> {
        first_hitting_time(self.path, self.target, self.radius, self.horizon, bridge)
    }

    pub fn occupation_time(&self, t: f64) -> f64 {
        super::occupation_time(self.path, self.target, self.radius, t)
    }
}

/// Earliest time in `[0, horizon]` at which `|target - zeta(t)| <= radius`.
///
/// The grid is scanned for the first step that ends inside the ball. Without
/// bridge correction that step is refined by one bisection: the hit is
/// placed at the step midpoint if the linearly interpolated midpoint is
/// inside, else at the step end. With bridge correction, a step that ends
/// outside still counts as a hit with probability
/// `exp(-2 g1 g2 / (v dt))`, where `g1`, `g2` are the gaps to the sphere at
/// its ends and `v` the per-coordinate variance rate; this treats the
/// distance to the target as a one-dimensional Brownian bridge, which is an
/// approximation. Hits in a step are then placed at its midpoint. The
/// uniform for step `k` is `bridge.uniform(k)`, so hitting times are
/// non-increasing in `radius` for a fixed uniform source.
///
/// Only the samples already present are used; extend the path to
/// `horizon` first.
pub fn first_hitting_time(
    path: &DiscretizedPath,
    target: &[f64],
    radius: f64,
    horizon: f64,
    bridge: Option<&RandomAccess>,
) -> Option<f64> {
    let r2 = radius * radius;
    if dist2(path.sample(0), target) <= r2 {
        return Some(0.0);
    }
    let dt = path.dt();
    let last = path.steps().min(path.steps_for(horizon));
    let reach = match bridge {
        Some(_) => radius + (BRIDGE_MARGIN_SQ * path.max_variance_rate() * dt).sqrt(),
        None => radius,
    };
    let reach2 = reach * reach;
    for c in 0..path.chunk_count() {
        let (start, end) = path.chunk_range(c);
        if start >= last {
            break;
        }
        let (lo, hi) = path.chunk_box(c);
        if box_dist2(target, lo, hi) > reach2 {
            continue;
        }
        let mut prev = dist2(path.sample(start), target);
        for k in start + 1..=end.min(last) {
            let cur = dist2(path.sample(k), target);
            let hit = if cur <= r2 {
                true
            } else if let Some(u) = bridge {
                let v = path.variance_rate(k);
                let g1 = prev.sqrt() - radius;
                let g2 = cur.sqrt() - radius;
                v > 0.0 && u.uniform(k as u64) < (-2.0 * g1 * g2 / (v * dt)).exp()
            } else {
                false
            };
            if hit {
                let mid = (k as f64 - 0.5) * dt;
                let tau = if bridge.is_some() || midpoint_inside(path, k, target, r2) {
                    mid
                } else {
                    k as f64 * dt
                };
                return (tau <= horizon).then_some(tau);
            }
            prev = cur;
        }
    }
    None
}

fn midpoint_inside(path: &DiscretizedPath, k: usize, target: &[f64], r2: f64) -> bool {
    let (a, b) = (path.sample(k - 1), path.sample(k));
    let mut s = 0.0;
    for i in 0..target.len() {
        let m = 0.5 * (a[i] + b[i]) - target[i];
        s += m * m;
    }
    s <= r2
}

/// Probability, given the grid samples, that the ball reaches `target`
/// by `horizon` under the bridge approximation of
/// [`first_hitting_time`].
pub fn coverage_probability(path: &DiscretizedPath, target: &[f64], radius: f64, horizon: f64) -> f64 {
    let r2 = radius * radius;
    if dist2(path.sample(0), target) <= r2 {
        return 1.0;
    }
    let dt = path.dt();
    let last = path.steps().min(path.steps_for(horizon));
    let mut miss = 1.0;
    let mut prev = dist2(path.sample(0), target);
    for k in 1..=last {
        let cur = dist2(path.sample(k), target);
        if cur <= r2 {
            return 1.0;
        }
        let v = path.variance_rate(k);
        if v > 0.0 {
            let g1 = prev.sqrt() - radius;
            let g2 = cur.sqrt() - radius;
            miss *= 1.0 - (-2.0 * g1 * g2 / (v * dt)).exp();
        }
        prev = cur;
    }
    1.0 - miss
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::DiffusionSpec;
    use crate::rng::{Purpose, RngStreamKey, StreamFactory};
    use proptest::prelude::*;

    fn drift_path(v: [f64; 2], dt: f64, t: f64) -> DiscretizedPath {
        let n = (t / dt).round() as usize;
        let samples = (0..=n).flat_map(|k| [v[0] * k as f64 * dt, v[1] * k as f64 * dt]).collect();
        DiscretizedPath::from_samples(2, dt, 0.0, samples, 0.0).unwrap()
    }

    fn brownian(i: u64, dt: f64, t: f64) -> DiscretizedPath {
        let s = StreamFactory::new(21).stream(RngStreamKey::new(0, i, Purpose::Path));
        let mut p = DiscretizedPath::new(&DiffusionSpec::StandardBrownian, 2, dt, 0.0, s, 1 << 22);
        p.extend_to(t).unwrap();
        p
    }

    #[test]
    fn starting_inside_is_instant() {
        let p = drift_path([1.0, 0.0], 0.1, 1.0);
        assert_eq!(first_hitting_time(&p, &[0.5, 0.5], 1.0, 1.0, None), Some(0.0));
    }

    #[test]
    fn drift_kinematics() {
        let dt = 1e-3;
        let p = drift_path([2.0, 0.0], dt, 5.0);
        let tau = first_hitting_time(&p, &[5.0, 0.0], 1.0, 5.0, None).unwrap();
        assert!((tau - 2.0).abs() <= dt, "{tau}");
        // Off-axis approach: closest distance from the line is 0.6.
        let x = [4.0, 0.6];
        let tau = first_hitting_time(&p, &x, 1.0, 5.0, None).unwrap();
        let exact = (4.0 - 0.8) / 2.0;
        assert!((tau - exact).abs() <= dt);
    }

    #[test]
    fn horizon_cuts_off() {
        let p = drift_path([2.0, 0.0], 0.01, 5.0);
        assert_eq!(first_hitting_time(&p, &[5.0, 0.0], 1.0, 1.5, None), None);
        assert_eq!(first_hitting_time(&p, &[50.0, 0.0], 1.0, 5.0, None), None);
    }

    #[test]
    fn pruned_scan_matches_plain_scan() {
        let p = brownian(3, 1e-3, 4.0);
        for j in 0..200 {
            let x = [(j as f64 * 0.37).sin() * 3.0, (j as f64 * 0.73).cos() * 3.0];
            let fast = first_hitting_time(&p, &x, 1.0, 4.0, None);
            let slow = (0..=p.steps()).find(|&k| dist2(p.sample(k), &x) <= 1.0);
            assert_eq!(fast.is_some(), slow.is_some());
            if let (Some(t), Some(k)) = (fast, slow) {
                assert!(t <= k as f64 * 1e-3 && t >= (k as f64 - 0.5) * 1e-3);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn hitting_time_non_increasing_in_radius(
            seed in 0u64..1000, x in -3.0f64..3.0, y in -3.0f64..3.0,
            r1 in 0.2f64..1.5, dr in 0.0f64..1.0, bridge in any::<bool>(),
        ) {
            let p = brownian(seed, 1e-2, 3.0);
            let u = StreamFactory::new(5).random_access(RngStreamKey::new(seed, 0, Purpose::Bridge));
            let b = bridge.then_some(&u);
            let t1 = first_hitting_time(&p, &[x, y], r1, 3.0, b);
            let t2 = first_hitting_time(&p, &[x, y], r1 + dr, 3.0, b);
            if let Some(t1) = t1 {
                prop_assert!(t2.is_some_and(|t2| t2 <= t1));
            }
        }

        #[test]
        fn occupation_non_decreasing_in_radius(
            seed in 0u64..1000, x in -2.0f64..2.0, y in -2.0f64..2.0,
            r1 in 0.1f64..1.5, dr in 0.0f64..1.0,
        ) {
            let p = brownian(seed, 1e-2, 2.0);
            let a = crate::sausage::occupation_time(&p, &[x, y], r1, 2.0);
            let b = crate::sausage::occupation_time(&p, &[x, y], r1 + dr, 2.0);
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn coverage_probability_is_the_hit_frequency() {
        let p = brownian(8, 0.05, 2.0);
        let x = [1.2, 0.9];
        let exact = coverage_probability(&p, &x, 1.0, 2.0);
        let f = StreamFactory::new(9);
        let n = 20_000;
        let hits = (0..n)
            .filter(|&j| {
                let u = f.random_access(RngStreamKey::new(j, 0, Purpose::Bridge));
                first_hitting_time(&p, &x, 1.0, 2.0, Some(&u)).is_some()
            })
            .count();
        let se = (exact * (1.0 - exact) / n as f64).sqrt().max(1e-9);
        assert!((hits as f64 / n as f64 - exact).abs() < 4.0 * se, "{} vs {exact}", hits as f64 / n as f64);
    }
}
