use crate::geometry::{box_dist2, dist2};
use crate::kernel::KernelSpec;
use crate::path::DiscretizedPath;

/// Trapezoid rule for `int_0^t f(zeta(s)) ds` over the grid, with the last
/// partial step weighted by its length. `f` must vanish at points farther
/// than `reach` from `target`; chunks of the path beyond that are skipped.
fn integrate_near<F: Fn(&[f64]) -> f64>(path: &DiscretizedPath, target: &[f64], reach: f64, t: f64, f: F) -> f64 {
    if !(t > 0.0) {
        return 0.0;
    }
    let dt = path.dt();
    let full = ((t / dt).floor() as usize).min(path.steps());
    let reach2 = reach * reach;
    let mut total = 0.0;
    for c in 0..path.chunk_count() {
        let (start, end) = path.chunk_range(c);
        if start >= full {
            break;
        }
        let (lo, hi) = path.chunk_box(c);
        if box_dist2(target, lo, hi) > reach2 {
            continue;
        }
        let mut prev = f(path.sample(start));
        for k in start + 1..=end.min(full) {
            let cur = f(path.sample(k));
            total += 0.5 * dt * (prev + cur);
            prev = cur;
        }
    }
    let rest = t - full as f64 * dt;
    if rest > 0.0 {
        let a = f(path.sample(full));
        if full < path.steps() {
            let b = f(path.sample(full + 1));
            let end = a + rest / dt * (b - a);
            total += 0.5 * rest * (a + end);
        } else {
            total += rest * a;
        }
    }
    total
}

/// `Q_t(x)`: time in `[0, t]` the ball of radius `radius` around `zeta`
/// spends covering `target`.
pub fn occupation_time(path: &DiscretizedPath, target: &[f64], radius: f64, t: f64) -> f64 {
    let r2 = radius * radius;
    integrate_near(path, target, radius, t, |p| (dist2(p, target) <= r2) as u8 as f64)
}

/// `int_0^t mu(target - zeta(s)) ds`.
pub fn kernel_exposure(path: &DiscretizedPath, target: &[f64], kernel: &KernelSpec, t: f64) -> f64 {
    integrate_near(path, target, kernel.support_radius(), t, |p| kernel.eval_sq(dist2(p, target)))
}
