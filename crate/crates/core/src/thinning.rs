//! First points of inhomogeneous Poisson processes by thinning.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// First point in `[0, window]` of a Poisson process with intensity
/// `rate(s) <= rate_max`, or `None`.
///
/// Candidates come from a rate-`rate_max` homogeneous process and are kept
/// when `U * rate_max < rate(s)`. With `rate_max` held fixed, a pointwise
/// larger `rate` accepts a superset of candidates, so its first point is
/// never later.
pub fn sample_first_contact_thinned<F>(
    mut rate: F,
    rate_max: f64,
    window: f64,
    stream: &mut Stream,
) -> Result<Option<f64>>
where
    F: FnMut(f64) -> f64,
{
    if !(rate_max > 0.0) {
        return Ok(None);
    }
    let mut s = 0.0;
    loop {
        let e: f64 = stream.sample(Exp1);
        s += e / rate_max;
        if s > window {
            return Ok(None);
        }
        let r = rate(s);
        if r > rate_max * (1.0 + 1e-12) {
            return Err(Error::ThinningBound {
                bound: rate_max,
                rate: r,
                time: s,
            });
        }
        let u: f64 = stream.random();
        if u * rate_max < r {
            return Ok(Some(s));
        }
    }
}
