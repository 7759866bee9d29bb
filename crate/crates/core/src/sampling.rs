//! Poisson clouds and exponential lifetimes.

use rand::Rng;
use rand_distr::Exp1;
use statrs::distribution::{DiscreteCDF, Poisson};

use crate::rng::Stream;

/// Points in `R^d`, stored flat. Index 0 is the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Self {
        let mut c = Self::new(dim);
        points.iter().for_each(|p| c.push(p.as_ref()));
        c
    }

    pub fn push(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.dim, "point dimension mismatch");
        self.coords.extend_from_slice(p);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major coordinates.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim.max(1))
    }

    /// Multiplies every coordinate by `r`.
    pub fn scaled(&self, r: f64) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|x| x * r).collect(),
        }
    }
}

/// Poisson(`mean`) by inversion of a single uniform.
///
/// Inversion makes the count non-decreasing in `mean` for a fixed uniform,
/// so clouds drawn from one stream at increasing intensities are nested.
pub fn poisson_count(mean: f64, u: f64) -> usize {
    if !(mean > 0.0) {
        return 0;
    }
    let law = Poisson::new(mean).expect("positive Poisson mean");
    law.inverse_cdf(u.clamp(0.0, 1.0 - f64::EPSILON)) as usize
}

/// Poisson cloud of intensity `lambda` in `[-L, L]^d`, conditioned on a
/// point at the origin (index 0).
///
/// The count is drawn first from one uniform, then points are i.i.d.
/// uniform. Calling this with the same stream at a larger `lambda` returns
/// a superset of the smaller cloud.
pub fn sample_poisson_cloud(lambda: f64, half_width: f64, d: usize, stream: &mut Stream) -> PointCloud {
    let volume = (2.0 * half_width).powi(d as i32);
    let n = poisson_count(lambda * volume, stream.random::<f64>());
    let mut cloud = PointCloud::new(d);
    cloud.coords.reserve((n + 1) * d);
    cloud.coords.extend(std::iter::repeat_n(0.0, d));
    for _ in 0..n * d {
        let u: f64 = stream.random();
        cloud.coords.push(half_width * (2.0 * u - 1.0));
    }
    cloud
}

/// A standard exponential from `stream`.
pub fn standard_exponential(stream: &mut Stream) -> f64 {
    stream.sample(Exp1)
}

/// `E / alpha` for a standard exponential `E` drawn from `stream`; `+inf`
/// when `alpha = 0`. Every engine draws lifetimes this way, so runs at
/// different `alpha` sharing a stream see the same `E`.
pub fn sample_lifetime(alpha: f64, stream: &mut Stream) -> f64 {
    let e = standard_exponential(stream);
    if alpha == 0.0 {
        f64::INFINITY
    } else {
        e / alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, RngStreamKey, StreamFactory};
    use crate::stats::Accumulator;

    fn stream(seed: u64, rep: u64) -> Stream {
        StreamFactory::new(seed).stream(RngStreamKey::new(rep, 0, Purpose::PointProcess))
    }

    #[test]
    fn origin_first() {
        let c = sample_poisson_cloud(1.0, 2.0, 3, &mut stream(1, 0));
        assert_eq!(c.point(0), &[0.0, 0.0, 0.0]);
        assert!(c.iter().flatten().all(|x| x.abs() <= 2.0));
    }

    #[test]
    fn vanishing_intensity_leaves_origin() {
        for rep in 0..100 {
            assert_eq!(sample_poisson_cloud(1e-12, 5.0, 2, &mut stream(2, rep)).len(), 1);
        }
    }

    #[test]
    fn count_mean_and_variance_d2() {
        let mut acc = Accumulator::default();
        for rep in 0..4000 {
            acc.push((sample_poisson_cloud(1.0, 5.0, 2, &mut stream(3, rep)).len() - 1) as f64);
        }
        let e = acc.estimate();
        assert!((e.mean - 100.0).abs() < 3.0 * e.stderr, "{e:?}");
        // Var of the sample variance of Poisson(100) is about 2*100^2/n.
        let sd_var = (2.0 * 100.0f64.powi(2) / 4000.0).sqrt();
        assert!((acc.variance() - 100.0).abs() < 4.0 * sd_var, "{}", acc.variance());
    }

    #[test]
    fn count_mean_d1() {
        let mut acc = Accumulator::default();
        for rep in 0..10_000 {
            acc.push((sample_poisson_cloud(0.5, 10.0, 1, &mut stream(4, rep)).len() - 1) as f64);
        }
        // Oracle: Poisson(10) has mean 10 and standard deviation sqrt(10).
        let se = (10.0f64 / 10_000.0).sqrt();
        assert!((acc.mean() - 10.0).abs() < 3.0 * se);
    }

    #[test]
    fn clouds_nest_in_lambda() {
        for rep in 0..50 {
            let small = sample_poisson_cloud(0.3, 4.0, 2, &mut stream(5, rep));
            let big = sample_poisson_cloud(0.9, 4.0, 2, &mut stream(5, rep));
            assert!(big.len() >= small.len());
            assert_eq!(&big.coords[..small.coords.len()], &small.coords[..]);
        }
    }

    #[test]
    fn lifetime_mean() {
        let mut s = stream(6, 0);
        let mut acc = Accumulator::default();
        for _ in 0..100_000 {
            acc.push(sample_lifetime(2.0, &mut s));
        }
        let e = acc.estimate();
        assert!((e.mean - 0.5).abs() < 3.0 * e.stderr);
    }

    #[test]
    fn zero_alpha_never_removes() {
        assert_eq!(sample_lifetime(0.0, &mut stream(7, 0)), f64::INFINITY);
    }

    #[test]
    fn doubling_alpha_halves_lifetime() {
        let a = sample_lifetime(1.5, &mut stream(8, 3));
        let b = sample_lifetime(3.0, &mut stream(8, 3));
        assert_eq!(a, 2.0 * b);
    }
}
