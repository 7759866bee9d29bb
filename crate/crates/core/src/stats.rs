use serde::{Deserialize, Serialize};

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            n: 0,
        }
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        let mut acc = Accumulator::default();
        xs.iter().for_each(|&x| acc.push(x));
        acc.estimate()
    }

    pub fn scale(self, c: f64) -> Self {
        Self {
            mean: self.mean * c,
            stderr: self.stderr * c.abs(),
            n: self.n,
        }
    }

    /// Standard error of the difference of two independent estimates.
    pub fn combined_stderr(&self, other: &Estimate) -> f64 {
        self.stderr.hypot(other.stderr)
    }

    /// 95% normal-approximation interval.
    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - 1.96 * self.stderr, self.mean + 1.96 * self.stderr)
    }
}

/// Welford accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            stderr: if self.n == 0 {
                0.0
            } else {
                (self.variance() / self.n as f64).sqrt()
            },
            n: self.n,
        }
    }
}

/// Binomial proportion with its standard error.
pub fn proportion(successes: usize, n: usize) -> Estimate {
    if n == 0 {
        return Estimate {
            mean: 0.0,
            stderr: 0.0,
            n: 0,
        };
    }
    let p = successes as f64 / n as f64;
    Estimate {
        mean: p,
        stderr: (p * (1.0 - p) / n as f64).sqrt(),
        n,
    }
}

/// Wilson score interval at 95%; well behaved at p near 0 or 1.
pub fn wilson95(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, -3.0, 8.0];
        let e = Estimate::from_samples(&xs);
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((e.mean - mean).abs() < 1e-12);
        assert!((e.stderr - (var / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson95(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson95(0, 50);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
    }
}
