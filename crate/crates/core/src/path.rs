//! Lazily extended discretized trajectories `zeta(k dt)`, `zeta(0) = 0`.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::diffusion::{DiffusionSpec, PathStepper};
use crate::error::{invalid, Error, Result};
use crate::rng::Stream;

/// Steps per bounding box used to prune distance searches.
pub const CHUNK: usize = 32;

#[derive(Debug, Clone)]
enum Extension {
    Stepper(Box<PathStepper>),
    /// Stays at its last sample forever.
    Constant,
    /// Samples were supplied; the path ends at its last sample.
    Fixed,
}

#[derive(Debug, Clone)]
enum VarianceRate {
    Constant(f64),
    /// Rate for the step ending at sample `k` stored at index `k`.
    PerStep(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct DiscretizedPath {
    dim: usize,
    dt: f64,
    anchor: f64,
    samples: Vec<f64>,
    ext: Extension,
    max_steps: usize,
    var: VarianceRate,
    v_max: f64,
    boxes: Vec<f64>,
    scratch: Vec<f64>,
}

impl DiscretizedPath {
    pub fn new(spec: &DiffusionSpec, dim: usize, dt: f64, anchor: f64, rng: Stream, max_steps: usize) -> Self {
        let var = match spec.constant_variance_rate(dim) {
            Some(v) => VarianceRate::Constant(v),
            None => VarianceRate::PerStep(vec![0.0]),
        };
        let v_max = match var {
            VarianceRate::Constant(v) => v,
            VarianceRate::PerStep(_) => 0.0,
        };
        let mut p = Self::empty(dim, dt, anchor, Extension::Stepper(Box::new(spec.stepper(dim, dt, rng))), var, v_max);
        p.max_steps = max_steps;
        p
    }

    /// The path that never moves.
    pub fn constant(dim: usize, dt: f64, anchor: f64) -> Self {
        Self::empty(dim, dt, anchor, Extension::Constant, VarianceRate::Constant(0.0), 0.0)
    }

    /// A fixed path through `samples` (row-major, first row must be zero)
    /// with per-coordinate variance rate `variance_rate` between samples.
    pub fn from_samples(dim: usize, dt: f64, anchor: f64, samples: Vec<f64>, variance_rate: f64) -> Result<Self> {
        if samples.len() < dim || !samples.len().is_multiple_of(dim) {
            return Err(invalid("sample buffer length must be a positive multiple of the dimension"));
        }
        if samples[..dim].iter().any(|&x| x != 0.0) {
            return Err(invalid("paths start at the origin"));
        }
        let mut p = Self::empty(dim, dt, anchor, Extension::Fixed, VarianceRate::Constant(variance_rate), variance_rate);
        p.samples = samples;
        p.max_steps = p.steps();
        p.rebuild_boxes();
        Ok(p)
    }

    fn empty(dim: usize, dt: f64, anchor: f64, ext: Extension, var: VarianceRate, v_max: f64) -> Self {
        let mut p = Self {
            dim,
            dt,
            anchor,
            samples: vec![0.0; dim],
            ext,
            max_steps: usize::MAX,
            var,
            v_max,
            boxes: Vec::new(),
            scratch: Vec::new(),
        };
        p.rebuild_boxes();
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time at which `zeta(0)` is reached: the infection time in the
    /// delayed model, zero in the diffusion model.
    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn steps(&self) -> usize {
        self.samples.len() / self.dim - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.ext, Extension::Constant)
    }

    #[inline]
    pub fn sample(&self, k: usize) -> &[f64] {
        &self.samples[k * self.dim..(k + 1) * self.dim]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Per-coordinate variance rate over the step ending at sample `k`.
    #[inline]
    pub fn variance_rate(&self, k: usize) -> f64 {
        match &self.var {
            VarianceRate::Constant(v) => *v,
            VarianceRate::PerStep(v) => v[k],
        }
    }

    pub fn max_variance_rate(&self) -> f64 {
        self.v_max
    }

    /// Number of steps needed to cover `t`.
    pub fn steps_for(&self, t: f64) -> usize {
        let x = t / self.dt;
        let k = x.ceil();
        // Absorb rounding noise such as 0.3 / 0.1 = 3.0000000000000004.
        if k - x > 1.0 - 1e-9 {
            (k - 1.0) as usize
        } else {
            k as usize
        }
    }

    /// Extends the path so that its horizon covers `t`. No-op when it
    /// already does.
    pub fn extend_to(&mut self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(invalid("cannot extend a path to an infinite time"));
        }
        let target = self.steps_for(t.max(0.0));
        let have = self.steps();
        if target <= have {
            return Ok(());
        }
        if matches!(self.ext, Extension::Fixed) {
            return Err(Error::FrozenPath { horizon: self.horizon() });
        }
        if target > self.max_steps {
            return Err(Error::PathTooLong {
                requested: target,
                cap: self.max_steps,
            });
        }
        let d = self.dim;
        self.samples.reserve((target - have) * d);
        for k in have + 1..=target {
            let start = (k - 1) * d;
            match &mut self.ext {
                Extension::Fixed => unreachable!(),
                Extension::Constant => {
                    self.samples.extend_from_within(start..start + d);
                }
                Extension::Stepper(st) => {
                    if let VarianceRate::PerStep(v) = &mut self.var {
                        let rate = st.spec().variance_rate_at(&self.samples[start..start + d], &mut self.scratch);
                        v.push(rate);
                        self.v_max = self.v_max.max(rate);
                    }
                    self.samples.resize(start + 2 * d, 0.0);
                    let (prev, next) = self.samples[start..].split_at_mut(d);
                    st.step(prev, next);
                }
            }
            self.update_boxes(k);
        }
        Ok(())
    }

    /// `zeta(t)` by linear interpolation; clamps to the last sample.
    pub fn position_at(&self, t: f64, out: &mut [f64]) {
        let n = self.steps();
        let x = (t / self.dt).max(0.0);
        let k = x.floor() as usize;
        if k >= n {
            out.copy_from_slice(self.sample(n));
            return;
        }
        let w = x - k as f64;
        let (a, b) = (self.sample(k), self.sample(k + 1));
        for i in 0..self.dim {
            out[i] = a[i] + w * (b[i] - a[i]);
        }
    }

    pub fn chunk_count(&self) -> usize {
        self.boxes.len() / (2 * self.dim)
    }

    /// Sample range `[start, end]` (inclusive) covered by chunk `c`.
    pub fn chunk_range(&self, c: usize) -> (usize, usize) {
        (c * CHUNK, ((c + 1) * CHUNK).min(self.steps()))
    }

    /// Bounding box `(min, max)` of the samples in chunk `c`.
    pub fn chunk_box(&self, c: usize) -> (&[f64], &[f64]) {
        let b = &self.boxes[2 * self.dim * c..2 * self.dim * (c + 1)];
        b.split_at(self.dim)
    }

    /// Bounding box of samples `0..=upto`.
    pub fn bbox(&self, upto: usize) -> (Vec<f64>, Vec<f64>) {
        let upto = upto.min(self.steps());
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        let mut merge = |p: &[f64], q: &[f64]| {
            for i in 0..p.len() {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(q[i]);
            }
        };
        let full = upto / CHUNK;
        for c in 0..full {
            let (a, b) = self.chunk_box(c);
            merge(a, b);
        }
        for k in full * CHUNK..=upto {
            let s = self.sample(k);
            merge(s, s);
        }
        (lo, hi)
    }

    fn rebuild_boxes(&mut self) {
        self.boxes.clear();
        for k in 0..=self.steps() {
            self.update_boxes(k);
        }
    }

    fn update_boxes(&mut self, k: usize) {
        let d = self.dim;
        let c = k / CHUNK;
        if self.boxes.len() < 2 * d * (c + 1) {
            let p = self.sample(k).to_vec();
            self.boxes.extend_from_slice(&p);
            self.boxes.extend_from_slice(&p);
        }
        let targets = if k.is_multiple_of(CHUNK) && k > 0 { [c - 1, c] } else { [c, c] };
        for cc in targets {
            for i in 0..d {
                let x = self.samples[k * d + i];
                let lo = &mut self.boxes[2 * d * cc + i];
                *lo = lo.min(x);
                let hi = &mut self.boxes[2 * d * cc + d + i];
                *hi = hi.max(x);
            }
        }
    }

    /// `a - b` sample by sample over their common horizon; the variance
    /// rates add.
    pub fn difference(a: &DiscretizedPath, b: &DiscretizedPath) -> Result<Self> {
        if a.dim != b.dim || a.dt != b.dt {
            return Err(invalid("difference needs paths with equal dimension and step"));
        }
        let n = a.steps().min(b.steps());
        let len = (n + 1) * a.dim;
        let samples: Vec<f64> = a.samples[..len].iter().zip(&b.samples[..len]).map(|(x, y)| x - y).collect();
        let mut p = Self::from_samples(a.dim, a.dt, a.anchor, samples, 0.0)?;
        let rates: Vec<f64> = (0..=n).map(|k| if k == 0 { 0.0 } else { a.variance_rate(k) + b.variance_rate(k) }).collect();
        p.v_max = rates.iter().copied().fold(0.0, f64::max);
        p.var = VarianceRate::PerStep(rates);
        Ok(p)
    }

    /// The same path at step `dt / 2`, with midpoints drawn from the
    /// Brownian bridge between neighbouring samples. Exact in law for
    /// Brownian motion with or without drift; for other diffusions the
    /// bridge uses the variance rate at the step's left end.
    pub fn refined(&self, stream: &mut Stream) -> Result<Self> {
        let d = self.dim;
        let n = self.steps();
        let mut samples = Vec::with_capacity((2 * n + 1) * d);
        samples.extend_from_slice(self.sample(0));
        let mut rates = vec![0.0];
        for k in 1..=n {
            let v = self.variance_rate(k);
            let sd = (v * self.dt / 4.0).sqrt();
            let (a, b) = (self.sample(k - 1), self.sample(k));
            for i in 0..d {
                let z: f64 = stream.sample(StandardNormal);
                samples.push(0.5 * (a[i] + b[i]) + sd * z);
            }
            samples.extend_from_slice(b);
            rates.extend([v, v]);
        }
        let mut p = Self::from_samples(d, self.dt / 2.0, self.anchor, samples, 0.0)?;
        p.v_max = self.v_max;
        p.var = match self.var {
            VarianceRate::Constant(v) => VarianceRate::Constant(v),
            VarianceRate::PerStep(_) => VarianceRate::PerStep(rates),
        };
        Ok(p)
    }

    /// Debug dump with columns `t, x_1..x_d` (times relative to the anchor).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.dim).map(|i| format!("x_{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for k in 0..=self.steps() {
            write!(w, "{}", k as f64 * self.dt)?;
            for x in self.sample(k) {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
