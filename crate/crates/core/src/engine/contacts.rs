use crate::config::{Rho, ScenarioConfig};
use crate::error::Result;
use crate::geometry::SpatialGrid;
use crate::path::DiscretizedPath;
use crate::rng::{Purpose, RngStreamKey, StreamFactory};
use crate::sampling::{sample_lifetime, sample_poisson_cloud, PointCloud};
use crate::sausage::first_hitting_time;
use crate::thinning::sample_first_contact_thinned;

/// One replicate of the delayed model: the particle cloud plus the keyed
/// streams from which lifetimes, paths and contacts are revealed on demand.
pub struct DelayedWorld<'a> {
    cfg: &'a ScenarioConfig,
    replicate: u64,
    factory: StreamFactory,
    cloud: PointCloud,
    grid: SpatialGrid,
    reach: f64,
}

/// Everything particle `i` does once infected, relative to its infection
/// time.
#[derive(Debug, Clone, PartialEq)]
pub struct Reveal {
    pub particle: usize,
    pub lifetime: f64,
    /// `min(lifetime, max_horizon)`: how far the path was simulated.
    pub window: f64,
    pub truncated: bool,
    /// `(j, tau_ij)` with `tau_ij < lifetime`, sorted by `j`.
    pub contacts: Vec<(usize, f64)>,
    /// First time the particle's ball gets within the interaction radius of
    /// the box boundary, with its position then.
    pub touch: Option<(f64, Vec<f64>)>,
    pub end_position: Vec<f64>,
}

impl<'a> DelayedWorld<'a> {
    /// Samples the cloud of replicate `replicate` from `cfg.seed`.
    pub fn new(cfg: &'a ScenarioConfig, replicate: u64) -> Self {
        let factory = StreamFactory::new(cfg.seed);
        let mut s = factory.stream(RngStreamKey::new(replicate, 0, Purpose::PointProcess));
        let cloud = sample_poisson_cloud(cfg.lambda, cfg.box_half_width, cfg.dimension, &mut s);
        Self::with_cloud(cfg, replicate, cloud)
    }

    /// Uses a given cloud; particle 0 is the initially infected one.
    pub fn with_cloud(cfg: &'a ScenarioConfig, replicate: u64, cloud: PointCloud) -> Self {
        let reach = cfg.interaction_radius();
        let grid = SpatialGrid::build(cfg.dimension, cloud.coords(), reach.max(1e-9));
        Self {
            cfg,
            replicate,
            factory: StreamFactory::new(cfg.seed),
            cloud,
            grid,
            reach,
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        self.cfg
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    fn key(&self, i: usize, purpose: Purpose) -> RngStreamKey {
        RngStreamKey::new(self.replicate, i as u64, purpose)
    }

    /// Lifetime, path, contacts with the particles accepted by `consider`,
    /// and boundary touch of particle `i`.
    pub fn reveal(&self, i: usize, mut consider: impl FnMut(usize) -> bool) -> Result<Reveal> {
        let cfg = self.cfg;
        let d = cfg.dimension;
        let num = &cfg.numerics;
        let lifetime = sample_lifetime(cfg.alpha, &mut self.factory.stream(self.key(i, Purpose::Lifetime)));
        let window = lifetime.min(num.max_horizon);
        let truncated = lifetime > num.max_horizon;
        let mut path = DiscretizedPath::new(
            &cfg.diffusion,
            d,
            num.dt,
            0.0,
            self.factory.stream(self.key(i, Purpose::Path)),
            num.max_path_steps,
        );
        path.extend_to(window)?;
        let last = path.steps_for(window).min(path.steps());
        let xi = self.cloud.point(i);

        let (mut lo, mut hi) = path.bbox(last);
        for c in 0..d {
            lo[c] += xi[c] - self.reach;
            hi[c] += xi[c] + self.reach;
        }
        let mut candidates = Vec::new();
        self.grid.for_each_in_box(&lo, &hi, |j| {
            if j != i {
                candidates.push(j);
            }
        });
        candidates.sort_unstable();

        let mut contacts = Vec::new();
        let mut rel = vec![0.0; d];
        let mut pos = vec![0.0; d];
        for j in candidates {
            if !consider(j) {
                continue;
            }
            let xj = self.cloud.point(j);
            for c in 0..d {
                rel[c] = xj[c] - xi[c];
            }
            let tau = match cfg.rho {
                Rho::Infinite => {
                    let r = cfg.kernel.indicator_radius().unwrap_or(self.reach);
                    let bridge = num
                        .bridge_correction
                        .then(|| self.factory.random_access(self.key(i, Purpose::Bridge).with_sub(j as u64)));
                    first_hitting_time(&path, &rel, r, window, bridge.as_ref())
                }
                Rho::Finite(rho) => {
                    let mut s = self.factory.stream(self.key(i, Purpose::Thinning).with_sub(j as u64));
                    let kernel = &cfg.kernel;
                    sample_first_contact_thinned(
                        |t| {
                            path.position_at(t, &mut pos);
                            let mut n2 = 0.0;
                            for c in 0..d {
                                let x = rel[c] - pos[c];
                                n2 += x * x;
                            }
                            rho * kernel.eval_sq(n2)
                        },
                        cfg.thinning_rate(),
                        window,
                        &mut s,
                    )?
                }
            };
            if let Some(t) = tau.filter(|&t| t < lifetime) {
                contacts.push((j, t));
            }
        }

        let touch = self.boundary_touch(&path, xi, last).filter(|t| t.0 <= window);
        let mut end_position = vec![0.0; d];
        path.position_at(window, &mut end_position);
        for c in 0..d {
            end_position[c] += xi[c];
        }
        Ok(Reveal {
            particle: i,
            lifetime,
            window,
            truncated,
            contacts,
            touch,
            end_position,
        })
    }

    fn boundary_touch(&self, path: &DiscretizedPath, xi: &[f64], last: usize) -> Option<(f64, Vec<f64>)> {
        let band = self.cfg.box_half_width - self.reach;
        let d = xi.len();
        let outside = |lo: &[f64], hi: &[f64]| (0..d).any(|c| xi[c] + hi[c] >= band || xi[c] + lo[c] <= -band);
        for c in 0..path.chunk_count() {
            let (start, end) = path.chunk_range(c);
            if start > last {
                break;
            }
            let (lo, hi) = path.chunk_box(c);
            if !outside(lo, hi) {
                continue;
            }
            for k in start..=end.min(last) {
                let z = path.sample(k);
                if outside(z, z) {
                    let p = (0..d).map(|c| xi[c] + z[c]).collect();
                    return Some((k as f64 * path.dt(), p));
                }
            }
        }
        None
    }
}

/// `J_i` for the replicate behind `world`: every `j != i` reached before
/// `i` is removed, with its contact time.
pub fn infection_set_for(world: &DelayedWorld<'_>, i: usize) -> Result<Vec<(usize, f64)>> {
    Ok(world.reveal(i, |_| true)?.contacts)
}
