use std::collections::VecDeque;

use crate::config::{validate_config, Rho, ScenarioConfig};
use crate::diffusion::PathStepper;
use crate::error::{Error, Result};
use crate::geometry::{dist2, SpatialGrid};
use crate::particle::{ParticleRecord, Status};
use crate::rng::{Purpose, RngStreamKey, StreamFactory};
use crate::sampling::{sample_lifetime, sample_poisson_cloud, PointCloud};

use super::outcome::{EpidemicOutcome, Event, EventKind, InfectionRecord};
use super::proxy::ProxyTracker;
use super::RunOptions;

/// Diffusion model: every particle moves from time 0, infected or not.
///
/// Synchronous steps of `numerics.dt`. At each grid time, removals are
/// applied first, then infections, then the boundary check, then all
/// particles advance. With `rho = inf` infection closes over chains within
/// a step; with finite `rho` a susceptible `j` near infected `i` is
/// infected with probability `1 - exp(-dt rho mu(x_j - x_i))`, sources
/// tried in index order and newly infected particles acting from the next
/// step on.
pub fn run_diffusion(cfg: &ScenarioConfig, replicate: u64) -> Result<EpidemicOutcome> {
    let cfg = validate_config(cfg.clone()).map_err(Error::Config)?;
    run(&cfg, replicate, RunOptions::default())
}

pub(crate) fn run(cfg: &ScenarioConfig, replicate: u64, opts: RunOptions) -> Result<EpidemicOutcome> {
    let factory = StreamFactory::new(cfg.seed);
    let key = |i: usize, p: Purpose| RngStreamKey::new(replicate, i as u64, p);
    let mut s = factory.stream(key(0, Purpose::PointProcess));
    let cloud = sample_poisson_cloud(cfg.lambda, cfg.box_half_width, cfg.dimension, &mut s);
    run_cloud(cfg, replicate, opts, cloud)
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    factory: StreamFactory,
    replicate: u64,
    pos: Vec<f64>,
    particles: Vec<ParticleRecord>,
    generation: Vec<usize>,
    removal: Vec<f64>,
    alive: Vec<usize>,
    records: Vec<InfectionRecord>,
    events: Vec<Event>,
    tracker: ProxyTracker,
    record_events: bool,
}

impl Sim<'_> {
    fn point(&self, i: usize) -> &[f64] {
        let d = self.cfg.dimension;
        &self.pos[i * d..(i + 1) * d]
    }

    fn log(&mut self, kind: EventKind, time: f64, source: Option<usize>, target: usize) {
        let generation = self.generation[target];
        self.tracker.observe(kind, generation);
        if self.record_events {
            let position = self.point(target).to_vec();
            self.events.push(Event {
                kind,
                time,
                source,
                target,
                generation,
                position,
            });
        }
    }

    fn infect(&mut self, j: usize, time: f64, parent: Option<usize>) -> Result<()> {
        let key = RngStreamKey::new(self.replicate, j as u64, Purpose::Lifetime);
        let life = sample_lifetime(self.cfg.alpha, &mut self.factory.stream(key));
        self.particles[j].infect(time, life)?;
        let g = parent.map_or(0, |p| self.generation[p] + 1);
        self.generation[j] = g;
        self.removal[j] = time + life;
        self.alive.push(j);
        self.records.push(InfectionRecord {
            index: j,
            time,
            parent,
            generation: g,
        });
        self.log(EventKind::Infection, time, parent, j);
        Ok(())
    }
}

pub(crate) fn run_cloud(cfg: &ScenarioConfig, replicate: u64, opts: RunOptions, cloud: PointCloud) -> Result<EpidemicOutcome> {
    let d = cfg.dimension;
    let n = cloud.len();
    let dt = cfg.numerics.dt;
    let reach = cfg.interaction_radius();
    let band = cfg.box_half_width - reach;
    let factory = StreamFactory::new(cfg.seed);
    let mut steppers: Vec<PathStepper> = (0..n)
        .map(|i| {
            let s = factory.stream(RngStreamKey::new(replicate, i as u64, Purpose::Path));
            cfg.diffusion.stepper(d, dt, s)
        })
        .collect();
    let origin = cloud.coords().to_vec();
    let mut zeta = vec![0.0; n * d];
    let mut next = vec![0.0; d];
    let mut touched = vec![false; n];
    let mut sim = Sim {
        cfg,
        factory,
        replicate,
        pos: origin.clone(),
        particles: (0..n).map(|i| ParticleRecord::new(i, cloud.point(i).to_vec())).collect(),
        generation: vec![0; n],
        removal: vec![f64::INFINITY; n],
        alive: Vec::new(),
        records: Vec::new(),
        events: Vec::new(),
        tracker: ProxyTracker::new(cfg.proxy),
        record_events: opts.record_events,
    };
    sim.infect(0, 0.0, None)?;
    let mut truncated = false;
    let mut stopped_early = false;

    for k in 0u64.. {
        let t = k as f64 * dt;

        let mut gone: Vec<usize> = sim.alive.iter().copied().filter(|&i| sim.removal[i] <= t).collect();
        gone.sort_by(|&a, &b| sim.removal[a].total_cmp(&sim.removal[b]).then(a.cmp(&b)));
        for &i in &gone {
            sim.particles[i].remove()?;
            sim.log(EventKind::Removal, sim.removal[i], Some(i), i);
        }
        sim.alive.retain(|&i| sim.particles[i].status() == Status::Infected);
        if sim.alive.is_empty() {
            break;
        }
        if t > cfg.numerics.max_horizon {
            truncated = true;
            break;
        }

        let susceptible = (0..n as u32).filter(|&j| sim.particles[j as usize].status() == Status::Susceptible);
        let grid = SpatialGrid::build_subset(d, &sim.pos, susceptible, reach.max(1e-9));
        let sources = sim.alive.clone();
        match cfg.rho {
            Rho::Infinite => {
                let r = cfg.kernel.indicator_radius().unwrap_or(reach);
                let mut queue: VecDeque<usize> = sources.into();
                while let Some(i) = queue.pop_front() {
                    for j in grid.within(&sim.pos, sim.point(i), r) {
                        if sim.particles[j].status() == Status::Susceptible {
                            sim.infect(j, t, Some(i))?;
                            queue.push_back(j);
                        }
                    }
                }
            }
            Rho::Finite(rho) => {
                for i in sources {
                    for j in grid.within(&sim.pos, sim.point(i), reach) {
                        if sim.particles[j].status() != Status::Susceptible {
                            continue;
                        }
                        let mu = cfg.kernel.eval_sq(dist2(sim.point(i), sim.point(j)));
                        let p = -(-dt * rho * mu).exp_m1();
                        let key = RngStreamKey::new(replicate, j as u64, Purpose::Thinning).with_sub(i as u64);
                        if sim.factory.uniform_at(key, k) < p {
                            sim.infect(j, t, Some(i))?;
                        }
                    }
                }
            }
        }
        sim.alive.sort_unstable();

        for a in 0..sim.alive.len() {
            let i = sim.alive[a];
            if !touched[i] && sim.point(i).iter().any(|x| x.abs() >= band) {
                touched[i] = true;
                sim.log(EventKind::BoundaryTouch, t, Some(i), i);
            }
        }
        if opts.stop_early && sim.tracker.decided() {
            stopped_early = true;
            break;
        }

        for i in 0..n {
            if sim.particles[i].status() == Status::Removed {
                continue;
            }
            let z = &mut zeta[i * d..(i + 1) * d];
            steppers[i].step(z, &mut next);
            z.copy_from_slice(&next);
            for c in 0..d {
                sim.pos[i * d + c] = origin[i * d + c] + next[c];
            }
        }
    }

    Ok(EpidemicOutcome {
        replicate,
        particles: n,
        verdict: sim.tracker.verdict(truncated, sim.records.len()),
        records: sim.records,
        truncated,
        stopped_early,
        events: sim.events,
    })
}
