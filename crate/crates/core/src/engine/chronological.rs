use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::config::{validate_config, ScenarioConfig};
use crate::error::{Error, Result};
use crate::particle::{ParticleRecord, Status};

use super::contacts::DelayedWorld;
use super::outcome::{EpidemicOutcome, Event, EventKind, InfectionRecord};
use super::proxy::ProxyTracker;
use super::{EventKey, RunOptions};

/// Delayed model, simulated event by event in time order.
///
/// When a particle is infected its lifetime and path are revealed and
/// contact events with the particles still susceptible are scheduled; an
/// infection event fires only if its target is still susceptible and its
/// source has not been removed.
pub fn run_delayed_chronological(cfg: &ScenarioConfig, replicate: u64) -> Result<EpidemicOutcome> {
    let cfg = validate_config(cfg.clone()).map_err(Error::Config)?;
    run(&cfg, replicate, RunOptions::default())
}

pub(crate) fn run(cfg: &ScenarioConfig, replicate: u64, opts: RunOptions) -> Result<EpidemicOutcome> {
    let world = DelayedWorld::new(cfg, replicate);
    run_in(&world, replicate, opts)
}

struct State {
    particles: Vec<ParticleRecord>,
    generation: Vec<usize>,
    end_position: Vec<Vec<f64>>,
    touch_position: Vec<Vec<f64>>,
    heap: BinaryHeap<Reverse<EventKey>>,
    records: Vec<InfectionRecord>,
    truncated: bool,
}

impl State {
    fn infect(&mut self, world: &DelayedWorld<'_>, j: usize, time: f64, parent: Option<usize>, g: usize) -> Result<Event> {
        let particles = &self.particles;
        let r = world.reveal(j, |k| particles[k].status() == Status::Susceptible)?;
        self.particles[j].infect(time, r.lifetime)?;
        self.generation[j] = g;
        self.truncated |= r.truncated;
        let key = |time, kind, target: usize| {
            Reverse(EventKey {
                time,
                kind,
                generation: g as u32,
                source: j as u32,
                target: target as u32,
            })
        };
        for &(k, tau) in &r.contacts {
            self.heap.push(key(time + tau, EventKind::Infection, k));
        }
        if r.lifetime.is_finite() {
            self.heap.push(key(time + r.lifetime, EventKind::Removal, j));
        }
        if let Some((s, p)) = r.touch {
            self.heap.push(key(time + s, EventKind::BoundaryTouch, j));
            self.touch_position[j] = p;
        }
        self.end_position[j] = r.end_position;
        self.records.push(InfectionRecord {
            index: j,
            time,
            parent,
            generation: g,
        });
        Ok(Event {
            kind: EventKind::Infection,
            time,
            source: parent,
            target: j,
            generation: g,
            position: world.cloud().point(j).to_vec(),
        })
    }

    fn own_event(&mut self, kind: EventKind, time: f64, i: usize) -> Event {
        let position = match kind {
            EventKind::Removal => std::mem::take(&mut self.end_position[i]),
            _ => std::mem::take(&mut self.touch_position[i]),
        };
        Event {
            kind,
            time,
            source: Some(i),
            target: i,
            generation: self.generation[i],
            position,
        }
    }
}

pub(crate) fn run_in(world: &DelayedWorld<'_>, replicate: u64, opts: RunOptions) -> Result<EpidemicOutcome> {
    let n = world.len();
    let mut st = State {
        particles: (0..n).map(|i| ParticleRecord::new(i, world.cloud().point(i).to_vec())).collect(),
        generation: vec![0; n],
        end_position: vec![Vec::new(); n],
        touch_position: vec![Vec::new(); n],
        heap: BinaryHeap::new(),
        records: Vec::new(),
        truncated: false,
    };
    let mut tracker = ProxyTracker::new(world.config().proxy);
    let mut events = Vec::new();
    let mut stopped_early = false;

    let mut next = Some(st.infect(world, 0, 0.0, None, 0)?);
    loop {
        if let Some(e) = next.take() {
            tracker.observe(e.kind, e.generation);
            if opts.record_events {
                events.push(e);
            }
        }
        if opts.stop_early && tracker.decided() {
            stopped_early = !st.heap.is_empty();
            break;
        }
        let Some(Reverse(k)) = st.heap.pop() else { break };
        let (src, tgt) = (k.source as usize, k.target as usize);
        next = match k.kind {
            EventKind::Removal => {
                st.particles[tgt].remove()?;
                Some(st.own_event(k.kind, k.time, tgt))
            }
            EventKind::BoundaryTouch => Some(st.own_event(k.kind, k.time, tgt)),
            EventKind::Infection => {
                let live = st.particles[tgt].status() == Status::Susceptible
                    && st.particles[src].status() == Status::Infected;
                if live {
                    let g = st.generation[src] + 1;
                    Some(st.infect(world, tgt, k.time, Some(src), g)?)
                } else {
                    None
                }
            }
        };
    }

    Ok(EpidemicOutcome {
        replicate,
        particles: n,
        verdict: tracker.verdict(st.truncated, st.records.len()),
        records: st.records,
        truncated: st.truncated,
        stopped_early,
        events,
    })
}
