use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use crate::config::{validate_config, ScenarioConfig};
use crate::error::{Error, Result};

use super::contacts::{DelayedWorld, Reveal};
use super::outcome::{EpidemicOutcome, Event, EventKind, InfectionGraph, InfectionRecord};
use super::proxy::ProxyTracker;
use super::EventKey;

/// Delayed model through its percolation representation.
///
/// Infection sets `J_i = {j : tau_ij < T_i}` are revealed against every
/// other particle, breadth first from the origin, giving a directed graph
/// whose vertices reachable from 0 are the infected set. Infection times
/// are then shortest-path distances with edge weights `tau_ij`, and the
/// event log is rebuilt from them. Never stops early.
pub fn run_delayed_percolation(cfg: &ScenarioConfig, replicate: u64) -> Result<(EpidemicOutcome, InfectionGraph)> {
    let cfg = validate_config(cfg.clone()).map_err(Error::Config)?;
    let world = DelayedWorld::new(&cfg, replicate);
    run_in(&world, replicate)
}

pub(crate) fn run_in(world: &DelayedWorld<'_>, replicate: u64) -> Result<(EpidemicOutcome, InfectionGraph)> {
    let mut graph = InfectionGraph::default();
    let mut reveals: BTreeMap<usize, Reveal> = BTreeMap::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        if reveals.contains_key(&i) {
            continue;
        }
        let r = world.reveal(i, |_| true)?;
        for &(j, _) in &r.contacts {
            if !reveals.contains_key(&j) {
                queue.push_back(j);
            }
        }
        graph.edges.insert(i, r.contacts.clone());
        graph.lifetimes.insert(i, r.lifetime);
        reveals.insert(i, r);
    }
    let infected = graph.reachable_from(0);
    debug_assert_eq!(infected.len(), reveals.len());

    // Shortest paths with removals and touches in the same queue, popped in
    // the order the chronological engine would pop them.
    let mut records: Vec<InfectionRecord> = Vec::with_capacity(infected.len());
    let mut heap = BinaryHeap::new();
    let mut tracker = ProxyTracker::new(world.config().proxy);
    let mut events = Vec::new();
    let mut settle = |j: usize, time: f64, parent: Option<usize>, g: usize, heap: &mut BinaryHeap<Reverse<EventKey>>| {
        records.push(InfectionRecord {
            index: j,
            time,
            parent,
            generation: g,
        });
        let r = &reveals[&j];
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
            heap.push(key(time + tau, EventKind::Infection, k));
        }
        if r.lifetime.is_finite() {
            heap.push(key(time + r.lifetime, EventKind::Removal, j));
        }
        if let Some((s, _)) = &r.touch {
            heap.push(key(time + s, EventKind::BoundaryTouch, j));
        }
        Event {
            kind: EventKind::Infection,
            time,
            source: parent,
            target: j,
            generation: g,
            position: world.cloud().point(j).to_vec(),
        }
    };
    let mut log = |e: Event| {
        tracker.observe(e.kind, e.generation);
        events.push(e);
    };
    log(settle(0, 0.0, None, 0, &mut heap));
    let mut done = std::collections::BTreeSet::from([0usize]);
    while let Some(Reverse(k)) = heap.pop() {
        let (src, tgt) = (k.source as usize, k.target as usize);
        let e = match k.kind {
            EventKind::Infection => {
                if !done.insert(tgt) {
                    continue;
                }
                settle(tgt, k.time, Some(src), k.generation as usize + 1, &mut heap)
            }
            EventKind::Removal => Event {
                kind: k.kind,
                time: k.time,
                source: Some(tgt),
                target: tgt,
                generation: k.generation as usize,
                position: reveals[&tgt].end_position.clone(),
            },
            EventKind::BoundaryTouch => Event {
                kind: k.kind,
                time: k.time,
                source: Some(tgt),
                target: tgt,
                generation: k.generation as usize,
                position: reveals[&tgt].touch.as_ref().map(|t| t.1.clone()).unwrap_or_default(),
            },
        };
        log(e);
    }
    let truncated = reveals.values().any(|r| r.truncated);
    let outcome = EpidemicOutcome {
        replicate,
        particles: world.len(),
        verdict: tracker.verdict(truncated, records.len()),
        records,
        truncated,
        stopped_early: false,
        events,
    };
    Ok((outcome, graph))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Rho;
    use crate::diffusion::DiffusionSpec;
    use crate::engine::{chronological, RunOptions};
    use crate::percolation::instant_closure;
    use crate::sampling::PointCloud;

    #[test]
    fn agrees_with_chronological_engine() {
        let mut cfg = ScenarioConfig::canonical(2, 0.6, 0.7, 8.0);
        cfg.seed = 21;
        for rep in 0..25 {
            let w = DelayedWorld::new(&cfg, rep);
            let (a, g) = run_in(&w, rep).unwrap();
            let b = chronological::run_in(&w, rep, RunOptions::default()).unwrap();
            assert_eq!(a.infected_set(), b.infected_set());
            assert_eq!(a.parent_map(), b.parent_map());
            assert_eq!(a.events, b.events);
            assert_eq!(a.verdict, b.verdict);
            assert_eq!(g.reachable_from(0), a.infected_set());
        }
    }

    #[test]
    fn agrees_with_chronological_engine_finite_rho() {
        let mut cfg = ScenarioConfig::canonical(2, 0.8, 0.5, 8.0);
        cfg.rho = Rho::Finite(2.0);
        cfg.seed = 5;
        for rep in 0..25 {
            let w = DelayedWorld::new(&cfg, rep);
            let (a, _) = run_in(&w, rep).unwrap();
            let b = chronological::run_in(&w, rep, RunOptions::default()).unwrap();
            assert_eq!(a.events, b.events);
        }
    }

    #[test]
    fn frozen_particles_give_the_disk_graph_component() {
        let mut cfg = ScenarioConfig::canonical(2, 1.2, 1.0, 6.0);
        cfg.diffusion = DiffusionSpec::zero_motion(2);
        for rep in 0..10 {
            let w = DelayedWorld::new(&cfg, rep);
            let (o, _) = run_in(&w, rep).unwrap();
            let all: Vec<usize> = (1..w.len()).collect();
            let mut expect = instant_closure(w.cloud(), 0, &all, 1.0);
            expect.push(0);
            expect.sort_unstable();
            assert_eq!(o.infected_set(), expect);
        }
    }

    #[test]
    fn earlier_contact_wins_a_race() {
        // Everyone drifts right at unit speed; 1 is infected at once and
        // reaches 2's ball at t = 1.5, half a unit before 0 does.
        let drift = DiffusionSpec::Linear {
            drift_offset: vec![1.0],
            drift_matrix: vec![vec![0.0]],
            sigma: vec![vec![0.0]],
        };
        let mut cfg = ScenarioConfig::canonical(1, 1.0, 0.0, 50.0);
        cfg.diffusion = drift;
        cfg.numerics.max_horizon = 5.0;
        cfg.numerics.bridge_correction = false;
        let cloud = PointCloud::from_points(1, &[[0.0], [0.5], [3.0]]);
        let w = DelayedWorld::with_cloud(&cfg, 0, cloud);
        let (a, _) = run_in(&w, 0).unwrap();
        let b = chronological::run_in(&w, 0, RunOptions::default()).unwrap();
        for o in [&a, &b] {
            assert_eq!(o.parent_map()[&2], 1);
            let t = o.records.iter().find(|r| r.index == 2).unwrap().time;
            assert!((t - 1.5).abs() < 2e-3, "{t}");
        }
    }

    #[test]
    fn frozen_pair_infection_probability() {
        // Still particles at distance 0.5 with rho = 1, alpha = 1:
        // P(j infected) = rho / (rho + alpha).
        let mut cfg = ScenarioConfig::canonical(1, 1.0, 1.0, 50.0);
        cfg.diffusion = DiffusionSpec::zero_motion(1);
        cfg.rho = Rho::Finite(1.0);
        let cloud = PointCloud::from_points(1, &[[0.0], [0.5]]);
        let n = 4000;
        let hit = (0..n)
            .filter(|&rep| run_in(&DelayedWorld::with_cloud(&cfg, rep, cloud.clone()), rep).unwrap().0.size() == 2)
            .count() as f64
            / n as f64;
        assert!((hit - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(), "{hit}");
    }
}
