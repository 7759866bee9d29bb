//! Epidemic engines.
//!
//! * [`run_delayed_percolation`]: delayed model through infection sets
//!   `J_i` and reachability in the directed graph they define.
//! * [`run_delayed_chronological`]: delayed model as a discrete-event
//!   simulation in true time order.
//! * [`run_diffusion`]: diffusion model by synchronous time stepping.
//!
//! The two delayed engines draw every random quantity from the same keyed
//! streams, so for a given replicate they describe the same realization.

mod chronological;
mod contacts;
mod diffusion;
mod outcome;
mod percolation_rep;
mod proxy;

pub use chronological::run_delayed_chronological;
pub use contacts::{infection_set_for, DelayedWorld, Reveal};
pub use diffusion::run_diffusion;
pub use outcome::{EpidemicOutcome, Event, EventKind, InfectionGraph, InfectionRecord, SurvivalReason, Verdict};
pub use percolation_rep::run_delayed_percolation;
pub use proxy::survival_proxy;

use crate::config::{validate_config, ModelKind, ScenarioConfig};
use crate::error::{Error, Result};

/// Engine switches that do not change the realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Stop at the first event that decides the survival proxy.
    pub stop_early: bool,
    pub record_events: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            stop_early: false,
            record_events: true,
        }
    }
}

impl RunOptions {
    /// Early stopping, no event log: what sweeps use.
    pub fn proxy_only() -> Self {
        Self {
            stop_early: true,
            record_events: false,
        }
    }
}

/// Runs the engine matching `cfg.model`: the chronological engine for the
/// delayed model, the time-stepped engine for the diffusion model.
pub fn run_scenario(cfg: &ScenarioConfig, replicate: u64, opts: RunOptions) -> Result<EpidemicOutcome> {
    let cfg = validate_config(cfg.clone()).map_err(Error::Config)?;
    match cfg.model {
        ModelKind::Delayed => chronological::run(&cfg, replicate, opts),
        ModelKind::Diffusion => diffusion::run(&cfg, replicate, opts),
    }
}

/// Total order on pending events: time, then kind (removals first), then
/// the generation of the acting particle, source and target. Ties in time
/// arise only from instantaneous chains and are resolved in chain order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EventKey {
    pub time: f64,
    pub kind: EventKind,
    pub generation: u32,
    pub source: u32,
    pub target: u32,
}

impl Eq for EventKey {}

impl Ord for EventKey {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.time
            .total_cmp(&o.time)
            .then(self.kind.rank().cmp(&o.kind.rank()))
            .then(self.generation.cmp(&o.generation))
            .then(self.source.cmp(&o.source))
            .then(self.target.cmp(&o.target))
    }
}

impl PartialOrd for EventKey {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
