use crate::config::ProxyThresholds;
use crate::error::{invalid, Result};

use super::outcome::{EpidemicOutcome, EventKind, SurvivalReason, Verdict};

/// Watches events in time order and remembers the first one that decides
/// the survival proxy.
#[derive(Debug, Clone)]
pub(crate) struct ProxyTracker {
    thresholds: ProxyThresholds,
    infected: usize,
    decided: Option<Verdict>,
}

impl ProxyTracker {
    pub fn new(thresholds: ProxyThresholds) -> Self {
        Self {
            thresholds,
            infected: 0,
            decided: None,
        }
    }

    pub fn observe(&mut self, kind: EventKind, generation: usize) {
        if self.decided.is_some() {
            return;
        }
        match kind {
            EventKind::Infection => {
                self.infected += 1;
                if self.infected >= self.thresholds.n_max {
                    self.decided = Some(Verdict::SurvivedProxy(SurvivalReason::InfectionCount));
                } else if generation >= self.thresholds.g_max {
                    self.decided = Some(Verdict::SurvivedProxy(SurvivalReason::Generation));
                }
            }
            EventKind::BoundaryTouch => self.decided = Some(Verdict::BoundaryCensored),
            EventKind::Removal => {}
        }
    }

    pub fn decided(&self) -> bool {
        self.decided.is_some()
    }

    pub fn verdict(&self, truncated: bool, size: usize) -> Verdict {
        match self.decided {
            Some(v) => v,
            None if truncated => Verdict::SurvivedProxy(SurvivalReason::TimeCap),
            None => Verdict::ExtinctWithSize(size),
        }
    }
}

/// Replays the event log of `outcome` against `thresholds`.
///
/// The run survives if it reaches `n_max` infections or generation `g_max`
/// before any ball comes within reach of the boundary, is censored if the
/// boundary comes first, and is otherwise extinct with its final size
/// (or survived, if some lifetime hit the time cap).
pub fn survival_proxy(outcome: &EpidemicOutcome, thresholds: ProxyThresholds) -> Result<Verdict> {
    if outcome.events.is_empty() && outcome.size() > 0 {
        return Err(invalid("the survival proxy needs a run with an event log"));
    }
    let mut t = ProxyTracker::new(thresholds);
    for e in &outcome.events {
        t.observe(e.kind, e.generation);
    }
    Ok(t.verdict(outcome.truncated, outcome.size()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::outcome::{Event, InfectionRecord};

    fn outcome(kinds: &[(EventKind, usize)]) -> EpidemicOutcome {
        let mut o = EpidemicOutcome {
            replicate: 0,
            particles: 10,
            records: Vec::new(),
            verdict: Verdict::ExtinctWithSize(0),
            truncated: false,
            stopped_early: false,
            events: Vec::new(),
        };
        for (n, &(kind, generation)) in kinds.iter().enumerate() {
            if kind == EventKind::Infection {
                o.records.push(InfectionRecord {
                    index: n,
                    time: n as f64,
                    parent: None,
                    generation,
                });
            }
            o.events.push(Event {
                kind,
                time: n as f64,
                source: None,
                target: n,
                generation,
                position: vec![0.0],
            });
        }
        o
    }

    #[test]
    fn extinct_run_reports_size() {
        let o = outcome(&[(EventKind::Infection, 0); 7]);
        let v = survival_proxy(&o, ProxyThresholds { n_max: 500, g_max: 12 }).unwrap();
        assert_eq!(v, Verdict::ExtinctWithSize(7));
    }

    #[test]
    fn count_threshold_means_survival() {
        let o = outcome(&[(EventKind::Infection, 0); 7]);
        let v = survival_proxy(&o, ProxyThresholds { n_max: 7, g_max: 12 }).unwrap();
        assert_eq!(v, Verdict::SurvivedProxy(SurvivalReason::InfectionCount));
    }

    #[test]
    fn first_decisive_event_wins() {
        let th = ProxyThresholds { n_max: 3, g_max: 12 };
        let touch_first = outcome(&[
            (EventKind::Infection, 0),
            (EventKind::BoundaryTouch, 0),
            (EventKind::Infection, 1),
            (EventKind::Infection, 1),
        ]);
        assert_eq!(survival_proxy(&touch_first, th).unwrap(), Verdict::BoundaryCensored);
        let count_first = outcome(&[
            (EventKind::Infection, 0),
            (EventKind::Infection, 1),
            (EventKind::Infection, 1),
            (EventKind::BoundaryTouch, 0),
        ]);
        assert_eq!(
            survival_proxy(&count_first, th).unwrap(),
            Verdict::SurvivedProxy(SurvivalReason::InfectionCount)
        );
    }

    #[test]
    fn generation_threshold() {
        let o = outcome(&[(EventKind::Infection, 0), (EventKind::Infection, 1), (EventKind::Infection, 2)]);
        let v = survival_proxy(&o, ProxyThresholds { n_max: 500, g_max: 2 }).unwrap();
        assert_eq!(v, Verdict::SurvivedProxy(SurvivalReason::Generation));
    }

    #[test]
    fn truncation_without_decision_is_survival() {
        let mut o = outcome(&[(EventKind::Infection, 0)]);
        o.truncated = true;
        let v = survival_proxy(&o, ProxyThresholds::default()).unwrap();
        assert_eq!(v, Verdict::SurvivedProxy(SurvivalReason::TimeCap));
    }
}
