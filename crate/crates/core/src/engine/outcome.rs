use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Removal,
    BoundaryTouch,
    Infection,
}

impl EventKind {
    pub(crate) fn rank(self) -> u8 {
        match self {
            EventKind::Removal => 0,
            EventKind::BoundaryTouch => 1,
            EventKind::Infection => 2,
        }
    }
}

/// One line of the event log. For removals and boundary touches `source`
/// and `target` are the particle itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub time: f64,
    pub source: Option<usize>,
    pub target: usize,
    pub generation: usize,
    pub position: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalReason {
    InfectionCount,
    Generation,
    /// Some lifetime was cut at the path horizon.
    TimeCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "detail", rename_all = "snake_case")]
pub enum Verdict {
    ExtinctWithSize(usize),
    SurvivedProxy(SurvivalReason),
    BoundaryCensored,
}

impl Verdict {
    pub fn survived(&self) -> bool {
        matches!(self, Verdict::SurvivedProxy(_))
    }

    pub fn censored(&self) -> bool {
        matches!(self, Verdict::BoundaryCensored)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfectionRecord {
    pub index: usize,
    pub time: f64,
    pub parent: Option<usize>,
    pub generation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicOutcome {
    pub replicate: u64,
    pub particles: usize,
    /// Infected particles in infection order.
    pub records: Vec<InfectionRecord>,
    pub verdict: Verdict,
    /// Some lifetime exceeded the path horizon and was truncated.
    pub truncated: bool,
    pub stopped_early: bool,
    pub events: Vec<Event>,
}

impl EpidemicOutcome {
    pub fn size(&self) -> usize {
        self.records.len()
    }

    /// Sorted indices of every infected particle.
    pub fn infected_set(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.records.iter().map(|r| r.index).collect();
        v.sort_unstable();
        v
    }

    pub fn parent_map(&self) -> BTreeMap<usize, usize> {
        self.records.iter().filter_map(|r| Some((r.index, r.parent?))).collect()
    }

    /// `|I_0|, |I_1|, ...`.
    pub fn generation_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for r in &self.records {
            if sizes.len() <= r.generation {
                sizes.resize(r.generation + 1, 0);
            }
            sizes[r.generation] += 1;
        }
        sizes
    }

    /// Writes the event log as JSON lines.
    pub fn write_events<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Directed graph of revealed infection sets: an edge `i -> j` with label
/// `tau_ij` whenever `tau_ij < T_i`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InfectionGraph {
    pub edges: BTreeMap<usize, Vec<(usize, f64)>>,
    pub lifetimes: BTreeMap<usize, f64>,
}

impl InfectionGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.values().map(Vec::len).sum()
    }

    /// Vertices reachable from `root`, sorted.
    pub fn reachable_from(&self, root: usize) -> Vec<usize> {
        let mut seen = std::collections::BTreeSet::from([root]);
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            for &(j, _) in self.edges.get(&i).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(j) {
                    stack.push(j);
                }
            }
        }
        seen.into_iter().collect()
    }

    /// Shortest hop counts from `root`.
    pub fn hop_depths(&self, root: usize) -> BTreeMap<usize, usize> {
        let mut depth = BTreeMap::from([(root, 0)]);
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            let di = depth[&i];
            for &(j, _) in self.edges.get(&i).map(Vec::as_slice).unwrap_or(&[]) {
                depth.entry(j).or_insert_with(|| {
                    queue.push_back(j);
                    di + 1
                });
            }
        }
        depth
    }
}
