use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Susceptible,
    Infected,
    Removed,
}

/// Epidemic state of one particle. Status only moves forward S -> I -> R.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleRecord {
    pub index: usize,
    pub origin: Vec<f64>,
    status: Status,
    infection_time: Option<f64>,
    lifetime: Option<f64>,
}

impl ParticleRecord {
    pub fn new(index: usize, origin: Vec<f64>) -> Self {
        Self {
            index,
            origin,
            status: Status::Susceptible,
            infection_time: None,
            lifetime: None,
        }
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn infection_time(&self) -> Option<f64> {
        self.infection_time
    }

    pub fn lifetime(&self) -> Option<f64> {
        self.lifetime
    }

    pub fn removal_time(&self) -> Option<f64> {
        Some(self.infection_time? + self.lifetime?)
    }

    pub fn infect(&mut self, time: f64, lifetime: f64) -> Result<()> {
        if self.status != Status::Susceptible {
            return Err(invalid(format!(
                "particle {} cannot be infected from {:?}",
                self.index, self.status
            )));
        }
        if !(time >= 0.0 && lifetime >= 0.0) {
            return Err(invalid("infection time and lifetime must be non-negative"));
        }
        self.status = Status::Infected;
        self.infection_time = Some(time);
        self.lifetime = Some(lifetime);
        Ok(())
    }

    pub fn remove(&mut self) -> Result<()> {
        if self.status != Status::Infected {
            return Err(invalid(format!(
                "particle {} cannot be removed from {:?}",
                self.index, self.status
            )));
        }
        self.status = Status::Removed;
        Ok(())
    }
}
