//! Fixed workloads shared by the benchmarks in `benches/`.

use slither_core::config::{ModelKind, ScenarioConfig};
use slither_core::diffusion::DiffusionSpec;
use slither_core::sausage::SausageMc;

/// Near-critical delayed scenario in a moderate box.
pub fn delayed_scenario() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::canonical(2, 0.5, 1.0, 12.0);
    cfg.seed = 11;
    cfg
}

pub fn diffusion_scenario() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::canonical(2, 0.5, 1.0, 8.0);
    cfg.model = ModelKind::Diffusion;
    cfg.numerics.dt = 1e-2;
    cfg.seed = 11;
    cfg
}

pub fn sausage_mc(replicates: usize) -> SausageMc {
    SausageMc::new(2, DiffusionSpec::StandardBrownian)
        .dt(1e-3)
        .replicates(replicates)
        .points(128)
        .seed(5)
}
