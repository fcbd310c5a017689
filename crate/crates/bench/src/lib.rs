//! Benchmarks live in `benches/`; this crate has no library code of its own.

use fantomette::agents::AgentClass;
use fantomette::netsim::{SimConfig, Simulation};

/// A simulated store to benchmark against.
pub fn sample_sim(players: usize, slots: u64, byzantine: usize) -> Simulation {
    let cfg = SimConfig {
        n_players: players,
        slots,
        ..SimConfig::default()
    }
    .with_coalition(AgentClass::Byzantine, byzantine);
    let mut sim = Simulation::new(cfg, 1).expect("valid config");
    sim.run();
    sim
}
