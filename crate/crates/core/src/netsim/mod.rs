//! Slot-based simulation: exponential message delays capped at Δ, the
//! three player classes, and per-run metrics.

mod config;
mod engine;
mod metrics;
mod output;

use rayon::prelude::*;

pub use config::{ConfigError, SimConfig};
pub use engine::{run, run_seed, Simulation};
pub use metrics::{longest_fork, EventRow, PlayerPayoff, RunMetrics};
pub use output::{
    write_events, write_metrics, write_payoffs, EVENTS_HEADER, METRICS_HEADER, PAYOFFS_HEADER,
};

use crate::agents::AgentClass;

/// `cfg.runs` runs for each coalition size, ordered by size then run.
/// Runs execute in parallel; the result does not depend on scheduling.
pub fn sweep(
    cfg: &SimConfig,
    sizes: &[usize],
    class: AgentClass,
) -> Result<Vec<RunMetrics>, ConfigError> {
    let jobs: Vec<(usize, usize)> = sizes
        .iter()
        .flat_map(|s| (0..cfg.runs).map(move |r| (*s, r)))
        .collect();
    let configs: Vec<SimConfig> = sizes
        .iter()
        .map(|s| cfg.with_coalition(class, *s))
        .collect();
    for c in &configs {
        c.validate()?;
    }
    jobs.par_iter()
        .map(|(s, r)| {
            let c = &configs[sizes.iter().position(|x| x == s).expect("listed size")];
            run(c, *r, class)
        })
        .collect()
}

/// Mean of `f` over the runs with coalition size `size`.
pub fn mean_at(rows: &[RunMetrics], size: usize, f: impl Fn(&RunMetrics) -> f64) -> f64 {
    let xs: Vec<f64> = rows
        .iter()
        .filter(|m| m.coalition_size == size)
        .map(f)
        .collect();
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}
