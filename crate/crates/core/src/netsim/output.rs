//! CSV artifacts. Floats carry six decimals so reruns compare byte for byte.

use std::io::Write;

use super::metrics::RunMetrics;

pub const METRICS_HEADER: [&str; 9] = [
    "run-id",
    "coalition-size",
    "class",
    "longest_fork",
    "quality_altruistic",
    "quality_coalition",
    "payoff_altruistic",
    "payoff_coalition",
    "finality_violations",
];
pub const EVENTS_HEADER: [&str; 4] = ["slot", "rank", "block-id", "event"];
pub const PAYOFFS_HEADER: [&str; 7] = [
    "run-id",
    "player-id",
    "class",
    "reward_sum",
    "pun_count",
    "bigpun_count",
    "total",
];

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_metrics<W: Write>(out: W, rows: &[RunMetrics]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for m in rows {
        w.write_record([
            m.run_id.to_string(),
            m.coalition_size.to_string(),
            m.class.to_string(),
            m.longest_fork.to_string(),
            f6(m.quality_altruistic),
            f6(m.quality_coalition),
            f6(m.payoff_altruistic),
            f6(m.payoff_coalition),
            m.finality_violations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Events of every run, run order preserved.
pub fn write_events<W: Write>(out: W, rows: &[RunMetrics]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENTS_HEADER)?;
    for m in rows {
        for e in &m.events {
            w.write_record([
                e.slot.to_string(),
                e.rank.to_string(),
                e.block.clone(),
                e.kind.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_payoffs<W: Write>(out: W, rows: &[RunMetrics]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PAYOFFS_HEADER)?;
    for m in rows {
        for p in &m.payoffs {
            w.write_record([
                m.run_id.to_string(),
                p.player.to_string(),
                p.class.to_string(),
                f6(p.reward_sum),
                p.pun_count.to_string(),
                p.bigpun_count.to_string(),
                f6(p.total),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
