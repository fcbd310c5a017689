use fixedbitset::FixedBitSet;

use super::engine::Simulation;
use crate::agents::AgentClass;
use crate::blockdag::{BlockDag, BlockIx};
use crate::finality::EventKind;
use crate::incentives::Settlement;

#[derive(Clone, Debug, PartialEq)]
pub struct PlayerPayoff {
    pub player: u32,
    pub class: AgentClass,
    pub reward_sum: f64,
    pub pun_count: u64,
    pub bigpun_count: u64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventRow {
    pub slot: u64,
    pub rank: u32,
    pub block: String,
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub run_id: usize,
    pub coalition_size: usize,
    pub class: AgentClass,
    pub longest_fork: usize,
    /// Share of main-chain blocks (genesis excluded) by author class.
    pub quality_altruistic: f64,
    pub quality_coalition: f64,
    pub payoff_altruistic: f64,
    pub payoff_coalition: f64,
    pub convergence_slot: Option<u64>,
    pub finality_violations: usize,
    pub main_chain_len: usize,
    pub blocks: usize,
    pub rejected: u64,
    pub alarms: u64,
    pub finalized: usize,
    pub max_delivery: u64,
    pub payoffs: Vec<PlayerPayoff>,
    pub events: Vec<EventRow>,
}

/// Longest run of consecutive bets made off the main chain.
pub fn longest_fork(dag: &BlockDag, main: &FixedBitSet) -> usize {
    let mut run = vec![0usize; dag.len()];
    let mut best = 0;
    for ix in dag.indices() {
        if main.contains(ix.index()) {
            continue;
        }
        let r = 1 + dag.prev(ix).map_or(0, |p| run[p.index()]);
        run[ix.index()] = r;
        best = best.max(r);
    }
    best
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

pub(super) fn collect(
    sim: &Simulation,
    settlement: &Settlement,
    run_id: usize,
    class: AgentClass,
    coalition_size: usize,
) -> RunMetrics {
    let common = &settlement.common;
    let mut main = FixedBitSet::with_capacity(common.len());
    for b in &settlement.labels.main_chain {
        main.insert(b.index());
    }
    let class_of = |b: BlockIx| common.block(b).sender.map(|s| sim.classes[s as usize]);
    let chain: Vec<BlockIx> = settlement
        .labels
        .main_chain
        .iter()
        .copied()
        .filter(|b| b.index() != 0)
        .collect();
    let share = |c: AgentClass| {
        if chain.is_empty() {
            0.0
        } else {
            chain.iter().filter(|b| class_of(**b) == Some(c)).count() as f64 / chain.len() as f64
        }
    };
    let payoffs: Vec<PlayerPayoff> = settlement
        .payoffs
        .iter()
        .map(|p| PlayerPayoff {
            player: p.player,
            class: sim.classes[p.player as usize],
            reward_sum: p.reward_sum,
            pun_count: p.pun_count,
            bigpun_count: p.bigpun_count,
            total: p.total,
        })
        .collect();
    let class_mean = |c: AgentClass| mean(payoffs.iter().filter(|p| p.class == c).map(|p| p.total));
    let events = sim
        .world
        .events
        .iter()
        .map(|(slot, e)| EventRow {
            slot: *slot,
            rank: e.rank,
            block: sim.world.dag.block(e.block).id.to_hex(),
            kind: e.kind,
        })
        .collect();
    let dag = &sim.world.dag;
    RunMetrics {
        run_id,
        coalition_size,
        class,
        longest_fork: longest_fork(common, &main),
        quality_altruistic: share(AgentClass::Altruistic),
        quality_coalition: if class == AgentClass::Altruistic {
            0.0
        } else {
            share(class)
        },
        payoff_altruistic: class_mean(AgentClass::Altruistic),
        payoff_coalition: if coalition_size == 0 {
            0.0
        } else {
            class_mean(class)
        },
        convergence_slot: sim.convergence_slot(),
        finality_violations: sim.world.ckpt.violations(dag),
        main_chain_len: chain.len(),
        blocks: sim.released_set().count_ones(..) - 1,
        rejected: sim.world.rejected,
        alarms: sim.holders.iter().map(|h| h.alarms).sum(),
        finalized: sim.world.ckpt.finalized().len(),
        max_delivery: sim.max_delivery,
        payoffs,
        events,
    }
}
