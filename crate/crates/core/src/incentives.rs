//! End-of-game utility: rewards for winner blocks, punishments for losers
//! and for pairs of a player's own blocks that ignore each other.

use std::collections::BTreeMap;

use crate::blockdag::{bcpc, BlockDag, BlockId, BlockIx, DagView};
use crate::rules::{label, Label, LabelMap, ScoreMode};
use crate::vrf_beacon::ParticipantId;

/// Which blocks enter the self-unawareness punishment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairScope {
    /// Every block that reached at least one view.
    #[default]
    Broadcast,
    /// Only blocks of the common prefix.
    Bcpc,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SettleParams {
    pub c: f64,
    pub pun: f64,
    pub bigpun: f64,
    pub k: usize,
    /// Count a block with no extra references as one reference.
    pub reward_floor: bool,
    pub pair_scope: PairScope,
    pub score_mode: ScoreMode,
}

impl Default for SettleParams {
    fn default() -> Self {
        SettleParams {
            c: 1.0,
            pun: 6.0,
            bigpun: 10.0,
            k: 3,
            reward_floor: true,
            pair_scope: PairScope::Broadcast,
            score_mode: ScoreMode::Induced,
        }
    }
}

impl SettleParams {
    pub fn rwd(&self, n_leaf: usize) -> f64 {
        let n = if self.reward_floor {
            n_leaf.max(1)
        } else {
            n_leaf
        };
        n as f64 * self.c
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Payoff {
    pub player: ParticipantId,
    pub reward_sum: f64,
    pub winner_count: u64,
    pub pun_count: u64,
    pub bigpun_count: u64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct Settlement {
    pub common: BlockDag,
    pub labels: LabelMap,
    pub payoffs: Vec<Payoff>,
}

/// Unordered pairs of `player`'s blocks with neither in the other's past.
pub fn own_unaware_pairs<V: DagView + ?Sized>(
    view: &V,
    player: ParticipantId,
) -> Vec<(BlockId, BlockId)> {
    let dag = view.dag();
    let own: Vec<BlockIx> = view
        .members()
        .into_iter()
        .filter(|b| dag.block(*b).sender == Some(player))
        .collect();
    let mut out = Vec::new();
    for (i, a) in own.iter().enumerate() {
        for b in &own[i + 1..] {
            if !dag.closure(*a).contains(b.index()) && !dag.closure(*b).contains(a.index()) {
                out.push((dag.block(*a).id, dag.block(*b).id));
            }
        }
    }
    out
}

/// Merges several views into one store holding every block any of them knows.
pub fn union_dag<V: DagView>(views: &[V]) -> BlockDag {
    let mut blocks: BTreeMap<(usize, BlockId), &crate::blockdag::Block> = BTreeMap::new();
    for v in views {
        let dag = v.dag();
        for ix in v.members() {
            let b = dag.block(ix);
            blocks.insert((dag.closure(ix).count_ones(..), b.id), b);
        }
    }
    let mut out = BlockDag::new();
    for b in blocks.into_values() {
        if !out.contains_id(&b.id) {
            out.insert(b.clone()).expect("views are downward closed");
        }
    }
    out
}

/// Labels the common prefix of `views` and evaluates every player's utility.
pub fn settle<V: DagView>(views: &[V], n_players: usize, params: &SettleParams) -> Settlement {
    let common = bcpc(views);
    let labels = label(&common, params.k, params.score_mode);
    let mut payoffs: Vec<Payoff> = (0..n_players as ParticipantId)
        .map(|player| Payoff {
            player,
            reward_sum: 0.0,
            winner_count: 0,
            pun_count: 0,
            bigpun_count: 0,
            total: 0.0,
        })
        .collect();
    for (ix, l) in &labels.labels {
        let b = common.block(*ix);
        let Some(p) = b.sender.and_then(|s| payoffs.get_mut(s as usize)) else {
            continue;
        };
        match l {
            Label::Winner => {
                p.reward_sum += params.rwd(b.leaves.len());
                p.winner_count += 1;
            }
            Label::Loser => p.pun_count += 1,
            Label::Neutral => {}
        }
    }
    let pairs_in = match params.pair_scope {
        PairScope::Bcpc => None,
        PairScope::Broadcast => Some(union_dag(views)),
    };
    let scope: &BlockDag = pairs_in.as_ref().unwrap_or(&common);
    let mut by_player: Vec<Vec<BlockIx>> = vec![Vec::new(); n_players];
    for ix in scope.indices() {
        if let Some(s) = scope.block(ix).sender {
            if let Some(v) = by_player.get_mut(s as usize) {
                v.push(ix);
            }
        }
    }
    for (p, own) in payoffs.iter_mut().zip(&by_player) {
        for (i, a) in own.iter().enumerate() {
            for b in &own[i + 1..] {
                if !scope.closure(*b).contains(a.index()) {
                    p.bigpun_count += 1;
                }
            }
        }
        p.total =
            p.reward_sum - params.pun * p.pun_count as f64 - params.bigpun * p.bigpun_count as f64;
    }
    Settlement {
        common,
        labels,
        payoffs,
    }
}
