use super::fcr::{fcr, ScoreMode};
use super::validity::{check_finality_rules, Electorate};
use crate::blockdag::{Block, BlockDag, BlockIx, DagView, SetView};
use crate::finality::{Checkpoints, FinalityState};
use crate::vrf_beacon::{ParticipantId, VrfKeypair};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BetOutcome {
    Bet(Box<Block>),
    NotEligible,
    /// The fork-choice tip does not descend from any candidate of the
    /// participant's latest second witness.
    Alarm {
        second_witness: BlockIx,
        tip: BlockIx,
    },
}

/// Greedily keeps the references from `candidates` (in order) that leave
/// `tip` as the fork choice of the new block's past and, given `ckpt`,
/// satisfy the witness rules.
pub fn admissible_refs(
    dag: &BlockDag,
    ckpt: Option<&Checkpoints>,
    tip: BlockIx,
    candidates: impl IntoIterator<Item = BlockIx>,
    mode: ScoreMode,
) -> Vec<BlockIx> {
    let mut refs: Vec<BlockIx> = Vec::new();
    for c in candidates {
        if c == tip || dag.closure(tip).contains(c.index()) {
            continue;
        }
        refs.push(c);
        let past = SetView::union_of(dag, std::iter::once(tip).chain(refs.iter().copied()));
        let ok = fcr(&past, mode) == Some(tip)
            && ckpt.is_none_or(|c| check_finality_rules(dag, c, tip, refs.iter().copied()).is_ok());
        if !ok {
            refs.pop();
        }
    }
    refs
}

/// The tip a participant may bet on, or the alarm raised when the chosen
/// tip abandons their latest finalized candidates.
pub fn bet_target<V: DagView + ?Sized>(
    view: &V,
    ckpt: &Checkpoints,
    finality: &FinalityState,
    mode: ScoreMode,
) -> Result<BlockIx, BetOutcome> {
    let dag = view.dag();
    let tip = fcr(view, mode).expect("view holds genesis");
    if let Some((s, cands)) = finality.latest_second_witness(ckpt, dag) {
        if !cands.iter().any(|c| *c == tip || dag.is_ancestor(*c, tip)) {
            return Err(BetOutcome::Alarm {
                second_witness: s,
                tip,
            });
        }
    }
    Ok(tip)
}

/// Betting procedure: fork choice, long-range check, lottery, then a block
/// referencing every other leaf that keeps it valid.
#[allow(clippy::too_many_arguments)]
pub fn make_bet<V: DagView + ?Sized>(
    view: &V,
    ckpt: &Checkpoints,
    finality: &FinalityState,
    electorate: &Electorate,
    id: ParticipantId,
    kp: &VrfKeypair,
    depth: u32,
    txset: Vec<u8>,
    mode: ScoreMode,
) -> BetOutcome {
    let dag = view.dag();
    let tip = match bet_target(view, ckpt, finality, mode) {
        Ok(t) => t,
        Err(alarm) => return alarm,
    };
    let Some((proof, beacon)) = electorate.draw(id, kp, dag.block(tip), dag.height(tip), depth)
    else {
        return BetOutcome::NotEligible;
    };
    let refs = admissible_refs(dag, Some(ckpt), tip, view.leaves(), mode);
    BetOutcome::Bet(Box::new(Block::new(
        dag.block(tip).id,
        refs.iter().map(|r| dag.block(*r).id),
        Some(proof),
        txset,
        id,
        beacon,
    )))
}
