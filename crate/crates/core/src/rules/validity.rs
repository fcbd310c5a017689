use std::fmt;

use super::fcr::{fcr, ScoreMode};
use crate::blockdag::{Block, BlockDag, BlockIx, SetView};
use crate::finality::Checkpoints;
use crate::hash::Hash256;
use crate::vrf_beacon::{
    redraw_input, target_for, Draw, EligibilityProof, ParticipantId, PublicKey, VrfKeypair,
    VrfVerifier,
};

/// The fixed participant set of a chain and its lottery parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Electorate {
    /// Public key of participant `i` at index `i`.
    pub keys: Vec<PublicKey>,
    pub target: Hash256,
    pub pod_iters: u32,
}

impl Electorate {
    pub fn new(keys: Vec<PublicKey>, rotation: bool, pod_iters: u32) -> Self {
        let target = target_for(keys.len() as u64, rotation);
        Electorate {
            keys,
            target,
            pod_iters,
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Lottery input for betting on `prev` after `depth` redraws.
    pub fn input(&self, prev: &Block, depth: u32) -> Hash256 {
        redraw_input(&prev.beacon, depth, self.pod_iters)
    }

    /// `Eligible(prev, sk)`: the proof and the new block's beacon value when
    /// the key wins.
    pub fn draw(
        &self,
        id: ParticipantId,
        kp: &VrfKeypair,
        prev: &Block,
        prev_height: u32,
        depth: u32,
    ) -> Option<(EligibilityProof, Hash256)> {
        let input = self.input(prev, depth);
        let d = Draw::new(kp, &input);
        d.wins(&self.target).then(|| {
            (
                EligibilityProof {
                    participant: id,
                    y: d.out.y,
                    proof: d.out.proof,
                    rnd: prev_height as u64 + 1,
                    redraw_depth: depth,
                },
                input.xor(&d.out.y),
            )
        })
    }

    /// Checks that `b` carries a winning proof for betting on `prev`, signed
    /// by its sender, and folds the beacon correctly.
    pub fn check<V: VrfVerifier + ?Sized>(
        &self,
        oracle: &V,
        prev: &Block,
        prev_height: u32,
        b: &Block,
    ) -> bool {
        let (Some(p), Some(sender)) = (&b.proof, b.sender) else {
            return false;
        };
        let Some(pk) = self.keys.get(sender as usize) else {
            return false;
        };
        let input = self.input(prev, p.redraw_depth);
        p.participant == sender
            && p.rnd == prev_height as u64 + 1
            && oracle.verify(pk, &input, &p.vrf_output())
            && p.ticket() < self.target
            && b.beacon == input.xor(&p.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Violation {
    FcrMismatch,
    Ineligible,
    WitnessRule,
    SecondWitnessRule,
    UnknownTarget,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Violation::FcrMismatch => "FCR_MISMATCH",
            Violation::Ineligible => "INELIGIBLE",
            Violation::WitnessRule => "WITNESS_RULE",
            Violation::SecondWitnessRule => "SECOND_WITNESS_RULE",
            Violation::UnknownTarget => "UNKNOWN_TARGET",
        })
    }
}

impl std::error::Error for Violation {}

/// Checks on a block already placed in the store. The store is append-only,
/// so a rejected block simply never enters an honest view.
pub fn verify_block<V: VrfVerifier + ?Sized>(
    dag: &BlockDag,
    b: BlockIx,
    electorate: &Electorate,
    oracle: &V,
    ckpt: &Checkpoints,
    mode: ScoreMode,
) -> Result<(), Violation> {
    let Some(prev) = dag.prev(b) else {
        return Ok(());
    };
    if fcr(&SetView::past(dag, b), mode) != Some(prev) {
        return Err(Violation::FcrMismatch);
    }
    if !electorate.check(oracle, dag.block(prev), dag.height(prev), dag.block(b)) {
        return Err(Violation::Ineligible);
    }
    check_finality_rules(dag, ckpt, prev, dag.refs(b).iter().copied())
}

/// The same checks for a block that is not in the store yet. Targets must
/// already be present.
pub fn verify_new<V: VrfVerifier + ?Sized>(
    dag: &BlockDag,
    b: &Block,
    electorate: &Electorate,
    oracle: &V,
    ckpt: &Checkpoints,
    mode: ScoreMode,
) -> Result<(), Violation> {
    let Some(prev) = b.prev.as_ref().and_then(|p| dag.ix(p)) else {
        return Err(Violation::UnknownTarget);
    };
    let refs: Vec<BlockIx> = b.leaves.iter().filter_map(|l| dag.ix(l)).collect();
    if refs.len() != b.leaves.len() {
        return Err(Violation::UnknownTarget);
    }
    let past = SetView::union_of(dag, std::iter::once(prev).chain(refs.iter().copied()));
    if fcr(&past, mode) != Some(prev) {
        return Err(Violation::FcrMismatch);
    }
    if !electorate.check(oracle, dag.block(prev), dag.height(prev), b) {
        return Err(Violation::Ineligible);
    }
    check_finality_rules(dag, ckpt, prev, refs)
}

/// The witness and second-witness checks for a block betting on `prev` and
/// referencing `refs`.
pub fn check_finality_rules(
    dag: &BlockDag,
    ckpt: &Checkpoints,
    prev: BlockIx,
    refs: impl IntoIterator<Item = BlockIx>,
) -> Result<(), Violation> {
    let past = SetView::union_of(dag, std::iter::once(prev).chain(refs));
    let set = past.set();
    if !ckpt.witness_set().is_disjoint(set) && !ckpt.witness_in_chain(prev) {
        return Err(Violation::WitnessRule);
    }
    let mut seconds = ckpt.second_witness_set().clone();
    seconds.intersect_with(set);
    for s in seconds.ones().map(|i| BlockIx(i as u32)) {
        let ok = ckpt
            .second_witnessed(s)
            .any(|c| c == prev || dag.is_ancestor(c, prev));
        if !ok {
            return Err(Violation::SecondWitnessRule);
        }
    }
    Ok(())
}
