//! Caucus random beacon: per-round eligibility, beacon folding, the
//! proof-of-delay redraw and the optional leader-rotation rule.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use thiserror::Error;

use super::vrf::{PublicKey, VrfKeypair, VrfOutput, VrfVerifier};
use crate::hash::{digest, Hash256, HASH_LEN};

pub type ParticipantId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BeaconError {
    #[error("participant {0} is not committed or joined too recently")]
    NotCommitted(ParticipantId),
    #[error("participant {0} already committed")]
    AlreadyCommitted(ParticipantId),
    #[error("invalid eligibility proof: {0}")]
    InvalidProof(&'static str),
    #[error("no eligible participants in round {0}")]
    NoParticipants(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Commitment {
    pub pk: PublicKey,
    /// Round of the commit transaction; `None` for founding members, which
    /// are eligible from the first round.
    pub joined: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BeaconConfig {
    /// Rounds a participant must wait after committing.
    pub x_commit: u64,
    /// Leader rotation: recent leaders sit out and the target widens.
    pub rotation: bool,
    /// Hash iterations per proof-of-delay application.
    pub pod_iters: u32,
}

impl Default for BeaconConfig {
    fn default() -> Self {
        BeaconConfig {
            x_commit: 10,
            rotation: false,
            pod_iters: 1,
        }
    }
}

/// Public beacon state of one chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BeaconState {
    pub r: Hash256,
    pub rnd: u64,
    pub commitments: BTreeMap<ParticipantId, Commitment>,
    /// Proof-of-delay applications in the current round.
    pub delay_redraws: u32,
    /// Leaders of past rounds, oldest first.
    pub leaders: Vec<ParticipantId>,
    pub config: BeaconConfig,
}

/// A revealed lottery win for one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EligibilityProof {
    pub participant: ParticipantId,
    pub y: Hash256,
    pub proof: Hash256,
    pub rnd: u64,
    pub redraw_depth: u32,
}

impl EligibilityProof {
    pub fn vrf_output(&self) -> VrfOutput {
        VrfOutput {
            y: self.y,
            proof: self.proof,
        }
    }

    /// `H(y)`; also the fork-choice tie-break value.
    pub fn ticket(&self) -> Hash256 {
        digest(self.y.as_bytes())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::with_capacity(4 + 2 * HASH_LEN + 8 + 4);
        v.extend_from_slice(&self.participant.to_be_bytes());
        v.extend_from_slice(self.y.as_bytes());
        v.extend_from_slice(self.proof.as_bytes());
        v.extend_from_slice(&self.rnd.to_be_bytes());
        v.extend_from_slice(&self.redraw_depth.to_be_bytes());
        v
    }
}

/// `F = H^p`.
pub fn proof_of_delay(r: &Hash256, p_iters: u32) -> Hash256 {
    assert!(p_iters >= 1, "proof-of-delay needs at least one iteration");
    let mut v = *r;
    for _ in 0..p_iters {
        v = digest(v.as_bytes());
    }
    v
}

/// `F^depth(r)`: the lottery input after `depth` redraws.
pub fn redraw_input(r: &Hash256, depth: u32, p_iters: u32) -> Hash256 {
    let mut v = *r;
    for _ in 0..depth {
        v = proof_of_delay(&v, p_iters);
    }
    v
}

/// `floor(H_max / n)`, or `floor(H_max / ((n + 1) / 2))` under rotation.
pub fn target_for(n: u64, rotation: bool) -> Hash256 {
    assert!(n >= 1, "target needs at least one participant");
    let h_max = BigUint::from_bytes_be(&Hash256::MAX.0);
    let t = if rotation {
        (h_max * 2u32) / (n + 1)
    } else {
        h_max / n
    };
    let bytes = t.to_bytes_be();
    let mut out = [0u8; HASH_LEN];
    out[HASH_LEN - bytes.len()..].copy_from_slice(&bytes);
    Hash256(out)
}

/// Lottery outcome for one key against one input; the building block shared
/// by [`check_eligibility`] and the simulator's per-block tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Draw {
    pub out: VrfOutput,
    pub ticket: Hash256,
}

impl Draw {
    pub fn new(kp: &VrfKeypair, input: &Hash256) -> Self {
        let out = kp.prove(input);
        Draw {
            out,
            ticket: digest(out.y.as_bytes()),
        }
    }

    pub fn wins(&self, target: &Hash256) -> bool {
        self.ticket < *target
    }
}

impl BeaconState {
    pub fn new(r: Hash256, config: BeaconConfig) -> Self {
        BeaconState {
            r,
            rnd: 0,
            commitments: BTreeMap::new(),
            delay_redraws: 0,
            leaders: Vec::new(),
            config,
        }
    }

    /// Registers a founding participant, eligible from round 0.
    pub fn add_founder(&mut self, id: ParticipantId, pk: PublicKey) {
        self.commitments.insert(id, Commitment { pk, joined: None });
    }

    /// `Commit`: records `pk` at the current round.
    pub fn commit(&mut self, id: ParticipantId, pk: PublicKey) -> Result<(), BeaconError> {
        if self.commitments.contains_key(&id) {
            return Err(BeaconError::AlreadyCommitted(id));
        }
        self.commitments.insert(
            id,
            Commitment {
                pk,
                joined: Some(self.rnd),
            },
        );
        Ok(())
    }

    pub fn is_eligible_member(&self, id: ParticipantId) -> bool {
        match self.commitments.get(&id) {
            Some(Commitment { joined: None, .. }) => true,
            Some(Commitment {
                joined: Some(j), ..
            }) => j.saturating_add(self.config.x_commit) <= self.rnd,
            None => false,
        }
    }

    /// `n_rnd`: committed participants past the commit delay.
    pub fn n_eligible(&self) -> u64 {
        self.commitments
            .keys()
            .filter(|id| self.is_eligible_member(**id))
            .count() as u64
    }

    pub fn target(&self) -> Result<Hash256, BeaconError> {
        match self.n_eligible() {
            0 => Err(BeaconError::NoParticipants(self.rnd)),
            n => Ok(target_for(n, self.config.rotation)),
        }
    }

    /// Lottery input for the current round after `depth` redraws.
    pub fn input(&self, depth: u32) -> Hash256 {
        redraw_input(&self.r, depth, self.config.pod_iters)
    }

    /// Rotation window: `floor((n_rnd - 1) / 2)` most recent rounds.
    pub fn rotation_window(&self) -> usize {
        (self.n_eligible().saturating_sub(1) / 2) as usize
    }

    /// Applies one proof-of-delay step to the current round's beacon.
    pub fn redraw(&mut self) {
        self.r = proof_of_delay(&self.r, self.config.pod_iters);
        self.delay_redraws += 1;
    }
}

/// Reveal step: returns a proof iff the participant wins at `redraw_depth`.
pub fn check_eligibility(
    state: &BeaconState,
    id: ParticipantId,
    kp: &VrfKeypair,
    redraw_depth: u32,
) -> Result<Option<EligibilityProof>, BeaconError> {
    match state.commitments.get(&id) {
        Some(c) if c.pk == kp.public() && state.is_eligible_member(id) => {}
        _ => return Err(BeaconError::NotCommitted(id)),
    }
    if state.config.rotation && !rotation_allowed(state, id, &state.leaders) {
        return Ok(None);
    }
    let target = state.target()?;
    let draw = Draw::new(kp, &state.input(redraw_depth));
    Ok(draw.wins(&target).then_some(EligibilityProof {
        participant: id,
        y: draw.out.y,
        proof: draw.out.proof,
        rnd: state.rnd,
        redraw_depth,
    }))
}

/// Verify step: checks the proof against `state` without mutating it.
pub fn verify_eligibility<V: VrfVerifier + ?Sized>(
    state: &BeaconState,
    proof: &EligibilityProof,
    oracle: &V,
) -> Result<(), BeaconError> {
    if proof.rnd != state.rnd {
        return Err(BeaconError::InvalidProof("wrong round"));
    }
    let c = state
        .commitments
        .get(&proof.participant)
        .ok_or(BeaconError::NotCommitted(proof.participant))?;
    if !state.is_eligible_member(proof.participant) {
        return Err(BeaconError::NotCommitted(proof.participant));
    }
    if state.config.rotation && !rotation_allowed(state, proof.participant, &state.leaders) {
        return Err(BeaconError::InvalidProof("leader rotation"));
    }
    let input = state.input(proof.redraw_depth);
    if !oracle.verify(&c.pk, &input, &proof.vrf_output()) {
        return Err(BeaconError::InvalidProof("vrf verification failed"));
    }
    if proof.ticket() >= state.target()? {
        return Err(BeaconError::InvalidProof("ticket above target"));
    }
    Ok(())
}

/// `R_{rnd+1} = F^d(R_rnd) ⊕ y` after verifying the proof.
pub fn fold_beacon<V: VrfVerifier + ?Sized>(
    state: &BeaconState,
    proof: &EligibilityProof,
    oracle: &V,
) -> Result<BeaconState, BeaconError> {
    verify_eligibility(state, proof, oracle)?;
    let mut next = state.clone();
    next.r = state.input(proof.redraw_depth).xor(&proof.y);
    next.rnd += 1;
    next.delay_redraws = 0;
    next.leaders.push(proof.participant);
    Ok(next)
}

/// Rejects a participant that led within the last `floor((n_rnd - 1) / 2)`
/// rounds. `history` lists past leaders, oldest first.
pub fn rotation_allowed(
    state: &BeaconState,
    participant: ParticipantId,
    history: &[ParticipantId],
) -> bool {
    let window = state.rotation_window();
    !history.iter().rev().take(window).any(|p| *p == participant)
}

/// Iterates redraw depths until some key wins; returns the depth and all
/// winners at that depth. `None` once `max_depth` is exhausted.
pub fn find_leaders(
    state: &BeaconState,
    keys: &BTreeMap<ParticipantId, VrfKeypair>,
    max_depth: u32,
) -> Option<(u32, Vec<EligibilityProof>)> {
    for depth in 0..=max_depth {
        let winners: Vec<_> = keys
            .iter()
            .filter_map(|(id, kp)| check_eligibility(state, *id, kp, depth).ok().flatten())
            .collect();
        if !winners.is_empty() {
            return Some((depth, winners));
        }
    }
    None
}
