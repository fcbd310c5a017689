//! Caucus leader election: VRF keys and proofs, the evolving random beacon,
//! eligibility, proof-of-delay redraws, commit delay and leader rotation.

mod beacon;
mod vrf;

pub use beacon::{
    check_eligibility, find_leaders, fold_beacon, proof_of_delay, redraw_input, rotation_allowed,
    target_for, verify_eligibility, BeaconConfig, BeaconError, BeaconState, Commitment, Draw,
    EligibilityProof, ParticipantId,
};
pub use vrf::{vrf_prove, PublicKey, SecretKey, VrfKeypair, VrfOracle, VrfOutput, VrfVerifier};
