use crate::hash::{digest, Hash256};
use crate::vrf_beacon::{EligibilityProof, ParticipantId};

pub type BlockId = Hash256;

/// `B = (B_prev, B_leaf, π, txset)`, plus sender and carried beacon value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub id: BlockId,
    /// The bet. `None` only for genesis.
    pub prev: Option<BlockId>,
    /// Reference edges, never containing `prev` and free of duplicates.
    pub leaves: Vec<BlockId>,
    pub proof: Option<EligibilityProof>,
    pub txset: Vec<u8>,
    pub sender: Option<ParticipantId>,
    /// `R(B)`, the beacon value that blocks betting on this one draw against.
    pub beacon: Hash256,
}

impl Block {
    pub fn genesis(beacon: Hash256) -> Block {
        Self::assemble(None, Vec::new(), None, Vec::new(), None, beacon)
    }

    pub fn new(
        prev: BlockId,
        leaves: impl IntoIterator<Item = BlockId>,
        proof: Option<EligibilityProof>,
        txset: Vec<u8>,
        sender: ParticipantId,
        beacon: Hash256,
    ) -> Block {
        let mut refs: Vec<BlockId> = Vec::new();
        for l in leaves {
            if l != prev && !refs.contains(&l) {
                refs.push(l);
            }
        }
        Self::assemble(Some(prev), refs, proof, txset, Some(sender), beacon)
    }

    fn assemble(
        prev: Option<BlockId>,
        leaves: Vec<BlockId>,
        proof: Option<EligibilityProof>,
        txset: Vec<u8>,
        sender: Option<ParticipantId>,
        beacon: Hash256,
    ) -> Block {
        let mut b = Block {
            id: Hash256::ZERO,
            prev,
            leaves,
            proof,
            txset,
            sender,
            beacon,
        };
        b.id = digest(&b.canonical_bytes());
        b
    }

    /// Serialization hashed into the block id. Fields are length-prefixed so
    /// distinct blocks cannot share an encoding.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut v = Vec::with_capacity(128 + 32 * self.leaves.len() + self.txset.len());
        match &self.prev {
            Some(p) => {
                v.push(1);
                v.extend_from_slice(p.as_bytes());
            }
            None => v.push(0),
        }
        v.extend_from_slice(&(self.leaves.len() as u32).to_be_bytes());
        for l in &self.leaves {
            v.extend_from_slice(l.as_bytes());
        }
        match &self.proof {
            Some(p) => {
                v.push(1);
                v.extend_from_slice(&p.to_bytes());
            }
            None => v.push(0),
        }
        v.extend_from_slice(&(self.txset.len() as u32).to_be_bytes());
        v.extend_from_slice(&self.txset);
        match self.sender {
            Some(s) => {
                v.push(1);
                v.extend_from_slice(&s.to_be_bytes());
            }
            None => v.push(0),
        }
        v.extend_from_slice(self.beacon.as_bytes());
        v
    }

    pub fn is_genesis(&self) -> bool {
        self.prev.is_none()
    }

    /// Bet edge followed by reference edges.
    pub fn targets(&self) -> impl Iterator<Item = &BlockId> {
        self.prev.iter().chain(self.leaves.iter())
    }

    /// Fork-choice tie-break: `H(y)` of the eligibility proof. Blocks without
    /// a proof fall back to their id.
    pub fn tiebreak(&self) -> Hash256 {
        match &self.proof {
            Some(p) => p.ticket(),
            None => self.id,
        }
    }

    /// Digest of the eligibility proof, used in snapshots.
    pub fn proof_hash(&self) -> Hash256 {
        match &self.proof {
            Some(p) => digest(&p.to_bytes()),
            None => Hash256::ZERO,
        }
    }
}
