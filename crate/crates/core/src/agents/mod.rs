//! Strategies of the three player classes and the state they act on.

mod altruistic;
mod coalition;
mod rollout;

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::blockdag::{Block, BlockDag, BlockIx, View, ViewState};
use crate::finality::{Checkpoints, FinalityEvent, FinalityState};
use crate::hash::digest_parts;
use crate::rules::{fcr, verify_new, Electorate, ScoreMode, Violation};
use crate::vrf_beacon::{ParticipantId, VrfKeypair, VrfOracle};

pub use altruistic::altruistic_step;
pub use coalition::{byzantine_step, rational_step, ByzantineParams, RationalParams};
pub use rollout::{local_utility, RolloutModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentClass {
    Altruistic,
    Rational,
    Byzantine,
}

impl fmt::Display for AgentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentClass::Altruistic => "altruistic",
            AgentClass::Rational => "rational",
            AgentClass::Byzantine => "byzantine",
        })
    }
}

impl std::str::FromStr for AgentClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "altruistic" => Ok(AgentClass::Altruistic),
            "rational" => Ok(AgentClass::Rational),
            "byzantine" => Ok(AgentClass::Byzantine),
            other => Err(format!("unknown class `{other}`")),
        }
    }
}

/// Everything shared by all players: the block store, role bookkeeping,
/// keys and the verification oracle.
#[derive(Clone, Debug)]
pub struct World {
    pub dag: BlockDag,
    pub ckpt: Checkpoints,
    pub electorate: Electorate,
    pub oracle: VrfOracle,
    pub keys: Vec<VrfKeypair>,
    pub mode: ScoreMode,
    /// δ in slots.
    pub delay_pod: u64,
    /// Finality events with the slot they occurred in.
    pub events: Vec<(u64, FinalityEvent)>,
    /// Candidate blocks the authors dropped because they failed validation.
    pub rejected: u64,
}

impl World {
    pub fn new(n_players: usize, seed: u64, window: u32, mode: ScoreMode, delay_pod: u64) -> Self {
        let keys: Vec<VrfKeypair> = (0..n_players as u64)
            .map(|i| {
                let s = digest_parts(&[b"key", &seed.to_be_bytes(), &i.to_be_bytes()]);
                VrfKeypair::generate(&mut ChaCha20Rng::from_seed(s.0))
            })
            .collect();
        let mut oracle = VrfOracle::new();
        for k in &keys {
            oracle.register(k);
        }
        let electorate = Electorate::new(keys.iter().map(|k| k.public()).collect(), false, 1);
        let genesis = Block::genesis(digest_parts(&[b"genesis", &seed.to_be_bytes()]));
        let dag = BlockDag::with_genesis(genesis);
        let ckpt = Checkpoints::build(&dag, n_players, window);
        World {
            dag,
            ckpt,
            electorate,
            oracle,
            keys,
            mode,
            delay_pod,
            events: Vec::new(),
            rejected: 0,
        }
    }

    pub fn n_players(&self) -> usize {
        self.keys.len()
    }

    /// Validates `b` against the store and adds it.
    pub fn publish(&mut self, b: Block, slot: u64) -> Result<BlockIx, Violation> {
        if let Err(v) = verify_new(
            &self.dag,
            &b,
            &self.electorate,
            &self.oracle,
            &self.ckpt,
            self.mode,
        ) {
            self.rejected += 1;
            return Err(v);
        }
        let ix = self.dag.insert(b).expect("targets checked");
        for e in self.ckpt.sync(&self.dag) {
            self.events.push((slot, *e));
        }
        Ok(ix)
    }
}

/// Per-tip redraw bookkeeping: when the tip was first seen and the next
/// redraw depth not yet tried.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Timer {
    seen: u64,
    next_depth: u32,
}

/// One decision maker: a single altruist, or a whole coalition with a
/// shared view.
#[derive(Clone, Debug)]
pub struct AgentState {
    pub class: AgentClass,
    pub members: Vec<ParticipantId>,
    pub view: ViewState,
    pub finality: FinalityState,
    /// Own blocks not yet broadcast.
    pub withheld: Vec<BlockIx>,
    pending: Vec<BlockIx>,
    timers: BTreeMap<BlockIx, Timer>,
    pub alarms: u64,
}

impl AgentState {
    pub fn new(class: AgentClass, members: Vec<ParticipantId>, world: &World) -> Self {
        let view = ViewState::with_genesis(&world.dag);
        let mut finality =
            FinalityState::new(0..world.n_players() as ParticipantId, world.ckpt.window());
        for b in view.member_slice() {
            finality.update_finality(&world.ckpt, *b);
        }
        AgentState {
            class,
            members,
            view,
            finality,
            withheld: Vec::new(),
            pending: Vec::new(),
            timers: BTreeMap::new(),
            alarms: 0,
        }
    }

    pub fn view<'a>(&'a self, world: &'a World) -> View<'a> {
        self.view.on(&world.dag)
    }

    pub fn is_member(&self, p: ParticipantId) -> bool {
        self.members.contains(&p)
    }

    /// Takes in a delivered block; blocks whose targets are still missing
    /// wait until they arrive. Returns whether the view grew.
    pub fn receive(&mut self, world: &World, ix: BlockIx) -> bool {
        if self.view.knows(ix) {
            return false;
        }
        if !self.view.can_admit(&world.dag, ix) {
            if !self.pending.contains(&ix) {
                self.pending.push(ix);
            }
            return false;
        }
        self.admit(world, ix);
        loop {
            let before = self.pending.len();
            let mut i = 0;
            while i < self.pending.len() {
                let p = self.pending[i];
                if self.view.can_admit(&world.dag, p) {
                    self.pending.swap_remove(i);
                    self.admit(world, p);
                } else {
                    i += 1;
                }
            }
            if self.pending.len() == before {
                break;
            }
        }
        true
    }

    fn admit(&mut self, world: &World, ix: BlockIx) {
        if self.view.admit(&world.dag, ix) {
            self.finality.update_finality(&world.ckpt, ix);
        }
    }

    pub fn tip(&self, world: &World) -> BlockIx {
        fcr(&self.view(world), world.mode).expect("view holds genesis")
    }

    /// Depths not yet tried on `tip` that the redraw clock allows at `slot`.
    fn open_depths(&mut self, tip: BlockIx, slot: u64, delay_pod: u64) -> std::ops::Range<u32> {
        let t = self.timers.entry(tip).or_insert(Timer {
            seen: slot,
            next_depth: 0,
        });
        let max = ((slot - t.seen) / delay_pod.max(1)) as u32;
        t.next_depth..max.saturating_add(1).max(t.next_depth)
    }

    fn tried(&mut self, tip: BlockIx, depth: u32) {
        if let Some(t) = self.timers.get_mut(&tip) {
            t.next_depth = t.next_depth.max(depth + 1);
        }
    }

    /// Forgets timers of blocks that are no longer leaves or in `keep`.
    fn prune_timers(&mut self, keep: &[BlockIx]) {
        let leaves = self.view.leaf_slice();
        self.timers
            .retain(|b, _| leaves.contains(b) || keep.contains(b));
    }
}

/// Payload that keeps ids of otherwise identical blocks apart.
fn payload(slot: u64, depth: u32) -> Vec<u8> {
    let mut v = slot.to_be_bytes().to_vec();
    v.extend_from_slice(&depth.to_be_bytes());
    v
}

/// Own blocks of a coalition view that no own block builds on, in index
/// order. Outsiders referencing them does not matter.
fn own_frontier(state: &AgentState, world: &World) -> Vec<BlockIx> {
    let dag = &world.dag;
    let own = |b: BlockIx| dag.block(b).sender.is_some_and(|s| state.is_member(s));
    let mut out: Vec<BlockIx> = state
        .view
        .member_slice()
        .iter()
        .copied()
        .filter(|b| {
            own(*b)
                && !dag
                    .children(*b)
                    .iter()
                    .chain(dag.referrers(*b))
                    .any(|s| state.view.knows(*s) && own(*s))
        })
        .collect();
    out.sort();
    out
}
