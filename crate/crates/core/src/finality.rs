//! Decentralized checkpointing: candidates, witnesses, second witnesses and
//! rank progression.
//!
//! Whether a block is a candidate or a (second) witness depends only on its
//! past, so [`Checkpoints`] computes roles once per block of a shared store.
//! [`FinalityState`] projects those roles onto one participant's view.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::blockdag::{BlockDag, BlockIx, DagView};
use crate::vrf_beacon::ParticipantId;

/// Distinct bettors needed to justify or finalize: `⌈2n/3⌉`.
pub fn threshold(n_players: usize) -> usize {
    (2 * n_players).div_ceil(3)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Candidate {
        rank: u32,
    },
    /// Witness of the candidate `of`.
    Witness {
        of: BlockIx,
    },
    /// Second witness of the candidate `of`.
    SecondWitness {
        of: BlockIx,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Candidate,
    Justified,
    Finalized,
    Witness,
    SecondWitness,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Candidate => "candidate",
            EventKind::Justified => "justified",
            EventKind::Finalized => "finalized",
            EventKind::Witness => "witness",
            EventKind::SecondWitness => "second-witness",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FinalityEvent {
    pub block: BlockIx,
    pub rank: u32,
    pub kind: EventKind,
}

#[derive(Clone, Debug)]
struct Target {
    block: BlockIx,
    candidate_rank: Option<u32>,
    /// Candidates this block witnesses.
    witness_of: Vec<BlockIx>,
}

#[derive(Clone, Debug, Default)]
struct Info {
    /// Bettor sets within the closure, per target id; `None` once the
    /// threshold is met.
    tracked: Vec<(u32, Option<FixedBitSet>)>,
    /// Targets among the ancestors.
    bets_on: Vec<u32>,
    roles: Vec<Role>,
    witness_in_chain: bool,
}

impl Info {
    fn entry(&self, t: u32) -> Option<&Option<FixedBitSet>> {
        self.tracked
            .binary_search_by_key(&t, |e| e.0)
            .ok()
            .map(|i| &self.tracked[i].1)
    }

    fn saturated(&self, t: u32) -> bool {
        matches!(self.entry(t), Some(None))
    }
}

/// Role assignment for every block of one store.
#[derive(Clone, Debug)]
pub struct Checkpoints {
    n_players: usize,
    threshold: usize,
    window: u32,
    info: Vec<Info>,
    targets: Vec<Target>,
    target_of: HashMap<BlockIx, u32>,
    candidate_rank: BTreeMap<BlockIx, u32>,
    /// Candidates of the previous rank each candidate was promoted from.
    basis: BTreeMap<BlockIx, Vec<BlockIx>>,
    justified: BTreeSet<BlockIx>,
    finalized: BTreeSet<BlockIx>,
    witness_set: FixedBitSet,
    second_witness_set: FixedBitSet,
    events: Vec<FinalityEvent>,
}

impl Checkpoints {
    pub fn new(n_players: usize, window: u32) -> Self {
        Checkpoints {
            n_players,
            threshold: threshold(n_players),
            window,
            info: Vec::new(),
            targets: Vec::new(),
            target_of: HashMap::new(),
            candidate_rank: BTreeMap::new(),
            basis: BTreeMap::new(),
            justified: BTreeSet::new(),
            finalized: BTreeSet::new(),
            witness_set: FixedBitSet::new(),
            second_witness_set: FixedBitSet::new(),
            events: Vec::new(),
        }
    }

    /// Builds the roles of every block already in `dag`.
    pub fn build(dag: &BlockDag, n_players: usize, window: u32) -> Self {
        let mut c = Self::new(n_players, window);
        c.sync(dag);
        c
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    /// Processes blocks added to `dag` since the last call.
    pub fn sync(&mut self, dag: &BlockDag) -> &[FinalityEvent] {
        let start = self.events.len();
        while self.info.len() < dag.len() {
            self.on_insert(dag, BlockIx(self.info.len() as u32));
        }
        &self.events[start..]
    }

    fn on_insert(&mut self, dag: &BlockDag, x: BlockIx) {
        self.witness_set.grow(x.index() + 1);
        self.second_witness_set.grow(x.index() + 1);
        let Some(prev) = dag.prev(x) else {
            self.info.push(Info::default());
            return;
        };

        let mut tracked: Vec<(u32, Option<FixedBitSet>)> = self.info[prev.index()].tracked.clone();
        for r in dag.refs(x) {
            merge(&mut tracked, &self.info[r.index()].tracked);
        }
        let mut bets_on = self.info[prev.index()].bets_on.clone();
        if let Some(t) = self.target_of.get(&prev) {
            if let Err(pos) = bets_on.binary_search(t) {
                bets_on.insert(pos, *t);
            }
        }
        if let Some(sender) = dag.block(x).sender {
            for t in &bets_on {
                let i = tracked
                    .binary_search_by_key(t, |e| e.0)
                    .expect("ancestor target is tracked");
                if let Some(bits) = &mut tracked[i].1 {
                    bits.grow(self.n_players.max(sender as usize + 1));
                    bits.insert(sender as usize);
                }
            }
        }

        let mut roles = Vec::new();
        let prev_info = &self.info[prev.index()];
        for (t, entry) in tracked.iter_mut() {
            let reached = matches!(entry, Some(b) if b.count_ones(..) >= self.threshold);
            if reached {
                *entry = None;
            }
            if entry.is_none() && !prev_info.saturated(*t) {
                let target = &self.targets[*t as usize];
                if target.candidate_rank.is_some() {
                    roles.push(Role::Witness { of: target.block });
                }
                for c in &target.witness_of {
                    roles.push(Role::SecondWitness { of: *c });
                }
            }
        }

        let seconded: Vec<BlockIx> = if prev.index() == 0 {
            Vec::new()
        } else if self.window == 0 {
            roles
                .iter()
                .filter_map(|r| match r {
                    Role::SecondWitness { of } => Some(*of),
                    _ => None,
                })
                .collect()
        } else {
            dag.height(x)
                .checked_sub(self.window)
                .and_then(|h| dag.ancestor_at(x, h))
                .filter(|a| self.second_witness_set.contains(a.index()))
                .map(|a| self.second_witnessed(a).collect())
                .unwrap_or_default()
        };
        let candidate_rank = if prev.index() == 0 {
            Some(1)
        } else {
            seconded.iter().map(|c| self.candidate_rank[c] + 1).max()
        };
        if let Some(rank) = candidate_rank {
            roles.push(Role::Candidate { rank });
            let basis = seconded
                .into_iter()
                .filter(|c| self.candidate_rank[c] + 1 == rank)
                .collect();
            self.basis.insert(x, basis);
        }
        roles.sort();
        roles.dedup();

        let witness_of: Vec<BlockIx> = roles
            .iter()
            .filter_map(|r| match r {
                Role::Witness { of } => Some(*of),
                _ => None,
            })
            .collect();
        let is_witness = !witness_of.is_empty();
        let is_second = roles
            .iter()
            .any(|r| matches!(r, Role::SecondWitness { .. }));
        if is_witness {
            self.witness_set.insert(x.index());
        }
        if is_second {
            self.second_witness_set.insert(x.index());
        }
        for role in &roles {
            match *role {
                Role::Candidate { rank } => {
                    self.candidate_rank.insert(x, rank);
                    self.events.push(FinalityEvent {
                        block: x,
                        rank,
                        kind: EventKind::Candidate,
                    });
                }
                Role::Witness { of } => {
                    let rank = self.candidate_rank[&of];
                    self.events.push(FinalityEvent {
                        block: x,
                        rank,
                        kind: EventKind::Witness,
                    });
                    if self.justified.insert(of) {
                        self.events.push(FinalityEvent {
                            block: of,
                            rank,
                            kind: EventKind::Justified,
                        });
                    }
                }
                Role::SecondWitness { of } => {
                    let rank = self.candidate_rank[&of];
                    self.events.push(FinalityEvent {
                        block: x,
                        rank,
                        kind: EventKind::SecondWitness,
                    });
                    if self.finalized.insert(of) {
                        self.events.push(FinalityEvent {
                            block: of,
                            rank,
                            kind: EventKind::Finalized,
                        });
                    }
                }
            }
        }

        if candidate_rank.is_some() || is_witness {
            let id = self.targets.len() as u32;
            self.targets.push(Target {
                block: x,
                candidate_rank,
                witness_of,
            });
            self.target_of.insert(x, id);
            let pos = tracked.partition_point(|e| e.0 < id);
            tracked.insert(pos, (id, Some(FixedBitSet::with_capacity(self.n_players))));
        }

        let witness_in_chain = is_witness || self.info[prev.index()].witness_in_chain;
        self.info.push(Info {
            tracked,
            bets_on,
            roles,
            witness_in_chain,
        });
    }

    pub fn len(&self) -> usize {
        self.info.len()
    }

    pub fn is_empty(&self) -> bool {
        self.info.is_empty()
    }

    pub fn roles(&self, b: BlockIx) -> &[Role] {
        &self.info[b.index()].roles
    }

    pub fn is_witness(&self, b: BlockIx) -> bool {
        self.witness_set.contains(b.index())
    }

    pub fn is_second_witness(&self, b: BlockIx) -> bool {
        self.second_witness_set.contains(b.index())
    }

    pub fn witness_set(&self) -> &FixedBitSet {
        &self.witness_set
    }

    pub fn second_witness_set(&self) -> &FixedBitSet {
        &self.second_witness_set
    }

    /// A witness lies in `Ancestors(b) ∪ {b}`.
    pub fn witness_in_chain(&self, b: BlockIx) -> bool {
        self.info[b.index()].witness_in_chain
    }

    pub fn candidate_rank(&self, b: BlockIx) -> Option<u32> {
        self.candidate_rank.get(&b).copied()
    }

    pub fn candidates(&self) -> &BTreeMap<BlockIx, u32> {
        &self.candidate_rank
    }

    /// Candidates of the previous rank that candidate `b` was promoted from.
    pub fn basis(&self, b: BlockIx) -> &[BlockIx] {
        self.basis.get(&b).map_or(&[], |v| v.as_slice())
    }

    /// Candidates that block `s` second-witnesses.
    pub fn second_witnessed(&self, s: BlockIx) -> impl Iterator<Item = BlockIx> + '_ {
        self.info[s.index()].roles.iter().filter_map(|r| match r {
            Role::SecondWitness { of } => Some(*of),
            _ => None,
        })
    }

    /// Highest rank among the candidates that `s` second-witnesses.
    pub fn second_witness_rank(&self, s: BlockIx) -> Option<u32> {
        self.second_witnessed(s)
            .filter_map(|c| self.candidate_rank(c))
            .max()
    }

    pub fn justified(&self) -> &BTreeSet<BlockIx> {
        &self.justified
    }

    pub fn finalized(&self) -> &BTreeSet<BlockIx> {
        &self.finalized
    }

    pub fn events(&self) -> &[FinalityEvent] {
        &self.events
    }

    /// Distinct bettors on `target` within `Past(x) ∪ {x}`, or `None` when
    /// `target` is not tracked or already past the threshold there.
    pub fn bettors(&self, x: BlockIx, target: BlockIx) -> Option<&FixedBitSet> {
        let t = self.target_of.get(&target)?;
        self.info[x.index()].entry(*t)?.as_ref()
    }

    /// Pairs of a second witness and a finalized candidate of the same rank
    /// that it does not see. Zero whenever checkpointing is safe.
    pub fn violations(&self, dag: &BlockDag) -> usize {
        let mut by_rank: BTreeMap<u32, Vec<BlockIx>> = BTreeMap::new();
        for c in &self.finalized {
            by_rank.entry(self.candidate_rank[c]).or_default().push(*c);
        }
        let mut count = 0;
        for s in self.second_witness_set.ones().map(|i| BlockIx(i as u32)) {
            for c in self.second_witnessed(s) {
                let rank = self.candidate_rank[&c];
                for other in &by_rank[&rank] {
                    if *other != c && !dag.closure(s).contains(other.index()) {
                        count += 1;
                    }
                }
            }
        }
        count
    }
}

fn merge(into: &mut Vec<(u32, Option<FixedBitSet>)>, from: &[(u32, Option<FixedBitSet>)]) {
    let mut out = Vec::with_capacity(into.len().max(from.len()));
    let mut a = std::mem::take(into).into_iter().peekable();
    let mut b = from.iter().peekable();
    loop {
        match (a.peek(), b.peek()) {
            (Some(x), Some(y)) if x.0 == y.0 => {
                let (t, ea) = a.next().expect("peeked");
                let (_, eb) = b.next().expect("peeked");
                let e = match (ea, eb) {
                    (Some(mut p), Some(q)) => {
                        p.union_with(q);
                        Some(p)
                    }
                    _ => None,
                };
                out.push((t, e));
            }
            (Some(x), Some(y)) if x.0 < y.0 => out.push(a.next().expect("peeked")),
            (Some(_), Some(_)) | (None, Some(_)) => out.push(b.next().expect("peeked").clone()),
            (Some(_), None) => out.push(a.next().expect("peeked")),
            (None, None) => break,
        }
    }
    *into = out;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FinalityError {
    #[error("no block has been finalized yet")]
    NotFinalized,
    #[error("membership changes are only accepted during reconfiguration")]
    WindowClosed,
    #[error("a reconfiguration is already in progress")]
    AlreadyReconfiguring,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Reconfiguration {
    /// Blocks left before the player set is frozen again.
    pub remaining: u32,
    pub joins: BTreeSet<ParticipantId>,
    pub leaves: BTreeSet<ParticipantId>,
}

/// Checkpointing status as seen by one participant.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FinalityState {
    /// Lowest rank without a finalized candidate in view.
    pub rank: u32,
    pub candidates: BTreeMap<u32, BTreeSet<BlockIx>>,
    pub justified: BTreeSet<BlockIx>,
    pub finalized: BTreeSet<BlockIx>,
    pub witnesses: BTreeMap<BlockIx, BTreeSet<BlockIx>>,
    pub second_witnesses: BTreeMap<BlockIx, BTreeSet<BlockIx>>,
    pub window: u32,
    pub player_set: BTreeSet<ParticipantId>,
    pub reconfig: Option<Reconfiguration>,
}

impl FinalityState {
    pub fn new(players: impl IntoIterator<Item = ParticipantId>, window: u32) -> Self {
        FinalityState {
            rank: 1,
            window,
            player_set: players.into_iter().collect(),
            ..Self::default()
        }
    }

    /// Whether candidate `c` is on this participant's list.
    pub fn accepted(&self, ckpt: &Checkpoints, c: BlockIx) -> bool {
        ckpt.candidate_rank(c)
            .and_then(|r| self.candidates.get(&r))
            .is_some_and(|set| set.contains(&c))
    }

    /// Incorporates a block that just entered this participant's view.
    ///
    /// Candidates at an already finalized rank are refused, as are
    /// candidates not promoted from one on the list, and so are the witness
    /// roles of refused candidates.
    pub fn update_finality(&mut self, ckpt: &Checkpoints, b: BlockIx) {
        for role in ckpt.roles(b) {
            match *role {
                Role::Candidate { rank } => {
                    let founded =
                        rank == 1 || ckpt.basis(b).iter().any(|c| self.accepted(ckpt, *c));
                    if rank >= self.rank && founded {
                        self.candidates.entry(rank).or_default().insert(b);
                    }
                }
                Role::Witness { of } if self.accepted(ckpt, of) => {
                    self.witnesses.entry(of).or_default().insert(b);
                    self.justified.insert(of);
                }
                Role::Witness { .. } => {}
                Role::SecondWitness { of } if !self.accepted(ckpt, of) => {}
                Role::SecondWitness { of } => {
                    self.second_witnesses.entry(of).or_default().insert(b);
                    self.finalized.insert(of);
                    if let Some(r) = ckpt.candidate_rank(of) {
                        self.rank = self.rank.max(r + 1);
                    }
                }
            }
        }
        if let Some(rc) = &mut self.reconfig {
            if rc.remaining == 0 {
                self.close_window();
            } else {
                rc.remaining -= 1;
            }
        }
    }

    /// Replays every block of a view in order.
    pub fn from_view<V: DagView + ?Sized>(
        view: &V,
        ckpt: &Checkpoints,
        players: impl IntoIterator<Item = ParticipantId>,
    ) -> Self {
        let mut s = Self::new(players, ckpt.window());
        for b in view.members() {
            s.update_finality(ckpt, b);
        }
        s
    }

    /// The second witness of highest rank in view, smallest id on ties,
    /// with the candidates it second-witnesses.
    pub fn latest_second_witness(
        &self,
        ckpt: &Checkpoints,
        dag: &BlockDag,
    ) -> Option<(BlockIx, Vec<BlockIx>)> {
        let mut best: Option<(u32, BlockIx)> = None;
        for set in self.second_witnesses.values() {
            for s in set {
                let r = ckpt.second_witness_rank(*s).unwrap_or(0);
                let better = match best {
                    None => true,
                    Some((br, bs)) => r > br || (r == br && dag.block(*s).id < dag.block(bs).id),
                };
                if better {
                    best = Some((r, *s));
                }
            }
        }
        best.map(|(_, s)| (s, ckpt.second_witnessed(s).collect()))
    }

    pub fn begin_reconfiguration(&mut self) -> Result<(), FinalityError> {
        if self.finalized.is_empty() {
            return Err(FinalityError::NotFinalized);
        }
        if self.reconfig.is_some() {
            return Err(FinalityError::AlreadyReconfiguring);
        }
        self.reconfig = Some(Reconfiguration {
            remaining: self.window,
            ..Reconfiguration::default()
        });
        if self.window == 0 {
            self.close_window();
        }
        Ok(())
    }

    pub fn request_join(&mut self, id: ParticipantId) -> Result<(), FinalityError> {
        let rc = self.reconfig.as_mut().ok_or(FinalityError::WindowClosed)?;
        rc.leaves.remove(&id);
        rc.joins.insert(id);
        Ok(())
    }

    pub fn request_leave(&mut self, id: ParticipantId) -> Result<(), FinalityError> {
        let rc = self.reconfig.as_mut().ok_or(FinalityError::WindowClosed)?;
        rc.joins.remove(&id);
        rc.leaves.insert(id);
        Ok(())
    }

    pub fn is_reconfiguring(&self) -> bool {
        self.reconfig.is_some()
    }

    fn close_window(&mut self) {
        if let Some(rc) = self.reconfig.take() {
            self.player_set.extend(rc.joins);
            for id in rc.leaves {
                self.player_set.remove(&id);
            }
        }
    }
}
