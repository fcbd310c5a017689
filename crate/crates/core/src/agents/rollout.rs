//! Monte-Carlo estimate of whether releasing private blocks now beats
//! keeping them.
//!
//! A rollout plays `horizon` slots on top of the real store. Altruists are
//! modelled as one population: whenever the public tip changes, a
//! binomial number of them win and bet on it, and their blocks reach the
//! public and the coalition after a sampled delay. Speculative blocks carry
//! no proof and are removed from the store once the rollout is scored.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Exp};

use super::{AgentState, World};
use crate::blockdag::{Block, BlockDag, BlockIx, DagView, View, ViewState};
use crate::hash::{digest_parts, Hash256};
use crate::rules::{admissible_refs, fcr, ScoreMode};
use crate::vrf_beacon::ParticipantId;

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutModel {
    pub horizon: u64,
    pub rollouts: usize,
    pub withhold_depth: usize,
    pub n_altruistic: u64,
    pub p: f64,
    pub delay_mean: f64,
    pub delta_cap: u64,
    pub k: usize,
    pub c: f64,
    pub pun: f64,
    pub reward_floor: bool,
}

impl RolloutModel {
    fn delay(&self, rng: &mut ChaCha20Rng) -> u64 {
        let x: f64 = Exp::new(1.0 / self.delay_mean)
            .expect("positive mean")
            .sample(rng);
        (x.ceil() as u64).clamp(1, self.delta_cap)
    }

    /// Compares the two options over the same seeds.
    pub fn should_release(&self, state: &AgentState, world: &mut World, seed: u64) -> bool {
        let public = public_view(state, &world.dag);
        let (mut release, mut keep) = (0.0, 0.0);
        for r in 0..self.rollouts as u64 {
            let s = digest_parts(&[b"rollout", &seed.to_be_bytes(), &r.to_be_bytes()]).prefix_u64();
            release += self.rollout(state, &public, world, true, s);
            keep += self.rollout(state, &public, world, false, s);
        }
        release >= keep
    }

    /// Coalition utility of one rollout.
    pub fn rollout(
        &self,
        state: &AgentState,
        public: &ViewState,
        world: &mut World,
        release: bool,
        seed: u64,
    ) -> f64 {
        let mode = world.mode;
        let dag = &mut world.dag;
        let mark = dag.len();
        let first = state.withheld[0];
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut cv = state.view.clone();
        let mut pv = public.clone();
        let mut to_public: Vec<(u64, BlockIx)> = Vec::new();
        let mut to_coalition: Vec<(u64, BlockIx)> = Vec::new();
        let mut hidden: Vec<BlockIx> = Vec::new();
        if release {
            for w in &state.withheld {
                to_public.push((self.delay(&mut rng), *w));
            }
        } else {
            hidden.extend(&state.withheld);
        }
        let outsider = (0..).find(|i| !state.is_member(*i)).expect("some outsider");
        let author = state.members[0];
        let n_c = state.members.len() as u64;
        let wins_alt = Binomial::new(self.n_altruistic, self.p).expect("valid p");
        let wins_c = Binomial::new(n_c, self.p).expect("valid p");
        let (mut last_pub, mut last_coal) = (None, None);
        let mut counter = 0u32;

        for t in 1..=self.horizon {
            deliver(dag, &mut pv, &mut to_public, t);
            deliver(dag, &mut cv, &mut to_coalition, t);

            let ptip = fcr(&pv.on(dag), mode).expect("genesis");
            if last_pub != Some(ptip) {
                last_pub = Some(ptip);
                for _ in 0..wins_alt.sample(&mut rng) {
                    let refs = admissible_refs(dag, None, ptip, pv.on(dag).leaves(), mode);
                    let ix = speculate(dag, ptip, &refs, outsider, &mut counter);
                    to_public.push((t + self.delay(&mut rng), ix));
                    to_coalition.push((t + self.delay(&mut rng), ix));
                }
            }

            loop {
                let ctip = fcr(&cv.on(dag), mode).expect("genesis");
                if last_coal == Some(ctip) || wins_c.sample(&mut rng) == 0 {
                    last_coal = Some(ctip);
                    break;
                }
                let refs = admissible_refs(dag, None, ctip, cv.on(dag).leaves(), mode);
                let ix = speculate(dag, ctip, &refs, author, &mut counter);
                cv.admit(dag, ix);
                last_coal = None;
                if release {
                    to_public.push((t + self.delay(&mut rng), ix));
                } else {
                    hidden.push(ix);
                }
            }
            if !release && hidden.len() >= self.withhold_depth {
                for h in hidden.drain(..) {
                    to_public.push((t + self.delay(&mut rng), h));
                }
            }
        }

        let mut end = cv;
        for ix in pv.member_slice() {
            end.admit(dag, *ix);
        }
        for ix in (mark..dag.len()).map(|i| BlockIx(i as u32)) {
            end.admit(dag, ix);
        }
        let u = local_utility(
            &end.on(dag),
            &state.members,
            first,
            self.k,
            self.c,
            self.pun,
            self.reward_floor,
            mode,
        );
        dag.truncate(mark);
        u
    }
}

/// The coalition's view without its private blocks.
fn public_view(state: &AgentState, dag: &BlockDag) -> ViewState {
    let mut pv = ViewState::new();
    for ix in state.view.member_slice() {
        if !state.withheld.contains(ix) {
            pv.admit(dag, *ix);
        }
    }
    pv
}

fn deliver(dag: &BlockDag, view: &mut ViewState, queue: &mut Vec<(u64, BlockIx)>, t: u64) {
    loop {
        let before = queue.len();
        queue.retain(|(due, ix)| !(*due <= t && (view.knows(*ix) || view.admit(dag, *ix))));
        if queue.len() == before {
            break;
        }
    }
}

fn speculate(
    dag: &mut BlockDag,
    prev: BlockIx,
    refs: &[BlockIx],
    sender: ParticipantId,
    counter: &mut u32,
) -> BlockIx {
    *counter += 1;
    let b = Block::new(
        dag.block(prev).id,
        refs.iter().map(|r| dag.block(*r).id),
        None,
        [b"rollout".as_slice(), &counter.to_be_bytes()].concat(),
        sender,
        Hash256::ZERO,
    );
    dag.insert(b).expect("speculative targets exist")
}

/// Utility of `members`' blocks from index `from` on, judged against the
/// stretch of the main chain built since then: a main-chain block earns its
/// reward, a block whose anticone holds more than `k` of those main-chain
/// blocks is punished, anything else is neutral.
#[allow(clippy::too_many_arguments)]
pub fn local_utility(
    view: &View<'_>,
    members: &[ParticipantId],
    from: BlockIx,
    k: usize,
    c: f64,
    pun: f64,
    reward_floor: bool,
    mode: ScoreMode,
) -> f64 {
    let dag = view.dag();
    let Some(tip) = fcr(view, mode) else {
        return 0.0;
    };
    let chain: Vec<BlockIx> = std::iter::once(tip)
        .chain(dag.ancestor_chain(tip))
        .take_while(|b| *b >= from)
        .collect();
    let mut u = 0.0;
    for b in view.members() {
        if b < from || !dag.block(b).sender.is_some_and(|s| members.contains(&s)) {
            continue;
        }
        if chain.contains(&b) {
            let n = dag.refs(b).len();
            u += c * if reward_floor { n.max(1) } else { n } as f64;
        } else {
            let anticone = chain
                .iter()
                .filter(|m| {
                    !dag.closure(**m).contains(b.index()) && !dag.closure(b).contains(m.index())
                })
                .count();
            if anticone > k {
                u -= pun;
            }
        }
    }
    u
}
