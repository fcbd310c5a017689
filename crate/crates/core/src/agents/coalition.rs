use super::rollout::RolloutModel;
use super::{own_frontier, payload, AgentState, World};
use crate::blockdag::{Block, BlockIx, DagView};
use crate::hash::Hash256;
use crate::rules::{admissible_refs, bet_target, BetOutcome};
use crate::vrf_beacon::{EligibilityProof, ParticipantId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ByzantineParams {
    /// How many heights an own branch end may trail the fork choice and
    /// still be extended; `None` for no limit.
    pub lag: Option<u32>,
    /// Keep new blocks private while the coalition's fork choice is one of
    /// them, up to this many.
    pub withhold: Option<usize>,
}

/// Extends the fork-choice tip and the ends of the coalition's own branches
/// with every winning member, referencing own blocks only.
/// Returns the blocks broadcast this slot.
pub fn byzantine_step(
    state: &mut AgentState,
    world: &mut World,
    slot: u64,
    params: ByzantineParams,
) -> Vec<BlockIx> {
    let lag = params.lag;
    let members = state.members.clone();
    let mut out = Vec::new();
    loop {
        let main = state.tip(world);
        let h = world.dag.height(main);
        let mut tips: Vec<BlockIx> = own_frontier(state, world)
            .into_iter()
            .filter(|l| lag.is_none_or(|lag| world.dag.height(*l) + lag >= h))
            .collect();
        if !tips.contains(&main) {
            tips.push(main);
        }
        tips.sort();
        let mut made = false;
        for tip in tips {
            for depth in state.open_depths(tip, slot, world.delay_pod) {
                state.tried(tip, depth);
                for &m in &members {
                    let drawn = world.electorate.draw(
                        m,
                        &world.keys[m as usize],
                        world.dag.block(tip),
                        world.dag.height(tip),
                        depth,
                    );
                    let Some((proof, beacon)) = drawn else {
                        continue;
                    };
                    let cands = own_frontier(state, world);
                    let refs =
                        admissible_refs(&world.dag, Some(&world.ckpt), tip, cands, world.mode);
                    let b = Block::new(
                        world.dag.block(tip).id,
                        refs.iter().map(|r| world.dag.block(*r).id),
                        Some(proof),
                        payload(slot, depth),
                        m,
                        beacon,
                    );
                    if let Ok(ix) = world.publish(b, slot) {
                        state.receive(world, ix);
                        out.push(ix);
                        made = true;
                    }
                }
            }
        }
        if !made {
            break;
        }
    }
    let keep = own_frontier(state, world);
    state.prune_timers(&keep);
    let Some(depth) = params.withhold else {
        return out;
    };
    state.withheld.extend(out);
    let leading = state.withheld.contains(&state.tip(world));
    if !state.withheld.is_empty() && (!leading || state.withheld.len() >= depth) {
        std::mem::take(&mut state.withheld)
    } else {
        Vec::new()
    }
}

#[derive(Clone, Debug)]
pub struct RationalParams {
    pub model: RolloutModel,
    /// Seed of this slot's rollouts.
    pub seed: u64,
}

/// Extends the coalition's fork choice, private blocks included, with the
/// member holding the best ticket, and keeps new blocks private. Returns
/// the blocks released this slot.
pub fn rational_step(
    state: &mut AgentState,
    world: &mut World,
    slot: u64,
    params: &RationalParams,
) -> Vec<BlockIx> {
    'outer: loop {
        let tip = match bet_target(&state.view(world), &world.ckpt, &state.finality, world.mode) {
            Ok(t) => t,
            Err(BetOutcome::Alarm { .. }) => {
                state.alarms += 1;
                break;
            }
            Err(_) => unreachable!("bet_target only raises alarms"),
        };
        for depth in state.open_depths(tip, slot, world.delay_pod) {
            state.tried(tip, depth);
            let mut best: Option<(Hash256, ParticipantId, EligibilityProof, Hash256)> = None;
            for &m in &state.members {
                let drawn = world.electorate.draw(
                    m,
                    &world.keys[m as usize],
                    world.dag.block(tip),
                    world.dag.height(tip),
                    depth,
                );
                if let Some((proof, beacon)) = drawn {
                    let t = proof.ticket();
                    if best.as_ref().is_none_or(|b| t < b.0) {
                        best = Some((t, m, proof, beacon));
                    }
                }
            }
            let Some((_, m, proof, beacon)) = best else {
                continue;
            };
            let leaves = state.view(world).leaves();
            let refs = admissible_refs(&world.dag, Some(&world.ckpt), tip, leaves, world.mode);
            let b = Block::new(
                world.dag.block(tip).id,
                refs.iter().map(|r| world.dag.block(*r).id),
                Some(proof),
                payload(slot, depth),
                m,
                beacon,
            );
            if let Ok(ix) = world.publish(b, slot) {
                state.receive(world, ix);
                state.withheld.push(ix);
                continue 'outer;
            }
        }
        break;
    }
    state.prune_timers(&[]);
    if state.withheld.is_empty() {
        return Vec::new();
    }
    let release = state.members.len() == 1
        || state.withheld.len() >= params.model.withhold_depth
        || params.model.should_release(state, world, params.seed);
    if release {
        std::mem::take(&mut state.withheld)
    } else {
        Vec::new()
    }
}
