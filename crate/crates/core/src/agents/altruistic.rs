use super::{payload, AgentState, World};
use crate::blockdag::BlockIx;
use crate::rules::{make_bet, BetOutcome};

/// Bets on the fork-choice tip at every depth the redraw clock allows and
/// publishes each winning block at once. A fresh own block is a new tip and
/// is bet on in the same slot.
pub fn altruistic_step(state: &mut AgentState, world: &mut World, slot: u64) -> Vec<BlockIx> {
    let id = state.members[0];
    let mut out = Vec::new();
    'outer: loop {
        let tip = state.tip(world);
        for depth in state.open_depths(tip, slot, world.delay_pod) {
            state.tried(tip, depth);
            let outcome = make_bet(
                &state.view(world),
                &world.ckpt,
                &state.finality,
                &world.electorate,
                id,
                &world.keys[id as usize],
                depth,
                payload(slot, depth),
                world.mode,
            );
            match outcome {
                BetOutcome::Bet(b) => {
                    if let Ok(ix) = world.publish(*b, slot) {
                        state.receive(world, ix);
                        out.push(ix);
                        continue 'outer;
                    }
                }
                BetOutcome::Alarm { .. } => {
                    state.alarms += 1;
                    break;
                }
                BetOutcome::NotEligible => {}
            }
        }
        break;
    }
    state.prune_timers(&[]);
    out
}
