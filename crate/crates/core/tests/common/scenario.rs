//! Long-range rewrite: after checkpoints finalize, old keys forge a heavier
//! chain from genesis and hand it to every player.

use fantomette::agents::AgentClass;
use fantomette::blockdag::{Block, BlockIx};
use fantomette::netsim::{SimConfig, Simulation};
use fantomette::rules::{bet_target, fcr, score, BetOutcome};

#[derive(Debug, Default)]
pub struct LongRange {
    pub finalized: usize,
    pub honest_score: u64,
    pub attack_len: usize,
    /// Altruistic and rational holders shown the rewrite.
    pub agents: usize,
    /// Of those, how many now see the rewrite as the heaviest tip.
    pub switched: usize,
    /// Of those, how many refuse to bet on it.
    pub alarmed: usize,
    /// Blocks created afterwards that build on the rewrite.
    pub built_on_rewrite: usize,
}

pub fn long_range(seed: u64) -> LongRange {
    let slots = 1500;
    let cfg = SimConfig {
        n_players: 9,
        slots,
        rollouts: 8,
        ..SimConfig::default()
    }
    .with_coalition(AgentClass::Rational, 2);
    let mut sim = Simulation::new(cfg, seed).expect("valid config");
    for s in 0..slots {
        sim.step(s);
    }
    let mode = sim.world.mode;
    let mut out = LongRange {
        finalized: sim.world.ckpt.finalized().len(),
        ..LongRange::default()
    };
    let honest_tip = fcr(&sim.world.dag, mode).expect("non-empty");
    out.honest_score = score(&sim.world.dag, honest_tip, mode).unwrap().value;

    let mut tip = sim.world.dag.genesis().expect("genesis");
    let mut rewrite: Vec<BlockIx> = Vec::new();
    while (rewrite.len() as u64) <= out.honest_score + 2 {
        let prev = sim.world.dag.block(tip).clone();
        let height = sim.world.dag.height(tip);
        let mut forged = None;
        'draw: for depth in 0.. {
            for (id, kp) in sim.world.keys.iter().enumerate() {
                if let Some((proof, beacon)) = sim
                    .world
                    .electorate
                    .draw(id as u32, kp, &prev, height, depth)
                {
                    let tag =
                        [b"rewrite".as_slice(), &(rewrite.len() as u32).to_be_bytes()].concat();
                    forged = Some(Block::new(prev.id, [], Some(proof), tag, id as u32, beacon));
                    break 'draw;
                }
            }
        }
        tip = sim
            .world
            .publish(forged.expect("some key wins"), slots)
            .expect("forged chain is locally valid");
        rewrite.push(tip);
    }
    out.attack_len = rewrite.len();

    let before = sim.world.dag.len();
    for h in 0..sim.holders.len() {
        if sim.holders[h].class == AgentClass::Byzantine {
            continue;
        }
        out.agents += 1;
        for ix in &rewrite {
            sim.holders[h].receive(&sim.world, *ix);
        }
        let holder = &sim.holders[h];
        let view = holder.view(&sim.world);
        if fcr(&view, mode) == Some(tip) {
            out.switched += 1;
        }
        if matches!(
            bet_target(&view, &sim.world.ckpt, &holder.finality, mode),
            Err(BetOutcome::Alarm { .. })
        ) {
            out.alarmed += 1;
        }
    }
    for s in slots..slots + 300 {
        sim.step(s);
    }
    out.built_on_rewrite = sim
        .world
        .dag
        .indices()
        .skip(before)
        .filter(|b| sim.world.dag.closure(*b).contains(rewrite[0].index()))
        .count();
    out
}
