use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp};

use super::config::{ConfigError, SimConfig};
use super::metrics::{self, RunMetrics};
use crate::agents::{
    altruistic_step, byzantine_step, rational_step, AgentClass, AgentState, ByzantineParams,
    RationalParams, RolloutModel, World,
};
use crate::blockdag::{BlockIx, View};
use crate::hash::digest_parts;
use crate::incentives::settle;
use crate::vrf_beacon::ParticipantId;

/// Seed of run `run` under master seed `master`. Independent of the
/// coalition, so every sweep point replays the same randomness.
pub fn run_seed(master: u64, run: usize) -> u64 {
    digest_parts(&[b"run", &master.to_be_bytes(), &(run as u64).to_be_bytes()]).prefix_u64()
}

/// One game from genesis to the horizon.
pub struct Simulation {
    pub cfg: SimConfig,
    pub world: World,
    pub holders: Vec<AgentState>,
    /// Holder of each player.
    pub holder_of: Vec<usize>,
    pub classes: Vec<AgentClass>,
    queue: BTreeMap<u64, Vec<(usize, BlockIx)>>,
    rng: ChaCha20Rng,
    seed: u64,
    delay: Exp<f64>,
    /// Slot at which each block was first broadcast.
    pub released: Vec<Option<u64>>,
    /// Per altruistic holder: the prefix block at height `k0` and when it last
    /// changed.
    prefix: Vec<Option<(BlockIx, u64)>>,
    pub max_delivery: u64,
}

impl Simulation {
    pub fn new(cfg: SimConfig, seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let world = World::new(cfg.n_players, seed, cfg.w, cfg.score_mode, cfg.delay_pod);
        let classes = cfg.classes();
        let mut holders = Vec::new();
        let mut holder_of = vec![0; cfg.n_players];
        for (p, class) in classes.iter().enumerate() {
            if *class == AgentClass::Altruistic {
                holder_of[p] = holders.len();
                holders.push(AgentState::new(*class, vec![p as ParticipantId], &world));
            }
        }
        for class in [AgentClass::Byzantine, AgentClass::Rational] {
            let members: Vec<ParticipantId> = (0..cfg.n_players)
                .filter(|p| classes[*p] == class)
                .map(|p| p as ParticipantId)
                .collect();
            if !members.is_empty() {
                for m in &members {
                    holder_of[*m as usize] = holders.len();
                }
                holders.push(AgentState::new(class, members, &world));
            }
        }
        let prefix = vec![None; holders.len()];
        Ok(Simulation {
            delay: Exp::new(1.0 / cfg.delay_mean).expect("validated"),
            cfg,
            world,
            holders,
            holder_of,
            classes,
            queue: BTreeMap::new(),
            rng: ChaCha20Rng::seed_from_u64(seed),
            seed,
            released: vec![None],
            prefix,
            max_delivery: 0,
        })
    }

    fn sample_delay(&mut self) -> u64 {
        let x = self.delay.sample(&mut self.rng);
        (x.ceil() as u64).clamp(1, self.cfg.delta_cap)
    }

    fn broadcast(&mut self, from: usize, blocks: &[BlockIx], slot: u64) {
        for &b in blocks {
            if self.released.len() <= b.index() {
                self.released.resize(b.index() + 1, None);
            }
            self.released[b.index()].get_or_insert(slot);
            for h in 0..self.holders.len() {
                if h == from {
                    continue;
                }
                let d = self.sample_delay();
                self.max_delivery = self.max_delivery.max(d);
                self.queue.entry(slot + d).or_default().push((h, b));
            }
        }
    }

    fn rollout_model(&self) -> RolloutModel {
        let n_alt = self
            .classes
            .iter()
            .filter(|c| **c == AgentClass::Altruistic)
            .count();
        RolloutModel {
            horizon: self.cfg.horizon,
            rollouts: self.cfg.rollouts,
            withhold_depth: self.cfg.withhold_depth,
            n_altruistic: n_alt as u64,
            p: 1.0 / self.cfg.n_players as f64,
            delay_mean: self.cfg.delay_mean,
            delta_cap: self.cfg.delta_cap,
            k: self.cfg.k,
            c: self.cfg.c,
            pun: self.cfg.pun,
            reward_floor: self.cfg.reward_floor,
        }
    }

    pub fn step(&mut self, slot: u64) {
        if let Some(batch) = self.queue.remove(&slot) {
            for (h, b) in batch {
                self.holders[h].receive(&self.world, b);
            }
        }
        for h in 0..self.holders.len() {
            let class = self.holders[h].class;
            let out = match class {
                AgentClass::Altruistic => {
                    altruistic_step(&mut self.holders[h], &mut self.world, slot)
                }
                AgentClass::Byzantine => {
                    let params = ByzantineParams {
                        lag: self.cfg.byz_lag,
                        withhold: self.cfg.byz_withhold.then_some(self.cfg.withhold_depth),
                    };
                    byzantine_step(&mut self.holders[h], &mut self.world, slot, params)
                }
                AgentClass::Rational => {
                    let params = RationalParams {
                        model: self.rollout_model(),
                        seed: digest_parts(&[
                            b"slot",
                            &self.seed.to_be_bytes(),
                            &slot.to_be_bytes(),
                        ])
                        .prefix_u64(),
                    };
                    rational_step(&mut self.holders[h], &mut self.world, slot, &params)
                }
            };
            self.broadcast(h, &out, slot);
        }
        let k0 = self.cfg.k0;
        for (h, state) in self.holders.iter().enumerate() {
            if state.class != AgentClass::Altruistic {
                continue;
            }
            let tip = state.tip(&self.world);
            let at = self.world.dag.ancestor_at(tip, k0);
            match (at, self.prefix[h]) {
                (Some(a), Some((b, _))) if a == b => {}
                (Some(a), _) => self.prefix[h] = Some((a, slot)),
                (None, _) => {}
            }
        }
    }

    pub fn run(&mut self) {
        for slot in 0..self.cfg.slots {
            self.step(slot);
        }
    }

    /// Latest slot at which some altruist's height-`k0` prefix changed.
    pub fn convergence_slot(&self) -> Option<u64> {
        let mut worst = None;
        for (h, s) in self.holders.iter().enumerate() {
            if s.class == AgentClass::Altruistic {
                let t = self.prefix[h].map(|(_, t)| t)?;
                worst = Some(worst.map_or(t, |w: u64| w.max(t)));
            }
        }
        worst
    }

    /// Every player's view, coalition members sharing theirs.
    pub fn player_views(&self) -> Vec<View<'_>> {
        self.holder_of
            .iter()
            .map(|h| self.holders[*h].view(&self.world))
            .collect()
    }

    /// Blocks broadcast at some point.
    pub fn released_set(&self) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.world.dag.len());
        s.insert(0);
        for (i, r) in self.released.iter().enumerate() {
            if r.is_some() {
                s.insert(i);
            }
        }
        s
    }

    pub fn finish(
        &self,
        run_id: usize,
        coalition: AgentClass,
        coalition_size: usize,
    ) -> RunMetrics {
        let views = self.player_views();
        let settlement = settle(&views, self.cfg.n_players, &self.cfg.settle_params());
        metrics::collect(self, &settlement, run_id, coalition, coalition_size)
    }
}

/// Runs `cfg` once with the seed of `run_id`.
pub fn run(
    cfg: &SimConfig,
    run_id: usize,
    coalition: AgentClass,
) -> Result<RunMetrics, ConfigError> {
    let size = match coalition {
        AgentClass::Byzantine => cfg.n_byzantine(),
        AgentClass::Rational => cfg.n_rational(),
        AgentClass::Altruistic => 0,
    };
    let mut sim = Simulation::new(cfg.clone(), run_seed(cfg.seed, run_id))?;
    sim.run();
    Ok(sim.finish(run_id, coalition, size))
}
