//! Brute-force oracles over a plain adjacency copy of a DAG.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use fantomette::blockdag::{bcpc, Block, BlockDag, BlockId, BlockIx, DagView, View, ViewState};
use fantomette::hash::{digest, Hash256};
use fantomette::incentives::{settle, SettleParams};
use fantomette::rules::{fcr, label, Label, ScoreMode};
use fantomette::vrf_beacon::EligibilityProof;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PLAYERS: u32 = 3;

/// Plain adjacency copy of a DAG, indexed in insertion order.
pub struct Raw {
    pub ids: Vec<BlockId>,
    pub prev: Vec<Option<usize>>,
    pub targets: Vec<Vec<usize>>,
    pub tiebreak: Vec<Hash256>,
    pub proof: Vec<Option<EligibilityProof>>,
    pub sender: Vec<Option<u32>>,
    pub n_leaf: Vec<usize>,
}

impl Raw {
    pub fn of(dag: &BlockDag, keep: &[BlockIx]) -> Raw {
        let pos: BTreeMap<BlockId, usize> = keep
            .iter()
            .enumerate()
            .map(|(i, b)| (dag.block(*b).id, i))
            .collect();
        let mut r = Raw {
            ids: vec![],
            prev: vec![],
            targets: vec![],
            tiebreak: vec![],
            proof: vec![],
            sender: vec![],
            n_leaf: vec![],
        };
        for ix in keep {
            let b = dag.block(*ix);
            r.ids.push(b.id);
            r.prev.push(b.prev.map(|p| pos[&p]));
            r.targets
                .push(b.prev.iter().chain(&b.leaves).map(|t| pos[t]).collect());
            r.tiebreak.push(match &b.proof {
                Some(p) => digest(p.y.as_bytes()),
                None => b.id,
            });
            r.proof.push(b.proof);
            r.sender.push(b.sender);
            r.n_leaf.push(b.leaves.len());
        }
        r
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ancestors(&self, b: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut cur = self.prev[b];
        while let Some(p) = cur {
            out.insert(p);
            cur = self.prev[p];
        }
        out
    }

    /// Every block reachable from `b` by some path, enumerated recursively.
    pub fn past(&self, b: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for t in &self.targets[b] {
            out.insert(*t);
            out.extend(self.past(*t));
        }
        out
    }

    pub fn future(&self, b: usize) -> BTreeSet<usize> {
        (0..self.n())
            .filter(|x| self.past(*x).contains(&b))
            .collect()
    }

    pub fn anticone(&self, b: usize) -> BTreeSet<usize> {
        let past = self.past(b);
        (0..self.n())
            .filter(|x| *x != b && !past.contains(x) && !self.past(*x).contains(&b))
            .collect()
    }

    /// Blocks listing `b` as a reference; bets on `b` are not included.
    pub fn direct_future(&self, b: usize) -> BTreeSet<usize> {
        (0..self.n())
            .filter(|x| self.targets[*x].iter().skip(1).any(|t| *t == b))
            .collect()
    }

    /// Blocks with an edge of either kind to `b`.
    pub fn successors(&self, b: usize) -> BTreeSet<usize> {
        (0..self.n())
            .filter(|x| self.targets[*x].contains(&b))
            .collect()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|b| self.successors(*b).is_empty())
            .collect()
    }

    pub fn distance(&self, a: usize, b: usize) -> Option<u32> {
        let bfs = |from: usize, to: usize| {
            let mut dist = vec![None; self.n()];
            dist[from] = Some(0u32);
            let mut q = VecDeque::from([from]);
            while let Some(x) = q.pop_front() {
                for t in &self.targets[x] {
                    if dist[*t].is_none() {
                        dist[*t] = Some(dist[x].unwrap() + 1);
                        q.push_back(*t);
                    }
                }
            }
            dist[to]
        };
        bfs(a, b).or_else(|| bfs(b, a))
    }

    pub fn double(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for a in 0..self.n() {
            for b in 0..self.n() {
                if a != b
                    && self.proof[a].is_some()
                    && self.proof[a] == self.proof[b]
                    && self.ids[a] != self.ids[b]
                {
                    out.insert(a);
                }
            }
        }
        out
    }

    pub fn score(&self, leaf: usize) -> (u64, Hash256) {
        let double = self.double();
        let mut set = self.past(leaf);
        set.insert(leaf);
        let set: BTreeSet<usize> = set.difference(&double).copied().collect();
        let edges = set
            .iter()
            .map(|x| self.targets[*x].iter().filter(|t| set.contains(t)).count() as u64)
            .sum();
        (edges, self.tiebreak[leaf])
    }

    pub fn fcr(&self) -> usize {
        let leaves = self.leaves();
        let mut best = leaves[0];
        for l in leaves.into_iter().skip(1) {
            let (s, h) = self.score(l);
            let (bs, bh) = self.score(best);
            if (s, Reverse(h), Reverse(self.ids[l])) > (bs, Reverse(bh), Reverse(self.ids[best])) {
                best = l;
            }
        }
        best
    }

    pub fn label(&self, k: usize) -> Vec<Label> {
        let mut out: Vec<Option<Label>> = vec![None; self.n()];
        let mut blue = BTreeSet::new();
        let tip = self.fcr();
        let mut chain = self.ancestors(tip);
        chain.insert(tip);
        for b in &chain {
            out[*b] = Some(Label::Winner);
            blue.insert(*b);
        }
        for b in &chain {
            for s in self.successors(*b) {
                if out[s].is_none() {
                    out[s] = Some(Label::Neutral);
                    blue.insert(s);
                }
            }
        }
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by_key(|b| (self.past(*b).len(), self.ids[*b]));
        for b in order {
            if out[b].is_some() {
                continue;
            }
            if self.anticone(b).intersection(&blue).count() <= k {
                out[b] = Some(Label::Neutral);
                blue.insert(b);
            } else {
                out[b] = Some(Label::Loser);
            }
        }
        out.into_iter().map(Option::unwrap).collect()
    }
}

pub fn random_dag(rng: &mut ChaCha8Rng) -> BlockDag {
    let mut dag = BlockDag::with_genesis(Block::genesis(digest(b"oracle genesis")));
    let size = rng.random_range(1..=12);
    let proofs: Vec<EligibilityProof> = (0..4)
        .map(|i| EligibilityProof {
            participant: i % PLAYERS,
            y: digest(&[i as u8, rng.random()]),
            proof: Hash256::ZERO,
            rnd: 0,
            redraw_depth: 0,
        })
        .collect();
    let mut next_proof = 0usize;
    for i in 1..size {
        let prev = BlockIx(rng.random_range(0..i) as u32);
        let leaves: Vec<BlockId> = (0..i)
            .filter(|j| *j != prev.index() && rng.random_bool(0.3))
            .map(|j| dag.block(BlockIx(j as u32)).id)
            .collect();
        // a few blocks share an eligibility proof so Double is exercised
        let proof = if rng.random_bool(0.35) {
            Some(proofs[rng.random_range(0..proofs.len())])
        } else {
            next_proof += 1;
            Some(EligibilityProof {
                participant: rng.random_range(0..PLAYERS),
                y: digest(&[0xee, next_proof as u8, rng.random()]),
                proof: Hash256::ZERO,
                rnd: 0,
                redraw_depth: 0,
            })
        };
        let sender = proof.map_or(0, |p| p.participant);
        let b = Block::new(
            dag.block(prev).id,
            leaves,
            proof,
            vec![i as u8, rng.random()],
            sender,
            Hash256::ZERO,
        );
        dag.insert(b).unwrap();
    }
    dag
}

pub fn ixs(v: &[BlockIx]) -> BTreeSet<usize> {
    v.iter().map(|b| b.index()).collect()
}

pub fn random_view(dag: &BlockDag, rng: &mut ChaCha8Rng) -> ViewState {
    let mut s = ViewState::with_genesis(dag);
    for ix in dag.indices().skip(1) {
        if rng.random_bool(0.75) && s.can_admit(dag, ix) {
            s.admit(dag, ix);
        }
    }
    s
}

pub fn relation_mismatches(instances: u64) -> Vec<String> {
    let mut mismatches = Vec::new();
    for seed in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = random_dag(&mut rng);
        let all: Vec<BlockIx> = dag.indices().collect();
        let raw = Raw::of(&dag, &all);
        for b in &all {
            let i = b.index();
            let mut check = |what: &str, ok: bool| {
                if !ok {
                    mismatches.push(format!("seed {seed} block {i}: {what}"));
                }
            };
            check(
                "ancestors",
                ixs(&dag.ancestors(*b).unwrap()) == raw.ancestors(i),
            );
            check("past", ixs(&dag.past(*b).unwrap()) == raw.past(i));
            check("future", ixs(&dag.future(*b).unwrap()) == raw.future(i));
            check(
                "anticone",
                ixs(&dag.anticone(*b).unwrap()) == raw.anticone(i),
            );
            check(
                "direct_future",
                ixs(&dag.direct_future(*b).unwrap()) == raw.direct_future(i),
            );
            let partition = 1 + raw.past(i).len() + raw.future(i).len() + raw.anticone(i).len();
            check("partition", partition == raw.n());
            for a in &all {
                check(
                    "distance",
                    dag.distance(*a, *b).ok() == raw.distance(a.index(), i),
                );
            }
        }
        let leaves: BTreeSet<usize> = ixs(&dag.leaves());
        if leaves != raw.leaves().into_iter().collect() {
            mismatches.push(format!("seed {seed}: leaves"));
        }
        if ixs(&dag
            .double()
            .ones()
            .map(|i| BlockIx(i as u32))
            .collect::<Vec<_>>())
            != raw.double()
        {
            mismatches.push(format!("seed {seed}: double"));
        }
    }
    mismatches
}

pub fn fork_choice_mismatches(instances: u64) -> Vec<String> {
    let mut mismatches = Vec::new();
    for seed in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = random_dag(&mut rng);
        let raw = Raw::of(&dag, &dag.indices().collect::<Vec<_>>());
        let tip = fcr(&dag, ScoreMode::Induced).unwrap();
        if tip.index() != raw.fcr() {
            mismatches.push(format!("seed {seed}: fcr"));
        }
        for k in [0, 1, 3] {
            let got = label(&dag, k, ScoreMode::Induced);
            let want = raw.label(k);
            for b in dag.indices() {
                if got.get(b) != Some(want[b.index()]) {
                    mismatches.push(format!("seed {seed} k {k} block {}: label", b.index()));
                }
                let blue = want[b.index()] != Label::Loser;
                if got.is_blue(b) != blue {
                    mismatches.push(format!("seed {seed} k {k} block {}: blue", b.index()));
                }
            }
        }
    }
    mismatches
}

pub fn settlement_mismatches(instances: u64) -> Vec<String> {
    let params = SettleParams::default();
    let mut mismatches = Vec::new();
    for seed in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = random_dag(&mut rng);
        let all: Vec<BlockIx> = dag.indices().collect();
        let full = Raw::of(&dag, &all);
        let states: Vec<ViewState> = (0..5).map(|_| random_view(&dag, &mut rng)).collect();
        let views: Vec<View<'_>> = states.iter().map(|s| s.on(&dag)).collect();

        // majority membership, then keep only blocks whose targets survive
        let mut keep = vec![false; all.len()];
        for b in 0..all.len() {
            let count = states.iter().filter(|s| s.knows(BlockIx(b as u32))).count();
            keep[b] = 2 * count > states.len() && full.targets[b].iter().all(|t| keep[*t]);
        }
        let kept: Vec<BlockIx> = all.iter().copied().filter(|b| keep[b.index()]).collect();
        let want_ids: BTreeSet<BlockId> = kept.iter().map(|b| dag.block(*b).id).collect();
        let common = bcpc(&views);
        let got_ids: BTreeSet<BlockId> = common.indices().map(|b| common.block(b).id).collect();
        if got_ids != want_ids {
            mismatches.push(format!("seed {seed}: bcpc"));
            continue;
        }

        let sub = Raw::of(&dag, &kept);
        let labels = sub.label(params.k);
        let union: Vec<usize> = (0..all.len())
            .filter(|b| states.iter().any(|s| s.knows(BlockIx(*b as u32))))
            .collect();
        let got = settle(&views, PLAYERS as usize, &params);
        for p in 0..PLAYERS {
            let mut reward = 0.0;
            let mut pun = 0u64;
            for (i, l) in labels.iter().enumerate() {
                if sub.sender[i] != Some(p) {
                    continue;
                }
                match l {
                    Label::Winner => reward += sub.n_leaf[i].max(1) as f64 * params.c,
                    Label::Loser => pun += 1,
                    Label::Neutral => {}
                }
            }
            let own: Vec<usize> = union
                .iter()
                .copied()
                .filter(|b| full.sender[*b] == Some(p))
                .collect();
            let mut pairs = 0u64;
            for (i, a) in own.iter().enumerate() {
                for b in &own[i + 1..] {
                    if !full.past(*a).contains(b) && !full.past(*b).contains(a) {
                        pairs += 1;
                    }
                }
            }
            let total = reward - params.pun * pun as f64 - params.bigpun * pairs as f64;
            let g = &got.payoffs[p as usize];
            if g.pun_count != pun
                || g.bigpun_count != pairs
                || (g.reward_sum - reward).abs() > 1e-9
                || (g.total - total).abs() > 1e-9
            {
                mismatches.push(format!(
                    "seed {seed} player {p}: payoff {g:?} vs {reward} {pun} {pairs}"
                ));
            }
        }
    }
    mismatches
}
