//! Beacon statistics, the two-chain race and the reference DAG facts.

use std::collections::{BTreeMap, BTreeSet};

use fantomette::blockdag::fixtures::reference_dag;
use fantomette::blockdag::{Block, BlockDag, BlockIx, DagView};
use fantomette::hash::{digest_parts, Hash256};
use fantomette::rules::{fcr, score, ScoreMode};
use fantomette::vrf_beacon::{
    find_leaders, fold_beacon, BeaconConfig, BeaconState, EligibilityProof, ParticipantId,
    VrfKeypair, VrfOracle,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn electorate(
    n: u32,
    seed: u64,
) -> (BeaconState, BTreeMap<ParticipantId, VrfKeypair>, VrfOracle) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut state = BeaconState::new(
        digest_parts(&[b"beacon", &seed.to_be_bytes()]),
        BeaconConfig::default(),
    );
    let mut keys = BTreeMap::new();
    let mut oracle = VrfOracle::new();
    for id in 0..n {
        let kp = VrfKeypair::generate(&mut rng);
        state.add_founder(id, kp.public());
        oracle.register(&kp);
        keys.insert(id, kp);
    }
    (state, keys, oracle)
}

/// The winner with the smallest ticket at the first depth with any winner.
pub fn leader(state: &BeaconState, keys: &BTreeMap<ParticipantId, VrfKeypair>) -> EligibilityProof {
    let (_, winners) = find_leaders(state, keys, 256).expect("someone wins eventually");
    winners
        .into_iter()
        .min_by_key(|p| p.ticket())
        .expect("non-empty")
}

/// Chi-square p-value of the top six bits of `folds` consecutive beacons.
pub fn beacon_uniformity(folds: usize, seed: u64) -> (f64, f64) {
    const BINS: usize = 64;
    let (mut state, keys, oracle) = electorate(10, seed);
    let mut counts = [0u64; BINS];
    for _ in 0..folds {
        let p = leader(&state, &keys);
        state = fold_beacon(&state, &p, &oracle).expect("honest proof folds");
        counts[(state.r.0[0] >> 2) as usize] += 1;
    }
    let expected = folds as f64 / BINS as f64;
    let stat: f64 = counts
        .iter()
        .map(|c| (*c as f64 - expected).powi(2) / expected)
        .sum();
    let p = 1.0 - ChiSquared::new((BINS - 1) as f64).unwrap().cdf(stat);
    (stat, p)
}

/// Largest |z| of the per-participant leader counts against `1/n`.
pub fn leader_frequency(n: u32, trials: u64, seed: u64) -> (f64, Vec<u64>) {
    let (mut state, keys, _) = electorate(n, seed);
    let mut counts = vec![0u64; n as usize];
    for t in 0..trials {
        state.r = digest_parts(&[b"trial", &seed.to_be_bytes(), &t.to_be_bytes()]);
        counts[leader(&state, &keys).participant as usize] += 1;
    }
    let p = 1.0 / n as f64;
    let sd = (trials as f64 * p * (1.0 - p)).sqrt();
    let z = counts
        .iter()
        .map(|c| ((*c as f64 - trials as f64 * p) / sd).abs())
        .fold(0.0, f64::max);
    (z, counts)
}

fn named(dag: &mut BlockDag, prev: BlockIx, refs: &[BlockIx], tag: &[u8]) -> BlockIx {
    let b = Block::new(
        dag.block(prev).id,
        refs.iter().map(|r| dag.block(*r).id),
        None,
        tag.to_vec(),
        0,
        Hash256::ZERO,
    );
    dag.insert(b).unwrap()
}

/// A block extending `tip` of a partial view, referencing its other leaves.
fn extend(dag: &mut BlockDag, view: &BTreeSet<BlockIx>, tag: &[u8]) -> (BlockIx, BlockIx) {
    let sub = fantomette::blockdag::SetView::new(dag, {
        let mut s = fixedbitset::FixedBitSet::with_capacity(dag.len());
        for b in view {
            s.insert(b.index());
        }
        s
    });
    let tip = fcr(&sub, ScoreMode::Induced).unwrap();
    let refs: Vec<BlockIx> = sub.leaves().into_iter().filter(|l| *l != tip).collect();
    (tip, named(dag, tip, &refs, tag))
}

/// Mean score added by a block on the stronger and on the weaker of two
/// equal-score chains.
pub fn two_chain_race(samples: u64) -> (f64, f64) {
    let (mut strong_sum, mut weak_sum) = (0u64, 0u64);
    for s in 0..samples {
        let seed = digest_parts(&[b"race", &s.to_be_bytes()]);
        let len = 2 + (seed.0[1] % 4) as usize;
        let aware = seed.0[0] & 1 == 1;
        let mut dag = BlockDag::with_genesis(Block::genesis(Hash256::ZERO));
        let mut chains = [vec![BlockIx(0)], vec![BlockIx(0)]];
        for (c, chain) in chains.iter_mut().enumerate() {
            for h in 0..len {
                let prev = *chain.last().unwrap();
                let tag = [&seed.0[..], &[c as u8, h as u8]].concat();
                chain.push(named(&mut dag, prev, &[], &tag));
            }
        }
        let strong_leaf = fcr(&dag, ScoreMode::Induced).unwrap();
        let (strong, weak) = if *chains[0].last().unwrap() == strong_leaf {
            (0, 1)
        } else {
            (1, 0)
        };
        let all: BTreeSet<BlockIx> = dag.indices().collect();
        let weak_leaf = *chains[weak].last().unwrap();

        let mut view = all.clone();
        if !aware {
            view.remove(&weak_leaf);
        }
        let (tip, e) = extend(&mut dag, &view, b"strong");
        assert_eq!(tip, strong_leaf);
        strong_sum += score(&dag, e, ScoreMode::Induced).unwrap().value
            - score(&dag, tip, ScoreMode::Induced).unwrap().value;

        let mut view = all;
        view.remove(chains[strong].last().unwrap());
        let (tip, f) = extend(&mut dag, &view, b"weak");
        assert_eq!(tip, weak_leaf);
        weak_sum += score(&dag, f, ScoreMode::Induced).unwrap().value
            - score(&dag, tip, ScoreMode::Induced).unwrap().value;
    }
    (
        strong_sum as f64 / samples as f64,
        weak_sum as f64 / samples as f64,
    )
}

/// Named facts about the nine-block reference DAG, each with its outcome.
pub fn reference_facts() -> Vec<(&'static str, bool)> {
    let (dag, m) = reference_dag();
    let names = |v: Vec<BlockIx>| -> BTreeSet<String> {
        v.into_iter()
            .map(|b| m.iter().find(|(_, ix)| **ix == b).unwrap().0.clone())
            .collect()
    };
    let set = |xs: &[&str]| -> BTreeSet<String> { xs.iter().map(|s| s.to_string()).collect() };
    vec![
        (
            "ancestors(H) = {E, A, genesis}",
            names(dag.ancestors(m["H"]).unwrap()) == set(&["E", "A", "g"]),
        ),
        (
            "past(H) = {E, F, A, B, C, genesis}",
            names(dag.past(m["H"]).unwrap()) == set(&["E", "F", "A", "B", "C", "g"]),
        ),
        (
            "direct_future(F) = {H, I}",
            names(dag.direct_future(m["F"]).unwrap()) == set(&["H", "I"]),
        ),
        (
            "anticone(E) = {D, G, I}",
            names(dag.anticone(m["E"]).unwrap()) == set(&["D", "G", "I"]),
        ),
        ("d(A, H) = 2", dag.distance(m["A"], m["H"]) == Ok(2)),
        (
            "leaves = {G, H, I}",
            names(dag.leaves()) == set(&["G", "H", "I"]),
        ),
        (
            "{H, E, A, genesis} is a chain",
            names(
                std::iter::once(m["H"])
                    .chain(dag.ancestors(m["H"]).unwrap())
                    .collect(),
            ) == set(&["H", "E", "A", "g"]),
        ),
    ]
}
