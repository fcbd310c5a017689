//! Small hand-built DAGs shared by tests, benches and the CLI.

use std::collections::BTreeMap;

use super::block::Block;
use super::dag::{BlockDag, BlockIx};
use crate::hash::Hash256;
use crate::vrf_beacon::ParticipantId;

/// The nine-block reference DAG over three players.
///
/// `(name, prev, leaves, sender)`; genesis is `g`.
pub const REFERENCE_EDGES: [(&str, &str, &[&str], ParticipantId); 9] = [
    ("A", "g", &[], 0),
    ("C", "g", &[], 1),
    ("D", "g", &[], 2),
    ("F", "C", &[], 0),
    ("B", "F", &[], 2),
    ("E", "A", &["B", "C"], 1),
    ("H", "E", &["F"], 2),
    ("I", "C", &["F"], 1),
    ("G", "D", &[], 0),
];

/// Builds a DAG from `(name, prev, leaves, sender)` rows in topological
/// order. Blocks carry no eligibility proof; the name is the payload.
pub fn build_named(
    rows: &[(&str, &str, &[&str], ParticipantId)],
) -> (BlockDag, BTreeMap<String, BlockIx>) {
    let genesis = Block::genesis(Hash256::ZERO);
    let mut dag = BlockDag::with_genesis(genesis.clone());
    let mut names = BTreeMap::from([("g".to_string(), BlockIx(0))]);
    for (name, prev, leaves, sender) in rows {
        let id = |n: &str| dag.block(names[n]).id;
        let b = Block::new(
            id(prev),
            leaves.iter().map(|l| id(l)),
            None,
            name.as_bytes().to_vec(),
            *sender,
            Hash256::ZERO,
        );
        let ix = dag.insert(b).expect("fixture rows are topological");
        names.insert(name.to_string(), ix);
    }
    (dag, names)
}

pub fn reference_dag() -> (BlockDag, BTreeMap<String, BlockIx>) {
    build_named(&REFERENCE_EDGES)
}
