use std::collections::BTreeMap;
use std::fmt;

use fixedbitset::FixedBitSet;

use super::fcr::{fcr, ScoreMode};
use crate::blockdag::{BlockId, BlockIx, DagView};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Winner,
    Neutral,
    Loser,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Winner => "winner",
            Label::Neutral => "neutral",
            Label::Loser => "loser",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelMap {
    pub labels: BTreeMap<BlockIx, Label>,
    pub blue: FixedBitSet,
    /// Main chain from genesis to the fork-choice tip.
    pub main_chain: Vec<BlockIx>,
}

impl LabelMap {
    pub fn get(&self, b: BlockIx) -> Option<Label> {
        self.labels.get(&b).copied()
    }

    pub fn is_blue(&self, b: BlockIx) -> bool {
        self.blue.contains(b.index())
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.values().filter(|l| **l == label).count()
    }

    /// `block-id,label` rows with a header, in topological order.
    pub fn to_csv<V: DagView + ?Sized>(&self, view: &V) -> String {
        let mut out = String::from("block-id,label\n");
        for (ix, l) in &self.labels {
            let id: BlockId = view.dag().block(*ix).id;
            out.push_str(&format!("{id},{l}\n"));
        }
        out
    }
}

/// Topological order that depends only on block content: past size, then id.
pub fn canonical_order<V: DagView + ?Sized>(view: &V) -> Vec<BlockIx> {
    let dag = view.dag();
    let mut v: Vec<_> = view
        .members()
        .into_iter()
        .map(|b| (dag.closure(b).count_ones(..), dag.block(b).id, b))
        .collect();
    v.sort();
    v.into_iter().map(|(_, _, b)| b).collect()
}

/// Winner chain, then blocks directly attached to it, then every remaining
/// block in topological order, admitted as neutral while its anticone meets
/// at most `k` blue blocks.
pub fn label<V: DagView + ?Sized>(view: &V, k: usize, mode: ScoreMode) -> LabelMap {
    let dag = view.dag();
    let mut map = LabelMap {
        blue: FixedBitSet::with_capacity(dag.len()),
        ..LabelMap::default()
    };
    let Some(tip) = fcr(view, mode) else {
        return map;
    };
    let mut chain: Vec<BlockIx> = std::iter::once(tip)
        .chain(dag.ancestor_chain(tip))
        .collect();
    chain.reverse();
    for b in &chain {
        map.labels.insert(*b, Label::Winner);
        map.blue.insert(b.index());
    }
    for b in &chain {
        for s in dag.children(*b).iter().chain(dag.referrers(*b)) {
            if view.contains(*s) && !map.labels.contains_key(s) {
                map.labels.insert(*s, Label::Neutral);
                map.blue.insert(s.index());
            }
        }
    }
    for b in canonical_order(view) {
        if map.labels.contains_key(&b) {
            continue;
        }
        let closure = dag.closure(b);
        let overlap = map
            .blue
            .ones()
            .filter(|x| {
                !closure.contains(*x) && !dag.closure(BlockIx(*x as u32)).contains(b.index())
            })
            .count();
        if overlap <= k {
            map.labels.insert(b, Label::Neutral);
            map.blue.insert(b.index());
        } else {
            map.labels.insert(b, Label::Loser);
        }
    }
    map.main_chain = chain;
    map
}
