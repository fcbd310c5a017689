use std::cmp::{Ordering, Reverse};

use fixedbitset::FixedBitSet;

use crate::blockdag::{BlockIx, DagError, DagView};
use crate::hash::Hash256;

/// How edges are counted when scoring a chain tip.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ScoreMode {
    /// Edges of the subgraph induced by `Past(B) ∪ {B}` minus `Double`.
    #[default]
    Induced,
    /// Every out-edge of every counted block, wherever it points.
    Literal,
}

/// Chain-tip score. Ordered so that the preferred tip is the greatest:
/// higher edge count first, then smaller tie-break hash.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Score {
    pub value: u64,
    pub tiebreak: Hash256,
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .cmp(&other.value)
            .then_with(|| other.tiebreak.cmp(&self.tiebreak))
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn score<V: DagView + ?Sized>(
    view: &V,
    b: BlockIx,
    mode: ScoreMode,
) -> Result<Score, DagError> {
    view.require(b)?;
    Ok(score_with(view, b, mode, &view.double()))
}

/// [`score`] with `Double` already restricted to the view.
pub fn score_with<V: DagView + ?Sized>(
    view: &V,
    b: BlockIx,
    mode: ScoreMode,
    double: &FixedBitSet,
) -> Score {
    let dag = view.dag();
    let closure = dag.closure(b);
    let tiebreak = dag.block(b).tiebreak();
    if closure.is_disjoint(double) {
        return Score {
            value: dag.edge_score(b),
            tiebreak,
        };
    }
    let mut counted = closure.clone();
    counted.difference_with(double);
    let value = counted
        .ones()
        .map(|i| {
            let x = BlockIx(i as u32);
            match mode {
                ScoreMode::Literal => dag.out_degree(x),
                ScoreMode::Induced => dag
                    .targets(x)
                    .filter(|t| counted.contains(t.index()))
                    .count() as u64,
            }
        })
        .sum();
    Score { value, tiebreak }
}

/// Fork-choice rule: the leaf with the highest score, smallest hash on ties.
/// Leaves sharing a proof also share the hash; the smaller block id wins.
pub fn fcr<V: DagView + ?Sized>(view: &V, mode: ScoreMode) -> Option<BlockIx> {
    let leaves = view.leaves();
    if leaves.len() <= 1 {
        return leaves.first().copied();
    }
    let double = view.double();
    let dag = view.dag();
    leaves.into_iter().max_by_key(|l| {
        (
            score_with(view, *l, mode, &double),
            Reverse(dag.block(*l).id),
        )
    })
}

/// Leaves ranked best first.
pub fn ranked_leaves<V: DagView + ?Sized>(view: &V, mode: ScoreMode) -> Vec<(BlockIx, Score)> {
    let double = view.double();
    let mut v: Vec<_> = view
        .leaves()
        .into_iter()
        .map(|l| (l, score_with(view, l, mode, &double)))
        .collect();
    let dag = view.dag();
    v.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| dag.block(a.0).id.cmp(&dag.block(b.0).id))
    });
    v
}
