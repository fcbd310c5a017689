use std::collections::{BTreeSet, HashMap, VecDeque};

use fixedbitset::FixedBitSet;
use thiserror::Error;

use super::block::{Block, BlockId};
use crate::vrf_beacon::EligibilityProof;

/// Position of a block in its store; insertion order is topological.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockIx(pub u32);

impl BlockIx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DagError {
    #[error("block {block} references unknown block {missing}")]
    DanglingReference { block: BlockId, missing: BlockId },
    #[error("block {0} is already present")]
    DuplicateId(BlockId),
    #[error("a genesis block is already present")]
    SecondGenesis,
    #[error("unknown block {0}")]
    UnknownBlock(BlockId),
    #[error("unknown block index {0}")]
    UnknownIndex(u32),
    #[error("blocks {0:?} and {1:?} are not comparable")]
    IncomparableBlocks(BlockIx, BlockIx),
}

#[derive(Clone, Debug)]
struct Node {
    block: Block,
    prev: Option<BlockIx>,
    refs: Vec<BlockIx>,
    /// Past ∪ {self}.
    closure: FixedBitSet,
    children: Vec<BlockIx>,
    referrers: Vec<BlockIx>,
    height: u32,
    /// Edge count of the subgraph induced by the closure, ignoring Double.
    edge_score: u64,
}

/// Append-only blockDAG.
///
/// Every block stores its closure as a bitset over earlier indices, so past
/// and reachability queries are word operations. The closure of a block is
/// fixed by its references, which lets any downward-closed view reuse it.
#[derive(Clone, Debug, Default)]
pub struct BlockDag {
    nodes: Vec<Node>,
    index: HashMap<BlockId, BlockIx>,
    leaves: BTreeSet<BlockIx>,
    proofs: HashMap<EligibilityProof, Vec<BlockIx>>,
    /// Groups of two or more blocks sharing one proof.
    double_groups: Vec<Vec<BlockIx>>,
    double: FixedBitSet,
}

impl BlockDag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_genesis(genesis: Block) -> Self {
        let mut dag = Self::new();
        dag.insert(genesis).expect("genesis into empty dag");
        dag
    }

    pub fn insert(&mut self, block: Block) -> Result<BlockIx, DagError> {
        if self.index.contains_key(&block.id) {
            return Err(DagError::DuplicateId(block.id));
        }
        let resolve = |id: &BlockId| {
            self.index
                .get(id)
                .copied()
                .ok_or(DagError::DanglingReference {
                    block: block.id,
                    missing: *id,
                })
        };
        let prev = match &block.prev {
            Some(p) => Some(resolve(p)?),
            None if !self.nodes.is_empty() => return Err(DagError::SecondGenesis),
            None => None,
        };
        let refs = block
            .leaves
            .iter()
            .map(resolve)
            .collect::<Result<Vec<_>, _>>()?;

        let ix = BlockIx(self.nodes.len() as u32);
        let mut closure = FixedBitSet::with_capacity(ix.index() + 1);
        closure.insert(ix.index());
        for t in prev.iter().chain(refs.iter()) {
            closure.union_with(&self.nodes[t.index()].closure);
        }
        let (height, edge_score) = match prev {
            None => (0, 0),
            Some(p) => {
                let pn = &self.nodes[p.index()];
                let mut fresh = closure.clone();
                fresh.difference_with(&pn.closure);
                let added: u64 = fresh
                    .ones()
                    .map(|i| {
                        if i == ix.index() {
                            1 + refs.len() as u64
                        } else {
                            self.nodes[i].out_degree()
                        }
                    })
                    .sum();
                (pn.height + 1, pn.edge_score + added)
            }
        };

        if let Some(p) = prev {
            self.nodes[p.index()].children.push(ix);
            self.leaves.remove(&p);
        }
        for r in &refs {
            self.nodes[r.index()].referrers.push(ix);
            self.leaves.remove(r);
        }
        self.leaves.insert(ix);
        self.index.insert(block.id, ix);
        self.double.grow(ix.index() + 1);
        if let Some(proof) = block.proof {
            let group = self.proofs.entry(proof).or_default();
            group.push(ix);
            if group.len() >= 2 {
                for m in group.iter() {
                    self.double.insert(m.index());
                }
                let group = group.clone();
                match self.double_groups.iter_mut().find(|g| g[0] == group[0]) {
                    Some(g) => *g = group,
                    None => self.double_groups.push(group),
                }
            }
        }
        self.nodes.push(Node {
            block,
            prev,
            refs,
            closure,
            children: Vec::new(),
            referrers: Vec::new(),
            height,
            edge_score,
        });
        Ok(ix)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Drops every block with index `>= len`, newest first. Used to undo
    /// speculative insertions; indices below `len` are unaffected.
    pub fn truncate(&mut self, len: usize) {
        while self.nodes.len() > len.max(1) {
            let node = self.nodes.pop().expect("non-empty");
            let ix = BlockIx(self.nodes.len() as u32);
            self.index.remove(&node.block.id);
            self.leaves.remove(&ix);
            if let Some(p) = node.prev {
                self.nodes[p.index()].children.pop();
            }
            for r in &node.refs {
                self.nodes[r.index()].referrers.pop();
            }
            for t in node.prev.iter().chain(node.refs.iter()) {
                let n = &self.nodes[t.index()];
                if n.children.is_empty() && n.referrers.is_empty() {
                    self.leaves.insert(*t);
                }
            }
            if let Some(proof) = &node.block.proof {
                let group = self.proofs.get_mut(proof).expect("proof indexed");
                group.pop();
                if group.is_empty() {
                    self.proofs.remove(proof);
                } else if group.len() == 1 {
                    let first = group[0];
                    self.double.set(first.index(), false);
                    self.double_groups.retain(|g| g[0] != first);
                } else {
                    let group = group.clone();
                    if let Some(g) = self.double_groups.iter_mut().find(|g| g[0] == group[0]) {
                        *g = group;
                    }
                }
            }
            self.double.set(ix.index(), false);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn check(&self, ix: BlockIx) -> Result<BlockIx, DagError> {
        if ix.index() < self.nodes.len() {
            Ok(ix)
        } else {
            Err(DagError::UnknownIndex(ix.0))
        }
    }

    pub fn ix(&self, id: &BlockId) -> Option<BlockIx> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &BlockId) -> Result<BlockIx, DagError> {
        self.ix(id).ok_or(DagError::UnknownBlock(*id))
    }

    pub fn contains_id(&self, id: &BlockId) -> bool {
        self.index.contains_key(id)
    }

    pub fn block(&self, ix: BlockIx) -> &Block {
        &self.nodes[ix.index()].block
    }

    pub fn genesis(&self) -> Option<BlockIx> {
        (!self.nodes.is_empty()).then_some(BlockIx(0))
    }

    pub fn indices(&self) -> impl DoubleEndedIterator<Item = BlockIx> + ExactSizeIterator {
        (0..self.nodes.len() as u32).map(BlockIx)
    }

    pub fn prev(&self, ix: BlockIx) -> Option<BlockIx> {
        self.nodes[ix.index()].prev
    }

    /// Resolved reference edges (excluding the bet).
    pub fn refs(&self, ix: BlockIx) -> &[BlockIx] {
        &self.nodes[ix.index()].refs
    }

    pub fn targets(&self, ix: BlockIx) -> impl Iterator<Item = BlockIx> + '_ {
        let n = &self.nodes[ix.index()];
        n.prev.into_iter().chain(n.refs.iter().copied())
    }

    /// Blocks whose bet is `ix`.
    pub fn children(&self, ix: BlockIx) -> &[BlockIx] {
        &self.nodes[ix.index()].children
    }

    /// Blocks listing `ix` among their reference edges.
    pub fn referrers(&self, ix: BlockIx) -> &[BlockIx] {
        &self.nodes[ix.index()].referrers
    }

    /// Past ∪ {ix}.
    pub fn closure(&self, ix: BlockIx) -> &FixedBitSet {
        &self.nodes[ix.index()].closure
    }

    /// `a ∈ Past(b)`.
    pub fn in_past(&self, a: BlockIx, b: BlockIx) -> bool {
        a != b && self.nodes[b.index()].closure.contains(a.index())
    }

    /// Number of ancestors.
    pub fn height(&self, ix: BlockIx) -> u32 {
        self.nodes[ix.index()].height
    }

    pub fn edge_score(&self, ix: BlockIx) -> u64 {
        self.nodes[ix.index()].edge_score
    }

    pub fn out_degree(&self, ix: BlockIx) -> u64 {
        self.nodes[ix.index()].out_degree()
    }

    /// `a ∈ Ancestors(b)`.
    pub fn is_ancestor(&self, a: BlockIx, b: BlockIx) -> bool {
        if !self.in_past(a, b) {
            return false;
        }
        let target = self.height(a);
        let mut cur = b;
        while self.height(cur) > target {
            cur = self.prev(cur).expect("non-genesis has prev");
        }
        cur == a
    }

    /// Prev chain of `ix`, nearest first, ending at genesis.
    pub fn ancestor_chain(&self, ix: BlockIx) -> AncestorIter<'_> {
        AncestorIter {
            dag: self,
            cur: self.prev(ix),
        }
    }

    /// The ancestor (or `ix` itself) at `height`.
    pub fn ancestor_at(&self, ix: BlockIx, height: u32) -> Option<BlockIx> {
        if height > self.height(ix) {
            return None;
        }
        let mut cur = ix;
        while self.height(cur) > height {
            cur = self.prev(cur)?;
        }
        Some(cur)
    }

    pub fn global_leaves(&self) -> &BTreeSet<BlockIx> {
        &self.leaves
    }

    pub fn double_set(&self) -> &FixedBitSet {
        &self.double
    }

    pub fn double_groups(&self) -> &[Vec<BlockIx>] {
        &self.double_groups
    }

    pub fn has_double(&self) -> bool {
        !self.double_groups.is_empty()
    }

    /// Shortest directed path length over bet and reference edges between
    /// two comparable blocks.
    pub fn distance(&self, a: BlockIx, b: BlockIx) -> Result<u32, DagError> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Ok(0);
        }
        let (from, to) = if self.in_past(a, b) {
            (b, a)
        } else if self.in_past(b, a) {
            (a, b)
        } else {
            return Err(DagError::IncomparableBlocks(a, b));
        };
        let mut seen = FixedBitSet::with_capacity(self.len());
        let mut queue = VecDeque::from([(from, 0u32)]);
        seen.insert(from.index());
        while let Some((x, d)) = queue.pop_front() {
            for t in self.targets(x) {
                if t == to {
                    return Ok(d + 1);
                }
                if !seen.contains(t.index()) && self.closure(t).contains(to.index()) {
                    seen.insert(t.index());
                    queue.push_back((t, d + 1));
                }
            }
        }
        unreachable!("comparable blocks are connected")
    }
}

impl Node {
    fn out_degree(&self) -> u64 {
        self.prev.map_or(0, |_| 1) + self.refs.len() as u64
    }
}

pub struct AncestorIter<'a> {
    dag: &'a BlockDag,
    cur: Option<BlockIx>,
}

impl Iterator for AncestorIter<'_> {
    type Item = BlockIx;
    fn next(&mut self) -> Option<BlockIx> {
        let c = self.cur?;
        self.cur = self.dag.prev(c);
        Some(c)
    }
}

/// Any downward-closed subset of a [`BlockDag`]: the store itself, or a
/// participant's partial view of a shared store.
pub trait DagView {
    fn dag(&self) -> &BlockDag;
    fn contains(&self, ix: BlockIx) -> bool;
    /// Blocks of the view with no successor inside the view.
    fn leaves(&self) -> Vec<BlockIx>;
    /// Members in topological order.
    fn members(&self) -> Vec<BlockIx>;
    fn size(&self) -> usize;

    fn require(&self, ix: BlockIx) -> Result<BlockIx, DagError> {
        if ix.index() < self.dag().len() && self.contains(ix) {
            Ok(ix)
        } else {
            Err(DagError::UnknownIndex(ix.0))
        }
    }

    /// `Double` restricted to this view.
    fn double(&self) -> FixedBitSet {
        let dag = self.dag();
        let mut out = FixedBitSet::with_capacity(dag.len());
        for g in dag.double_groups() {
            let inside: Vec<_> = g.iter().filter(|b| self.contains(**b)).collect();
            if inside.len() >= 2 {
                for b in inside {
                    out.insert(b.index());
                }
            }
        }
        out
    }

    fn ancestors(&self, b: BlockIx) -> Result<Vec<BlockIx>, DagError> {
        self.require(b)?;
        Ok(self.dag().ancestor_chain(b).collect())
    }

    fn past(&self, b: BlockIx) -> Result<Vec<BlockIx>, DagError> {
        self.require(b)?;
        Ok(self
            .dag()
            .closure(b)
            .ones()
            .filter(|i| *i != b.index())
            .map(|i| BlockIx(i as u32))
            .collect())
    }

    /// Blocks of the view with `b` in their past.
    fn future(&self, b: BlockIx) -> Result<Vec<BlockIx>, DagError> {
        self.require(b)?;
        let dag = self.dag();
        let mut out = Vec::new();
        let mut stack: Vec<BlockIx> = Vec::new();
        let mut seen = FixedBitSet::with_capacity(dag.len());
        stack.push(b);
        while let Some(x) = stack.pop() {
            for s in dag.children(x).iter().chain(dag.referrers(x)) {
                if self.contains(*s) && !seen.contains(s.index()) {
                    seen.insert(s.index());
                    out.push(*s);
                    stack.push(*s);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn anticone(&self, b: BlockIx) -> Result<Vec<BlockIx>, DagError> {
        self.require(b)?;
        let dag = self.dag();
        let cb = dag.closure(b);
        Ok(self
            .members()
            .into_iter()
            .filter(|x| *x != b && !cb.contains(x.index()) && !dag.closure(*x).contains(b.index()))
            .collect())
    }

    /// Blocks that list `b` among their reference edges.
    fn direct_future(&self, b: BlockIx) -> Result<Vec<BlockIx>, DagError> {
        self.require(b)?;
        let mut v: Vec<_> = self
            .dag()
            .referrers(b)
            .iter()
            .copied()
            .filter(|x| self.contains(*x))
            .collect();
        v.sort();
        Ok(v)
    }

    /// Blocks with a bet or reference edge to `b`.
    fn successors(&self, b: BlockIx) -> Result<Vec<BlockIx>, DagError> {
        self.require(b)?;
        let dag = self.dag();
        let mut v: Vec<_> = dag
            .children(b)
            .iter()
            .chain(dag.referrers(b))
            .copied()
            .filter(|x| self.contains(*x))
            .collect();
        v.sort();
        Ok(v)
    }

    fn distance(&self, a: BlockIx, b: BlockIx) -> Result<u32, DagError> {
        self.require(a)?;
        self.require(b)?;
        self.dag().distance(a, b)
    }
}

impl DagView for BlockDag {
    fn dag(&self) -> &BlockDag {
        self
    }

    fn contains(&self, ix: BlockIx) -> bool {
        ix.index() < self.nodes.len()
    }

    fn leaves(&self) -> Vec<BlockIx> {
        self.leaves.iter().copied().collect()
    }

    fn members(&self) -> Vec<BlockIx> {
        self.indices().collect()
    }

    fn size(&self) -> usize {
        self.nodes.len()
    }

    fn double(&self) -> FixedBitSet {
        self.double.clone()
    }
}

/// Ids of every block that shares its proof of eligibility with another
/// block of different content.
pub fn detect_double<V: DagView + ?Sized>(view: &V) -> BTreeSet<BlockId> {
    view.double()
        .ones()
        .map(|i| view.dag().block(BlockIx(i as u32)).id)
        .collect()
}

/// Biggest common prefix DAG: blocks held by strictly more than half of the
/// views whose whole past also qualifies.
pub fn bcpc<V: DagView>(views: &[V]) -> BlockDag {
    let mut counts: HashMap<BlockId, (usize, &Block, usize)> = HashMap::new();
    for v in views {
        let dag = v.dag();
        for ix in v.members() {
            let b = dag.block(ix);
            let past = dag.closure(ix).count_ones(..);
            counts.entry(b.id).or_insert((0, b, past)).0 += 1;
        }
    }
    let mut qualifying: Vec<(usize, BlockId, &Block)> = counts
        .into_iter()
        .filter(|(_, (c, _, _))| 2 * c > views.len())
        .map(|(id, (_, b, past))| (past, id, b))
        .collect();
    qualifying.sort_by_key(|a| (a.0, a.1));

    let mut out = BlockDag::new();
    for (_, _, b) in qualifying {
        // blocks whose past falls outside the majority set are dropped
        let _ = out.insert(b.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockdag::fixtures::reference_dag;
    use crate::blockdag::{View, ViewState};
    use crate::hash::Hash256;

    fn names(
        dag: &BlockDag,
        m: &std::collections::BTreeMap<String, BlockIx>,
        v: Vec<BlockIx>,
    ) -> Vec<String> {
        let rev: HashMap<BlockIx, &String> = m.iter().map(|(k, v)| (*v, k)).collect();
        let mut out: Vec<String> = v.iter().map(|b| rev[b].clone()).collect();
        out.sort();
        let _ = dag;
        out
    }

    #[test]
    fn reference_dag_facts() {
        let (dag, m) = reference_dag();
        let n = |v| names(&dag, &m, v);
        assert_eq!(n(dag.ancestors(m["H"]).unwrap()), ["A", "E", "g"]);
        assert_eq!(n(dag.past(m["H"]).unwrap()), ["A", "B", "C", "E", "F", "g"]);
        assert_eq!(n(dag.direct_future(m["F"]).unwrap()), ["H", "I"]);
        assert_eq!(n(dag.anticone(m["E"]).unwrap()), ["D", "G", "I"]);
        assert_eq!(dag.distance(m["A"], m["H"]).unwrap(), 2);
        assert_eq!(n(DagView::leaves(&dag)), ["G", "H", "I"]);
    }

    #[test]
    fn genesis_relations_are_empty() {
        let (dag, _) = reference_dag();
        let g = dag.genesis().unwrap();
        assert!(dag.ancestors(g).unwrap().is_empty());
        assert!(dag.past(g).unwrap().is_empty());
        assert_eq!(dag.distance(g, g).unwrap(), 0);
    }

    #[test]
    fn insertion_errors() {
        let g = Block::genesis(Hash256::ZERO);
        let mut dag = BlockDag::new();
        assert_eq!(DagView::leaves(&dag), vec![]);
        let orphan = Block::new(g.id, [], None, vec![], 0, Hash256::ZERO);
        assert!(matches!(
            dag.insert(orphan.clone()),
            Err(DagError::DanglingReference { .. })
        ));
        dag.insert(g.clone()).unwrap();
        assert_eq!(dag.len(), 1);
        assert_eq!(DagView::leaves(&dag), vec![BlockIx(0)]);
        assert_eq!(dag.insert(g.clone()), Err(DagError::DuplicateId(g.id)));
        assert_eq!(
            dag.insert(Block::genesis(Hash256::MAX)),
            Err(DagError::SecondGenesis)
        );
        dag.insert(orphan).unwrap();
    }

    #[test]
    fn incomparable_distance_is_an_error() {
        let (dag, m) = reference_dag();
        assert!(matches!(
            dag.distance(m["E"], m["D"]),
            Err(DagError::IncomparableBlocks(..))
        ));
    }

    #[test]
    fn shared_proofs_form_double() {
        use crate::vrf_beacon::EligibilityProof;
        let g = Block::genesis(Hash256::ZERO);
        let mut dag = BlockDag::with_genesis(g.clone());
        let proof = EligibilityProof {
            participant: 0,
            y: Hash256::MAX,
            proof: Hash256::ZERO,
            rnd: 1,
            redraw_depth: 0,
        };
        let mk = |tx: u8| Block::new(g.id, [], Some(proof), vec![tx], 0, Hash256::ZERO);
        dag.insert(mk(1)).unwrap();
        assert!(detect_double(&dag).is_empty());
        dag.insert(mk(2)).unwrap();
        assert_eq!(detect_double(&dag).len(), 2);
        dag.insert(mk(3)).unwrap();
        assert_eq!(detect_double(&dag).len(), 3);
        let first_two = ViewState::prefix(&dag, 3);
        assert_eq!(detect_double(&first_two.on(&dag)).len(), 2);
    }

    #[test]
    fn bcpc_drops_minority_blocks() {
        let (dag, m) = reference_dag();
        let full = ViewState::prefix(&dag, dag.len());
        let small = ViewState::prefix(&dag, m["E"].index());
        let views: Vec<View> = vec![full.on(&dag), small.on(&dag), small.on(&dag)];
        let common = bcpc(&views);
        assert_eq!(common.len(), m["E"].index());
        let same: Vec<View> = vec![full.on(&dag); 3];
        assert_eq!(bcpc(&same).len(), dag.len());
    }

    #[test]
    fn edge_score_counts_closure_edges() {
        let (dag, m) = reference_dag();
        // H's closure: g A B C E F H with edges A,C,F,B,E(3),H(2)
        assert_eq!(dag.edge_score(m["H"]), 9);
        assert_eq!(dag.edge_score(m["A"]), 1);
        assert_eq!(dag.edge_score(dag.genesis().unwrap()), 0);
    }

    #[test]
    fn truncate_restores_prefix() {
        let (full, _) = reference_dag();
        for keep in 1..full.len() {
            let mut dag = full.clone();
            dag.truncate(keep);
            let mut fresh = BlockDag::new();
            for ix in full.indices().take(keep) {
                fresh.insert(full.block(ix).clone()).unwrap();
            }
            assert_eq!(dag.len(), keep);
            assert_eq!(dag.global_leaves(), fresh.global_leaves());
            for ix in dag.indices() {
                assert_eq!(dag.children(ix), fresh.children(ix));
                assert_eq!(dag.referrers(ix), fresh.referrers(ix));
            }
            let last = full.block(BlockIx(keep as u32)).clone();
            assert!(!dag.contains_id(&last.id));
            assert_eq!(dag.insert(last).unwrap(), BlockIx(keep as u32));
        }
    }
}
