use fixedbitset::FixedBitSet;

use super::dag::{BlockDag, BlockIx, DagView};

/// A participant's partial knowledge of a shared [`BlockDag`] store.
///
/// Always downward closed: a block is admitted only after everything it
/// references.
#[derive(Clone, Debug, Default)]
pub struct ViewState {
    known: FixedBitSet,
    members: Vec<BlockIx>,
    leaves: Vec<BlockIx>,
}

impl ViewState {
    pub fn new() -> Self {
        Self::default()
    }

    /// View holding only the genesis block of `dag`.
    pub fn with_genesis(dag: &BlockDag) -> Self {
        let mut v = Self::new();
        let g = dag.genesis().expect("dag has a genesis block");
        v.admit(dag, g);
        v
    }

    /// View of the first `len` blocks of a store.
    pub fn prefix(dag: &BlockDag, len: usize) -> Self {
        let mut v = Self::new();
        for ix in dag.indices().take(len) {
            v.admit(dag, ix);
        }
        v
    }

    pub fn knows(&self, ix: BlockIx) -> bool {
        self.known.contains(ix.index())
    }

    pub fn can_admit(&self, dag: &BlockDag, ix: BlockIx) -> bool {
        dag.targets(ix).all(|t| self.knows(t))
    }

    /// Adds `ix` if all its targets are known. Returns whether the view
    /// changed.
    pub fn admit(&mut self, dag: &BlockDag, ix: BlockIx) -> bool {
        if self.knows(ix) || !self.can_admit(dag, ix) {
            return false;
        }
        self.known.grow(ix.index() + 1);
        self.known.insert(ix.index());
        self.members.push(ix);
        self.leaves.retain(|l| !dag.closure(ix).contains(l.index()));
        self.leaves.push(ix);
        true
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn known(&self) -> &FixedBitSet {
        &self.known
    }

    pub fn leaf_slice(&self) -> &[BlockIx] {
        &self.leaves
    }

    /// Members in admission order, which is topological.
    pub fn member_slice(&self) -> &[BlockIx] {
        &self.members
    }

    pub fn on<'a>(&'a self, dag: &'a BlockDag) -> View<'a> {
        View { dag, state: self }
    }
}

/// A [`ViewState`] paired with the store it indexes.
#[derive(Clone, Copy)]
pub struct View<'a> {
    pub dag: &'a BlockDag,
    pub state: &'a ViewState,
}

impl DagView for View<'_> {
    fn dag(&self) -> &BlockDag {
        self.dag
    }

    fn contains(&self, ix: BlockIx) -> bool {
        self.state.knows(ix)
    }

    fn leaves(&self) -> Vec<BlockIx> {
        let mut v = self.state.leaves.clone();
        v.sort();
        v
    }

    fn members(&self) -> Vec<BlockIx> {
        self.state.members.clone()
    }

    fn size(&self) -> usize {
        self.state.len()
    }
}

/// Arbitrary downward-closed block set over a store, e.g. `Past(B)`.
#[derive(Clone, Debug)]
pub struct SetView<'a> {
    dag: &'a BlockDag,
    set: FixedBitSet,
}

impl<'a> SetView<'a> {
    /// Caller guarantees `set` is downward closed.
    pub fn new(dag: &'a BlockDag, mut set: FixedBitSet) -> Self {
        set.grow(dag.len());
        SetView { dag, set }
    }

    /// `Past(b)`.
    pub fn past(dag: &'a BlockDag, b: BlockIx) -> Self {
        let mut set = dag.closure(b).clone();
        set.set(b.index(), false);
        Self::new(dag, set)
    }

    /// `Past(b) ∪ {b}`.
    pub fn closure(dag: &'a BlockDag, b: BlockIx) -> Self {
        Self::new(dag, dag.closure(b).clone())
    }

    /// Union of the closures of `targets`: the past of a block with those
    /// targets.
    pub fn union_of(dag: &'a BlockDag, targets: impl IntoIterator<Item = BlockIx>) -> Self {
        let mut set = FixedBitSet::with_capacity(dag.len());
        for t in targets {
            set.union_with(dag.closure(t));
        }
        Self::new(dag, set)
    }

    pub fn set(&self) -> &FixedBitSet {
        &self.set
    }
}

impl DagView for SetView<'_> {
    fn dag(&self) -> &BlockDag {
        self.dag
    }

    fn contains(&self, ix: BlockIx) -> bool {
        self.set.contains(ix.index())
    }

    fn leaves(&self) -> Vec<BlockIx> {
        let dag = self.dag;
        self.set
            .ones()
            .map(|i| BlockIx(i as u32))
            .filter(|x| {
                !dag.children(*x)
                    .iter()
                    .chain(dag.referrers(*x))
                    .any(|s| self.set.contains(s.index()))
            })
            .collect()
    }

    fn members(&self) -> Vec<BlockIx> {
        self.set.ones().map(|i| BlockIx(i as u32)).collect()
    }

    fn size(&self) -> usize {
        self.set.count_ones(..)
    }
}
