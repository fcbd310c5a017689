//! Blocks, the append-only blockDAG and its derived relations.

mod block;
mod dag;
mod export;
pub mod fixtures;
mod view;

pub use block::{Block, BlockId};
pub use dag::{bcpc, detect_double, AncestorIter, BlockDag, BlockIx, DagError, DagView};
pub use export::{snapshot, to_dot};
pub use view::{SetView, View, ViewState};
