use std::fmt::Write;

use super::dag::{BlockIx, DagView};

/// One line per block, topological order: `id prev [leaf,...] sender proof-hash`.
/// Absent fields print as `-`.
pub fn snapshot<V: DagView + ?Sized>(view: &V) -> String {
    let dag = view.dag();
    let mut out = String::new();
    for ix in view.members() {
        let b = dag.block(ix);
        let prev = b.prev.map_or("-".to_string(), |p| p.to_hex());
        let leaves: Vec<String> = b.leaves.iter().map(|l| l.to_hex()).collect();
        let sender = b.sender.map_or("-".to_string(), |s| s.to_string());
        let proof = b
            .proof
            .as_ref()
            .map_or("-".to_string(), |_| b.proof_hash().to_hex());
        writeln!(
            out,
            "{} {} [{}] {} {}",
            b.id,
            prev,
            leaves.join(","),
            sender,
            proof
        )
        .expect("write to string");
    }
    out
}

/// Graphviz rendering; bets are solid, references dashed.
pub fn to_dot<V: DagView + ?Sized>(view: &V, label: impl Fn(BlockIx) -> Option<String>) -> String {
    let dag = view.dag();
    let mut out = String::from("digraph blockdag {\n  rankdir=RL;\n  node [shape=box];\n");
    for ix in view.members() {
        let b = dag.block(ix);
        let name = label(ix).unwrap_or_else(|| b.id.short());
        writeln!(out, "  n{} [label=\"{}\"];", ix.0, name).expect("write to string");
        if let Some(p) = dag.prev(ix) {
            writeln!(out, "  n{} -> n{};", ix.0, p.0).expect("write to string");
        }
        for r in dag.refs(ix) {
            writeln!(out, "  n{} -> n{} [style=dashed];", ix.0, r.0).expect("write to string");
        }
    }
    out.push_str("}\n");
    out
}
