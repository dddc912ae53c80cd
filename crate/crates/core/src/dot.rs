//! Graphviz export.
//!
//! Every node gets one node statement with a shape per kind. Free half-arrows
//! appear only inside edge statements in a block whose default node shape is
//! `point`, so they render as small terminals without adding node statements.

use std::fmt::Write as _;

use crate::graph::{End, NodeKind, PortGraph};

fn shape(kind: &NodeKind) -> &'static str {
    match kind {
        NodeKind::Lambda => "triangle",
        NodeKind::Application => "invtriangle",
        NodeKind::FanOut => "trapezium",
        NodeKind::FanIn => "invtrapezium",
        NodeKind::Dilation(_) => "diamond",
        NodeKind::Termination => "square",
        NodeKind::Stub => "circle",
        NodeKind::Core { .. } => "doubleoctagon",
    }
}

fn label(kind: &NodeKind) -> String {
    match kind {
        NodeKind::Dilation(s) => format!("D {s}"),
        NodeKind::Core { tag, .. } => format!("C {tag}"),
        k => k.mnemonic().to_string(),
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn end_id(e: &End, fallback: &str) -> String {
    match e {
        End::Port(n, _) => format!("n{n}"),
        End::Free(l) => quote(&format!("free:{l}")),
        End::Hole => quote(fallback),
    }
}

pub fn to_dot(g: &PortGraph) -> String {
    let mut out = String::from("digraph glc {\n");
    for (id, n) in g.nodes() {
        writeln!(out, "  n{id} [label={}, shape={}];", quote(&label(&n.kind)), shape(&n.kind)).unwrap();
    }
    let mut inner = String::new();
    let mut free = String::new();
    for (id, w) in g.wires() {
        let (s, d) = (end_id(&w.src, &format!("hole:{id}s")), end_id(&w.dst, &format!("hole:{id}d")));
        let mut attrs = Vec::new();
        if let End::Port(_, p) = w.src {
            attrs.push(format!("taillabel=\"{p}\""));
        }
        if let End::Port(_, p) = w.dst {
            attrs.push(format!("headlabel=\"{p}\""));
        }
        let attrs = if attrs.is_empty() { String::new() } else { format!(" [{}]", attrs.join(", ")) };
        let line = format!("    {s} -> {d}{attrs};\n");
        if w.src.node().is_some() && w.dst.node().is_some() {
            inner.push_str(&line[2..]);
        } else {
            free.push_str(&line);
        }
    }
    out.push_str(&inner);
    if !free.is_empty() {
        out.push_str("  {\n    node [shape=point];\n");
        out.push_str(&free);
        out.push_str("  }\n");
    }
    if g.loops() > 0 {
        writeln!(out, "  // node-free loops: {}", g.loops()).unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol::parse_mol;

    #[test]
    fn empty_graph() {
        assert_eq!(to_dot(&PortGraph::new()), "digraph glc {\n}\n");
    }

    #[test]
    fn k_graph() {
        let dot = to_dot(&parse_mol("L b v o\nL x y b\nT y").unwrap());
        assert_eq!(dot.lines().filter(|l| l.starts_with("  n") && l.contains("shape=")).count(), 3);
        assert!(dot.contains("node [shape=point]"));
        assert!(dot.contains("\"free:o\""));
    }
}
