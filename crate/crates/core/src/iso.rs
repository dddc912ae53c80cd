//! Exact isomorphism test for port graphs.
//!
//! Ports carry distinct roles, so inside a connected component a single
//! anchor pair determines the whole mapping; the search backtracks over the
//! anchor image and over the pairing of components.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::graph::{End, NodeId, PortGraph};

pub const DEFAULT_NODE_LIMIT: usize = 200;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IsoError {
    #[error("graph has {nodes} nodes, above the isomorphism bound of {limit}")]
    SizeLimitExceeded { nodes: usize, limit: usize },
}

pub fn is_isomorphic(g1: &PortGraph, g2: &PortGraph) -> Result<bool, IsoError> {
    is_isomorphic_bounded(g1, g2, DEFAULT_NODE_LIMIT)
}

pub fn is_isomorphic_bounded(g1: &PortGraph, g2: &PortGraph, limit: usize) -> Result<bool, IsoError> {
    for g in [g1, g2] {
        if g.node_count() > limit {
            return Err(IsoError::SizeLimitExceeded { nodes: g.node_count(), limit });
        }
    }
    if g1.node_count() != g2.node_count() || g1.loops() != g2.loops() || bare_arrows(g1) != bare_arrows(g2) {
        return Ok(false);
    }
    let mut k1: Vec<_> = g1.nodes().map(|(_, n)| n.kind.clone()).collect();
    let mut k2: Vec<_> = g2.nodes().map(|(_, n)| n.kind.clone()).collect();
    k1.sort();
    k2.sort();
    if k1 != k2 {
        return Ok(false);
    }

    let c1 = g1.components();
    let c2 = g2.components();
    if c1.len() != c2.len() {
        return Ok(false);
    }
    // Isomorphism of components is an equivalence, so greedy pairing is exact.
    let mut used = vec![false; c2.len()];
    'outer: for comp in &c1 {
        let anchor = comp[0];
        let kind = &g1.node(anchor).unwrap().kind;
        for (j, other) in c2.iter().enumerate() {
            if used[j] || other.len() != comp.len() {
                continue;
            }
            for &cand in other {
                if g2.node(cand).unwrap().kind != *kind {
                    continue;
                }
                if extend(g1, g2, anchor, cand).is_some_and(|m| m.len() == comp.len()) {
                    used[j] = true;
                    continue 'outer;
                }
            }
        }
        return Ok(false);
    }
    Ok(true)
}

fn bare_arrows(g: &PortGraph) -> usize {
    g.wires().filter(|(_, w)| w.src.node().is_none() && w.dst.node().is_none()).count()
}

/// Grow the mapping forced by `a -> b` across the component.
fn extend(g1: &PortGraph, g2: &PortGraph, a: NodeId, b: NodeId) -> Option<HashMap<NodeId, NodeId>> {
    let mut fwd: HashMap<NodeId, NodeId> = HashMap::new();
    let mut back: HashMap<NodeId, NodeId> = HashMap::new();
    let mut queue = VecDeque::new();
    fwd.insert(a, b);
    back.insert(b, a);
    queue.push_back((a, b));
    while let Some((x, y)) = queue.pop_front() {
        let nx = g1.node(x)?;
        let ny = g2.node(y)?;
        if nx.kind != ny.kind || nx.ports.len() != ny.ports.len() {
            return None;
        }
        for p in 0..nx.ports.len() {
            match (nx.ports[p], ny.ports[p]) {
                (None, None) => continue,
                (Some(_), Some(_)) => {}
                _ => return None,
            }
            let wx = g1.wire(nx.ports[p].unwrap())?;
            let wy = g2.wire(ny.ports[p].unwrap())?;
            let x_is_src = wx.src == End::Port(x, p);
            let y_is_src = wy.src == End::Port(y, p);
            if x_is_src != y_is_src {
                return None;
            }
            let (ox, oy) = if x_is_src { (&wx.dst, &wy.dst) } else { (&wx.src, &wy.src) };
            match (ox, oy) {
                (End::Port(u, q), End::Port(v, r)) => {
                    if q != r {
                        return None;
                    }
                    match (fwd.get(u), back.get(v)) {
                        (Some(m), Some(n)) => {
                            if m != v || n != u {
                                return None;
                            }
                        }
                        (None, None) => {
                            fwd.insert(*u, *v);
                            back.insert(*v, *u);
                            queue.push_back((*u, *v));
                        }
                        _ => return None,
                    }
                }
                (End::Free(_), End::Free(_)) | (End::Hole, End::Hole) => {}
                _ => return None,
            }
        }
    }
    Some(fwd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol::parse_mol;

    fn iso(a: &str, b: &str) -> bool {
        is_isomorphic(&parse_mol(a).unwrap(), &parse_mol(b).unwrap()).unwrap()
    }

    #[test]
    fn renamed_labels_are_isomorphic() {
        assert!(iso("L b v o\nL x y b\nT y", "L q r s\nL t u q\nT u"));
        // node order does not matter either
        assert!(iso("L b v o\nL x y b\nT y", "T u\nL t u q\nL q r s"));
    }

    #[test]
    fn k_is_not_i() {
        assert!(!iso("L v v o\nL b x v2\n", "L x x o"));
        assert!(!iso("L b x o\nL x y b\nT y", "L x x o"));
    }

    #[test]
    fn fanout_roles_are_distinct() {
        // out1 feeds a termination, out2 stays free: swapping is not an isomorphism
        assert!(!iso("FO i a b\nT a", "FO i a b\nT b"));
        assert!(iso("FO i a b", "FO j c d"));
    }

    #[test]
    fn loop_counts_matter() {
        assert!(!iso("LOOP 1", ""));
        assert!(iso("LOOP 2", "LOOP 2"));
        assert!(!iso("ARROW a b", ""));
    }

    #[test]
    fn disjoint_copies() {
        let k = "L b x o\nL x y b\nT y\n";
        let k2 = "L b x o\nL x y b\nT y\nL b' x' o'\nL x' y' b'\nT y'\n";
        assert!(!iso(k, k2));
        assert!(iso(k2, "L B X O\nL B2 X2 O2\nL X Y B\nT Y\nL X2 Y2 B2\nT Y2"));
    }

    #[test]
    fn size_limit() {
        let g = parse_mol("T a\nT b\nT c").unwrap();
        assert!(matches!(is_isomorphic_bounded(&g, &g, 2), Err(IsoError::SizeLimitExceeded { .. })));
    }
}
