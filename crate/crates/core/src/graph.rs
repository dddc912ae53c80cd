//! Oriented trivalent port graphs: the state of every GLC graph and
//! chemlambda molecule.
//!
//! A graph is a set of nodes, each with a fixed list of ports, and a set of
//! wires. A wire runs from an out-directed end to an in-directed end; an end
//! is either a node port or a free half-arrow carrying a label. Closed arrows
//! that touch no node are kept as a plain counter.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_rational::Ratio;

pub type NodeId = u32;
pub type WireId = u32;

/// Direction of a port as seen from its node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    In,
    Out,
}

/// Element of the scale group: positive rationals under multiplication.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scale(Ratio<i64>);

impl Scale {
    pub fn new(numer: i64, denom: i64) -> Option<Scale> {
        if denom == 0 {
            return None;
        }
        let r = Ratio::new(numer, denom);
        if r <= Ratio::from_integer(0) {
            return None;
        }
        Some(Scale(r))
    }

    pub fn one() -> Scale {
        Scale(Ratio::from_integer(1))
    }

    pub fn compose(self, other: Scale) -> Scale {
        Scale(self.0 * other.0)
    }

    pub fn inverse(self) -> Scale {
        Scale(self.0.recip())
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self.0.denom() == 1 {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = ();

    fn from_str(s: &str) -> Result<Scale, ()> {
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let n: i64 = n.trim().parse().map_err(|_| ())?;
        let d: i64 = d.trim().parse().map_err(|_| ())?;
        Scale::new(n, d).ok_or(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Lambda,
    Application,
    FanOut,
    FanIn,
    Dilation(Scale),
    Termination,
    Stub,
    Core { tag: String, dirs: Vec<Dir> },
}

const LAMBDA_PORTS: [Dir; 3] = [Dir::In, Dir::Out, Dir::Out];
const APP_PORTS: [Dir; 3] = [Dir::In, Dir::In, Dir::Out];
const FANOUT_PORTS: [Dir; 3] = [Dir::In, Dir::Out, Dir::Out];
const TERM_PORTS: [Dir; 1] = [Dir::In];
const STUB_PORTS: [Dir; 1] = [Dir::Out];

impl NodeKind {
    /// Port directions in the frozen port order.
    pub fn ports(&self) -> &[Dir] {
        match self {
            NodeKind::Lambda => &LAMBDA_PORTS,
            NodeKind::Application | NodeKind::FanIn | NodeKind::Dilation(_) => &APP_PORTS,
            NodeKind::FanOut => &FANOUT_PORTS,
            NodeKind::Termination => &TERM_PORTS,
            NodeKind::Stub => &STUB_PORTS,
            NodeKind::Core { dirs, .. } => dirs,
        }
    }

    pub fn arity(&self) -> usize {
        self.ports().len()
    }

    pub fn port_role(&self, port: usize) -> &'static str {
        let roles: &[&'static str] = match self {
            NodeKind::Lambda => &["body-in", "var-out", "out"],
            NodeKind::Application => &["fun-in", "arg-in", "out"],
            NodeKind::FanOut => &["in", "out1", "out2"],
            NodeKind::FanIn | NodeKind::Dilation(_) => &["in1", "in2", "out"],
            NodeKind::Termination => &["in"],
            NodeKind::Stub => &["out"],
            NodeKind::Core { dirs, .. } => {
                return match dirs.get(port) {
                    Some(Dir::In) => "core-in",
                    _ => "core-out",
                }
            }
        };
        roles.get(port).copied().unwrap_or("?")
    }

    /// Short tag used by the molecule text format.
    pub fn mnemonic(&self) -> &'static str {
        match self {
            NodeKind::Lambda => "L",
            NodeKind::Application => "A",
            NodeKind::FanOut => "FO",
            NodeKind::FanIn => "FI",
            NodeKind::Dilation(_) => "D",
            NodeKind::Termination => "T",
            NodeKind::Stub => "ST",
            NodeKind::Core { .. } => "C",
        }
    }
}

/// One end of a wire.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    Port(NodeId, usize),
    Free(String),
    /// Transient: the port this end was attached to has been removed and the
    /// end is waiting to be reconnected. Never present in a valid graph.
    Hole,
}

impl End {
    pub fn node(&self) -> Option<NodeId> {
        match self {
            End::Port(n, _) => Some(*n),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wire {
    pub src: End,
    pub dst: End,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub ports: Vec<Option<WireId>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PortGraph {
    nodes: BTreeMap<NodeId, Node>,
    wires: BTreeMap<WireId, Wire>,
    loops: usize,
    next_node: NodeId,
    next_wire: WireId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    DanglingPort,
    Orientation,
    DuplicateFreeLabel,
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            ViolationKind::DanglingPort => "dangling port",
            ViolationKind::Orientation => "orientation",
            ViolationKind::DuplicateFreeLabel => "duplicate free label",
            ViolationKind::Inconsistent => "inconsistent",
        };
        write!(f, "{tag}: {}", self.detail)
    }
}

impl PortGraph {
    pub fn new() -> PortGraph {
        PortGraph::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.wires.is_empty() && self.loops == 0
    }

    pub fn loops(&self) -> usize {
        self.loops
    }

    pub fn add_loops(&mut self, n: usize) {
        self.loops += n;
    }

    pub fn set_loops(&mut self, n: usize) {
        self.loops = n;
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().map(|(id, n)| (*id, n))
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.keys().copied().collect()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn kind(&self, id: NodeId) -> Option<&NodeKind> {
        self.nodes.get(&id).map(|n| &n.kind)
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn wires(&self) -> impl Iterator<Item = (WireId, &Wire)> {
        self.wires.iter().map(|(id, w)| (*id, w))
    }

    pub fn wire(&self, id: WireId) -> Option<&Wire> {
        self.wires.get(&id)
    }

    pub fn wire_count(&self) -> usize {
        self.wires.len()
    }

    pub fn count_kind(&self, pred: impl Fn(&NodeKind) -> bool) -> usize {
        self.nodes.values().filter(|n| pred(&n.kind)).count()
    }

    /// Wire attached to `port` of `node`. Panics if the port is dangling,
    /// which cannot happen in a valid graph.
    pub fn port_wire(&self, node: NodeId, port: usize) -> WireId {
        self.nodes[&node].ports[port].expect("dangling port")
    }

    /// The end at the other side of the wire attached to (`node`, `port`).
    pub fn peer(&self, node: NodeId, port: usize) -> &End {
        let w = &self.wires[&self.port_wire(node, port)];
        if w.src == End::Port(node, port) {
            &w.dst
        } else {
            &w.src
        }
    }

    /// Node and port on the other side of (`node`, `port`), if it is a node.
    pub fn peer_port(&self, node: NodeId, port: usize) -> Option<(NodeId, usize)> {
        match self.peer(node, port) {
            End::Port(n, p) => Some((*n, *p)),
            _ => None,
        }
    }

    /// Free half-arrow labels with the direction of the arrow relative to the
    /// graph: `Dir::In` for arrows entering the graph.
    pub fn free_ends(&self) -> Vec<(String, Dir)> {
        let mut out = Vec::new();
        for w in self.wires.values() {
            if let End::Free(l) = &w.src {
                out.push((l.clone(), Dir::In));
            }
            if let End::Free(l) = &w.dst {
                out.push((l.clone(), Dir::Out));
            }
        }
        out.sort();
        out
    }

    pub fn add_node(&mut self, kind: NodeKind) -> NodeId {
        let id = self.next_node;
        self.next_node += 1;
        let arity = kind.arity();
        self.nodes.insert(id, Node { kind, ports: vec![None; arity] });
        id
    }

    pub fn new_wire(&mut self) -> WireId {
        self.insert_wire(End::Hole, End::Hole)
    }

    pub fn insert_wire(&mut self, src: End, dst: End) -> WireId {
        let id = self.next_wire;
        self.next_wire += 1;
        self.wires.insert(id, Wire { src, dst });
        id
    }

    pub(crate) fn wire_mut(&mut self, id: WireId) -> &mut Wire {
        self.wires.get_mut(&id).expect("unknown wire")
    }

    pub(crate) fn remove_wire(&mut self, id: WireId) -> Option<Wire> {
        self.wires.remove(&id)
    }

    /// Exchange two ports of a node, carrying their wires along.
    pub(crate) fn swap_ports(&mut self, node: NodeId, p: usize, q: usize) {
        let ports = &mut self.nodes.get_mut(&node).expect("unknown node").ports;
        ports.swap(p, q);
        let (wp, wq) = (ports[p], ports[q]);
        for (w, from, to) in [(wp, q, p), (wq, p, q)] {
            let Some(w) = w else { continue };
            let wire = self.wires.get_mut(&w).unwrap();
            for end in [&mut wire.src, &mut wire.dst] {
                if *end == End::Port(node, from) {
                    *end = End::Port(node, to);
                    break;
                }
            }
        }
    }

    /// Attach `wire` to `port` of `node`, filling the wire end selected by the
    /// port direction. Returns false when that end is already occupied.
    pub fn plug(&mut self, node: NodeId, port: usize, wire: WireId) -> bool {
        let dir = self.nodes[&node].kind.ports()[port];
        let w = self.wires.get_mut(&wire).expect("unknown wire");
        let end = match dir {
            Dir::Out => &mut w.src,
            Dir::In => &mut w.dst,
        };
        if *end != End::Hole {
            return false;
        }
        *end = End::Port(node, port);
        self.nodes.get_mut(&node).unwrap().ports[port] = Some(wire);
        true
    }

    /// Attach without orientation checks: use the natural end when free,
    /// otherwise the opposite one. Only for building deliberately invalid
    /// graphs.
    pub(crate) fn plug_lenient(&mut self, node: NodeId, port: usize, wire: WireId) -> bool {
        if self.plug(node, port, wire) {
            return true;
        }
        let w = self.wires.get_mut(&wire).unwrap();
        let end = if w.src == End::Hole { &mut w.src } else if w.dst == End::Hole { &mut w.dst } else { return false };
        *end = End::Port(node, port);
        self.nodes.get_mut(&node).unwrap().ports[port] = Some(wire);
        true
    }

    /// Remove a node; every end that pointed at it becomes a hole.
    pub fn remove_node(&mut self, id: NodeId) -> Option<Node> {
        let node = self.nodes.remove(&id)?;
        for (p, w) in node.ports.iter().enumerate() {
            if let Some(w) = w {
                if let Some(wire) = self.wires.get_mut(w) {
                    if wire.src == End::Port(id, p) {
                        wire.src = End::Hole;
                    }
                    if wire.dst == End::Port(id, p) {
                        wire.dst = End::Hole;
                    }
                }
            }
        }
        Some(node)
    }

    /// Turn every remaining hole into a free half-arrow. `name` receives the
    /// wire id and whether the hole was a source end.
    pub fn close_holes(&mut self, mut name: impl FnMut(WireId, bool) -> String) {
        for (id, w) in self.wires.iter_mut() {
            if w.src == End::Hole {
                w.src = End::Free(name(*id, true));
            }
            if w.dst == End::Hole {
                w.dst = End::Free(name(*id, false));
            }
        }
    }

    /// Connected components over nodes, each sorted, ordered by smallest id.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = BTreeSet::new();
        let mut comps = Vec::new();
        for &start in self.nodes.keys() {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = vec![];
            let mut stack = vec![start];
            seen.insert(start);
            while let Some(n) = stack.pop() {
                comp.push(n);
                for p in 0..self.nodes[&n].ports.len() {
                    if self.nodes[&n].ports[p].is_none() {
                        continue;
                    }
                    if let Some((m, _)) = self.peer_port(n, p) {
                        if seen.insert(m) {
                            stack.push(m);
                        }
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Copy the given nodes (and the wires between them) into fresh ids.
    /// Wires leaving the set are left as holes on the copy side; the map from
    /// original to copied node ids is returned along with the map of boundary
    /// wire ends `(original node, port) -> new wire`.
    pub fn duplicate(&mut self, set: &[NodeId]) -> (HashMap<NodeId, NodeId>, HashMap<(NodeId, usize), WireId>) {
        let members: BTreeSet<NodeId> = set.iter().copied().collect();
        let mut map = HashMap::new();
        for &n in &members {
            let kind = self.nodes[&n].kind.clone();
            map.insert(n, self.add_node(kind));
        }
        let mut wire_map: HashMap<WireId, WireId> = HashMap::new();
        let mut boundary = HashMap::new();
        for &n in &members {
            let arity = self.nodes[&n].ports.len();
            for p in 0..arity {
                let Some(w) = self.nodes[&n].ports[p] else { continue };
                let inside = self.peer(n, p).node().is_some_and(|m| members.contains(&m));
                let nw = if inside {
                    *wire_map.entry(w).or_insert_with(|| {
                        let id = self.next_wire;
                        self.next_wire += 1;
                        self.wires.insert(id, Wire { src: End::Hole, dst: End::Hole });
                        id
                    })
                } else {
                    let nw = self.new_wire();
                    boundary.insert((n, p), nw);
                    nw
                };
                let ok = self.plug(map[&n], p, nw);
                debug_assert!(ok);
            }
        }
        (map, boundary)
    }

    /// Check every structural invariant. An empty report means the graph is
    /// valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (&id, node) in &self.nodes {
            let dirs = node.kind.ports();
            if dirs.len() != node.ports.len() {
                out.push(Violation { kind: ViolationKind::Inconsistent, detail: format!("node {id} has wrong port count") });
                continue;
            }
            for (p, w) in node.ports.iter().enumerate() {
                let role = node.kind.port_role(p);
                let Some(w) = w else {
                    out.push(Violation {
                        kind: ViolationKind::DanglingPort,
                        detail: format!("node {id} ({}) port {role} is unconnected", node.kind.mnemonic()),
                    });
                    continue;
                };
                let Some(wire) = self.wires.get(w) else {
                    out.push(Violation { kind: ViolationKind::Inconsistent, detail: format!("node {id} refers to missing wire {w}") });
                    continue;
                };
                let here = End::Port(id, p);
                let expected = match dirs[p] {
                    Dir::Out => &wire.src,
                    Dir::In => &wire.dst,
                };
                if *expected != here {
                    if wire.src == here || wire.dst == here {
                        out.push(Violation {
                            kind: ViolationKind::Orientation,
                            detail: format!("wire {w} attaches to node {id} port {role} against its direction"),
                        });
                    } else {
                        out.push(Violation { kind: ViolationKind::Inconsistent, detail: format!("wire {w} does not point back at node {id} port {role}") });
                    }
                }
            }
        }
        let mut labels: HashMap<&str, usize> = HashMap::new();
        for (&id, w) in &self.wires {
            for end in [&w.src, &w.dst] {
                match end {
                    End::Hole => out.push(Violation { kind: ViolationKind::DanglingPort, detail: format!("wire {id} has an open end") }),
                    End::Free(l) => *labels.entry(l.as_str()).or_default() += 1,
                    End::Port(n, p) => {
                        let ok = self.nodes.get(n).and_then(|node| node.ports.get(*p)).is_some_and(|x| *x == Some(id));
                        if !ok {
                            out.push(Violation { kind: ViolationKind::Inconsistent, detail: format!("wire {id} points at node {n} port {p} which does not hold it") });
                        }
                    }
                }
            }
        }
        let mut dups: Vec<_> = labels.into_iter().filter(|(_, c)| *c > 1).map(|(l, _)| l.to_string()).collect();
        dups.sort();
        for l in dups {
            out.push(Violation { kind: ViolationKind::DuplicateFreeLabel, detail: format!("free label {l} occurs more than once") });
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

/// Incremental graph surgery used by the rewrite rules.
///
/// Removing nodes leaves holes on the wires that touched them; `join` fuses a
/// wire whose target is a hole with a wire whose source is a hole. Fusing a
/// wire with itself closes a node-free loop.
pub(crate) struct Splice<'g> {
    pub g: &'g mut PortGraph,
    alias: HashMap<WireId, WireId>,
}

impl<'g> Splice<'g> {
    pub fn new(g: &'g mut PortGraph) -> Splice<'g> {
        Splice { g, alias: HashMap::new() }
    }

    pub fn resolve(&self, mut w: WireId) -> WireId {
        while let Some(&n) = self.alias.get(&w) {
            w = n;
        }
        w
    }

    pub fn remove(&mut self, n: NodeId) {
        self.g.remove_node(n);
    }

    pub fn drop_wire(&mut self, w: WireId) {
        let w = self.resolve(w);
        self.g.remove_wire(w);
    }

    /// Connect the source of `a` to the target of `b`.
    pub fn join(&mut self, a: WireId, b: WireId) {
        let a = self.resolve(a);
        let b = self.resolve(b);
        debug_assert_eq!(self.g.wires[&a].dst, End::Hole);
        debug_assert_eq!(self.g.wires[&b].src, End::Hole);
        if a == b {
            self.g.remove_wire(a);
            self.g.loops += 1;
            return;
        }
        let bw = self.g.remove_wire(b).unwrap();
        if let End::Port(n, p) = &bw.dst {
            self.g.nodes.get_mut(n).unwrap().ports[*p] = Some(a);
        }
        self.g.wire_mut(a).dst = bw.dst;
        self.alias.insert(b, a);
    }

    /// Add a node whose ports attach to the given wires.
    pub fn add(&mut self, kind: NodeKind, wires: &[WireId]) -> NodeId {
        let n = self.g.add_node(kind);
        for (p, &w) in wires.iter().enumerate() {
            let w = self.resolve(w);
            let ok = self.g.plug(n, p, w);
            debug_assert!(ok, "port already occupied");
        }
        n
    }

    pub fn fresh(&mut self) -> WireId {
        self.g.new_wire()
    }
}
