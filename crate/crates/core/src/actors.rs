//! GLC actors: a graph decorated with actor names, links between actors,
//! message-driven behaviors, and cores wrapped in masks.
//!
//! The simulator keeps one central graph plus an ownership map. Actors never
//! touch nodes they do not own; every cross-actor effect is a [`Message`]
//! delivered through a FIFO mailbox, one message per scheduler step.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Dir, NodeId, NodeKind, PortGraph, Splice, WireId};
use crate::rewrite::{apply_in_place, detachable_source, find_sites, FanInWiring, Match, Mode, Rule};

/// Unordered pair of actor names with an index separating parallel links.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkLabel {
    pub left: String,
    pub right: String,
    pub index: usize,
}

impl LinkLabel {
    pub fn new(a: &str, b: &str, index: usize) -> LinkLabel {
        let (left, right) = if a <= b { (a, b) } else { (b, a) };
        LinkLabel { left: left.to_string(), right: right.to_string(), index }
    }

    pub fn touches(&self, actor: &str) -> bool {
        self.left == actor || self.right == actor
    }

    fn other(&self, actor: &str) -> &str {
        if self.left == actor {
            &self.right
        } else {
            &self.left
        }
    }
}

impl fmt::Display for LinkLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<:{}|:{}>_{}", self.left, self.right, self.index)
    }
}

/// `<:f|:b> ∘ <:b|:d> = <:f|:d>`. When the labels share both addresses the
/// greater one is eliminated, which keeps the operation symmetric.
pub fn compose_labels(l1: &LinkLabel, l2: &LinkLabel) -> Result<LinkLabel, ActorError> {
    let common: Vec<&String> = [&l1.left, &l1.right].into_iter().filter(|a| l2.touches(a)).collect();
    let middle = common.into_iter().max().ok_or_else(|| ActorError::NoCommonAddress(l1.to_string(), l2.to_string()))?;
    Ok(LinkLabel::new(l1.other(middle), l2.other(middle), l1.index.min(l2.index)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    /// Sent by the actor holding the λ (or fan-in) node; `bits` is the node
    /// descriptor: kind bit plus two orientation bits.
    QueryNode { rule: Rule, nodes: [NodeId; 2], bits: u8 },
    ConfirmSite { ok: bool },
    Relabel { old: LinkLabel, new: Option<LinkLabel> },
    AckRelabel { link: LinkLabel },
    /// Hands over a FanOut (an order to copy), or in glc mode a node of a
    /// subgraph that a FanOut held by the receiver is about to copy.
    NameChange { node: NodeId },
    /// Hands over a Termination: an order to prune.
    PruneOrder { node: NodeId },
    SpawnRequest { name: String, nodes: Vec<NodeId> },
    CoreExpress { unit: bool },
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::QueryNode { .. } => "QueryNode",
            Message::ConfirmSite { .. } => "ConfirmSite",
            Message::Relabel { .. } => "Relabel",
            Message::AckRelabel { .. } => "AckRelabel",
            Message::NameChange { .. } => "NameChange",
            Message::PruneOrder { .. } => "PruneOrder",
            Message::SpawnRequest { .. } => "SpawnRequest",
            Message::CoreExpress { .. } => "CoreExpress",
        }
    }

    /// Payload size outside the addresses.
    pub fn payload_bits(&self) -> u32 {
        match self {
            Message::QueryNode { .. } => 3,
            Message::ConfirmSite { .. } | Message::CoreExpress { .. } => 1,
            Message::Relabel { old, .. } => usize::BITS - old.index.leading_zeros(),
            Message::AckRelabel { .. } | Message::SpawnRequest { .. } => 0,
            Message::NameChange { .. } | Message::PruneOrder { .. } => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub from: String,
    pub to: String,
    pub msg: Message,
    pub interaction: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Event {
    pub seq: u64,
    pub actor: String,
    #[serde(rename = "message-kind")]
    pub kind: String,
    #[serde(rename = "payload-bits")]
    pub payload_bits: u32,
    #[serde(rename = "links-touched")]
    pub links_touched: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peer: Option<String>,
    pub interaction: u64,
    pub nodes: Vec<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

pub fn events_to_jsonl(events: &[Event]) -> String {
    events.iter().map(|e| serde_json::to_string(e).unwrap() + "\n").collect()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActorError {
    #[error("node {0} has no actor")]
    PartialPartition(NodeId),
    #[error("partition names node {0}, which is not in the graph")]
    UnknownNode(NodeId),
    #[error("no actor named :{0}")]
    UnknownActor(String),
    #[error("link {0} is not a reduction site between two actors")]
    NotASite(String),
    #[error("link {0} no longer exists")]
    StaleLink(String),
    #[error("node {0} cannot change its actor")]
    WrongKind(NodeId),
    #[error("node {0} has no link to :{1}")]
    NoCommonLink(NodeId, String),
    #[error("actor :{0} is connected")]
    NotDisconnected(String),
    #[error("actor name :{0} is taken")]
    NameTaken(String),
    #[error("actor :{0} has no core")]
    NoCore(String),
    #[error("labels {0} and {1} share no address")]
    NoCommonAddress(String, String),
    #[error("partition line {0}: {1}")]
    BadPartition(usize, String),
    #[error("event limit of {limit} reached")]
    EventLimitExceeded { limit: usize, partial: Box<(PortGraph, Vec<Event>)> },
}

/// Expresses one step of a core: rewrites the graph around `core` and
/// returns the replacement core node with its new state, or `None` once the
/// core has dissolved.
pub type ExpressFn = fn(&mut PortGraph, NodeId, u64) -> Option<(NodeId, u64)>;

pub const COUNTER_TAG: &str = "counter";

/// Counter core with ports (f: in, base: in, top: out). For n > 0 it emits
/// one unit `f1 base` on top of the base and keeps n - 1; for n = 0 it
/// terminates `f` and wires the base straight to the top.
pub fn express_counter(g: &mut PortGraph, core: NodeId, n: u64) -> Option<(NodeId, u64)> {
    let (f, base, top) = (g.port_wire(core, 0), g.port_wire(core, 1), g.port_wire(core, 2));
    let mut s = Splice::new(g);
    s.remove(core);
    if n == 0 {
        s.add(NodeKind::Termination, &[f]);
        s.join(base, top);
        return None;
    }
    let (f1, f2, mid) = (s.fresh(), s.fresh(), s.fresh());
    s.add(NodeKind::FanOut, &[f, f1, f2]);
    s.add(NodeKind::Application, &[f1, base, mid]);
    let next = s.add(counter_kind(), &[f2, mid, top]);
    Some((next, n - 1))
}

pub fn counter_kind() -> NodeKind {
    NodeKind::Core { tag: COUNTER_TAG.to_string(), dirs: vec![Dir::In, Dir::In, Dir::Out] }
}

/// λf.λx.counter(f, x) : the Church numeral mask around a counter core.
/// Returns the graph and the core node.
pub fn numeral_mask() -> (PortGraph, NodeId) {
    let g = crate::mol::parse_mol("L x f root\nL top x2 x\nC counter 3 iio f x2 top\n").expect("numeral mask");
    (g, 2)
}

/// λn.λf.λx.counter(f, n f x) with one pending unit: the successor mask.
/// Returns the graph and the core node.
pub fn successor_mask() -> (PortGraph, NodeId) {
    let text = "L b1 n root\nL b2 f b1\nL top x b2\nFO f fa fb\nA n fb nf\nA nf x base\nC counter 3 iio fa base top\n";
    (crate::mol::parse_mol(text).expect("successor mask"), 6)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchedulerPolicy {
    RoundRobin,
    Random(u64),
}

#[derive(Clone, Debug)]
pub struct Scheduler {
    policy: SchedulerPolicy,
    rng: Option<ChaCha8Rng>,
    cursor: Option<String>,
}

impl Scheduler {
    pub fn new(policy: SchedulerPolicy) -> Scheduler {
        let rng = match policy {
            SchedulerPolicy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            SchedulerPolicy::RoundRobin => None,
        };
        Scheduler { policy, rng, cursor: None }
    }

    pub fn policy(&self) -> &SchedulerPolicy {
        &self.policy
    }

    fn pick(&mut self, ready: &[String]) -> String {
        match self.rng.as_mut() {
            Some(rng) => ready[rng.gen_range(0..ready.len())].clone(),
            None => {
                let next = match &self.cursor {
                    Some(c) => ready.iter().find(|a| *a > c).unwrap_or(&ready[0]),
                    None => &ready[0],
                };
                self.cursor = Some(next.clone());
                next.clone()
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Action {
    Probe { rule: Rule, nodes: [NodeId; 2], to: String },
    Internal(Match),
    Hand { node: NodeId, to: String, prune: bool },
    Split { nodes: Vec<NodeId> },
    Express(NodeId),
}

#[derive(Clone, Debug, Default)]
struct Pending {
    /// Relabels the initiator owes once the site is confirmed:
    /// (peripheral owner, old label, new label).
    initiator_relabels: Vec<(String, LinkLabel, Option<LinkLabel>)>,
    acks: usize,
}

#[derive(Clone, Debug)]
pub struct ActorSystem {
    graph: PortGraph,
    owner: BTreeMap<NodeId, String>,
    mailboxes: BTreeMap<String, VecDeque<Envelope>>,
    cores: BTreeMap<NodeId, u64>,
    express: BTreeMap<String, ExpressFn>,
    mode: Mode,
    wiring: FanInWiring,
    locked: BTreeSet<NodeId>,
    waiting: BTreeSet<String>,
    queries: BTreeMap<u64, NodeId>,
    pending: BTreeMap<u64, Pending>,
    next_interaction: u64,
    spawned: usize,
    log: Vec<Event>,
}

/// Decorate `g` with actor names. Every node must be assigned.
pub fn prepare(g: &PortGraph, partition: &BTreeMap<NodeId, String>) -> Result<ActorSystem, ActorError> {
    for id in g.node_ids() {
        if !partition.contains_key(&id) {
            return Err(ActorError::PartialPartition(id));
        }
    }
    if let Some(id) = partition.keys().find(|id| !g.contains_node(**id)) {
        return Err(ActorError::UnknownNode(*id));
    }
    let mailboxes = partition.values().map(|a| (a.clone(), VecDeque::new())).collect();
    let mut express: BTreeMap<String, ExpressFn> = BTreeMap::new();
    express.insert(COUNTER_TAG.to_string(), express_counter);
    Ok(ActorSystem {
        graph: g.clone(),
        owner: partition.clone(),
        mailboxes,
        cores: BTreeMap::new(),
        express,
        mode: Mode::Glc,
        wiring: FanInWiring::default(),
        locked: BTreeSet::new(),
        waiting: BTreeSet::new(),
        queries: BTreeMap::new(),
        pending: BTreeMap::new(),
        next_interaction: 1,
        spawned: 0,
        log: Vec::new(),
    })
}

/// Nodes in breadth-first order from the smallest id of each component, cut
/// into `n` contiguous chunks named `a, b, c, ...`.
pub fn auto_partition(g: &PortGraph, n: usize) -> BTreeMap<NodeId, String> {
    let mut order = Vec::new();
    let mut seen = BTreeSet::new();
    for start in g.node_ids() {
        if !seen.insert(start) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for p in 0..g.node(v).unwrap().ports.len() {
                if let Some((m, _)) = g.peer_port(v, p) {
                    if seen.insert(m) {
                        queue.push_back(m);
                    }
                }
            }
        }
    }
    let n = n.max(1);
    let chunk = order.len().div_ceil(n).max(1);
    order.into_iter().enumerate().map(|(i, v)| (v, actor_name(i / chunk))).collect()
}

fn actor_name(i: usize) -> String {
    let letter = (b'a' + (i % 26) as u8) as char;
    if i < 26 {
        letter.to_string()
    } else {
        format!("{letter}{}", i / 26)
    }
}

/// Lines `node-id actor-name`; the name may carry a leading `:`.
pub fn parse_partition(text: &str) -> Result<BTreeMap<NodeId, String>, ActorError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(ActorError::BadPartition(i + 1, "expected `node-id actor-name`".into()));
        }
        let id: NodeId = toks[0].parse().map_err(|_| ActorError::BadPartition(i + 1, "node id is not a number".into()))?;
        let name = toks[1].trim_start_matches(':');
        if name.is_empty() {
            return Err(ActorError::BadPartition(i + 1, "empty actor name".into()));
        }
        out.insert(id, name.to_string());
    }
    Ok(out)
}

/// Unoriented actors diagram: edge multiplicities keyed by sorted name pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActorsDiagram {
    pub actors: BTreeSet<String>,
    pub edges: BTreeMap<(String, String), usize>,
}

impl ActorsDiagram {
    pub fn edge_set(&self) -> BTreeSet<(String, String)> {
        self.edges.keys().cloned().collect()
    }
}

impl fmt::Display for ActorsDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.actors.iter().map(|a| format!(":{a}")).collect();
        writeln!(f, "actors {}", names.join(" "))?;
        for ((a, b), m) in &self.edges {
            writeln!(f, ":{a} -- :{b} x{m}")?;
        }
        Ok(())
    }
}

impl ActorSystem {
    pub fn with_mode(mut self, mode: Mode) -> ActorSystem {
        self.mode = mode;
        self
    }

    pub fn with_fan_in(mut self, wiring: FanInWiring) -> ActorSystem {
        self.wiring = wiring;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn graph(&self) -> &PortGraph {
        &self.graph
    }

    pub fn owner(&self, node: NodeId) -> Option<&str> {
        self.owner.get(&node).map(String::as_str)
    }

    pub fn actor_names(&self) -> Vec<String> {
        self.mailboxes.keys().cloned().collect()
    }

    pub fn nodes_of(&self, actor: &str) -> Vec<NodeId> {
        self.owner.iter().filter(|(_, a)| *a == actor).map(|(n, _)| *n).collect()
    }

    pub fn log(&self) -> &[Event] {
        &self.log
    }

    pub fn core_value(&self, node: NodeId) -> Option<u64> {
        self.cores.get(&node).copied()
    }

    /// Give a core node its initial state.
    pub fn set_core(&mut self, node: NodeId, value: u64) {
        self.cores.insert(node, value);
    }

    /// Register the express rule for cores with `tag`.
    pub fn register_core(&mut self, tag: &str, f: ExpressFn) {
        self.express.insert(tag.to_string(), f);
    }

    /// Every cross-actor wire with its label. Indices count the wires of
    /// each actor pair in wire order, starting at 1.
    pub fn links(&self) -> BTreeMap<WireId, LinkLabel> {
        let mut count: BTreeMap<(String, String), usize> = BTreeMap::new();
        let mut out = BTreeMap::new();
        for (id, w) in self.graph.wires() {
            let (Some(s), Some(d)) = (w.src.node(), w.dst.node()) else { continue };
            let (a, b) = (&self.owner[&s], &self.owner[&d]);
            if a == b {
                continue;
            }
            let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            let i = count.entry(key).or_insert(0);
            *i += 1;
            out.insert(id, LinkLabel::new(a, b, *i));
        }
        out
    }

    pub fn actors_diagram(&self) -> ActorsDiagram {
        let mut edges = BTreeMap::new();
        for l in self.links().values() {
            *edges.entry((l.left.clone(), l.right.clone())).or_insert(0) += 1;
        }
        ActorsDiagram { actors: self.mailboxes.keys().cloned().collect(), edges }
    }

    fn core_adjacent(&self) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        for (id, n) in self.graph.nodes() {
            if matches!(n.kind, NodeKind::Core { .. }) {
                out.insert(id);
                for p in 0..n.ports.len() {
                    if let Some((m, _)) = self.graph.peer_port(id, p) {
                        out.insert(m);
                    }
                }
            }
        }
        out
    }

    fn free(&self, n: NodeId, blocked: &BTreeSet<NodeId>) -> bool {
        !self.locked.contains(&n) && !blocked.contains(&n)
    }

    fn log_event(&mut self, actor: &str, msg: &Message, peer: Option<&str>, interaction: u64, nodes: Vec<NodeId>, links: Vec<String>) {
        let seq = self.log.len() as u64 + 1;
        self.log.push(Event {
            seq,
            actor: actor.to_string(),
            kind: msg.kind().to_string(),
            payload_bits: msg.payload_bits(),
            links_touched: links,
            peer: peer.map(str::to_string),
            interaction,
            nodes,
            detail: None,
        });
    }

    fn send(&mut self, from: &str, to: &str, msg: Message, interaction: u64) {
        self.mailboxes.entry(to.to_string()).or_default().push_back(Envelope { from: from.to_string(), to: to.to_string(), msg, interaction });
    }

    fn fresh_interaction(&mut self) -> u64 {
        let i = self.next_interaction;
        self.next_interaction += 1;
        i
    }

    /// Cross-actor sites the actor can initiate, in ascending link order.
    fn probes(&self, actor: &str, blocked: &BTreeSet<NodeId>) -> Vec<(LinkLabel, Rule, [NodeId; 2], String)> {
        let links = self.links();
        let mut rules = vec![Rule::Beta];
        if self.mode == Mode::Chemlambda {
            rules.push(Rule::FanIn);
        }
        let mut out = Vec::new();
        for rule in rules {
            for m in find_sites(&self.graph, rule) {
                let (x, y) = (m.nodes[0], m.nodes[1]);
                if self.owner[&x] != actor || self.owner[&y] == actor || !self.free(x, blocked) || !self.free(y, blocked) {
                    continue;
                }
                let w = self.graph.port_wire(x, 2);
                out.push((links[&w].clone(), rule, [x, y], self.owner[&y].clone()));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    fn internal_site(&self, actor: &str, blocked: &BTreeSet<NodeId>) -> Option<Match> {
        for &rule in self.mode.priority() {
            for m in find_sites(&self.graph, rule) {
                if m.nodes.iter().all(|n| self.owner[n] == actor && self.free(*n, blocked)) {
                    return Some(m);
                }
            }
        }
        None
    }

    fn is_prune_source(&self, node: NodeId, port: usize) -> bool {
        matches!(
            (self.graph.kind(node), port),
            (Some(NodeKind::Application | NodeKind::Lambda | NodeKind::FanIn), 2) | (Some(NodeKind::FanOut), 1 | 2) | (Some(NodeKind::Stub), 0)
        )
    }

    fn handover(&self, actor: &str, blocked: &BTreeSet<NodeId>) -> Option<Action> {
        for n in self.nodes_of(actor) {
            if !self.free(n, blocked) {
                continue;
            }
            let Some((src, port)) = self.graph.peer_port(n, 0) else { continue };
            let to = &self.owner[&src];
            if to == actor {
                continue;
            }
            match self.graph.kind(n) {
                Some(NodeKind::Termination) if self.is_prune_source(src, port) && self.free(src, blocked) => {
                    return Some(Action::Hand { node: n, to: to.clone(), prune: true });
                }
                Some(NodeKind::FanOut) => return Some(Action::Hand { node: n, to: to.clone(), prune: false }),
                _ => {}
            }
        }
        if self.mode == Mode::Glc {
            // gather a detachable subgraph at the actor holding its fan-out
            for (f, node) in self.graph.nodes() {
                if node.kind != NodeKind::FanOut || !self.free(f, blocked) {
                    continue;
                }
                let Some((root, _)) = self.graph.peer_port(f, 0) else { continue };
                let holder = &self.owner[&f];
                if self.owner[&root] != *holder {
                    continue;
                }
                if let Some(set) = detachable_source(&self.graph, f) {
                    if let Some(&n) = set.iter().find(|n| self.owner[*n] == actor && self.free(**n, blocked)) {
                        if holder != actor {
                            return Some(Action::Hand { node: n, to: holder.clone(), prune: false });
                        }
                    }
                }
            }
        }
        None
    }

    fn components_of(&self, actor: &str) -> Vec<Vec<NodeId>> {
        let mine: BTreeSet<NodeId> = self.nodes_of(actor).into_iter().collect();
        let mut seen = BTreeSet::new();
        let mut comps = Vec::new();
        for &s in &mine {
            if !seen.insert(s) {
                continue;
            }
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for p in 0..self.graph.node(v).unwrap().ports.len() {
                    if let Some((m, _)) = self.graph.peer_port(v, p) {
                        if mine.contains(&m) && seen.insert(m) {
                            comp.push(m);
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

    fn expressible_core(&self, actor: &str) -> Option<NodeId> {
        self.nodes_of(actor).into_iter().find(|n| match self.graph.kind(*n) {
            Some(NodeKind::Core { tag, .. }) => self.express.contains_key(tag) && self.cores.contains_key(n) && !self.locked.contains(n),
            _ => false,
        })
    }

    fn idle_action(&self, actor: &str, blocked: &BTreeSet<NodeId>) -> Option<Action> {
        if !self.waiting.contains(actor) {
            if let Some((_, rule, nodes, to)) = self.probes(actor, blocked).into_iter().next() {
                return Some(Action::Probe { rule, nodes, to });
            }
        }
        if let Some(m) = self.internal_site(actor, blocked) {
            return Some(Action::Internal(m));
        }
        if let Some(a) = self.handover(actor, blocked) {
            return Some(a);
        }
        let comps = if self.waiting.contains(actor) { Vec::new() } else { self.components_of(actor) };
        if comps.len() >= 2 {
            let nodes = comps.into_iter().skip(1).flatten().collect();
            return Some(Action::Split { nodes });
        }
        self.expressible_core(actor).map(Action::Express)
    }

    fn spawn_name(&mut self, base: &str) -> String {
        let base = base.trim_end_matches(|c: char| c.is_ascii_digit());
        loop {
            self.spawned += 1;
            let name = format!("{base}{}", self.spawned);
            if !self.mailboxes.contains_key(&name) {
                return name;
            }
        }
    }

    fn perform(&mut self, actor: &str, action: Action) {
        match action {
            Action::Probe { rule, nodes, to } => {
                let id = self.fresh_interaction();
                let kind_bit = u8::from(rule == Rule::Beta);
                let orientation = if rule == Rule::Beta { 0b01 } else { 0b00 };
                let msg = Message::QueryNode { rule, nodes, bits: kind_bit | orientation << 1 };
                self.locked.insert(nodes[0]);
                self.queries.insert(id, nodes[0]);
                self.waiting.insert(actor.to_string());
                self.send(actor, &to, msg, id);
            }
            Action::Internal(m) => {
                let id = self.fresh_interaction();
                let created = apply_in_place(&mut self.graph, &m, self.wiring).expect("internal site is current");
                self.forget_removed();
                for n in created {
                    self.owner.insert(n, actor.to_string());
                }
                let seq = self.log.len() as u64 + 1;
                self.log.push(Event {
                    seq,
                    actor: actor.to_string(),
                    kind: "InternalMove".into(),
                    payload_bits: 0,
                    links_touched: Vec::new(),
                    peer: None,
                    interaction: id,
                    nodes: m.nodes.clone(),
                    detail: Some(m.rule.name().to_string()),
                });
            }
            Action::Hand { node, to, prune } => {
                let id = self.fresh_interaction();
                self.locked.insert(node);
                let msg = if prune { Message::PruneOrder { node } } else { Message::NameChange { node } };
                self.send(actor, &to, msg, id);
            }
            Action::Split { nodes } => {
                let id = self.fresh_interaction();
                let name = self.spawn_name(actor);
                self.split_off(actor, &name, &nodes, id);
            }
            Action::Express(core) => {
                let id = self.fresh_interaction();
                self.express_core(actor, core, id);
            }
        }
    }

    fn split_off(&mut self, actor: &str, name: &str, nodes: &[NodeId], id: u64) {
        let msg = Message::SpawnRequest { name: name.to_string(), nodes: nodes.to_vec() };
        self.mailboxes.insert(name.to_string(), VecDeque::new());
        for n in nodes {
            self.owner.insert(*n, name.to_string());
        }
        self.log_event(actor, &msg, Some(name), id, nodes.to_vec(), Vec::new());
    }

    fn express_core(&mut self, actor: &str, core: NodeId, id: u64) {
        let Some(NodeKind::Core { tag, .. }) = self.graph.kind(core).cloned() else { return };
        let f = self.express[&tag];
        let value = self.cores.remove(&core).unwrap_or(0);
        let before: BTreeSet<NodeId> = self.graph.node_ids().into_iter().collect();
        let next = f(&mut self.graph, core, value);
        self.owner.remove(&core);
        let created: Vec<NodeId> = self.graph.node_ids().into_iter().filter(|n| !before.contains(n)).collect();
        for n in &created {
            self.owner.insert(*n, actor.to_string());
        }
        let unit = next.is_some();
        if let Some((c, v)) = next {
            self.cores.insert(c, v);
        }
        let msg = Message::CoreExpress { unit };
        let detail = Some(if unit { format!("unit, {} left", value - 1) } else { "empty stack".to_string() });
        self.log_event(actor, &msg, None, id, created, Vec::new());
        self.log.last_mut().unwrap().detail = detail;
    }

    fn forget_removed(&mut self) {
        let g = &self.graph;
        self.owner.retain(|n, _| g.contains_node(*n));
        self.locked.retain(|n| g.contains_node(*n));
        self.cores.retain(|n, _| g.contains_node(*n));
    }

    /// Peripheral ends of a two-node site: for each non-link port of each
    /// site node, the node on the other side and its port, grouped by the
    /// site node that handles it.
    fn peripheral(&self, nodes: [NodeId; 2]) -> Vec<(usize, NodeId, usize)> {
        let link_ports = [2usize, 0usize];
        let mut out = Vec::new();
        for (side, &n) in nodes.iter().enumerate() {
            for p in 0..3 {
                if p == link_ports[side] {
                    continue;
                }
                if let Some((m, q)) = self.graph.peer_port(n, p) {
                    if !nodes.contains(&m) {
                        out.push((side, m, q));
                    }
                }
            }
        }
        out
    }

    fn site_current(&self, rule: Rule, nodes: [NodeId; 2], from: &str, to: &str) -> Option<Match> {
        let blocked = self.core_adjacent();
        if !nodes.iter().all(|n| self.graph.contains_node(*n)) {
            return None;
        }
        if self.owner[&nodes[0]] != from || self.owner[&nodes[1]] != to || blocked.contains(&nodes[0]) || !self.free(nodes[1], &blocked) {
            return None;
        }
        find_sites(&self.graph, rule).into_iter().find(|m| m.nodes == nodes)
    }

    fn process(&mut self, env: Envelope) {
        let me = env.to.clone();
        let id = env.interaction;
        match env.msg.clone() {
            Message::QueryNode { rule, nodes, .. } => {
                let links = self.links();
                let link = self.graph.contains_node(nodes[0]).then(|| self.graph.port_wire(nodes[0], 2)).and_then(|w| links.get(&w)).map(|l| l.to_string());
                self.log_event(&me, &env.msg, Some(&env.from), id, nodes.to_vec(), link.into_iter().collect());
                let Some(m) = self.site_current(rule, nodes, &env.from, &me) else {
                    self.send(&me, &env.from, Message::ConfirmSite { ok: false }, id);
                    return;
                };
                let ends = self.peripheral(nodes);
                let before = self.links();
                let pre_wires: Vec<WireId> = ends.iter().map(|(_, m, q)| self.graph.port_wire(*m, *q)).collect();
                apply_in_place(&mut self.graph, &m, self.wiring).expect("confirmed site is current");
                self.forget_removed();
                let after = self.links();
                let mut pending = Pending::default();
                for ((side, n, q), pre) in ends.into_iter().zip(pre_wires) {
                    if !self.graph.contains_node(n) {
                        continue;
                    }
                    let holder = if side == 0 { &env.from } else { &me };
                    let peripheral_owner = self.owner[&n].clone();
                    if peripheral_owner == *holder {
                        continue;
                    }
                    let old = before[&pre].clone();
                    let new = after.get(&self.graph.port_wire(n, q)).cloned();
                    if side == 0 {
                        pending.initiator_relabels.push((peripheral_owner, old, new));
                    } else {
                        self.send(&me, &peripheral_owner, Message::Relabel { old, new }, id);
                        pending.acks += 1;
                    }
                }
                self.pending.insert(id, pending);
                self.send(&me, &env.from, Message::ConfirmSite { ok: true }, id);
            }
            Message::ConfirmSite { ok } => {
                self.log_event(&me, &env.msg, Some(&env.from), id, Vec::new(), Vec::new());
                self.waiting.remove(&me);
                if let Some(n) = self.queries.remove(&id) {
                    self.locked.remove(&n);
                }
                if ok {
                    let relabels = self.pending.get_mut(&id).map(|p| std::mem::take(&mut p.initiator_relabels)).unwrap_or_default();
                    for (to, old, new) in relabels {
                        self.send(&me, &to, Message::Relabel { old, new }, id);
                        self.pending.entry(id).or_default().acks += 1;
                    }
                }
                self.finish_if_done(id);
            }
            Message::Relabel { old, new } => {
                let mut links = vec![old.to_string()];
                links.extend(new.as_ref().map(|l| l.to_string()));
                self.log_event(&me, &env.msg, Some(&env.from), id, Vec::new(), links);
                self.send(&me, &env.from, Message::AckRelabel { link: old }, id);
            }
            Message::AckRelabel { link } => {
                self.log_event(&me, &env.msg, Some(&env.from), id, Vec::new(), vec![link.to_string()]);
                if let Some(p) = self.pending.get_mut(&id) {
                    p.acks = p.acks.saturating_sub(1);
                }
                self.finish_if_done(id);
            }
            Message::NameChange { node } | Message::PruneOrder { node } => {
                let links = self.links();
                let touched: Vec<String> = if self.graph.contains_node(node) {
                    (0..self.graph.node(node).unwrap().ports.len()).filter_map(|p| links.get(&self.graph.port_wire(node, p)).map(|l| l.to_string())).collect()
                } else {
                    Vec::new()
                };
                self.log_event(&me, &env.msg, Some(&env.from), id, vec![node], touched);
                if self.graph.contains_node(node) {
                    self.owner.insert(node, me.clone());
                    self.locked.remove(&node);
                }
            }
            Message::SpawnRequest { .. } | Message::CoreExpress { .. } => {
                self.log_event(&me, &env.msg, Some(&env.from), id, Vec::new(), Vec::new());
            }
        }
    }

    fn finish_if_done(&mut self, id: u64) {
        if self.pending.get(&id).is_some_and(|p| p.acks == 0 && p.initiator_relabels.is_empty()) {
            self.pending.remove(&id);
        }
    }

    fn ready(&self) -> Vec<(String, Option<Action>)> {
        let blocked = self.core_adjacent();
        let mut out = Vec::new();
        for (name, mb) in &self.mailboxes {
            if !mb.is_empty() {
                out.push((name.clone(), None));
            } else if let Some(a) = self.idle_action(name, &blocked) {
                out.push((name.clone(), Some(a)));
            }
        }
        out
    }

    /// One scheduler step. Returns false when the system is quiescent.
    pub fn step(&mut self, sched: &mut Scheduler) -> bool {
        let ready = self.ready();
        if ready.is_empty() {
            return false;
        }
        let names: Vec<String> = ready.iter().map(|(n, _)| n.clone()).collect();
        let who = sched.pick(&names);
        let action = ready.into_iter().find(|(n, _)| *n == who).unwrap().1;
        match action {
            None => {
                let env = self.mailboxes.get_mut(&who).unwrap().pop_front().unwrap();
                self.process(env);
            }
            Some(a) => self.perform(&who, a),
        }
        true
    }

    /// Run until quiescent. Returns the final graph and the event log.
    pub fn run(&mut self, sched: &mut Scheduler, max_events: usize) -> Result<(PortGraph, Vec<Event>), ActorError> {
        let mut steps = 0usize;
        while self.step(sched) {
            steps += 1;
            if steps >= max_events && !self.ready().is_empty() {
                return Err(ActorError::EventLimitExceeded { limit: max_events, partial: Box::new((self.graph.clone(), self.log.clone())) });
            }
        }
        Ok((self.graph.clone(), self.log.clone()))
    }

    /// Deliver every queued message of one interaction, oldest first.
    fn drain(&mut self, id: u64) {
        loop {
            let found = self.mailboxes.iter().find_map(|(a, mb)| mb.iter().position(|e| e.interaction == id).map(|i| (a.clone(), i)));
            let Some((a, i)) = found else { break };
            let env = self.mailboxes.get_mut(&a).unwrap().remove(i).unwrap();
            self.process(env);
        }
    }

    fn require_actor(&self, actor: &str) -> Result<(), ActorError> {
        if self.mailboxes.contains_key(actor) {
            Ok(())
        } else {
            Err(ActorError::UnknownActor(actor.to_string()))
        }
    }

    /// Behavior 1: the full reduction exchange across one link.
    pub fn behavior_interaction(&mut self, link: &LinkLabel) -> Result<(), ActorError> {
        let links = self.links();
        let Some((&w, _)) = links.iter().find(|(_, l)| *l == link) else {
            return Err(ActorError::StaleLink(link.to_string()));
        };
        let wire = self.graph.wire(w).unwrap();
        let (Some(x), Some(y)) = (wire.src.node(), wire.dst.node()) else {
            return Err(ActorError::NotASite(link.to_string()));
        };
        let mut rules = vec![Rule::Beta];
        if self.mode == Mode::Chemlambda {
            rules.push(Rule::FanIn);
        }
        let rule = rules.into_iter().find(|r| find_sites(&self.graph, *r).iter().any(|m| m.nodes == [x, y])).ok_or_else(|| ActorError::NotASite(link.to_string()))?;
        let (from, to) = (self.owner[&x].clone(), self.owner[&y].clone());
        self.perform(&from, Action::Probe { rule, nodes: [x, y], to });
        let id = self.next_interaction - 1;
        self.drain(id);
        Ok(())
    }

    /// Behavior 2: hand a FanOut or Termination to a linked actor.
    pub fn behavior_name_change(&mut self, node: NodeId, to: &str) -> Result<(), ActorError> {
        self.require_actor(to)?;
        let prune = match self.graph.kind(node) {
            Some(NodeKind::FanOut) => false,
            Some(NodeKind::Termination) => true,
            _ => return Err(ActorError::WrongKind(node)),
        };
        let n = self.graph.node(node).unwrap();
        let linked = (0..n.ports.len()).any(|p| self.graph.peer_port(node, p).is_some_and(|(m, _)| self.owner[&m] == to));
        if !linked || self.owner[&node] == to {
            return Err(ActorError::NoCommonLink(node, to.to_string()));
        }
        let from = self.owner[&node].clone();
        self.perform(&from, Action::Hand { node, to: to.to_string(), prune });
        let id = self.next_interaction - 1;
        self.drain(id);
        Ok(())
    }

    /// Behavior 3: up to `budget` moves on sites the actor owns entirely.
    /// Returns the number of moves made.
    pub fn behavior_internal(&mut self, actor: &str, budget: usize) -> Result<usize, ActorError> {
        self.require_actor(actor)?;
        let mut done = 0;
        while done < budget {
            let blocked = self.core_adjacent();
            let Some(m) = self.internal_site(actor, &blocked) else { break };
            self.perform(actor, Action::Internal(m));
            done += 1;
        }
        Ok(done)
    }

    /// Behavior 4: move every component but the first to a new actor.
    pub fn behavior_split(&mut self, actor: &str, new: &str) -> Result<(), ActorError> {
        self.require_actor(actor)?;
        if self.mailboxes.contains_key(new) {
            return Err(ActorError::NameTaken(new.to_string()));
        }
        let comps = self.components_of(actor);
        if comps.len() < 2 {
            return Err(ActorError::NotDisconnected(actor.to_string()));
        }
        let nodes: Vec<NodeId> = comps.into_iter().skip(1).flatten().collect();
        let id = self.fresh_interaction();
        self.split_off(actor, new, &nodes, id);
        Ok(())
    }

    /// Behavior 5: express one step of the actor's core.
    pub fn behavior_core_express(&mut self, actor: &str) -> Result<(), ActorError> {
        self.require_actor(actor)?;
        let core = self.expressible_core(actor).ok_or_else(|| ActorError::NoCore(actor.to_string()))?;
        let id = self.fresh_interaction();
        self.express_core(actor, core, id);
        Ok(())
    }
}
