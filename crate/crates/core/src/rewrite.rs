//! GLC and chemlambda moves, site matching, and reduction strategies.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{End, NodeId, NodeKind, PortGraph, Splice, WireId};

/// Identifier written into every trace header for the random strategy.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Beta,
    CoComm,
    CoAssoc,
    PruneApp,
    PruneFanOut,
    PruneLambda,
    PruneTermStub,
    PruneFanIn,
    FanIn,
    DistApp,
    DistLambda,
    DistFanOut,
    GlobalFanOut,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Locality {
    Local,
    Global,
}

impl Rule {
    pub const ALL: [Rule; 13] = [
        Rule::Beta,
        Rule::CoComm,
        Rule::CoAssoc,
        Rule::PruneApp,
        Rule::PruneFanOut,
        Rule::PruneLambda,
        Rule::PruneTermStub,
        Rule::PruneFanIn,
        Rule::FanIn,
        Rule::DistApp,
        Rule::DistLambda,
        Rule::DistFanOut,
        Rule::GlobalFanOut,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Beta => "BETA",
            Rule::CoComm => "CO-COMM",
            Rule::CoAssoc => "CO-ASSOC",
            Rule::PruneApp => "PRUNE-APP",
            Rule::PruneFanOut => "PRUNE-FANOUT",
            Rule::PruneLambda => "PRUNE-LAMBDA",
            Rule::PruneTermStub => "PRUNE-TERM-STUB",
            Rule::PruneFanIn => "PRUNE-FANIN",
            Rule::FanIn => "FAN-IN",
            Rule::DistApp => "DIST-APP",
            Rule::DistLambda => "DIST-LAMBDA",
            Rule::DistFanOut => "DIST-FANOUT",
            Rule::GlobalFanOut => "GLOBAL-FANOUT",
        }
    }

    pub fn from_name(s: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name().eq_ignore_ascii_case(s))
    }

    pub fn locality(self) -> Locality {
        if self == Rule::GlobalFanOut {
            Locality::Global
        } else {
            Locality::Local
        }
    }

    pub fn is_prune(self) -> bool {
        matches!(self, Rule::PruneApp | Rule::PruneFanOut | Rule::PruneLambda | Rule::PruneTermStub | Rule::PruneFanIn)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Glc,
    Chemlambda,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Glc => "glc",
            Mode::Chemlambda => "chemlambda",
        }
    }

    /// Rules applied by the automatic strategies, in priority order.
    pub fn priority(self) -> &'static [Rule] {
        match self {
            Mode::Glc => &[
                Rule::Beta,
                Rule::PruneApp,
                Rule::PruneFanOut,
                Rule::PruneLambda,
                Rule::PruneTermStub,
                Rule::PruneFanIn,
                Rule::GlobalFanOut,
            ],
            Mode::Chemlambda => &[
                Rule::Beta,
                Rule::FanIn,
                Rule::DistApp,
                Rule::DistLambda,
                Rule::PruneApp,
                Rule::PruneFanOut,
                Rule::PruneLambda,
                Rule::PruneTermStub,
                Rule::PruneFanIn,
            ],
        }
    }

    /// Every rule a script may name in this mode.
    pub fn allows(self, rule: Rule) -> bool {
        match rule {
            Rule::GlobalFanOut => self == Mode::Glc,
            Rule::FanIn | Rule::DistApp | Rule::DistLambda | Rule::DistFanOut => self == Mode::Chemlambda,
            _ => true,
        }
    }
}

/// How FAN-IN reconnects its two inputs to the two FanOut outputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FanInWiring {
    /// in1 -> out2, in2 -> out1
    #[default]
    Crossing,
    /// in1 -> out1, in2 -> out2
    Parallel,
}

impl FanInWiring {
    /// FanIn inputs for a pair of copies, ordered so that FAN-IN sends the
    /// first copy's wire to out1.
    fn pair(self, first: WireId, second: WireId) -> [WireId; 2] {
        match self {
            FanInWiring::Crossing => [second, first],
            FanInWiring::Parallel => [first, second],
        }
    }
}

/// A located occurrence of a rule's left-hand side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Match {
    pub rule: Rule,
    pub nodes: Vec<NodeId>,
    /// Which output carries the second node, for rules with symmetric variants.
    pub variant: u8,
    /// Port wires of the matched nodes when the match was taken.
    pub wires: Vec<WireId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("match for {0} no longer describes the graph")]
    StaleMatch(Rule),
    #[error("rule {0} is not enabled in {1} mode")]
    RuleNotEnabled(Rule, &'static str),
    #[error("the subgraph feeding the fan-out is not detachable")]
    NotDetachable,
    #[error("node {0} cannot be duplicated by local moves")]
    Unsupported(NodeId),
    #[error("scripted rule {rule} has no site at step {step}")]
    ScriptRuleInapplicable { step: usize, rule: Rule },
    #[error("step limit of {limit} reached")]
    StepLimitExceeded { limit: usize, partial: Box<(PortGraph, Trace)> },
}

fn is(g: &PortGraph, n: NodeId, k: &NodeKind) -> bool {
    g.kind(n) == Some(k)
}

/// Node plugged into the in-port reached from (`n`, `port`), if that port
/// is its `want` port and the node has kind `kind`.
fn next_node(g: &PortGraph, n: NodeId, port: usize, kind: &NodeKind, want: usize) -> Option<NodeId> {
    match g.peer_port(n, port) {
        Some((m, p)) if p == want && m != n && is(g, m, kind) => Some(m),
        _ => None,
    }
}

fn snapshot(g: &PortGraph, nodes: &[NodeId]) -> Vec<WireId> {
    nodes.iter().flat_map(|&n| g.node(n).unwrap().ports.iter().map(|w| w.expect("dangling port"))).collect()
}

fn mk(g: &PortGraph, rule: Rule, nodes: Vec<NodeId>, variant: u8) -> Match {
    let wires = snapshot(g, &nodes);
    Match { rule, nodes, variant, wires }
}

/// Nodes of the subgraph feeding `fanout`'s in-port, when it can be cut off
/// along that single arrow.
pub fn detachable_source(g: &PortGraph, fanout: NodeId) -> Option<Vec<NodeId>> {
    let (root, _) = g.peer_port(fanout, 0)?;
    if root == fanout {
        return None;
    }
    let mut seen = BTreeSet::new();
    let mut stack = vec![root];
    seen.insert(root);
    while let Some(n) = stack.pop() {
        for p in 0..g.node(n)?.ports.len() {
            match g.peer(n, p) {
                End::Port(m, _) => {
                    if *m == fanout {
                        // only the cut arrow may reach the fan-out
                        if !(n == root && g.peer_port(fanout, 0).map(|x| x.1) == Some(p)) {
                            return None;
                        }
                        continue;
                    }
                    if seen.insert(*m) {
                        stack.push(*m);
                    }
                }
                End::Free(_) | End::Hole => return None,
            }
        }
    }
    Some(seen.into_iter().collect())
}

/// Every occurrence of `rule` in `g`, ordered by node-id tuple.
pub fn find_sites(g: &PortGraph, rule: Rule) -> Vec<Match> {
    use NodeKind::*;
    let mut out = Vec::new();
    for (n, node) in g.nodes() {
        match (rule, &node.kind) {
            (Rule::Beta, Lambda) => {
                if let Some(a) = next_node(g, n, 2, &Application, 0) {
                    out.push(mk(g, rule, vec![n, a], 0));
                }
            }
            (Rule::CoComm, FanOut) => out.push(mk(g, rule, vec![n], 0)),
            (Rule::CoAssoc, FanOut) => {
                if let Some(m) = next_node(g, n, 2, &FanOut, 0) {
                    out.push(mk(g, rule, vec![n, m], 0));
                }
            }
            (Rule::PruneApp, Application) | (Rule::PruneLambda, Lambda) | (Rule::PruneFanIn, FanIn) => {
                if let Some(t) = next_node(g, n, 2, &Termination, 0) {
                    out.push(mk(g, rule, vec![n, t], 0));
                }
            }
            (Rule::PruneFanOut, FanOut) => {
                for k in [1usize, 2] {
                    if let Some(t) = next_node(g, n, k, &Termination, 0) {
                        out.push(mk(g, rule, vec![n, t], k as u8));
                    }
                }
            }
            (Rule::PruneTermStub, Stub) => {
                if let Some(t) = next_node(g, n, 0, &Termination, 0) {
                    out.push(mk(g, rule, vec![n, t], 0));
                }
            }
            (Rule::FanIn, FanIn) | (Rule::DistApp, Application) | (Rule::DistLambda, Lambda) => {
                if let Some(f) = next_node(g, n, 2, &FanOut, 0) {
                    out.push(mk(g, rule, vec![n, f], 0));
                }
            }
            (Rule::DistFanOut, FanOut) => {
                for k in [1usize, 2] {
                    if let Some(d) = next_node(g, n, k, &FanOut, 0) {
                        out.push(mk(g, rule, vec![n, d], k as u8));
                    }
                }
            }
            (Rule::GlobalFanOut, FanOut) => {
                if let Some(mut set) = detachable_source(g, n) {
                    let mut nodes = vec![n];
                    nodes.append(&mut set);
                    out.push(mk(g, rule, nodes, 0));
                }
            }
            _ => {}
        }
    }
    out.sort_by(|a, b| a.nodes.cmp(&b.nodes).then(a.variant.cmp(&b.variant)));
    out
}

/// True when `m` still describes `g` exactly.
pub fn is_current(g: &PortGraph, m: &Match) -> bool {
    if !m.nodes.iter().all(|&n| g.contains_node(n)) {
        return false;
    }
    if m.rule == Rule::GlobalFanOut {
        let mut nodes = vec![m.nodes[0]];
        match detachable_source(g, m.nodes[0]) {
            Some(mut set) => nodes.append(&mut set),
            None => return false,
        }
        return nodes == m.nodes && snapshot(g, &nodes) == m.wires;
    }
    let first = m.nodes[0];
    find_sites_at(g, m.rule, first).iter().any(|c| c == m)
}

fn find_sites_at(g: &PortGraph, rule: Rule, first: NodeId) -> Vec<Match> {
    // Matching is cheap; restrict to the anchor by filtering.
    find_sites(g, rule).into_iter().filter(|c| c.nodes[0] == first).collect()
}

/// Apply a match and return the rewritten graph.
pub fn apply_move(g: &PortGraph, m: &Match) -> Result<PortGraph, RewriteError> {
    apply_move_with(g, m, FanInWiring::default())
}

pub fn apply_move_with(g: &PortGraph, m: &Match, wiring: FanInWiring) -> Result<PortGraph, RewriteError> {
    let mut out = g.clone();
    apply_in_place(&mut out, m, wiring)?;
    Ok(out)
}

/// Apply a match in place. Returns the ids of the nodes created, in creation
/// order.
pub fn apply_in_place(g: &mut PortGraph, m: &Match, wiring: FanInWiring) -> Result<Vec<NodeId>, RewriteError> {
    if !is_current(g, m) {
        return Err(RewriteError::StaleMatch(m.rule));
    }
    let w = |i: usize| m.wires[i];
    if m.rule == Rule::CoComm {
        g.swap_ports(m.nodes[0], 1, 2);
        return Ok(Vec::new());
    }
    let mut s = Splice::new(g);
    let mut created = Vec::new();
    use NodeKind::*;
    match m.rule {
        Rule::Beta => {
            // Lambda(b, v, o) + Application(o, d, e)
            let (b, v, o, d, e) = (w(0), w(1), w(2), w(4), w(5));
            s.remove(m.nodes[0]);
            s.remove(m.nodes[1]);
            s.drop_wire(o);
            s.join(b, e);
            s.join(d, v);
        }
        Rule::CoComm => unreachable!(),
        Rule::CoAssoc => {
            // FanOut(x, a, t) + FanOut(t, b, c) -> FanOut(x, t', c) + FanOut(t', a, b)
            let (x, a, t, b, c) = (w(0), w(1), w(2), w(4), w(5));
            s.remove(m.nodes[0]);
            s.remove(m.nodes[1]);
            s.drop_wire(t);
            let t2 = s.fresh();
            created.push(s.add(FanOut, &[x, t2, c]));
            created.push(s.add(FanOut, &[t2, a, b]));
        }
        Rule::PruneApp | Rule::PruneFanIn => {
            let (i1, i2, o) = (w(0), w(1), w(2));
            s.remove(m.nodes[0]);
            s.remove(m.nodes[1]);
            s.drop_wire(o);
            created.push(s.add(Termination, &[i1]));
            created.push(s.add(Termination, &[i2]));
        }
        Rule::PruneFanOut => {
            let (i, o1, o2) = (w(0), w(1), w(2));
            s.remove(m.nodes[0]);
            s.remove(m.nodes[1]);
            if m.variant == 2 {
                s.drop_wire(o2);
                s.join(i, o1);
            } else {
                s.drop_wire(o1);
                s.join(i, o2);
            }
        }
        Rule::PruneLambda => {
            let (b, v, o) = (w(0), w(1), w(2));
            s.remove(m.nodes[0]);
            s.remove(m.nodes[1]);
            s.drop_wire(o);
            created.push(s.add(Termination, &[b]));
            created.push(s.add(Stub, &[v]));
        }
        Rule::PruneTermStub => {
            s.remove(m.nodes[0]);
            s.remove(m.nodes[1]);
            s.drop_wire(w(0));
        }
        Rule::FanIn => {
            let (i1, i2, o, o1, o2) = (w(0), w(1), w(2), w(4), w(5));
            s.remove(m.nodes[0]);
            s.remove(m.nodes[1]);
            s.drop_wire(o);
            match wiring {
                FanInWiring::Crossing => {
                    s.join(i1, o2);
                    s.join(i2, o1);
                }
                FanInWiring::Parallel => {
                    s.join(i1, o1);
                    s.join(i2, o2);
                }
            }
        }
        Rule::DistApp => {
            let (f, a, o, o1, o2) = (w(0), w(1), w(2), w(4), w(5));
            s.remove(m.nodes[0]);
            s.remove(m.nodes[1]);
            s.drop_wire(o);
            let (f1, f2, a1, a2) = (s.fresh(), s.fresh(), s.fresh(), s.fresh());
            created.push(s.add(FanOut, &[f, f1, f2]));
            created.push(s.add(FanOut, &[a, a1, a2]));
            created.push(s.add(Application, &[f1, a1, o1]));
            created.push(s.add(Application, &[f2, a2, o2]));
        }
        Rule::DistLambda => {
            let (b, v, o, o1, o2) = (w(0), w(1), w(2), w(4), w(5));
            s.remove(m.nodes[0]);
            s.remove(m.nodes[1]);
            s.drop_wire(o);
            let (b1, b2, v1, v2) = (s.fresh(), s.fresh(), s.fresh(), s.fresh());
            created.push(s.add(FanOut, &[b, b1, b2]));
            created.push(s.add(Lambda, &[b1, v1, o1]));
            created.push(s.add(Lambda, &[b2, v2, o2]));
            let [x, y] = wiring.pair(v1, v2);
            created.push(s.add(FanIn, &[x, y, v]));
        }
        Rule::DistFanOut => {
            // FanOut(i, p1, p2) with FanOut(p_k, d1, d2) on output k
            let k = m.variant as usize;
            let i = w(0);
            let pk = w(k);
            let pj = w(3 - k);
            let (d1, d2) = (w(4), w(5));
            s.remove(m.nodes[0]);
            s.remove(m.nodes[1]);
            s.drop_wire(pk);
            let (i1, i2, x1, x2) = (s.fresh(), s.fresh(), s.fresh(), s.fresh());
            created.push(s.add(FanOut, &[i, i1, i2]));
            let ports = |ii: WireId, dk: WireId, xj: WireId| if k == 1 { [ii, dk, xj] } else { [ii, xj, dk] };
            created.push(s.add(FanOut, &ports(i1, d1, x1)));
            created.push(s.add(FanOut, &ports(i2, d2, x2)));
            let [x, y] = wiring.pair(x1, x2);
            created.push(s.add(FanIn, &[x, y, pj]));
        }
        Rule::GlobalFanOut => {
            let f = m.nodes[0];
            let (i, o1, o2) = (w(0), w(1), w(2));
            let set = &m.nodes[1..];
            let (root, root_port) = s.g.peer_port(f, 0).expect("detachable source has a root");
            s.remove(f);
            let (map, boundary) = s.g.duplicate(set);
            s.join(i, o1);
            s.join(boundary[&(root, root_port)], o2);
            let mut copies: Vec<NodeId> = map.values().copied().collect();
            copies.sort_unstable();
            created = copies;
        }
    }
    Ok(created)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    Priority,
    Random(u64),
    Script(Vec<Rule>),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Priority => "priority",
            Strategy::Random(_) => "random",
            Strategy::Script(_) => "script",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReduceConfig {
    pub mode: Mode,
    pub strategy: Strategy,
    pub max_steps: usize,
    pub fan_in: FanInWiring,
}

impl ReduceConfig {
    pub fn new(mode: Mode, strategy: Strategy) -> ReduceConfig {
        ReduceConfig { mode, strategy, max_steps: 10_000, fan_in: FanInWiring::default() }
    }

    pub fn max_steps(mut self, n: usize) -> ReduceConfig {
        self.max_steps = n;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceHeader {
    pub mode: String,
    pub strategy: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub rng: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub step: usize,
    pub rule: String,
    pub nodes: Vec<NodeId>,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new(mode: Mode, strategy: &Strategy) -> Trace {
        let seed = match strategy {
            Strategy::Random(s) => Some(*s),
            _ => None,
        };
        Trace {
            header: TraceHeader { mode: mode.name().into(), strategy: strategy.name().into(), seed, rng: RNG_ALGORITHM.into() },
            events: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn push(&mut self, rule: Rule, nodes: &[NodeId], size: usize) {
        let step = self.events.len() + 1;
        self.events.push(TraceEvent { step, rule: rule.name().into(), nodes: nodes.to_vec(), size });
    }

    pub fn rules(&self) -> impl Iterator<Item = &str> {
        self.events.iter().map(|e| e.rule.as_str())
    }

    /// JSON lines: a header object followed by one object per event.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&serde_json::json!({ "header": self.header })).unwrap();
        out.push('\n');
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).unwrap());
            out.push('\n');
        }
        out
    }
}

/// Reduce until no enabled rule has a site, or the step limit is hit.
pub fn reduce(g: &PortGraph, cfg: &ReduceConfig) -> Result<(PortGraph, Trace), RewriteError> {
    let mut g = g.clone();
    let mut trace = Trace::new(cfg.mode, &cfg.strategy);
    let mut rng = match cfg.strategy {
        Strategy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    if let Strategy::Script(rules) = &cfg.strategy {
        for (i, &rule) in rules.iter().enumerate() {
            if !cfg.mode.allows(rule) {
                return Err(RewriteError::RuleNotEnabled(rule, cfg.mode.name()));
            }
            if i >= cfg.max_steps {
                return Err(RewriteError::StepLimitExceeded { limit: cfg.max_steps, partial: Box::new((g, trace)) });
            }
            let site = find_sites(&g, rule).into_iter().next().ok_or(RewriteError::ScriptRuleInapplicable { step: i + 1, rule })?;
            apply_in_place(&mut g, &site, cfg.fan_in)?;
            trace.push(rule, &site.nodes, g.node_count());
        }
        return Ok((g, trace));
    }
    loop {
        let site = match rng.as_mut() {
            None => cfg.mode.priority().iter().find_map(|&r| find_sites(&g, r).into_iter().next()),
            Some(rng) => {
                let mut all: Vec<Match> = cfg.mode.priority().iter().flat_map(|&r| find_sites(&g, r)).collect();
                if all.is_empty() {
                    None
                } else {
                    let i = rng.gen_range(0..all.len());
                    Some(all.swap_remove(i))
                }
            }
        };
        let Some(site) = site else { break };
        if trace.len() >= cfg.max_steps {
            return Err(RewriteError::StepLimitExceeded { limit: cfg.max_steps, partial: Box::new((g, trace)) });
        }
        apply_in_place(&mut g, &site, cfg.fan_in)?;
        trace.push(site.rule, &site.nodes, g.node_count());
    }
    Ok((g, trace))
}

/// Duplicate the subgraph feeding a GLOBAL-FANOUT site using only local moves:
/// fan-outs are pushed through the subgraph by DIST moves and annihilate
/// against the fan-ins those moves leave on bound variables.
pub fn emulate_global_fanout(g: &PortGraph, site: &Match, wiring: FanInWiring) -> Result<(PortGraph, Trace), RewriteError> {
    if site.rule != Rule::GlobalFanOut || !is_current(g, site) {
        return Err(RewriteError::NotDetachable);
    }
    for &n in &site.nodes[1..] {
        match g.kind(n) {
            Some(NodeKind::Lambda | NodeKind::Application | NodeKind::FanOut | NodeKind::FanIn | NodeKind::Termination) => {}
            _ => return Err(RewriteError::Unsupported(n)),
        }
    }
    let mut g = g.clone();
    let mut trace = Trace::new(Mode::Chemlambda, &Strategy::Script(vec![]));
    let mut region: HashSet<NodeId> = site.nodes[1..].iter().copied().collect();
    let mut duplicators: BTreeSet<NodeId> = BTreeSet::new();
    duplicators.insert(site.nodes[0]);

    loop {
        let mut next: Option<Match> = None;
        for &d in &duplicators {
            let Some((n, port)) = g.peer_port(d, 0) else { continue };
            if !region.contains(&n) {
                continue;
            }
            let (rule, variant) = match (g.kind(n).unwrap(), port) {
                (NodeKind::Application, 2) => (Rule::DistApp, 0),
                (NodeKind::Lambda, 2) => (Rule::DistLambda, 0),
                (NodeKind::Lambda, _) => continue,
                (NodeKind::FanOut, k) => (Rule::DistFanOut, k as u8),
                (NodeKind::FanIn, 2) => (Rule::FanIn, 0),
                _ => return Err(RewriteError::Unsupported(n)),
            };
            next = Some(mk(&g, rule, vec![n, d], variant));
            break;
        }
        if next.is_none() {
            // fan-ins left on erased variables
            let mut fanins: Vec<NodeId> = region.iter().copied().filter(|&n| is(&g, n, &NodeKind::FanIn)).collect();
            fanins.sort_unstable();
            next = fanins
                .into_iter()
                .find_map(|n| next_node(&g, n, 2, &NodeKind::Termination, 0).map(|t| mk(&g, Rule::PruneFanIn, vec![n, t], 0)));
        }
        let Some(m) = next else { break };
        let created = apply_in_place(&mut g, &m, wiring)?;
        trace.push(m.rule, &m.nodes, g.node_count());
        for n in &m.nodes {
            region.remove(n);
            duplicators.remove(n);
        }
        let fresh_duplicators = match m.rule {
            Rule::DistApp => 2,
            Rule::DistLambda | Rule::DistFanOut => 1,
            _ => 0,
        };
        for (i, n) in created.into_iter().enumerate() {
            if i < fresh_duplicators {
                duplicators.insert(n);
            } else {
                region.insert(n);
            }
        }
    }
    if let Some(&d) = duplicators.iter().next() {
        return Err(RewriteError::Unsupported(d));
    }
    Ok((g, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iso::is_isomorphic;
    use crate::mol::parse_mol;

    fn mol(s: &str) -> PortGraph {
        parse_mol(s).unwrap()
    }

    const K: &str = "L b x o\nL x y b\nT y\n";

    #[test]
    fn no_beta_in_identity() {
        assert!(find_sites(&mol("L x x o"), Rule::Beta).is_empty());
    }

    #[test]
    fn beta_site_in_redex() {
        // (\x.x) y
        let g = mol("L x x f\nA f y o");
        assert_eq!(find_sites(&g, Rule::Beta).len(), 1);
        let out = apply_move(&g, &find_sites(&g, Rule::Beta)[0]).unwrap();
        assert_eq!(out.node_count(), 0);
        assert!(out.is_valid());
        assert_eq!(out.free_ends(), vec![("o".into(), crate::Dir::Out), ("y".into(), crate::Dir::In)]);
    }

    #[test]
    fn beta_identity_on_application_argument() {
        // (\x.x) (p q) -> p q
        let g = mol("L x x f\nA f b o\nA p q b");
        let out = apply_move(&g, &find_sites(&g, Rule::Beta)[0]).unwrap();
        assert!(is_isomorphic(&out, &mol("A p q o")).unwrap());
    }

    #[test]
    fn beta_mutual_wiring_leaves_one_loop() {
        // Lambda var wired to its own body, application output wired to its own argument
        let g = mol("L v v f\nA f e e");
        let out = apply_move(&g, &find_sites(&g, Rule::Beta)[0]).unwrap();
        assert_eq!(out.node_count(), 0);
        assert_eq!(out.loops(), 1);
        assert!(out.is_valid());
    }

    #[test]
    fn beta_cross_wiring_leaves_two_loops() {
        // application output feeds the lambda body, lambda variable feeds the argument
        let g = mol("L e d f\nA f d e");
        let out = apply_move(&g, &find_sites(&g, Rule::Beta)[0]).unwrap();
        assert_eq!(out.node_count(), 0);
        assert_eq!(out.loops(), 2);
    }

    #[test]
    fn co_assoc_single_site() {
        let g = mol("FO i a t\nFO t b c");
        assert_eq!(find_sites(&g, Rule::CoAssoc).len(), 1);
        let out = apply_move(&g, &find_sites(&g, Rule::CoAssoc)[0]).unwrap();
        assert!(out.is_valid());
        assert_eq!(out.free_ends(), g.free_ends());
    }

    #[test]
    fn co_comm_twice_is_identity() {
        let g = mol("FO i a b\nT a");
        let once = apply_move(&g, &find_sites(&g, Rule::CoComm)[0]).unwrap();
        assert!(!is_isomorphic(&once, &g).unwrap());
        let twice = apply_move(&once, &find_sites(&once, Rule::CoComm)[0]).unwrap();
        assert!(is_isomorphic(&twice, &g).unwrap());
    }

    #[test]
    fn pruning_rules() {
        let g = mol("A f a o\nT o");
        let out = apply_move(&g, &find_sites(&g, Rule::PruneApp)[0]).unwrap();
        assert!(is_isomorphic(&out, &mol("T f\nT a")).unwrap());

        let g = mol("FO i a b\nT b");
        let out = apply_move(&g, &find_sites(&g, Rule::PruneFanOut)[0]).unwrap();
        assert!(is_isomorphic(&out, &mol("ARROW i a")).unwrap());
        let g = mol("FO i a b\nT a");
        let out = apply_move(&g, &find_sites(&g, Rule::PruneFanOut)[0]).unwrap();
        assert_eq!(out.free_ends(), vec![("b".into(), crate::Dir::Out), ("i".into(), crate::Dir::In)]);

        let g = mol("L b v o\nT o");
        let out = apply_move(&g, &find_sites(&g, Rule::PruneLambda)[0]).unwrap();
        assert!(is_isomorphic(&out, &mol("T b\nST v")).unwrap());

        let g = mol("ST x\nT x");
        let out = apply_move(&g, &find_sites(&g, Rule::PruneTermStub)[0]).unwrap();
        assert!(out.is_empty());

        // pruning the identity leaves a stub feeding a termination
        let g = mol("L x x o\nT o");
        let out = apply_move(&g, &find_sites(&g, Rule::PruneLambda)[0]).unwrap();
        assert!(is_isomorphic(&out, &mol("ST x\nT x")).unwrap());
    }

    #[test]
    fn fan_in_wiring() {
        let g = mol("FI p q o\nFO o r s");
        let m = &find_sites(&g, Rule::FanIn)[0];
        let cross = apply_move(&g, m).unwrap();
        let ends: Vec<_> = cross.wires().map(|(_, w)| (w.src.clone(), w.dst.clone())).collect();
        assert!(ends.contains(&(End::Free("p".into()), End::Free("s".into()))));
        let par = apply_move_with(&g, m, FanInWiring::Parallel).unwrap();
        let ends: Vec<_> = par.wires().map(|(_, w)| (w.src.clone(), w.dst.clone())).collect();
        assert!(ends.contains(&(End::Free("p".into()), End::Free("r".into()))));
    }

    #[test]
    fn dist_moves_keep_interface() {
        for (text, rule) in [
            ("A f a o\nFO o p q", Rule::DistApp),
            ("L b v o\nFO o p q", Rule::DistLambda),
            ("FO i o r\nFO o p q", Rule::DistFanOut),
            ("FO i r o\nFO o p q", Rule::DistFanOut),
        ] {
            let g = mol(text);
            let sites = find_sites(&g, rule);
            assert_eq!(sites.len(), 1, "{text}");
            let out = apply_move(&g, &sites[0]).unwrap();
            assert!(out.is_valid(), "{text}");
            assert_eq!(out.free_ends(), g.free_ends(), "{text}");
            assert_eq!(out.node_count(), 4);
        }
    }

    #[test]
    fn global_fanout_copies_k() {
        let g = mol(&format!("{K}FO o p q\n"));
        let sites = find_sites(&g, Rule::GlobalFanOut);
        assert_eq!(sites.len(), 1);
        let out = apply_move(&g, &sites[0]).unwrap();
        assert!(out.is_valid());
        let two_k = mol("L b x p\nL x y b\nT y\nL b2 x2 q\nL x2 y2 b2\nT y2\n");
        assert!(is_isomorphic(&out, &two_k).unwrap());
    }

    #[test]
    fn wire_into_fanout_is_not_detachable() {
        let g = mol("FO i p q");
        assert!(find_sites(&g, Rule::GlobalFanOut).is_empty());
        // source shares a free end with the rest of the graph
        let g = mol("A f a o\nFO o p q");
        assert!(find_sites(&g, Rule::GlobalFanOut).is_empty());
    }

    #[test]
    fn stale_match_rejected() {
        let g = mol("A f a o\nT o");
        let m = find_sites(&g, Rule::PruneApp)[0].clone();
        let after = apply_move(&g, &m).unwrap();
        assert_eq!(apply_move(&after, &m), Err(RewriteError::StaleMatch(Rule::PruneApp)));
    }

    #[test]
    fn emulation_matches_global_move() {
        for src in [K, "L x x o\n"] {
            let g = mol(&format!("{src}FO o p q\n"));
            let site = find_sites(&g, Rule::GlobalFanOut).remove(0);
            let global = apply_move(&g, &site).unwrap();
            let (local, trace) = emulate_global_fanout(&g, &site, FanInWiring::Crossing).unwrap();
            assert!(local.is_valid());
            assert!(is_isomorphic(&local, &global).unwrap(), "{src}");
            assert!(trace.rules().all(|r| r != "GLOBAL-FANOUT"));
            let (par, _) = emulate_global_fanout(&g, &site, FanInWiring::Parallel).unwrap();
            assert!(is_isomorphic(&par, &global).unwrap());
        }
    }

    #[test]
    fn emulation_rejects_bare_wire() {
        let g = mol("FO i p q");
        let fake = Match { rule: Rule::GlobalFanOut, nodes: vec![0], variant: 0, wires: snapshot(&g, &[0]) };
        assert_eq!(emulate_global_fanout(&g, &fake, FanInWiring::Crossing).unwrap_err(), RewriteError::NotDetachable);
    }

    #[test]
    fn normal_form_is_fixpoint() {
        let g = mol("L x x o");
        for mode in [Mode::Glc, Mode::Chemlambda] {
            let (out, trace) = reduce(&g, &ReduceConfig::new(mode, Strategy::Priority)).unwrap();
            assert_eq!(out, g);
            assert!(trace.is_empty());
        }
    }

    #[test]
    fn script_strategy() {
        let g = mol("FO i a b\nT a");
        let cfg = ReduceConfig::new(Mode::Glc, Strategy::Script(vec![Rule::CoComm, Rule::CoComm]));
        let (out, trace) = reduce(&g, &cfg).unwrap();
        assert!(is_isomorphic(&out, &g).unwrap());
        assert_eq!(trace.len(), 2);
        let bad = ReduceConfig::new(Mode::Glc, Strategy::Script(vec![Rule::DistApp]));
        assert!(matches!(reduce(&g, &bad), Err(RewriteError::RuleNotEnabled(..))));
        let missing = ReduceConfig::new(Mode::Glc, Strategy::Script(vec![Rule::Beta]));
        assert!(matches!(reduce(&g, &missing), Err(RewriteError::ScriptRuleInapplicable { step: 1, .. })));
    }

    #[test]
    fn step_limit_keeps_partial_result() {
        let g = mol("A f a o\nT o\nA f2 a2 o2\nT o2");
        let cfg = ReduceConfig::new(Mode::Glc, Strategy::Priority).max_steps(1);
        match reduce(&g, &cfg) {
            Err(RewriteError::StepLimitExceeded { partial, .. }) => {
                assert_eq!(partial.1.len(), 1);
                assert!(partial.0.is_valid());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trace_jsonl_shape() {
        let g = mol("A f a o\nT o");
        let (_, trace) = reduce(&g, &ReduceConfig::new(Mode::Glc, Strategy::Random(3))).unwrap();
        let text = trace.to_jsonl();
        let mut lines = text.lines();
        let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
        assert_eq!(header["header"]["rng"], RNG_ALGORITHM);
        assert_eq!(header["header"]["seed"], 3);
        let ev: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
        assert_eq!(ev["step"], 1);
        assert_eq!(ev["rule"], "PRUNE-APP");
        assert_eq!(ev["size"], 2);
    }
}
