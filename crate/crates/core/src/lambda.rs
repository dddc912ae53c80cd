//! Untyped lambda terms: parsing, translation into GLC graphs, and readback
//! by decoration.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::graph::{End, NodeId, NodeKind, PortGraph, WireId};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Lam(String, Box<Term>),
    App(Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(x: &str) -> Term {
        Term::Var(x.to_string())
    }

    pub fn lam(x: &str, body: Term) -> Term {
        Term::Lam(x.to_string(), Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    /// Number of constructors in the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Lam(_, b) => 1 + b.size(),
            Term::App(f, a) => 1 + f.size() + a.size(),
        }
    }

    pub fn count_abstractions(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::Lam(_, b) => 1 + b.count_abstractions(),
            Term::App(f, a) => f.count_abstractions() + a.count_abstractions(),
        }
    }

    pub fn count_applications(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::Lam(_, b) => b.count_applications(),
            Term::App(f, a) => 1 + f.count_applications() + a.count_applications(),
        }
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        fn go(t: &Term, bound: &mut Vec<String>, out: &mut Vec<String>) {
            match t {
                Term::Var(x) => {
                    if !bound.contains(x) && !out.contains(x) {
                        out.push(x.clone());
                    }
                }
                Term::Lam(x, b) => {
                    bound.push(x.clone());
                    go(b, bound, out);
                    bound.pop();
                }
                Term::App(f, a) => {
                    go(f, bound, out);
                    go(a, bound, out);
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Alpha-equivalence via nameless comparison. Free variables compare by
    /// name.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        fn eq(a: &Term, b: &Term, ea: &mut Vec<String>, eb: &mut Vec<String>) -> bool {
            match (a, b) {
                (Term::Var(x), Term::Var(y)) => {
                    let ix = ea.iter().rposition(|v| v == x);
                    let iy = eb.iter().rposition(|v| v == y);
                    match (ix, iy) {
                        (Some(i), Some(j)) => ea.len() - i == eb.len() - j,
                        (None, None) => x == y,
                        _ => false,
                    }
                }
                (Term::Lam(x, p), Term::Lam(y, q)) => {
                    ea.push(x.clone());
                    eb.push(y.clone());
                    let r = eq(p, q, ea, eb);
                    ea.pop();
                    eb.pop();
                    r
                }
                (Term::App(f, a), Term::App(g, b)) => eq(f, g, ea, eb) && eq(a, b, ea, eb),
                _ => false,
            }
        }
        eq(self, other, &mut Vec::new(), &mut Vec::new())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&show(self, true))
    }
}

/// `last` is true when nothing follows the term, so a trailing abstraction
/// needs no parentheses.
fn show(t: &Term, last: bool) -> String {
    match t {
        Term::Var(x) => x.clone(),
        Term::Lam(x, b) => {
            let s = format!("\\{x}.{}", show(b, true));
            if last {
                s
            } else {
                format!("({s})")
            }
        }
        Term::App(fun, arg) => {
            let fs = match **fun {
                Term::Lam(..) => format!("({})", show(fun, true)),
                _ => show(fun, false),
            };
            let as_ = match **arg {
                Term::App(..) => format!("({})", show(arg, true)),
                _ => show(arg, last),
            };
            format!("{fs} {as_}")
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LambdaError {
    #[error("syntax error at {pos}: {msg}")]
    SyntaxError { pos: usize, msg: String },
    #[error("graph is outside the lambda sector: {0}")]
    NotLambdaSector(String),
    #[error("graph has {0} root arrows, expected exactly one")]
    NoUniqueRoot(usize),
    #[error("decoration does not stabilize")]
    DecorationCycle,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Lambda,
    Dot,
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, LambdaError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '\\' | 'λ' => {
                out.push((pos, Tok::Lambda));
                i += 1;
            }
            '.' => {
                out.push((pos, Tok::Dot));
                i += 1;
            }
            '(' => {
                out.push((pos, Tok::Open));
                i += 1;
            }
            ')' => {
                out.push((pos, Tok::Close));
                i += 1;
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut s = String::new();
                while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_' || chars[i].1 == '\'') {
                    s.push(chars[i].1);
                    i += 1;
                }
                out.push((pos, Tok::Ident(s)));
            }
            other => return Err(LambdaError::SyntaxError { pos, msg: format!("unexpected character `{other}`") }),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    bound: Vec<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, msg: &str) -> Result<T, LambdaError> {
        Err(LambdaError::SyntaxError { pos: self.pos(), msg: msg.to_string() })
    }

    fn term(&mut self) -> Result<Term, LambdaError> {
        let mut acc: Option<Term> = None;
        loop {
            let next = match self.peek() {
                None | Some(Tok::Close) => break,
                Some(Tok::Lambda) => self.abstraction()?,
                Some(Tok::Open) => {
                    self.at += 1;
                    let t = self.term()?;
                    if self.peek() != Some(&Tok::Close) {
                        return self.err("expected `)`");
                    }
                    self.at += 1;
                    t
                }
                Some(Tok::Ident(x)) => {
                    let x = x.clone();
                    self.at += 1;
                    self.variable(&x)
                }
                Some(Tok::Dot) => return self.err("unexpected `.`"),
            };
            acc = Some(match acc {
                None => next,
                Some(f) => Term::app(f, next),
            });
        }
        match acc {
            Some(t) => Ok(t),
            None => self.err("expected a term"),
        }
    }

    fn abstraction(&mut self) -> Result<Term, LambdaError> {
        self.at += 1;
        let mut binders = Vec::new();
        while let Some(Tok::Ident(x)) = self.peek() {
            binders.push(x.clone());
            self.at += 1;
        }
        if binders.is_empty() {
            return self.err("expected a binder");
        }
        if self.peek() != Some(&Tok::Dot) {
            return self.err("expected `.`");
        }
        self.at += 1;
        let depth = self.bound.len();
        self.bound.extend(binders.iter().cloned());
        let body = self.term()?;
        self.bound.truncate(depth);
        Ok(binders.iter().rev().fold(body, |b, x| Term::lam(x, b)))
    }

    fn variable(&self, x: &str) -> Term {
        if self.bound.iter().any(|b| b == x) {
            return Term::var(x);
        }
        builtin(x).unwrap_or_else(|| Term::var(x))
    }
}

fn builtin(name: &str) -> Option<Term> {
    let text = match name {
        "S" => "\\x.\\y.\\z.x z (y z)",
        "K" => "\\x.\\y.x",
        "I" => "\\x.x",
        "Y" => "\\f.(\\x.f (x x)) (\\x.f (x x))",
        _ => return None,
    };
    Some(parse_term(text).expect("built-in combinator parses"))
}

/// Parse a term. Free occurrences of `S`, `K`, `I` and `Y` expand to the
/// standard combinators.
pub fn parse_term(text: &str) -> Result<Term, LambdaError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, at: 0, end: text.len(), bound: Vec::new() };
    let t = p.term()?;
    if p.at != p.toks.len() {
        return p.err("unbalanced `)`");
    }
    Ok(t)
}

/// Label of the free arrow leaving the graph of a term.
pub const ROOT_LABEL: &str = "root";

struct Builder {
    g: PortGraph,
    scopes: Vec<(String, Vec<WireId>)>,
    free: Vec<(String, Vec<WireId>)>,
}

impl Builder {
    /// Build `t`; returns the wire carrying its value, with a hole at the
    /// consuming end.
    fn build(&mut self, t: &Term) -> WireId {
        match t {
            Term::Var(x) => {
                let w = self.g.new_wire();
                if let Some(scope) = self.scopes.iter_mut().rev().find(|(v, _)| v == x) {
                    scope.1.push(w);
                } else if let Some(f) = self.free.iter_mut().find(|(v, _)| v == x) {
                    f.1.push(w);
                } else {
                    self.free.push((x.clone(), vec![w]));
                }
                w
            }
            Term::Lam(x, body) => {
                let l = self.g.add_node(NodeKind::Lambda);
                self.scopes.push((x.clone(), Vec::new()));
                let b = self.build(body);
                let (_, uses) = self.scopes.pop().unwrap();
                self.g.plug(l, 0, b);
                self.share(uses, |g, w| {
                    g.plug(l, 1, w);
                });
                let o = self.g.new_wire();
                self.g.plug(l, 2, o);
                o
            }
            Term::App(f, a) => {
                let n = self.g.add_node(NodeKind::Application);
                let fw = self.build(f);
                let aw = self.build(a);
                self.g.plug(n, 0, fw);
                self.g.plug(n, 1, aw);
                let o = self.g.new_wire();
                self.g.plug(n, 2, o);
                o
            }
        }
    }

    /// Connect a source to every use through a left-combed FanOut chain, or
    /// to a Termination when there are no uses.
    fn share(&mut self, uses: Vec<WireId>, attach_source: impl FnOnce(&mut PortGraph, WireId)) {
        match uses.len() {
            0 => {
                let w = self.g.new_wire();
                let t = self.g.add_node(NodeKind::Termination);
                self.g.plug(t, 0, w);
                attach_source(&mut self.g, w);
            }
            1 => attach_source(&mut self.g, uses[0]),
            k => {
                let first = self.g.new_wire();
                attach_source(&mut self.g, first);
                let mut incoming = first;
                for (i, &u) in uses.iter().enumerate().take(k - 1) {
                    let f = self.g.add_node(NodeKind::FanOut);
                    self.g.plug(f, 0, incoming);
                    self.g.plug(f, 1, u);
                    let rest = if i == k - 2 { uses[k - 1] } else { self.g.new_wire() };
                    self.g.plug(f, 2, rest);
                    incoming = rest;
                }
            }
        }
    }
}

/// Translate a term into a graph. Free variables become free input arrows
/// named after the variable; the value leaves on the free arrow
/// [`ROOT_LABEL`] (primed if a free variable already uses that name).
pub fn term_to_graph(t: &Term) -> PortGraph {
    let mut b = Builder { g: PortGraph::new(), scopes: Vec::new(), free: Vec::new() };
    let out = b.build(t);
    let free = std::mem::take(&mut b.free);
    let mut root = ROOT_LABEL.to_string();
    while free.iter().any(|(x, _)| *x == root) {
        root.push('\'');
    }
    b.g.wire_mut(out).dst = End::Free(root);
    for (x, uses) in free {
        b.share(uses, |g, w| g.wire_mut(w).src = End::Free(x.clone()));
    }
    b.g
}

fn binder_name(i: usize) -> String {
    let letter = (b'a' + (i % 26) as u8) as char;
    if i < 26 {
        letter.to_string()
    } else {
        format!("{letter}{}", i / 26)
    }
}

/// Read the term decorating the unique output arrow of a lambda-sector graph.
/// Binders are named `a, b, c, ...` in Lambda node id order, skipping names
/// of free inputs.
pub fn graph_to_term(g: &PortGraph) -> Result<Term, LambdaError> {
    for (id, n) in g.nodes() {
        match n.kind {
            NodeKind::Lambda | NodeKind::Application | NodeKind::FanOut | NodeKind::Termination => {}
            ref k => return Err(LambdaError::NotLambdaSector(format!("node {id} is a {}", k.mnemonic()))),
        }
    }
    if g.loops() > 0 {
        return Err(LambdaError::DecorationCycle);
    }
    let roots: Vec<WireId> = g.wires().filter(|(_, w)| matches!(w.dst, End::Free(_))).map(|(id, _)| id).collect();
    if roots.len() != 1 {
        return Err(LambdaError::NoUniqueRoot(roots.len()));
    }
    let free: BTreeSet<String> = g
        .wires()
        .filter_map(|(_, w)| match &w.src {
            End::Free(l) => Some(l.clone()),
            _ => None,
        })
        .collect();
    let mut names = BTreeMap::new();
    let mut i = 0;
    for id in g.node_ids() {
        if g.kind(id) == Some(&NodeKind::Lambda) {
            while free.contains(&binder_name(i)) {
                i += 1;
            }
            names.insert(id, binder_name(i));
            i += 1;
        }
    }
    let mut dec = Decorator { g, names, path: HashSet::new(), open: Vec::new(), reached: HashSet::new() };
    let t = dec.decorate(roots[0])?;
    for (id, n) in g.nodes() {
        if n.kind != NodeKind::Termination && !dec.reached.contains(&id) {
            return Err(LambdaError::NoUniqueRoot(2));
        }
    }
    Ok(t)
}

struct Decorator<'g> {
    g: &'g PortGraph,
    names: BTreeMap<NodeId, String>,
    path: HashSet<WireId>,
    open: Vec<NodeId>,
    reached: HashSet<NodeId>,
}

impl Decorator<'_> {
    fn decorate(&mut self, w: WireId) -> Result<Term, LambdaError> {
        if !self.path.insert(w) {
            return Err(LambdaError::DecorationCycle);
        }
        let src = self.g.wire(w).unwrap().src.clone();
        let t = match src {
            End::Free(x) => Term::Var(x),
            End::Hole => return Err(LambdaError::NotLambdaSector("dangling arrow".into())),
            End::Port(n, p) => {
                self.reached.insert(n);
                match (self.g.kind(n).unwrap(), p) {
                    (NodeKind::Lambda, 2) => {
                        self.open.push(n);
                        let body = self.decorate(self.g.port_wire(n, 0));
                        self.open.pop();
                        Term::Lam(self.names[&n].clone(), Box::new(body?))
                    }
                    (NodeKind::Lambda, 1) => {
                        if !self.open.contains(&n) {
                            return Err(LambdaError::NotLambdaSector(format!("variable of node {n} used outside its scope")));
                        }
                        Term::Var(self.names[&n].clone())
                    }
                    (NodeKind::Application, 2) => {
                        let f = self.decorate(self.g.port_wire(n, 0))?;
                        let a = self.decorate(self.g.port_wire(n, 1))?;
                        Term::app(f, a)
                    }
                    (NodeKind::FanOut, _) => self.decorate(self.g.port_wire(n, 0))?,
                    (k, _) => return Err(LambdaError::NotLambdaSector(format!("unexpected {} source", k.mnemonic()))),
                }
            }
        };
        self.path.remove(&w);
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(p("\\x.x"), Term::lam("x", Term::var("x")));
        assert_eq!(p("λx y.x").to_string(), "\\x.\\y.x");
        assert_eq!(p("(\\x.x x)(\\x.x x)").to_string(), "(\\x.x x) \\x.x x");
        assert_eq!(p("a b c").to_string(), "a b c");
        assert_eq!(p("a (b c)").to_string(), "a (b c)");
        assert_eq!(p("a (\\x.x)").to_string(), "a \\x.x");
        assert_eq!(p("a (\\x.x) b").to_string(), "a (\\x.x) b");
        assert_eq!(p("(\\x.x) a").to_string(), "(\\x.x) a");
    }

    #[test]
    fn builtins_expand_when_free() {
        let skk = p("S K K");
        let s = p("\\x.\\y.\\z.x z (y z)");
        let k = p("\\x.\\y.x");
        assert_eq!(skk, Term::app(Term::app(s, k.clone()), k));
        assert_eq!(p("\\K.K"), Term::lam("K", Term::var("K")));
    }

    #[test]
    fn syntax_errors_have_positions() {
        assert_eq!(parse_term("\\.x"), Err(LambdaError::SyntaxError { pos: 1, msg: "expected a binder".into() }));
        assert!(matches!(parse_term("(x"), Err(LambdaError::SyntaxError { pos: 2, .. })));
        assert!(matches!(parse_term("x)"), Err(LambdaError::SyntaxError { pos: 1, .. })));
        assert!(matches!(parse_term(""), Err(LambdaError::SyntaxError { pos: 0, .. })));
        assert!(matches!(parse_term("x # y"), Err(LambdaError::SyntaxError { pos: 2, .. })));
    }

    #[test]
    fn alpha_equivalence() {
        assert!(p("\\x.x").alpha_eq(&p("\\y.y")));
        assert!(!p("\\x.\\y.x").alpha_eq(&p("\\x.\\y.y")));
        assert!(!p("\\x.y").alpha_eq(&p("\\x.z")));
        assert!(p("\\x.\\x.x").alpha_eq(&p("\\a.\\b.b")));
    }

    #[test]
    fn k_graph_counts() {
        let g = term_to_graph(&p("K"));
        assert_eq!(g.count_kind(|k| *k == NodeKind::Lambda), 2);
        assert_eq!(g.count_kind(|k| *k == NodeKind::Application), 0);
        assert_eq!(g.count_kind(|k| *k == NodeKind::Termination), 1);
        assert!(g.is_valid());
        assert_eq!(graph_to_term(&g).unwrap().to_string(), "\\a.\\b.a");
    }

    #[test]
    fn identity_graph() {
        let g = term_to_graph(&p("I"));
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.peer_port(0, 1), Some((0, 0)));
        assert_eq!(graph_to_term(&g).unwrap().to_string(), "\\a.a");
    }

    #[test]
    fn self_application_counts() {
        let g = term_to_graph(&p("\\x.x x"));
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.count_kind(|k| *k == NodeKind::FanOut), 1);
        assert!(graph_to_term(&g).unwrap().alpha_eq(&p("\\x.x x")));
    }

    #[test]
    fn free_variables_and_bare_arrow() {
        let g = term_to_graph(&p("y"));
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.wire_count(), 1);
        assert_eq!(graph_to_term(&g).unwrap(), p("y"));

        let g = term_to_graph(&p("f a a"));
        assert!(g.is_valid());
        assert_eq!(g.count_kind(|k| *k == NodeKind::FanOut), 1);
        assert_eq!(graph_to_term(&g).unwrap(), p("f a a"));
    }

    #[test]
    fn binder_names_skip_free_labels() {
        let g = term_to_graph(&p("\\x.a x"));
        assert_eq!(graph_to_term(&g).unwrap().to_string(), "\\b.a b");
    }

    #[test]
    fn readback_errors() {
        let g = crate::mol::parse_mol("FI a b o").unwrap();
        assert!(matches!(graph_to_term(&g), Err(LambdaError::NotLambdaSector(_))));
        let g = crate::mol::parse_mol("LOOP 1").unwrap();
        assert_eq!(graph_to_term(&g), Err(LambdaError::DecorationCycle));
        let g = crate::mol::parse_mol("L x x o\nL y y o2").unwrap();
        assert_eq!(graph_to_term(&g), Err(LambdaError::NoUniqueRoot(2)));
        // application feeding its own function input
        let g = crate::mol::parse_mol("FO o f r\nA f a o").unwrap();
        assert_eq!(graph_to_term(&g), Err(LambdaError::DecorationCycle));
    }
}
