//! Test-only oracles. Nothing here is shared with the library's reduction
//! code, so agreement between the two is meaningful.
#![allow(dead_code)]

use glc::Term;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Nameless term with named free variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Db {
    Bound(usize),
    Free(String),
    Lam(Box<Db>),
    App(Box<Db>, Box<Db>),
}

pub fn to_db(t: &Term) -> Db {
    fn go(t: &Term, env: &mut Vec<String>) -> Db {
        match t {
            Term::Var(x) => match env.iter().rev().position(|v| v == x) {
                Some(i) => Db::Bound(i),
                None => Db::Free(x.clone()),
            },
            Term::Lam(x, b) => {
                env.push(x.clone());
                let r = Db::Lam(Box::new(go(b, env)));
                env.pop();
                r
            }
            Term::App(f, a) => Db::App(Box::new(go(f, env)), Box::new(go(a, env))),
        }
    }
    go(t, &mut Vec::new())
}

pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    to_db(a) == to_db(b)
}

fn shift(t: &Db, d: isize, cutoff: usize) -> Db {
    match t {
        Db::Bound(i) if *i >= cutoff => Db::Bound((*i as isize + d) as usize),
        Db::Bound(i) => Db::Bound(*i),
        Db::Free(x) => Db::Free(x.clone()),
        Db::Lam(b) => Db::Lam(Box::new(shift(b, d, cutoff + 1))),
        Db::App(f, a) => Db::App(Box::new(shift(f, d, cutoff)), Box::new(shift(a, d, cutoff))),
    }
}

fn subst(t: &Db, j: usize, s: &Db) -> Db {
    match t {
        Db::Bound(i) if *i == j => s.clone(),
        Db::Bound(i) => Db::Bound(*i),
        Db::Free(x) => Db::Free(x.clone()),
        Db::Lam(b) => Db::Lam(Box::new(subst(b, j + 1, &shift(s, 1, 0)))),
        Db::App(f, a) => Db::App(Box::new(subst(f, j, s)), Box::new(subst(a, j, s))),
    }
}

fn beta(body: &Db, arg: &Db) -> Db {
    shift(&subst(body, 0, &shift(arg, 1, 0)), -1, 0)
}

/// One leftmost-outermost step, or None at normal form.
fn step(t: &Db) -> Option<Db> {
    match t {
        Db::App(f, a) => {
            if let Db::Lam(b) = &**f {
                return Some(beta(b, a));
            }
            if let Some(f2) = step(f) {
                return Some(Db::App(Box::new(f2), a.clone()));
            }
            step(a).map(|a2| Db::App(f.clone(), Box::new(a2)))
        }
        Db::Lam(b) => step(b).map(|b2| Db::Lam(Box::new(b2))),
        _ => None,
    }
}

fn db_size(t: &Db) -> usize {
    match t {
        Db::Lam(b) => 1 + db_size(b),
        Db::App(f, a) => 1 + db_size(f) + db_size(a),
        _ => 1,
    }
}

/// Normal-order normal form within `limit` steps.
pub fn normalize_db(t: &Db, limit: usize) -> Option<Db> {
    let mut cur = t.clone();
    for _ in 0..limit {
        match step(&cur) {
            None => return Some(cur),
            Some(n) => {
                if db_size(&n) > 10_000 {
                    return None;
                }
                cur = n;
            }
        }
    }
    None
}

pub fn normal_form(t: &Term, limit: usize) -> Option<Db> {
    normalize_db(&to_db(t), limit)
}

fn gen(rng: &mut ChaCha8Rng, size: usize, depth: usize, next: &mut usize) -> Term {
    if size == 1 {
        let i = rng.gen_range(0..depth);
        return Term::Var(format!("v{}", *next - 1 - i));
    }
    let app_ok = size >= 3 && (depth > 0 || size >= 5);
    if !app_ok || rng.gen_bool(0.45) {
        let name = format!("v{}", *next);
        *next += 1;
        let body = gen(rng, size - 1, depth + 1, next);
        *next -= 1;
        return Term::lam(&name, body);
    }
    let splits: Vec<usize> = (1..size - 1).filter(|&k| (k > 1 || depth > 0) && (size - 1 - k > 1 || depth > 0)).collect();
    let k = splits[rng.gen_range(0..splits.len())];
    let f = gen(rng, k, depth, next);
    let a = gen(rng, size - 1 - k, depth, next);
    Term::app(f, a)
}

/// A closed term with exactly `size` constructors (`size >= 2`).
pub fn closed_term(seed: u64, size: usize) -> Term {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = 0;
    gen(&mut rng, size.max(2), 0, &mut next)
}

pub fn arb_closed_term(max_size: usize) -> impl Strategy<Value = Term> {
    (any::<u64>(), 2..=max_size).prop_map(|(seed, size)| closed_term(seed, size))
}

/// Deterministic corpus of distinct closed terms with sizes in 2..=max_size.
pub fn corpus(count: usize, max_size: usize) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    let mut seed = 0u64;
    while out.len() < count {
        let size = 2 + (seed as usize % (max_size - 1));
        let t = closed_term(seed, size);
        if !out.iter().any(|u| alpha_eq(u, &t)) {
            out.push(t);
        }
        seed += 1;
    }
    out
}

/// Random crossing diagram: a uniformly random pairing of the 4n crossing
/// slots, plus `loops` standalone loops. Not necessarily planar; the bracket
/// is defined combinatorially for every pairing.
pub fn random_diagram(seed: u64, n: usize, loops: usize) -> glc::KnotDiagram {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<usize> = (0..4 * n).collect();
    slots.shuffle(&mut rng);
    let mut labels = vec![String::new(); 4 * n];
    for (k, pair) in slots.chunks(2).enumerate() {
        labels[pair[0]] = (k + 1).to_string();
        labels[pair[1]] = (k + 1).to_string();
    }
    let crossings = labels.chunks(4).map(|c| [c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone()]).collect();
    glc::KnotDiagram { crossings, ends: Vec::new(), loops }
}

/// S K K with one K shared through a FanOut, decorated by four actors.
/// Node ids follow line order.
pub const SKK_SHARED_MOL: &str = "L s1 x S\nL s2 y s1\nL s3 z s2\nA p q s3\nA x z1 p\nA y z2 q\nFO z z1 z2\nA S k1 t1\nA t1 k2 root\nL kb kx K\nL kx ky kb\nT ky\nFO K k1 k2\n";

pub fn skk_four_actors() -> (glc::PortGraph, std::collections::BTreeMap<glc::NodeId, String>) {
    let g = glc::parse_mol(SKK_SHARED_MOL).unwrap();
    let owners = [(0, "a"), (12, "a"), (7, "b"), (8, "b"), (1, "c"), (2, "c"), (3, "c"), (4, "c"), (5, "c"), (6, "c"), (9, "d"), (10, "d"), (11, "d")];
    (g, owners.into_iter().map(|(n, a)| (n, a.to_string())).collect())
}

/// Graph of `t` with its output feeding a fresh FanOut.
pub fn feed_fanout(t: &glc::Term) -> glc::PortGraph {
    let mut text = glc::to_mol(&glc::term_to_graph(t));
    let root = text.lines().flat_map(|l| l.split_whitespace()).filter(|w| w.starts_with('a')).fold(
        std::collections::HashMap::<String, usize>::new(),
        |mut m, w| {
            *m.entry(w.to_string()).or_default() += 1;
            m
        },
    );
    let root = root.into_iter().filter(|(_, c)| *c == 1).map(|(l, _)| l).min().unwrap();
    text.push_str(&format!("FO {root} left right\n"));
    glc::parse_mol(&text).unwrap()
}

/// Insert the three-crossing triangle X[b,m,b1,m1] X[b1,t,b2,t1] X[m1,t1,m2,t2]
/// on arcs b, m, t.
pub fn insert_triangle(d: &glc::KnotDiagram, b: &str, m: &str, t: &str) -> glc::KnotDiagram {
    let mut out = d.clone();
    let next = out.labels().iter().filter_map(|l| l.parse::<u64>().ok()).max().unwrap_or(0) + 1;
    let f = |k: u64| (next + k).to_string();
    let (b1, b2, m1, m2, t1, t2) = (f(0), f(1), f(2), f(3), f(4), f(5));
    for (arc, new) in [(b, &b2), (m, &m2), (t, &t2)] {
        let slot = out.crossings.iter_mut().flatten().filter(|l| l.as_str() == arc).nth(1).unwrap();
        *slot = new.clone();
    }
    out.crossings.push([b.into(), m.into(), b1.clone(), m1.clone()]);
    out.crossings.push([b1, t.into(), b2, t1.clone()]);
    out.crossings.push([m1, t1, m2, t2]);
    out
}

pub fn church(n: usize) -> glc::Term {
    let body = (0..n).fold("x".to_string(), |acc, _| format!("f ({acc})"));
    glc::parse_term(&format!("\\f.\\x.{body}")).unwrap()
}

/// Expected Relabel count for a two-node site, read off the state before
/// the move: peripheral ends whose owner differs from the site node they
/// hang off.
pub fn expected_relabels(s: &glc::ActorSystem, nodes: &[glc::NodeId]) -> usize {
    let g = s.graph();
    let link_port = [2, 0];
    let mut count = 0;
    for (side, &n) in nodes.iter().enumerate() {
        for p in 0..3 {
            if p == link_port[side] {
                continue;
            }
            if let Some((m, _)) = g.peer_port(n, p) {
                if !nodes.contains(&m) && s.owner(m) != s.owner(n) {
                    count += 1;
                }
            }
        }
    }
    count
}

/// The successor mask applied to a numeral mask: returns the graph, the
/// numeral's core, the successor's core, and the first node id of the
/// successor part (the final application belongs to it too).
pub fn successor_applied_to_numeral() -> (glc::PortGraph, glc::NodeId, glc::NodeId, glc::NodeId) {
    use glc::actors::{numeral_mask, successor_mask};
    let (num, num_core) = numeral_mask();
    let (succ, succ_core) = successor_mask();
    let rename = |g: &glc::PortGraph, tag: &str| {
        glc::to_mol(g).split('\n').map(|l| l.split(' ').map(|w| if w.starts_with('a') { format!("{tag}{w}") } else { w.to_string() }).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join("\n")
    };
    let (num_text, succ_text) = (rename(&num, "n"), rename(&succ, "s"));
    let root = |text: &str| glc::parse_mol(text).unwrap().free_ends().into_iter().next().unwrap().0;
    let text = format!("{num_text}{succ_text}A {} {} root\n", root(&succ_text), root(&num_text));
    let offset = num.node_count() as glc::NodeId;
    (glc::parse_mol(&text).unwrap(), num_core, offset + succ_core, offset)
}
