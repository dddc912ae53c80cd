//! Unoriented knot and tangle diagrams in planar-diagram notation.
//!
//! `X[a,b,c,d]` lists the four arcs at a crossing counterclockwise starting
//! from the incoming under-strand, so `a -> c` is the under-strand and `b, d`
//! the over-strand. The A-smoothing joins `(a,b)` and `(c,d)`, the
//! B-smoothing joins `(a,d)` and `(b,c)`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::graph::PortGraph;
use crate::laurent::Laurent;
use crate::mol::parse_mol;

pub type Crossing = [String; 4];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnotDiagram {
    pub crossings: Vec<Crossing>,
    pub ends: Vec<String>,
    pub loops: usize,
}

pub const MAX_STATE_SUM_CROSSINGS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KnotError {
    #[error("syntax error at {pos}: {msg}")]
    SyntaxError { pos: usize, msg: String },
    #[error("arc `{label}` {role} {count} times")]
    ArcCountError { label: String, count: usize, role: &'static str },
    #[error("diagram has free ends")]
    HasFreeEnds,
    #[error("{0} crossings exceed the state-sum limit of {MAX_STATE_SUM_CROSSINGS}")]
    TooManyCrossings(usize),
    #[error("no such site")]
    NoSuchSite,
    #[error("arc `{0}` is unlabeled")]
    UnlabeledArc(String),
    #[error("strand directions are inconsistent at crossing {0}")]
    NonOrientable(usize),
}

impl KnotDiagram {
    pub fn is_empty(&self) -> bool {
        self.crossings.is_empty() && self.loops == 0 && self.ends.is_empty()
    }

    pub fn unknot() -> KnotDiagram {
        KnotDiagram { loops: 1, ..KnotDiagram::default() }
    }

    /// Every label with its number of occurrences.
    fn counts(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for l in self.crossings.iter().flatten().chain(self.ends.iter()) {
            *m.entry(l.as_str()).or_insert(0) += 1;
        }
        m
    }

    pub fn validate(&self) -> Result<(), KnotError> {
        for (l, c) in self.counts() {
            if c != 2 {
                return Err(KnotError::ArcCountError { label: l.to_string(), count: c, role: "occurs" });
            }
        }
        Ok(())
    }

    /// Count check plus the PD direction rule: an arc enters at most one
    /// crossing as the incoming under-strand and leaves at most one as the
    /// outgoing under-strand.
    pub fn validate_directions(&self) -> Result<(), KnotError> {
        self.validate()?;
        for (slot, role) in [(0, "enters as under-strand"), (2, "leaves as under-strand")] {
            let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
            for x in &self.crossings {
                *seen.entry(x[slot].as_str()).or_insert(0) += 1;
            }
            if let Some((l, c)) = seen.into_iter().find(|(_, c)| *c > 1) {
                return Err(KnotError::ArcCountError { label: l.to_string(), count: c, role });
            }
        }
        Ok(())
    }

    /// Which occurrence (0 or 1) of `label` is the end where the strand
    /// enters a crossing; 1 when directions cannot be decided.
    fn entering_occurrence(&self, label: &str) -> usize {
        let Ok(dir) = orient(self) else { return 1 };
        let mut k = 0;
        for (i, x) in self.crossings.iter().enumerate() {
            for (p, l) in x.iter().enumerate() {
                if l == label {
                    if dir[i][p] {
                        return k;
                    }
                    k += 1;
                }
            }
        }
        1
    }

    pub fn labels(&self) -> Vec<String> {
        self.counts().into_keys().map(str::to_string).collect()
    }

    /// Disjoint union with a standalone loop.
    pub fn with_unknot(&self) -> KnotDiagram {
        KnotDiagram { loops: self.loops + 1, ..self.clone() }
    }

    /// All crossings switched. The old over-strand becomes the under-strand
    /// and is listed from its incoming end when directions are known.
    pub fn mirror(&self) -> KnotDiagram {
        let dir = orient(self).ok();
        let crossings = self
            .crossings
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let d_first = dir.as_ref().is_some_and(|d| !d[i][1]);
                rot(x, if d_first { 3 } else { 1 })
            })
            .collect();
        KnotDiagram { crossings, ..self.clone() }
    }

    /// Disjoint union; labels of `other` are prefixed to keep them apart.
    pub fn union(&self, other: &KnotDiagram) -> KnotDiagram {
        let used: HashSet<String> = self.labels().into_iter().collect();
        let mut prefix = "u".to_string();
        while other.labels().iter().any(|l| used.contains(&format!("{prefix}{l}"))) {
            prefix.push('u');
        }
        let re = |l: &String| format!("{prefix}{l}");
        let mut out = self.clone();
        out.crossings.extend(other.crossings.iter().map(|x| [re(&x[0]), re(&x[1]), re(&x[2]), re(&x[3])]));
        out.ends.extend(other.ends.iter().map(re));
        out.loops += other.loops;
        out
    }

    fn fresh_label(&self, taken: &mut HashSet<String>) -> String {
        if taken.is_empty() {
            taken.extend(self.labels());
        }
        let mut n = taken.iter().filter_map(|l| l.parse::<u64>().ok()).max().unwrap_or(0) + 1;
        while taken.contains(&n.to_string()) {
            n += 1;
        }
        taken.insert(n.to_string());
        n.to_string()
    }

    /// Rename occurrence number `nth` (0-based, crossings first, then ends)
    /// of `label`.
    fn rename_occurrence(&mut self, label: &str, nth: usize, new: &str) -> bool {
        let mut seen = 0;
        for slot in self.crossings.iter_mut().flatten().chain(self.ends.iter_mut()) {
            if slot == label {
                if seen == nth {
                    *slot = new.to_string();
                    return true;
                }
                seen += 1;
            }
        }
        false
    }

    fn rename_all(&mut self, from: &str, to: &str) {
        for slot in self.crossings.iter_mut().flatten().chain(self.ends.iter_mut()) {
            if slot == from {
                *slot = to.to_string();
            }
        }
    }

    /// Join the loose ends of arcs `x` and `y` left by removed crossings.
    fn join(&mut self, x: &str, y: &str, pending: &mut [String]) {
        if x == y {
            self.loops += 1;
            return;
        }
        self.rename_all(y, x);
        for p in pending.iter_mut() {
            if p == y {
                *p = x.to_string();
            }
        }
    }
}

impl fmt::Display for KnotDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut items: Vec<String> = self.crossings.iter().map(|x| format!("X[{}]", x.join(","))).collect();
        items.extend(std::iter::repeat_n("O".to_string(), self.loops));
        if !self.ends.is_empty() {
            items.push(format!("ends[{}]", self.ends.join(",")));
        }
        f.write_str(&items.join(" "))
    }
}

/// Parse whitespace-separated `X[a,b,c,d]`, `O` and `ends[...]` items.
pub fn parse_pd(text: &str) -> Result<KnotDiagram, KnotError> {
    let mut d = KnotDiagram::default();
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let err = |pos: usize, msg: &str| KnotError::SyntaxError { pos, msg: msg.to_string() };
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if c.is_whitespace() || c == ',' {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && bytes[i].1.is_alphabetic() {
            i += 1;
        }
        let head: String = bytes[start..i].iter().map(|(_, c)| c).collect();
        if head == "O" && (i == bytes.len() || bytes[i].1 != '[') {
            d.loops += 1;
            continue;
        }
        if i == bytes.len() || bytes[i].1 != '[' {
            return Err(err(pos, "expected `X[...]`, `O` or `ends[...]`"));
        }
        let close = bytes[i..].iter().position(|(_, c)| *c == ']').map(|k| i + k).ok_or_else(|| err(bytes[i].0, "missing `]`"))?;
        let inner: String = bytes[i + 1..close].iter().map(|(_, c)| c).collect();
        let labels: Vec<String> = if inner.trim().is_empty() { Vec::new() } else { inner.split(',').map(|s| s.trim().to_string()).collect() };
        if labels.iter().any(|l| l.is_empty() || l.chars().any(char::is_whitespace)) {
            return Err(err(bytes[i].0, "empty or malformed label"));
        }
        match head.as_str() {
            "X" => {
                let x: Crossing = labels.try_into().map_err(|_| err(pos, "a crossing has exactly four arcs"))?;
                d.crossings.push(x);
            }
            "ends" => d.ends.extend(labels),
            _ => return Err(err(pos, &format!("unknown item `{head}`"))),
        }
        i = close + 1;
    }
    d.validate_directions()?;
    Ok(d)
}

/// Kauffman bracket by recursive skein expansion on the diagram itself.
pub fn bracket(d: &KnotDiagram) -> Result<Laurent, KnotError> {
    if !d.ends.is_empty() {
        return Err(KnotError::HasFreeEnds);
    }
    if d.crossings.is_empty() && d.loops == 0 {
        return Ok(Laurent::one());
    }
    Ok(skein(d.clone()))
}

fn skein(mut d: KnotDiagram) -> Laurent {
    let Some([a, b, c, e]) = d.crossings.pop() else {
        return Laurent::delta().pow(d.loops as u32 - 1);
    };
    let smooth = |d: &KnotDiagram, p: (&String, &String), q: (&String, &String)| {
        let mut d = d.clone();
        let mut pending = [q.0.clone(), q.1.clone()];
        d.join(p.0, p.1, &mut pending);
        let [x, y] = pending;
        d.join(&x, &y, &mut []);
        skein(d)
    };
    let sa = smooth(&d, (&a, &b), (&c, &e));
    let sb = smooth(&d, (&a, &e), (&b, &c));
    &(&Laurent::monomial(1, 1) * &sa) + &(&Laurent::monomial(1, -1) * &sb)
}

/// Kauffman bracket by explicit enumeration of all smoothing states.
pub fn state_sum(d: &KnotDiagram) -> Result<Laurent, KnotError> {
    if !d.ends.is_empty() {
        return Err(KnotError::HasFreeEnds);
    }
    let n = d.crossings.len();
    if n > MAX_STATE_SUM_CROSSINGS {
        return Err(KnotError::TooManyCrossings(n));
    }
    if n == 0 && d.loops == 0 {
        return Ok(Laurent::one());
    }
    let mut index: HashMap<&str, usize> = HashMap::new();
    for l in d.crossings.iter().flatten() {
        let k = index.len();
        index.entry(l.as_str()).or_insert(k);
    }
    let ids: Vec<[usize; 4]> = d.crossings.iter().map(|x| [0, 1, 2, 3].map(|i| index[x[i].as_str()])).collect();
    let delta = Laurent::delta();
    let mut total = Laurent::zero();
    for state in 0u32..(1u32 << n) {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); index.len()];
        let mut link = |p: usize, q: usize| {
            adj[p].push(q);
            adj[q].push(p);
        };
        let mut a_count = 0i64;
        for (k, [a, b, c, e]) in ids.iter().copied().enumerate() {
            if state >> k & 1 == 0 {
                a_count += 1;
                link(a, b);
                link(c, e);
            } else {
                link(a, e);
                link(b, c);
            }
        }
        let mut seen = vec![false; index.len()];
        let mut loops = d.loops;
        for s in 0..index.len() {
            if seen[s] {
                continue;
            }
            loops += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        let b_count = n as i64 - a_count;
        total = &total + &(&Laurent::monomial(1, a_count - b_count) * &delta.pow(loops as u32 - 1));
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum R1Site {
    Arc(String),
    Loop,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reidemeister {
    /// Insert a curl; a positive curl multiplies the bracket by -A^3.
    R1Add { site: R1Site, positive: bool },
    /// Remove the curl at a crossing.
    R1Remove { crossing: usize },
    /// Push arc `over` across arc `under`, creating two crossings.
    R2Add { under: String, over: String },
    R2Remove { first: usize, second: usize },
    /// Slide a strand across the crossing of the other two.
    R3 { crossings: [usize; 3] },
}

impl Reidemeister {
    pub fn is_regular(&self) -> bool {
        !matches!(self, Reidemeister::R1Add { .. } | Reidemeister::R1Remove { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveResult {
    pub diagram: KnotDiagram,
    /// Whether the move preserves regular isotopy.
    pub regular: bool,
}

fn rot(x: &Crossing, r: usize) -> Crossing {
    [x[r % 4].clone(), x[(r + 1) % 4].clone(), x[(r + 2) % 4].clone(), x[(r + 3) % 4].clone()]
}

/// Crossings with a curl, with `true` for a positive curl.
pub fn find_r1_sites(d: &KnotDiagram) -> Vec<(usize, bool)> {
    d.crossings
        .iter()
        .enumerate()
        .filter_map(|(i, x)| {
            if x[0] == x[1] || x[2] == x[3] {
                Some((i, true))
            } else if x[1] == x[2] || x[3] == x[0] {
                Some((i, false))
            } else {
                None
            }
        })
        .collect()
}

fn r2_match(d: &KnotDiagram, i: usize, j: usize) -> Option<(Crossing, Crossing)> {
    if i == j {
        return None;
    }
    for ri in [0, 2] {
        for rj in [0, 2] {
            let c1 = rot(&d.crossings[i], ri);
            let c2 = rot(&d.crossings[j], rj);
            if c1[2] == c2[0] && c1[3] == c2[3] && c1[2] != c1[3] {
                return Some((c1, c2));
            }
        }
    }
    None
}

/// Ordered crossing pairs that form a cancelable bigon.
pub fn find_r2_sites(d: &KnotDiagram) -> Vec<(usize, usize)> {
    let n = d.crossings.len();
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| r2_match(d, i, j).is_some()).collect()
}

enum R3Shape {
    /// X[b0,m0,b1,m1], X[b1,t0,b2,t1], X[m1,t1,m2,t2]
    Left([String; 6]),
    /// X[m0,t0,m1,t1], X[b0,t1,b1,t2], X[b1,m1,b2,m2]
    Right([String; 6]),
}

fn r3_match(d: &KnotDiagram, [i, j, k]: [usize; 3]) -> Option<R3Shape> {
    if i == j || j == k || i == k || k >= d.crossings.len() || i >= d.crossings.len() || j >= d.crossings.len() {
        return None;
    }
    for ri in [0, 2] {
        for rj in [0, 2] {
            for rk in [0, 2] {
                let c1 = rot(&d.crossings[i], ri);
                let c2 = rot(&d.crossings[j], rj);
                let c3 = rot(&d.crossings[k], rk);
                let distinct = |a: &String, b: &String, c: &String| a != b && b != c && a != c;
                if c1[2] == c2[0] && c1[3] == c3[0] && c2[3] == c3[1] && distinct(&c1[2], &c1[3], &c2[3]) {
                    return Some(R3Shape::Left([c1[0].clone(), c1[1].clone(), c2[1].clone(), c2[2].clone(), c3[2].clone(), c3[3].clone()]));
                }
                if c1[3] == c2[1] && c2[2] == c3[0] && c1[2] == c3[1] && distinct(&c1[2], &c1[3], &c2[2]) {
                    return Some(R3Shape::Right([c2[0].clone(), c1[0].clone(), c1[1].clone(), c3[2].clone(), c3[3].clone(), c2[3].clone()]));
                }
            }
        }
    }
    None
}

/// Ordered crossing triples forming a Reidemeister III triangle.
pub fn find_r3_sites(d: &KnotDiagram) -> Vec<[usize; 3]> {
    let n = d.crossings.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if r3_match(d, [i, j, k]).is_some() {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

fn remove_crossings(d: &mut KnotDiagram, idx: &[usize]) {
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    for i in sorted.into_iter().rev() {
        d.crossings.remove(i);
    }
}

pub fn apply_reidemeister(d: &KnotDiagram, mv: &Reidemeister) -> Result<MoveResult, KnotError> {
    let mut out = d.clone();
    let mut taken = HashSet::new();
    match mv {
        Reidemeister::R1Add { site, positive } => {
            let p = out.fresh_label(&mut taken);
            let q = out.fresh_label(&mut taken);
            let x = match site {
                R1Site::Loop => {
                    if out.loops == 0 {
                        return Err(KnotError::NoSuchSite);
                    }
                    out.loops -= 1;
                    q.clone()
                }
                R1Site::Arc(x) => {
                    let k = out.entering_occurrence(x);
                    if !out.rename_occurrence(x, k, &q) {
                        return Err(KnotError::NoSuchSite);
                    }
                    x.clone()
                }
            };
            let curl = if *positive { [p.clone(), p, q, x] } else { [x, p.clone(), p, q] };
            out.crossings.push(curl);
        }
        Reidemeister::R1Remove { crossing } => {
            let x = out.crossings.get(*crossing).ok_or(KnotError::NoSuchSite)?.clone();
            let (keep1, keep2) = if x[0] == x[1] {
                (x[2].clone(), x[3].clone())
            } else if x[2] == x[3] {
                (x[0].clone(), x[1].clone())
            } else if x[1] == x[2] {
                (x[0].clone(), x[3].clone())
            } else if x[3] == x[0] {
                (x[1].clone(), x[2].clone())
            } else {
                return Err(KnotError::NoSuchSite);
            };
            out.crossings.remove(*crossing);
            out.join(&keep1, &keep2, &mut []);
        }
        Reidemeister::R2Add { under, over } => {
            if under == over {
                return Err(KnotError::NoSuchSite);
            }
            let u1 = out.fresh_label(&mut taken);
            let u2 = out.fresh_label(&mut taken);
            let o1 = out.fresh_label(&mut taken);
            let o2 = out.fresh_label(&mut taken);
            let (ku, ko) = (out.entering_occurrence(under), out.entering_occurrence(over));
            if !out.rename_occurrence(under, ku, &u2) || !out.rename_occurrence(over, ko, &o2) {
                return Err(KnotError::NoSuchSite);
            }
            out.crossings.push([under.clone(), over.clone(), u1.clone(), o1.clone()]);
            out.crossings.push([u1, o2, u2, o1]);
        }
        Reidemeister::R2Remove { first, second } => {
            if *first >= d.crossings.len() || *second >= d.crossings.len() {
                return Err(KnotError::NoSuchSite);
            }
            let (c1, c2) = r2_match(d, *first, *second).ok_or(KnotError::NoSuchSite)?;
            remove_crossings(&mut out, &[*first, *second]);
            let mut pending = [c1[1].clone(), c2[1].clone()];
            out.join(&c1[0], &c2[2], &mut pending);
            let [x, y] = pending;
            out.join(&x, &y, &mut []);
        }
        Reidemeister::R3 { crossings } => {
            let shape = r3_match(d, *crossings).ok_or(KnotError::NoSuchSite)?;
            remove_crossings(&mut out, crossings);
            let f1 = out.fresh_label(&mut taken);
            let f2 = out.fresh_label(&mut taken);
            let f3 = out.fresh_label(&mut taken);
            match shape {
                R3Shape::Left([b0, m0, t0, b2, m2, t2]) => {
                    let (m1, t1, b1) = (f1, f2, f3);
                    out.crossings.push([m0, t0, m1.clone(), t1.clone()]);
                    out.crossings.push([b0, t1, b1.clone(), t2]);
                    out.crossings.push([b1, m1, b2, m2]);
                }
                R3Shape::Right([b0, m0, t0, b2, m2, t2]) => {
                    let (b1, m1, t1) = (f1, f2, f3);
                    out.crossings.push([b0, m0, b1.clone(), m1.clone()]);
                    out.crossings.push([b1, t0, b2, t1.clone()]);
                    out.crossings.push([m1, t1, m2, t2]);
                }
            }
        }
    }
    Ok(MoveResult { diagram: out, regular: mv.is_regular() })
}

/// Element of the free non-associative algebra over arc names.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Arc(String),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn arc(a: &str) -> Expr {
        Expr::Arc(a.to_string())
    }

    pub fn product(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    /// Replace every occurrence of arc `name` by `by`.
    pub fn substitute(&self, name: &str, by: &Expr) -> Expr {
        match self {
            Expr::Arc(a) if a == name => by.clone(),
            Expr::Arc(_) => self.clone(),
            Expr::Mul(a, b) => Expr::product(a.substitute(name, by), b.substitute(name, by)),
        }
    }

    fn show(&self, nested: bool) -> String {
        match self {
            Expr::Arc(a) => a.clone(),
            Expr::Mul(a, b) => {
                let s = format!("{} {}", a.show(true), b.show(true));
                if nested {
                    format!("({s})")
                } else {
                    s
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.show(false))
    }
}

/// `lhs = rhs` with `lhs` the outgoing under-arc of a crossing.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    pub lhs: String,
    pub rhs: Expr,
}

impl Relation {
    /// Rewrite the right-hand side with another relation's definition.
    pub fn substitute(&self, def: &Relation) -> Relation {
        Relation { lhs: self.lhs.clone(), rhs: self.rhs.substitute(&def.lhs, &def.rhs) }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

fn arc_name(i: usize) -> String {
    let letter = (b'a' + (i % 26) as u8) as char;
    if i < 26 {
        letter.to_string()
    } else {
        format!("{letter}{}", i / 26)
    }
}

/// One relation per crossing: out-under = in-under · over. Arcs are the
/// classes of PD edges joined through over-passes, named `a, b, c, ...` in
/// order of first appearance (in-under, over, out-under of each crossing).
pub fn extract_relations(d: &KnotDiagram) -> Result<Vec<Relation>, KnotError> {
    let mut parent: HashMap<String, String> = HashMap::new();
    fn find(p: &mut HashMap<String, String>, x: &str) -> String {
        let up = p.get(x).cloned().unwrap_or_else(|| x.to_string());
        if up == x {
            return up;
        }
        let root = find(p, &up);
        p.insert(x.to_string(), root.clone());
        root
    }
    for x in &d.crossings {
        if let Some(l) = x.iter().find(|l| *l == "_" || *l == "?") {
            return Err(KnotError::UnlabeledArc(l.clone()));
        }
        let (r1, r2) = (find(&mut parent, &x[1]), find(&mut parent, &x[3]));
        if r1 != r2 {
            parent.insert(r2, r1);
        }
    }
    let mut names: HashMap<String, String> = HashMap::new();
    let mut name_of = |p: &mut HashMap<String, String>, l: &str| {
        let r = find(p, l);
        let k = names.len();
        names.entry(r).or_insert_with(|| arc_name(k)).clone()
    };
    let mut out = Vec::new();
    for x in &d.crossings {
        let a = name_of(&mut parent, &x[0]);
        let b = name_of(&mut parent, &x[1]);
        let c = name_of(&mut parent, &x[2]);
        out.push(Relation { lhs: c, rhs: Expr::product(Expr::Arc(a), Expr::Arc(b)) });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossingKind {
    /// Strand 1 (i1 -> o1) passes over strand 2 (i2 -> o2).
    Positive,
    /// Strand 2 passes over strand 1.
    Negative,
    /// The strands cross without interacting.
    Virtual,
}

/// GLC gadget for one crossing with free ends `i1, i2` (inputs) and
/// `o1, o2` (outputs). The over-strand fans out; one copy continues, the
/// other is applied to the under-strand.
pub fn crossing_to_glc(kind: CrossingKind) -> PortGraph {
    let text = match kind {
        CrossingKind::Positive => "FO i1 o1 t\nA i2 t o2\n",
        CrossingKind::Negative => "FO i2 o2 t\nA i1 t o1\n",
        CrossingKind::Virtual => "ARROW i1 o1\nARROW i2 o2\n",
    };
    parse_mol(text).expect("crossing gadget is well formed")
}

/// Direction of every crossing slot: `true` when the strand enters there.
fn orient(d: &KnotDiagram) -> Result<Vec<[bool; 4]>, KnotError> {
    let n = d.crossings.len();
    let mut dir: Vec<[Option<bool>; 4]> = vec![[None; 4]; n];
    let mut mates: HashMap<&str, Vec<(usize, usize)>> = HashMap::new();
    for (i, x) in d.crossings.iter().enumerate() {
        for (p, l) in x.iter().enumerate() {
            mates.entry(l.as_str()).or_default().push((i, p));
        }
    }
    let mut queue: Vec<(usize, usize, bool)> = Vec::new();
    for i in 0..n {
        queue.push((i, 0, true));
        queue.push((i, 2, false));
    }
    let mut seed = 0;
    loop {
        while let Some((i, p, incoming)) = queue.pop() {
            match dir[i][p] {
                Some(v) if v == incoming => continue,
                Some(_) => return Err(KnotError::NonOrientable(i)),
                None => dir[i][p] = Some(incoming),
            }
            queue.push((i, (p + 2) % 4, !incoming));
            let label = d.crossings[i][p].as_str();
            for &(j, q) in &mates[label] {
                if (j, q) != (i, p) {
                    queue.push((j, q, !incoming));
                }
            }
        }
        while seed < n && dir[seed][1].is_some() {
            seed += 1;
        }
        if seed == n {
            break;
        }
        queue.push((seed, 1, true));
    }
    Ok(dir.into_iter().map(|s| s.map(Option::unwrap)).collect())
}

/// Compose crossing gadgets along the diagram. Standalone loops become
/// node-free loops; free ends of a tangle stay free under their PD label.
pub fn diagram_to_glc(d: &KnotDiagram) -> Result<PortGraph, KnotError> {
    d.validate()?;
    let dir = orient(d)?;
    let mut text = String::new();
    for (i, x) in d.crossings.iter().enumerate() {
        let (over_in, over_out) = if dir[i][1] { (&x[1], &x[3]) } else { (&x[3], &x[1]) };
        text.push_str(&format!("FO k{over_in} k{over_out} t{i}\nA k{} t{i} k{}\n", x[0], x[2]));
    }
    if d.loops > 0 {
        text.push_str(&format!("LOOP {}\n", d.loops));
    }
    let mut g = parse_mol(&text).map_err(|e| KnotError::SyntaxError { pos: 0, msg: e.to_string() })?;
    // strands that run from end to end without crossing
    let in_crossings: HashSet<&String> = d.crossings.iter().flatten().collect();
    let mut bare: Vec<&String> = d.ends.iter().filter(|l| !in_crossings.contains(l)).collect();
    bare.sort();
    bare.dedup();
    for l in bare {
        g.insert_wire(crate::graph::End::Free(format!("k{l}")), crate::graph::End::Free(format!("k{l}'")));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TREFOIL: &str = "X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]";
    const HOPF: &str = "X[1,3,2,4] X[2,4,1,3]";

    fn pd(s: &str) -> KnotDiagram {
        parse_pd(s).unwrap()
    }

    fn both(d: &KnotDiagram) -> Laurent {
        let b = bracket(d).unwrap();
        assert_eq!(b, state_sum(d).unwrap(), "{d}");
        b
    }

    #[test]
    fn parsing() {
        let u = pd("O");
        assert_eq!((u.crossings.len(), u.loops), (0, 1));
        let t = pd(TREFOIL);
        assert_eq!(t.crossings.len(), 3);
        assert_eq!(t.labels().len(), 6);
        assert!(matches!(parse_pd("X[1,2,3,4] X[1,2,3,4]"), Err(KnotError::ArcCountError { count: 2, role: "enters as under-strand", .. })));
        assert!(matches!(parse_pd("X[1,2,3,4] X[5,2,3,4]"), Err(KnotError::ArcCountError { count: 1, role: "occurs", .. })));
        assert!(matches!(parse_pd("X[1,2,3]"), Err(KnotError::SyntaxError { .. })));
        assert!(matches!(parse_pd("Y[1,1]"), Err(KnotError::SyntaxError { .. })));
        let tangle = pd("X[1,2,3,4] ends[1,2,3,4]");
        assert_eq!(tangle.ends.len(), 4);
        assert_eq!(pd(&t.to_string()), t);
    }

    #[test]
    fn unknot_and_unlink() {
        assert_eq!(both(&pd("O")), Laurent::one());
        assert_eq!(both(&pd("O O")), Laurent::delta());
        assert_eq!(bracket(&KnotDiagram::default()).unwrap(), Laurent::one());
    }

    #[test]
    fn curls() {
        assert_eq!(both(&pd("X[1,1,2,2]")), Laurent::monomial(-1, 3));
        assert_eq!(both(&pd("X[1,2,2,1]")), Laurent::monomial(-1, -3));
    }

    #[test]
    fn free_ends_rejected() {
        let t = pd("X[1,2,3,4] ends[1,2,3,4]");
        assert_eq!(bracket(&t), Err(KnotError::HasFreeEnds));
        assert_eq!(state_sum(&t), Err(KnotError::HasFreeEnds));
    }

    #[test]
    fn hopf_and_trefoil_agree() {
        both(&pd(HOPF));
        both(&pd(TREFOIL));
        let m = pd(TREFOIL).mirror();
        assert_eq!(both(&m), both(&pd(TREFOIL)).invert_variable());
    }

    #[test]
    fn r1_moves() {
        let curl = pd("X[1,1,2,2]");
        assert_eq!(find_r1_sites(&curl), vec![(0, true)]);
        let r = apply_reidemeister(&curl, &Reidemeister::R1Remove { crossing: 0 }).unwrap();
        assert!(!r.regular);
        assert_eq!(r.diagram, KnotDiagram::unknot());

        let t = pd(TREFOIL);
        let base = both(&t);
        for positive in [true, false] {
            let r = apply_reidemeister(&t, &Reidemeister::R1Add { site: R1Site::Arc("3".into()), positive }).unwrap();
            r.diagram.validate().unwrap();
            let factor = Laurent::monomial(-1, if positive { 3 } else { -3 });
            assert_eq!(both(&r.diagram), &factor * &base);
            let (site, sign) = find_r1_sites(&r.diagram)[0];
            assert_eq!(sign, positive);
            let back = apply_reidemeister(&r.diagram, &Reidemeister::R1Remove { crossing: site }).unwrap();
            assert_eq!(both(&back.diagram), base);
        }
        let looped = apply_reidemeister(&pd("O"), &Reidemeister::R1Add { site: R1Site::Loop, positive: false }).unwrap();
        assert_eq!(looped.diagram, pd("X[2,1,1,2]"));
    }

    #[test]
    fn r2_round_trip() {
        let t = pd(TREFOIL);
        let r = apply_reidemeister(&t, &Reidemeister::R2Add { under: "1".into(), over: "3".into() }).unwrap();
        assert!(r.regular);
        assert_eq!(both(&r.diagram), both(&t));
        let (i, j) = find_r2_sites(&r.diagram)[0];
        let back = apply_reidemeister(&r.diagram, &Reidemeister::R2Remove { first: i, second: j }).unwrap();
        assert_eq!(back.diagram.crossings.len(), 3);
        assert_eq!(both(&back.diagram), both(&t));
    }

    #[test]
    fn r3_absent_in_trefoil() {
        let t = pd(TREFOIL);
        assert!(find_r3_sites(&t).is_empty());
        assert_eq!(apply_reidemeister(&t, &Reidemeister::R3 { crossings: [0, 1, 2] }), Err(KnotError::NoSuchSite));
        assert_eq!(apply_reidemeister(&t, &Reidemeister::R3 { crossings: [0, 1, 7] }), Err(KnotError::NoSuchSite));
    }

    #[test]
    fn trefoil_relations() {
        let rels: Vec<String> = extract_relations(&pd(TREFOIL)).unwrap().iter().map(|r| r.to_string()).collect();
        assert_eq!(rels, ["c = a b", "b = c a", "a = b c"]);
        assert!(extract_relations(&pd("O")).unwrap().is_empty());
        let curl: Vec<String> = extract_relations(&pd("X[1,1,2,2]")).unwrap().iter().map(|r| r.to_string()).collect();
        assert_eq!(curl, ["a = a a"]);
    }

    #[test]
    fn relation_substitution() {
        let rels = extract_relations(&pd(TREFOIL)).unwrap();
        assert_eq!(rels[1].substitute(&rels[0]).to_string(), "b = (a b) a");
        assert_eq!(rels[2].substitute(&rels[0]).to_string(), "a = b (a b)");
    }

    #[test]
    fn crossing_gadgets() {
        for kind in [CrossingKind::Positive, CrossingKind::Negative, CrossingKind::Virtual] {
            let g = crossing_to_glc(kind);
            assert!(g.is_valid());
            let ends = g.free_ends();
            assert_eq!(ends.len(), 4);
            assert_eq!(ends.iter().filter(|(_, d)| *d == crate::graph::Dir::In).count(), 2);
        }
        assert_eq!(crossing_to_glc(CrossingKind::Virtual).node_count(), 0);
    }

    #[test]
    fn closed_diagrams_to_glc() {
        let g = diagram_to_glc(&pd(TREFOIL)).unwrap();
        assert!(g.is_valid());
        assert!(g.free_ends().is_empty());
        assert_eq!(g.node_count(), 6);
        let g = diagram_to_glc(&pd(&format!("{HOPF} O"))).unwrap();
        assert!(g.is_valid());
        assert_eq!(g.loops(), 1);
        let g = diagram_to_glc(&pd("X[1,1,2,2]")).unwrap();
        assert!(g.is_valid());
        let g = diagram_to_glc(&pd("X[1,2,3,4] ends[1,2,3,4]")).unwrap();
        assert!(g.is_valid());
        assert_eq!(g.free_ends().len(), 4);
    }
}
