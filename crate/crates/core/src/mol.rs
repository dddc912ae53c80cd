//! Line-oriented molecule text format.
//!
//! ```text
//! # K combinator
//! L b v o
//! L x y b
//! T y
//! ```
//!
//! One node per line, `KIND label...` with labels in the node's port order.
//! A label used twice is a wire, a label used once is a free half-arrow.
//! `D in1 in2 out scale` carries a rational scale, `C tag k dirs label...`
//! declares a core with a `k`-character mask of `i`/`o` directions,
//! `ARROW a b` is a wire touching no node (free end `a` to free end `b`) and
//! `LOOP n` adds `n` node-free loops.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{Dir, End, NodeKind, PortGraph, Scale, WireId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MolError {
    #[error("line {line}: label `{label}` occurs more than twice")]
    DuplicateLabelOverflow { line: usize, label: String },
    #[error("line {line}: {kind} expects {expected} labels, found {found}")]
    ArityMismatch { line: usize, kind: String, expected: usize, found: usize },
    #[error("line {line}: label `{label}` joins two ports of the same direction")]
    OrientationClash { line: usize, label: String },
    #[error("line {line}: bad dilation scale `{text}`")]
    BadScale { line: usize, text: String },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

/// Parse molecule text into a valid graph.
pub fn parse_mol(text: &str) -> Result<PortGraph, MolError> {
    parse(text, true)
}

/// Parse without orientation checks; `_` marks an unconnected port. Used to
/// build deliberately broken graphs for `validate`.
pub fn parse_mol_unchecked(text: &str) -> Result<PortGraph, MolError> {
    parse(text, false)
}

fn parse_kind(line: usize, toks: &[&str]) -> Result<(NodeKind, usize), MolError> {
    let syntax = |msg: &str| MolError::Syntax { line, msg: msg.to_string() };
    let kind = match toks[0] {
        "L" => NodeKind::Lambda,
        "A" => NodeKind::Application,
        "FO" => NodeKind::FanOut,
        "FI" => NodeKind::FanIn,
        "T" => NodeKind::Termination,
        "ST" => NodeKind::Stub,
        "D" => {
            if toks.len() != 5 {
                return Err(MolError::ArityMismatch { line, kind: "D".into(), expected: 3, found: toks.len().saturating_sub(2) });
            }
            let s = toks[4];
            let scale: Scale = s.parse().map_err(|_| MolError::BadScale { line, text: s.to_string() })?;
            return Ok((NodeKind::Dilation(scale), 1));
        }
        "C" => {
            if toks.len() < 4 {
                return Err(syntax("core line needs `C tag k dirs labels...`"));
            }
            let k: usize = toks[2].parse().map_err(|_| syntax("core arity is not a number"))?;
            let dirs = toks[3]
                .chars()
                .map(|c| match c {
                    'i' => Ok(Dir::In),
                    'o' => Ok(Dir::Out),
                    _ => Err(syntax("core direction mask must use `i` and `o`")),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if dirs.len() != k {
                return Err(syntax("core direction mask length differs from arity"));
            }
            return Ok((NodeKind::Core { tag: toks[1].to_string(), dirs }, 4));
        }
        other => return Err(syntax(&format!("unknown node kind `{other}`"))),
    };
    Ok((kind, 1))
}

fn parse(text: &str, strict: bool) -> Result<PortGraph, MolError> {
    let mut g = PortGraph::new();
    let mut wires: HashMap<String, (WireId, usize, usize)> = HashMap::new();
    let mut loops = 0usize;
    let mut arrows: Vec<(usize, String, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks[0] {
            "LOOP" => {
                let n = toks.get(1).and_then(|t| t.parse::<usize>().ok());
                match (n, toks.len()) {
                    (Some(n), 2) => loops += n,
                    _ => return Err(MolError::Syntax { line, msg: "expected `LOOP n`".into() }),
                }
                continue;
            }
            "ARROW" => {
                if toks.len() != 3 {
                    return Err(MolError::Syntax { line, msg: "expected `ARROW src dst`".into() });
                }
                arrows.push((line, toks[1].to_string(), toks[2].to_string()));
                continue;
            }
            _ => {}
        }
        let (kind, first) = parse_kind(line, &toks)?;
        let labels: Vec<&str> = if matches!(kind, NodeKind::Dilation(_)) { toks[1..4].to_vec() } else { toks[first..].to_vec() };
        if labels.len() != kind.arity() {
            return Err(MolError::ArityMismatch { line, kind: toks[0].to_string(), expected: kind.arity(), found: labels.len() });
        }
        let node = g.add_node(kind);
        for (port, label) in labels.into_iter().enumerate() {
            if !strict && label == "_" {
                continue;
            }
            let entry = wires.entry(label.to_string()).or_insert_with(|| (g.new_wire(), 0, line));
            entry.1 += 1;
            if entry.1 > 2 {
                return Err(MolError::DuplicateLabelOverflow { line, label: label.to_string() });
            }
            let ok = if strict { g.plug(node, port, entry.0) } else { g.plug_lenient(node, port, entry.0) };
            if !ok {
                return Err(MolError::OrientationClash { line, label: label.to_string() });
            }
        }
    }

    for (line, a, b) in arrows {
        for l in [&a, &b] {
            if wires.contains_key(l.as_str()) {
                return Err(MolError::Syntax { line, msg: format!("ARROW label `{l}` is used elsewhere") });
            }
        }
        if a == b {
            return Err(MolError::Syntax { line, msg: "ARROW needs two distinct labels".into() });
        }
        let w = g.insert_wire(End::Free(a.clone()), End::Free(b.clone()));
        wires.insert(a, (w, 1, line));
        wires.insert(b, (w, 1, line));
    }

    let names: HashMap<WireId, String> = wires.iter().map(|(l, (w, _, _))| (*w, l.clone())).collect();
    g.close_holes(|w, _| names[&w].clone());
    g.add_loops(loops);
    Ok(g)
}

/// Deterministic molecule text: nodes in id order, labels renamed `a0, a1, ...`
/// in order of first use.
pub fn to_mol(g: &PortGraph) -> String {
    let mut labels = Labeler::default();
    let mut out = String::new();
    for (_, node) in g.nodes() {
        out.push_str(node.kind.mnemonic());
        if let NodeKind::Core { tag, dirs } = &node.kind {
            let mask: String = dirs.iter().map(|d| if *d == Dir::In { 'i' } else { 'o' }).collect();
            let _ = write!(out, " {tag} {} {mask}", dirs.len());
        }
        for w in &node.ports {
            let l = match w {
                Some(w) => labels.of(*w),
                None => "_".to_string(),
            };
            out.push(' ');
            out.push_str(&l);
        }
        if let NodeKind::Dilation(s) = &node.kind {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
    }
    for (id, w) in g.wires() {
        if w.src.node().is_none() && w.dst.node().is_none() {
            let a = labels.of(id);
            let b = labels.fresh();
            let _ = writeln!(out, "ARROW {a} {b}");
        }
    }
    if g.loops() > 0 {
        let _ = writeln!(out, "LOOP {}", g.loops());
    }
    out
}

#[derive(Default)]
struct Labeler {
    names: HashMap<WireId, String>,
    next: usize,
}

impl Labeler {
    fn fresh(&mut self) -> String {
        let s = format!("a{}", self.next);
        self.next += 1;
        s
    }

    fn of(&mut self, w: WireId) -> String {
        if let Some(s) = self.names.get(&w) {
            return s.clone();
        }
        let s = self.fresh();
        self.names.insert(w, s.clone());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ViolationKind;

    #[test]
    fn empty_text_is_empty_graph() {
        let g = parse_mol("").unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.loops(), 0);
        assert_eq!(to_mol(&g), "");
    }

    #[test]
    fn k_graph_from_text() {
        let g = parse_mol("L b v o\nL b2 v2 b\nT v2").unwrap();
        assert_eq!(g.count_kind(|k| *k == NodeKind::Lambda), 2);
        assert_eq!(g.count_kind(|k| *k == NodeKind::Termination), 1);
        let free: Vec<String> = g.free_ends().into_iter().map(|(l, _)| l).collect();
        assert_eq!(free, vec!["b2", "o", "v"]);
        assert!(g.validate().is_empty());
    }

    #[test]
    fn two_in_ports_on_one_label_clash() {
        let err = parse_mol("A x x o").unwrap_err();
        assert!(matches!(err, MolError::OrientationClash { .. }), "{err:?}");
    }

    #[test]
    fn label_overflow() {
        let err = parse_mol("FO i x b\nT x\nT x").unwrap_err();
        assert!(matches!(err, MolError::DuplicateLabelOverflow { .. }), "{err:?}");
    }

    #[test]
    fn arity_and_scale_errors() {
        assert!(matches!(parse_mol("L a b").unwrap_err(), MolError::ArityMismatch { .. }));
        assert!(matches!(parse_mol("D a b c 0").unwrap_err(), MolError::BadScale { .. }));
        assert!(matches!(parse_mol("D a b c x/y").unwrap_err(), MolError::BadScale { .. }));
        assert!(matches!(parse_mol("Q a").unwrap_err(), MolError::Syntax { .. }));
    }

    #[test]
    fn single_termination_prints_canonically() {
        let g = parse_mol("T whatever").unwrap();
        assert_eq!(to_mol(&g), "T a0\n");
    }

    #[test]
    fn loops_printed() {
        let g = parse_mol("LOOP 2").unwrap();
        assert!(to_mol(&g).contains("LOOP 2"));
    }

    #[test]
    fn dilation_and_core_round_trip() {
        let text = "D a b c 3/2\nC counter 3 iio c d e\n";
        let g = parse_mol(text).unwrap();
        let printed = to_mol(&g);
        assert_eq!(printed, "D a0 a1 a2 3/2\nC counter 3 iio a2 a3 a4\n");
        assert_eq!(to_mol(&parse_mol(&printed).unwrap()), printed);
    }

    #[test]
    fn arrow_lines() {
        let g = parse_mol("ARROW x y\n").unwrap();
        assert!(g.validate().is_empty());
        assert_eq!(to_mol(&g), "ARROW a0 a1\n");
        assert!(parse_mol("T x\nARROW x y").is_err());
    }

    #[test]
    fn unchecked_parse_exposes_violations() {
        let g = parse_mol_unchecked("L b _ o\nT b2").unwrap();
        let r = g.validate();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].kind, ViolationKind::DanglingPort);
        assert!(r[0].to_string().starts_with("dangling port"));

        let g = parse_mol_unchecked("T x\nT x").unwrap();
        let r = g.validate();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].kind, ViolationKind::Orientation);
    }
}
