//! Finite binary operation tables and the rack identities.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RackTable {
    pub names: Vec<String>,
    /// `table[a][b]` is the index of `a·b`.
    pub table: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RackReport {
    pub self_distributive: bool,
    /// `(ab)b = a` for all a, b.
    pub involutory: bool,
    /// Every right translation `x -> xb` is a bijection.
    pub right_invertible: bool,
    pub sd_counterexamples: Vec<(usize, usize, usize)>,
    pub inv_counterexamples: Vec<(usize, usize)>,
}

impl RackReport {
    /// Rack in the sense used here: self-distributive and `(ab)b = a`.
    pub fn is_rack(&self) -> bool {
        self.self_distributive && self.involutory
    }
}

const MAX_COUNTEREXAMPLES: usize = 8;

impl RackTable {
    pub fn from_fn(names: Vec<String>, op: impl Fn(usize, usize) -> usize) -> RackTable {
        let n = names.len();
        let table = (0..n).map(|a| (0..n).map(|b| op(a, b)).collect()).collect();
        RackTable { names, table }
    }

    fn numbered(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    /// a·b = a
    pub fn trivial(n: usize) -> RackTable {
        RackTable::from_fn(Self::numbered(n), |a, _| a)
    }

    /// a·b = b
    pub fn right_projection(n: usize) -> RackTable {
        RackTable::from_fn(Self::numbered(n), |_, b| b)
    }

    /// Dihedral core a·b = 2b - a mod n.
    pub fn dihedral(n: usize) -> RackTable {
        RackTable::from_fn(Self::numbered(n), |a, b| (2 * b + n - a) % n)
    }

    /// x·y = y⁻¹xy on the six permutations of {0, 1, 2}.
    pub fn s3_conjugation() -> RackTable {
        let perms = s3();
        let names = perms.iter().map(|p| format!("{}{}{}", p[0], p[1], p[2])).collect();
        RackTable::from_fn(names, |x, y| {
            let (px, py) = (perms[x], perms[y]);
            let c = compose(compose(inverse(py), px), py);
            perms.iter().position(|p| *p == c).unwrap()
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn op(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn check(&self) -> RackReport {
        check_rack(self)
    }
}

type Perm = [usize; 3];

fn s3() -> Vec<Perm> {
    vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
}

/// (p ∘ q)(i) = p(q(i)), written so that `compose(a, b)` means "a then b".
fn compose(a: Perm, b: Perm) -> Perm {
    [b[a[0]], b[a[1]], b[a[2]]]
}

fn inverse(p: Perm) -> Perm {
    let mut out = [0; 3];
    for (i, &v) in p.iter().enumerate() {
        out[v] = i;
    }
    out
}

/// Exhaustive check of both identities.
pub fn check_rack(t: &RackTable) -> RackReport {
    let n = t.len();
    let mut sd = Vec::new();
    let mut inv = Vec::new();
    let mut sd_ok = true;
    let mut inv_ok = true;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if t.op(t.op(a, b), c) != t.op(t.op(a, c), t.op(b, c)) {
                    sd_ok = false;
                    if sd.len() < MAX_COUNTEREXAMPLES {
                        sd.push((a, b, c));
                    }
                }
            }
            if t.op(t.op(a, b), b) != a {
                inv_ok = false;
                if inv.len() < MAX_COUNTEREXAMPLES {
                    inv.push((a, b));
                }
            }
        }
    }
    let right_invertible = (0..n).all(|b| {
        let mut seen = vec![false; n];
        (0..n).all(|a| !std::mem::replace(&mut seen[t.op(a, b)], true))
    });
    RackReport { self_distributive: sd_ok, involutory: inv_ok, right_invertible, sd_counterexamples: sd, inv_counterexamples: inv }
}

impl fmt::Display for RackReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yn = |b: bool| if b { "yes" } else { "no" };
        writeln!(f, "self-distributive (ab)c = (ac)(bc): {}", yn(self.self_distributive))?;
        for (a, b, c) in &self.sd_counterexamples {
            writeln!(f, "  fails at a={a} b={b} c={c}")?;
        }
        writeln!(f, "(ab)b = a: {}", yn(self.involutory))?;
        for (a, b) in &self.inv_counterexamples {
            writeln!(f, "  fails at a={a} b={b}")?;
        }
        writeln!(f, "right translations bijective: {}", yn(self.right_invertible))?;
        write!(f, "rack: {}", yn(self.is_rack()))
    }
}
