mod common;

use common::{insert_triangle, random_diagram};
use glc::knot::{apply_reidemeister, extract_relations, find_r2_sites, find_r3_sites, R1Site, Reidemeister};
use glc::{bracket, parse_pd, state_sum, KnotDiagram, Laurent};
use proptest::prelude::*;

const TREFOIL: &str = "X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]";

fn arb_diagram(max_crossings: usize) -> impl Strategy<Value = KnotDiagram> {
    (any::<u64>(), 0..=max_crossings, 0usize..=2).prop_map(|(seed, n, loops)| {
        let loops = if n == 0 { loops.max(1) } else { loops };
        random_diagram(seed, n, loops)
    })
}

#[test]
fn trefoil_matches_golden_file() {
    let golden = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/trefoil_bracket.txt")).unwrap();
    let d = parse_pd(TREFOIL).unwrap();
    assert_eq!(state_sum(&d).unwrap().to_string(), golden.trim());
    assert_eq!(bracket(&d).unwrap().to_string(), golden.trim());
}

#[test]
fn r3_on_triangles_keeps_bracket() {
    let mut applied = 0;
    for seed in 0..60u64 {
        let d = random_diagram(seed, (seed % 4) as usize + 3, 0);
        let labels = d.labels();
        let pick = |k: u64| labels[((seed * 7 + k * 13) as usize) % labels.len()].clone();
        let (b, m, t) = (pick(0), pick(1), pick(2));
        if b == m || m == t || b == t {
            continue;
        }
        let lhs = insert_triangle(&d, &b, &m, &t);
        lhs.validate().unwrap();
        let n = lhs.crossings.len();
        let site = [n - 3, n - 2, n - 1];
        assert!(find_r3_sites(&lhs).contains(&site));
        let rhs = apply_reidemeister(&lhs, &Reidemeister::R3 { crossings: site }).unwrap();
        assert!(rhs.regular);
        rhs.diagram.validate().unwrap();
        let before = bracket(&lhs).unwrap();
        assert_eq!(bracket(&rhs.diagram).unwrap(), before, "seed {seed}");
        // and back again
        let n = rhs.diagram.crossings.len();
        let back = apply_reidemeister(&rhs.diagram, &Reidemeister::R3 { crossings: [n - 3, n - 2, n - 1] }).unwrap();
        assert_eq!(bracket(&back.diagram).unwrap(), before);
        applied += 2;
    }
    assert!(applied >= 50);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(100) })]

    #[test]
    fn bracket_equals_state_sum(d in arb_diagram(10)) {
        prop_assert_eq!(bracket(&d).unwrap(), state_sum(&d).unwrap());
    }

    #[test]
    fn disjoint_unknot_multiplies_by_delta(d in arb_diagram(6)) {
        prop_assert_eq!(bracket(&d.with_unknot()).unwrap(), &Laurent::delta() * &bracket(&d).unwrap());
    }

    #[test]
    fn r2_insert_and_remove_keep_bracket(d in arb_diagram(5), i in 0usize..100, j in 0usize..100) {
        let labels = d.labels();
        prop_assume!(labels.len() >= 2);
        let (u, o) = (labels[i % labels.len()].clone(), labels[j % labels.len()].clone());
        prop_assume!(u != o);
        let base = bracket(&d).unwrap();
        let r = apply_reidemeister(&d, &Reidemeister::R2Add { under: u, over: o }).unwrap();
        prop_assert!(r.regular);
        prop_assert_eq!(bracket(&r.diagram).unwrap(), base.clone());
        let n = r.diagram.crossings.len();
        prop_assert!(find_r2_sites(&r.diagram).contains(&(n - 2, n - 1)));
        let back = apply_reidemeister(&r.diagram, &Reidemeister::R2Remove { first: n - 2, second: n - 1 }).unwrap();
        prop_assert_eq!(bracket(&back.diagram).unwrap(), base);
    }

    #[test]
    fn r1_multiplies_by_minus_a_cubed(d in arb_diagram(5), i in 0usize..100, positive: bool) {
        let labels = d.labels();
        let site = if labels.is_empty() { R1Site::Loop } else { R1Site::Arc(labels[i % labels.len()].clone()) };
        let r = apply_reidemeister(&d, &Reidemeister::R1Add { site, positive }).unwrap();
        prop_assert!(!r.regular);
        let factor = Laurent::monomial(-1, if positive { 3 } else { -3 });
        prop_assert_eq!(bracket(&r.diagram).unwrap(), &factor * &bracket(&d).unwrap());
    }

    #[test]
    fn mirror_inverts_variable(d in arb_diagram(7)) {
        prop_assert_eq!(bracket(&d.mirror()).unwrap(), bracket(&d).unwrap().invert_variable());
    }

    #[test]
    fn one_relation_per_crossing(d in arb_diagram(8)) {
        prop_assert_eq!(extract_relations(&d).unwrap().len(), d.crossings.len());
    }
}
