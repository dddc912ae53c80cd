mod common;

use common::{arb_closed_term, closed_term, corpus, feed_fanout};
use glc::lambda::{parse_term, term_to_graph};
use glc::rewrite::{apply_move, apply_move_with, emulate_global_fanout, find_sites, FanInWiring, Rule};
use glc::{is_isomorphic, parse_mol, End, NodeKind, PortGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(rng: &mut ChaCha8Rng) -> PortGraph {
    let size = rng.gen_range(2..=9);
    let t = closed_term(rng.gen(), size);
    let mut g = term_to_graph(&t);
    if rng.gen_bool(0.5) {
        // open up the interface with a free-variable term next to it
        let extra = term_to_graph(&parse_term("f x (x y)").unwrap());
        let text = glc::to_mol(&g) + &glc::to_mol(&extra).replace('a', "b");
        g = parse_mol(&text).unwrap();
    }
    g
}

#[test]
fn fuzz_validity_and_interface() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut applied = 0usize;
    while applied < 12_000 {
        let mut g = random_graph(&mut rng);
        for _ in 0..60 {
            let sites: Vec<_> = Rule::ALL.iter().flat_map(|&r| find_sites(&g, r)).collect();
            if sites.is_empty() || g.node_count() > 150 {
                break;
            }
            let m = &sites[rng.gen_range(0..sites.len())];
            let wiring = if rng.gen_bool(0.5) { FanInWiring::Crossing } else { FanInWiring::Parallel };
            let before = g.free_ends();
            g = apply_move_with(&g, m, wiring).unwrap();
            assert!(g.is_valid(), "{:?} broke validity: {:?}", m.rule, g.validate());
            assert_eq!(g.free_ends(), before, "{:?} changed the interface", m.rule);
            applied += 1;
        }
    }
}

#[test]
fn k_into_fanout_emulation() {
    let g = feed_fanout(&parse_term("K").unwrap());
    let site = find_sites(&g, Rule::GlobalFanOut).remove(0);
    let global = apply_move(&g, &site).unwrap();
    let (local, trace) = emulate_global_fanout(&g, &site, FanInWiring::Crossing).unwrap();
    assert!(is_isomorphic(&local, &global).unwrap());
    let rules: Vec<&str> = trace.rules().collect();
    assert_eq!(rules, ["DIST-LAMBDA", "DIST-LAMBDA", "FAN-IN", "PRUNE-FANIN"]);
}

#[test]
fn generated_detachable_sites() {
    let mut checked = 0;
    for t in corpus(400, 10) {
        let g = feed_fanout(&t);
        if g.node_count() > 12 {
            continue;
        }
        let site = find_sites(&g, Rule::GlobalFanOut).into_iter().find(|m| g.kind(m.nodes[0]) == Some(&NodeKind::FanOut) && m.nodes[0] == g.node_count() as u32 - 1).unwrap();
        let global = apply_move(&g, &site).unwrap();
        let (local, trace) = emulate_global_fanout(&g, &site, FanInWiring::Crossing).unwrap();
        assert!(local.is_valid());
        assert!(trace.rules().all(|r| r != "GLOBAL-FANOUT"));
        assert!(is_isomorphic(&local, &global).unwrap(), "{t}");
        checked += 1;
    }
    assert!(checked >= 50, "only {checked} sites");
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(200) })]

    #[test]
    fn co_comm_is_an_involution(t in arb_closed_term(10)) {
        let g = feed_fanout(&t);
        for m in find_sites(&g, Rule::CoComm) {
            let once = apply_move(&g, &m).unwrap();
            let again = find_sites(&once, Rule::CoComm).into_iter().find(|s| s.nodes == m.nodes).unwrap();
            let twice = apply_move(&once, &again).unwrap();
            prop_assert!(is_isomorphic(&twice, &g).unwrap());
        }
    }

    #[test]
    fn every_rule_preserves_interface(t in arb_closed_term(9)) {
        let g = feed_fanout(&t);
        for rule in Rule::ALL {
            for m in find_sites(&g, rule) {
                let out = apply_move(&g, &m).unwrap();
                prop_assert!(out.is_valid());
                prop_assert_eq!(out.free_ends(), g.free_ends());
            }
        }
    }

    #[test]
    fn emulation_with_parallel_fan_in(t in arb_closed_term(9)) {
        let g = feed_fanout(&t);
        let f = g.node_ids().into_iter().max().unwrap();
        let site = find_sites(&g, Rule::GlobalFanOut).into_iter().find(|m| m.nodes[0] == f).unwrap();
        let global = apply_move(&g, &site).unwrap();
        let (local, _) = emulate_global_fanout(&g, &site, FanInWiring::Parallel).unwrap();
        prop_assert!(is_isomorphic(&local, &global).unwrap());
    }
}

#[test]
fn fan_out_outputs_stay_free() {
    let g = feed_fanout(&parse_term("I").unwrap());
    let outs: Vec<_> = g.wires().filter_map(|(_, w)| match &w.dst {
        End::Free(l) => Some(l.clone()),
        _ => None,
    }).collect();
    assert_eq!(outs.len(), 2);
}
