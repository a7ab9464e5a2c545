//! Exhaustive tripartite binary facts: process-function counts, the
//! CLASSICAL noncausal vertices and a mixed signalling class.

use std::collections::BTreeSet;

use corrkit::antinomy::is_dc_vertex;
use corrkit::causality::{classify_scenario, is_causal_vertex, DEFAULT_VERTEX_CAP};
use corrkit::digraph::{signalling_class, Digraph};
use corrkit::flags::vertex_flags;
use corrkit::process::{afbw_family, enumerate_process_functions, is_process_function, ProcessDims, CANDIDATE_CAP};
use corrkit::scenario::signalling_graph;
use corrkit::{Scenario, Vertex};

fn tripartite() -> Scenario {
    Scenario::uniform(3, 2, 2).unwrap()
}

#[test]
fn there_are_744_process_functions() {
    let fs = enumerate_process_functions(&ProcessDims::uniform(3, 2).unwrap(), CANDIDATE_CAP).unwrap();
    assert_eq!(fs.len(), 744);
    assert!(fs.iter().all(|f| is_process_function(f).unwrap().is_process_function));
}

#[test]
fn afbw_family_members_are_distinct_process_functions() {
    let fam = afbw_family();
    let codes: BTreeSet<u64> = fam.iter().map(|f| f.code()).collect();
    assert_eq!(codes.len(), 64);
    for f in &fam {
        assert!(is_process_function(f).unwrap().is_process_function);
        let v = f.to_vertex();
        assert!(!is_causal_vertex(&v));
        assert!(is_dc_vertex(&v).unwrap().is_classical());
    }
}

/// Noncausal vertices `x_k = φ_k(a_k, ω_k(a⃗))` over every AF/BW variant
/// `ω` and every local table `φ_k`.
fn afbw_images() -> BTreeSet<u128> {
    let s = tripartite();
    let mut out = BTreeSet::new();
    for w in afbw_family() {
        for phis in 0..(1usize << 12) {
            let phi = |k: usize, a: usize, i: usize| phis >> (4 * k + 2 * a + i) & 1;
            let v = Vertex::from_fn(s.clone(), |a| {
                let o = w.dims().output_radix().index(a);
                (0..3).map(|k| phi(k, a[k], w.component(k, o))).collect()
            })
            .unwrap();
            if !is_causal_vertex(&v) {
                out.insert(v.code());
            }
        }
    }
    out
}

#[test]
fn classical_noncausal_vertices_are_afbw_images() {
    let s = tripartite();
    let flags = vertex_flags(&s).unwrap();
    let complete = Digraph::complete(3).unwrap();
    let mut found = BTreeSet::new();
    for code in 0..flags.count {
        if flags.is_classical(code) && !flags.is_causal(code) {
            let v = Vertex::from_code(s.clone(), code as u128).unwrap();
            assert_eq!(signalling_graph(&v), complete, "classical noncausal vertex outside the complete class");
            found.insert(code as u128);
        }
    }
    assert_eq!(found.len(), 13_824);
    assert_eq!(found, afbw_images());
}

#[test]
fn mixed_class_split() {
    let census = classify_scenario(&tripartite(), DEFAULT_VERTEX_CAP).unwrap();
    let g = Digraph::from_edges(3, &[(0, 2), (1, 0), (1, 2), (2, 0)]).unwrap();
    let c = census.get(&signalling_class(&g).unwrap());
    assert_eq!((c.total, c.causal, c.noncausal), (623_808, 55_296, 568_512));
    assert_eq!(census.causal() + census.classes.values().map(|c| c.noncausal).sum::<u64>(), 1 << 24);
}
