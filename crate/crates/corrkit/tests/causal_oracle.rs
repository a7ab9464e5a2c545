//! Causality of deterministic vertices against an independent recursive
//! definition, and causal-polytope membership against explicit enumeration.

use corrkit::causality::{causal_membership, enumerate_causal_vertices, is_causal_vertex, CausalCertificate, DEFAULT_VERTEX_CAP};
use corrkit::scenario::mix;
use corrkit::{Correlation, Num, Scenario, Vertex};
use proptest::prelude::*;

/// Outcome of every party for every setting tuple, as plain vectors.
struct Table {
    settings: Vec<usize>,
    outcome: Vec<Vec<usize>>,
}

fn tuples(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &d in dims {
        out = out.into_iter().flat_map(|t| (0..d).map(move |v| [t.clone(), vec![v]].concat())).collect();
    }
    out
}

fn table_of(v: &Vertex) -> Table {
    let s = v.scenario();
    let outcome = tuples(s.settings())
        .iter()
        .enumerate()
        .map(|(a, _)| (0..s.parties()).map(|k| v.component(k, a)).collect())
        .collect();
    Table { settings: s.settings().to_vec(), outcome }
}

/// Some party's outcome ignores the other settings, and fixing that
/// party's setting leaves a causal vertex on the rest, for every value.
fn oracle_causal(t: &Table) -> bool {
    let n = t.settings.len();
    if n <= 1 {
        return true;
    }
    let all = tuples(&t.settings);
    (0..n).any(|k| {
        let local = all.iter().enumerate().all(|(i, a)| {
            all.iter().enumerate().all(|(j, b)| a[k] != b[k] || t.outcome[i][k] == t.outcome[j][k])
        });
        local
            && (0..t.settings[k]).all(|ak| {
                let rest: Vec<usize> = (0..n).filter(|&l| l != k).collect();
                let settings: Vec<usize> = rest.iter().map(|&l| t.settings[l]).collect();
                let outcome = tuples(&settings)
                    .iter()
                    .map(|r| {
                        let mut full = vec![0; n];
                        for (p, &l) in rest.iter().enumerate() {
                            full[l] = r[p];
                        }
                        full[k] = ak;
                        let i = all.iter().position(|a| *a == full).expect("tuple present");
                        rest.iter().map(|&l| t.outcome[i][l]).collect()
                    })
                    .collect();
                oracle_causal(&Table { settings, outcome })
            })
    })
}

fn exhaustive_agreement(s: &Scenario) -> u64 {
    let mut causal = 0;
    for code in 0..s.vertex_count().unwrap() {
        let v = Vertex::from_code(s.clone(), code).unwrap();
        let fast = is_causal_vertex(&v);
        assert_eq!(fast, oracle_causal(&table_of(&v)), "vertex {:?}", v.table());
        causal += fast as u64;
    }
    causal
}

#[test]
fn bipartite_binary_matches_oracle() {
    assert_eq!(exhaustive_agreement(&Scenario::uniform(2, 2, 2).unwrap()), 112);
}

#[test]
fn bipartite_ternary_outcomes_match_oracle() {
    exhaustive_agreement(&Scenario::uniform(2, 2, 3).unwrap());
}

#[test]
fn asymmetric_settings_match_oracle() {
    exhaustive_agreement(&Scenario::new(vec![3, 2], vec![2, 2]).unwrap());
}

#[test]
fn enumeration_matches_predicate() {
    let s = Scenario::uniform(2, 2, 2).unwrap();
    let listed = enumerate_causal_vertices(&s, DEFAULT_VERTEX_CAP).unwrap();
    let filtered: Vec<Vertex> =
        (0..256).map(|c| Vertex::from_code(s.clone(), c).unwrap()).filter(is_causal_vertex).collect();
    assert_eq!(listed, filtered);
}

#[test]
fn gyni_vertex_separation_holds_on_every_causal_vertex() {
    let s = Scenario::uniform(2, 2, 2).unwrap();
    let g = Vertex::from_fn(s.clone(), |a| vec![a[1], a[0]]).unwrap().to_correlation();
    let CausalCertificate::Separation(y) = causal_membership(&g).unwrap() else {
        panic!("GYNI vertex must be separated");
    };
    let dot = |p: &Correlation| -> Num { p.entries().iter().zip(&y).map(|(a, b)| a * b).sum() };
    assert!(dot(&g).is_positive_eps(0.0));
    for v in enumerate_causal_vertices(&s, DEFAULT_VERTEX_CAP).unwrap() {
        assert!(!dot(&v.to_correlation()).is_positive_eps(0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn tripartite_matches_oracle(code in 0u128..(1 << 24)) {
        let v = Vertex::from_code(Scenario::uniform(3, 2, 2).unwrap(), code).unwrap();
        prop_assert_eq!(is_causal_vertex(&v), oracle_causal(&table_of(&v)));
    }

    #[test]
    fn mixtures_of_causal_vertices_are_members(picks in prop::collection::vec((0usize..112, 1i64..10), 1..5)) {
        let s = Scenario::uniform(2, 2, 2).unwrap();
        let causal = enumerate_causal_vertices(&s, DEFAULT_VERTEX_CAP).unwrap();
        let total: i64 = picks.iter().map(|p| p.1).sum();
        let cs: Vec<Correlation> = picks.iter().map(|&(i, _)| causal[i].to_correlation()).collect();
        let items: Vec<(Num, &Correlation)> = picks.iter().zip(&cs).map(|(&(_, w), c)| (Num::ratio(w, total), c)).collect();
        let p = mix(&items).unwrap();
        let CausalCertificate::Decomposition(d) = causal_membership(&p).unwrap() else {
            return Err(TestCaseError::fail("mixture of causal vertices rejected"));
        };
        let parts: Vec<Correlation> = d.iter().map(|(_, v)| v.to_correlation()).collect();
        let back = mix(&d.iter().zip(&parts).map(|((w, _), c)| (w.clone(), c)).collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(back.entries(), p.entries());
        prop_assert!(d.iter().all(|(_, v)| is_causal_vertex(v)));
    }
}
