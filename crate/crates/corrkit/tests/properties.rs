//! Property tests across modules: affinity, normalization, the
//! fixed-point characterization, robustness convexity and the antinomy
//! fast path.

use corrkit::antinomy::{dc_membership, faithful_candidate, is_dc_vertex, robustness_of_antinomy, AntinomyCertificate, AntinomyVerdict, RobustnessPool};
use corrkit::process::{
    correlation_from_process, is_logically_consistent, is_process_function, quasi_realize, InterventionShape,
    LocalIntervention, ProcessDims, QuasiProcessFunction, StochasticProcess,
};
use corrkit::scenario::{mix, signalling_graph};
use corrkit::witnesses::{gyni, gynin, lgyni, GyniParams, LgyniParams};
use corrkit::{Correlation, Num, Scenario, Vertex};
use proptest::prelude::*;

fn bipartite() -> Scenario {
    Scenario::uniform(2, 2, 2).unwrap()
}

fn tripartite() -> Scenario {
    Scenario::uniform(3, 2, 2).unwrap()
}

/// Exact mixture of vertices given by `(code, positive integer weight)`.
fn vertex_mixture(s: &Scenario, picks: &[(u128, i64)]) -> Correlation {
    let total: i64 = picks.iter().map(|p| p.1).sum();
    let cs: Vec<Correlation> = picks.iter().map(|&(c, _)| Vertex::from_code(s.clone(), c).unwrap().to_correlation()).collect();
    let items: Vec<(Num, &Correlation)> = picks.iter().zip(&cs).map(|(&(_, w), c)| (Num::ratio(w, total), c)).collect();
    mix(&items).unwrap()
}

fn intervention(shape: InterventionShape, weights: &[u8]) -> LocalIntervention {
    let block = shape.outcomes * shape.outputs;
    let mut table = Vec::new();
    for (j, chunk) in weights.chunks(block).enumerate().take(shape.settings * shape.inputs) {
        let total: i64 = chunk.iter().map(|&w| w as i64).sum();
        if total == 0 {
            table.extend((0..block).map(|o| if o == j % block { Num::one() } else { Num::zero() }));
        } else {
            table.extend(chunk.iter().map(|&w| Num::ratio(w as i64, total)));
        }
    }
    LocalIntervention::stochastic(shape, table).unwrap()
}

fn binary_shape() -> InterventionShape {
    InterventionShape { settings: 2, inputs: 2, outcomes: 2, outputs: 2 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn witness_evaluation_is_affine(picks in prop::collection::vec((0u128..(1 << 24), 1i64..6), 1..5)) {
        let s = tripartite();
        let p = vertex_mixture(&s, &picks);
        let total: i64 = picks.iter().map(|p| p.1).sum();
        let w = gynin();
        let direct = w.evaluate(&p).unwrap();
        let combined: Num = picks
            .iter()
            .map(|&(c, k)| &Num::ratio(k, total) * &w.vertex_value(&Vertex::from_code(s.clone(), c).unwrap()).unwrap())
            .sum();
        prop_assert_eq!(&direct, &combined);
        prop_assert!(!direct.is_negative_eps(0.0) && !(&direct - &Num::one()).is_positive_eps(0.0));
    }

    #[test]
    fn bipartite_witnesses_lie_in_unit_interval(picks in prop::collection::vec((0u128..256, 1i64..6), 1..6), t in 0usize..16) {
        let p = vertex_mixture(&bipartite(), &picks);
        for w in [gyni(GyniParams::all()[t]), lgyni(LgyniParams::all()[t])] {
            let v = w.evaluate(&p).unwrap();
            prop_assert!(!v.is_negative_eps(0.0) && !(&v - &Num::one()).is_positive_eps(0.0));
        }
    }

    #[test]
    fn unique_fixed_points_iff_consistent(code in 0u64..(1 << 24)) {
        let w = QuasiProcessFunction::from_code(ProcessDims::uniform(3, 2).unwrap(), code).unwrap();
        let pf = is_process_function(&w).unwrap().is_process_function;
        prop_assert_eq!(pf, is_logically_consistent(&w.to_stochastic()).unwrap().consistent);
    }

    #[test]
    fn consistent_processes_give_normalized_correlations(
        codes in prop::collection::vec(0usize..744, 1..4),
        weights in prop::collection::vec(0u8..4, 3 * 16),
    ) {
        let dims = ProcessDims::uniform(3, 2).unwrap();
        let fs = corrkit::process::enumerate_process_functions(&dims, corrkit::process::CANDIDATE_CAP).unwrap();
        let parts: Vec<StochasticProcess> = codes.iter().map(|&i| fs[i].to_stochastic()).collect();
        let n = parts.len() as i64;
        let p = StochasticProcess::mix(&parts.iter().map(|q| (Num::ratio(1, n), q)).collect::<Vec<_>>()).unwrap();
        prop_assert!(is_logically_consistent(&p).unwrap().consistent);
        let iv: Vec<LocalIntervention> = weights.chunks(16).map(|w| intervention(binary_shape(), w)).collect();
        let raw = correlation_from_process(&p, &iv).unwrap();
        prop_assert!(raw.normalized);
        prop_assert!(raw.column_sums.iter().all(|s| *s == Num::one()));
    }

    #[test]
    fn process_correlation_is_affine_in_the_process(a in 0usize..744, b in 0usize..744, k in 1i64..8) {
        let dims = ProcessDims::uniform(3, 2).unwrap();
        let fs = corrkit::process::enumerate_process_functions(&dims, corrkit::process::CANDIDATE_CAP).unwrap();
        let (pa, pb) = (fs[a].to_stochastic(), fs[b].to_stochastic());
        let lam = Num::ratio(k, 8);
        let rest = &Num::one() - &lam;
        let pm = StochasticProcess::mix(&[(lam.clone(), &pa), (rest.clone(), &pb)]).unwrap();
        let iv: Vec<LocalIntervention> = (0..3).map(|_| LocalIntervention::pass_through(2, 2)).collect();
        let ca = correlation_from_process(&pa, &iv).unwrap().into_correlation().unwrap();
        let cb = correlation_from_process(&pb, &iv).unwrap().into_correlation().unwrap();
        let cm = correlation_from_process(&pm, &iv).unwrap().into_correlation().unwrap();
        prop_assert_eq!(cm, mix(&[(lam, &ca), (rest, &cb)]).unwrap());
    }

    #[test]
    fn quasi_realization_reproduces_correlations(picks in prop::collection::vec((0u128..256, 1i64..6), 1..5)) {
        let p = vertex_mixture(&bipartite(), &picks);
        let (w, iv) = quasi_realize(&p);
        prop_assert_eq!(correlation_from_process(&w, &iv).unwrap().into_correlation().unwrap(), p);
    }

    #[test]
    fn fast_path_agrees_with_fixed_points(code in 0u128..(1 << 24)) {
        let v = Vertex::from_code(tripartite(), code).unwrap();
        let verdict = is_dc_vertex(&v).unwrap();
        let candidate = faithful_candidate(&v);
        prop_assert!(candidate.reproduces(&v) && candidate.is_faithful());
        let full = is_process_function(&candidate.process()).unwrap().is_process_function;
        prop_assert_eq!(verdict.is_classical(), full);
        if let AntinomyVerdict::Antinomic { certificate: AntinomyCertificate::CycleWithoutSiblings { .. }, .. } = verdict {
            prop_assert!(!signalling_graph(&v).has_siblings_on_cycles().unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn robustness_is_convex(
        a in prop::collection::vec((0u128..256, 1i64..6), 1..4),
        b in prop::collection::vec((0u128..256, 1i64..6), 1..4),
        k in 1i64..4,
    ) {
        let s = bipartite();
        let (p, q) = (vertex_mixture(&s, &a), vertex_mixture(&s, &b));
        let lam = Num::ratio(k, 4);
        let rest = &Num::one() - &lam;
        let m = mix(&[(lam.clone(), &p), (rest.clone(), &q)]).unwrap();
        let r = |c: &Correlation| robustness_of_antinomy(c, &RobustnessPool::Full).unwrap().value;
        let bound = &(&lam * &r(&p)) + &(&rest * &r(&q));
        prop_assert!(!(&r(&m) - &bound).is_positive_eps(0.0));
    }

    #[test]
    fn zero_robustness_iff_classical_member(picks in prop::collection::vec((0u128..256, 1i64..6), 1..4)) {
        let p = vertex_mixture(&bipartite(), &picks);
        let r = robustness_of_antinomy(&p, &RobustnessPool::Full).unwrap();
        prop_assert!(!r.value.is_negative_eps(0.0));
        let y: Num = r.dual.iter().zip(p.entries()).map(|(a, b)| a * b).sum();
        prop_assert_eq!(&y, &r.value);
        prop_assert_eq!(r.value.is_zero_eps(0.0), dc_membership(&p).unwrap().is_member());
    }
}
