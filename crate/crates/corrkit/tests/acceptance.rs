//! Acceptance harness: one PASS/FAIL line per criterion with expected and
//! actual values. Exits nonzero when a criterion fails unexpectedly.

use std::process::ExitCode;
use std::time::Instant;

use corrkit::process::{
    correlation_from_process, enumerate_process_functions, LocalIntervention, InterventionShape, ProcessDims,
    StochasticProcess, CANDIDATE_CAP,
};
use corrkit::quantum::{diagonal_instrument, diagonal_process, pm_correlation};
use corrkit::reproduce::{self, Check};
use corrkit::Num;
use exactlp::{solve, verify_farkas, verify_optimal, verify_ray, LinearProgram, LpOutcome};
use num_rational::BigRational;
use num_traits::Zero;
use rand::{rngs::StdRng, Rng, SeedableRng};

/// Entrywise tolerance of the diagonal-embedding oracle.
const ORACLE_TOL: f64 = 1e-9;
/// Wall-clock limit of the bipartite census in seconds.
const BIPARTITE_CENSUS_SECONDS: f64 = 1.0;
/// Wall-clock limit of the GYNIN exceed-set check in seconds.
const GYNIN_SECONDS: f64 = 60.0;

struct Line {
    criterion: usize,
    pass: bool,
    text: String,
    seconds: f64,
}

fn from_check(criterion: usize, c: Check, limit: Option<f64>) -> Line {
    let in_time = limit.is_none_or(|l| c.seconds <= l);
    let mut text = c.line();
    if let Some(l) = limit {
        text.push_str(&format!(" (limit {l} s)"));
    }
    Line { criterion, pass: c.pass && in_time, text, seconds: c.seconds }
}

fn random_process(rng: &mut StdRng, dims: &ProcessDims) -> StochasticProcess {
    let fs = enumerate_process_functions(dims, CANDIDATE_CAP).unwrap();
    let k = rng.gen_range(1..=3);
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let parts: Vec<StochasticProcess> = (0..k).map(|_| fs[rng.gen_range(0..fs.len())].to_stochastic()).collect();
    let items: Vec<(Num, &StochasticProcess)> = raw.iter().zip(&parts).map(|(w, p)| (Num::approx(w / total), p)).collect();
    StochasticProcess::mix(&items).unwrap()
}

fn random_intervention(rng: &mut StdRng, inputs: usize, outputs: usize) -> LocalIntervention {
    let shape = InterventionShape { settings: 2, inputs, outcomes: 2, outputs };
    let block = shape.outcomes * outputs;
    let mut table = Vec::new();
    for _ in 0..shape.settings * inputs {
        let raw: Vec<f64> = (0..block).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) }).collect();
        let total: f64 = raw.iter().sum::<f64>().max(1e-3);
        let mut row: Vec<f64> = raw.iter().map(|v| v / total).collect();
        if raw.iter().all(|&v| v == 0.0) {
            row[0] = 1.0;
        }
        table.extend(row.into_iter().map(Num::approx));
    }
    LocalIntervention::stochastic(shape, table).unwrap()
}

fn diagonal_oracle() -> Line {
    let t = Instant::now();
    let mut rng = StdRng::seed_from_u64(2024);
    let all_dims = [
        ProcessDims::uniform(2, 2).unwrap(),
        ProcessDims::uniform(3, 2).unwrap(),
        ProcessDims::new(vec![2, 3], vec![2, 2]).unwrap(),
    ];
    let mut worst = 0f64;
    for case in 0..100 {
        let dims = &all_dims[case % all_dims.len()];
        let p = random_process(&mut rng, dims);
        let iv: Vec<LocalIntervention> =
            (0..dims.parties()).map(|k| random_intervention(&mut rng, dims.inputs()[k], dims.outputs()[k])).collect();
        let classical = correlation_from_process(&p, &iv).unwrap().into_correlation().unwrap();
        let instruments: Vec<_> = iv.iter().map(|l| diagonal_instrument(l).unwrap()).collect();
        let quantum = pm_correlation(&diagonal_process(&p), &instruments).unwrap();
        let err = classical.to_f64().iter().zip(quantum.to_f64()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(err);
    }
    let pass = worst <= ORACLE_TOL;
    Line {
        criterion: 11,
        pass,
        text: format!(
            "{} [oracle] diagonal embedding vs classical composition on 100 random cases: expected max error <= {ORACLE_TOL:e} actual {worst:e}",
            if pass { "PASS" } else { "FAIL" }
        ),
        seconds: t.elapsed().as_secs_f64(),
    }
}

fn lp_soundness() -> Line {
    type Q = BigRational;
    let t = Instant::now();
    let mut rng = StdRng::seed_from_u64(12);
    let q = |v: i64| Q::from_integer(v.into());
    let (mut optimal, mut infeasible, mut unbounded, mut bad) = (0, 0, 0, 0);
    for _ in 0..1000 {
        let m = rng.gen_range(1..=5);
        let n = rng.gen_range(1..=8);
        let a: Vec<Vec<Q>> = (0..m).map(|_| (0..n).map(|_| q(rng.gen_range(-4..=4))).collect()).collect();
        let b: Vec<Q> = (0..m).map(|_| q(rng.gen_range(-5..=5))).collect();
        let c: Vec<Q> = (0..n).map(|_| q(rng.gen_range(-3..=4))).collect();
        let lp = LinearProgram::from_dense(&a, b.clone(), c.clone()).unwrap();
        match solve(&lp).unwrap() {
            LpOutcome::Optimal(opt) => {
                optimal += 1;
                let primal = c.iter().zip(&opt.primal).fold(Q::zero(), |s, (x, y)| s + x * y);
                let dual = b.iter().zip(&opt.dual).fold(Q::zero(), |s, (x, y)| s + x * y);
                if primal != dual || !verify_optimal(&lp, &opt) {
                    bad += 1;
                }
            }
            LpOutcome::Infeasible { farkas } => {
                infeasible += 1;
                bad += !verify_farkas(&lp, &farkas) as usize;
            }
            LpOutcome::Unbounded { ray } => {
                unbounded += 1;
                bad += !verify_ray(&lp, &ray) as usize;
            }
        }
    }
    let pass = bad == 0 && optimal > 0 && infeasible > 0;
    Line {
        criterion: 12,
        pass,
        text: format!(
            "{} [lp] 1000 random rational programs: expected 0 failed certificates actual {bad} \
             (optimal {optimal}, infeasible {infeasible}, unbounded {unbounded})",
            if pass { "PASS" } else { "FAIL" }
        ),
        seconds: t.elapsed().as_secs_f64(),
    }
}

/// The GYNI/LGYNI correspondence claim is false; the check must report FAIL
/// and the exhaustive structure must match what the search establishes.
fn violator_truth_holds() -> bool {
    let s = reproduce::violator_structure().unwrap();
    s.gyni_violators == vec![1; 16]
        && s.lgyni_violators == vec![16; 16]
        && s.gyni_vertices_per_lgyni == vec![4; 16]
        && s.matching_type_per_lgyni == vec![1; 16]
        && s.nonempty_correspondence.len() == 16
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut lines = vec![
        from_check(1, reproduce::bipartite_census().unwrap(), Some(BIPARTITE_CENSUS_SECONDS)),
        from_check(2, reproduce::tripartite_census().unwrap(), None),
        from_check(3, reproduce::process_function_sweep().unwrap(), None),
        from_check(4, reproduce::afbw_checks().unwrap(), None),
        from_check(5, reproduce::bfw_checks().unwrap(), None),
        from_check(6, reproduce::gynin_separation().unwrap(), Some(GYNIN_SECONDS)),
        from_check(7, reproduce::quantum_correlation().unwrap(), None),
        from_check(8, reproduce::quantum_robustness().unwrap(), None),
        from_check(9, reproduce::bipartite_classical_is_causal().unwrap(), None),
        from_check(10, reproduce::violator_checks().unwrap(), None),
    ];
    lines.push(diagonal_oracle());
    lines.push(lp_soundness());

    let mut unexpected = 0;
    for l in &lines {
        println!("criterion {:>2}: {} [{:.2} s]", l.criterion, l.text, l.seconds);
        let expected_pass = l.criterion != 10;
        if l.pass != expected_pass {
            unexpected += 1;
        }
    }
    let truth = violator_truth_holds();
    println!(
        "criterion 10 is a known FAIL: the exhaustive violator structure (4 GYNI vertices per LGYNI witness, \
         correspondence nonempty for all 16 types) {}",
        if truth { "holds" } else { "DOES NOT hold" }
    );
    if !truth {
        unexpected += 1;
    }
    let passed = lines.iter().filter(|l| l.pass).count();
    println!("acceptance: {passed}/12 PASS, {} unexpected", unexpected);
    if unexpected == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
