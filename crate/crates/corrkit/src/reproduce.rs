//! Reference checks grouped as bipartite (`4`), tripartite (`5`) and
//! guessing-game violator (`A`) sections. Each check recomputes a quantity
//! from scratch and compares it with its reference value.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::antinomy::{is_dc_vertex, robustness_of_antinomy, RobustnessPool};
use crate::causality::{causal_membership, classify_scenario, is_causal_vertex, DEFAULT_VERTEX_CAP};
use crate::error::{Error, Result};
use crate::hull::{verify_decomposition, vertex_rows};
use crate::numeric::Num;
use crate::pools::{is_bell_table, pool_membership, MembershipResult, VertexPool};
use crate::process::{
    afbw_family, afbw_function, bfw_process, causal_structure, correlation_from_process, dep_membership,
    enumerate_process_functions, function_rows, is_logically_consistent, is_process_function, DepMembership,
    LocalIntervention, ProcessDims, StochasticProcess, CANDIDATE_CAP,
};
use crate::quantum::{gyni_instruments, pm_correlation, q_star, w_of_q};
use crate::scenario::{signalling_graph, Correlation, Scenario, Vertex};
use crate::witnesses::{
    afbw_inequality, gyni, gyni_lgyni_correspondence, gyni_vertex, gynin, lgyni, max_over, maximal_violators,
    vertices_exceeding, Argmax, GyniParams, LgyniParams, MaxPool,
};

/// Entrywise tolerance for the quantum correlation table.
pub const TABLE_TOL: f64 = 1e-9;
/// Tolerance for the quoted six-digit game values.
pub const VALUE_TOL: f64 = 1e-5;
/// Tolerance for the robustness value and decomposition weights.
pub const ROBUSTNESS_TOL: f64 = 1e-6;

/// Per-class vertex totals of the tripartite binary scenario.
pub const TRIPARTITE_CLASS_TOTALS: [u64; 16] = [
    64, 1152, 1728, 3456, 1728, 10944, 65664, 623808, 196992, 98496, 65664, 10368, 98496, 3742848, 11852352, 3456,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Section {
    #[serde(rename = "4")]
    Bipartite,
    #[serde(rename = "5")]
    Tripartite,
    #[serde(rename = "A")]
    Games,
}

impl Section {
    pub fn parse(s: &str) -> Result<Vec<Section>> {
        Ok(match s {
            "4" => vec![Section::Bipartite],
            "5" => vec![Section::Tripartite],
            "A" | "a" => vec![Section::Games],
            "all" => vec![Section::Bipartite, Section::Tripartite, Section::Games],
            _ => return Err(Error::Parse(format!("unknown section {s:?}; expected 4, 5, A or all"))),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub section: Section,
    pub description: &'static str,
    pub expected: Value,
    pub actual: Value,
    pub pass: bool,
    #[serde(skip)]
    pub seconds: f64,
}

impl Check {
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: expected {} actual {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.description,
            self.expected,
            self.actual
        )
    }
}

fn timed(
    id: &'static str,
    section: Section,
    description: &'static str,
    run: impl FnOnce() -> Result<(Value, Value, bool)>,
) -> Result<Check> {
    let t = Instant::now();
    let (expected, actual, pass) = run()?;
    Ok(Check { id, section, description, expected, actual, pass, seconds: t.elapsed().as_secs_f64() })
}

fn bipartite() -> Scenario {
    Scenario::uniform(2, 2, 2).expect("valid scenario")
}

fn tripartite() -> Scenario {
    Scenario::uniform(3, 2, 2).expect("valid scenario")
}

fn all_vertices(s: &Scenario) -> Result<Vec<Vertex>> {
    let n = s.vertex_count().ok_or_else(|| Error::InvalidInput("vertex count overflow".into()))?;
    (0..n).map(|c| Vertex::from_code(s.clone(), c)).collect()
}

/// The bipartite family with entries `q/2, q, (1-q)/2, 1-q` in its
/// nontrivial positions; `q = q*` is the quantum correlation.
pub fn qform(q: Num) -> Correlation {
    let half = Num::ratio(1, 2);
    let one = Num::one();
    let h = &half * &q;
    let c = &one - &q;
    let hc = &half * &c;
    let z = Num::zero();
    let rows = vec![
        vec![z.clone(), z.clone(), z.clone(), h.clone()],
        vec![z.clone(), z.clone(), q.clone(), hc.clone()],
        vec![z.clone(), q.clone(), z.clone(), hc],
        vec![one, c.clone(), c, h],
    ];
    Correlation::new(bipartite(), rows).expect("column-stochastic for q in [0, 1]")
}

/// Vertex whose outcome index at setting index `a` is `f[a]`.
fn table_vertex(s: &Scenario, f: [u32; 4]) -> Vertex {
    Vertex::new(s.clone(), f.to_vec()).expect("valid table")
}

/// The canonical-LGYNI vertex `x₁ = ā₁ + a₂`, `x₂ = a₁ + ā₂`.
pub fn lgyni_support_vertex() -> Vertex {
    table_vertex(&bipartite(), [3, 2, 1, 3])
}

/// The minimizing decomposition of the quantum correlation as
/// `(weight, vertex)` pairs for a given `q`.
pub fn minimal_decomposition(q: f64) -> Vec<(f64, Vertex)> {
    let s = bipartite();
    vec![
        (q / 2.0, table_vertex(&s, [3, 2, 1, 0])),
        ((1.0 - q) / 2.0, table_vertex(&s, [3, 2, 1, 1])),
        ((1.0 - q) / 2.0, table_vertex(&s, [3, 2, 1, 2])),
        (1.0 - q, table_vertex(&s, [3, 3, 1, 3])),
        (1.0 - q, table_vertex(&s, [3, 2, 3, 3])),
        ((5.0 * q - 4.0) / 2.0, lgyni_support_vertex()),
    ]
}

fn pass_through_correlation(p: &StochasticProcess) -> Result<Correlation> {
    let iv: Vec<LocalIntervention> = (0..p.dims().parties()).map(|_| LocalIntervention::pass_through(2, 2)).collect();
    correlation_from_process(p, &iv)?.into_correlation()
}

pub fn bipartite_census() -> Result<Check> {
    timed("4.census", Section::Bipartite, "bipartite signalling census", || {
        let s = bipartite();
        let (mut bell, mut forward, mut backward, mut two_way, mut causal) = (0u64, 0u64, 0u64, 0u64, 0u64);
        for v in all_vertices(&s)? {
            let g = signalling_graph(&v);
            match (g.has_edge(0, 1), g.has_edge(1, 0)) {
                (false, false) => bell += 1,
                (true, false) => forward += 1,
                (false, true) => backward += 1,
                (true, true) => two_way += 1,
            }
            causal += is_causal_vertex(&v) as u64;
        }
        let census = classify_scenario(&s, DEFAULT_VERTEX_CAP)?;
        let expected = json!({"bell": 16, "one_to_two": 48, "two_to_one": 48, "two_way": 144, "causal": 112});
        let actual = json!({"bell": bell, "one_to_two": forward, "two_to_one": backward, "two_way": two_way, "causal": causal});
        let pass = expected == actual && census.causal() == 112 && census.total() == 256;
        Ok((expected, actual, pass))
    })
}

pub fn bipartite_classical_is_causal() -> Result<Check> {
    timed("4.classical", Section::Bipartite, "bipartite CLASSICAL verdict iff causal on all 256 vertices", || {
        let mut mismatches = 0u64;
        for v in all_vertices(&bipartite())? {
            if is_dc_vertex(&v)?.is_classical() != is_causal_vertex(&v) {
                mismatches += 1;
            }
        }
        Ok((json!({"mismatches": 0}), json!({"mismatches": mismatches}), mismatches == 0))
    })
}

pub fn quantum_correlation() -> Result<Check> {
    timed("4.quantum", Section::Bipartite, "process-matrix correlation, game values and q-family membership", || {
        let q = q_star();
        let p = pm_correlation(&w_of_q(q), &gyni_instruments())?;
        let reference = qform(Num::approx(q));
        let table_err = p.to_f64().iter().zip(reference.to_f64()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let g = gyni(GyniParams::canonical()).evaluate(&p)?.to_f64();
        let l = lgyni(LgyniParams::canonical()).evaluate(&p)?.to_f64();
        let seven = pm_correlation(&w_of_q(0.7), &gyni_instruments())?;
        let seven_err = seven
            .to_f64()
            .iter()
            .zip(qform(Num::approx(0.7)).to_f64())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let seven_causal = causal_membership(&qform(Num::ratio(7, 10)))?.is_member();
        let half = qform(Num::ratio(1, 2));
        let half_bell = match pool_membership(&half, VertexPool::Bell)? {
            MembershipResult::Member(d) => {
                let cols: Vec<Vec<usize>> = d.iter().map(|(_, v)| vertex_rows(v.scenario(), v.table())).collect();
                let w: Vec<(usize, Num)> = d.iter().enumerate().map(|(j, (w, _))| (j, w.clone())).collect();
                d.iter().all(|(_, v)| is_bell_table(v.scenario(), v.table()))
                    && verify_decomposition(half.entries(), &cols, &w, 0.0)
            }
            MembershipResult::NonMember(_) => false,
        };
        let expected = json!({
            "table_max_error": format!("<= {TABLE_TOL:e}"),
            "gyni": 0.533470, "lgyni": 0.783470,
            "q_0.7_causal": true, "q_0.5_bell_decomposition": true,
        });
        let actual = json!({
            "table_max_error": table_err, "gyni": g, "lgyni": l,
            "q_0.7_causal": seven_causal, "q_0.5_bell_decomposition": half_bell,
        });
        let pass = table_err <= TABLE_TOL
            && seven_err <= TABLE_TOL
            && (g - 0.533470).abs() <= VALUE_TOL
            && (l - 0.783470).abs() <= VALUE_TOL
            && seven_causal
            && half_bell;
        Ok((expected, actual, pass))
    })
}

pub fn quantum_robustness() -> Result<Check> {
    timed("4.robustness", Section::Bipartite, "robustness of antinomy of the quantum correlation", || {
        let q = q_star();
        let p = pm_correlation(&w_of_q(q), &gyni_instruments())?;
        let r = robustness_of_antinomy(&p, &RobustnessPool::Full)?;
        let value = r.value.to_f64();
        let target = (5.0 * q - 4.0) / 2.0;
        let antinomic: Vec<&Vertex> = r.antinomic_terms().map(|t| &t.vertex).collect();
        let reference = minimal_decomposition(q);
        let weight_of = |v: &Vertex| r.terms.iter().filter(|t| &t.vertex == v).map(|t| t.weight.to_f64()).sum::<f64>();
        let max_weight_err = reference.iter().map(|(w, v)| (weight_of(v) - w).abs()).fold(0.0, f64::max);
        let extra: f64 = r
            .terms
            .iter()
            .filter(|t| !reference.iter().any(|(_, v)| v == &t.vertex))
            .map(|t| t.weight.to_f64())
            .sum();
        let unique = antinomic.len() == 1 && antinomic[0] == &lgyni_support_vertex();
        let expected = json!({"value": target, "antinomic_support": [lgyni_support_vertex().table()], "weight_error": format!("<= {ROBUSTNESS_TOL:e}")});
        let actual = json!({
            "value": value,
            "antinomic_support": antinomic.iter().map(|v| v.table()).collect::<Vec<_>>(),
            "weight_error": max_weight_err.max(extra),
        });
        let pass = (value - target).abs() <= ROBUSTNESS_TOL && unique && max_weight_err.max(extra) <= ROBUSTNESS_TOL;
        Ok((expected, actual, pass))
    })
}

pub fn tripartite_census() -> Result<Check> {
    timed("5.census", Section::Tripartite, "tripartite per-class vertex counts", || {
        let census = classify_scenario(&tripartite(), DEFAULT_VERTEX_CAP)?;
        let mut expected: Vec<u64> = TRIPARTITE_CLASS_TOTALS.to_vec();
        expected.sort_unstable();
        let mut actual: Vec<u64> = census.classes.values().map(|c| c.total).collect();
        actual.sort_unstable();
        let pass = expected == actual && census.total() == 1 << 24;
        Ok((json!({"class_totals": expected, "total": 1u64 << 24}), json!({"class_totals": actual, "total": census.total()}), pass))
    })
}

pub fn process_function_sweep() -> Result<Check> {
    timed("5.procfn", Section::Tripartite, "tripartite process functions: siblings on cycles and noncausal images", || {
        let fs = enumerate_process_functions(&ProcessDims::uniform(3, 2)?, CANDIDATE_CAP)?;
        let mut soc_failures = 0u64;
        let mut noncausal = BTreeSet::new();
        for f in &fs {
            if !causal_structure(f).has_siblings_on_cycles()? {
                soc_failures += 1;
            }
            if !is_causal_vertex(&f.to_vertex()) {
                noncausal.insert(f.code());
            }
        }
        let family: BTreeSet<u64> = afbw_family().iter().map(|f| f.code()).collect();
        let expected = json!({"soc_failures": 0, "noncausal": 64, "noncausal_equals_afbw_family": true});
        let actual = json!({
            "process_functions": fs.len(),
            "soc_failures": soc_failures,
            "noncausal": noncausal.len(),
            "noncausal_equals_afbw_family": noncausal == family,
        });
        Ok((expected, actual, soc_failures == 0 && noncausal == family))
    })
}

pub fn afbw_checks() -> Result<Check> {
    timed("5.afbw", Section::Tripartite, "AF/BW process function, inequality and GYNIN values", || {
        let f = afbw_function();
        let is_pf = is_process_function(&f)?.is_process_function;
        let p = pass_through_correlation(&f.to_stochastic())?;
        let w = afbw_inequality();
        let value = w.evaluate(&p)?;
        let (causal_bound, _) = max_over(&w, &MaxPool::Causal)?;
        let g = gynin().evaluate(&p)?;
        let expected = json!({"process_function": true, "afbw": "1", "causal_bound": "3/4", "gynin": "5/8"});
        let actual = json!({"process_function": is_pf, "afbw": value, "causal_bound": causal_bound, "gynin": g});
        let pass = is_pf && value == Num::one() && causal_bound == Num::ratio(3, 4) && g == Num::ratio(5, 8);
        Ok((expected, actual, pass))
    })
}

pub fn bfw_checks() -> Result<Check> {
    timed("5.bfw", Section::Tripartite, "BFW process: consistent, outside the process-function hull, GYNIN 1", || {
        let p = bfw_process();
        let consistent = is_logically_consistent(&p)?.consistent;
        let dims = p.dims().clone();
        let fs = enumerate_process_functions(&dims, CANDIDATE_CAP)?;
        let certificate = match dep_membership(&p, CANDIDATE_CAP)? {
            DepMembership::Member(_) => false,
            DepMembership::NonMember(y) => {
                let yp: Num = y.iter().zip(p.entries()).map(|(a, b)| a * b).sum();
                yp.is_positive_eps(0.0)
                    && fs.iter().all(|f| {
                        let s: Num = function_rows(f).iter().map(|&r| y[r].clone()).sum();
                        !s.is_positive_eps(0.0)
                    })
            }
        };
        let g = gynin().evaluate(&pass_through_correlation(&p)?)?;
        let expected = json!({"consistent": true, "farkas_certificate_verified": true, "gynin": "1"});
        let actual = json!({"consistent": consistent, "farkas_certificate_verified": certificate, "gynin": g});
        Ok((expected, actual, consistent && certificate && g == Num::one()))
    })
}

pub fn gynin_separation() -> Result<Check> {
    timed("5.gynin", Section::Tripartite, "GYNIN causal maximum and antinomy above 5/8", || {
        let w = gynin();
        let (causal_max, arg) = max_over(&w, &MaxPool::Causal)?;
        let Argmax::Vertex(argv) = arg else { unreachable!("vertex pools return vertices") };
        let exceeding = vertices_exceeding(&w, &Num::ratio(5, 8))?;
        let mut classical = 0u64;
        for v in &exceeding {
            if is_dc_vertex(v)?.is_classical() {
                classical += 1;
            }
        }
        let expected = json!({"causal_max": "1/2", "classical_above_5/8": 0});
        let actual = json!({
            "causal_max": causal_max, "causal_argmax": argv.table(),
            "above_5/8": exceeding.len(), "classical_above_5/8": classical,
        });
        Ok((expected, actual, causal_max == Num::ratio(1, 2) && classical == 0))
    })
}

/// Facts about the GYNI/LGYNI violators established by exhaustive search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ViolatorStructure {
    /// Maximal violators of each GYNI witness.
    pub gyni_violators: Vec<usize>,
    /// Maximal violators of each LGYNI witness.
    pub lgyni_violators: Vec<usize>,
    /// GYNI vertices (any type) among each LGYNI witness's violators.
    pub gyni_vertices_per_lgyni: Vec<usize>,
    /// GYNI vertices of type `(α'₀,0,β'₀,0)` among each LGYNI witness's violators.
    pub matching_type_per_lgyni: Vec<usize>,
    /// GYNI types with a nonempty correspondence.
    pub nonempty_correspondence: Vec<[u8; 4]>,
}

pub fn violator_structure() -> Result<ViolatorStructure> {
    let gyni_violators = GyniParams::all().into_iter().map(|g| Ok(maximal_violators(&gyni(g))?.len())).collect::<Result<_>>()?;
    let gyni_vertices: Vec<(GyniParams, Vertex)> = GyniParams::all().into_iter().map(|g| (g, gyni_vertex(g))).collect();
    let mut lgyni_violators = Vec::new();
    let mut gyni_vertices_per_lgyni = Vec::new();
    let mut matching_type_per_lgyni = Vec::new();
    for l in LgyniParams::all() {
        let vs = maximal_violators(&lgyni(l))?;
        lgyni_violators.push(vs.len());
        let shared: Vec<&GyniParams> = gyni_vertices.iter().filter(|(_, v)| vs.contains(v)).map(|(g, _)| g).collect();
        gyni_vertices_per_lgyni.push(shared.len());
        matching_type_per_lgyni
            .push(shared.iter().filter(|g| g.alpha0 == l.alpha0 && g.beta0 == l.beta0 && g.alpha1 == 0 && g.beta1 == 0).count());
    }
    let nonempty_correspondence =
        GyniParams::all().into_iter().filter(|&g| !gyni_lgyni_correspondence(g).is_empty()).map(|g| g.bits()).collect();
    Ok(ViolatorStructure {
        gyni_violators,
        lgyni_violators,
        gyni_vertices_per_lgyni,
        matching_type_per_lgyni,
        nonempty_correspondence,
    })
}

pub fn violator_checks() -> Result<Check> {
    timed("A.violators", Section::Games, "GYNI/LGYNI maximal violators and their correspondence", || {
        let s = violator_structure()?;
        let expected_nonempty: Vec<[u8; 4]> =
            GyniParams::all().into_iter().filter(|g| g.alpha1 == 0 && g.beta1 == 0).map(|g| g.bits()).collect();
        let expected = json!({
            "gyni_violators": vec![1; 16],
            "lgyni_violators": vec![16; 16],
            "gyni_vertices_per_lgyni": vec![1; 16],
            "nonempty_correspondence": expected_nonempty,
        });
        let actual = json!({
            "gyni_violators": s.gyni_violators,
            "lgyni_violators": s.lgyni_violators,
            "gyni_vertices_per_lgyni": s.gyni_vertices_per_lgyni,
            "matching_type_per_lgyni": s.matching_type_per_lgyni,
            "nonempty_correspondence": s.nonempty_correspondence,
        });
        let pass = ["gyni_violators", "lgyni_violators", "gyni_vertices_per_lgyni", "nonempty_correspondence"]
            .iter()
            .all(|k| expected[k] == actual[k]);
        Ok((expected, actual, pass))
    })
}

pub fn section_checks(section: Section) -> Result<Vec<Check>> {
    match section {
        Section::Bipartite => {
            Ok(vec![bipartite_census()?, bipartite_classical_is_causal()?, quantum_correlation()?, quantum_robustness()?])
        }
        Section::Tripartite => Ok(vec![
            tripartite_census()?,
            process_function_sweep()?,
            afbw_checks()?,
            bfw_checks()?,
            gynin_separation()?,
        ]),
        Section::Games => Ok(vec![violator_checks()?]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_decomposition_reproduces_qform() {
        let q = q_star();
        let d = minimal_decomposition(q);
        let mut entries = vec![0.0; 16];
        for (w, v) in &d {
            for r in vertex_rows(v.scenario(), v.table()) {
                entries[r] += w;
            }
        }
        for (a, b) in entries.iter().zip(qform(Num::approx(q)).to_f64()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn section_parsing() {
        assert_eq!(Section::parse("all").unwrap().len(), 3);
        assert!(Section::parse("6").is_err());
    }
}
