//! Deterministic consistency of vertices, membership in the hull of
//! classical vertices, and the robustness of antinomy.
//!
//! A vertex is classical exactly when its canonical faithful candidate is
//! a process function. The candidate sends each party the class of the
//! remote settings under discriminability: two remote setting tuples are
//! equivalent when the party's outcome agrees on them for every local
//! setting. Its causal structure equals the signalling graph, so a graph
//! without siblings on some cycle already decides the verdict.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::flags::vertex_flags;
use crate::hull::{decompose, generate_columns, greedy_vertex_codes, support_vertex_codes, vertex_rows, GenerationResult, HullResult};
use crate::numeric::{Num, DEFAULT_EPS};
use crate::pools::{pool_membership, MembershipResult, VertexPool, DIRECT_VERTEX_LIMIT, SUPPORT_LIMIT};
use crate::process::{FixedPointKernel, FixedPointWitness, ProcessDims, QuasiProcessFunction};
use crate::radix::Radix;
use crate::scenario::{signalling_edges, Correlation, Scenario, Vertex};

/// Process-function realization built from discriminability classes.
#[derive(Clone, Debug, PartialEq)]
pub struct FaithfulRealization {
    scenario: Scenario,
    /// `|B_k|`.
    classes: Vec<usize>,
    /// `g_k` indexed by remote setting tuple `a⃗∖k`.
    g: Vec<Vec<u32>>,
    /// `f'_k` indexed by `a_k·|B_k| + b_k`.
    local: Vec<Vec<u32>>,
}

impl FaithfulRealization {
    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.classes
    }

    /// `g_k(a⃗∖k)`.
    pub fn g(&self, k: usize, remote: usize) -> usize {
        self.g[k][remote] as usize
    }

    /// `f'_k(a_k, b_k)`.
    pub fn local(&self, k: usize, a: usize, b: usize) -> usize {
        self.local[k][a * self.classes[k] + b] as usize
    }

    /// Undiscriminable remote setting tuples of party `k`, one list per class.
    pub fn undiscriminable_sets(&self, k: usize) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.classes[k]];
        for (r, &b) in self.g[k].iter().enumerate() {
            sets[b as usize].push(r);
        }
        sets
    }

    /// The environment as a quasi-process function with `I_k = B_k`, `O_k = A_k`.
    pub fn process(&self) -> QuasiProcessFunction {
        let dims = ProcessDims::new(self.classes.clone(), self.scenario.settings().to_vec()).expect("valid dims");
        let sr = self.scenario.setting_radix();
        let omega = (0..sr.size())
            .map(|a| {
                let b: Vec<usize> = (0..sr.len()).map(|k| self.g[k][sr.drop_digit(a, k)] as usize).collect();
                dims.input_radix().index(&b) as u32
            })
            .collect();
        QuasiProcessFunction::new(dims, omega).expect("valid omega")
    }

    /// `f_k(a⃗) = f'_k(a_k, g_k(a⃗∖k))` for every `a⃗` and `k`.
    pub fn reproduces(&self, v: &Vertex) -> bool {
        let s = &self.scenario;
        let sr = s.setting_radix();
        v.scenario() == s
            && (0..sr.size()).all(|a| {
                (0..s.parties()).all(|k| {
                    let b = self.g[k][sr.drop_digit(a, k)] as usize;
                    self.local(k, sr.digit(a, k), b) == v.component(k, a)
                })
            })
    }

    /// Distinct classes are discriminated by some local setting.
    pub fn is_faithful(&self) -> bool {
        (0..self.scenario.parties()).all(|k| {
            let m = self.scenario.settings()[k];
            let c = self.classes[k];
            (0..c).all(|b| (b + 1..c).all(|b2| (0..m).any(|a| self.local(k, a, b) != self.local(k, a, b2))))
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "classes": self.classes,
            "g": self.g,
            "local": self.local,
            "process": self.process().to_json(),
        })
    }
}

/// Discriminability partition of remote settings for one party.
fn partition(sr: &Radix, or: &Radix, f: &[u32], k: usize, m: usize) -> (usize, Vec<u32>, Vec<u32>) {
    let remote = sr.size() / m;
    let mut sigs: Vec<Vec<u32>> = Vec::new();
    let mut g = Vec::with_capacity(remote);
    for r in 0..remote {
        let sig: Vec<u32> = (0..m).map(|a| or.digit(f[sr.insert_digit(r, k, a)] as usize, k) as u32).collect();
        let b = match sigs.iter().position(|s| *s == sig) {
            Some(b) => b,
            None => {
                sigs.push(sig);
                sigs.len() - 1
            }
        };
        g.push(b as u32);
    }
    let c = sigs.len();
    let mut local = vec![0u32; m * c];
    for (b, sig) in sigs.iter().enumerate() {
        for (a, &x) in sig.iter().enumerate() {
            local[a * c + b] = x;
        }
    }
    (c, g, local)
}

pub fn faithful_candidate(v: &Vertex) -> FaithfulRealization {
    let s = v.scenario();
    let (sr, or) = (s.setting_radix(), s.outcome_radix());
    let mut classes = Vec::new();
    let mut g = Vec::new();
    let mut local = Vec::new();
    for k in 0..s.parties() {
        let (c, gk, lk) = partition(sr, or, v.table(), k, s.settings()[k]);
        classes.push(c);
        g.push(gk);
        local.push(lk);
    }
    FaithfulRealization { scenario: s.clone(), classes, g, local }
}

/// Why a vertex is antinomic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AntinomyCertificate {
    /// A directed cycle of the signalling graph with no two members sharing a parent (0-based parties).
    CycleWithoutSiblings { cycle: Vec<usize> },
    /// An intervention on the faithful candidate without a unique fixed point.
    FixedPoints(FixedPointWitness),
}

#[derive(Clone, Debug, PartialEq)]
pub enum AntinomyVerdict {
    Classical(FaithfulRealization),
    Antinomic { realization: FaithfulRealization, certificate: AntinomyCertificate },
}

impl AntinomyVerdict {
    pub fn is_classical(&self) -> bool {
        matches!(self, AntinomyVerdict::Classical(_))
    }

    pub fn realization(&self) -> &FaithfulRealization {
        match self {
            AntinomyVerdict::Classical(r) | AntinomyVerdict::Antinomic { realization: r, .. } => r,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            AntinomyVerdict::Classical(r) => json!({"verdict": "CLASSICAL", "realization": r.to_json()}),
            AntinomyVerdict::Antinomic { realization, certificate } => json!({
                "verdict": "ANTINOMIC",
                "realization": realization.to_json(),
                "certificate": certificate,
            }),
        }
    }
}

fn cycle_without_siblings(g: &Digraph) -> Result<Option<Vec<usize>>> {
    for c in g.directed_cycles()? {
        let shares_parent = (0..g.n()).any(|p| c.iter().filter(|&&v| g.has_edge(p, v)).count() >= 2);
        if !shares_parent {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Verdict from the faithful candidate.
pub fn is_dc_vertex(v: &Vertex) -> Result<AntinomyVerdict> {
    let realization = faithful_candidate(v);
    let graph = signalling_edges(v.scenario(), v.table());
    if let Some(cycle) = cycle_without_siblings(&graph)? {
        return Ok(AntinomyVerdict::Antinomic {
            realization,
            certificate: AntinomyCertificate::CycleWithoutSiblings { cycle },
        });
    }
    let w = realization.process();
    let kernel = crate::process::fixed_point_kernel(w.dims())?;
    Ok(match kernel.check(w.omega()).witness {
        None => AntinomyVerdict::Classical(realization),
        Some(wit) => AntinomyVerdict::Antinomic { realization, certificate: AntinomyCertificate::FixedPoints(wit) },
    })
}

/// Fast classical/antinomic predicate over many vertices of one scenario.
pub struct DcClassifier {
    verdicts: HashMap<u128, bool>,
    soc: HashMap<u64, bool>,
    kernels: HashMap<Vec<usize>, Arc<FixedPointKernel>>,
    omega: Vec<u32>,
}

impl Default for DcClassifier {
    fn default() -> Self {
        DcClassifier::new()
    }
}

impl DcClassifier {
    pub fn new() -> DcClassifier {
        DcClassifier { verdicts: HashMap::new(), soc: HashMap::new(), kernels: HashMap::new(), omega: Vec::new() }
    }

    pub fn is_classical(&mut self, v: &Vertex) -> Result<bool> {
        self.is_classical_table(v.scenario(), v.table())
    }

    pub fn is_classical_table(&mut self, s: &Scenario, f: &[u32]) -> Result<bool> {
        let graph = signalling_edges(s, f);
        let code = graph.adjacency_code();
        let soc = match self.soc.get(&code) {
            Some(&b) => b,
            None => {
                let b = graph.has_siblings_on_cycles()?;
                self.soc.insert(code, b);
                b
            }
        };
        if !soc {
            return Ok(false);
        }
        let (sr, or) = (s.setting_radix(), s.outcome_radix());
        let n = s.parties();
        let mut classes = Vec::with_capacity(n);
        let mut gs = Vec::with_capacity(n);
        for k in 0..n {
            let (c, g, _) = partition(sr, or, f, k, s.settings()[k]);
            classes.push(c);
            gs.push(g);
        }
        let ir = Radix::new(&classes);
        self.omega.clear();
        for a in 0..sr.size() {
            let i: usize = (0..n).map(|k| gs[k][sr.drop_digit(a, k)] as usize * ir.stride(k)).sum();
            self.omega.push(i as u32);
        }
        let key = verdict_key(s.settings(), &classes, &self.omega);
        if let Some(k) = key {
            if let Some(&b) = self.verdicts.get(&k) {
                return Ok(b);
            }
        }
        let kernel = match self.kernels.get(&classes) {
            Some(k) => k.clone(),
            None => {
                let dims = ProcessDims::new(classes.clone(), s.settings().to_vec())?;
                let k = crate::process::fixed_point_kernel(&dims)?;
                self.kernels.insert(classes.clone(), k.clone());
                k
            }
        };
        let b = kernel.is_process_function(&self.omega);
        if let Some(k) = key {
            self.verdicts.insert(k, b);
        }
        Ok(b)
    }
}

fn verdict_key(settings: &[usize], classes: &[usize], omega: &[u32]) -> Option<u128> {
    if settings.iter().chain(classes).any(|&c| c > 255) || settings.len() > 6 {
        return None;
    }
    let inputs: usize = classes.iter().product();
    let bits = usize::BITS - (inputs.max(2) - 1).leading_zeros();
    if 3 + 16 * settings.len() as u32 + bits * omega.len() as u32 > 128 {
        return None;
    }
    let mut key = settings.len() as u128;
    for (&m, &c) in settings.iter().zip(classes) {
        key = key << 16 | (m as u128) << 8 | c as u128;
    }
    for &i in omega {
        key = key << bits | i as u128;
    }
    Some(key)
}

/// Membership in the hull of classical vertices.
pub fn dc_membership(p: &Correlation) -> Result<MembershipResult> {
    pool_membership(p, VertexPool::Classical)
}

/// Candidate vertices for a robustness computation.
#[derive(Clone, Debug, PartialEq)]
pub enum RobustnessPool {
    /// Every vertex of the scenario.
    Full,
    /// A caller-supplied vertex list.
    Restricted(Vec<Vertex>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessMethod {
    /// Direct LP over all vertices.
    Direct,
    /// Direct LP over vertices inside the support of the input.
    Support,
    /// Column generation with full pricing scans.
    ColumnGeneration,
    /// Direct LP over a caller-supplied pool.
    Restricted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessTerm {
    pub weight: Num,
    pub vertex: Vertex,
    pub antinomic: bool,
}

/// Optimal antinomic weight with a minimizing decomposition and dual.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessResult {
    pub value: Num,
    pub terms: Vec<RobustnessTerm>,
    /// `y` with `y·p = value` and `y·v ≤ [v antinomic]` for every pool vertex.
    pub dual: Vec<Num>,
    pub method: RobustnessMethod,
}

impl RobustnessResult {
    pub fn antinomic_terms(&self) -> impl Iterator<Item = &RobustnessTerm> {
        self.terms.iter().filter(|t| t.antinomic)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "value": self.value.to_json(),
            "value_f64": self.value.to_f64(),
            "method": self.method,
            "decomposition": self.terms.iter().map(|t| json!({
                "weight": t.weight.to_json(),
                "antinomic": t.antinomic,
                "vertex": t.vertex.to_json(),
            })).collect::<Vec<_>>(),
            "dual": self.dual.iter().map(Num::to_json).collect::<Vec<_>>(),
        })
    }
}

fn direct_robustness(
    p: &Correlation,
    vertices: Vec<Vertex>,
    method: RobustnessMethod,
    classifier: &mut DcClassifier,
) -> Result<RobustnessResult> {
    let mut antinomic = Vec::with_capacity(vertices.len());
    for v in &vertices {
        antinomic.push(!classifier.is_classical(v)?);
    }
    let columns: Vec<Vec<usize>> = vertices.iter().map(|v| vertex_rows(v.scenario(), v.table())).collect();
    let costs: Vec<Num> = antinomic.iter().map(|&b| if b { Num::one() } else { Num::zero() }).collect();
    match decompose(p.entries(), &columns, Some(&costs), true)? {
        HullResult::Feasible { weights, objective, dual } => Ok(RobustnessResult {
            value: objective,
            terms: weights
                .into_iter()
                .map(|(j, w)| RobustnessTerm { weight: w, vertex: vertices[j].clone(), antinomic: antinomic[j] })
                .collect(),
            dual,
            method,
        }),
        HullResult::Infeasible { .. } => Err(Error::InvalidInput("correlation is not in the hull of the vertex pool".into())),
    }
}

/// `min Σ_{v antinomic} q_v` over decompositions `p = Σ q_v v`.
pub fn robustness_of_antinomy(p: &Correlation, pool: &RobustnessPool) -> Result<RobustnessResult> {
    let s = p.scenario();
    let mut classifier = DcClassifier::new();
    if let RobustnessPool::Restricted(vs) = pool {
        if vs.iter().any(|v| v.scenario() != s) {
            return Err(Error::DimensionMismatch("pool vertex scenario differs from input".into()));
        }
        return direct_robustness(p, vs.clone(), RobustnessMethod::Restricted, &mut classifier);
    }
    let count = s.vertex_count().unwrap_or(u128::MAX);
    if count <= DIRECT_VERTEX_LIMIT {
        let vs = (0..count).map(|c| Vertex::from_code(s.clone(), c)).collect::<Result<Vec<_>>>()?;
        return direct_robustness(p, vs, RobustnessMethod::Direct, &mut classifier);
    }
    let eps = if p.entries().iter().all(Num::is_exact) { 0.0 } else { DEFAULT_EPS };
    if let Some(codes) = support_vertex_codes(s, p.entries(), eps, SUPPORT_LIMIT) {
        let vs = codes.into_iter().map(|c| Vertex::from_code(s.clone(), c as u128)).collect::<Result<Vec<_>>>()?;
        return direct_robustness(p, vs, RobustnessMethod::Support, &mut classifier);
    }
    let flags = vertex_flags(s)?;
    let cost = |code: u64| Some(if flags.is_classical(code) { Num::zero() } else { Num::one() });
    match generate_columns(s, p.entries(), &cost, greedy_vertex_codes(s, p.entries()))? {
        GenerationResult::Feasible { weights, objective, dual, .. } => Ok(RobustnessResult {
            value: objective,
            terms: weights
                .into_iter()
                .map(|(c, w)| {
                    Ok(RobustnessTerm { weight: w, vertex: Vertex::from_code(s.clone(), c as u128)?, antinomic: !flags.is_classical(c) })
                })
                .collect::<Result<Vec<_>>>()?,
            dual,
            method: RobustnessMethod::ColumnGeneration,
        }),
        GenerationResult::Infeasible { .. } => Err(Error::InvalidInput("correlation is not in the correlation polytope".into())),
    }
}
