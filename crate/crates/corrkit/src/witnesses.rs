//! Witness functionals `Σ_a π(a) Σ_x c(x,a) p(x|a)` with 0/1 winning tables,
//! the GYNI, LGYNI, AF/BW and GYNIN games, maximization over vertex and
//! process-function pools, and maximal violators.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::antinomy::DcClassifier;
use crate::causality::{chunk_ranges, CausalChecker, DEFAULT_VERTEX_CAP};
use crate::error::{Error, Result};
use crate::hull::decode_code;
use crate::numeric::Num;
use crate::process::QuasiProcessFunction;
use crate::scenario::{Correlation, Scenario, Vertex};

/// Scores within this distance are ties during floating-point scans.
const SCORE_TOL: f64 = 1e-12;

/// Maxima of a witness over the causal, classical and full vertex sets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessBounds {
    pub causal: Num,
    pub classical: Num,
    pub algebraic: Num,
}

#[derive(Clone, Debug)]
pub struct Witness {
    name: String,
    scenario: Scenario,
    /// `c(x,a)` at `x·cols + a`.
    table: Vec<bool>,
    /// `π(a)`.
    weights: Vec<Num>,
    bounds: OnceLock<WitnessBounds>,
}

impl PartialEq for Witness {
    fn eq(&self, o: &Witness) -> bool {
        self.scenario == o.scenario && self.table == o.table && self.weights == o.weights
    }
}

impl Witness {
    pub fn new(name: impl Into<String>, scenario: Scenario, table: Vec<bool>, weights: Vec<Num>) -> Result<Witness> {
        let cols = scenario.num_settings();
        if table.len() != cols * scenario.num_outcomes() || weights.len() != cols {
            return Err(Error::DimensionMismatch("witness table or weights size".into()));
        }
        if weights.iter().any(|w| w.is_negative_eps(0.0)) {
            return Err(Error::InvalidInput("negative setting weight".into()));
        }
        Ok(Witness { name: name.into(), scenario, table, weights, bounds: OnceLock::new() })
    }

    /// Uniform setting weights and winning predicate `win(x⃗, a⃗)` on tuples.
    pub fn from_predicate(name: impl Into<String>, scenario: Scenario, win: impl Fn(&[usize], &[usize]) -> bool) -> Witness {
        let cols = scenario.num_settings();
        let (sr, or) = (scenario.setting_radix(), scenario.outcome_radix());
        let table = (0..scenario.num_outcomes())
            .flat_map(|x| (0..cols).map(move |a| (x, a)))
            .map(|(x, a)| win(&or.tuple(x), &sr.tuple(a)))
            .collect();
        let weights = vec![Num::ratio(1, cols as i64); cols];
        Witness::new(name, scenario, table, weights).expect("consistent sizes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn weights(&self) -> &[Num] {
        &self.weights
    }

    pub fn coefficient(&self, x: usize, a: usize) -> bool {
        self.table[x * self.scenario.num_settings() + a]
    }

    pub fn evaluate(&self, p: &Correlation) -> Result<Num> {
        if p.scenario() != &self.scenario {
            return Err(Error::DimensionMismatch("witness and correlation scenarios differ".into()));
        }
        let cols = self.scenario.num_settings();
        Ok((0..cols)
            .map(|a| {
                let s: Num = (0..self.scenario.num_outcomes()).filter(|&x| self.coefficient(x, a)).map(|x| p.get(x, a)).sum();
                &self.weights[a] * &s
            })
            .sum())
    }

    pub fn vertex_value(&self, v: &Vertex) -> Result<Num> {
        if v.scenario() != &self.scenario {
            return Err(Error::DimensionMismatch("witness and vertex scenarios differ".into()));
        }
        Ok(self.table_value(v.table()))
    }

    fn table_value(&self, f: &[u32]) -> Num {
        f.iter().enumerate().filter(|(a, &x)| self.coefficient(x as usize, *a)).map(|(a, _)| &self.weights[a]).sum()
    }

    /// Number of settings won by a deterministic table.
    pub fn wins(&self, f: &[u32]) -> usize {
        f.iter().enumerate().filter(|(a, &x)| self.coefficient(x as usize, *a)).count()
    }

    /// Cached maxima over causal, classical and all vertices.
    pub fn bounds(&self) -> Result<&WitnessBounds> {
        if let Some(b) = self.bounds.get() {
            return Ok(b);
        }
        let b = WitnessBounds {
            causal: max_over(self, &MaxPool::Causal)?.0,
            classical: max_over(self, &MaxPool::Classical)?.0,
            algebraic: max_over(self, &MaxPool::All)?.0,
        };
        Ok(self.bounds.get_or_init(|| b))
    }

    pub fn to_json(&self) -> Value {
        let cols = self.scenario.num_settings();
        let mut v = json!({
            "name": self.name,
            "scenario": self.scenario,
            "table": self.table.chunks(cols).map(|r| r.iter().map(|&b| u8::from(b)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "weights": self.weights.iter().map(Num::to_json).collect::<Vec<_>>(),
        });
        if let Some(b) = self.bounds.get() {
            v["bounds"] = serde_json::to_value(b).expect("serializable bounds");
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Witness> {
        let scenario: Scenario = serde_json::from_value(v.get("scenario").cloned().unwrap_or(Value::Null))?;
        let rows: Vec<Vec<u8>> = serde_json::from_value(v.get("table").cloned().unwrap_or(Value::Null))?;
        if rows.iter().flatten().any(|&c| c > 1) {
            return Err(Error::InvalidInput("witness coefficients must be 0 or 1".into()));
        }
        let table: Vec<bool> = rows.into_iter().flatten().map(|c| c == 1).collect();
        let cols = scenario.num_settings();
        let weights = match v.get("weights") {
            Some(Value::Array(ws)) => ws.iter().map(Num::from_json).collect::<Result<Vec<_>>>()?,
            _ => vec![Num::ratio(1, cols as i64); cols],
        };
        let name = v.get("name").and_then(Value::as_str).unwrap_or("custom");
        Witness::new(name, scenario, table, weights)
    }
}

/// GYNI type: win iff `x₁ = a₂ ⊕ α₁a₁ ⊕ α₀` and `x₂ = a₁ ⊕ β₁a₂ ⊕ β₀`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GyniParams {
    pub alpha0: u8,
    pub alpha1: u8,
    pub beta0: u8,
    pub beta1: u8,
}

/// LGYNI type: win iff `(a₁⊕α'₁)(x₁⊕α'₀⊕a₂) = 0` and `(a₂⊕β'₁)(x₂⊕β'₀⊕a₁) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LgyniParams {
    pub alpha0: u8,
    pub alpha1: u8,
    pub beta0: u8,
    pub beta1: u8,
}

fn bits4(i: usize) -> [u8; 4] {
    [(i >> 3 & 1) as u8, (i >> 2 & 1) as u8, (i >> 1 & 1) as u8, (i & 1) as u8]
}

macro_rules! four_bits {
    ($t:ident) => {
        impl $t {
            pub fn new(alpha0: u8, alpha1: u8, beta0: u8, beta1: u8) -> Result<$t> {
                if [alpha0, alpha1, beta0, beta1].iter().any(|&b| b > 1) {
                    return Err(Error::InvalidInput("parameters must be bits".into()));
                }
                Ok($t { alpha0, alpha1, beta0, beta1 })
            }

            pub fn canonical() -> $t {
                $t { alpha0: 0, alpha1: 0, beta0: 0, beta1: 0 }
            }

            /// All 16 types in lexicographic order of `(α₀, α₁, β₀, β₁)`.
            pub fn all() -> Vec<$t> {
                (0..16).map(|i| {
                    let [a0, a1, b0, b1] = bits4(i);
                    $t { alpha0: a0, alpha1: a1, beta0: b0, beta1: b1 }
                }).collect()
            }

            pub fn bits(&self) -> [u8; 4] {
                [self.alpha0, self.alpha1, self.beta0, self.beta1]
            }

            pub fn parse(s: &str) -> Result<$t> {
                let b: Vec<u8> = s
                    .split(',')
                    .map(|t| t.trim().parse::<u8>().map_err(|e| Error::Parse(format!("parameter {t:?}: {e}"))))
                    .collect::<Result<_>>()?;
                if b.len() != 4 {
                    return Err(Error::Parse("expected four comma-separated bits".into()));
                }
                $t::new(b[0], b[1], b[2], b[3])
            }
        }
    };
}

four_bits!(GyniParams);
four_bits!(LgyniParams);

fn bipartite() -> Scenario {
    Scenario::uniform(2, 2, 2).expect("valid scenario")
}

fn tripartite() -> Scenario {
    Scenario::uniform(3, 2, 2).expect("valid scenario")
}

pub fn gyni(g: GyniParams) -> Witness {
    let (a0, a1, b0, b1) = (g.alpha0 as usize, g.alpha1 as usize, g.beta0 as usize, g.beta1 as usize);
    Witness::from_predicate(format!("gyni{:?}", g.bits()), bipartite(), move |x, a| {
        x[0] == a[1] ^ (a1 & a[0]) ^ a0 && x[1] == a[0] ^ (b1 & a[1]) ^ b0
    })
}

pub fn lgyni(l: LgyniParams) -> Witness {
    let (a0, a1, b0, b1) = (l.alpha0 as usize, l.alpha1 as usize, l.beta0 as usize, l.beta1 as usize);
    Witness::from_predicate(format!("lgyni{:?}", l.bits()), bipartite(), move |x, a| {
        (a[0] ^ a1) & (x[0] ^ a0 ^ a[1]) == 0 && (a[1] ^ b1) & (x[1] ^ b0 ^ a[0]) == 0
    })
}

/// The unique vertex winning every setting of a GYNI type.
pub fn gyni_vertex(g: GyniParams) -> Vertex {
    let (a0, a1, b0, b1) = (g.alpha0 as usize, g.alpha1 as usize, g.beta0 as usize, g.beta1 as usize);
    Vertex::from_fn(bipartite(), |a| vec![a[1] ^ (a1 & a[0]) ^ a0, a[0] ^ (b1 & a[1]) ^ b0]).expect("binary")
}

fn majority(a: &[usize]) -> usize {
    usize::from(a.iter().sum::<usize>() >= 2)
}

/// Majority 0: `x⃗ = (a₃, a₁, a₂)`; majority 1: `x⃗ = (ā₂, ā₃, ā₁)`.
pub fn afbw_inequality() -> Witness {
    Witness::from_predicate("afbw", tripartite(), |x, a| {
        if majority(a) == 0 {
            x == [a[2], a[0], a[1]]
        } else {
            x == [1 - a[1], 1 - a[2], 1 - a[0]]
        }
    })
}

/// `x⃗ = (a₃, a₁, a₂)` or `x⃗ = (ā₃, ā₁, ā₂)`.
pub fn gynin() -> Witness {
    Witness::from_predicate("gynin", tripartite(), |x, a| {
        x == [a[2], a[0], a[1]] || x == [1 - a[2], 1 - a[0], 1 - a[1]]
    })
}

/// Look up a built-in witness by name: `gyni`, `lgyni`, `afbw`, `gynin`,
/// or `gyni:a0,a1,b0,b1` / `lgyni:a0,a1,b0,b1`.
pub fn named(name: &str) -> Result<Witness> {
    match name.split_once(':') {
        Some(("gyni", p)) => Ok(gyni(GyniParams::parse(p)?)),
        Some(("lgyni", p)) => Ok(lgyni(LgyniParams::parse(p)?)),
        _ => match name {
            "gyni" => Ok(gyni(GyniParams::canonical())),
            "lgyni" => Ok(lgyni(LgyniParams::canonical())),
            "afbw" => Ok(afbw_inequality()),
            "gynin" => Ok(gynin()),
            _ => Err(Error::InvalidInput(format!("unknown witness {name:?}"))),
        },
    }
}

/// Candidate set for [`max_over`].
#[derive(Clone, Debug, PartialEq)]
pub enum MaxPool {
    All,
    Causal,
    Classical,
    Vertices(Vec<Vertex>),
    /// Evaluated under pass-through interventions.
    ProcessFunctions(Vec<QuasiProcessFunction>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Argmax {
    Vertex(Vertex),
    ProcessFunction(QuasiProcessFunction),
}

impl Argmax {
    pub fn to_json(&self) -> Value {
        match self {
            Argmax::Vertex(v) => json!({"vertex": v.to_json()}),
            Argmax::ProcessFunction(f) => json!({"process_function": f.to_json()}),
        }
    }
}

fn better(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 > a.0 + SCORE_TOL || ((b.0 - a.0).abs() <= SCORE_TOL && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn scan_pool(w: &Witness, causal: bool) -> Result<u64> {
    let s = &w.scenario;
    let count = s.vertex_count().unwrap_or(u128::MAX);
    if count > DEFAULT_VERTEX_CAP {
        return Err(Error::CapExceeded { what: "vertex count", count, cap: DEFAULT_VERTEX_CAP });
    }
    let cols = s.num_settings();
    let radix = s.num_outcomes() as u64;
    let entry: Vec<f64> =
        (0..w.table.len()).map(|e| if w.table[e] { w.weights[e % cols].to_f64() } else { 0.0 }).collect();
    let parts: Vec<Result<Option<(f64, u64)>>> = chunk_ranges(count as u64)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut cc = CausalChecker::new();
            let mut dc = DcClassifier::new();
            let mut f = vec![0u32; cols];
            let mut best: Option<(f64, u64)> = None;
            for code in lo..hi {
                decode_code(code, radix, &mut f);
                let score: f64 = f.iter().enumerate().map(|(a, &x)| entry[x as usize * cols + a]).sum();
                if best.is_some_and(|(b, _)| score <= b + SCORE_TOL) {
                    continue;
                }
                let member = if causal { cc.is_causal_table(s, &f) } else { dc.is_classical_table(s, &f)? };
                if member {
                    best = Some((score, code));
                }
            }
            Ok(best)
        })
        .collect();
    let mut best: Option<(f64, u64)> = None;
    for p in parts {
        if let Some(c) = p? {
            best = Some(best.map_or(c, |b| better(b, c)));
        }
    }
    best.map(|b| b.1).ok_or_else(|| Error::InvalidInput("empty pool".into()))
}

/// Exact maximum of the witness over a pool with the lowest-code maximizer.
pub fn max_over(w: &Witness, pool: &MaxPool) -> Result<(Num, Argmax)> {
    let s = &w.scenario;
    let cols = s.num_settings();
    let pick = |codes: Vec<(u64, Argmax, Vec<u32>)>| -> Result<(Num, Argmax)> {
        let mut best: Option<(Num, u64, Argmax)> = None;
        for (code, arg, f) in codes {
            let v = w.table_value(&f);
            let replace = match &best {
                None => true,
                Some((bv, bc, _)) => v.cmp_eps(bv, 0.0).is_gt() || (v == *bv && code < *bc),
            };
            if replace {
                best = Some((v, code, arg));
            }
        }
        best.map(|(v, _, a)| (v, a)).ok_or_else(|| Error::InvalidInput("empty pool".into()))
    };
    match pool {
        MaxPool::All => {
            let f: Vec<u32> = (0..cols)
                .map(|a| {
                    (0..s.num_outcomes()).find(|&x| w.coefficient(x, a)).unwrap_or(0) as u32
                })
                .collect();
            let v = Vertex::new(s.clone(), f)?;
            Ok((w.vertex_value(&v)?, Argmax::Vertex(v)))
        }
        MaxPool::Causal | MaxPool::Classical => {
            let code = scan_pool(w, matches!(pool, MaxPool::Causal))?;
            let v = Vertex::from_code(s.clone(), code as u128)?;
            Ok((w.vertex_value(&v)?, Argmax::Vertex(v)))
        }
        MaxPool::Vertices(vs) => {
            if vs.iter().any(|v| v.scenario() != s) {
                return Err(Error::DimensionMismatch("pool vertex scenario differs from witness".into()));
            }
            pick(vs.iter().map(|v| (v.code() as u64, Argmax::Vertex(v.clone()), v.table().to_vec())).collect())
        }
        MaxPool::ProcessFunctions(fs) => {
            if fs.iter().any(|f| &f.dims().as_scenario() != s) {
                return Err(Error::DimensionMismatch("process function dims do not match the witness scenario".into()));
            }
            pick(fs.iter().map(|f| (f.code(), Argmax::ProcessFunction(f.clone()), f.omega().to_vec())).collect())
        }
    }
}

/// All vertices with value `Σ_a π(a)`, ordered by code.
pub fn maximal_violators(w: &Witness) -> Result<Vec<Vertex>> {
    let s = &w.scenario;
    let cols = s.num_settings();
    let choices: Vec<Vec<u64>> = (0..cols)
        .map(|a| {
            let wins: Vec<u64> = (0..s.num_outcomes()).filter(|&x| w.coefficient(x, a)).map(|x| x as u64).collect();
            if w.weights[a].is_zero_eps(0.0) {
                (0..s.num_outcomes() as u64).collect()
            } else {
                wins
            }
        })
        .collect();
    let total = choices.iter().try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128)).unwrap_or(u128::MAX);
    if total > DEFAULT_VERTEX_CAP {
        return Err(Error::CapExceeded { what: "maximal violators", count: total, cap: DEFAULT_VERTEX_CAP });
    }
    let radix = s.num_outcomes() as u128;
    let mut codes: Vec<u128> = vec![0];
    for (a, c) in choices.iter().enumerate() {
        let place = radix.pow(a as u32);
        codes = codes.iter().flat_map(|&code| c.iter().map(move |&x| code + x as u128 * place)).collect();
    }
    codes.sort_unstable();
    codes.into_iter().map(|c| Vertex::from_code(s.clone(), c)).collect()
}

/// Vertices whose value strictly exceeds `threshold`, ordered by code.
pub fn vertices_exceeding(w: &Witness, threshold: &Num) -> Result<Vec<Vertex>> {
    let s = &w.scenario;
    let count = s.vertex_count().unwrap_or(u128::MAX);
    if count > DEFAULT_VERTEX_CAP {
        return Err(Error::CapExceeded { what: "vertex count", count, cap: DEFAULT_VERTEX_CAP });
    }
    let cols = s.num_settings();
    let radix = s.num_outcomes() as u64;
    let entry: Vec<f64> =
        (0..w.table.len()).map(|e| if w.table[e] { w.weights[e % cols].to_f64() } else { 0.0 }).collect();
    let t = threshold.to_f64();
    let codes: Vec<u64> = chunk_ranges(count as u64)
        .into_par_iter()
        .flat_map_iter(|(lo, hi)| {
            let mut f = vec![0u32; cols];
            let mut out = Vec::new();
            for code in lo..hi {
                decode_code(code, radix, &mut f);
                let score: f64 = f.iter().enumerate().map(|(a, &x)| entry[x as usize * cols + a]).sum();
                if score > t - 1e-9 && w.table_value(&f).cmp_eps(threshold, 0.0).is_gt() {
                    out.push(code);
                }
            }
            out
        })
        .collect();
    codes.into_iter().map(|c| Vertex::from_code(s.clone(), c as u128)).collect()
}

/// LGYNI types maximally violated by the GYNI vertex of type `g`, found by
/// evaluating that vertex against all 16 LGYNI witnesses.
pub fn gyni_lgyni_correspondence(g: GyniParams) -> Vec<LgyniParams> {
    let v = gyni_vertex(g);
    LgyniParams::all()
        .into_iter()
        .filter(|&l| lgyni(l).vertex_value(&v).expect("bipartite") == Num::one())
        .collect()
}
