//! Scenarios, correlation tables and deterministic vertices.
//!
//! Tuples are indexed lexicographically with party 1 most significant.
//! Tables are stored row-major: row = outcome tuple `x⃗`, column = setting
//! tuple `a⃗`. A [`Vertex`] keeps only its function table `f[a⃗] = x⃗`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::numeric::{mode_of, Num, NumericMode, DEFAULT_EPS};
use crate::radix::Radix;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scenario {
    settings: Vec<usize>,
    outcomes: Vec<usize>,
    setting_radix: Radix,
    outcome_radix: Radix,
}

#[derive(Serialize, Deserialize)]
struct ScenarioJson {
    settings: Vec<usize>,
    outcomes: Vec<usize>,
}

impl Serialize for Scenario {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScenarioJson { settings: self.settings.clone(), outcomes: self.outcomes.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ScenarioJson::deserialize(d)?;
        Scenario::new(j.settings, j.outcomes).map_err(serde::de::Error::custom)
    }
}

impl Scenario {
    pub fn new(settings: Vec<usize>, outcomes: Vec<usize>) -> Result<Scenario> {
        if settings.is_empty() {
            return Err(Error::InvalidScenario("at least one party required".into()));
        }
        if settings.len() != outcomes.len() {
            return Err(Error::InvalidScenario(format!(
                "{} setting cardinalities but {} outcome cardinalities",
                settings.len(),
                outcomes.len()
            )));
        }
        if settings.iter().chain(&outcomes).any(|&c| c == 0) {
            return Err(Error::InvalidScenario("cardinalities must be at least 1".into()));
        }
        let prod = |v: &[usize]| v.iter().try_fold(1usize, |a, &b| a.checked_mul(b));
        if prod(&settings).and_then(|s| prod(&outcomes).and_then(|o| s.checked_mul(o))).is_none() {
            return Err(Error::InvalidScenario("table size overflows".into()));
        }
        let setting_radix = Radix::new(&settings);
        let outcome_radix = Radix::new(&outcomes);
        Ok(Scenario { settings, outcomes, setting_radix, outcome_radix })
    }

    /// `(N, M, D)`: every party has `m` settings and `d` outcomes.
    pub fn uniform(n: usize, m: usize, d: usize) -> Result<Scenario> {
        Scenario::new(vec![m; n], vec![d; n])
    }

    pub fn parties(&self) -> usize {
        self.settings.len()
    }

    pub fn settings(&self) -> &[usize] {
        &self.settings
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    /// Number of setting tuples (columns).
    pub fn num_settings(&self) -> usize {
        self.setting_radix.size()
    }

    /// Number of outcome tuples (rows).
    pub fn num_outcomes(&self) -> usize {
        self.outcome_radix.size()
    }

    pub fn setting_radix(&self) -> &Radix {
        &self.setting_radix
    }

    pub fn outcome_radix(&self) -> &Radix {
        &self.outcome_radix
    }

    /// `(∏D_k)^(∏M_k)`, or `None` when it does not fit in 128 bits.
    pub fn vertex_count(&self) -> Option<u128> {
        (self.num_outcomes() as u128).checked_pow(u32::try_from(self.num_settings()).ok()?)
    }

    /// Sub-scenario on the given parties, in order.
    pub fn restrict(&self, parties: &[usize]) -> Result<Scenario> {
        Scenario::new(
            parties.iter().map(|&k| self.settings[k]).collect(),
            parties.iter().map(|&k| self.outcomes[k]).collect(),
        )
    }

    /// Short label such as `3,2,2` for uniform scenarios.
    pub fn label(&self) -> String {
        let uniform = self.settings.iter().all(|&m| m == self.settings[0])
            && self.outcomes.iter().all(|&d| d == self.outcomes[0]);
        if uniform {
            format!("{},{},{}", self.parties(), self.settings[0], self.outcomes[0])
        } else {
            format!(
                "m{}-d{}",
                self.settings.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("."),
                self.outcomes.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(".")
            )
        }
    }
}

/// Column-stochastic table `p(x⃗|a⃗)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlation {
    scenario: Scenario,
    entries: Vec<Num>,
    eps: f64,
}

impl Correlation {
    /// Build from rows indexed by outcome tuple; validates stochasticity.
    pub fn new(scenario: Scenario, rows: Vec<Vec<Num>>) -> Result<Correlation> {
        if rows.len() != scenario.num_outcomes() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows, scenario needs {}",
                rows.len(),
                scenario.num_outcomes()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != scenario.num_settings()) {
            return Err(Error::DimensionMismatch(format!(
                "row of length {}, scenario needs {}",
                r.len(),
                scenario.num_settings()
            )));
        }
        Correlation::from_entries(scenario, rows.into_iter().flatten().collect())
    }

    /// Build from row-major entries; validates stochasticity.
    pub fn from_entries(scenario: Scenario, entries: Vec<Num>) -> Result<Correlation> {
        let c = Correlation { scenario, entries, eps: DEFAULT_EPS };
        c.validate()?;
        Ok(c)
    }

    /// Build from `p(x⃗, a⃗)` given as a closure on indices.
    pub fn from_fn(scenario: Scenario, p: impl Fn(usize, usize) -> Num) -> Result<Correlation> {
        let (r, s) = (scenario.num_outcomes(), scenario.num_settings());
        let entries = (0..r).flat_map(|x| (0..s).map(move |a| (x, a))).map(|(x, a)| p(x, a)).collect();
        Correlation::from_entries(scenario, entries)
    }

    pub fn with_eps(mut self, eps: f64) -> Correlation {
        self.eps = eps;
        self
    }

    fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        if self.entries.len() != s.num_outcomes() * s.num_settings() {
            return Err(Error::DimensionMismatch(format!(
                "{} entries, scenario needs {}",
                self.entries.len(),
                s.num_outcomes() * s.num_settings()
            )));
        }
        if let Some(v) = self.entries.iter().find(|v| v.is_negative_eps(self.eps)) {
            return Err(Error::NotStochastic(format!("negative entry {v}")));
        }
        for a in 0..s.num_settings() {
            let sum = self.column_sum(a);
            if !sum.approx_eq(&Num::one(), self.eps) {
                return Err(Error::NotStochastic(format!("column {a} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn entries(&self) -> &[Num] {
        &self.entries
    }

    pub fn get(&self, x: usize, a: usize) -> &Num {
        &self.entries[x * self.scenario.num_settings() + a]
    }

    pub fn column_sum(&self, a: usize) -> Num {
        (0..self.scenario.num_outcomes()).map(|x| self.get(x, a)).sum()
    }

    pub fn mode(&self) -> NumericMode {
        mode_of(&self.entries)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(Num::to_f64).collect()
    }

    pub fn rows(&self) -> Vec<Vec<Num>> {
        self.entries.chunks(self.scenario.num_settings()).map(|c| c.to_vec()).collect()
    }

    /// Entrywise comparison: exact for rational pairs, within `tol` otherwise.
    pub fn approx_eq(&self, other: &Correlation, tol: f64) -> bool {
        self.scenario == other.scenario
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a.approx_eq(b, tol))
    }

    /// The deterministic function, if every column is a point mass.
    pub fn as_vertex(&self) -> Option<Vertex> {
        let s = &self.scenario;
        let mut f = Vec::with_capacity(s.num_settings());
        for a in 0..s.num_settings() {
            let ones: Vec<usize> =
                (0..s.num_outcomes()).filter(|&x| self.get(x, a).approx_eq(&Num::one(), self.eps)).collect();
            if ones.len() != 1 {
                return None;
            }
            f.push(ones[0] as u32);
        }
        Some(Vertex { scenario: s.clone(), f })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "scenario": self.scenario,
            "numeric": self.mode(),
            "table": self.rows().iter().map(|r| r.iter().map(Num::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Correlation> {
        let scenario: Scenario = serde_json::from_value(v.get("scenario").cloned().unwrap_or(Value::Null))?;
        let mode = v.get("numeric").and_then(Value::as_str).unwrap_or("rational");
        let rows = parse_table(v.get("table"))?;
        let rows = if mode == "double" {
            rows.into_iter().map(|r| r.into_iter().map(|n| n.to_approx()).collect()).collect()
        } else {
            rows
        };
        Correlation::new(scenario, rows)
    }
}

pub(crate) fn parse_table(v: Option<&Value>) -> Result<Vec<Vec<Num>>> {
    let rows = v.and_then(Value::as_array).ok_or_else(|| Error::Parse("missing \"table\" array".into()))?;
    rows.iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Error::Parse("table rows must be arrays".into()))?
                .iter()
                .map(Num::from_json)
                .collect()
        })
        .collect()
}

/// Deterministic vertex stored as its function table.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Vertex {
    scenario: Scenario,
    f: Vec<u32>,
}

impl Vertex {
    pub fn new(scenario: Scenario, f: Vec<u32>) -> Result<Vertex> {
        if f.len() != scenario.num_settings() {
            return Err(Error::DimensionMismatch(format!(
                "function table of length {}, scenario needs {}",
                f.len(),
                scenario.num_settings()
            )));
        }
        if let Some(x) = f.iter().find(|&&x| x as usize >= scenario.num_outcomes()) {
            return Err(Error::InvalidInput(format!("outcome index {x} out of range")));
        }
        Ok(Vertex { scenario, f })
    }

    /// Build from per-setting-tuple outcome tuples.
    pub fn from_fn(scenario: Scenario, f: impl Fn(&[usize]) -> Vec<usize>) -> Result<Vertex> {
        let sr = scenario.setting_radix().clone();
        let or = scenario.outcome_radix().clone();
        let mut table = Vec::with_capacity(sr.size());
        for a in 0..sr.size() {
            let x = f(&sr.tuple(a));
            if x.len() != or.len() || x.iter().zip(or.dims()).any(|(v, d)| v >= d) {
                return Err(Error::InvalidInput(format!("bad outcome tuple {x:?}")));
            }
            table.push(or.index(&x) as u32);
        }
        Ok(Vertex { scenario, f: table })
    }

    /// Vertex with code `Σ_a f[a]·R^a`, `R = ∏D_k`, setting index `a` least significant first.
    pub fn from_code(scenario: Scenario, code: u128) -> Result<Vertex> {
        let count = scenario.vertex_count().ok_or_else(|| Error::InvalidInput("vertex count overflows".into()))?;
        if code >= count {
            return Err(Error::InvalidInput(format!("vertex code {code} out of range")));
        }
        let r = scenario.num_outcomes() as u128;
        let mut c = code;
        let f = (0..scenario.num_settings())
            .map(|_| {
                let x = (c % r) as u32;
                c /= r;
                x
            })
            .collect();
        Ok(Vertex { scenario, f })
    }

    pub fn code(&self) -> u128 {
        let r = self.scenario.num_outcomes() as u128;
        self.f.iter().rev().fold(0u128, |acc, &x| acc * r + x as u128)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn table(&self) -> &[u32] {
        &self.f
    }

    /// Outcome tuple index at setting tuple `a`.
    pub fn at(&self, a: usize) -> usize {
        self.f[a] as usize
    }

    /// `f_k(a⃗)`.
    pub fn component(&self, k: usize, a: usize) -> usize {
        self.scenario.outcome_radix().digit(self.f[a] as usize, k)
    }

    pub fn to_correlation(&self) -> Correlation {
        vertex_to_correlation(self)
    }

    pub fn to_json(&self) -> Value {
        json!({ "scenario": self.scenario, "f": self.f })
    }

    pub fn from_json(v: &Value) -> Result<Vertex> {
        let scenario: Scenario = serde_json::from_value(v.get("scenario").cloned().unwrap_or(Value::Null))?;
        let f: Vec<u32> = serde_json::from_value(v.get("f").cloned().unwrap_or(Value::Null))?;
        Vertex::new(scenario, f)
    }
}

/// Boolean table with a one at `(f(a⃗), a⃗)`.
pub fn vertex_to_correlation(v: &Vertex) -> Correlation {
    let s = v.scenario();
    let cols = s.num_settings();
    let mut entries = vec![Num::zero(); s.num_outcomes() * cols];
    for (a, &x) in v.f.iter().enumerate() {
        entries[x as usize * cols + a] = Num::one();
    }
    Correlation { scenario: s.clone(), entries, eps: DEFAULT_EPS }
}

/// Edges `k → l` where changing `a_k` alone changes `f_l`.
pub fn signalling_graph(v: &Vertex) -> Digraph {
    signalling_edges(v.scenario(), v.table())
}

/// [`signalling_graph`] on a raw function table.
pub fn signalling_edges(s: &Scenario, f: &[u32]) -> Digraph {
    let n = s.parties();
    let sr = s.setting_radix();
    let or = s.outcome_radix();
    let mut g = Digraph::new(n).expect("party count within digraph limits");
    for k in 0..n {
        let mut found = 0usize;
        'scan: for a in 0..sr.size() {
            let ak = sr.digit(a, k);
            for w in ak + 1..sr.dim(k) {
                let b = sr.replace(a, k, w);
                let (x, y) = (f[a] as usize, f[b] as usize);
                if x == y {
                    continue;
                }
                for l in 0..n {
                    if l != k && !g.has_edge(k, l) && or.digit(x, l) != or.digit(y, l) {
                        g.add_edge(k, l);
                        found += 1;
                        if found == n - 1 {
                            break 'scan;
                        }
                    }
                }
            }
        }
    }
    g
}

/// Convex combination of correlations on one scenario.
pub fn mix(items: &[(Num, &Correlation)]) -> Result<Correlation> {
    let Some((_, first)) = items.first() else {
        return Err(Error::WeightSum("empty mixture".into()));
    };
    let s = first.scenario().clone();
    let eps = items.iter().map(|(_, c)| c.eps).fold(DEFAULT_EPS, f64::max);
    if let Some((w, _)) = items.iter().find(|(w, _)| w.is_negative_eps(eps)) {
        return Err(Error::WeightSum(format!("negative weight {w}")));
    }
    let total: Num = items.iter().map(|(w, _)| w).sum();
    if !total.approx_eq(&Num::one(), eps) {
        return Err(Error::WeightSum(format!("weights sum to {total}")));
    }
    if items.iter().any(|(_, c)| c.scenario() != &s) {
        return Err(Error::DimensionMismatch("mixture of different scenarios".into()));
    }
    let mut entries = vec![Num::zero(); first.entries.len()];
    for (w, c) in items {
        for (e, v) in entries.iter_mut().zip(&c.entries) {
            if !v.is_zero_eps(0.0) {
                *e = &*e + &(w * v);
            }
        }
    }
    Correlation::from_entries(s, entries).map(|c| c.with_eps(eps))
}

/// `p(x_k|a⃗)` as rows `x_k`, columns `a⃗`.
pub fn marginal(p: &Correlation, party: usize) -> Result<Vec<Vec<Num>>> {
    let s = p.scenario();
    if party >= s.parties() {
        return Err(Error::InvalidInput(format!("party {party} out of range")));
    }
    let or = s.outcome_radix();
    let mut out = vec![vec![Num::zero(); s.num_settings()]; s.outcomes()[party]];
    for x in 0..s.num_outcomes() {
        let xk = or.digit(x, party);
        for a in 0..s.num_settings() {
            let v = p.get(x, a);
            if !v.is_zero_eps(0.0) {
                out[xk][a] = &out[xk][a] + v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bip() -> Scenario {
        Scenario::uniform(2, 2, 2).unwrap()
    }

    #[test]
    fn gyni_vertex_matrix() {
        let v = Vertex::from_fn(bip(), |a| vec![a[1], a[0]]).unwrap();
        let p = v.to_correlation();
        // x = (a2, a1): column a=01 has its one at row x=10.
        let expect = [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]];
        for (x, row) in expect.iter().enumerate() {
            for (a, &e) in row.iter().enumerate() {
                assert_eq!(p.get(x, a), &Num::int(e));
            }
        }
    }

    #[test]
    fn constant_vertex_first_row() {
        let v = Vertex::new(bip(), vec![0; 4]).unwrap();
        let p = v.to_correlation();
        assert!((0..4).all(|a| p.get(0, a) == &Num::one()));
    }

    #[test]
    fn code_round_trip() {
        let s = Scenario::uniform(3, 2, 2).unwrap();
        for code in [0u128, 1, 12345, (1 << 24) - 1] {
            assert_eq!(Vertex::from_code(s.clone(), code).unwrap().code(), code);
        }
        assert!(Vertex::from_code(s, 1 << 24).is_err());
    }

    #[test]
    fn signalling_examples() {
        let one_way = Vertex::from_fn(bip(), |a| vec![a[0], a[0] ^ a[1]]).unwrap();
        assert_eq!(signalling_graph(&one_way).edges(), vec![(0, 1)]);
        let two_way = Vertex::from_fn(bip(), |a| vec![a[1], a[0]]).unwrap();
        assert_eq!(signalling_graph(&two_way).edges(), vec![(0, 1), (1, 0)]);
        let bell = Vertex::from_fn(bip(), |a| vec![1 - a[0], a[1]]).unwrap();
        assert!(signalling_graph(&bell).edges().is_empty());
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Correlation::new(bip(), vec![vec![Num::one(); 4]; 4]).is_err());
        assert!(Scenario::new(vec![2], vec![0]).is_err());
        assert!(Vertex::new(bip(), vec![4, 0, 0, 0]).is_err());
    }

    #[test]
    fn mixture_weight_checks() {
        let p = Vertex::new(bip(), vec![0; 4]).unwrap().to_correlation();
        assert!(mix(&[(Num::ratio(1, 2), &p)]).is_err());
        assert_eq!(mix(&[(Num::one(), &p)]).unwrap(), p);
    }
}
