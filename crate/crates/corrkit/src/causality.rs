//! Causality of deterministic vertices, causal-polytope membership and
//! the signalling-class census of a scenario.
//!
//! A vertex is causal when some party's outcome depends only on its own
//! setting and, for each value of that setting, the function induced on
//! the remaining parties is again causal. One party is always causal.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::digraph::{signalling_class, ClassTable, SignallingClass};
use crate::error::{Error, Result};
use crate::hull::decode_code;
use crate::numeric::Num;
use crate::pools::{pool_membership, MembershipResult, VertexPool};
use crate::radix::Radix;
use crate::scenario::{signalling_edges, Correlation, Scenario, Vertex};

/// Default cap on vertex counts for exhaustive sweeps.
pub const DEFAULT_VERTEX_CAP: u128 = 1 << 25;

/// Recursive causality check with memoized sub-functions.
#[derive(Default)]
pub struct CausalChecker {
    memo: HashMap<u128, bool>,
}

impl CausalChecker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_causal(&mut self, v: &Vertex) -> bool {
        self.is_causal_table(v.scenario(), v.table())
    }

    pub fn is_causal_table(&mut self, s: &Scenario, f: &[u32]) -> bool {
        self.check(s.settings(), s.outcomes(), f, false)
    }

    fn check(&mut self, ms: &[usize], ds: &[usize], t: &[u32], memoize: bool) -> bool {
        let n = ms.len();
        if n == 1 {
            return true;
        }
        let key = if memoize { memo_key(ms, ds, t) } else { None };
        if let Some(k) = key {
            if let Some(&v) = self.memo.get(&k) {
                return v;
            }
        }
        let sr = Radix::new(ms);
        let or = Radix::new(ds);
        let mut result = false;
        'party: for k in 0..n {
            // x_k must be a function of a_k alone.
            for a in 0..t.len() {
                let base = sr.digit(a, k) * sr.stride(k);
                if or.digit(t[a] as usize, k) != or.digit(t[base] as usize, k) {
                    continue 'party;
                }
            }
            let sub_s = sr.without(k);
            let ms2: Vec<usize> = sub_s.dims().to_vec();
            let ds2: Vec<usize> = or.without(k).dims().to_vec();
            let mut sub = vec![0u32; sub_s.size()];
            for v in 0..ms[k] {
                for (r, slot) in sub.iter_mut().enumerate() {
                    let a = sr.insert_digit(r, k, v);
                    *slot = or.drop_digit(t[a] as usize, k) as u32;
                }
                if !self.check(&ms2, &ds2, &sub, true) {
                    continue 'party;
                }
            }
            result = true;
            break;
        }
        if let Some(k) = key {
            self.memo.insert(k, result);
        }
        result
    }
}

/// Pack `(ms, ds, t)` into 128 bits when it fits.
fn memo_key(ms: &[usize], ds: &[usize], t: &[u32]) -> Option<u128> {
    if ms.iter().chain(ds).any(|&c| c > 15) || ms.len() > 7 {
        return None;
    }
    let rows: usize = ds.iter().product();
    let bits = usize::BITS - (rows.max(2) - 1).leading_zeros();
    let total = 3 + 8 * ms.len() as u32 + bits * t.len() as u32;
    if total > 128 {
        return None;
    }
    let mut key: u128 = ms.len() as u128;
    for (&m, &d) in ms.iter().zip(ds) {
        key = key << 8 | (m as u128) << 4 | d as u128;
    }
    for &x in t {
        key = key << bits | x as u128;
    }
    Some(key)
}

pub fn is_causal_vertex(v: &Vertex) -> bool {
    CausalChecker::new().is_causal(v)
}

fn checked_count(s: &Scenario, cap: u128) -> Result<u64> {
    let count = s.vertex_count().unwrap_or(u128::MAX);
    if count > cap || count > u64::MAX as u128 {
        return Err(Error::CapExceeded { what: "vertex count", count, cap });
    }
    Ok(count as u64)
}

/// All causal vertices, ordered by code.
pub fn enumerate_causal_vertices(s: &Scenario, cap: u128) -> Result<Vec<Vertex>> {
    let count = checked_count(s, cap)?;
    let radix = s.num_outcomes() as u64;
    let cols = s.num_settings();
    let codes: Vec<u64> = chunk_ranges(count)
        .into_par_iter()
        .flat_map_iter(|(lo, hi)| {
            let mut checker = CausalChecker::new();
            let mut f = vec![0u32; cols];
            let mut out = Vec::new();
            for code in lo..hi {
                decode_code(code, radix, &mut f);
                if checker.is_causal_table(s, &f) {
                    out.push(code);
                }
            }
            out
        })
        .collect();
    codes.into_iter().map(|c| Vertex::from_code(s.clone(), c as u128)).collect()
}

pub(crate) fn chunk_ranges(count: u64) -> Vec<(u64, u64)> {
    const CHUNK: u64 = 1 << 16;
    (0..count.div_ceil(CHUNK)).map(|i| (i * CHUNK, ((i + 1) * CHUNK).min(count))).collect()
}

/// Convex decomposition over causal vertices, or a separating hyperplane.
#[derive(Clone, Debug, PartialEq)]
pub enum CausalCertificate {
    Decomposition(Vec<(Num, Vertex)>),
    /// `y` over table entries with `y·p > 0` and `y·v ≤ 0` for every causal vertex.
    Separation(Vec<Num>),
}

impl CausalCertificate {
    pub fn is_member(&self) -> bool {
        matches!(self, CausalCertificate::Decomposition(_))
    }
}

pub fn causal_membership(p: &Correlation) -> Result<CausalCertificate> {
    Ok(match pool_membership(p, VertexPool::Causal)? {
        MembershipResult::Member(d) => CausalCertificate::Decomposition(d),
        MembershipResult::NonMember(y) => CausalCertificate::Separation(y),
    })
}

/// Vertex counts of one signalling class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct ClassCounts {
    pub total: u64,
    pub causal: u64,
    pub noncausal: u64,
}

impl ClassCounts {
    fn merge(&mut self, o: &ClassCounts) {
        self.total += o.total;
        self.causal += o.causal;
        self.noncausal += o.noncausal;
    }
}

/// Per-class vertex counts of a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Census {
    pub scenario: Scenario,
    pub classes: BTreeMap<SignallingClass, ClassCounts>,
}

impl Census {
    pub fn total(&self) -> u64 {
        self.classes.values().map(|c| c.total).sum()
    }

    pub fn causal(&self) -> u64 {
        self.classes.values().map(|c| c.causal).sum()
    }

    pub fn get(&self, class: &SignallingClass) -> ClassCounts {
        self.classes.get(class).copied().unwrap_or_default()
    }

    pub fn to_json(&self) -> Value {
        let classes: serde_json::Map<String, Value> = self
            .classes
            .iter()
            .map(|(c, n)| (c.key(), json!({"total": n.total, "causal": n.causal, "noncausal": n.noncausal})))
            .collect();
        json!({
            "scenario": self.scenario,
            "total": self.total(),
            "causal": self.causal(),
            "classes": classes,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,total,causal,noncausal\n");
        for (c, n) in &self.classes {
            out.push_str(&format!("\"{}\",{},{},{}\n", c.key(), n.total, n.causal, n.noncausal));
        }
        out
    }
}

/// Assign every vertex to its signalling class with a causal/noncausal split.
pub fn classify_scenario(s: &Scenario, cap: u128) -> Result<Census> {
    let count = checked_count(s, cap)?;
    let n = s.parties();
    let table = if n <= 4 { Some(ClassTable::new(n)?) } else { None };
    let radix = s.num_outcomes() as u64;
    let cols = s.num_settings();
    let partials: Vec<Result<HashMap<SignallingClass, ClassCounts>>> = chunk_ranges(count)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut checker = CausalChecker::new();
            let mut f = vec![0u32; cols];
            let mut local: HashMap<SignallingClass, ClassCounts> = HashMap::new();
            let mut class_memo: HashMap<u64, SignallingClass> = HashMap::new();
            for code in lo..hi {
                decode_code(code, radix, &mut f);
                let g = signalling_edges(s, &f);
                let class = match &table {
                    Some(t) => t.class_of(&g),
                    None => {
                        let key = g.adjacency_code();
                        match class_memo.get(&key) {
                            Some(c) => *c,
                            None => {
                                let c = signalling_class(&g)?;
                                class_memo.insert(key, c);
                                c
                            }
                        }
                    }
                };
                let entry = local.entry(class).or_default();
                entry.total += 1;
                if checker.is_causal_table(s, &f) {
                    entry.causal += 1;
                } else {
                    entry.noncausal += 1;
                }
            }
            Ok(local)
        })
        .collect();
    let mut classes = BTreeMap::new();
    for part in partials {
        for (c, n) in part? {
            classes.entry(c).or_insert_with(ClassCounts::default).merge(&n);
        }
    }
    Ok(Census { scenario: s.clone(), classes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &Scenario, f: impl Fn(&[usize]) -> Vec<usize>) -> Vertex {
        Vertex::from_fn(s.clone(), f).unwrap()
    }

    #[test]
    fn bipartite_examples() {
        let s = Scenario::uniform(2, 2, 2).unwrap();
        assert!(is_causal_vertex(&v(&s, |a| vec![a[0], a[0] ^ a[1]])));
        assert!(!is_causal_vertex(&v(&s, |a| vec![a[1], a[0]])));
    }

    #[test]
    fn tripartite_examples() {
        let s = Scenario::uniform(3, 2, 2).unwrap();
        let switch = v(&s, |a| vec![a[1] & a[2], a[0] & (1 - a[2]), 0]);
        assert!(is_causal_vertex(&switch));
        let xor = v(&s, |a| vec![a[1] ^ a[2], a[0] ^ a[2], 0]);
        assert!(!is_causal_vertex(&xor));
    }

    #[test]
    fn single_party_always_causal() {
        let s = Scenario::uniform(1, 3, 2).unwrap();
        assert_eq!(enumerate_causal_vertices(&s, DEFAULT_VERTEX_CAP).unwrap().len(), 8);
    }

    #[test]
    fn bipartite_causal_count() {
        let s = Scenario::uniform(2, 2, 2).unwrap();
        assert_eq!(enumerate_causal_vertices(&s, DEFAULT_VERTEX_CAP).unwrap().len(), 112);
    }

    #[test]
    fn cap_is_enforced() {
        let s = Scenario::uniform(3, 2, 2).unwrap();
        assert!(matches!(classify_scenario(&s, 1000), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn memo_keys_distinguish_dims() {
        assert_ne!(memo_key(&[2, 2], &[2, 2], &[0, 1, 2, 3]), memo_key(&[2, 2], &[2, 3], &[0, 1, 2, 3]));
        assert_eq!(memo_key(&[99, 2], &[2, 2], &[0]), None);
    }
}
