//! Hull membership over vertex pools defined by a predicate.
//!
//! Small scenarios are solved over all pool vertices. Larger ones use the
//! pool vertices inside the support of the input when there are few
//! enough, and column generation over cached vertex flags otherwise.

use crate::antinomy::DcClassifier;
use crate::causality::CausalChecker;
use crate::error::Result;
use crate::flags::vertex_flags;
use crate::hull::{decompose, generate_columns, greedy_vertex_codes, support_vertex_codes, vertex_rows, GenerationResult, HullResult};
use crate::numeric::{Num, DEFAULT_EPS};
use crate::scenario::{signalling_edges, Correlation, Scenario, Vertex};

/// Scenarios with at most this many vertices are solved over all of them.
pub const DIRECT_VERTEX_LIMIT: u128 = 4096;
/// Largest support-compatible vertex set solved directly.
pub const SUPPORT_LIMIT: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexPool {
    All,
    /// Vertices with an edgeless signalling graph.
    Bell,
    Causal,
    Classical,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MembershipResult {
    Member(Vec<(Num, Vertex)>),
    /// `y` with `y·p > 0` and `y·v ≤ 0` for every pool vertex.
    NonMember(Vec<Num>),
}

impl MembershipResult {
    pub fn is_member(&self) -> bool {
        matches!(self, MembershipResult::Member(_))
    }
}

/// Every outcome depends only on the party's own setting.
pub fn is_bell_table(s: &Scenario, f: &[u32]) -> bool {
    signalling_edges(s, f).edge_count() == 0
}

/// Pool predicate with per-scenario memoization.
#[derive(Default)]
pub struct PoolChecker {
    causal: CausalChecker,
    classical: DcClassifier,
}

impl PoolChecker {
    pub fn new() -> PoolChecker {
        PoolChecker::default()
    }

    pub fn contains(&mut self, pool: VertexPool, s: &Scenario, f: &[u32]) -> Result<bool> {
        Ok(match pool {
            VertexPool::All => true,
            VertexPool::Bell => is_bell_table(s, f),
            VertexPool::Causal => self.causal.is_causal_table(s, f),
            VertexPool::Classical => self.classical.is_classical_table(s, f)?,
        })
    }
}

fn direct(p: &Correlation, pool: VertexPool, codes: impl Iterator<Item = u64>) -> Result<MembershipResult> {
    let s = p.scenario();
    let mut checker = PoolChecker::new();
    let mut vertices = Vec::new();
    for c in codes {
        let v = Vertex::from_code(s.clone(), c as u128)?;
        if checker.contains(pool, s, v.table())? {
            vertices.push(v);
        }
    }
    let columns: Vec<Vec<usize>> = vertices.iter().map(|v| vertex_rows(s, v.table())).collect();
    Ok(match decompose(p.entries(), &columns, None, true)? {
        HullResult::Feasible { weights, .. } => {
            MembershipResult::Member(weights.into_iter().map(|(j, w)| (w, vertices[j].clone())).collect())
        }
        HullResult::Infeasible { farkas } => MembershipResult::NonMember(farkas),
    })
}

/// Decomposition over pool vertices, or a separating certificate.
pub fn pool_membership(p: &Correlation, pool: VertexPool) -> Result<MembershipResult> {
    let s = p.scenario();
    let count = s.vertex_count().unwrap_or(u128::MAX);
    if count <= DIRECT_VERTEX_LIMIT {
        return direct(p, pool, 0..count as u64);
    }
    let eps = if p.entries().iter().all(Num::is_exact) { 0.0 } else { DEFAULT_EPS };
    if let Some(codes) = support_vertex_codes(s, p.entries(), eps, SUPPORT_LIMIT) {
        return direct(p, pool, codes.into_iter());
    }
    let flags = vertex_flags(s)?;
    let cost = |code: u64| flags.contains(pool, code).then(Num::zero);
    Ok(match generate_columns(s, p.entries(), &cost, greedy_vertex_codes(s, p.entries()))? {
        GenerationResult::Feasible { weights, .. } => MembershipResult::Member(
            weights
                .into_iter()
                .map(|(c, w)| Ok((w, Vertex::from_code(s.clone(), c as u128)?)))
                .collect::<Result<Vec<_>>>()?,
        ),
        GenerationResult::Infeasible { farkas, .. } => MembershipResult::NonMember(farkas),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::mix;

    #[test]
    fn pr_box_is_causal_mixture() {
        let s = Scenario::uniform(2, 2, 2).unwrap();
        let p = Vertex::from_fn(s.clone(), |a| vec![a[0], a[0] ^ (a[0] & a[1])]).unwrap().to_correlation();
        let q = Vertex::from_fn(s, |a| vec![a[0], (1 - a[0]) ^ (a[0] & a[1])]).unwrap().to_correlation();
        let pr = mix(&[(Num::ratio(1, 2), &p), (Num::ratio(1, 2), &q)]).unwrap();
        assert!(pool_membership(&pr, VertexPool::Causal).unwrap().is_member());
    }

    #[test]
    fn gyni_vertex_is_not_causal() {
        let s = Scenario::uniform(2, 2, 2).unwrap();
        let g = Vertex::from_fn(s, |a| vec![a[1], a[0]]).unwrap().to_correlation();
        let MembershipResult::NonMember(y) = pool_membership(&g, VertexPool::Causal).unwrap() else {
            panic!("expected separation");
        };
        let yp: Num = g.entries().iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!(yp.is_positive_eps(0.0));
    }
}
