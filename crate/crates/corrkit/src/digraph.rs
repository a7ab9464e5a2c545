//! Small directed graphs on parties: cycles, siblings-on-cycles, and
//! canonical forms up to relabelling.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest node count representable.
pub const MAX_NODES: usize = 16;
/// Largest node count accepted by cycle enumeration.
pub const MAX_CYCLE_NODES: usize = 12;
/// Largest node count accepted by canonicalization.
pub const MAX_CANONICAL_NODES: usize = 8;

/// Directed graph without self-loops; `out[k]` is the bitmask of children of `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Digraph {
    n: usize,
    out: Vec<u16>,
}

impl Digraph {
    pub fn new(n: usize) -> Result<Digraph> {
        if n > MAX_NODES {
            return Err(Error::InvalidInput(format!("{n} nodes exceeds {MAX_NODES}")));
        }
        Ok(Digraph { n, out: vec![0; n] })
    }

    /// From 0-based edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Digraph> {
        let mut g = Digraph::new(n)?;
        for &(k, l) in edges {
            if k >= n || l >= n {
                return Err(Error::InvalidInput(format!("edge ({k},{l}) out of range")));
            }
            if k == l {
                return Err(Error::InvalidInput(format!("self-loop at {k}")));
            }
            g.add_edge(k, l);
        }
        Ok(g)
    }

    /// Complete graph with edges both ways between every pair.
    pub fn complete(n: usize) -> Result<Digraph> {
        let mut g = Digraph::new(n)?;
        for k in 0..n {
            for l in 0..n {
                if k != l {
                    g.add_edge(k, l);
                }
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Panics on a self-loop or out-of-range node.
    pub fn add_edge(&mut self, k: usize, l: usize) {
        assert!(k < self.n && l < self.n && k != l, "invalid edge ({k},{l})");
        self.out[k] |= 1 << l;
    }

    pub fn has_edge(&self, k: usize, l: usize) -> bool {
        self.out[k] >> l & 1 == 1
    }

    pub fn children(&self, k: usize) -> u16 {
        self.out[k]
    }

    /// Sorted 0-based edge list.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|k| (0..self.n).filter(move |&l| self.out[k] >> l & 1 == 1).map(move |l| (k, l)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(|m| m.count_ones() as usize).sum()
    }

    pub fn is_acyclic(&self) -> bool {
        let mut remaining: u32 = (1u32 << self.n) - 1;
        loop {
            let source = (0..self.n).find(|&v| {
                remaining >> v & 1 == 1 && (0..self.n).all(|u| remaining >> u & 1 == 0 || !self.has_edge(u, v))
            });
            match source {
                Some(v) => remaining &= !(1 << v),
                None => return remaining == 0,
            }
        }
    }

    /// Whether the underlying undirected graph is connected.
    pub fn is_weakly_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen: u32 = 1;
        let mut frontier: u32 = 1;
        while frontier != 0 {
            let mut next = 0u32;
            for v in 0..self.n {
                if frontier >> v & 1 == 1 {
                    next |= self.out[v] as u32;
                    for u in 0..self.n {
                        if self.has_edge(u, v) {
                            next |= 1 << u;
                        }
                    }
                }
            }
            frontier = next & !seen;
            seen |= next;
        }
        seen.count_ones() as usize == self.n
    }

    /// All simple directed cycles, each starting at its smallest node.
    /// Ordered by start node, then depth-first with children in increasing order.
    pub fn directed_cycles(&self) -> Result<Vec<Vec<usize>>> {
        if self.n > MAX_CYCLE_NODES {
            return Err(Error::InvalidInput(format!(
                "cycle enumeration refused for {} > {MAX_CYCLE_NODES} nodes",
                self.n
            )));
        }
        let mut cycles = Vec::new();
        for s in 0..self.n {
            let mut path = vec![s];
            self.extend_cycles(s, 1u16 << s, &mut path, &mut cycles);
        }
        Ok(cycles)
    }

    fn extend_cycles(&self, s: usize, visited: u16, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().expect("path starts non-empty");
        for next in 0..self.n {
            if !self.has_edge(last, next) {
                continue;
            }
            if next == s {
                out.push(path.clone());
            } else if next > s && visited >> next & 1 == 0 {
                path.push(next);
                self.extend_cycles(s, visited | 1 << next, path, out);
                path.pop();
            }
        }
    }

    /// Every directed cycle contains two nodes with a common parent.
    pub fn has_siblings_on_cycles(&self) -> Result<bool> {
        Ok(self.directed_cycles()?.iter().all(|c| self.cycle_has_siblings(c)))
    }

    fn cycle_has_siblings(&self, cycle: &[usize]) -> bool {
        let mask = cycle.iter().fold(0u16, |m, &v| m | 1 << v);
        self.out.iter().any(|&ch| (ch & mask).count_ones() >= 2)
    }

    /// Siblings-on-cycles and every directed cycle is an induced subgraph.
    pub fn is_chordless_soc(&self) -> Result<bool> {
        let cycles = self.directed_cycles()?;
        Ok(cycles.iter().all(|c| self.cycle_has_siblings(c) && self.is_induced(c)))
    }

    fn is_induced(&self, cycle: &[usize]) -> bool {
        let mask = cycle.iter().fold(0u16, |m, &v| m | 1 << v);
        let induced: u32 = cycle.iter().map(|&v| (self.out[v] & mask).count_ones()).sum();
        induced as usize == cycle.len()
    }

    /// Graph with node `v` relabelled `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Digraph {
        let mut g = Digraph { n: self.n, out: vec![0; self.n] };
        for (k, l) in self.edges() {
            g.add_edge(perm[k], perm[l]);
        }
        g
    }

    /// Adjacency bits: bit `k·n + l` set for edge `k → l`. Requires `n ≤ 8`.
    pub fn adjacency_code(&self) -> u64 {
        assert!(self.n <= MAX_CANONICAL_NODES, "adjacency code needs n <= 8");
        self.out.iter().enumerate().fold(0u64, |c, (k, &m)| c | (m as u64) << (k * self.n))
    }

    pub fn signalling_class(&self) -> Result<SignallingClass> {
        signalling_class(self)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(DigraphJson {
            n: self.n,
            edges: self.edges().into_iter().map(|(k, l)| [k + 1, l + 1]).collect(),
        })
        .expect("plain struct serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Digraph> {
        let j: DigraphJson = serde_json::from_value(v.clone())?;
        let mut edges = Vec::with_capacity(j.edges.len());
        for [k, l] in j.edges {
            if k == 0 || l == 0 {
                return Err(Error::InvalidInput("party indices are 1-based".into()));
            }
            edges.push((k - 1, l - 1));
        }
        Digraph::from_edges(j.n, &edges)
    }
}

impl fmt::Display for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self.edges().iter().map(|(k, l)| format!("{}->{}", k + 1, l + 1)).collect();
        write!(f, "n={} {{{}}}", self.n, edges.join(","))
    }
}

#[derive(Serialize, Deserialize)]
struct DigraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

/// Isomorphism class of a digraph: the minimum adjacency code over all
/// relabellings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignallingClass {
    n: u8,
    code: u64,
}

impl SignallingClass {
    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn code(&self) -> u64 {
        self.code
    }

    /// The canonical labelled representative.
    pub fn representative(&self) -> Digraph {
        let n = self.n as usize;
        let mut g = Digraph { n, out: vec![0; n] };
        for k in 0..n {
            for l in 0..n {
                if self.code >> (k * n + l) & 1 == 1 {
                    g.add_edge(k, l);
                }
            }
        }
        g
    }

    /// Stable text key, e.g. `3:1->2,2->1`.
    pub fn key(&self) -> String {
        let g = self.representative();
        let edges: Vec<String> = g.edges().iter().map(|(k, l)| format!("{}->{}", k + 1, l + 1)).collect();
        format!("{}:{}", self.n, edges.join(","))
    }
}

impl fmt::Display for SignallingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Canonical form by brute force over all `n!` permutations.
pub fn signalling_class(g: &Digraph) -> Result<SignallingClass> {
    if g.n > MAX_CANONICAL_NODES {
        return Err(Error::InvalidInput(format!(
            "canonicalization refused for {} > {MAX_CANONICAL_NODES} nodes",
            g.n
        )));
    }
    let edges = g.edges();
    let n = g.n;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = u64::MAX;
    loop {
        let code = edges.iter().fold(0u64, |c, &(k, l)| c | 1 << (perm[k] * n + perm[l]));
        best = best.min(code);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(SignallingClass { n: n as u8, code: if n == 0 { 0 } else { best } })
}

/// Advance to the next permutation in lexicographic order.
pub fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Lookup table from adjacency code to class, for `n ≤ 4`.
pub struct ClassTable {
    n: usize,
    classes: Vec<SignallingClass>,
}

impl ClassTable {
    pub fn new(n: usize) -> Result<ClassTable> {
        if n > 4 {
            return Err(Error::InvalidInput("class table limited to 4 nodes".into()));
        }
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|k| (0..n).filter(move |&l| l != k).map(move |l| (k, l))).collect();
        let mut classes = vec![SignallingClass { n: n as u8, code: 0 }; 1 << (n * n)];
        for bits in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, e)| *e).collect();
            let g = Digraph::from_edges(n, &edges)?;
            classes[g.adjacency_code() as usize] = signalling_class(&g)?;
        }
        Ok(ClassTable { n, classes })
    }

    pub fn class_of(&self, g: &Digraph) -> SignallingClass {
        debug_assert_eq!(g.n, self.n);
        self.classes[g.adjacency_code() as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, e: &[(usize, usize)]) -> Digraph {
        Digraph::from_edges(n, e).unwrap()
    }

    #[test]
    fn cycle_listing() {
        assert_eq!(g(3, &[(0, 1), (1, 2), (2, 0)]).directed_cycles().unwrap(), vec![vec![0, 1, 2]]);
        assert_eq!(g(2, &[(0, 1), (1, 0)]).directed_cycles().unwrap(), vec![vec![0, 1]]);
        let k3 = Digraph::complete(3).unwrap().directed_cycles().unwrap();
        assert_eq!(k3, vec![vec![0, 1], vec![0, 1, 2], vec![0, 2], vec![0, 2, 1], vec![1, 2]]);
    }

    #[test]
    fn siblings_examples() {
        assert!(!g(3, &[(0, 1), (1, 2), (2, 0)]).has_siblings_on_cycles().unwrap());
        let switch = g(4, &[(2, 0), (2, 1), (0, 1), (1, 0), (0, 3), (1, 3), (2, 3)]);
        assert!(switch.has_siblings_on_cycles().unwrap());
        assert!(switch.is_chordless_soc().unwrap());
        let k3 = Digraph::complete(3).unwrap();
        assert!(k3.has_siblings_on_cycles().unwrap());
        assert!(!k3.is_chordless_soc().unwrap());
        assert!(Digraph::new(5).unwrap().is_chordless_soc().unwrap());
    }

    #[test]
    fn class_relabelling() {
        let a = g(3, &[(0, 1)]).signalling_class().unwrap();
        let b = g(3, &[(1, 2)]).signalling_class().unwrap();
        assert_eq!(a, b);
        let two = g(2, &[(0, 1), (1, 0)]).signalling_class().unwrap();
        let one = g(2, &[(0, 1)]).signalling_class().unwrap();
        assert_ne!(two, one);
    }

    #[test]
    fn refuses_large() {
        assert!(Digraph::new(13).unwrap().directed_cycles().is_err());
        assert!(Digraph::new(9).unwrap().signalling_class().is_err());
        assert!(Digraph::new(17).is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = g(3, &[(0, 1), (2, 1)]);
        let j = d.to_json();
        assert_eq!(j["edges"], serde_json::json!([[1, 2], [3, 2]]));
        assert_eq!(Digraph::from_json(&j).unwrap(), d);
    }
}
