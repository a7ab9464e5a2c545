//! Convex-hull membership and weighted decompositions over 0/1 columns.
//!
//! Every column is a {0,1} vector given by the list of rows holding a one
//! (vertices of a correlation polytope, process functions). Targets in
//! rational mode solve exactly; anything else runs in double mode.
//!
//! Certificates are always stated against the full column set handed in.
//! When columns outside the support of the target are skipped, the
//! returned dual is shifted on zero rows so that it remains valid for the
//! skipped columns as well.

use std::collections::HashSet;

use exactlp::{solve, LinearProgram, LpOutcome, Scalar, Tol};
use num_rational::BigRational;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{Num, DEFAULT_EPS};
use crate::scenario::Scenario;

/// Bridge between [`Num`] and a solver backend.
pub trait LpNum: Scalar + 'static {
    fn from_num(n: &Num) -> Self;
    fn to_num(&self) -> Num;
}

impl LpNum for BigRational {
    fn from_num(n: &Num) -> Self {
        n.rational().cloned().expect("exact backend requires rational input")
    }
    fn to_num(&self) -> Num {
        Num::Exact(self.clone())
    }
}

impl LpNum for Tol {
    fn from_num(n: &Num) -> Self {
        Tol(n.to_f64())
    }
    fn to_num(&self) -> Num {
        Num::Approx(self.0)
    }
}

/// Outcome of a (weighted) hull decomposition.
#[derive(Clone, Debug, PartialEq)]
pub enum HullResult {
    /// Nonzero weights by column index, minimal objective and optimal dual.
    Feasible { weights: Vec<(usize, Num)>, objective: Num, dual: Vec<Num> },
    /// `y·col ≤ 0` for every column and `y·target > 0`.
    Infeasible { farkas: Vec<Num> },
}

fn dot_rows(y: &[Num], rows: &[usize]) -> Num {
    rows.iter().map(|&r| &y[r]).sum()
}

fn is_exact_target(target: &[Num], costs: Option<&[Num]>) -> bool {
    target.iter().all(Num::is_exact) && costs.is_none_or(|c| c.iter().all(Num::is_exact))
}

fn run_lp<F: LpNum>(target: &[Num], columns: &[&[usize]], costs: Option<&[Num]>) -> Result<LpOutcome<F>> {
    let mut lp = LinearProgram::new(target.iter().map(F::from_num).collect());
    for (j, rows) in columns.iter().enumerate() {
        let cost = costs.map_or(F::zero(), |c| F::from_num(&c[j]));
        lp.push_column(rows.iter().map(|&r| (r, F::one())).collect(), cost)?;
    }
    Ok(solve(&lp)?)
}

/// Decompose `target` over `columns`, minimizing `costs` (zero if absent).
/// Columns with a one on a zero entry of the target are skipped when
/// `skip_outside_support` is set; costs must then be nonnegative.
pub fn decompose(
    target: &[Num],
    columns: &[Vec<usize>],
    costs: Option<&[Num]>,
    skip_outside_support: bool,
) -> Result<HullResult> {
    let rows = target.len();
    if columns.iter().flatten().any(|&r| r >= rows) {
        return Err(Error::DimensionMismatch("column row index out of range".into()));
    }
    if let Some(c) = costs {
        if c.len() != columns.len() {
            return Err(Error::DimensionMismatch("cost vector length".into()));
        }
        if skip_outside_support && c.iter().any(|v| v.is_negative_eps(0.0)) {
            return Err(Error::InvalidInput("support filtering needs nonnegative costs".into()));
        }
    }
    let exact = is_exact_target(target, costs);
    let eps = if exact { 0.0 } else { DEFAULT_EPS };
    let zero_row: Vec<bool> = target.iter().map(|t| t.is_zero_eps(eps)).collect();
    let kept: Vec<usize> = (0..columns.len())
        .filter(|&j| !skip_outside_support || columns[j].iter().all(|&r| !zero_row[r]))
        .collect();
    let kept_cols: Vec<&[usize]> = kept.iter().map(|&j| columns[j].as_slice()).collect();
    let kept_costs: Option<Vec<Num>> = costs.map(|c| kept.iter().map(|&j| c[j].clone()).collect());

    let raw = if exact {
        convert::<BigRational>(run_lp(target, &kept_cols, kept_costs.as_deref())?)
    } else {
        convert::<Tol>(run_lp(target, &kept_cols, kept_costs.as_deref())?)
    };
    match raw {
        HullOutcomeRaw::Optimal { x, y, objective } => {
            let weights = x
                .into_iter()
                .enumerate()
                .filter(|(_, w)| !w.is_zero_eps(eps))
                .map(|(j, w)| (kept[j], w))
                .collect();
            let dual = if skip_outside_support { shift_dual(y, &zero_row) } else { y };
            Ok(HullResult::Feasible { weights, objective, dual })
        }
        HullOutcomeRaw::Infeasible { y } => {
            let farkas = if skip_outside_support { shift_dual(y, &zero_row) } else { y };
            Ok(HullResult::Infeasible { farkas })
        }
        HullOutcomeRaw::Unbounded => Err(Error::InvalidInput("decomposition objective unbounded".into())),
    }
}

enum HullOutcomeRaw {
    Optimal { x: Vec<Num>, y: Vec<Num>, objective: Num },
    Infeasible { y: Vec<Num> },
    Unbounded,
}

fn convert<F: LpNum>(out: LpOutcome<F>) -> HullOutcomeRaw {
    match out {
        LpOutcome::Optimal(opt) => HullOutcomeRaw::Optimal {
            x: opt.primal.iter().map(F::to_num).collect(),
            y: opt.dual.iter().map(F::to_num).collect(),
            objective: opt.objective.to_num(),
        },
        LpOutcome::Infeasible { farkas } => HullOutcomeRaw::Infeasible { y: farkas.iter().map(F::to_num).collect() },
        LpOutcome::Unbounded { .. } => HullOutcomeRaw::Unbounded,
    }
}

/// Lower `y` on zero rows of the target by `1 + Σ|y|`. Any nonnegative
/// 0/1 column touching a zero row then has `y·col < 0`.
fn shift_dual(mut y: Vec<Num>, zero_row: &[bool]) -> Vec<Num> {
    let mass: Num = y.iter().map(|v| if v.is_negative_eps(0.0) { -v } else { v.clone() }).sum();
    let shift = Num::one() + mass;
    for (v, z) in y.iter_mut().zip(zero_row) {
        if *z {
            *v = &*v - &shift;
        }
    }
    y
}

/// Check a Farkas certificate against every column.
pub fn verify_separation(target: &[Num], columns: &[Vec<usize>], y: &[Num]) -> bool {
    let exact = target.iter().all(Num::is_exact) && y.iter().all(Num::is_exact);
    let eps = if exact { 0.0 } else { DEFAULT_EPS };
    let yt: Num = target.iter().zip(y).map(|(t, v)| t * v).sum();
    yt.is_positive_eps(eps) && columns.iter().all(|c| !dot_rows(y, c).is_positive_eps(eps))
}

/// Check `Σ w_j col_j = target` and `w ≥ 0`.
pub fn verify_decomposition(target: &[Num], columns: &[Vec<usize>], weights: &[(usize, Num)], tol: f64) -> bool {
    let mut acc = vec![Num::zero(); target.len()];
    for (j, w) in weights {
        if w.is_negative_eps(tol) {
            return false;
        }
        for &r in &columns[*j] {
            acc[r] = &acc[r] + w;
        }
    }
    acc.iter().zip(target).all(|(a, t)| a.approx_eq(t, tol))
}

/// Row indices `f(a)·S + a` of a vertex column.
pub fn vertex_rows(s: &Scenario, f: &[u32]) -> Vec<usize> {
    let cols = s.num_settings();
    f.iter().enumerate().map(|(a, &x)| x as usize * cols + a).collect()
}

/// Decode vertex code `c` into `f` (setting index least significant first).
#[inline]
pub fn decode_code(code: u64, radix: u64, f: &mut [u32]) {
    let mut c = code;
    if radix.is_power_of_two() {
        let bits = radix.trailing_zeros();
        let mask = radix - 1;
        for x in f.iter_mut() {
            *x = (c & mask) as u32;
            c >>= bits;
        }
    } else {
        for x in f.iter_mut() {
            *x = (c % radix) as u32;
            c /= radix;
        }
    }
}

/// Vertex codes whose column lies in the support of `target`, if at most `limit`.
pub fn support_vertex_codes(s: &Scenario, target: &[Num], eps: f64, limit: usize) -> Option<Vec<u64>> {
    let cols = s.num_settings();
    let supports: Vec<Vec<u64>> = (0..cols)
        .map(|a| {
            (0..s.num_outcomes())
                .filter(|&x| !target[x * cols + a].is_zero_eps(eps))
                .map(|x| x as u64)
                .collect()
        })
        .collect();
    let mut count: usize = 1;
    for sup in &supports {
        count = count.checked_mul(sup.len())?;
        if count > limit {
            return None;
        }
    }
    let radix = s.num_outcomes() as u64;
    let mut codes = vec![0u64];
    for (a, sup) in supports.iter().enumerate() {
        let place = radix.checked_pow(a as u32)?;
        codes = codes.iter().flat_map(|&c| sup.iter().map(move |&x| c + x * place)).collect();
    }
    codes.sort_unstable();
    Some(codes)
}

/// Greedy exact decomposition of a stochastic table into vertices by
/// sweeping a threshold through all column distributions simultaneously.
pub fn greedy_vertex_codes(s: &Scenario, target: &[Num]) -> Vec<u64> {
    let cols = s.num_settings();
    let rows = s.num_outcomes();
    let radix = rows as u64;
    let mut cuts: Vec<f64> = vec![0.0];
    let cumulative: Vec<Vec<f64>> = (0..cols)
        .map(|a| {
            let mut acc = 0.0;
            (0..rows)
                .map(|x| {
                    acc += target[x * cols + a].to_f64();
                    acc
                })
                .collect()
        })
        .collect();
    for c in &cumulative {
        cuts.extend(c.iter().copied().filter(|v| *v > 0.0 && *v < 1.0));
    }
    cuts.push(1.0);
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cumulative sums"));
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut codes = Vec::new();
    for w in cuts.windows(2) {
        let t = 0.5 * (w[0] + w[1]);
        let mut code = 0u64;
        for a in (0..cols).rev() {
            let x = cumulative[a].iter().position(|&c| c > t).unwrap_or(rows - 1);
            code = code * radix + x as u64;
        }
        codes.push(code);
    }
    codes.sort_unstable();
    codes.dedup();
    codes
}

/// Pricing candidates `(score, code)` with `score = cost(code) − y·v`,
/// lowest first, ties broken by lowest code. `cost` returns `None` for
/// codes outside the pool.
pub fn price_codes(
    s: &Scenario,
    y: &[f64],
    cost: &(dyn Fn(u64) -> Option<f64> + Sync),
    keep: usize,
    below: f64,
) -> Result<Vec<(f64, u64)>> {
    let count = s.vertex_count().filter(|&c| c <= u64::MAX as u128).ok_or(Error::CapExceeded {
        what: "vertex codes",
        count: s.vertex_count().unwrap_or(u128::MAX),
        cap: u64::MAX as u128,
    })? as u64;
    let cols = s.num_settings();
    let radix = s.num_outcomes() as u64;
    const CHUNK: u64 = 1 << 16;
    let chunks = count.div_ceil(CHUNK);
    let mut found: Vec<(f64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut f = vec![0u32; cols];
            let mut best: Vec<(f64, u64)> = Vec::new();
            let end = ((ci + 1) * CHUNK).min(count);
            for code in ci * CHUNK..end {
                let Some(c) = cost(code) else { continue };
                decode_code(code, radix, &mut f);
                let mut yv = 0.0;
                for (a, &x) in f.iter().enumerate() {
                    yv += y[x as usize * cols + a];
                }
                let score = c - yv;
                if score < below {
                    best.push((score, code));
                    if best.len() >= 4 * keep.max(1) {
                        sort_candidates(&mut best);
                        best.truncate(keep.max(1));
                    }
                }
            }
            sort_candidates(&mut best);
            best.truncate(keep.max(1));
            best
        })
        .flatten()
        .collect();
    sort_candidates(&mut found);
    found.truncate(keep.max(1));
    Ok(found)
}

fn sort_candidates(v: &mut [(f64, u64)]) {
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scores").then(a.1.cmp(&b.1)));
}

/// Result of column generation over vertex codes.
#[derive(Clone, Debug, PartialEq)]
pub enum GenerationResult {
    Feasible { weights: Vec<(u64, Num)>, objective: Num, dual: Vec<Num>, rounds: usize },
    Infeasible { farkas: Vec<Num>, rounds: usize },
}

const ROUND_LIMIT: usize = 10_000;
const ADD_PER_ROUND: usize = 24;

/// Column generation for `min Σ cost(v) q_v  s.t.  Σ q_v v = target` over
/// all vertex codes with `cost(code).is_some()`. Certificates are valid
/// over that whole pool: pricing scans every code.
pub fn generate_columns(
    s: &Scenario,
    target: &[Num],
    cost: &(dyn Fn(u64) -> Option<Num> + Sync),
    initial: Vec<u64>,
) -> Result<GenerationResult> {
    let exact = target.iter().all(Num::is_exact);
    let mut codes: Vec<u64> = Vec::new();
    let mut seen: HashSet<u64> = HashSet::new();
    for c in initial {
        if cost(c).is_some() && seen.insert(c) {
            codes.push(c);
        }
    }
    let cols = s.num_settings();
    let radix = s.num_outcomes() as u64;
    let column_of = |code: u64| {
        let mut f = vec![0u32; cols];
        decode_code(code, radix, &mut f);
        vertex_rows(s, &f)
    };
    let cost_f64 = |code: u64| cost(code).map(|c| c.to_f64());
    let zero_cost = |code: u64| cost(code).map(|_| 0.0);

    for round in 1..=ROUND_LIMIT {
        let columns: Vec<Vec<usize>> = codes.iter().map(|&c| column_of(c)).collect();
        let costs: Vec<Num> = codes.iter().map(|&c| cost(c).expect("pool member")).collect();
        let outcome = decompose(target, &columns, Some(&costs), false)?;
        // Reduced score of a pool column: cost − y·v with the optimal dual,
        // or −y·v with the Farkas vector while the master is infeasible.
        let (y, feasible) = match &outcome {
            HullResult::Feasible { dual, .. } => (dual, true),
            HullResult::Infeasible { farkas } => (farkas, false),
        };
        let yf: Vec<f64> = y.iter().map(Num::to_f64).collect();
        let scorer: &(dyn Fn(u64) -> Option<f64> + Sync) = if feasible { &cost_f64 } else { &zero_cost };
        let mut added = 0;
        if exact {
            // Screen in floating point, then confirm each candidate exactly.
            let cands = price_codes(s, &yf, scorer, usize::MAX >> 1, 1e-9)?;
            let mut confirmed: Vec<(Num, u64)> = Vec::new();
            for (_, code) in cands {
                if seen.contains(&code) {
                    continue;
                }
                let yv: Num = column_of(code).iter().map(|&r| &y[r]).sum();
                let c = if feasible { cost(code).expect("pool member") } else { Num::zero() };
                let rc = c - yv;
                if rc.is_negative_eps(0.0) {
                    confirmed.push((rc, code));
                }
            }
            confirmed.sort_by(|a, b| a.0.cmp_eps(&b.0, 0.0).then(a.1.cmp(&b.1)));
            for (_, code) in confirmed.into_iter().take(ADD_PER_ROUND) {
                seen.insert(code);
                codes.push(code);
                added += 1;
            }
        } else {
            for (_, code) in price_codes(s, &yf, scorer, ADD_PER_ROUND, -DEFAULT_EPS)? {
                if seen.insert(code) {
                    codes.push(code);
                    added += 1;
                }
            }
        }
        if added == 0 {
            return Ok(match outcome {
                HullResult::Feasible { weights, objective, dual } => GenerationResult::Feasible {
                    weights: weights.into_iter().map(|(j, w)| (codes[j], w)).collect(),
                    objective,
                    dual,
                    rounds: round,
                },
                HullResult::Infeasible { farkas } => GenerationResult::Infeasible { farkas, rounds: round },
            });
        }
    }
    Err(Error::InvalidInput(format!("column generation did not converge in {ROUND_LIMIT} rounds")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_codes_cover_target() {
        let s = Scenario::uniform(2, 2, 2).unwrap();
        // Uniform table.
        let target = vec![Num::ratio(1, 4); 16];
        let codes = greedy_vertex_codes(&s, &target);
        let cols: Vec<Vec<usize>> = codes
            .iter()
            .map(|&c| {
                let mut f = vec![0; 4];
                decode_code(c, 4, &mut f);
                vertex_rows(&s, &f)
            })
            .collect();
        match decompose(&target, &cols, None, false).unwrap() {
            HullResult::Feasible { weights, .. } => assert!(verify_decomposition(&target, &cols, &weights, 0.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn separation_is_extended_to_skipped_columns() {
        // Two rows, target (1, 0); only column (0,1)-type vectors available.
        let target = vec![Num::one(), Num::zero()];
        let columns = vec![vec![1]];
        match decompose(&target, &columns, None, true).unwrap() {
            HullResult::Infeasible { farkas } => assert!(verify_separation(&target, &columns, &farkas)),
            other => panic!("{other:?}"),
        }
    }
}
