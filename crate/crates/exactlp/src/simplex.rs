//! Two-phase revised simplex with Bland's rule.
//!
//! Problems are in equality standard form: minimize `cᵀx` subject to
//! `Ax = b`, `x ≥ 0`. Columns are stored sparsely; the basis inverse is a
//! dense `m × m` matrix updated by elementary row operations.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("row index {row} out of range for {rows} rows")]
    RowOutOfRange { row: usize, rows: usize },
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("numerical breakdown in phase one")]
    Numerical,
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
}

/// `min cᵀx  s.t.  Ax = b, x ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<F> {
    rhs: Vec<F>,
    columns: Vec<Vec<(usize, F)>>,
    costs: Vec<F>,
}

impl<F: Scalar> LinearProgram<F> {
    /// Empty program with the given right-hand side and no columns.
    pub fn new(rhs: Vec<F>) -> Self {
        LinearProgram { rhs, columns: Vec::new(), costs: Vec::new() }
    }

    /// Build from a dense row-major matrix.
    pub fn from_dense(a: &[Vec<F>], b: Vec<F>, c: Vec<F>) -> Result<Self, LpError> {
        if a.len() != b.len() {
            return Err(LpError::DimensionMismatch(format!(
                "{} rows in A but {} entries in b",
                a.len(),
                b.len()
            )));
        }
        let n = c.len();
        if let Some(row) = a.iter().find(|r| r.len() != n) {
            return Err(LpError::DimensionMismatch(format!(
                "row of length {} but {} costs",
                row.len(),
                n
            )));
        }
        let mut lp = LinearProgram::new(b);
        for (j, cost) in c.into_iter().enumerate() {
            let col = a
                .iter()
                .enumerate()
                .filter(|(_, row)| row[j] != F::zero())
                .map(|(i, row)| (i, row[j].clone()))
                .collect();
            lp.push_column(col, cost)?;
        }
        Ok(lp)
    }

    /// Append a sparse column; returns its index.
    pub fn push_column(&mut self, entries: Vec<(usize, F)>, cost: F) -> Result<usize, LpError> {
        let rows = self.rhs.len();
        for (r, v) in &entries {
            if *r >= rows {
                return Err(LpError::RowOutOfRange { row: *r, rows });
            }
            if !v.to_f64().is_finite() {
                return Err(LpError::NonFinite);
            }
        }
        if !cost.to_f64().is_finite() {
            return Err(LpError::NonFinite);
        }
        self.columns.push(entries);
        self.costs.push(cost);
        Ok(self.columns.len() - 1)
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn rhs(&self) -> &[F] {
        &self.rhs
    }

    pub fn cost(&self, j: usize) -> &F {
        &self.costs[j]
    }

    pub fn column(&self, j: usize) -> &[(usize, F)] {
        &self.columns[j]
    }

    /// `yᵀ a_j`.
    pub fn dot_column(&self, j: usize, y: &[F]) -> F {
        self.columns[j]
            .iter()
            .fold(F::zero(), |acc, (r, v)| acc.add(&y[*r].mul(v)))
    }

    /// `A x`.
    pub fn apply(&self, x: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.rows()];
        for (j, xj) in x.iter().enumerate() {
            if *xj == F::zero() {
                continue;
            }
            for (r, v) in &self.columns[j] {
                out[*r] = out[*r].add(&v.mul(xj));
            }
        }
        out
    }
}

/// Optimal primal/dual pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum<F> {
    pub primal: Vec<F>,
    pub dual: Vec<F>,
    pub objective: F,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<F> {
    Optimal(Optimum<F>),
    /// `yᵀA ≤ 0`, `yᵀb > 0`.
    Infeasible { farkas: Vec<F> },
    /// `A r = 0`, `r ≥ 0`, `cᵀr < 0`.
    Unbounded { ray: Vec<F> },
}

impl<F> LpOutcome<F> {
    pub fn optimum(&self) -> Option<&Optimum<F>> {
        match self {
            LpOutcome::Optimal(o) => Some(o),
            _ => None,
        }
    }
}

struct Revised<'a, F> {
    lp: &'a LinearProgram<F>,
    m: usize,
    n: usize,
    flip: Vec<bool>,
    binv: Vec<Vec<F>>,
    basis: Vec<usize>,
    xb: Vec<F>,
    is_basic: Vec<bool>,
    iterations: usize,
    limit: usize,
}

enum Step<F> {
    Optimal,
    Unbounded(usize, Vec<F>),
}

impl<'a, F: Scalar> Revised<'a, F> {
    fn new(lp: &'a LinearProgram<F>) -> Self {
        let m = lp.rows();
        let n = lp.cols();
        let flip: Vec<bool> = lp.rhs.iter().map(|b| b.is_negative()).collect();
        let xb = lp
            .rhs
            .iter()
            .zip(&flip)
            .map(|(b, f)| if *f { b.neg() } else { b.clone() })
            .collect();
        let binv = (0..m)
            .map(|i| (0..m).map(|r| if i == r { F::one() } else { F::zero() }).collect())
            .collect();
        let mut is_basic = vec![false; n + m];
        for v in is_basic.iter_mut().skip(n) {
            *v = true;
        }
        Revised {
            lp,
            m,
            n,
            flip,
            binv,
            basis: (n..n + m).collect(),
            xb,
            is_basic,
            iterations: 0,
            limit: 20_000 + 50 * (n + m),
        }
    }

    fn entry(&self, r: usize, v: &F) -> F {
        if self.flip[r] {
            v.neg()
        } else {
            v.clone()
        }
    }

    /// `B⁻¹ a_j` for an original column.
    fn ftran(&self, j: usize) -> Vec<F> {
        let col = self.lp.column(j);
        (0..self.m)
            .map(|i| {
                col.iter().fold(F::zero(), |acc, (r, v)| {
                    let b = &self.binv[i][*r];
                    if *b == F::zero() {
                        acc
                    } else {
                        acc.add(&b.mul(&self.entry(*r, v)))
                    }
                })
            })
            .collect()
    }

    fn duals(&self, cost: &dyn Fn(usize) -> F) -> Vec<F> {
        let mut y = vec![F::zero(); self.m];
        for (i, &bv) in self.basis.iter().enumerate() {
            let c = cost(bv);
            if c == F::zero() {
                continue;
            }
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = yr.add(&c.mul(&self.binv[i][r]));
            }
        }
        y
    }

    fn reduced(&self, j: usize, y: &[F], cost: &dyn Fn(usize) -> F) -> F {
        let dot = self
            .lp
            .column(j)
            .iter()
            .fold(F::zero(), |acc, (r, v)| acc.add(&y[*r].mul(&self.entry(*r, v))));
        cost(j).sub(&dot)
    }

    fn pivot(&mut self, r: usize, j: usize, u: &[F]) {
        let piv = u[r].clone();
        for v in self.binv[r].iter_mut() {
            *v = v.div(&piv);
        }
        self.xb[r] = self.xb[r].div(&piv);
        let prow = self.binv[r].clone();
        let px = self.xb[r].clone();
        for i in 0..self.m {
            if i == r || u[i] == F::zero() {
                continue;
            }
            let f = u[i].clone();
            for (v, p) in self.binv[i].iter_mut().zip(&prow) {
                if *p != F::zero() {
                    *v = v.sub(&f.mul(p));
                }
            }
            self.xb[i] = self.xb[i].sub(&f.mul(&px));
        }
        self.is_basic[self.basis[r]] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    fn run(&mut self, cost: &dyn Fn(usize) -> F) -> Result<Step<F>, LpError> {
        loop {
            self.iterations += 1;
            if self.iterations > self.limit {
                return Err(LpError::IterationLimit(self.limit));
            }
            let y = self.duals(cost);
            let entering = (0..self.n)
                .find(|&j| !self.is_basic[j] && self.reduced(j, &y, cost).is_negative());
            let Some(j) = entering else {
                return Ok(Step::Optimal);
            };
            let u = self.ftran(j);
            let mut leave: Option<(usize, F)> = None;
            for i in 0..self.m {
                if !u[i].is_positive() {
                    continue;
                }
                let xi = if self.xb[i].is_negative() { F::zero() } else { self.xb[i].clone() };
                let ratio = xi.div(&u[i]);
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        if ratio.lt(&best) || (!best.lt(&ratio) && self.basis[i] < self.basis[k]) {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            match leave {
                None => return Ok(Step::Unbounded(j, u)),
                Some((r, _)) => self.pivot(r, j, &u),
            }
        }
    }

    fn unflip(&self, y: Vec<F>) -> Vec<F> {
        y.into_iter()
            .zip(&self.flip)
            .map(|(v, f)| if *f { v.neg() } else { v })
            .collect()
    }
}

/// Solve a linear program. Deterministic for a given input.
pub fn solve<F: Scalar>(lp: &LinearProgram<F>) -> Result<LpOutcome<F>, LpError> {
    for b in lp.rhs() {
        if !b.to_f64().is_finite() {
            return Err(LpError::NonFinite);
        }
    }
    let n = lp.cols();
    let mut t = Revised::new(lp);

    let phase1 = move |j: usize| if j >= n { F::one() } else { F::zero() };
    if let Step::Unbounded(..) = t.run(&phase1)? {
        return Err(LpError::Numerical);
    }
    let w = t
        .basis
        .iter()
        .zip(&t.xb)
        .filter(|(bv, _)| **bv >= n)
        .fold(F::zero(), |acc, (_, x)| acc.add(x));
    if w.is_positive() {
        let y = t.duals(&phase1);
        return Ok(LpOutcome::Infeasible { farkas: t.unflip(y) });
    }

    // Drive remaining artificials out where a structural column can replace them.
    for r in 0..t.m {
        if t.basis[r] < n {
            continue;
        }
        let row = t.binv[r].clone();
        let candidate = (0..n).find(|&j| {
            !t.is_basic[j]
                && !lp
                    .column(j)
                    .iter()
                    .fold(F::zero(), |acc, (k, v)| acc.add(&row[*k].mul(&t.entry(*k, v))))
                    .is_zero()
        });
        if let Some(j) = candidate {
            let u = t.ftran(j);
            t.pivot(r, j, &u);
        }
    }

    let phase2 = |j: usize| if j >= n { F::zero() } else { lp.cost(j).clone() };
    match t.run(&phase2)? {
        Step::Unbounded(j, u) => {
            let mut ray = vec![F::zero(); n];
            ray[j] = F::one();
            for (i, &bv) in t.basis.iter().enumerate() {
                if bv < n {
                    ray[bv] = u[i].neg();
                }
            }
            Ok(LpOutcome::Unbounded { ray })
        }
        Step::Optimal => {
            let mut primal = vec![F::zero(); n];
            for (i, &bv) in t.basis.iter().enumerate() {
                if bv < n {
                    primal[bv] = if t.xb[i].is_negative() || t.xb[i].is_zero() && !F::exact() {
                        F::zero()
                    } else {
                        t.xb[i].clone()
                    };
                }
            }
            let objective = (0..n).fold(F::zero(), |acc, j| acc.add(&lp.cost(j).mul(&primal[j])));
            let dual = t.unflip(t.duals(&phase2));
            Ok(LpOutcome::Optimal(Optimum { primal, dual, objective }))
        }
    }
}

/// Check feasibility, dual feasibility and zero duality gap.
pub fn verify_optimal<F: Scalar>(lp: &LinearProgram<F>, opt: &Optimum<F>) -> bool {
    if opt.primal.len() != lp.cols() || opt.dual.len() != lp.rows() {
        return false;
    }
    if opt.primal.iter().any(|x| x.is_negative()) {
        return false;
    }
    let ax = lp.apply(&opt.primal);
    if ax.iter().zip(lp.rhs()).any(|(l, r)| !l.sub(r).is_zero()) {
        return false;
    }
    if (0..lp.cols()).any(|j| lp.cost(j).sub(&lp.dot_column(j, &opt.dual)).is_negative()) {
        return false;
    }
    let by = lp
        .rhs()
        .iter()
        .zip(&opt.dual)
        .fold(F::zero(), |acc, (b, y)| acc.add(&b.mul(y)));
    let cx = (0..lp.cols()).fold(F::zero(), |acc, j| acc.add(&lp.cost(j).mul(&opt.primal[j])));
    by.sub(&cx).is_zero() && cx.sub(&opt.objective).is_zero()
}

/// Check `yᵀA ≤ 0` and `yᵀb > 0`.
pub fn verify_farkas<F: Scalar>(lp: &LinearProgram<F>, y: &[F]) -> bool {
    if y.len() != lp.rows() {
        return false;
    }
    let yb = lp.rhs().iter().zip(y).fold(F::zero(), |acc, (b, v)| acc.add(&b.mul(v)));
    yb.is_positive() && (0..lp.cols()).all(|j| !lp.dot_column(j, y).is_positive())
}

/// Check `A r = 0`, `r ≥ 0`, `cᵀr < 0`.
pub fn verify_ray<F: Scalar>(lp: &LinearProgram<F>, ray: &[F]) -> bool {
    if ray.len() != lp.cols() || ray.iter().any(|r| r.is_negative()) {
        return false;
    }
    let cr = (0..lp.cols()).fold(F::zero(), |acc, j| acc.add(&lp.cost(j).mul(&ray[j])));
    cr.is_negative() && lp.apply(ray).iter().all(|v| v.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Tol;
    use num_rational::BigRational;

    fn q(n: i64) -> BigRational {
        BigRational::from_i64(n)
    }

    #[test]
    fn single_equality() {
        let lp = LinearProgram::from_dense(&[vec![q(1)]], vec![q(1)], vec![q(0)]).unwrap();
        let out = solve(&lp).unwrap();
        let opt = out.optimum().expect("optimal");
        assert_eq!(opt.primal, vec![q(1)]);
        assert!(verify_optimal(&lp, opt));
    }

    #[test]
    fn negative_rhs_is_infeasible() {
        let lp = LinearProgram::from_dense(&[vec![q(1)]], vec![q(-1)], vec![q(0)]).unwrap();
        match solve(&lp).unwrap() {
            LpOutcome::Infeasible { farkas } => {
                assert_eq!(farkas, vec![q(-1)]);
                assert!(verify_farkas(&lp, &farkas));
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_ray() {
        // min -x1 s.t. x1 - x2 = 0
        let lp = LinearProgram::from_dense(&[vec![q(1), q(-1)]], vec![q(0)], vec![q(-1), q(0)])
            .unwrap();
        match solve(&lp).unwrap() {
            LpOutcome::Unbounded { ray } => assert!(verify_ray(&lp, &ray)),
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn redundant_rows() {
        // x1 + x2 = 1 written twice, min x1.
        let a = vec![vec![q(1), q(1)], vec![q(1), q(1)]];
        let lp = LinearProgram::from_dense(&a, vec![q(1), q(1)], vec![q(1), q(0)]).unwrap();
        let out = solve(&lp).unwrap();
        let opt = out.optimum().unwrap();
        assert_eq!(opt.objective, q(0));
        assert!(verify_optimal(&lp, opt));
    }

    #[test]
    fn float_backend() {
        let a = vec![vec![Tol(1.0), Tol(2.0), Tol(0.0)], vec![Tol(0.0), Tol(1.0), Tol(1.0)]];
        let lp = LinearProgram::from_dense(&a, vec![Tol(2.0), Tol(1.0)], vec![Tol(1.0), Tol(1.0), Tol(3.0)])
            .unwrap();
        let out = solve(&lp).unwrap();
        let opt = out.optimum().unwrap();
        assert!((opt.objective.0 - 1.0).abs() < 1e-12);
        assert!(verify_optimal(&lp, opt));
    }

    #[test]
    fn dimension_mismatch() {
        let err = LinearProgram::from_dense(&[vec![q(1)]], vec![q(1), q(2)], vec![q(0)]);
        assert!(matches!(err, Err(LpError::DimensionMismatch(_))));
    }
}
