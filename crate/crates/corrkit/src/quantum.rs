//! Process matrices, quantum instruments in Choi form, validity checks and
//! the correlations `p(x⃗|a⃗) = Tr[W ⊗_k M_{x_k|a_k}]`.
//!
//! Tensor order is `I_1 O_1 I_2 O_2 …`, party 1 most significant.
//! Validity checks positivity through the eigenvalues of the real
//! symmetric embedding `[[A, −B], [B, A]]` of `W = A + iB`, and
//! normalization on a finite affine basis of each party's CPTP Choi
//! hull `{M : Tr_O M = 1_I}`. By multilinearity that basis suffices.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numeric::{Num, DEFAULT_EPS};
use crate::process::{LocalIntervention, StochasticProcess};
use crate::scenario::{Correlation, Scenario};

/// Largest total Hilbert-space dimension accepted by the validity check.
pub const MAX_TOTAL_DIM: usize = 64;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> CMatrix {
        CMatrix { n, data: vec![C0; n * n] }
    }

    pub fn identity(n: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C1;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<CMatrix> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("matrix must be square".into()));
        }
        Ok(CMatrix { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_real(n: usize, entries: &[f64]) -> CMatrix {
        assert_eq!(entries.len(), n * n);
        CMatrix { n, data: entries.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
    }

    /// `|i⟩⟨j|`.
    pub fn unit(n: usize, i: usize, j: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n);
        m.data[i * n + j] = C1;
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn add(&self, o: &CMatrix) -> CMatrix {
        CMatrix { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &CMatrix) -> CMatrix {
        CMatrix { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, c: Complex64) -> CMatrix {
        CMatrix { n: self.n, data: self.data.iter().map(|a| a * c).collect() }
    }

    pub fn mul(&self, o: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * o.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn kron(&self, o: &CMatrix) -> CMatrix {
        let (n, m) = (self.n, o.n);
        let mut out = CMatrix::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                if a == C0 {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out.data[(i * m + k) * n * m + j * m + l] = a * o.data[k * m + l];
                    }
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    /// `Tr[self · o]` without forming the product.
    pub fn trace_product(&self, o: &CMatrix) -> Complex64 {
        let n = self.n;
        let mut t = C0;
        for i in 0..n {
            for j in 0..n {
                t += self.data[i * n + j] * o.data[j * n + i];
            }
        }
        t
    }

    pub fn max_abs_diff(&self, o: &CMatrix) -> f64 {
        self.data.iter().zip(&o.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, eps: f64) -> bool {
        self.max_abs_diff(&self.dagger()) <= eps
    }

    /// Trace out the second factor of `C^{d1} ⊗ C^{d2}`.
    pub fn partial_trace_second(&self, d1: usize, d2: usize) -> Result<CMatrix> {
        if d1 * d2 != self.n {
            return Err(Error::DimensionMismatch(format!("{}x{} does not factor as {d1}·{d2}", self.n, self.n)));
        }
        let mut out = CMatrix::zeros(d1);
        for i in 0..d1 {
            for j in 0..d1 {
                out.data[i * d1 + j] = (0..d2).map(|k| self.data[(i * d2 + k) * self.n + j * d2 + k]).sum();
            }
        }
        Ok(out)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let m = 2 * n;
        let mut a = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                let h = 0.5 * (self.data[i * n + j] + self.data[j * n + i].conj());
                a[i * m + j] = h.re;
                a[(i + n) * m + j + n] = h.re;
                a[i * m + j + n] = -h.im;
                a[(i + n) * m + j] = h.im;
            }
        }
        let mut ev = jacobi_eigenvalues(&mut a, m);
        ev.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
        // Each eigenvalue of the embedding appears twice.
        ev.into_iter().step_by(2).collect()
    }

    pub fn to_json(&self) -> Value {
        json!((0..self.n)
            .map(|i| (0..self.n).map(|j| {
                let v = self.get(i, j);
                json!([v.re, v.im])
            }).collect::<Vec<_>>())
            .collect::<Vec<_>>())
    }

    pub fn from_json(v: &Value) -> Result<CMatrix> {
        let rows = v.as_array().ok_or_else(|| Error::Parse("matrix must be an array of rows".into()))?;
        let rows = rows
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| Error::Parse("matrix row must be an array".into()))?
                    .iter()
                    .map(|e| match e {
                        Value::Array(p) if p.len() == 2 => {
                            let re = p[0].as_f64().ok_or_else(|| Error::Parse("real part".into()))?;
                            let im = p[1].as_f64().ok_or_else(|| Error::Parse("imaginary part".into()))?;
                            Ok(Complex64::new(re, im))
                        }
                        Value::Number(x) => Ok(Complex64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
                        _ => Err(Error::Parse("entry must be [re, im]".into())),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        CMatrix::from_rows(rows)
    }
}

/// Cyclic Jacobi on a real symmetric `m×m` matrix (destroyed).
fn jacobi_eigenvalues(a: &mut [f64], m: usize) -> Vec<f64> {
    for _sweep in 0..100 {
        let off: f64 = (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i * m + j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..m).map(|i| a[i * m + i]).collect()
}

fn pauli(name: char) -> CMatrix {
    let i = Complex64::i();
    let rows = match name {
        'I' => [[C1, C0], [C0, C1]],
        'X' => [[C0, C1], [C1, C0]],
        'Y' => [[C0, -i], [i, C0]],
        'Z' => [[C1, C0], [C0, -C1]],
        _ => unreachable!("unknown Pauli {name}"),
    };
    CMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).expect("square")
}

/// Tensor product of single-qubit Paulis, e.g. `"ZZZI"`.
pub fn pauli_string(s: &str) -> CMatrix {
    s.chars().map(pauli).reduce(|a, b| a.kron(&b)).unwrap_or_else(|| CMatrix::identity(1))
}

/// Per-party input and output dimensions `(d_I, d_O)`.
pub type PartyDims = (usize, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    dims: Vec<PartyDims>,
    w: CMatrix,
}

impl ProcessMatrix {
    pub fn new(dims: Vec<PartyDims>, w: CMatrix) -> Result<ProcessMatrix> {
        if dims.is_empty() || dims.iter().any(|&(i, o)| i == 0 || o == 0) {
            return Err(Error::InvalidInput("party dimensions must be positive".into()));
        }
        let total: usize = dims.iter().map(|(i, o)| i * o).product();
        if total != w.dim() {
            return Err(Error::DimensionMismatch(format!("matrix of size {} for total dimension {total}", w.dim())));
        }
        if !w.is_hermitian(DEFAULT_EPS) {
            return Err(Error::InvalidInput("process matrix is not Hermitian".into()));
        }
        Ok(ProcessMatrix { dims, w })
    }

    pub fn dims(&self) -> &[PartyDims] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.w
    }

    pub fn to_json(&self) -> Value {
        json!({ "dims": self.dims, "entries": self.w.to_json() })
    }

    pub fn from_json(v: &Value) -> Result<ProcessMatrix> {
        let dims: Vec<PartyDims> = serde_json::from_value(v.get("dims").cloned().unwrap_or(Value::Null))?;
        let w = CMatrix::from_json(v.get("entries").unwrap_or(&Value::Null))?;
        ProcessMatrix::new(dims, w)
    }
}

/// Choi matrices `M_{x|a}` on `I ⊗ O` for each setting `a` and outcome `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumInstrument {
    d_in: usize,
    d_out: usize,
    elements: Vec<Vec<CMatrix>>,
}

impl QuantumInstrument {
    pub fn new(d_in: usize, d_out: usize, elements: Vec<Vec<CMatrix>>) -> Result<QuantumInstrument> {
        if elements.is_empty() || elements.iter().any(|e| e.is_empty() || e.len() != elements[0].len()) {
            return Err(Error::InvalidInput("instrument needs the same positive outcome count per setting".into()));
        }
        if elements.iter().flatten().any(|m| m.dim() != d_in * d_out) {
            return Err(Error::DimensionMismatch("Choi matrix dimension".into()));
        }
        let ins = QuantumInstrument { d_in, d_out, elements };
        ins.validate(DEFAULT_EPS)?;
        Ok(ins)
    }

    fn validate(&self, eps: f64) -> Result<()> {
        for (a, ms) in self.elements.iter().enumerate() {
            for (x, m) in ms.iter().enumerate() {
                if !m.is_hermitian(eps) {
                    return Err(Error::InvalidInput(format!("M[{x}|{a}] is not Hermitian")));
                }
                if m.hermitian_eigenvalues()[0] < -eps {
                    return Err(Error::InvalidInput(format!("M[{x}|{a}] is not positive semidefinite")));
                }
            }
            let sum = ms.iter().skip(1).fold(ms[0].clone(), |acc, m| acc.add(m));
            let reduced = sum.partial_trace_second(self.d_in, self.d_out)?;
            if reduced.max_abs_diff(&CMatrix::identity(self.d_in)) > eps {
                return Err(Error::InvalidInput(format!("instrument for setting {a} is not trace preserving")));
            }
        }
        Ok(())
    }

    pub fn settings(&self) -> usize {
        self.elements.len()
    }

    pub fn outcomes(&self) -> usize {
        self.elements[0].len()
    }

    pub fn dims(&self) -> PartyDims {
        (self.d_in, self.d_out)
    }

    pub fn element(&self, x: usize, a: usize) -> &CMatrix {
        &self.elements[a][x]
    }

    /// `{ "dims": [d_in, d_out], "elements": [[M_{x|a} per x] per a] }`.
    pub fn to_json(&self) -> Value {
        json!({
            "dims": [self.d_in, self.d_out],
            "elements": self.elements.iter().map(|ms| ms.iter().map(CMatrix::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<QuantumInstrument> {
        let (d_in, d_out): PartyDims = serde_json::from_value(v.get("dims").cloned().unwrap_or(Value::Null))?;
        let rows = v.get("elements").and_then(Value::as_array).ok_or_else(|| Error::Parse("missing \"elements\" array".into()))?;
        let elements = rows
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| Error::Parse("instrument elements must be arrays per setting".into()))?
                    .iter()
                    .map(CMatrix::from_json)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        QuantumInstrument::new(d_in, d_out, elements)
    }
}

/// `W(q) = ¼[1 + (2q−1)(Z_{I1}Z_{O1}Z_{I2}1_{O2} + Z_{I1}1_{O1}X_{I2}X_{O2})]`.
pub fn w_of_q(q: f64) -> ProcessMatrix {
    let c = Complex64::new(2.0 * q - 1.0, 0.0);
    let w = pauli_string("IIII").add(&pauli_string("ZZZI").add(&pauli_string("ZIXX")).scale(c)).scale(Complex64::new(0.25, 0.0));
    ProcessMatrix { dims: vec![(2, 2), (2, 2)], w }
}

/// Range of `q` for which `W(q)` is guaranteed valid.
pub fn w_of_q_valid_range() -> (f64, f64) {
    let h = 0.5 * std::f64::consts::FRAC_1_SQRT_2;
    (0.5 - h, 0.5 + h)
}

/// `q = ½(1 + 1/√2)`.
pub fn q_star() -> f64 {
    w_of_q_valid_range().1
}

/// Setting 0: outcome 0 never occurs, outcome 1 applies the identity
/// channel (`M_{1|0} = 2|Φ⁺⟩⟨Φ⁺|`). Setting 1: measure in the Z basis and
/// prepare `|0⟩`.
pub fn gyni_instrument() -> QuantumInstrument {
    let phi = CMatrix::from_real(4, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
    let p0 = CMatrix::unit(2, 0, 0);
    let p1 = CMatrix::unit(2, 1, 1);
    QuantumInstrument::new(2, 2, vec![vec![CMatrix::zeros(4), phi], vec![p0.kron(&p0), p1.kron(&p0)]]).expect("valid instrument")
}

pub fn gyni_instruments() -> Vec<QuantumInstrument> {
    vec![gyni_instrument(), gyni_instrument()]
}

/// Hermitian basis of `d×d` matrices; the first `d` are diagonal units.
fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut out: Vec<CMatrix> = (0..d).map(|i| CMatrix::unit(d, i, i)).collect();
    for i in 0..d {
        for j in i + 1..d {
            out.push(CMatrix::unit(d, i, j).add(&CMatrix::unit(d, j, i)));
            out.push(CMatrix::unit(d, i, j).sub(&CMatrix::unit(d, j, i)).scale(Complex64::i()));
        }
    }
    out
}

/// Traceless Hermitian basis of `d×d` matrices.
fn traceless_basis(d: usize) -> Vec<CMatrix> {
    let mut out: Vec<CMatrix> = (0..d.saturating_sub(1)).map(|i| CMatrix::unit(d, i, i).sub(&CMatrix::unit(d, i + 1, i + 1))).collect();
    out.extend(hermitian_basis(d).into_iter().skip(d));
    out
}

/// Affinely spanning points of `{M : Tr_O M = 1_I}`: the base point
/// `1_I ⊗ 1_O / d_O` and its shifts by `σ ⊗ τ` with `τ` traceless.
pub fn cptp_affine_basis(d_in: usize, d_out: usize) -> Vec<CMatrix> {
    let base = CMatrix::identity(d_in).kron(&CMatrix::identity(d_out)).scale(Complex64::new(1.0 / d_out as f64, 0.0));
    let mut out = vec![base.clone()];
    for s in hermitian_basis(d_in) {
        for t in traceless_basis(d_out) {
            out.push(base.add(&s.kron(&t)));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub min_eigenvalue: f64,
    /// Largest `|Tr[W ⊗ M] − 1|` over the affine basis.
    pub max_normalization_error: f64,
    pub checks: usize,
}

/// Positivity and normalization on all products of affine basis points.
pub fn check_process_matrix(w: &ProcessMatrix, eps: f64) -> Result<ValidityReport> {
    let total = w.w.dim();
    if total > MAX_TOTAL_DIM {
        return Err(Error::CapExceeded { what: "process matrix dimension", count: total as u128, cap: MAX_TOTAL_DIM as u128 });
    }
    let min_eigenvalue = w.w.hermitian_eigenvalues()[0];
    let bases: Vec<Vec<CMatrix>> = w.dims.iter().map(|&(i, o)| cptp_affine_basis(i, o)).collect();
    let mut idx = vec![0usize; bases.len()];
    let mut max_err: f64 = 0.0;
    let mut checks = 0;
    loop {
        let m = idx.iter().enumerate().map(|(k, &j)| bases[k][j].clone()).reduce(|a, b| a.kron(&b)).expect("parties");
        let t = w.w.trace_product(&m);
        max_err = max_err.max((t - C1).norm());
        checks += 1;
        let mut k = bases.len();
        loop {
            if k == 0 {
                let valid = min_eigenvalue >= -eps && max_err <= eps;
                return Ok(ValidityReport { valid, min_eigenvalue, max_normalization_error: max_err, checks });
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < bases[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

pub fn is_valid_process_matrix(w: &ProcessMatrix) -> Result<bool> {
    Ok(check_process_matrix(w, DEFAULT_EPS)?.valid)
}

/// `p(x⃗|a⃗) = Re Tr[W ⊗_k M_{x_k|a_k}]` as a double-mode correlation.
pub fn pm_correlation(w: &ProcessMatrix, iv: &[QuantumInstrument]) -> Result<Correlation> {
    if iv.len() != w.dims.len() || iv.iter().zip(&w.dims).any(|(m, d)| m.dims() != *d) {
        return Err(Error::DimensionMismatch("instruments do not match process matrix dims".into()));
    }
    let s = Scenario::new(iv.iter().map(QuantumInstrument::settings).collect(), iv.iter().map(QuantumInstrument::outcomes).collect())?;
    let (sr, or) = (s.setting_radix(), s.outcome_radix());
    let entries = (0..s.num_outcomes())
        .flat_map(|x| (0..s.num_settings()).map(move |a| (x, a)))
        .map(|(x, a)| {
            let m = iv
                .iter()
                .enumerate()
                .map(|(k, ins)| ins.element(or.digit(x, k), sr.digit(a, k)).clone())
                .reduce(|p, q| p.kron(&q))
                .expect("parties");
            let v = w.w.trace_product(&m).re;
            Num::approx(if v.abs() < 1e-15 { 0.0 } else { v })
        })
        .collect();
    Correlation::from_entries(s, entries)
}

/// `W = Σ P(i⃗|o⃗) ⊗_k |i_k⟩⟨i_k| ⊗ |o_k⟩⟨o_k|`.
pub fn diagonal_process(p: &StochasticProcess) -> ProcessMatrix {
    let d = p.dims();
    let dims: Vec<PartyDims> = d.inputs().iter().copied().zip(d.outputs().iter().copied()).collect();
    let total: usize = dims.iter().map(|(i, o)| i * o).product();
    let mut w = CMatrix::zeros(total);
    for i in 0..d.num_inputs() {
        for o in 0..d.num_outputs() {
            let idx = dims.iter().enumerate().fold(0, |acc, (k, &(_, dout))| {
                let ik = d.input_radix().digit(i, k);
                let ok = d.output_radix().digit(o, k);
                acc * dims[k].0 * dout + ik * dout + ok
            });
            w.set(idx, idx, Complex64::new(p.get(i, o).to_f64(), 0.0));
        }
    }
    ProcessMatrix { dims, w }
}

/// `M_{x|a} = Σ_{i,o} p(x,o|a,i) |i⟩⟨i| ⊗ |o⟩⟨o|`.
pub fn diagonal_instrument(l: &LocalIntervention) -> Result<QuantumInstrument> {
    let sh = l.shape();
    let n = sh.inputs * sh.outputs;
    let elements = (0..sh.settings)
        .map(|a| {
            (0..sh.outcomes)
                .map(|x| {
                    let mut m = CMatrix::zeros(n);
                    for i in 0..sh.inputs {
                        for o in 0..sh.outputs {
                            let j = i * sh.outputs + o;
                            m.set(j, j, Complex64::new(l.prob(x, o, a, i).to_f64(), 0.0));
                        }
                    }
                    m
                })
                .collect()
        })
        .collect();
    QuantumInstrument::new(sh.inputs, sh.outputs, elements)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_half_is_maximally_mixed() {
        assert!(w_of_q(0.5).matrix().max_abs_diff(&CMatrix::identity(16).scale(Complex64::new(0.25, 0.0))) < 1e-15);
    }

    #[test]
    fn w_valid_at_range_ends() {
        let (lo, hi) = w_of_q_valid_range();
        assert!(is_valid_process_matrix(&w_of_q(lo)).unwrap());
        assert!(is_valid_process_matrix(&w_of_q(hi)).unwrap());
        assert!(is_valid_process_matrix(&w_of_q(0.5)).unwrap());
    }

    #[test]
    fn unit_coefficient_is_invalid() {
        let r = check_process_matrix(&w_of_q(1.0), DEFAULT_EPS).unwrap();
        assert!(!r.valid);
        assert!((r.min_eigenvalue - (1.0 - 2f64.sqrt()) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn affine_basis_size() {
        assert_eq!(cptp_affine_basis(2, 2).len(), 1 + 4 * 3);
        assert_eq!(cptp_affine_basis(2, 3).len(), 1 + 4 * 8);
    }

    #[test]
    fn instruments_are_trace_preserving() {
        let m = gyni_instrument();
        let s = m.element(0, 1).add(m.element(1, 1));
        assert!(s.partial_trace_second(2, 2).unwrap().max_abs_diff(&CMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn eigenvalues_of_pauli_sum() {
        let ev = pauli_string("ZI").add(&pauli_string("XX")).hermitian_eigenvalues();
        let r = 2f64.sqrt();
        for (a, b) in ev.iter().zip([-r, -r, r, r]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn instrument_json_round_trip() {
        let m = gyni_instrument();
        assert_eq!(QuantumInstrument::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn rejects_non_hermitian() {
        let w = CMatrix::unit(4, 0, 1);
        assert!(ProcessMatrix::new(vec![(2, 2)], w).is_err());
    }
}
