//! Classical processes: quasi-process functions, stochastic processes,
//! local interventions, fixed-point and logical-consistency checks, and
//! the correlations they generate.
//!
//! A process maps the parties' outputs `o⃗` to their inputs `i⃗`. Tables
//! use the correlation layout: row = input tuple, column = output tuple.
//! A deterministic intervention `h_k: I_k → O_k` is encoded as the
//! lexicographic index of `(h_k(0), …, h_k(|I_k|−1))`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::causality::chunk_ranges;
use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::hull::{decode_code, decompose, HullResult};
use crate::numeric::{mode_of, Num, NumericMode, DEFAULT_EPS};
use crate::radix::Radix;
use crate::scenario::{parse_table, signalling_edges, Correlation, Scenario, Vertex};

/// Cap on the number of deterministic intervention tuples.
pub const INTERVENTION_CAP: u128 = 1 << 20;
/// Cap on candidate functions in an exhaustive sweep.
pub const CANDIDATE_CAP: u128 = 1 << 25;
const KERNEL_CAP: u128 = 1 << 22;

/// Per-party input and output cardinalities `|I_k|`, `|O_k|`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProcessDims {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    input_radix: Radix,
    output_radix: Radix,
}

#[derive(Serialize, Deserialize)]
struct DimsJson {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

impl Serialize for ProcessDims {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DimsJson { inputs: self.inputs.clone(), outputs: self.outputs.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProcessDims {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = DimsJson::deserialize(d)?;
        ProcessDims::new(j.inputs, j.outputs).map_err(serde::de::Error::custom)
    }
}

impl ProcessDims {
    pub fn new(inputs: Vec<usize>, outputs: Vec<usize>) -> Result<ProcessDims> {
        // Validation is shared with scenarios: outputs play settings, inputs play outcomes.
        Scenario::new(outputs.clone(), inputs.clone())?;
        let input_radix = Radix::new(&inputs);
        let output_radix = Radix::new(&outputs);
        Ok(ProcessDims { inputs, outputs, input_radix, output_radix })
    }

    /// `n` parties with `d` inputs and `d` outputs each.
    pub fn uniform(n: usize, d: usize) -> Result<ProcessDims> {
        ProcessDims::new(vec![d; n], vec![d; n])
    }

    pub fn parties(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn input_radix(&self) -> &Radix {
        &self.input_radix
    }

    pub fn output_radix(&self) -> &Radix {
        &self.output_radix
    }

    pub fn num_inputs(&self) -> usize {
        self.input_radix.size()
    }

    pub fn num_outputs(&self) -> usize {
        self.output_radix.size()
    }

    /// The scenario whose vertices are exactly the quasi-process functions:
    /// settings are outputs, outcomes are inputs.
    pub fn as_scenario(&self) -> Scenario {
        Scenario::new(self.outputs.clone(), self.inputs.clone()).expect("validated dims")
    }

    /// `∏_k |O_k|^{|I_k|}`.
    pub fn intervention_count(&self) -> Option<u128> {
        self.inputs.iter().zip(&self.outputs).try_fold(1u128, |acc, (&i, &o)| {
            acc.checked_mul((o as u128).checked_pow(u32::try_from(i).ok()?)?)
        })
    }

    /// `|I⃗|^{|O⃗|}`.
    pub fn candidate_count(&self) -> Option<u128> {
        (self.num_inputs() as u128).checked_pow(u32::try_from(self.num_outputs()).ok()?)
    }

    /// Dims with inputs and outputs both equal to the given correlation
    /// scenario's outcomes and settings.
    pub fn of_scenario(s: &Scenario) -> ProcessDims {
        ProcessDims::new(s.outcomes().to_vec(), s.settings().to_vec()).expect("valid scenario")
    }
}

/// Deterministic map `ω: O⃗ → I⃗`, stored as the input-tuple index per output-tuple index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuasiProcessFunction {
    dims: ProcessDims,
    omega: Vec<u32>,
}

impl QuasiProcessFunction {
    pub fn new(dims: ProcessDims, omega: Vec<u32>) -> Result<QuasiProcessFunction> {
        if omega.len() != dims.num_outputs() {
            return Err(Error::DimensionMismatch(format!(
                "omega of length {}, dims need {}",
                omega.len(),
                dims.num_outputs()
            )));
        }
        if let Some(&i) = omega.iter().find(|&&i| i as usize >= dims.num_inputs()) {
            return Err(Error::InvalidInput(format!("input index {i} out of range")));
        }
        Ok(QuasiProcessFunction { dims, omega })
    }

    /// Build from a function on output tuples returning input tuples.
    pub fn from_fn(dims: ProcessDims, w: impl Fn(&[usize]) -> Vec<usize>) -> Result<QuasiProcessFunction> {
        let omega = (0..dims.num_outputs())
            .map(|o| {
                let i = w(&dims.output_radix.tuple(o));
                if i.len() != dims.parties() || i.iter().zip(&dims.inputs).any(|(v, d)| v >= d) {
                    return Err(Error::InvalidInput(format!("invalid input tuple {i:?}")));
                }
                Ok(dims.input_radix.index(&i) as u32)
            })
            .collect::<Result<Vec<_>>>()?;
        QuasiProcessFunction::new(dims, omega)
    }

    /// Decode from a packed code (output index 0 least significant).
    pub fn from_code(dims: ProcessDims, code: u64) -> Result<QuasiProcessFunction> {
        let mut omega = vec![0u32; dims.num_outputs()];
        decode_code(code, dims.num_inputs() as u64, &mut omega);
        QuasiProcessFunction::new(dims, omega)
    }

    pub fn code(&self) -> u64 {
        let r = self.dims.num_inputs() as u64;
        self.omega.iter().rev().fold(0u64, |c, &i| c * r + i as u64)
    }

    pub fn dims(&self) -> &ProcessDims {
        &self.dims
    }

    pub fn omega(&self) -> &[u32] {
        &self.omega
    }

    /// `ω_k(o⃗)`.
    pub fn component(&self, k: usize, o: usize) -> usize {
        self.dims.input_radix.digit(self.omega[o] as usize, k)
    }

    pub fn to_stochastic(&self) -> StochasticProcess {
        let cols = self.dims.num_outputs();
        let mut entries = vec![Num::zero(); self.dims.num_inputs() * cols];
        for (o, &i) in self.omega.iter().enumerate() {
            entries[i as usize * cols + o] = Num::one();
        }
        StochasticProcess { dims: self.dims.clone(), entries }
    }

    /// The vertex with the same table (outputs as settings, inputs as outcomes).
    pub fn to_vertex(&self) -> Vertex {
        Vertex::new(self.dims.as_scenario(), self.omega.clone()).expect("matching dims")
    }

    pub fn to_json(&self) -> Value {
        json!({ "dims": self.dims, "omega": self.omega })
    }

    pub fn from_json(v: &Value) -> Result<QuasiProcessFunction> {
        let dims: ProcessDims = serde_json::from_value(v.get("dims").cloned().unwrap_or(Value::Null))?;
        let omega: Vec<u32> = serde_json::from_value(v.get("omega").cloned().unwrap_or(Value::Null))?;
        QuasiProcessFunction::new(dims, omega)
    }
}

/// Conditional distribution `P(i⃗|o⃗)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticProcess {
    dims: ProcessDims,
    entries: Vec<Num>,
}

impl StochasticProcess {
    /// Rows indexed by input tuple, columns by output tuple.
    pub fn new(dims: ProcessDims, rows: Vec<Vec<Num>>) -> Result<StochasticProcess> {
        if rows.len() != dims.num_inputs() || rows.iter().any(|r| r.len() != dims.num_outputs()) {
            return Err(Error::DimensionMismatch(format!(
                "process table must be {}x{}",
                dims.num_inputs(),
                dims.num_outputs()
            )));
        }
        StochasticProcess::from_entries(dims, rows.into_iter().flatten().collect())
    }

    pub fn from_entries(dims: ProcessDims, entries: Vec<Num>) -> Result<StochasticProcess> {
        if entries.len() != dims.num_inputs() * dims.num_outputs() {
            return Err(Error::DimensionMismatch("process table size".into()));
        }
        let p = StochasticProcess { dims, entries };
        let eps = if p.entries.iter().all(Num::is_exact) { 0.0 } else { DEFAULT_EPS };
        if let Some(v) = p.entries.iter().find(|v| v.is_negative_eps(eps)) {
            return Err(Error::NotStochastic(format!("negative entry {v}")));
        }
        for o in 0..p.dims.num_outputs() {
            let s: Num = (0..p.dims.num_inputs()).map(|i| p.get(i, o)).sum();
            if !s.approx_eq(&Num::one(), eps.max(DEFAULT_EPS)) {
                return Err(Error::NotStochastic(format!("column {o} sums to {s}")));
            }
        }
        Ok(p)
    }

    pub fn dims(&self) -> &ProcessDims {
        &self.dims
    }

    pub fn entries(&self) -> &[Num] {
        &self.entries
    }

    /// `P(i⃗|o⃗)`.
    pub fn get(&self, i: usize, o: usize) -> &Num {
        &self.entries[i * self.dims.num_outputs() + o]
    }

    pub fn mode(&self) -> NumericMode {
        mode_of(&self.entries)
    }

    pub fn rows(&self) -> Vec<Vec<Num>> {
        self.entries.chunks(self.dims.num_outputs()).map(|c| c.to_vec()).collect()
    }

    /// The quasi-process function, if every column is a point mass.
    pub fn as_function(&self) -> Option<QuasiProcessFunction> {
        let omega = (0..self.dims.num_outputs())
            .map(|o| {
                let ones: Vec<usize> = (0..self.dims.num_inputs())
                    .filter(|&i| self.get(i, o).approx_eq(&Num::one(), DEFAULT_EPS))
                    .collect();
                (ones.len() == 1).then(|| ones[0] as u32)
            })
            .collect::<Option<Vec<_>>>()?;
        QuasiProcessFunction::new(self.dims.clone(), omega).ok()
    }

    /// Convex combination of processes with identical dims.
    pub fn mix(items: &[(Num, &StochasticProcess)]) -> Result<StochasticProcess> {
        let Some((_, first)) = items.first() else {
            return Err(Error::WeightSum("empty mixture".into()));
        };
        let total: Num = items.iter().map(|(w, _)| w).sum();
        if items.iter().any(|(w, _)| w.is_negative_eps(DEFAULT_EPS)) || !total.approx_eq(&Num::one(), DEFAULT_EPS) {
            return Err(Error::WeightSum(format!("weights sum to {total}")));
        }
        if items.iter().any(|(_, p)| p.dims != first.dims) {
            return Err(Error::DimensionMismatch("mixture of different dims".into()));
        }
        let mut entries = vec![Num::zero(); first.entries.len()];
        for (w, p) in items {
            for (e, v) in entries.iter_mut().zip(&p.entries) {
                if !v.is_zero_eps(0.0) {
                    *e = &*e + &(w * v);
                }
            }
        }
        StochasticProcess::from_entries(first.dims.clone(), entries)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dims": self.dims,
            "numeric": self.mode(),
            "table": self.rows().iter().map(|r| r.iter().map(Num::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<StochasticProcess> {
        let dims: ProcessDims = serde_json::from_value(v.get("dims").cloned().unwrap_or(Value::Null))?;
        let rows = parse_table(v.get("table"))?;
        let rows = if v.get("numeric").and_then(Value::as_str) == Some("double") {
            rows.into_iter().map(|r| r.into_iter().map(|n| n.to_approx()).collect()).collect()
        } else {
            rows
        };
        StochasticProcess::new(dims, rows)
    }
}

/// Cardinalities of one party's local operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionShape {
    pub settings: usize,
    pub inputs: usize,
    pub outcomes: usize,
    pub outputs: usize,
}

/// Local operation `p(x_k, o_k | a_k, i_k)` of one party.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalIntervention {
    /// `(x, o) = (φ(a, i), ψ(a, i))`, tables indexed by `a·|I| + i`.
    Deterministic { shape: InterventionShape, phi: Vec<u32>, psi: Vec<u32> },
    /// Entries indexed by `((a·|I| + i)·|X| + x)·|O| + o`.
    Stochastic { shape: InterventionShape, table: Vec<Num> },
}

impl LocalIntervention {
    pub fn deterministic(
        shape: InterventionShape,
        f: impl Fn(usize, usize) -> (usize, usize),
    ) -> Result<LocalIntervention> {
        let mut phi = Vec::new();
        let mut psi = Vec::new();
        for a in 0..shape.settings {
            for i in 0..shape.inputs {
                let (x, o) = f(a, i);
                if x >= shape.outcomes || o >= shape.outputs {
                    return Err(Error::InvalidInput(format!("intervention value ({x},{o}) out of range")));
                }
                phi.push(x as u32);
                psi.push(o as u32);
            }
        }
        Ok(LocalIntervention::Deterministic { shape, phi, psi })
    }

    /// `x = i`, `o = a`.
    pub fn pass_through(inputs: usize, outputs: usize) -> LocalIntervention {
        let shape = InterventionShape { settings: outputs, inputs, outcomes: inputs, outputs };
        LocalIntervention::deterministic(shape, |a, i| (i, a)).expect("in range")
    }

    pub fn stochastic(shape: InterventionShape, table: Vec<Num>) -> Result<LocalIntervention> {
        let block = shape.outcomes * shape.outputs;
        if table.len() != shape.settings * shape.inputs * block {
            return Err(Error::DimensionMismatch("intervention table size".into()));
        }
        let eps = if table.iter().all(Num::is_exact) { 0.0 } else { DEFAULT_EPS };
        if table.iter().any(|v| v.is_negative_eps(eps)) {
            return Err(Error::NotStochastic("negative intervention entry".into()));
        }
        for (j, chunk) in table.chunks(block).enumerate() {
            let s: Num = chunk.iter().sum();
            if !s.approx_eq(&Num::one(), eps.max(DEFAULT_EPS)) {
                return Err(Error::NotStochastic(format!("intervention block {j} sums to {s}")));
            }
        }
        Ok(LocalIntervention::Stochastic { shape, table })
    }

    pub fn shape(&self) -> InterventionShape {
        match self {
            LocalIntervention::Deterministic { shape, .. } | LocalIntervention::Stochastic { shape, .. } => *shape,
        }
    }

    /// `p(x, o | a, i)`.
    pub fn prob(&self, x: usize, o: usize, a: usize, i: usize) -> Num {
        match self {
            LocalIntervention::Deterministic { shape, phi, psi } => {
                let j = a * shape.inputs + i;
                if phi[j] as usize == x && psi[j] as usize == o {
                    Num::one()
                } else {
                    Num::zero()
                }
            }
            LocalIntervention::Stochastic { shape, table } => {
                table[((a * shape.inputs + i) * shape.outcomes + x) * shape.outputs + o].clone()
            }
        }
    }

    /// Nonzero `(x, o, p)` for a given `(a, i)`.
    fn support(&self, a: usize, i: usize) -> Vec<(usize, usize, Num)> {
        match self {
            LocalIntervention::Deterministic { shape, phi, psi } => {
                let j = a * shape.inputs + i;
                vec![(phi[j] as usize, psi[j] as usize, Num::one())]
            }
            LocalIntervention::Stochastic { shape, table } => {
                let base = (a * shape.inputs + i) * shape.outcomes * shape.outputs;
                let mut out = Vec::new();
                for x in 0..shape.outcomes {
                    for o in 0..shape.outputs {
                        let v = &table[base + x * shape.outputs + o];
                        if !v.is_zero_eps(0.0) {
                            out.push((x, o, v.clone()));
                        }
                    }
                }
                out
            }
        }
    }
}

/// Correlation table produced by a (possibly inconsistent) quasi-process.
#[derive(Clone, Debug, PartialEq)]
pub struct RawCorrelation {
    pub scenario: Scenario,
    pub entries: Vec<Num>,
    pub column_sums: Vec<Num>,
    pub normalized: bool,
}

impl RawCorrelation {
    pub fn into_correlation(self) -> Result<Correlation> {
        if !self.normalized {
            let bad: Vec<String> = self.column_sums.iter().map(|s| s.to_string()).collect();
            return Err(Error::NotNormalized(format!("column sums [{}]", bad.join(", "))));
        }
        Correlation::from_entries(self.scenario, self.entries)
    }

    pub fn to_json(&self) -> Value {
        let cols = self.scenario.num_settings();
        json!({
            "scenario": self.scenario,
            "numeric": mode_of(&self.entries),
            "table": self.entries.chunks(cols).map(|r| r.iter().map(Num::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "normalization": {
                "normalized": self.normalized,
                "column_sums": self.column_sums.iter().map(Num::to_json).collect::<Vec<_>>(),
            },
        })
    }
}

/// `p(x⃗|a⃗) = Σ_{i⃗,o⃗} ∏_k p(x_k,o_k|a_k,i_k) P(i⃗|o⃗)`.
pub fn correlation_from_process(p: &StochasticProcess, iv: &[LocalIntervention]) -> Result<RawCorrelation> {
    let dims = p.dims();
    let n = dims.parties();
    if iv.len() != n {
        return Err(Error::DimensionMismatch(format!("{} interventions for {n} parties", iv.len())));
    }
    for (k, l) in iv.iter().enumerate() {
        let sh = l.shape();
        if sh.inputs != dims.inputs[k] || sh.outputs != dims.outputs[k] {
            return Err(Error::DimensionMismatch(format!("intervention {} does not match process dims", k + 1)));
        }
    }
    let scenario = Scenario::new(
        iv.iter().map(|l| l.shape().settings).collect(),
        iv.iter().map(|l| l.shape().outcomes).collect(),
    )?;
    let work = (scenario.num_settings() as u128)
        * (scenario.num_outcomes() as u128)
        * (dims.num_inputs() as u128)
        * (dims.num_outputs() as u128);
    if work > 1 << 28 {
        return Err(Error::CapExceeded { what: "process correlation terms", count: work, cap: 1 << 28 });
    }
    let sr = scenario.setting_radix();
    let xr = scenario.outcome_radix();
    let ir = dims.input_radix();
    let or = dims.output_radix();
    let cols = scenario.num_settings();
    let mut entries = vec![Num::zero(); scenario.num_outcomes() * cols];
    for a in 0..cols {
        for i in 0..dims.num_inputs() {
            // Joint local response as a list of (x⃗, o⃗, weight).
            let mut joint: Vec<(usize, usize, Num)> = vec![(0, 0, Num::one())];
            for (k, l) in iv.iter().enumerate() {
                let sup = l.support(sr.digit(a, k), ir.digit(i, k));
                let mut next = Vec::with_capacity(joint.len() * sup.len());
                for (x, o, w) in &joint {
                    for (xk, ok, wk) in &sup {
                        next.push((x + xk * xr.stride(k), o + ok * or.stride(k), w * wk));
                    }
                }
                joint = next;
            }
            for (x, o, w) in joint {
                let pio = p.get(i, o);
                if !pio.is_zero_eps(0.0) {
                    let e = &mut entries[x * cols + a];
                    *e = &*e + &(w * pio);
                }
            }
        }
    }
    let column_sums: Vec<Num> = (0..cols).map(|a| (0..scenario.num_outcomes()).map(|x| &entries[x * cols + a]).sum()).collect();
    let exact = entries.iter().all(Num::is_exact);
    let tol = if exact { 0.0 } else { DEFAULT_EPS };
    let normalized = column_sums.iter().all(|s| s.approx_eq(&Num::one(), tol));
    Ok(RawCorrelation { scenario, entries, column_sums, normalized })
}

/// Process and pass-through interventions reproducing `p` exactly.
pub fn quasi_realize(p: &Correlation) -> (StochasticProcess, Vec<LocalIntervention>) {
    let s = p.scenario();
    let dims = ProcessDims::of_scenario(s);
    let process = StochasticProcess { dims, entries: p.entries().to_vec() };
    let iv = s.outcomes().iter().zip(s.settings()).map(|(&d, &m)| LocalIntervention::pass_through(d, m)).collect();
    (process, iv)
}

/// Edge `k → l` iff `ω_l` depends on `o_k`.
pub fn causal_structure(w: &QuasiProcessFunction) -> Digraph {
    signalling_edges(&w.dims.as_scenario(), &w.omega)
}

/// A deterministic intervention tuple, one table `h_k[i_k] = o_k` per party.
pub type InterventionTables = Vec<Vec<usize>>;

/// An intervention tuple violating fixed-point uniqueness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FixedPointWitness {
    pub intervention: InterventionTables,
    pub fixed_points: usize,
}

/// Verdict of the unique-fixed-point test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProcessFunctionCheck {
    pub is_process_function: bool,
    pub witness: Option<FixedPointWitness>,
}

/// Enumeration of deterministic intervention tuples for a given dims.
#[derive(Clone, Debug)]
pub struct InterventionSpace {
    dims: ProcessDims,
    /// Per-party radix over `h_k` tables.
    table_radix: Vec<Radix>,
    /// Radix over tuples of table indices.
    tuple_radix: Radix,
}

impl InterventionSpace {
    pub fn new(dims: &ProcessDims) -> Result<InterventionSpace> {
        let count = dims.intervention_count().unwrap_or(u128::MAX);
        if count > INTERVENTION_CAP {
            return Err(Error::CapExceeded { what: "intervention tuples", count, cap: INTERVENTION_CAP });
        }
        let table_radix: Vec<Radix> =
            dims.inputs.iter().zip(&dims.outputs).map(|(&i, &o)| Radix::new(&vec![o; i])).collect();
        let tuple_radix = Radix::new(&table_radix.iter().map(Radix::size).collect::<Vec<_>>());
        Ok(InterventionSpace { dims: dims.clone(), table_radix, tuple_radix })
    }

    pub fn len(&self) -> usize {
        self.tuple_radix.size()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-party tables of intervention tuple `h`.
    pub fn tables(&self, h: usize) -> InterventionTables {
        (0..self.dims.parties()).map(|k| self.table_radix[k].tuple(self.tuple_radix.digit(h, k))).collect()
    }

    /// Output tuple `h(i⃗)`.
    pub fn apply(&self, h: usize, i: usize) -> usize {
        (0..self.dims.parties())
            .map(|k| {
                let table = self.tuple_radix.digit(h, k);
                let ik = self.dims.input_radix.digit(i, k);
                self.table_radix[k].digit(table, ik) * self.dims.output_radix.stride(k)
            })
            .sum()
    }

    fn nonconstant_parts(&self, h: usize) -> usize {
        (0..self.dims.parties())
            .filter(|&k| {
                let t = self.table_radix[k].tuple(self.tuple_radix.digit(h, k));
                t.iter().any(|&v| v != t[0])
            })
            .count()
    }

    /// Tuple indices with at least one nonconstant component, most
    /// nonconstant components first, then by index.
    pub fn search_order(&self) -> Vec<usize> {
        let mut order: Vec<(usize, usize)> =
            (0..self.len()).map(|h| (self.nonconstant_parts(h), h)).filter(|(c, _)| *c > 0).collect();
        order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        order.into_iter().map(|(_, h)| h).collect()
    }
}

/// Precomputed `h(i⃗)` for every nonconstant intervention tuple.
/// Constant tuples always give exactly one fixed point and are skipped.
#[derive(Clone, Debug)]
pub struct FixedPointKernel {
    space: InterventionSpace,
    order: Vec<usize>,
    num_inputs: usize,
    /// Row `j` holds `h(i⃗)` for `h = order[j]` and all `i⃗`.
    outputs: Option<Vec<u32>>,
}

impl FixedPointKernel {
    pub fn new(dims: &ProcessDims) -> Result<FixedPointKernel> {
        let space = InterventionSpace::new(dims)?;
        let order = space.search_order();
        let num_inputs = dims.num_inputs();
        let outputs = ((order.len() as u128) * (num_inputs as u128) <= KERNEL_CAP).then(|| {
            order.iter().flat_map(|&h| (0..num_inputs).map(move |i| (h, i))).map(|(h, i)| space.apply(h, i) as u32).collect()
        });
        Ok(FixedPointKernel { space, order, num_inputs, outputs })
    }

    pub fn space(&self) -> &InterventionSpace {
        &self.space
    }

    fn count_row(&self, omega: &[u32], j: usize) -> usize {
        match &self.outputs {
            Some(t) => {
                let row = &t[j * self.num_inputs..(j + 1) * self.num_inputs];
                row.iter().enumerate().filter(|(i, &o)| omega[o as usize] as usize == *i).count()
            }
            None => {
                let h = self.order[j];
                (0..self.num_inputs).filter(|&i| omega[self.space.apply(h, i)] as usize == i).count()
            }
        }
    }

    /// First intervention tuple (in search order) without a unique fixed point.
    pub fn first_failure(&self, omega: &[u32]) -> Option<(usize, usize)> {
        (0..self.order.len()).find_map(|j| {
            let c = self.count_row(omega, j);
            (c != 1).then_some((self.order[j], c))
        })
    }

    pub fn is_process_function(&self, omega: &[u32]) -> bool {
        match &self.outputs {
            Some(t) => t.chunks_exact(self.num_inputs).all(|row| {
                let mut c = 0;
                for (i, &o) in row.iter().enumerate() {
                    if omega[o as usize] as usize == i {
                        c += 1;
                        if c > 1 {
                            return false;
                        }
                    }
                }
                c == 1
            }),
            None => self.first_failure(omega).is_none(),
        }
    }

    pub fn check(&self, omega: &[u32]) -> ProcessFunctionCheck {
        match self.first_failure(omega) {
            None => ProcessFunctionCheck { is_process_function: true, witness: None },
            Some((h, c)) => ProcessFunctionCheck {
                is_process_function: false,
                witness: Some(FixedPointWitness { intervention: self.space.tables(h), fixed_points: c }),
            },
        }
    }
}

fn kernel_cache() -> &'static Mutex<HashMap<ProcessDims, Arc<FixedPointKernel>>> {
    static CACHE: OnceLock<Mutex<HashMap<ProcessDims, Arc<FixedPointKernel>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Shared kernel for `dims`.
pub fn fixed_point_kernel(dims: &ProcessDims) -> Result<Arc<FixedPointKernel>> {
    if let Some(k) = kernel_cache().lock().expect("kernel cache").get(dims) {
        return Ok(k.clone());
    }
    let k = Arc::new(FixedPointKernel::new(dims)?);
    kernel_cache().lock().expect("kernel cache").insert(dims.clone(), k.clone());
    Ok(k)
}

/// Unique fixed point of `ω∘h` for every deterministic intervention tuple `h`.
pub fn is_process_function(w: &QuasiProcessFunction) -> Result<ProcessFunctionCheck> {
    Ok(fixed_point_kernel(&w.dims)?.check(&w.omega))
}

/// Number of fixed points of `ω∘h` for explicit intervention tables.
pub fn count_fixed_points(w: &QuasiProcessFunction, h: &InterventionTables) -> Result<usize> {
    let d = &w.dims;
    if h.len() != d.parties() || h.iter().zip(&d.inputs).any(|(t, &i)| t.len() != i) {
        return Err(Error::DimensionMismatch("intervention tables".into()));
    }
    if h.iter().zip(&d.outputs).any(|(t, &o)| t.iter().any(|&v| v >= o)) {
        return Err(Error::InvalidInput("intervention value out of range".into()));
    }
    Ok((0..d.num_inputs())
        .filter(|&i| {
            let o: usize = (0..d.parties()).map(|k| h[k][d.input_radix.digit(i, k)] * d.output_radix.stride(k)).sum();
            w.omega[o] as usize == i
        })
        .count())
}

/// Verdict of the logical-consistency test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyCheck {
    pub consistent: bool,
    /// Failing intervention tuple and its total probability `Σ_i P(i⃗|h(i⃗))`.
    pub witness: Option<(InterventionTables, Num)>,
}

/// `Σ_{i⃗} P(i⃗|h(i⃗)) = 1` for every deterministic intervention tuple `h`.
pub fn is_logically_consistent(p: &StochasticProcess) -> Result<ConsistencyCheck> {
    let space = InterventionSpace::new(p.dims())?;
    let exact = p.entries.iter().all(Num::is_exact);
    let tol = if exact { 0.0 } else { DEFAULT_EPS };
    let one = Num::one();
    let failure = (0..space.len()).into_par_iter().find_first(|&h| {
        let total: Num = (0..p.dims.num_inputs()).map(|i| p.get(i, space.apply(h, i))).sum();
        !total.approx_eq(&one, tol)
    });
    Ok(match failure {
        None => ConsistencyCheck { consistent: true, witness: None },
        Some(h) => {
            let total: Num = (0..p.dims.num_inputs()).map(|i| p.get(i, space.apply(h, i))).sum();
            ConsistencyCheck { consistent: false, witness: Some((space.tables(h), total)) }
        }
    })
}

fn procfn_cache() -> &'static Mutex<HashMap<ProcessDims, Arc<Vec<u64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<ProcessDims, Arc<Vec<u64>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Codes of all process functions for `dims`, ascending; cached per dims.
pub fn process_function_codes(dims: &ProcessDims, cap: u128) -> Result<Arc<Vec<u64>>> {
    if let Some(c) = procfn_cache().lock().expect("procfn cache").get(dims) {
        return Ok(c.clone());
    }
    let count = dims.candidate_count().unwrap_or(u128::MAX);
    if count > cap || count > u64::MAX as u128 {
        return Err(Error::CapExceeded { what: "candidate functions", count, cap });
    }
    let kernel = fixed_point_kernel(dims)?;
    let radix = dims.num_inputs() as u64;
    let len = dims.num_outputs();
    let codes: Vec<u64> = chunk_ranges(count as u64)
        .into_par_iter()
        .flat_map_iter(|(lo, hi)| {
            let mut omega = vec![0u32; len];
            let mut out = Vec::new();
            for code in lo..hi {
                decode_code(code, radix, &mut omega);
                if kernel.is_process_function(&omega) {
                    out.push(code);
                }
            }
            out
        })
        .collect();
    let codes = Arc::new(codes);
    procfn_cache().lock().expect("procfn cache").insert(dims.clone(), codes.clone());
    Ok(codes)
}

/// All process functions for `dims`, ordered by code.
pub fn enumerate_process_functions(dims: &ProcessDims, cap: u128) -> Result<Vec<QuasiProcessFunction>> {
    process_function_codes(dims, cap)?.iter().map(|&c| QuasiProcessFunction::from_code(dims.clone(), c)).collect()
}

/// `i₁ = ō₂o₃, i₂ = ō₃o₁, i₃ = ō₁o₂`.
pub fn afbw_function() -> QuasiProcessFunction {
    QuasiProcessFunction::from_fn(ProcessDims::uniform(3, 2).expect("dims"), |o| {
        vec![(1 - o[1]) & o[2], (1 - o[2]) & o[0], (1 - o[0]) & o[1]]
    })
    .expect("binary values")
}

/// The 64 relabellings `ω'(o⃗) = ω(o⃗ ⊕ L') ⊕ L`, listed at index `8L + L'`
/// with `L`, `L'` as 3-bit masks in tuple order; index 0 is the canonical function.
pub fn afbw_family() -> Vec<QuasiProcessFunction> {
    let base = afbw_function();
    let mut out = Vec::with_capacity(64);
    for l in 0..8u32 {
        for lp in 0..8usize {
            let omega = (0..8).map(|o| base.omega[o ^ lp] ^ l).collect();
            out.push(QuasiProcessFunction::new(base.dims.clone(), omega).expect("binary values"));
        }
    }
    out
}

/// The two causal loops `i⃗ = (o₃, o₁, o₂)` and `i⃗ = (ō₃, ō₁, ō₂)`.
pub fn bfw_loops() -> (QuasiProcessFunction, QuasiProcessFunction) {
    let dims = ProcessDims::uniform(3, 2).expect("dims");
    let a = QuasiProcessFunction::from_fn(dims.clone(), |o| vec![o[2], o[0], o[1]]).expect("binary");
    let b = QuasiProcessFunction::from_fn(dims, |o| vec![1 - o[2], 1 - o[0], 1 - o[1]]).expect("binary");
    (a, b)
}

/// Equal mixture of the two loops of [`bfw_loops`].
pub fn bfw_process() -> StochasticProcess {
    let (a, b) = bfw_loops();
    StochasticProcess::mix(&[(Num::ratio(1, 2), &a.to_stochastic()), (Num::ratio(1, 2), &b.to_stochastic())])
        .expect("valid mixture")
}

/// Convex decomposition over process functions, or a Farkas certificate.
#[derive(Clone, Debug, PartialEq)]
pub enum DepMembership {
    Member(Vec<(Num, QuasiProcessFunction)>),
    /// `y` over table entries with `y·P > 0` and `y·ω ≤ 0` for every process function.
    NonMember(Vec<Num>),
}

/// Rows of the 0/1 table of `ω`.
pub fn function_rows(w: &QuasiProcessFunction) -> Vec<usize> {
    let cols = w.dims.num_outputs();
    w.omega.iter().enumerate().map(|(o, &i)| i as usize * cols + o).collect()
}

/// Membership in the hull of all process functions with the same dims.
pub fn dep_membership(p: &StochasticProcess, cap: u128) -> Result<DepMembership> {
    let dims = p.dims();
    let codes = process_function_codes(dims, cap)?;
    let exact = p.entries.iter().all(Num::is_exact);
    let eps = if exact { 0.0 } else { DEFAULT_EPS };
    let radix = dims.num_inputs() as u64;
    let mut omega = vec![0u32; dims.num_outputs()];
    let mut kept = Vec::new();
    let mut columns = Vec::new();
    for &c in codes.iter() {
        decode_code(c, radix, &mut omega);
        if omega.iter().enumerate().all(|(o, &i)| !p.get(i as usize, o).is_zero_eps(eps)) {
            let w = QuasiProcessFunction::new(dims.clone(), omega.clone())?;
            columns.push(function_rows(&w));
            kept.push(w);
        }
    }
    Ok(match decompose(&p.entries, &columns, None, true)? {
        HullResult::Feasible { weights, .. } => {
            DepMembership::Member(weights.into_iter().map(|(j, w)| (w, kept[j].clone())).collect())
        }
        HullResult::Infeasible { farkas } => DepMembership::NonMember(farkas),
    })
}

/// Diagonal lift of a process table into intervention form, used by
/// cross-checks: `p(x,o|a,i)` from a stochastic map.
pub fn intervention_from_fn(shape: InterventionShape, p: impl Fn(usize, usize, usize, usize) -> Num) -> Result<LocalIntervention> {
    let mut table = Vec::with_capacity(shape.settings * shape.inputs * shape.outcomes * shape.outputs);
    for a in 0..shape.settings {
        for i in 0..shape.inputs {
            for x in 0..shape.outcomes {
                for o in 0..shape.outputs {
                    table.push(p(x, o, a, i));
                }
            }
        }
    }
    LocalIntervention::stochastic(shape, table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn afbw_is_process_function() {
        assert!(is_process_function(&afbw_function()).unwrap().is_process_function);
    }

    #[test]
    fn identity_loop_has_two_fixed_points() {
        let w = QuasiProcessFunction::from_fn(ProcessDims::uniform(1, 2).unwrap(), |o| vec![o[0]]).unwrap();
        let c = is_process_function(&w).unwrap();
        assert!(!c.is_process_function);
        let wit = c.witness.unwrap();
        assert_eq!(wit.intervention, vec![vec![0, 1]]);
        assert_eq!(wit.fixed_points, 2);
    }

    #[test]
    fn parity_function_fails_under_identity() {
        let w = QuasiProcessFunction::from_fn(ProcessDims::uniform(3, 2).unwrap(), |o| {
            vec![o[1] ^ o[2], o[2] ^ o[0], o[0] ^ o[1]]
        })
        .unwrap();
        let wit = is_process_function(&w).unwrap().witness.unwrap();
        assert_eq!(wit.intervention, vec![vec![0, 1]; 3]);
        assert_eq!(wit.fixed_points, 4);
        assert_eq!(count_fixed_points(&w, &wit.intervention).unwrap(), 4);
    }

    #[test]
    fn constant_is_process_function() {
        let w = QuasiProcessFunction::from_fn(ProcessDims::uniform(2, 3).unwrap(), |_| vec![2, 1]).unwrap();
        assert!(is_process_function(&w).unwrap().is_process_function);
    }

    #[test]
    fn bfw_consistent_loops_not() {
        assert!(is_logically_consistent(&bfw_process()).unwrap().consistent);
        let (a, _) = bfw_loops();
        assert!(!is_logically_consistent(&a.to_stochastic()).unwrap().consistent);
    }

    #[test]
    fn afbw_family_is_distinct() {
        let fam = afbw_family();
        let mut codes: Vec<u64> = fam.iter().map(QuasiProcessFunction::code).collect();
        codes.sort_unstable();
        codes.dedup();
        assert_eq!(codes.len(), 64);
        assert_eq!(fam[0], afbw_function());
    }

    #[test]
    fn code_round_trip() {
        let w = afbw_function();
        assert_eq!(QuasiProcessFunction::from_code(w.dims().clone(), w.code()).unwrap(), w);
    }

    #[test]
    fn causal_structure_examples() {
        assert_eq!(causal_structure(&afbw_function()), Digraph::complete(3).unwrap());
        let swap = QuasiProcessFunction::from_fn(ProcessDims::uniform(2, 2).unwrap(), |o| vec![o[1], o[0]]).unwrap();
        assert_eq!(causal_structure(&swap), Digraph::from_edges(2, &[(0, 1), (1, 0)]).unwrap());
    }

    #[test]
    fn bipartite_process_functions_are_causal() {
        let fs = enumerate_process_functions(&ProcessDims::uniform(2, 2).unwrap(), CANDIDATE_CAP).unwrap();
        assert!(!fs.is_empty());
        for f in &fs {
            assert!(causal_structure(f).is_acyclic());
        }
    }
}
