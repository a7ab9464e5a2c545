//! `corrkit`: JSON front end for the corrkit analyses.
//!
//! Every subcommand loads its inputs, calls one library function and
//! writes a run report `{command, inputs_digest, numeric_mode, results}`
//! to stdout or `--out`. Exit status is 2 for bad input, 1 when an
//! analysis cannot be completed or a reproduction check fails, 0 otherwise.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use corrkit::antinomy::{dc_membership, is_dc_vertex, robustness_of_antinomy, RobustnessPool};
use corrkit::causality::{causal_membership, classify_scenario, is_causal_vertex, CausalCertificate, DEFAULT_VERTEX_CAP};
use corrkit::pools::MembershipResult;
use corrkit::process::{
    causal_structure, correlation_from_process, dep_membership, enumerate_process_functions, is_logically_consistent,
    is_process_function, DepMembership, LocalIntervention, ProcessDims, QuasiProcessFunction, StochasticProcess,
    CANDIDATE_CAP,
};
use corrkit::quantum::{check_process_matrix, gyni_instruments, pm_correlation, w_of_q, ProcessMatrix, QuantumInstrument};
use corrkit::reproduce::{section_checks, Section};
use corrkit::scenario::signalling_graph;
use corrkit::witnesses::{max_over, maximal_violators, named, vertices_exceeding, MaxPool, Witness};
use corrkit::{Correlation, Num, NumericMode, Scenario, Vertex, DEFAULT_EPS};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "corrkit", version, about = "Causality, classicality and antinomy of process correlations")]
struct Cli {
    /// Arithmetic for loaded tables: exact rationals or doubles.
    #[arg(long, global = true, value_enum, default_value_t = Mode::Rational)]
    mode: Mode,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include wall-clock timings in the report.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Rational,
    Double,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Signalling-class census of all vertices of a uniform scenario.
    Census {
        #[arg(long, value_name = "N,M,D")]
        scenario: String,
        /// Also write the census as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Causality of a vertex, or causal-polytope membership of a correlation.
    CheckCausal {
        #[arg(long)]
        input: PathBuf,
    },
    /// Unique-fixed-point test of a quasi-process function.
    CheckProcfn {
        #[arg(long)]
        input: PathBuf,
    },
    /// Logical consistency of a classical quasi-process.
    CheckConsistent {
        #[arg(long)]
        input: PathBuf,
        /// Also test membership in the hull of process functions.
        #[arg(long)]
        dep: bool,
    },
    /// Deterministic-consistency verdict of a vertex or correlation.
    DcVerdict {
        #[arg(long)]
        input: PathBuf,
    },
    /// Robustness of antinomy of a correlation.
    Robustness {
        #[arg(long)]
        input: PathBuf,
        /// `full` or `file:<path>` with a JSON array of vertices.
        #[arg(long, default_value = "full")]
        pool: String,
    },
    /// Evaluate, maximize or list violators of a witness.
    Witness {
        #[command(subcommand)]
        action: WitnessCommand,
    },
    /// Correlation of a process matrix under local instruments.
    QuantumCorr {
        /// Process matrix JSON.
        #[arg(long, conflicts_with = "q")]
        process: Option<PathBuf>,
        /// Use the bipartite family member `W(q)`.
        #[arg(long)]
        q: Option<f64>,
        /// `gyni` or a JSON array of instruments, one per party.
        #[arg(long, default_value = "gyni")]
        instruments: String,
    },
    /// All process functions with the given per-party alphabet sizes.
    EnumerateProcfns {
        #[arg(long, value_name = "D1,D2,...")]
        inputs: String,
        /// Defaults to the input sizes.
        #[arg(long, value_name = "D1,D2,...")]
        outputs: Option<String>,
        #[arg(long, default_value_t = CANDIDATE_CAP)]
        cap: u128,
    },
    /// Recompute the reference values and print PASS/FAIL per check.
    ReproducePaper {
        #[arg(long, default_value = "all", value_name = "4|5|A|all")]
        section: String,
    },
}

#[derive(Subcommand, Debug)]
enum WitnessCommand {
    Eval {
        #[command(flatten)]
        witness: WitnessArg,
        #[arg(long)]
        input: PathBuf,
    },
    Max {
        #[command(flatten)]
        witness: WitnessArg,
        #[arg(long, value_enum, default_value_t = PoolArg::Causal)]
        pool: PoolArg,
    },
    Violators {
        #[command(flatten)]
        witness: WitnessArg,
        /// List vertices scoring strictly above this value instead.
        #[arg(long)]
        above: Option<String>,
    },
}

#[derive(Args, Debug)]
struct WitnessArg {
    /// `gyni`, `lgyni`, `afbw`, `gynin`, `gyni:a0,a1,b0,b1` or `lgyni:...`.
    #[arg(long, conflicts_with = "witness")]
    name: Option<String>,
    /// Witness JSON file.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PoolArg {
    All,
    Causal,
    Classical,
    Procfn,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn bad_input(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Failure {
        let code = match error.downcast_ref::<corrkit::Error>() {
            Some(corrkit::Error::CapExceeded { .. } | corrkit::Error::Lp(_) | corrkit::Error::NotNormalized(_)) => 1,
            _ => 2,
        };
        Failure { code, error }
    }
}

impl From<corrkit::Error> for Failure {
    fn from(e: corrkit::Error) -> Failure {
        Failure::from(anyhow::Error::new(e))
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Loaded inputs and their digest.
struct Inputs {
    hasher: Sha256,
    mode: Mode,
}

enum Input {
    Vertex(Vertex),
    Correlation(Correlation),
    Function(QuasiProcessFunction),
    Process(StochasticProcess),
}

impl Inputs {
    fn new(command: &Command, mode: Mode) -> Inputs {
        let mut hasher = Sha256::new();
        hasher.update(format!("{command:?}").as_bytes());
        Inputs { hasher, mode }
    }

    fn json(&mut self, path: &Path) -> Outcome<Value> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(bad_input)?;
        self.hasher.update(&bytes);
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display())).map_err(bad_input)
    }

    fn load(&mut self, path: &Path) -> Outcome<Input> {
        let v = self.json(path)?;
        let input = if v.get("f").is_some() {
            Input::Vertex(Vertex::from_json(&v)?)
        } else if v.get("omega").is_some() {
            Input::Function(QuasiProcessFunction::from_json(&v)?)
        } else if v.get("dims").is_some() {
            Input::Process(self.process(StochasticProcess::from_json(&v)?)?)
        } else if v.get("scenario").is_some() {
            Input::Correlation(self.correlation(Correlation::from_json(&v)?)?)
        } else {
            return Err(bad_input(anyhow!("{}: not a vertex, correlation, process or process function", path.display())));
        };
        Ok(input)
    }

    fn correlation(&self, c: Correlation) -> Outcome<Correlation> {
        match self.mode {
            Mode::Rational => Ok(c),
            Mode::Double => {
                let entries = c.entries().iter().map(Num::to_approx).collect();
                Ok(Correlation::from_entries(c.scenario().clone(), entries)?)
            }
        }
    }

    fn process(&self, p: StochasticProcess) -> Outcome<StochasticProcess> {
        match self.mode {
            Mode::Rational => Ok(p),
            Mode::Double => Ok(StochasticProcess::from_entries(p.dims().clone(), p.entries().iter().map(Num::to_approx).collect())?),
        }
    }

    fn digest(self) -> String {
        self.hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_list(s: &str) -> Outcome<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad integer {t:?} in {s:?}")))
        .collect::<anyhow::Result<_>>()
        .map_err(bad_input)
}

fn parse_scenario(s: &str) -> Outcome<Scenario> {
    match parse_list(s)?[..] {
        [n, m, d] => Ok(Scenario::uniform(n, m, d)?),
        _ => Err(bad_input(anyhow!("--scenario expects N,M,D, got {s:?}"))),
    }
}

fn membership_json(m: &MembershipResult) -> Value {
    match m {
        MembershipResult::Member(d) => json!({
            "member": true,
            "decomposition": d.iter().map(|(w, v)| json!({"weight": w, "vertex": v.to_json()})).collect::<Vec<_>>(),
        }),
        MembershipResult::NonMember(y) => json!({"member": false, "certificate": y}),
    }
}

fn pass_through(p: &StochasticProcess) -> Outcome<Correlation> {
    let d = p.dims();
    let iv: Vec<LocalIntervention> =
        (0..d.parties()).map(|k| LocalIntervention::pass_through(d.inputs()[k], d.outputs()[k])).collect();
    Ok(correlation_from_process(p, &iv)?.into_correlation()?)
}

/// The input as a correlation; processes act under pass-through interventions.
fn as_correlation(input: Input) -> Outcome<Correlation> {
    match input {
        Input::Vertex(v) => Ok(v.to_correlation()),
        Input::Correlation(c) => Ok(c),
        Input::Function(f) => pass_through(&f.to_stochastic()),
        Input::Process(p) => pass_through(&p),
    }
}

fn load_witness(arg: &WitnessArg, inputs: &mut Inputs) -> Outcome<Witness> {
    match (&arg.name, &arg.witness) {
        (Some(n), None) => Ok(named(n)?),
        (None, Some(p)) => Ok(Witness::from_json(&inputs.json(p)?)?),
        _ => Err(bad_input(anyhow!("give exactly one of --name or --witness"))),
    }
}

fn run_witness(action: &WitnessCommand, inputs: &mut Inputs) -> Outcome<Value> {
    match action {
        WitnessCommand::Eval { witness, input } => {
            let w = load_witness(witness, inputs)?;
            let input = inputs.load(input)?;
            let p = as_correlation(input)?;
            let value = w.evaluate(&p)?;
            Ok(json!({"witness": w.name(), "value": value, "value_f64": value.to_f64()}))
        }
        WitnessCommand::Max { witness, pool } => {
            let w = load_witness(witness, inputs)?;
            let pool = match pool {
                PoolArg::All => MaxPool::All,
                PoolArg::Causal => MaxPool::Causal,
                PoolArg::Classical => MaxPool::Classical,
                PoolArg::Procfn => {
                    let dims = ProcessDims::of_scenario(w.scenario());
                    MaxPool::ProcessFunctions(enumerate_process_functions(&dims, CANDIDATE_CAP)?)
                }
            };
            let (value, arg) = max_over(&w, &pool)?;
            Ok(json!({"witness": w.name(), "value": value, "value_f64": value.to_f64(), "argmax": arg.to_json()}))
        }
        WitnessCommand::Violators { witness, above } => {
            let w = load_witness(witness, inputs)?;
            let (threshold, vs) = match above {
                None => (None, maximal_violators(&w)?),
                Some(t) => {
                    let t = Num::parse_rational(t)?;
                    let vs = vertices_exceeding(&w, &t)?;
                    (Some(t), vs)
                }
            };
            Ok(json!({
                "witness": w.name(),
                "above": threshold,
                "count": vs.len(),
                "vertices": vs.iter().map(Vertex::table).collect::<Vec<_>>(),
            }))
        }
    }
}

fn load_instruments(source: &str, parties: usize, inputs: &mut Inputs) -> Outcome<Vec<QuantumInstrument>> {
    if source == "gyni" {
        if parties != 2 {
            return Err(bad_input(anyhow!("the gyni instruments are bipartite")));
        }
        return Ok(gyni_instruments());
    }
    let v = inputs.json(Path::new(source))?;
    let list = v.as_array().ok_or_else(|| bad_input(anyhow!("instrument file must hold a JSON array")))?;
    Ok(list.iter().map(QuantumInstrument::from_json).collect::<corrkit::Result<Vec<_>>>()?)
}

fn run(cli: &Cli, inputs: &mut Inputs) -> Outcome<(Value, bool, Value)> {
    let mut timings = json!({});
    let value = match &cli.command {
        Command::Census { scenario, csv } => {
            let census = classify_scenario(&parse_scenario(scenario)?, DEFAULT_VERTEX_CAP)?;
            if let Some(path) = csv {
                fs::write(path, census.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            }
            census.to_json()
        }
        Command::CheckCausal { input } => match inputs.load(input)? {
            Input::Vertex(v) => {
                let g = signalling_graph(&v);
                json!({
                    "vertex": v.to_json(),
                    "causal": is_causal_vertex(&v),
                    "signalling_graph": g.to_json(),
                    "siblings_on_cycles": g.has_siblings_on_cycles()?,
                })
            }
            other => {
                let p = as_correlation(other)?;
                match causal_membership(&p)? {
                    CausalCertificate::Decomposition(d) => membership_json(&MembershipResult::Member(d)),
                    CausalCertificate::Separation(y) => membership_json(&MembershipResult::NonMember(y)),
                }
            }
        },
        Command::CheckProcfn { input } => {
            let Input::Function(f) = inputs.load(input)? else {
                return Err(bad_input(anyhow!("check-procfn expects a quasi-process function {{dims, omega}}")));
            };
            let check = is_process_function(&f)?;
            let g = causal_structure(&f);
            json!({
                "process_function": check.is_process_function,
                "witness": check.witness,
                "causal_structure": g.to_json(),
                "siblings_on_cycles": g.has_siblings_on_cycles()?,
            })
        }
        Command::CheckConsistent { input, dep } => {
            let p = match inputs.load(input)? {
                Input::Function(f) => f.to_stochastic(),
                Input::Process(p) => p,
                _ => return Err(bad_input(anyhow!("check-consistent expects a classical process {{dims, table}}"))),
            };
            let c = is_logically_consistent(&p)?;
            let mut out = json!({
                "consistent": c.consistent,
                "witness": c.witness.map(|(h, total)| json!({"intervention": h, "total_probability": total})),
            });
            if *dep {
                out["dep_membership"] = match dep_membership(&p, CANDIDATE_CAP)? {
                    DepMembership::Member(d) => json!({
                        "member": true,
                        "decomposition": d.iter().map(|(w, f)| json!({"weight": w, "omega": f.omega()})).collect::<Vec<_>>(),
                    }),
                    DepMembership::NonMember(y) => json!({"member": false, "certificate": y}),
                };
            }
            out
        }
        Command::DcVerdict { input } => match inputs.load(input)? {
            Input::Vertex(v) => is_dc_vertex(&v)?.to_json(),
            other => membership_json(&dc_membership(&as_correlation(other)?)?),
        },
        Command::Robustness { input, pool } => {
            let p = as_correlation(inputs.load(input)?)?;
            let pool = match pool.as_str() {
                "full" => RobustnessPool::Full,
                source => {
                    let Some(path) = source.strip_prefix("file:") else {
                        return Err(bad_input(anyhow!("--pool expects full or file:<path>, got {source:?}")));
                    };
                    let v = inputs.json(Path::new(path))?;
                    let list = v.as_array().ok_or_else(|| bad_input(anyhow!("pool file must hold a JSON array of vertices")))?;
                    RobustnessPool::Restricted(list.iter().map(Vertex::from_json).collect::<corrkit::Result<Vec<_>>>()?)
                }
            };
            robustness_of_antinomy(&p, &pool)?.to_json()
        }
        Command::Witness { action } => run_witness(action, inputs)?,
        Command::QuantumCorr { process, q, instruments } => {
            let w = match (process, q) {
                (Some(path), None) => ProcessMatrix::from_json(&inputs.json(path)?)?,
                (None, Some(q)) => w_of_q(*q),
                _ => return Err(bad_input(anyhow!("give exactly one of --process or --q"))),
            };
            let iv = load_instruments(instruments, w.dims().len(), inputs)?;
            let validity = check_process_matrix(&w, DEFAULT_EPS)?;
            let p = pm_correlation(&w, &iv)?;
            json!({"correlation": p.to_json(), "validity": validity})
        }
        Command::EnumerateProcfns { inputs: ins, outputs, cap } => {
            let i = parse_list(ins)?;
            let o = match outputs {
                Some(o) => parse_list(o)?,
                None => i.clone(),
            };
            let dims = ProcessDims::new(i, o)?;
            let fs = enumerate_process_functions(&dims, *cap)?;
            json!({
                "dims": dims,
                "count": fs.len(),
                "functions": fs.iter().map(QuasiProcessFunction::omega).collect::<Vec<_>>(),
            })
        }
        Command::ReproducePaper { section } => {
            let mut checks = Vec::new();
            for s in Section::parse(section)? {
                checks.extend(section_checks(s)?);
            }
            for c in &checks {
                eprintln!("{}", c.line());
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            timings["checks"] = checks.iter().map(|c| json!({"id": c.id, "seconds": c.seconds})).collect();
            let value = json!({"checks": checks, "passed": checks.len() - failed, "failed": failed});
            return Ok((value, failed == 0, timings));
        }
    };
    Ok((value, true, timings))
}

fn numeric_mode(cli: &Cli) -> NumericMode {
    if matches!(cli.command, Command::QuantumCorr { .. }) {
        return NumericMode::Double;
    }
    match cli.mode {
        Mode::Rational => NumericMode::Rational,
        Mode::Double => NumericMode::Double,
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Census { .. } => "census",
        Command::CheckCausal { .. } => "check-causal",
        Command::CheckProcfn { .. } => "check-procfn",
        Command::CheckConsistent { .. } => "check-consistent",
        Command::DcVerdict { .. } => "dc-verdict",
        Command::Robustness { .. } => "robustness",
        Command::Witness { action: WitnessCommand::Eval { .. } } => "witness eval",
        Command::Witness { action: WitnessCommand::Max { .. } } => "witness max",
        Command::Witness { action: WitnessCommand::Violators { .. } } => "witness violators",
        Command::QuantumCorr { .. } => "quantum-corr",
        Command::EnumerateProcfns { .. } => "enumerate-procfns",
        Command::ReproducePaper { .. } => "reproduce-paper",
    }
}

fn main_inner(cli: &Cli) -> Outcome<bool> {
    if let Some(k) = cli.jobs {
        if k == 0 {
            return Err(bad_input(anyhow!("--jobs must be positive")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().context("starting worker pool")?;
    }
    let start = Instant::now();
    let mut inputs = Inputs::new(&cli.command, cli.mode);
    let (results, ok, mut timings) = run(cli, &mut inputs)?;
    let mut report = json!({
        "command": command_name(&cli.command),
        "inputs_digest": inputs.digest(),
        "numeric_mode": numeric_mode(cli),
        "results": results,
    });
    if cli.timings {
        timings["total_seconds"] = json!(start.elapsed().as_secs_f64());
        report["timings"] = timings;
    }
    let text = serde_json::to_string_pretty(&report).context("serializing report")? + "\n";
    match &cli.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        let cap = corrkit::Error::CapExceeded { what: "x", count: 2, cap: 1 };
        assert_eq!(Failure::from(cap).code, 1);
        assert_eq!(Failure::from(corrkit::Error::Parse("x".into())).code, 2);
        assert_eq!(bad_input(anyhow!("x")).code, 2);
    }

    #[test]
    fn scenario_argument() {
        assert_eq!(parse_scenario("2,2,2").ok().map(|s| s.num_settings()), Some(4));
        assert!(parse_scenario("2,2").is_err());
    }
}
