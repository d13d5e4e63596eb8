use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use treelineage::automaton::{compile_query_with_cap, AutomatonJson, Bdta, DEFAULT_STATE_CAP};
use treelineage::circuit::{build_lineage_circuit, check_ddnnf, Circuit, CircuitJson, LineageCircuit};
use treelineage::decomposition::{
    decompose_pathwidth, decompose_treewidth, tree_encode, validate_decomposition, DecompositionJson,
    TreeDecomposition,
};
use treelineage::intricacy::is_intricate;
use treelineage::model::{
    generate_instance, parse_probabilities, FactSet, Family, Instance, InstanceJson,
    ProbabilityValuation,
};
use treelineage::obdd::{compile_to_obdd_with, EquivalenceStrategy, ObddJson};
use treelineage::probability::{
    brute_force_probability, circuit_probability_with_cap, ddnnf_probability, lineage_ddnnf_probability,
    DEFAULT_WIDTH_CAP,
};
use treelineage::query::{evaluate_on, parse_query, InversionFreeExpression, UcqNeq};
use treelineage::unfold::{unfold, verify_one_direction, verify_respects};

#[derive(Parser)]
#[command(name = "treelineage", version, about = "Lineage compilation on treelike instances")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Largest number of automaton states.
    #[arg(long, global = true)]
    cap_states: Option<usize>,
    /// Largest circuit-decomposition width for message passing.
    #[arg(long, global = true)]
    cap_width: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    All,
    Brute,
    Circuit,
    Ddnnf,
    Obdd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    Auto,
    Brute,
    Difference,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Shape {
    Line,
    Grid,
    Tree,
    Bipartite,
    Random,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance.
    Gen {
        #[arg(value_enum)]
        family: Shape,
        #[arg(long, default_value_t = 5)]
        n: usize,
        /// Attach probability 1/2 to every fact.
        #[arg(long)]
        half: bool,
    },
    /// Add a tree (or path) decomposition.
    Decompose {
        #[arg(short, long, default_value = "-")]
        input: String,
        #[arg(long)]
        path: bool,
    },
    /// Add the tree encoding.
    Encode {
        #[arg(short, long, default_value = "-")]
        input: String,
    },
    /// Build the lineage circuit of a query or of an explicit automaton.
    Compile {
        #[arg(short, long, default_value = "-")]
        input: String,
        #[arg(short, long, conflicts_with = "automaton")]
        query: Option<String>,
        #[arg(short, long)]
        automaton: Option<String>,
    },
    /// Compile the circuit into an OBDD.
    ToObdd {
        #[arg(short, long, default_value = "-")]
        input: String,
        #[arg(long, value_enum, default_value_t = Strategy::Auto)]
        strategy: Strategy,
    },
    /// Check the circuit is a d-DNNF.
    ToDdnnf {
        #[arg(short, long, default_value = "-")]
        input: String,
    },
    /// Query probability.
    Prob {
        #[arg(short, long)]
        query: String,
        #[arg(short, long)]
        input: String,
        #[arg(short, long)]
        probabilities: Option<String>,
        #[arg(long, value_enum, default_value_t = Engine::All)]
        engine: Engine,
        #[arg(long)]
        path: bool,
    },
    /// Compare the lineage circuit with query evaluation on every valuation.
    OracleCheck {
        #[arg(short, long)]
        query: String,
        #[arg(short, long)]
        input: String,
    },
    /// Decide intricacy of a connected query.
    Intricate {
        #[arg(short, long)]
        query: String,
    },
    /// Unfold a ranked instance for an inversion-free expression.
    Unfold {
        #[arg(short, long)]
        expression: String,
        #[arg(short, long)]
        input: String,
    },
    /// Check that the unfolding keeps the lineage.
    VerifyRespects {
        #[arg(short, long)]
        expression: String,
        #[arg(short, long)]
        input: String,
        /// Query to check instead of the expression itself.
        #[arg(short, long)]
        query: Option<String>,
    },
}

/// What flows between pipeline stages.
#[derive(Default, Serialize, Deserialize)]
struct Bundle {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance: Option<InstanceJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    decomposition: Option<DecompositionJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    encoding: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    circuit: Option<CircuitJson>,
}

enum Fail {
    Usage(String),
    Check(Value),
}

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail::Usage(e.to_string())
    }
}

type Out = Result<String, Fail>;

fn read(source: &str) -> Result<String, Fail> {
    if source == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(source).map_err(|e| Fail::Usage(format!("{source}: {e}")))
    }
}

fn read_bundle(source: &str) -> Result<Bundle, Fail> {
    let v: Value = serde_json::from_str(&read(source)?)?;
    if v.get("signature").is_some() {
        return Ok(Bundle {
            instance: Some(serde_json::from_value(v)?),
            ..Bundle::default()
        });
    }
    Ok(serde_json::from_value(v)?)
}

fn instance_of(b: &Bundle) -> Result<Instance, Fail> {
    Ok(b.instance.as_ref().ok_or(Fail::Usage("input has no instance".into()))?.to_instance()?)
}

/// Query text, or a file holding the text, a JSON string or `{"query": ...}`.
fn read_query(arg: &str) -> Result<UcqNeq, Fail> {
    let text = if Path::new(arg).is_file() { fs::read_to_string(arg)? } else { arg.to_string() };
    let text = match serde_json::from_str::<Value>(&text) {
        Ok(Value::String(s)) => s,
        Ok(Value::Object(o)) => o
            .get("query")
            .and_then(Value::as_str)
            .ok_or(Fail::Usage("query object needs a `query` string".into()))?
            .to_string(),
        _ => text,
    };
    Ok(parse_query(text.trim())?)
}

fn decomposition_of(b: &Bundle, inst: &Instance, path: bool) -> Result<TreeDecomposition, Fail> {
    match &b.decomposition {
        Some(d) => {
            let td = d.to_instance_decomposition(inst)?;
            validate_decomposition(inst, &td, None)?;
            Ok(td)
        }
        None if path => Ok(decompose_pathwidth(inst).into_tree()),
        None => Ok(decompose_treewidth(inst, None)),
    }
}

fn lineage(cli: &Cli, q: &UcqNeq, inst: &Instance, td: &TreeDecomposition) -> Result<LineageCircuit, Fail> {
    let enc = tree_encode(inst, td)?;
    let a = compile_query_with_cap(q, enc.width(), cli.cap_states.unwrap_or(DEFAULT_STATE_CAP))?;
    Ok(build_lineage_circuit(&a, &enc)?)
}

fn pretty<T: Serialize>(v: &T) -> Out {
    Ok(serde_json::to_string_pretty(v)?)
}

fn circuit_of(b: &Bundle) -> Result<(Circuit, TreeDecomposition), Fail> {
    let j = b.circuit.as_ref().ok_or(Fail::Usage("input has no circuit".into()))?;
    let (c, cd) = Circuit::from_json(j)?;
    Ok((c, cd.ok_or(Fail::Usage("circuit has no decomposition".into()))?))
}

fn gen(cli: &Cli, family: Shape, n: usize, half: bool) -> Out {
    let fam = match family {
        Shape::Line => Family::line(n),
        Shape::Grid => Family::Grid { side: n },
        Shape::Tree => Family::Tree { nodes: n, seed: cli.seed },
        Shape::Bipartite => Family::CompleteBipartite { left: n, right: n },
        Shape::Random => Family::Random {
            elements: n,
            relations: vec![("R".into(), 2, 0.3), ("S".into(), 1, 0.5)],
            seed: cli.seed,
        },
    };
    let inst = generate_instance(&fam)?;
    let probs = half.then(|| ProbabilityValuation::half(inst.len()));
    pretty(&InstanceJson::from_instance(&inst, probs.as_ref()))
}

fn probabilities(inst: &Instance, file: Option<&str>, from_instance: Option<ProbabilityValuation>) -> Result<ProbabilityValuation, Fail> {
    match file {
        Some(f) => {
            let text = read(f)?;
            if text.trim() == "\"half\"" || text.trim() == "half" {
                return Ok(ProbabilityValuation::half(inst.len()));
            }
            Ok(parse_probabilities(&serde_json::from_str(&text)?, inst.len())?)
        }
        None => Ok(from_instance.unwrap_or_else(|| ProbabilityValuation::half(inst.len()))),
    }
}

fn prob(cli: &Cli, query: &str, input: &str, pfile: Option<&str>, engine: Engine, path: bool) -> Out {
    let q = read_query(query)?;
    let b = read_bundle(input)?;
    let raw = b.instance.as_ref().ok_or(Fail::Usage("input has no instance".into()))?;
    let (inst, own) = raw.to_probabilistic()?;
    let pi = probabilities(&inst, pfile, own)?;
    let td = decomposition_of(&b, &inst, path)?;
    let lc = lineage(cli, &q, &inst, &td)?;
    let mut results: Vec<(&str, String)> = Vec::new();
    let all = engine == Engine::All;
    if all || engine == Engine::Brute {
        results.push(("brute", brute_force_probability(&q, &inst, &pi)?.to_string()));
    }
    if all || engine == Engine::Circuit {
        let cap = cli.cap_width.unwrap_or(DEFAULT_WIDTH_CAP);
        results.push(("circuit", circuit_probability_with_cap(&lc.circuit, &lc.decomposition, &pi, cap)?.to_string()));
    }
    if all || engine == Engine::Ddnnf {
        let p = if lc.circuit.input_gates().len() <= treelineage::circuit::DETERMINISM_INPUT_LIMIT {
            ddnnf_probability(&lc.circuit, &pi)?
        } else {
            lineage_ddnnf_probability(&lc, &pi)?
        };
        results.push(("ddnnf", p.to_string()));
    }
    if all || engine == Engine::Obdd {
        let o = compile_to_obdd_with(&lc.circuit, &lc.decomposition, EquivalenceStrategy::Auto)?;
        results.push(("obdd", o.probability(&pi)?.to_string()));
    }
    let rows: Vec<Value> = results
        .iter()
        .map(|(e, p)| json!({"engine": e, "probability": p}))
        .collect();
    if results.windows(2).any(|w| w[0].1 != w[1].1) {
        return Err(Fail::Check(json!({"error": "engines disagree", "results": rows})));
    }
    pretty(&rows)
}

fn oracle_check(cli: &Cli, query: &str, input: &str) -> Out {
    let q = read_query(query)?;
    let b = read_bundle(input)?;
    let inst = instance_of(&b)?;
    let n = inst.len();
    if n > 24 {
        return Err(Fail::Usage(format!("{n} facts is too many for an exhaustive check")));
    }
    let td = decomposition_of(&b, &inst, false)?;
    let lc = lineage(cli, &q, &inst, &td)?;
    lc.circuit.check_decomposition(&lc.decomposition)?;
    for m in 0..1u64 << n {
        let v = FactSet::from_mask(m, n);
        let (got, want) = (lc.circuit.evaluate(&v)?, evaluate_on(&q, &inst, &v));
        if got != want {
            return Err(Fail::Check(json!({
                "error": "lineage mismatch",
                "valuation": v.iter().collect::<Vec<_>>(),
                "circuit": got,
                "query": want,
            })));
        }
    }
    pretty(&json!({"facts": n, "valuations": 1u64 << n, "gates": lc.circuit.size(), "ok": true}))
}

fn read_expression(arg: &str) -> Result<InversionFreeExpression, Fail> {
    Ok(serde_json::from_str(&read(arg)?)?)
}

fn run(cli: &Cli) -> Out {
    match &cli.cmd {
        Cmd::Gen { family, n, half } => gen(cli, *family, *n, *half),
        Cmd::Decompose { input, path } => {
            let mut b = read_bundle(input)?;
            let inst = instance_of(&b)?;
            b.decomposition = None;
            let td = decomposition_of(&b, &inst, *path)?;
            b.decomposition = Some(DecompositionJson::for_instance(&inst, &td));
            pretty(&b)
        }
        Cmd::Encode { input } => {
            let mut b = read_bundle(input)?;
            let inst = instance_of(&b)?;
            let td = decomposition_of(&b, &inst, false)?;
            let enc = tree_encode(&inst, &td)?;
            b.encoding = Some(
                enc.nodes()
                    .iter()
                    .enumerate()
                    .map(|(i, n)| {
                        json!({
                            "id": i,
                            "label": n.label.render(enc.signature()),
                            "fact": n.fact_id.map(|f| inst.display_fact(inst.fact(f))),
                            "children": n.children,
                        })
                    })
                    .collect(),
            );
            pretty(&b)
        }
        Cmd::Compile { input, query, automaton } => {
            let mut b = read_bundle(input)?;
            let inst = instance_of(&b)?;
            let td = decomposition_of(&b, &inst, false)?;
            let lc = match (query, automaton) {
                (Some(q), _) => {
                    let q = read_query(q)?;
                    b.query = Some(q.to_string());
                    lineage(cli, &q, &inst, &td)?
                }
                (None, Some(a)) => {
                    let a = Bdta::from_json(&serde_json::from_str::<AutomatonJson>(&read(a)?)?)?;
                    build_lineage_circuit(&a, &tree_encode(&inst, &td)?)?
                }
                (None, None) => return Err(Fail::Usage("compile needs --query or --automaton".into())),
            };
            if cli.format == Format::Dot {
                return Ok(lc.circuit.to_dot());
            }
            b.circuit = Some(lc.circuit.to_json(Some(&lc.decomposition)));
            pretty(&b)
        }
        Cmd::ToObdd { input, strategy } => {
            let b = read_bundle(input)?;
            let (c, cd) = circuit_of(&b)?;
            let s = match strategy {
                Strategy::Auto => EquivalenceStrategy::Auto,
                Strategy::Brute => EquivalenceStrategy::BruteForce,
                Strategy::Difference => EquivalenceStrategy::DifferenceCircuit,
            };
            let o = compile_to_obdd_with(&c, &cd, s)?;
            if cli.format == Format::Dot {
                return Ok(o.to_dot());
            }
            let j: ObddJson = o.to_json();
            pretty(&j)
        }
        Cmd::ToDdnnf { input } => {
            let b = read_bundle(input)?;
            let (c, _) = circuit_of(&b)?;
            let r = check_ddnnf(&c)?;
            let report = json!({
                "negation_on_inputs": r.negation_on_inputs,
                "decomposable": r.decomposable,
                "deterministic": r.deterministic,
                "ddnnf": r.is_ddnnf(),
                "violation": r.violation.as_ref().map(|(g, why)| json!({"gate": g, "reason": why})),
            });
            if !r.is_ddnnf() {
                return Err(Fail::Check(report));
            }
            if cli.format == Format::Dot {
                return Ok(c.to_dot());
            }
            pretty(&report)
        }
        Cmd::Prob { query, input, probabilities, engine, path } => {
            prob(cli, query, input, probabilities.as_deref(), *engine, *path)
        }
        Cmd::OracleCheck { query, input } => oracle_check(cli, query, input),
        Cmd::Intricate { query } => {
            let q = read_query(query)?;
            let v = is_intricate(&q)?;
            let witness = v.counterexample.as_ref().map(|l| json!({"pattern": l.pattern(), "steps": l.steps}));
            Ok(format!(
                "intricate: {}\n{}",
                v.intricate,
                serde_json::to_string_pretty(&json!({"intricate": v.intricate, "level": v.level, "counterexample": witness}))?
            ))
        }
        Cmd::Unfold { expression, input } => {
            let e = read_expression(expression)?.validate()?;
            let inst = instance_of(&read_bundle(input)?)?;
            let u = unfold(&inst, &e)?;
            pretty(&u.to_json(&inst))
        }
        Cmd::VerifyRespects { expression, input, query } => {
            let e = read_expression(expression)?.validate()?;
            let inst = instance_of(&read_bundle(input)?)?;
            let q = match query {
                Some(q) => read_query(q)?,
                None => e.to_ucq(),
            };
            let u = unfold(&inst, &e)?;
            verify_one_direction(&inst, &u, &q).map_err(|err| Fail::Check(json!({"error": err.to_string()})))?;
            match verify_respects(&inst, &u, &q) {
                Ok(()) => pretty(&json!({"respects": true, "facts": inst.len(), "height": u.height()})),
                Err(treelineage::unfold::UnfoldError::LineageMismatch { valuation }) => {
                    Err(Fail::Check(json!({"respects": false, "valuation": valuation})))
                }
                Err(other) => Err(other.into()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let _ = writeln!(io::stdout(), "{out}");
            ExitCode::SUCCESS
        }
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Fail::Check(v)) => {
            let _ = writeln!(io::stdout(), "{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            ExitCode::from(1)
        }
    }
}
