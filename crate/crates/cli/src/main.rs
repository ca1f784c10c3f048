//! `pcsp`: command-line front end.
//!
//! Every command writes one canonical JSON report (sorted keys, no
//! whitespace) to stdout. Exit codes: 0 positive verdict, 1 negative
//! verdict, 2 inconclusive or resource limit, 64 usage error, 65 data error.

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcsp::analysis::{hypergraph_metrics, is_balanced, is_functional, is_symmetric};
use pcsp::catalog;
use pcsp::classifier::{classify, solve_instance, ClassifierBounds, Outcome};
use pcsp::derivation::{check_sufficient_conditions, delta, derives, gamma, is_super_connected, DerivationContext};
use pcsp::polymorphisms::{enumerate_polymorphisms, exists_factored_polymorphism, FactoredConfig, FactoredKind};
use pcsp::relaxations::{solve_aip, solve_blp, solve_blp_aip};
use pcsp::{Error, SearchConfig, Structure};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

const EXIT_POSITIVE: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

#[derive(Parser)]
#[command(name = "pcsp", version, about = "Analyze and classify promise CSP templates")]
struct Cli {
    /// Print a human-readable summary to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    /// Node limit for every backtracking search.
    #[arg(long, global = true, default_value_t = pcsp::search::DEFAULT_MAX_NODES)]
    max_nodes: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural properties of one structure.
    Analyze {
        /// Catalog key (e.g. `eqn(3,1)`) or path to a JSON structure.
        #[arg(long)]
        structure: String,
    },
    /// Tractable or NP-hard, for symmetric A and functional B.
    Classify {
        #[command(flatten)]
        template: Template,
        /// Largest modulus tried; defaults to |B|^(|A|^2).
        #[arg(long)]
        m_max: Option<u64>,
    },
    /// Run a relaxation on an instance.
    Relax {
        #[arg(long, value_enum)]
        method: Method,
        /// The structure the instance is tested against.
        #[arg(long)]
        template: String,
        #[arg(long)]
        instance: String,
    },
    /// Solve an instance of a tractable template through its sandwich.
    Solve {
        #[command(flatten)]
        template: Template,
        #[arg(long)]
        instance: String,
        #[arg(long)]
        m_max: Option<u64>,
    },
    /// Enumerate polymorphisms, or search for a symmetric one.
    Poly {
        #[command(flatten)]
        template: Template,
        /// Arity for plain enumeration.
        #[arg(long, default_value_t = 3)]
        arity: usize,
        /// Search for a polymorphism of this kind and arity 2k+1 instead.
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Maximum number of polymorphisms enumerated.
        #[arg(long, default_value_t = 10_000)]
        enum_cap: usize,
    },
    /// Derive a tuple from Γ or Δ with the matrix rule.
    Derive {
        #[arg(long)]
        structure: String,
        #[arg(long, default_value = "R")]
        relation: String,
        #[arg(long, value_enum, default_value_t = Premises::Gamma)]
        premises: Premises,
        /// Comma-separated target tuple, e.g. `1,1,0`.
        #[arg(long, value_delimiter = ',', required = true)]
        target: Vec<usize>,
    },
    /// List catalog entries, or print one as JSON.
    Catalog { key: Option<String> },
}

#[derive(Args)]
struct Template {
    #[arg(long = "A", alias = "a")]
    a: String,
    #[arg(long = "B", alias = "b")]
    b: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Blp,
    Aip,
    #[value(name = "blp+aip")]
    BlpAip,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Alternating,
    BlockSymmetric,
}

#[derive(Clone, Copy, ValueEnum)]
enum Premises {
    Gamma,
    Delta,
}

/// Failure before a verdict: exit code and message.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ResourceLimit(_) => EXIT_INCONCLUSIVE,
            Error::UnknownKey(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure(code, e.to_string())
    }
}

struct Context {
    inputs: Vec<(String, String)>,
    verbose: bool,
}

impl Context {
    /// Catalog key or file path; a file wins when both exist.
    fn load(&mut self, spec: &str) -> Result<Structure, Failure> {
        let path = Path::new(spec);
        let s = if path.is_file() {
            if catalog::is_catalog_key(spec) {
                eprintln!("warning: `{spec}` is both a file and a catalog key; using the file");
            }
            let text = std::fs::read_to_string(path).map_err(|e| Failure(EXIT_DATA, format!("{spec}: {e}")))?;
            Structure::from_json(&text)?
        } else if catalog::is_catalog_key(spec) {
            catalog::lookup(spec).map_err(|e| match e {
                Error::Invalid(m) => Failure(EXIT_USAGE, m),
                other => other.into(),
            })?
        } else {
            return Err(Failure(EXIT_USAGE, format!("`{spec}` is neither a file nor a catalog key")));
        };
        self.inputs.push((spec.to_string(), s.to_json()));
        Ok(s)
    }

    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (name, body) in &self.inputs {
            h.update(name.as_bytes());
            h.update([0]);
            h.update(body.as_bytes());
            h.update([0]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn run(cli: &Cli, ctx: &mut Context) -> Result<(u8, Value, Value), Failure> {
    let search = SearchConfig { max_nodes: Some(cli.max_nodes), time_limit: None };
    let limits = json!({ "max_nodes": cli.max_nodes });
    match &cli.command {
        Command::Analyze { structure } => {
            let s = ctx.load(structure)?;
            let mut relations = Vec::new();
            let mut all_balanced = true;
            for r in s.relations() {
                let balanced = if r.is_empty() { None } else { is_balanced(r)? };
                all_balanced &= balanced.is_some();
                let metrics = hypergraph_metrics(&s, r.name())?;
                relations.push(json!({
                    "name": r.name(),
                    "arity": r.arity(),
                    "size": r.len(),
                    "balanced": balanced.is_some(),
                    "balance_witness": balanced,
                    "diameter": metrics.diameter,
                    "connected": metrics.connected,
                }));
            }
            let sc = is_super_connected(&s)?;
            let sufficient = check_sufficient_conditions(&s)?;
            ctx.note(match &sc {
                Some(r) => format!("super-connected via {r}"),
                None => "not super-connected".to_string(),
            });
            let result = json!({
                "symmetric": is_symmetric(&s),
                "functional": is_functional(&s),
                "balanced": all_balanced,
                "super_connected": sc.is_some(),
                "super_connected_relation": sc,
                "sufficient_conditions": sufficient,
                "relations": relations,
            });
            Ok((EXIT_POSITIVE, result, limits))
        }
        Command::Classify { template, m_max } => {
            let (a, b) = (ctx.load(&template.a)?, ctx.load(&template.b)?);
            let bounds = bounds_for(&a, &b, *m_max, search);
            let v = classify(&a, &b, &bounds)?;
            let code = match v.outcome {
                Outcome::Tractable { .. } | Outcome::TractableByComponents { .. } => EXIT_POSITIVE,
                Outcome::NpHard { .. } => EXIT_NEGATIVE,
                Outcome::Inconclusive { .. } => EXIT_INCONCLUSIVE,
            };
            ctx.note(format!("{:?}", v.outcome));
            let limits = json!({ "max_nodes": cli.max_nodes, "m_max": bounds.m_max });
            Ok((code, to_value(&v), limits))
        }
        Command::Relax { method, template, instance } => {
            let (t, x) = (ctx.load(template)?, ctx.load(instance)?);
            let v = match method {
                Method::Blp => solve_blp(&x, &t)?,
                Method::Aip => solve_aip(&x, &t)?,
                Method::BlpAip => solve_blp_aip(&x, &t)?,
            };
            ctx.note(v.to_string());
            Ok((if v.accepted { EXIT_POSITIVE } else { EXIT_NEGATIVE }, to_value(&v), limits))
        }
        Command::Solve { template, instance, m_max } => {
            let (a, b, x) = (ctx.load(&template.a)?, ctx.load(&template.b)?, ctx.load(instance)?);
            let bounds = bounds_for(&a, &b, *m_max, search);
            let v = classify(&a, &b, &bounds)?;
            let limits = json!({ "max_nodes": cli.max_nodes, "m_max": bounds.m_max });
            match &v.outcome {
                Outcome::NpHard { .. } => return Ok((EXIT_NEGATIVE, json!({ "verdict": to_value(&v) }), limits)),
                Outcome::Inconclusive { .. } => return Ok((EXIT_INCONCLUSIVE, json!({ "verdict": to_value(&v) }), limits)),
                _ => {}
            }
            match solve_instance(&x, &a, &b, &v) {
                Ok(h) => Ok((EXIT_POSITIVE, json!({ "homomorphism": h }), limits)),
                Err(Error::PromiseViolation(why)) => {
                    ctx.note(&why);
                    Ok((EXIT_NEGATIVE, json!({ "promise_violation": why }), limits))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Poly { template, arity, kind, k, enum_cap } => {
            let (a, b) = (ctx.load(&template.a)?, ctx.load(&template.b)?);
            match kind {
                Some(kind) => {
                    let kind = match kind {
                        Kind::Alternating => FactoredKind::Alternating,
                        Kind::BlockSymmetric => FactoredKind::BlockSymmetric,
                    };
                    let config = FactoredConfig { search, ..FactoredConfig::default() };
                    let found = exists_factored_polymorphism(&a, &b, kind, *k, &config)?;
                    let code = if found.is_some() { EXIT_POSITIVE } else { EXIT_NEGATIVE };
                    let limits = json!({ "max_nodes": cli.max_nodes, "set_cap": config.set_cap });
                    Ok((code, json!({ "kind": kind, "k": k, "arity": 2 * k + 1, "table": found }), limits))
                }
                None => {
                    let pol = enumerate_polymorphisms(&a, &b, *arity, &search, *enum_cap)?;
                    let tables: Vec<&[usize]> = pol.iter().map(|f| f.values()).collect();
                    let code = if pol.is_empty() { EXIT_NEGATIVE } else { EXIT_POSITIVE };
                    let limits = json!({ "max_nodes": cli.max_nodes, "enum_cap": enum_cap });
                    Ok((code, json!({ "arity": arity, "count": pol.len(), "tables": tables }), limits))
                }
            }
        }
        Command::Derive { structure, relation, premises, target } => {
            let s = ctx.load(structure)?;
            let n = target.len();
            let dctx = DerivationContext::new(&s, relation, n)?;
            let premise_set = match premises {
                Premises::Gamma if n == 3 => gamma(&s),
                Premises::Gamma => return Err(Failure(EXIT_USAGE, "Γ premises need a target of length 3".into())),
                Premises::Delta => delta(&s, n),
            };
            if target.iter().any(|&x| x >= s.domain_size()) {
                return Err(Failure(EXIT_DATA, "target entry outside the domain".into()));
            }
            let tree = derives(&dctx, &premise_set, target)?;
            let code = if tree.is_some() { EXIT_POSITIVE } else { EXIT_NEGATIVE };
            Ok((code, json!({ "derivable": tree.is_some(), "proof": tree }), limits))
        }
        Command::Catalog { key } => match key {
            None => {
                let entries: Vec<Value> = catalog::ENTRIES
                    .iter()
                    .map(|e| json!({ "key": e.key, "params": e.params, "description": e.description }))
                    .collect();
                Ok((EXIT_POSITIVE, json!({ "entries": entries }), limits))
            }
            Some(key) => {
                let s = ctx.load(key)?;
                let structure: Value = serde_json::from_str(&s.to_json()).expect("structure JSON re-parses");
                Ok((EXIT_POSITIVE, json!({ "structure": structure }), limits))
            }
        },
    }
}

fn bounds_for(a: &Structure, b: &Structure, m_max: Option<u64>, search: SearchConfig) -> ClassifierBounds {
    let mut bounds = ClassifierBounds::for_template(a, b);
    bounds.search = search;
    if let Some(m) = m_max {
        bounds = bounds.with_m_max(m);
    }
    bounds
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_POSITIVE };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut ctx = Context { inputs: Vec::new(), verbose: cli.verbose };
    let start = Instant::now();
    let outcome = run(&cli, &mut ctx);
    ctx.note(format!("elapsed: {:.3?}", start.elapsed()));
    let command: Vec<&str> = args.iter().skip(1).map(String::as_str).collect();
    match outcome {
        Ok((code, result, limits)) => {
            let report = json!({
                "command": command,
                "inputs_digest": ctx.digest(),
                "limits": limits,
                "result": result,
                "exit_code": code,
            });
            emit(&report);
            ExitCode::from(code)
        }
        Err(Failure(code, message)) => {
            let report = json!({
                "command": command,
                "inputs_digest": ctx.digest(),
                "error": message,
                "exit_code": code,
            });
            emit(&report);
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

/// Writes one compact JSON line; a closed pipe is not an error.
fn emit(report: &Value) {
    let line = serde_json::to_string(report).expect("reports serialize");
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}
