use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use borda_forge::election::{evaluate, Profile};
use borda_forge::manipulation::{AlgorithmRegistry, SearchConfig};
use borda_forge::nmts::{random_instance, solve_2nmts, NmtsSolution, TwoNmtsInstance, Variant};
use borda_forge::pipeline::{run_pipeline, PipelineOptions};
use borda_forge::rational::Rational;
use borda_forge::reductions::{
    lifted_profile, validate_reduction, BuildOptions, ConstructionRegistry, ReductionArtifact, DEFAULT_P_CAP,
};
use borda_forge::Error;

const THREADS_ENV: &str = "BORDA_FORGE_THREADS";

/// Exit codes.
const OK: u8 = 0;
const NEGATIVE: u8 = 1;
const REFUSED: u8 = 2;
const BAD_INPUT: u8 = 3;
const FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "borda-forge", version, about = "Weighted Borda manipulation: algorithms, oracles and hardness reductions")]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunConfig {
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Largest candidate count the exact oracle accepts.
    #[arg(long, global = true, default_value_t = SearchConfig::default().enumeration_limit)]
    limit: usize,
    /// Largest group-count parameter tried by the 1 < w < 3 construction.
    #[arg(long, global = true, default_value_t = DEFAULT_P_CAP)]
    p_cap: u64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Standard,
    Restricted,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Standard => Variant::Standard,
            VariantArg::Restricted => Variant::Restricted,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random 2NMTS instance.
    GenNmts {
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value_t = VariantArg::Standard)]
        variant: VariantArg,
        /// Random unit transfers applied to a planted yes-instance.
        #[arg(long, default_value_t = 0)]
        moves: usize,
    },
    /// Solve a 2NMTS instance.
    SolveNmts { instance: PathBuf },
    /// Build the hardness construction for weight `w` and validate it.
    Reduce {
        instance: PathBuf,
        #[arg(long)]
        w: Rational,
        #[arg(long)]
        p: Option<u64>,
    },
    /// Turn a 2NMTS solution into manipulator ballots for an artifact.
    Lift { artifact: PathBuf, solution: PathBuf },
    /// Tally a complete profile.
    Evaluate { profile: PathBuf },
    /// Search for manipulator ballots.
    Manipulate {
        profile: PathBuf,
        #[arg(long, default_value = "oracle")]
        algorithm: String,
    },
    /// Reduce, solve, lift, evaluate and validate in one go.
    Pipeline {
        instance: PathBuf,
        #[arg(long)]
        w: Rational,
        #[arg(long)]
        p: Option<u64>,
        /// Largest m for the exhaustive structured search.
        #[arg(long, default_value_t = PipelineOptions::default().structured_limit)]
        structured_limit: usize,
    },
    /// Re-check every inequality of an artifact.
    Validate { artifact: PathBuf },
    /// Run the pipeline over seeded random instances.
    Bench {
        #[arg(long)]
        w: Rational,
        #[arg(long, value_enum, default_value_t = VariantArg::Standard)]
        variant: VariantArg,
        #[arg(long, default_value_t = 2)]
        m_min: usize,
        #[arg(long, default_value_t = 4)]
        m_max: usize,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        moves: usize,
    },
}

/// A command's outcome: the document to print and the exit code.
struct Outcome {
    doc: Value,
    text: String,
    code: u8,
}

impl Outcome {
    fn new<T: Serialize>(value: &T, text: String, code: u8) -> Outcome {
        Outcome { doc: serde_json::to_value(value).expect("serializable"), text, code }
    }
}

enum Failure {
    Input(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::InvalidBallot(_) | Error::InvalidProfile(_) | Error::InvalidInstance(_) => {
                Failure::Input(e.to_string())
            }
            other => Failure::Domain(other),
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let raw = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&raw).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_instance(path: &Path) -> Result<TwoNmtsInstance, Failure> {
    let inst: TwoNmtsInstance = read_json(path)?;
    inst.validate()?;
    Ok(inst)
}

fn read_artifact(path: &Path) -> Result<ReductionArtifact, Failure> {
    let mut doc: Value = read_json(path)?;
    if let Some(obj) = doc.as_object_mut() {
        obj.remove("validation");
    }
    serde_json::from_value(doc).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let cfg = &cli.config;
    let build_options = |p: Option<u64>| BuildOptions { p, p_cap: cfg.p_cap };
    match &cli.command {
        Command::GenNmts { m, variant, moves } => {
            if *m == 0 {
                return Err(Failure::Input("m must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let inst = random_instance(*m, (*variant).into(), *moves, &mut rng);
            let text = format!("{} m={} a={:?}", inst.variant, inst.m, inst.a);
            Ok(Outcome::new(&inst, text, OK))
        }
        Command::SolveNmts { instance } => {
            let inst = read_instance(instance)?;
            let sol = solve_2nmts(&inst)?;
            let text = match &sol {
                Some(s) => format!("yes p1={:?} p2={:?}", s.p1, s.p2),
                None => "no".to_string(),
            };
            let code = if sol.is_some() { OK } else { NEGATIVE };
            Ok(Outcome::new(&json!({ "solvable": sol.is_some(), "solution": sol }), text, code))
        }
        Command::Reduce { instance, w, p } => {
            let inst = read_instance(instance)?;
            let registry = ConstructionRegistry::default();
            let construction = registry.dispatch(*w, inst.variant)?;
            let art = construction.build(&inst, *w, &build_options(*p))?;
            let report = validate_reduction(&art);
            let mut doc = serde_json::to_value(&art).expect("serializable");
            doc["validation"] = serde_json::to_value(&report).expect("serializable");
            let text = format!(
                "{} z={} F*={} checks={} passed={}",
                construction.name(),
                art.z(),
                art.fstar,
                report.checks.len(),
                report.passed
            );
            Ok(Outcome { doc, text, code: if report.passed { OK } else { NEGATIVE } })
        }
        Command::Lift { artifact, solution } => {
            let art = read_artifact(artifact)?;
            let sol: NmtsSolution = read_json(solution)?;
            let profile = lifted_profile(&art, &sol)?;
            let e = evaluate(&profile)?;
            let text = format!("lifted: target co-wins {}", yes_no(e.success));
            Ok(Outcome::new(&profile, text, if e.success { OK } else { NEGATIVE }))
        }
        Command::Evaluate { profile } => {
            let profile: Profile = read_json(profile)?;
            let e = evaluate(&profile)?;
            let totals: Vec<String> = e.totals.iter().map(|t| t.to_string()).collect();
            let text = format!("success={} winners={:?} totals=[{}]", e.success, e.winners, totals.join(", "));
            Ok(Outcome::new(&e, text, if e.success { OK } else { NEGATIVE }))
        }
        Command::Manipulate { profile, algorithm } => {
            let registry = AlgorithmRegistry::default();
            let alg = registry.get(algorithm).map_err(|e| Failure::Input(e.to_string()))?;
            let profile: Profile = read_json(profile)?;
            let config = SearchConfig { enumeration_limit: cfg.limit, ..SearchConfig::default() };
            match alg.manipulate(&profile.without_manipulators(), &config) {
                Ok(res) => {
                    let code = match (res.found, res.complete) {
                        (true, _) => OK,
                        (false, true) => NEGATIVE,
                        (false, false) => REFUSED,
                    };
                    let text = match code {
                        OK => format!("found m1={:?} m2={:?}", res.m1, res.m2),
                        NEGATIVE => "none exists".to_string(),
                        _ => format!("{} is inconclusive here", alg.name()),
                    };
                    Ok(Outcome::new(&res, text, code))
                }
                Err(e @ Error::EnumerationLimit { .. }) => {
                    let doc = json!({ "refused": e.to_string() });
                    Ok(Outcome { doc, text: format!("refused: {e}"), code: REFUSED })
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Pipeline { instance, w, p, structured_limit } => {
            let inst = read_instance(instance)?;
            let options = PipelineOptions { build: build_options(*p), structured_limit: *structured_limit };
            let (_, report) = run_pipeline(&inst, *w, &options)?;
            let text = format!(
                "{}: verdict {}, solver {}, validation {}, consistent {}",
                report.reduction,
                yes_no(report.verdict),
                yes_no(report.solver_answer),
                if report.validation.passed { "passed" } else { "failed" },
                report.consistent
            );
            Ok(Outcome::new(&report, text, if report.consistent { OK } else { NEGATIVE }))
        }
        Command::Validate { artifact } => {
            let art = read_artifact(artifact)?;
            let report = validate_reduction(&art);
            let text = match report.first_failure() {
                None => format!("all {} checks passed", report.checks.len()),
                Some(c) => format!(
                    "failed {}: {} {} {}{}",
                    c.name,
                    c.lhs,
                    c.relation,
                    c.rhs,
                    c.location.as_ref().map(|l| format!(" at {l}")).unwrap_or_default()
                ),
            };
            Ok(Outcome::new(&report, text, if report.passed { OK } else { NEGATIVE }))
        }
        Command::Bench { w, variant, m_min, m_max, count, moves } => {
            if m_min > m_max || *m_min == 0 {
                return Err(Failure::Input("need 0 < m-min <= m-max".into()));
            }
            let variant: Variant = (*variant).into();
            let start = Instant::now();
            let runs: Vec<Value> = (0..*count)
                .into_par_iter()
                .map(|k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(k as u64));
                    let m = m_min + k % (m_max - m_min + 1);
                    let inst = random_instance(m, variant, *moves, &mut rng);
                    let options = PipelineOptions { build: build_options(None), ..PipelineOptions::default() };
                    match run_pipeline(&inst, *w, &options) {
                        Ok((_, r)) => json!({
                            "index": k, "a": inst.a, "reduction": r.reduction, "verdict": r.verdict,
                            "solver_answer": r.solver_answer, "consistent": r.consistent,
                            "validation_passed": r.validation.passed,
                        }),
                        Err(e) => json!({ "index": k, "a": inst.a, "error": e.to_string() }),
                    }
                })
                .collect();
            eprintln!("bench: {} runs in {:.2?}", runs.len(), start.elapsed());
            let consistent = runs.iter().filter(|r| r["consistent"] == true).count();
            let errors = runs.iter().filter(|r| r.get("error").is_some()).count();
            let text = format!("{consistent}/{} consistent, {errors} errors", runs.len());
            let doc = json!({ "seed": cfg.seed, "w": w, "runs": runs, "consistent": consistent, "errors": errors });
            let code = if consistent == *count { OK } else { NEGATIVE };
            Ok(Outcome { doc, text, code })
        }
    }
}

fn emit(cfg: &RunConfig, outcome: &Outcome) -> std::io::Result<()> {
    let body = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&outcome.doc).expect("serializable"),
        Format::Text => outcome.text.clone(),
    };
    match &cfg.out {
        Some(path) => fs::write(path, body + "\n"),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { BAD_INPUT } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    match run(&cli) {
        Ok(outcome) => match emit(&cli.config, &outcome) {
            Ok(()) => ExitCode::from(outcome.code),
            Err(e) => {
                eprintln!("error: cannot write output: {e}");
                ExitCode::from(FAILED)
            }
        },
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(BAD_INPUT)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(FAILED)
        }
    }
}
