use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use skipflow_core::ir::{MethodId, MethodRef, Program};
use skipflow_core::oracle::{run_many, DiffConfig};
use skipflow_core::pvpg::{build_method, render_dot, DotScope, Graph};
use skipflow_core::report::{Comparison, Report};
use skipflow_core::solver::{analyze, AnalysisError, AnalysisResult, Budget, Config, Fault, Mode, RootSeeding};
use skipflow_core::text::{parse_program, SourceFile};

/// Predicated points-to analysis for `.sfir` programs.
#[derive(Parser)]
#[command(name = "skipflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a program and report reachable methods and metrics.
    Analyze {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, env = "SKIPFLOW_MODE", value_enum, default_value_t = ModeArg::Skipflow)]
        mode: ModeArg,
        /// Include every flow's state in the report.
        #[arg(long)]
        flows: bool,
        /// Also write a DOT graph of METHOD (`Owner.name`) or `all`.
        #[arg(long, env = "SKIPFLOW_DOT", value_name = "METHOD|all")]
        dot: Option<String>,
        /// Where to write the DOT graph (default: stdout, after the report).
        #[arg(long, value_name = "PATH", requires = "dot")]
        dot_out: Option<PathBuf>,
    },
    /// Run both analyses and show what the predicated one prunes.
    Compare {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Render the flow graph of a method, or of the whole program.
    Dot {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, env = "SKIPFLOW_MODE", value_enum, default_value_t = ModeArg::Skipflow)]
        mode: ModeArg,
        #[arg(long, env = "SKIPFLOW_DOT", value_name = "METHOD|all")]
        dot: String,
        /// Draw the graph as built, before any solving.
        #[arg(long)]
        before: bool,
        #[arg(short, long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Differential testing against the concrete interpreter.
    Fuzz {
        #[arg(long, env = "SKIPFLOW_FUZZ_N", default_value_t = 1000)]
        fuzz_n: usize,
        #[arg(long, env = "SKIPFLOW_FUZZ_SEED", default_value_t = 0)]
        fuzz_seed: u64,
        /// Directory for failing programs.
        #[arg(long, default_value = "fuzz-failures")]
        out: PathBuf,
        #[arg(long, env = "SKIPFLOW_JSON")]
        json: bool,
        /// Break the engine on purpose to check the harness.
        #[arg(long, value_enum, default_value_t = FaultArg::None, hide = true)]
        fault: FaultArg,
    },
}

#[derive(Args)]
struct RunArgs {
    input: PathBuf,
    /// Root method `Owner.name`; overrides the file's roots. Repeatable.
    #[arg(long, env = "SKIPFLOW_ROOT", value_delimiter = ',')]
    root: Vec<String>,
    #[arg(long, env = "SKIPFLOW_SEED_PARAMS", value_enum, default_value_t = SeedArg::None)]
    seed_params: SeedArg,
    /// `auto`, `unlimited` or a step count.
    #[arg(long, env = "SKIPFLOW_BUDGET", default_value = "auto", value_parser = parse_budget)]
    budget: Budget,
    #[arg(long, env = "SKIPFLOW_JSON")]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Skipflow,
    Baseline,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeedArg {
    None,
    Types,
    Any,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    None,
    NoPredicateRule,
}

fn parse_budget(s: &str) -> Result<Budget, String> {
    match s {
        "auto" => Ok(Budget::Auto),
        "unlimited" => Ok(Budget::Unlimited),
        n => n
            .parse()
            .map(Budget::Steps)
            .map_err(|_| format!("expected `auto`, `unlimited` or a step count, got `{n}`")),
    }
}

/// A failed run and its exit status.
struct Failure {
    status: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            status: 1,
            message: message.into(),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        let status = if matches!(e, AnalysisError::Budget { .. }) { 2 } else { 1 };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze {
            run,
            mode,
            flows,
            dot,
            dot_out,
        } => cmd_analyze(&run, mode, flows, dot.as_deref(), dot_out.as_deref()),
        Command::Compare { run } => cmd_compare(&run),
        Command::Dot {
            run,
            mode,
            dot,
            before,
            out,
        } => cmd_dot(&run, mode, &dot, before, out.as_deref()),
        Command::Fuzz {
            fuzz_n,
            fuzz_seed,
            out,
            json,
            fault,
        } => cmd_fuzz(fuzz_n, fuzz_seed, &out, json, fault),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.status)
        }
    }
}

fn load(path: &Path) -> Result<Program, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    parse_program(&SourceFile::new(path.display().to_string(), text)).map_err(|e| Failure::input(e.to_string()))
}

fn config(run: &RunArgs, mode: Mode) -> Result<Config, Failure> {
    let roots = run
        .root
        .iter()
        .map(|r| r.parse::<MethodRef>().map_err(|e| Failure::input(format!("--root {r}: {e}"))))
        .collect::<Result<_, _>>()?;
    Ok(Config {
        mode,
        seeding: match run.seed_params {
            SeedArg::None => RootSeeding::None,
            SeedArg::Types => RootSeeding::Types,
            SeedArg::Any => RootSeeding::Any,
        },
        budget: run.budget,
        roots,
        ..Config::default()
    })
}

fn modes(m: ModeArg) -> Vec<Mode> {
    match m {
        ModeArg::Skipflow => vec![Mode::SkipFlow],
        ModeArg::Baseline => vec![Mode::Baseline],
        ModeArg::Both => vec![Mode::SkipFlow, Mode::Baseline],
    }
}

fn scope(program: &Program, target: &str) -> Result<DotScope, Failure> {
    if target == "all" {
        return Ok(DotScope::All);
    }
    target
        .parse::<MethodRef>()
        .ok()
        .and_then(|r| program.method_by_ref(&r))
        .map(DotScope::Method)
        .ok_or_else(|| Failure::input(format!("unknown method `{target}`")))
}

fn dot_of(program: &Program, result: &AnalysisResult, target: &str) -> Result<String, Failure> {
    let scope = scope(program, target)?;
    Ok(render_dot(&result.graph, program, scope, &result.enabled, &result.vs))
}

fn emit(text: &str, out: Option<&Path>) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_analyze(run: &RunArgs, mode: ModeArg, flows: bool, dot: Option<&str>, dot_out: Option<&Path>) -> Outcome {
    let program = load(&run.input)?;
    if let Some(target) = dot {
        scope(&program, target)?;
    }
    let mut results = Vec::new();
    for m in modes(mode) {
        let start = Instant::now();
        let r = analyze(&program, &config(run, m)?)?;
        results.push((r, start.elapsed()));
    }

    let reports: Vec<Report> = results
        .iter()
        .map(|(r, _)| {
            let rep = Report::new(r, &program);
            if flows {
                rep.with_flows(r, &program)
            } else {
                rep
            }
        })
        .collect();
    if run.json {
        let json = match reports.as_slice() {
            [one] => one.to_json(),
            many => {
                let map: serde_json::Map<String, serde_json::Value> = many
                    .iter()
                    .map(|r| (r.mode.clone(), serde_json::to_value(r).expect("reports serialize")))
                    .collect();
                serde_json::to_string_pretty(&map).expect("reports serialize")
            }
        };
        println!("{json}");
    } else {
        for (rep, (_, took)) in reports.iter().zip(&results) {
            print!("{}", rep.to_text());
            for f in &rep.flows {
                let state = if f.enabled { "on " } else { "off" };
                println!("  [{state}] {:<40} {:<28} {}", f.element, f.kind, f.value);
            }
            println!("time: {:.3} ms", took.as_secs_f64() * 1e3);
        }
    }
    if let Some(target) = dot {
        let (r, _) = &results[0];
        emit(&dot_of(&program, r, target)?, dot_out)?;
    }
    Ok(())
}

fn cmd_compare(run: &RunArgs) -> Outcome {
    let program = load(&run.input)?;
    let sf = analyze(&program, &config(run, Mode::SkipFlow)?)?;
    let base = analyze(&program, &config(run, Mode::Baseline)?)?;
    let cmp = Comparison::new(&sf, &base, &program);
    if run.json {
        println!("{}", cmp.to_json());
    } else {
        print!("{}", cmp.to_text());
    }
    let bad = skipflow_core::oracle::check_containment(&sf, &base, &program);
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            status: 3,
            message: format!("containment violated:\n  {}", bad.join("\n  ")),
        })
    }
}

fn cmd_dot(run: &RunArgs, mode: ModeArg, target: &str, before: bool, out: Option<&Path>) -> Outcome {
    let program = load(&run.input)?;
    let scope = scope(&program, target)?;
    let text = if before {
        let mut g = Graph::new();
        let ids: Vec<MethodId> = match scope {
            DotScope::Method(m) => vec![m],
            DotScope::All => (0..program.methods().len() as u32).map(MethodId).collect(),
        };
        for m in ids {
            build_method(&mut g, &program, m).map_err(|e| Failure::input(e.to_string()))?;
        }
        render_dot(&g, &program, scope, &[], &[])
    } else {
        let m = match mode {
            ModeArg::Baseline => Mode::Baseline,
            _ => Mode::SkipFlow,
        };
        let r = analyze(&program, &config(run, m)?)?;
        dot_of(&program, &r, target)?
    };
    emit(&text, out)
}

fn cmd_fuzz(n: usize, seed: u64, out: &Path, json: bool, fault: FaultArg) -> Outcome {
    let cfg = DiffConfig {
        programs: n,
        seed,
        fault: match fault {
            FaultArg::None => Fault::None,
            FaultArg::NoPredicateRule => Fault::NoPredicateRule,
        },
        ..DiffConfig::default()
    };
    let summary = run_many(&cfg);
    if json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("summaries serialize"));
    } else {
        println!(
            "{} programs, {} runs ({} cut short), {} failing",
            summary.programs,
            summary.runs,
            summary.partial_runs,
            summary.failures.len()
        );
        for c in &summary.failures {
            println!("seed {}: {}", c.seed, c.failures.first().map(String::as_str).unwrap_or(""));
        }
    }
    if summary.ok() {
        return Ok(());
    }
    summary
        .persist(out)
        .map_err(|e| Failure::input(format!("{}: {e}", out.display())))?;
    Err(Failure {
        status: 4,
        message: format!("{} failing programs written to {}", summary.failures.len(), out.display()),
    })
}
