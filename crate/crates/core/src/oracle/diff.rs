//! Differential runs: generate, analyze both ways, execute, compare.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use super::gen::{gen_program, GenSize};
use super::interp::interpret;
use super::subsume::check_subsumption;
use crate::ir::Program;
use crate::solver::{analyze, AnalysisResult, Config, Fault, Mode};
use crate::text::print_program;

#[derive(Clone, Debug)]
pub struct DiffConfig {
    pub programs: usize,
    /// Program `i` is generated from `seed + i`.
    pub seed: u64,
    /// Interpreter runs per program.
    pub runs: u64,
    pub step_limit: u64,
    pub size: GenSize,
    pub fault: Fault,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig {
            programs: 100,
            seed: 0,
            runs: 3,
            step_limit: 20_000,
            size: GenSize::default(),
            fault: Fault::None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseOutcome {
    pub seed: u64,
    #[serde(skip)]
    pub program: Program,
    pub failures: Vec<String>,
    /// Interpreter runs cut short (null dereference or step limit).
    pub partial_runs: u64,
    /// Largest number of value growths of any one flow, over both analyses.
    pub max_growths_per_flow: u32,
    /// Largest fraction of the step budget either analysis used.
    pub budget_used: f64,
}

impl CaseOutcome {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DiffSummary {
    pub programs: usize,
    pub runs: u64,
    pub partial_runs: u64,
    pub max_growths_per_flow: u32,
    /// Programs with some flow growing more than three times.
    pub over_three_growths: usize,
    pub max_budget_used: f64,
    pub failures: Vec<CaseOutcome>,
}

impl DiffSummary {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    /// Writes each failing program as `<seed>.sfir` with a `<seed>.json`
    /// describing what went wrong.
    pub fn persist(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for case in &self.failures {
            fs::write(dir.join(format!("{}.sfir", case.seed)), print_program(&case.program))?;
            let json = serde_json::to_string_pretty(case).map_err(io::Error::other)?;
            fs::write(dir.join(format!("{}.json", case.seed)), json)?;
        }
        Ok(())
    }
}

/// The predicated result must be no larger than the baseline: fewer
/// reachable methods and smaller states on every element both share.
pub fn check_containment(sf: &AnalysisResult, base: &AnalysisResult, program: &Program) -> Vec<String> {
    let mut out = Vec::new();
    for m in sf.reachable.difference(&base.reachable) {
        out.push(format!(
            "{} reachable only in the predicated analysis",
            program.method(*m).qualified_name()
        ));
    }
    let base_snap = base.snapshot();
    for (id, f) in sf.graph.flows() {
        let Some((_, bv)) = base_snap.flows.get(&f.key) else {
            continue;
        };
        let v = sf.value(id);
        if !v.leq(bv) {
            out.push(format!(
                "{}: {} not below baseline {}",
                f.kind.label(program),
                v.render(program),
                bv.render(program)
            ));
        }
    }
    out
}

pub fn run_case(seed: u64, cfg: &DiffConfig) -> CaseOutcome {
    let program = gen_program(seed, cfg.size);
    let mut case = CaseOutcome {
        seed,
        program,
        failures: Vec::new(),
        partial_runs: 0,
        max_growths_per_flow: 0,
        budget_used: 0.0,
    };
    let program = &case.program;

    let problems = crate::ir::validate(program);
    if !problems.is_empty() {
        case.failures.extend(problems.iter().map(|v| format!("generated program invalid: {v}")));
        return case;
    }

    let run = |mode| {
        let config = Config {
            mode,
            fault: cfg.fault,
            ..Config::default()
        };
        analyze(program, &config)
    };
    let (sf, base) = match (run(Mode::SkipFlow), run(Mode::Baseline)) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => {
            for e in [a.err(), b.err()].into_iter().flatten() {
                case.failures.push(format!("analysis failed: {e}"));
            }
            return case;
        }
    };
    for r in [&sf, &base] {
        case.max_growths_per_flow = case.max_growths_per_flow.max(r.stats.max_growths_per_flow);
        let used = r.stats.steps as f64 / r.stats.step_bound.max(1) as f64;
        case.budget_used = case.budget_used.max(used);
    }

    let root = program.root_ids().first().copied().expect("generated programs have a root");
    for k in 0..cfg.runs {
        let trace = interpret(program, root, seed.wrapping_mul(31).wrapping_add(k), cfg.step_limit);
        if trace.partial.is_some() {
            case.partial_runs += 1;
        }
        if trace.uninitialized_reads > 0 {
            case.failures.push(format!("run {k}: field read before any write"));
        }
        for (result, mode) in [(&sf, "skipflow"), (&base, "baseline")] {
            for v in check_subsumption(&trace, result, program) {
                case.failures.push(format!("run {k}, {mode}: {:?}: {}", v.kind, v.detail));
            }
        }
    }
    case.failures.extend(check_containment(&sf, &base, program));
    case
}

pub fn run_many(cfg: &DiffConfig) -> DiffSummary {
    let mut summary = DiffSummary::default();
    for i in 0..cfg.programs {
        let case = run_case(cfg.seed.wrapping_add(i as u64), cfg);
        summary.programs += 1;
        summary.runs += cfg.runs;
        summary.partial_runs += case.partial_runs;
        summary.max_growths_per_flow = summary.max_growths_per_flow.max(case.max_growths_per_flow);
        summary.max_budget_used = summary.max_budget_used.max(case.budget_used);
        if case.max_growths_per_flow > 3 {
            summary.over_three_growths += 1;
        }
        if !case.ok() {
            summary.failures.push(case);
        }
    }
    summary
}
