//! `btfsm`: build, run, edit and measure BT/FSM policies from `.pol`
//! documents, and reproduce the fetch experiments.
//!
//! Exit status is 0 on success, 1 when a reproduction assertion does not
//! hold, 2 on bad input (unreadable or invalid documents, synthesis errors,
//! unknown scenarios).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use btfsm_core::dsl::{self, Document};
use btfsm_core::harness::{
    self, apply_edit, build, reproduce, EditScript, Experiment, GraphMetrics, HarnessError, Policy, Repr, RunConfig,
    FIXTURES_ENV,
};
use btfsm_core::metrics::{self, EditCostModel, MetricsError};
use btfsm_core::DirectedGraph;

#[derive(Parser)]
#[command(name = "btfsm", version, about = "Behavior Tree and state machine policy tooling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize (or load) a policy and export it with its graph.
    Build(Common),
    /// Execute a policy in the simulator.
    Run(RunArgs),
    /// Apply a scripted edit and report its cost.
    Edit(EditArgs),
    /// Size, sinks and cyclomatic complexity of an edge-list graph, plus the
    /// edit distance to a second graph when given.
    Metrics(MetricsArgs),
    /// Rerun an experiment and check it against the published numbers.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ReprArg {
    Bt,
    Fsm,
    FsmSeq,
}

impl From<ReprArg> for Repr {
    fn from(r: ReprArg) -> Self {
        match r {
            ReprArg::Bt => Repr::Bt,
            ReprArg::Fsm => Repr::Fsm,
            ReprArg::FsmSeq => Repr::FsmSeq,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    /// JSON on stdout.
    Record,
}

#[derive(Args)]
struct Common {
    /// Policy document; defaults to the shipped fetch task.
    #[arg(long)]
    doc: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "bt")]
    repr: ReprArg,
    /// Directory for output files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Fixture directory overriding the shipped documents.
    #[arg(long, env = FIXTURES_ENV, hide_env_values = true)]
    fixtures: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Scenario to run; repeat to run several.
    #[arg(long, default_value = "nominal")]
    scenario: Vec<String>,
    /// Step budget.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    /// Battery percentage below which `battery_ok` is false.
    #[arg(long)]
    threshold: Option<f64>,
    /// Battery drain per step.
    #[arg(long)]
    drain: Option<f64>,
    /// Accepted for reproducibility records; the simulator is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Run scenarios on separate threads.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct EditArgs {
    #[command(flatten)]
    common: Common,
    /// add-recharge, add-dock, remove:<skill>, insert-subtree:<parent>:<index>:<sexpr>
    /// or insert-state:<id>:<skill(args)>:<preceding>.
    #[arg(long)]
    script: String,
}

#[derive(Args)]
struct MetricsArgs {
    graph: PathBuf,
    other: Option<PathBuf>,
    /// Node expansions allowed before the distance is reported as an upper
    /// bound.
    #[arg(long, default_value_t = metrics::DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct ReproduceArgs {
    /// exp1, exp2, exp3, scale or all.
    experiment: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    parallel: bool,
    #[arg(long, env = FIXTURES_ENV, hide_env_values = true)]
    fixtures: Option<PathBuf>,
}

enum Failure {
    Mismatch,
    Input(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_err(&path, e))
}

fn load(common: &Common) -> Result<Document, Failure> {
    if let Some(dir) = &common.fixtures {
        std::env::set_var(FIXTURES_ENV, dir);
    }
    match &common.doc {
        Some(p) => dsl::parse_file(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => Ok(harness::load_fixture("fetch_task.pol")?),
    }
}

fn record<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("records serialize") + "\n"
}

fn export(common: &Common, doc: &Document, policy: &Policy) -> Result<(), Failure> {
    if let Some(dir) = &common.out {
        write(dir, "policy.pol", &dsl::serialize(&policy.clone().into_document(doc)))?;
        write(dir, "graph.dot", &policy.to_graph().to_edge_list("policy"))?;
    }
    Ok(())
}

fn cmd_build(c: &Common) -> Result<(), Failure> {
    let doc = load(c)?;
    let policy = build(&doc, c.repr.into())?;
    export(c, &doc, &policy)?;
    let m = GraphMetrics::of(&policy)?;
    match c.format {
        Format::Text => println!("{} nodes, {} edges", m.nodes, m.edges),
        Format::Record => print!("{}", record(&serde_json::json!({ "repr": policy.repr(), "metrics": m }))),
    }
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<(), Failure> {
    let doc = load(&a.common)?;
    let policy = build(&doc, a.common.repr.into())?;
    let mut jobs = Vec::new();
    for name in &a.scenario {
        let config = RunConfig {
            repr: a.common.repr.into(),
            scenario: name.clone(),
            budget: a.budget,
            battery_threshold: a.threshold,
            drain: a.drain,
            seed: a.seed,
        };
        if let Some(t) = config.battery_threshold {
            if !(0.0..=100.0).contains(&t) {
                return Err(Failure::Input(format!("threshold {t} is outside 0..=100")));
            }
        }
        let (library, script) = config.prepare(&doc)?;
        jobs.push((policy.clone(), library, script));
    }
    let mut runs = Vec::new();
    for r in harness::run_many(&jobs, a.budget, a.parallel) {
        runs.push(r?);
    }
    for r in &runs {
        if let Some(dir) = &a.common.out {
            write(dir, &format!("{}.trace.jsonl", r.scenario), &r.trace_jsonl())?;
            write(dir, &format!("{}.run.json", r.scenario), &record(r))?;
        }
        if a.common.format == Format::Text {
            println!(
                "{}: {:?} after {} steps ({} skill calls)",
                r.scenario,
                r.outcome,
                r.steps,
                r.skill_trace.len()
            );
            for call in &r.skill_trace {
                println!("  {call}");
            }
        }
    }
    if a.common.format == Format::Record {
        print!("{}", record(&runs));
    }
    Ok(())
}

fn cmd_edit(a: &EditArgs) -> Result<(), Failure> {
    let doc = load(&a.common)?;
    let script: EditScript = a.script.parse()?;
    let mut policy = build(&doc, a.common.repr.into())?;
    let receipt = apply_edit(&mut policy, &script, &doc)?;
    export(&a.common, &doc, &policy)?;
    let m = GraphMetrics::of(&policy)?;
    match a.common.format {
        Format::Text => println!(
            "{script}: {} elementary operations, {} touched, {} scanned; now {} nodes, {} edges",
            receipt.elementary_ops, receipt.touched, receipt.scanned, m.nodes, m.edges
        ),
        Format::Record => print!(
            "{}",
            record(&serde_json::json!({ "script": script.to_string(), "receipt": receipt, "metrics": m }))
        ),
    }
    Ok(())
}

fn read_graph(path: &Path) -> Result<DirectedGraph, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    DirectedGraph::parse_edge_list(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_metrics(a: &MetricsArgs) -> Result<(), Failure> {
    let g = read_graph(&a.graph)?;
    let cc = metrics::cyclomatic_complexity(&g).map_err(|e| Failure::Input(e.to_string()))?;
    let mut rec = serde_json::json!({
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "sinks": g.sinks().len(),
        "cyclomatic_complexity": cc,
    });
    if let Some(other) = &a.other {
        let h = read_graph(other)?;
        let r = match metrics::ged_with_budget(&g, &h, &EditCostModel::default(), a.budget) {
            Ok(r) => r,
            Err(MetricsError::BudgetExceeded { best, .. }) => *best,
            Err(e) => return Err(Failure::Input(e.to_string())),
        };
        rec["ged"] = serde_json::json!({ "distance": r.distance, "exact": r.exact });
    }
    match a.format {
        Format::Record => print!("{}", record(&rec)),
        Format::Text => {
            println!(
                "{} nodes, {} edges, {} sinks, CC={}",
                rec["nodes"], rec["edges"], rec["sinks"], rec["cyclomatic_complexity"]
            );
            if let Some(g) = rec.get("ged") {
                let bound = if g["exact"] == true { "" } else { " (upper bound, search budget exhausted)" };
                println!("GED={}{bound}", g["distance"]);
            }
        }
    }
    Ok(())
}

fn cmd_reproduce(a: &ReproduceArgs) -> Result<(), Failure> {
    if let Some(dir) = &a.fixtures {
        std::env::set_var(FIXTURES_ENV, dir);
    }
    let experiments: Vec<Experiment> = if a.experiment == "all" {
        Experiment::ALL.to_vec()
    } else {
        vec![a.experiment.parse()?]
    };
    let mut ok = true;
    for exp in experiments {
        let report = reproduce(exp, a.parallel)?;
        if let Some(dir) = &a.out {
            write(dir, &format!("{exp}.json"), &report.to_json())?;
            write(dir, &format!("{exp}.txt"), &report.to_text())?;
        }
        match a.format {
            Format::Text => print!("{}", report.to_text()),
            Format::Record => print!("{}", report.to_json()),
        }
        for f in report.failures() {
            eprintln!("{exp}: {} expected {}, got {}", f.name, f.expected, f.actual);
        }
        ok &= report.passed();
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Build(c) => cmd_build(c),
        Command::Run(a) => cmd_run(a),
        Command::Edit(a) => cmd_edit(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
