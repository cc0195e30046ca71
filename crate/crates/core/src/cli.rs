//! The `latra` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::automaton::to_dot;
use crate::domain::DomainKind;
use crate::engine::{
    check_deadlock, check_safety, fixpoint, AnalysisConfig, AnalysisResult, EngineError, Verdict, Witness,
};
use crate::frontend::{build_cfg, compile, parse, CompiledSemantics, Procs};
use crate::property::parse_property;

pub const EXIT_SAFE: i32 = 0;
pub const EXIT_ALARM: i32 = 1;
pub const EXIT_DEADLOCK: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "latra", version, about = "Reachability analysis of message-passing programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute reachable configurations and check properties.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DomainArg {
    Interval,
    Affine,
}

#[derive(clap::Args, Debug)]
struct AnalyzeArgs {
    /// Program source, or a semantics dump with --semantics-input.
    program: PathBuf,
    #[arg(long, value_enum, default_value = "interval")]
    domain: DomainArg,
    /// Initial number of processes, or `unbounded`.
    #[arg(long, default_value = "1")]
    procs: Procs,
    /// Bad-configuration automaton to check.
    #[arg(long)]
    property: Option<PathBuf>,
    /// Look for potential deadlocks.
    #[arg(long)]
    deadlock: bool,
    /// Write the reach automaton in Graphviz format.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the full result as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    widening_delay: usize,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    shape_k: u64,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    /// Write the compiled transducer and rules as JSON.
    #[arg(long)]
    dump_semantics: Option<PathBuf>,
    /// Read the program argument as a semantics dump instead of source.
    #[arg(long)]
    semantics_input: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    program: String,
    domain: DomainKind,
    procs: String,
    iterations: usize,
    nodes: usize,
    transitions: usize,
    verdict: &'static str,
    property: Option<&'a Verdict>,
    deadlocks: &'a [Witness],
    alarms: Vec<crate::engine::Alarm>,
    reach: &'a crate::automaton::Automaton,
}

/// Runs the command line; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_SAFE,
                _ => EXIT_USAGE,
            };
            let _ = if code == EXIT_SAFE {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    let Command::Analyze(a) = cli.command;
    match analyze(&a, out) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

struct Failure(i32, String);

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_USAGE, msg.to_string())
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load(a: &AnalyzeArgs) -> Result<CompiledSemantics, Failure> {
    let text = read(&a.program)?;
    if a.semantics_input {
        return serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.program.display())));
    }
    let prog = parse(&text).map_err(|e| usage(format!("{}:{e}", a.program.display())))?;
    let domain = match a.domain {
        DomainArg::Interval => DomainKind::Interval,
        DomainArg::Affine => DomainKind::Affine,
    };
    compile(&build_cfg(&prog), domain, a.procs).map_err(usage)
}

fn analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let sem = load(a)?;
    if let Some(p) = &a.dump_semantics {
        let json = serde_json::to_string_pretty(&sem).expect("semantics serialize");
        write_file(p, &(json + "\n"))?;
    }
    let bad = match &a.property {
        Some(p) => Some(parse_property(&read(p)?, sem.entry, sem.exit).map_err(|e| usage(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let config = AnalysisConfig {
        widening_delay: a.widening_delay,
        shape_k: a.shape_k as usize,
        step_budget: a.budget as usize,
    };
    let result: AnalysisResult = match fixpoint(&sem, &config) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(out, "{e}");
            let _ = writeln!(out, "UNKNOWN");
            return Ok(EXIT_BUDGET);
        }
    };
    let verdict = match &bad {
        Some(b) => Some(check_safety(&sem, &result.reach, b).map_err(|e: EngineError| usage(e))?),
        None => None,
    };
    let deadlocks = if a.deadlock { check_deadlock(&sem, &result.reach) } else { Vec::new() };

    let mut w = |s: String| {
        let _ = writeln!(out, "{s}");
    };
    w(format!("program: {}", a.program.display()));
    w(format!(
        "domain: {}, processes: {}",
        if sem.domain.is_affine() { "affine" } else { "interval" },
        sem.procs
    ));
    w(format!("iterations: {}", result.iterations));
    w(format!(
        "reach: {} nodes, {} transitions",
        result.reach.states,
        result.reach.transitions.len()
    ));
    for alarm in result.alarms() {
        w(format!("warning: {}", alarm.witness));
    }
    if let Some(v) = &verdict {
        match v {
            Verdict::Safe => w("property: holds".into()),
            Verdict::Alarm(wit) => w(format!("property: violated\n  witness: {wit}")),
        }
    }
    if a.deadlock {
        w(format!("deadlocks: {}", deadlocks.len()));
        for d in &deadlocks {
            let locs: Vec<String> = d.locations().iter().map(|l| l.to_string()).collect();
            w(format!("  witness: {} | {d}", locs.join(" ")));
        }
    }
    let (code, label) = match (&verdict, deadlocks.is_empty()) {
        (Some(Verdict::Alarm(_)), _) => (EXIT_ALARM, "ALARM"),
        (_, false) => (EXIT_DEADLOCK, "DEADLOCK"),
        _ => (EXIT_SAFE, "SAFE"),
    };
    w(label.to_string());

    if let Some(p) = &a.dot {
        write_file(p, &to_dot(&result.reach))?;
    }
    if let Some(p) = &a.json {
        let report = Report {
            program: a.program.display().to_string(),
            domain: sem.domain,
            procs: sem.procs.to_string(),
            iterations: result.iterations,
            nodes: result.reach.states,
            transitions: result.reach.transitions.len(),
            verdict: label,
            property: verdict.as_ref(),
            deadlocks: &deadlocks,
            alarms: result.alarms(),
            reach: &result.reach,
        };
        write_file(p, &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    }
    Ok(code)
}
