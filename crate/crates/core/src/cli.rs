//! Command-line front end.
//!
//! Exit codes: 0 success, 1 empty or invalid corpus / bug data, 2 bad
//! arguments or paths, 3 missing call graph.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bug::{
    localize, split_prefixes, BugCase, BugConfig, Effective, Overrides, Technique,
    BUGGY_METHODS_FILE, CALLGRAPH_FILE, CONFIG_FILE, STACKTRACE_FILE,
};
use crate::callgraph::{distance_report, min_distance, CallGraph, DistanceOptions, DistanceResult};
use crate::error::Error;
use crate::eval::{GroundTruth, TiePolicy};
use crate::harness::{self, discover, EvalOptions, Skipped, DEFAULT_M_GRID, DEFAULT_X_GRID};
use crate::method::MethodId;
use crate::sbest::explain;
use crate::sbfl::TIE_POLICY;
use crate::stacktrace::{parse_stack_traces, select_internal_view, ParserConfig, TraceSelection};
use crate::warning::Warning;

pub const EXIT_DATA: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_MISSING_ARTIFACT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "crashloc", version, about = "Rank suspicious methods from coverage spectra and crash stack traces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a stack-trace file and print its traces as JSON.
    ParseTrace {
        input: PathBuf,
        /// Strip HTML markup before parsing.
        #[arg(long)]
        strip_html: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Rank the methods of one bug directory.
    Localize {
        bug_dir: PathBuf,
        #[arg(long, default_value = "sbest", value_parser = parse_technique)]
        technique: Technique,
        #[command(flatten)]
        run: RunArgs,
        /// Include the proxy selection and score decomposition.
        #[arg(long)]
        explain: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Score every `<project>/<bug>` under a corpus root.
    Evaluate {
        root: PathBuf,
        /// Techniques to evaluate, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "ochiai,stacktrace,sb-only,sbest", value_parser = parse_technique)]
        technique: Vec<Technique>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "ordinal", value_parser = parse_tie)]
        tie: TiePolicy,
        /// Leave bugs without failing tests out of the Ochiai aggregates.
        #[arg(long)]
        paper_mode: bool,
        /// Worker threads; 0 picks one per core.
        #[arg(long, default_value_t = 0)]
        parallel: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Evaluate SBEST over a grid of X and M values.
    Sweep {
        root: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_X_GRID)]
        xs: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_M_GRID)]
        ms: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        prefixes: Option<Vec<String>>,
        #[arg(long, value_parser = parse_trace)]
        trace: Option<TraceSelection>,
        #[arg(long, default_value = "ordinal", value_parser = parse_tie)]
        tie: TiePolicy,
        #[arg(long, default_value_t = 0)]
        parallel: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Call-graph distance from stack-trace methods to buggy methods, for a
    /// bug directory or a corpus root.
    Distance {
        path: PathBuf,
        /// Follow call edges in both directions.
        #[arg(long)]
        undirected: bool,
        /// Start from every trace frame, not only internal ones.
        #[arg(long)]
        all_frames: bool,
        #[arg(long, value_delimiter = ',')]
        prefixes: Option<Vec<String>>,
        #[arg(long, value_parser = parse_trace)]
        trace: Option<TraceSelection>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Number of proxy failing tests.
    #[arg(long)]
    pub x: Option<usize>,
    /// Number of top internal stack-trace methods.
    #[arg(long)]
    pub m: Option<usize>,
    /// Internal package prefixes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub prefixes: Option<Vec<String>>,
    /// Which trace of a multi-trace report to use: first, merge or an index.
    #[arg(long, value_parser = parse_trace)]
    pub trace: Option<TraceSelection>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            prefixes: self.prefixes.as_ref().map(|p| split_prefixes(&p.join(","))),
            x: self.x,
            m: self.m,
            trace: self.trace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write the primary output here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn parse_technique(s: &str) -> Result<Technique, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_tie(s: &str) -> Result<TiePolicy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_trace(s: &str) -> Result<TraceSelection, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

/// Missing paths and unreadable inputs are usage errors; anything wrong
/// inside the data is a data error.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } | Error::Config(_) | Error::NoPrefixes => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        CliError::new(code, e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

pub fn execute(command: Command) -> CliResult {
    match command {
        Command::ParseTrace {
            input,
            strip_html,
            output,
        } => cmd_parse_trace(&input, strip_html, output.as_deref()),
        Command::Localize {
            bug_dir,
            technique,
            run,
            explain,
            out,
        } => cmd_localize(&bug_dir, technique, &run.overrides(), explain, &out),
        Command::Evaluate {
            root,
            technique,
            run,
            tie,
            paper_mode,
            parallel,
            out,
        } => {
            let mut techniques = technique;
            techniques.sort();
            techniques.dedup();
            let opts = EvalOptions {
                techniques,
                overrides: run.overrides(),
                tie,
                paper_mode,
            };
            with_threads(parallel, || cmd_evaluate(&root, &opts, &out))
        }
        Command::Sweep {
            root,
            xs,
            ms,
            prefixes,
            trace,
            tie,
            parallel,
            out,
        } => {
            let overrides = Overrides {
                prefixes: prefixes.map(|p| split_prefixes(&p.join(","))),
                trace,
                ..Overrides::default()
            };
            with_threads(parallel, || cmd_sweep(&root, &xs, &ms, &overrides, tie, &out))
        }
        Command::Distance {
            path,
            undirected,
            all_frames,
            prefixes,
            trace,
            out,
        } => {
            let overrides = Overrides {
                prefixes: prefixes.map(|p| split_prefixes(&p.join(","))),
                trace,
                ..Overrides::default()
            };
            let opts = DistanceOptions { undirected };
            cmd_distance(&path, opts, all_frames, &overrides, &out)
        }
    }
}

fn with_threads(n: usize, f: impl FnOnce() -> CliResult + Send) -> CliResult {
    if n == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::new(EXIT_USAGE, format!("--parallel {n}: {e}")))?;
    pool.install(f)
}

fn emit(output: Option<&Path>, text: &str) -> CliResult {
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::new(EXIT_USAGE, format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| CliError::new(EXIT_USAGE, format!("stdout: {e}")))
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn report_warnings(context: &str, warnings: &[Warning]) {
    for w in warnings {
        eprintln!("warning: {context}: {w}");
    }
}

fn report_skipped(skipped: &[Skipped]) {
    for s in skipped {
        match &s.scope {
            Some(scope) => eprintln!("skipped {} [{scope}]: {}", s.bug, s.reason),
            None => eprintln!("skipped {}: {}", s.bug, s.reason),
        }
    }
}

fn require_dir(path: &Path) -> CliResult {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::new(EXIT_USAGE, format!("{}: not a directory", path.display())))
    }
}

fn cmd_parse_trace(input: &Path, strip_html: bool, output: Option<&Path>) -> CliResult {
    if input.is_dir() {
        return Err(CliError::new(EXIT_USAGE, format!("{}: is a directory", input.display())));
    }
    let text = fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let config = ParserConfig {
        strip_html,
        ..ParserConfig::default()
    };
    let traces = parse_stack_traces(&text, &config);
    let mut json = serde_json::to_string_pretty(&traces).expect("traces always serialize");
    json.push('\n');
    emit(output, &json)
}

fn bug_id(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn run_config(technique: Option<Technique>, eff: &Effective) -> serde_json::Value {
    json!({
        "technique": technique.map(|t| t.to_string()),
        "x": eff.x,
        "m": eff.m,
        "internal_prefixes": eff.internal_prefixes,
        "trace": eff.trace,
        "tie_break": TIE_POLICY,
    })
}

fn cmd_localize(
    dir: &Path,
    technique: Technique,
    overrides: &Overrides,
    want_explain: bool,
    out: &OutArgs,
) -> CliResult {
    require_dir(dir)?;
    if want_explain && !matches!(technique, Technique::SbOnly | Technique::Sbest) {
        return Err(CliError::new(EXIT_USAGE, "--explain requires --technique sb-only or sbest"));
    }
    let id = bug_id(dir);
    let case = BugCase::load(dir, id.clone())?;
    let eff = case.effective(overrides);
    let loc = localize(&case, technique, &eff)?;
    report_warnings(&id, &loc.warnings);
    let explained = loc
        .sbest
        .as_ref()
        .filter(|_| want_explain)
        .map(|r| explain(&case.coverage, r));

    let text = match out.format {
        Format::Csv => {
            if let Some(e) = &explained {
                eprint!("{}", pretty(e));
            }
            loc.ranking.to_csv()
        }
        Format::Json => {
            let mut doc = json!({
                "bug": id,
                "config": run_config(Some(technique), &eff),
                "warnings": loc.warnings,
                "ranking": loc.ranking.entries,
            });
            if let Some(e) = explained {
                doc["explain"] = e;
            }
            pretty(&doc)
        }
    };
    emit(out.output.as_deref(), &text)
}

fn corpus(root: &Path) -> CliResult<Vec<harness::BugRef>> {
    require_dir(root)?;
    let bugs = discover(root)?;
    if bugs.is_empty() {
        return Err(CliError::new(
            EXIT_DATA,
            format!("{}: no <project>/<bug> directories found", root.display()),
        ));
    }
    Ok(bugs)
}

fn overrides_json(o: &Overrides) -> serde_json::Value {
    json!({
        "x": o.x,
        "m": o.m,
        "internal_prefixes": o.prefixes,
        "trace": o.trace.map(|t| t.to_string()),
    })
}

fn cmd_evaluate(root: &Path, opts: &EvalOptions, out: &OutArgs) -> CliResult {
    let bugs = corpus(root)?;
    let report = harness::evaluate(&bugs, opts);
    report_skipped(&report.skipped);
    if report.scored_bugs() == 0 {
        return Err(CliError::new(EXIT_DATA, "no bug could be scored"));
    }
    let text = match out.format {
        Format::Csv => report.to_csv(),
        Format::Json => pretty(&json!({
            "config": {
                "techniques": opts.techniques.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "overrides": overrides_json(&opts.overrides),
                "defaults": { "x": 15, "m": 5, "trace": TraceSelection::default().to_string() },
                "tie": opts.tie,
                "tie_break": TIE_POLICY,
                "paper_mode": opts.paper_mode,
            },
            "rows": report.rows,
            "per_bug": report.per_bug,
            "skipped": report.skipped,
        })),
    };
    emit(out.output.as_deref(), &text)
}

fn cmd_sweep(
    root: &Path,
    xs: &[usize],
    ms: &[usize],
    overrides: &Overrides,
    tie: TiePolicy,
    out: &OutArgs,
) -> CliResult {
    if xs.is_empty() || ms.is_empty() || xs.contains(&0) || ms.contains(&0) {
        return Err(CliError::new(EXIT_USAGE, "grids must be non-empty and contain only positive values"));
    }
    let bugs = corpus(root)?;
    let report = harness::sweep(&bugs, xs, ms, overrides, tie)?;
    report_skipped(&report.skipped);
    if report.rows.iter().all(|r| r.metrics.q == 0) {
        return Err(CliError::new(EXIT_DATA, "no bug could be scored"));
    }
    let text = match out.format {
        Format::Csv => report.to_csv(),
        Format::Json => pretty(&json!({
            "config": {
                "xs": xs,
                "ms": ms,
                "overrides": overrides_json(overrides),
                "tie": tie,
                "tie_break": TIE_POLICY,
            },
            "rows": report.rows,
            "skipped": report.skipped,
        })),
    };
    emit(out.output.as_deref(), &text)
}

struct DistanceCase {
    result: DistanceResult,
    warnings: Vec<Warning>,
    effective: Effective,
}

fn distance_case(
    dir: &Path,
    id: &str,
    opts: DistanceOptions,
    all_frames: bool,
    overrides: &Overrides,
) -> CliResult<DistanceCase> {
    let graph_path = dir.join(CALLGRAPH_FILE);
    if !graph_path.is_file() {
        return Err(CliError::new(
            EXIT_MISSING_ARTIFACT,
            format!("{}: call graph missing", graph_path.display()),
        ));
    }
    let graph = CallGraph::load(&graph_path)?;
    let truth = GroundTruth::load(id, &dir.join(BUGGY_METHODS_FILE))?;
    let cfg_path = dir.join(CONFIG_FILE);
    let config = if cfg_path.is_file() {
        BugConfig::load(&cfg_path)?
    } else {
        BugConfig::default()
    };
    let effective = Effective::resolve(overrides, &config);
    let trace_path = dir.join(STACKTRACE_FILE);
    let text = fs::read_to_string(&trace_path).map_err(|e| Error::io(&trace_path, e))?;
    let traces = parse_stack_traces(&text, &ParserConfig::default());
    let trace_methods: Vec<MethodId> = if all_frames {
        let mut seen = BTreeSet::new();
        let frames: Box<dyn Iterator<Item = _>> = match effective.trace_selection {
            TraceSelection::Merge => Box::new(traces.iter().flat_map(|t| t.flattened_frames())),
            TraceSelection::First => Box::new(traces.iter().take(1).flat_map(|t| t.flattened_frames())),
            TraceSelection::Index(i) => Box::new(traces.iter().skip(i).take(1).flat_map(|t| t.flattened_frames())),
        };
        frames
            .filter_map(|f| f.method_id().ok())
            .filter(|m| seen.insert(m.clone()))
            .collect()
    } else {
        select_internal_view(&traces, effective.trace_selection, &effective.internal_prefixes)?.methods
    };
    let (result, warnings) = min_distance(&graph, &trace_methods, &truth.buggy_methods, opts);
    Ok(DistanceCase {
        result,
        warnings,
        effective,
    })
}

fn cmd_distance(
    path: &Path,
    opts: DistanceOptions,
    all_frames: bool,
    overrides: &Overrides,
    out: &OutArgs,
) -> CliResult {
    require_dir(path)?;
    let single = [CALLGRAPH_FILE, STACKTRACE_FILE, BUGGY_METHODS_FILE]
        .iter()
        .any(|f| path.join(f).is_file());

    let mut results = BTreeMap::new();
    let mut warnings: BTreeMap<String, Vec<Warning>> = BTreeMap::new();
    let mut effective = BTreeMap::new();
    let mut skipped = Vec::new();
    if single {
        let id = bug_id(path);
        let case = distance_case(path, &id, opts, all_frames, overrides)?;
        report_warnings(&id, &case.warnings);
        results.insert(id.clone(), case.result);
        warnings.insert(id.clone(), case.warnings);
        effective.insert(id, case.effective);
    } else {
        let bugs = corpus(path)?;
        for bug in &bugs {
            let id = bug.id();
            match distance_case(&bug.dir, &id, opts, all_frames, overrides) {
                Ok(case) => {
                    report_warnings(&id, &case.warnings);
                    results.insert(id.clone(), case.result);
                    warnings.insert(id.clone(), case.warnings);
                    effective.insert(id, case.effective);
                }
                Err(e) => skipped.push(Skipped {
                    bug: id,
                    scope: None,
                    reason: e.message,
                }),
            }
        }
        report_skipped(&skipped);
        if results.is_empty() {
            return Err(CliError::new(EXIT_MISSING_ARTIFACT, "no bug has a usable call graph"));
        }
    }

    let summary = distance_report(&results);
    let text = match out.format {
        Format::Csv => summary.to_csv(),
        Format::Json => pretty(&json!({
            "config": {
                "undirected": opts.undirected,
                "all_frames": all_frames,
                "per_bug": effective,
            },
            "summary": summary,
            "warnings": warnings,
            "skipped": skipped,
        })),
    };
    emit(out.output.as_deref(), &text)
}
