//! Corpus evaluation and parameter sweeps over `<root>/<project>/<bug>/`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::bug::{localize, BugCase, Overrides, Technique};
use crate::error::{Error, Result};
use crate::eval::{aggregate, bug_metrics, AggregateMetrics, BugMetrics, TiePolicy};

pub const DEFAULT_X_GRID: [usize; 5] = [5, 10, 15, 20, 25];
pub const DEFAULT_M_GRID: [usize; 3] = [5, 10, 15];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct BugRef {
    pub project: String,
    pub bug: String,
    #[serde(skip)]
    pub dir: PathBuf,
}

impl BugRef {
    pub fn id(&self) -> String {
        format!("{}/{}", self.project, self.bug)
    }
}

fn subdirs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            out.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    out.sort();
    Ok(out)
}

/// Every `<project>/<bug>` directory under `root`, sorted.
pub fn discover(root: &Path) -> Result<Vec<BugRef>> {
    let mut bugs = Vec::new();
    for (project, pdir) in subdirs(root)? {
        for (bug, dir) in subdirs(&pdir)? {
            bugs.push(BugRef {
                project: project.clone(),
                bug,
                dir,
            });
        }
    }
    Ok(bugs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skipped {
    pub bug: String,
    /// Technique or grid point the reason applies to; `None` for the bug.
    pub scope: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub techniques: Vec<Technique>,
    pub overrides: Overrides,
    pub tie: TiePolicy,
    pub paper_mode: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            techniques: Technique::ALL.to_vec(),
            overrides: Overrides::default(),
            tie: TiePolicy::Ordinal,
            paper_mode: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub system: String,
    pub technique: Technique,
    #[serde(flatten)]
    pub metrics: AggregateMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BugResult {
    pub bug: String,
    pub technique: Technique,
    #[serde(flatten)]
    pub metrics: BugMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
    pub per_bug: Vec<BugResult>,
    pub skipped: Vec<Skipped>,
}

pub const TOTAL_ROW: &str = "Total";

fn metric_cells(a: &AggregateMetrics) -> String {
    format!("{},{},{},{:.5},{:.5}", a.top1, a.top3, a.top5, a.map, a.mrr)
}

impl EvaluationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("system,n_bugs,technique,top1,top3,top5,map,mrr\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.system, r.metrics.q, r.technique, metric_cells(&r.metrics));
        }
        out
    }

    /// Bugs scored for at least one technique.
    pub fn scored_bugs(&self) -> usize {
        let mut ids: Vec<&str> = self.per_bug.iter().map(|b| b.bug.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }
}

struct BugOutcome {
    results: Vec<BugResult>,
    skipped: Vec<Skipped>,
}

fn load(bug: &BugRef) -> std::result::Result<BugCase, Skipped> {
    let skip = |reason: String| Skipped {
        bug: bug.id(),
        scope: None,
        reason,
    };
    let case = BugCase::load(&bug.dir, bug.id()).map_err(|e| skip(e.to_string()))?;
    if case.truth.is_none() {
        return Err(skip(format!("{} missing", crate::bug::BUGGY_METHODS_FILE)));
    }
    Ok(case)
}

fn evaluate_bug(bug: &BugRef, opts: &EvalOptions) -> BugOutcome {
    let mut outcome = BugOutcome {
        results: Vec::new(),
        skipped: Vec::new(),
    };
    let case = match load(bug) {
        Ok(c) => c,
        Err(s) => {
            outcome.skipped.push(s);
            return outcome;
        }
    };
    let truth = case.truth.as_ref().expect("checked on load");
    let eff = case.effective(&opts.overrides);
    for &technique in &opts.techniques {
        let skip = |reason: String| Skipped {
            bug: bug.id(),
            scope: Some(technique.to_string()),
            reason,
        };
        if opts.paper_mode
            && technique == Technique::Ochiai
            && case.coverage.failing_tests().is_empty()
        {
            outcome
                .skipped
                .push(skip("excluded: no failing tests (paper mode)".into()));
            continue;
        }
        match localize(&case, technique, &eff) {
            Ok(loc) => outcome.results.push(BugResult {
                bug: bug.id(),
                technique,
                metrics: bug_metrics(&loc.ranking, truth, opts.tie),
            }),
            Err(e) => outcome.skipped.push(skip(e.to_string())),
        }
    }
    outcome
}

/// Scores every bug with every requested technique. Rows come per project
/// (sorted) and technique, followed by one `Total` row per technique.
pub fn evaluate(bugs: &[BugRef], opts: &EvalOptions) -> EvaluationReport {
    let outcomes: Vec<BugOutcome> = bugs.par_iter().map(|b| evaluate_bug(b, opts)).collect();

    let mut per_bug = Vec::new();
    let mut skipped = Vec::new();
    let mut by_project: BTreeMap<&str, BTreeMap<Technique, Vec<BugMetrics>>> = BTreeMap::new();
    let mut total: BTreeMap<Technique, Vec<BugMetrics>> = BTreeMap::new();
    for (bug, outcome) in bugs.iter().zip(outcomes) {
        let project = by_project.entry(bug.project.as_str()).or_default();
        for r in &outcome.results {
            project.entry(r.technique).or_default().push(r.metrics);
            total.entry(r.technique).or_default().push(r.metrics);
        }
        per_bug.extend(outcome.results);
        skipped.extend(outcome.skipped);
    }

    let mut rows = Vec::new();
    let mut emit = |system: &str, groups: &BTreeMap<Technique, Vec<BugMetrics>>| {
        for &technique in &opts.techniques {
            let metrics = groups.get(&technique).map_or(&[][..], Vec::as_slice);
            rows.push(ReportRow {
                system: system.to_string(),
                technique,
                metrics: aggregate(metrics),
            });
        }
    };
    for (project, groups) in &by_project {
        emit(project, groups);
    }
    emit(TOTAL_ROW, &total);

    EvaluationReport {
        rows,
        per_bug,
        skipped,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: usize,
    pub m: usize,
    #[serde(flatten)]
    pub metrics: AggregateMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<Skipped>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,m,n_bugs,top1,top3,top5,map,mrr\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.x, r.m, r.metrics.q, metric_cells(&r.metrics));
        }
        out
    }
}

/// SBEST over every `(x, m)` grid point, `x` outer. Grid values replace any
/// X/M from the command line or `bug.cfg`; other overrides still apply.
pub fn sweep(
    bugs: &[BugRef],
    xs: &[usize],
    ms: &[usize],
    overrides: &Overrides,
    tie: TiePolicy,
) -> Result<SweepReport> {
    if xs.is_empty() || ms.is_empty() {
        return Err(Error::Config("sweep grids must be non-empty".into()));
    }
    let grid: Vec<(usize, usize)> = xs.iter().flat_map(|&x| ms.iter().map(move |&m| (x, m))).collect();

    // per bug: one slot per grid point
    let per_bug: Vec<std::result::Result<Vec<std::result::Result<BugMetrics, String>>, Skipped>> = bugs
        .par_iter()
        .map(|bug| {
            let case = load(bug)?;
            let truth = case.truth.as_ref().expect("checked on load");
            Ok(grid
                .iter()
                .map(|&(x, m)| {
                    let o = Overrides {
                        x: Some(x),
                        m: Some(m),
                        ..overrides.clone()
                    };
                    let eff = case.effective(&o);
                    localize(&case, Technique::Sbest, &eff)
                        .map(|loc| bug_metrics(&loc.ranking, truth, tie))
                        .map_err(|e| e.to_string())
                })
                .collect())
        })
        .collect();

    let mut skipped = Vec::new();
    let mut columns: Vec<Vec<BugMetrics>> = vec![Vec::new(); grid.len()];
    for (bug, result) in bugs.iter().zip(per_bug) {
        match result {
            Err(s) => skipped.push(s),
            Ok(points) => {
                for (g, point) in points.into_iter().enumerate() {
                    match point {
                        Ok(m) => columns[g].push(m),
                        Err(reason) => skipped.push(Skipped {
                            bug: bug.id(),
                            scope: Some(format!("x={},m={}", grid[g].0, grid[g].1)),
                            reason,
                        }),
                    }
                }
            }
        }
    }
    let rows = grid
        .iter()
        .zip(&columns)
        .map(|(&(x, m), metrics)| SweepRow {
            x,
            m,
            metrics: aggregate(metrics),
        })
        .collect();
    Ok(SweepReport { rows, skipped })
}
