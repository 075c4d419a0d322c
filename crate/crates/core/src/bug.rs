//! Bug-directory loading and the single-bug localization pipeline.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::baselines::{ranking_universe, stack_trace_ranking};
use crate::callgraph::CallGraph;
use crate::coverage::CoverageDataset;
use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::sbest::{sb_score_only, sbest_rank, SbestConfig, SbestResult};
use crate::sbfl::{ochiai_baseline, RankedList};
use crate::stacktrace::{
    parse_stack_traces, select_internal_view, InternalFrameView, ParsedStackTrace, ParserConfig,
    TraceSelection,
};
use crate::warning::Warning;

pub const STACKTRACE_FILE: &str = "stacktrace.txt";
pub const BUGGY_METHODS_FILE: &str = "buggy_methods.txt";
pub const CALLGRAPH_FILE: &str = "callgraph.csv";
pub const CONFIG_FILE: &str = "bug.cfg";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Technique {
    Ochiai,
    #[serde(rename = "STACKTRACE")]
    StackTrace,
    SbOnly,
    Sbest,
}

impl Technique {
    pub const ALL: [Technique; 4] = [
        Technique::Ochiai,
        Technique::StackTrace,
        Technique::SbOnly,
        Technique::Sbest,
    ];

    pub fn needs_trace(self) -> bool {
        self != Technique::Ochiai
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Technique::Ochiai => "OCHIAI",
            Technique::StackTrace => "STACKTRACE",
            Technique::SbOnly => "SB_ONLY",
            Technique::Sbest => "SBEST",
        })
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "OCHIAI" => Ok(Technique::Ochiai),
            "STACKTRACE" | "STACK_TRACE" => Ok(Technique::StackTrace),
            "SB_ONLY" | "SB" => Ok(Technique::SbOnly),
            "SBEST" => Ok(Technique::Sbest),
            _ => Err(Error::Config(format!(
                "unknown technique `{s}` (expected ochiai, stacktrace, sb-only or sbest)"
            ))),
        }
    }
}

/// Contents of `bug.cfg`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BugConfig {
    pub internal_prefixes: Vec<String>,
    pub x: Option<usize>,
    pub m: Option<usize>,
    pub trace: Option<TraceSelection>,
}

impl BugConfig {
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut cfg = BugConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::format(file, i + 1, "expected key=value"));
            };
            let value = value.trim();
            let number = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::format(file, i + 1, format!("`{v}` is not a count")))
            };
            match key.trim() {
                "internal_prefixes" => cfg.internal_prefixes = split_prefixes(value),
                "x" | "X" => cfg.x = Some(number(value)?),
                "m" | "M" => cfg.m = Some(number(value)?),
                "trace" => {
                    cfg.trace = Some(value.parse().map_err(|e: Error| Error::format(file, i + 1, e.to_string()))?)
                }
                other => log::warn!("{file}:{}: ignoring unknown key `{other}`", i + 1),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        BugConfig::parse(&text, &path.display().to_string())
    }
}

pub fn split_prefixes(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(String::from)
        .collect()
}

/// Command-line values that take precedence over `bug.cfg`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub prefixes: Option<Vec<String>>,
    pub x: Option<usize>,
    pub m: Option<usize>,
    pub trace: Option<TraceSelection>,
}

/// Settings in force for one bug after precedence is applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Effective {
    pub x: usize,
    pub m: usize,
    pub internal_prefixes: Vec<String>,
    pub trace: String,
    #[serde(skip)]
    pub trace_selection: TraceSelection,
}

impl Effective {
    pub fn resolve(cli: &Overrides, cfg: &BugConfig) -> Self {
        let defaults = SbestConfig::default();
        let trace_selection = cli.trace.or(cfg.trace).unwrap_or_default();
        Effective {
            x: cli.x.or(cfg.x).unwrap_or(defaults.x),
            m: cli.m.or(cfg.m).unwrap_or(defaults.m),
            internal_prefixes: cli
                .prefixes
                .clone()
                .unwrap_or_else(|| cfg.internal_prefixes.clone()),
            trace: trace_selection.to_string(),
            trace_selection,
        }
    }

    pub fn sbest_config(&self) -> Result<SbestConfig> {
        SbestConfig::new(self.x, self.m)
    }
}

/// One bug directory, loaded.
#[derive(Debug, Clone)]
pub struct BugCase {
    pub id: String,
    pub dir: PathBuf,
    pub coverage: CoverageDataset,
    /// `None` when `stacktrace.txt` is absent.
    pub traces: Option<Vec<ParsedStackTrace>>,
    pub truth: Option<GroundTruth>,
    pub config: BugConfig,
}

impl BugCase {
    pub fn load(dir: &Path, id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if !dir.is_dir() {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "not a bug directory"),
            ));
        }
        let coverage = CoverageDataset::load(dir)?;
        let trace_path = dir.join(STACKTRACE_FILE);
        let traces = if trace_path.is_file() {
            let text = fs::read_to_string(&trace_path).map_err(|e| Error::io(&trace_path, e))?;
            Some(parse_stack_traces(&text, &ParserConfig::default()))
        } else {
            None
        };
        let truth_path = dir.join(BUGGY_METHODS_FILE);
        let truth = if truth_path.is_file() {
            Some(GroundTruth::load(&id, &truth_path)?)
        } else {
            None
        };
        let cfg_path = dir.join(CONFIG_FILE);
        let config = if cfg_path.is_file() {
            BugConfig::load(&cfg_path)?
        } else {
            BugConfig::default()
        };
        Ok(BugCase {
            id,
            dir: dir.to_path_buf(),
            coverage,
            traces,
            truth,
            config,
        })
    }

    pub fn effective(&self, cli: &Overrides) -> Effective {
        Effective::resolve(cli, &self.config)
    }

    pub fn internal_view(&self, eff: &Effective) -> Result<InternalFrameView> {
        let traces = self
            .traces
            .as_deref()
            .ok_or_else(|| Error::NoTrace(format!("{STACKTRACE_FILE} missing")))?;
        select_internal_view(traces, eff.trace_selection, &eff.internal_prefixes)
    }

    pub fn call_graph_path(&self) -> PathBuf {
        self.dir.join(CALLGRAPH_FILE)
    }

    /// `None` when the bug ships no call graph.
    pub fn call_graph(&self) -> Option<Result<CallGraph>> {
        let path = self.call_graph_path();
        path.is_file().then(|| CallGraph::load(&path))
    }
}

#[derive(Debug, Clone)]
pub struct Localization {
    pub technique: Technique,
    pub ranking: RankedList,
    pub warnings: Vec<Warning>,
    /// Proxy selection and score decomposition for SB_ONLY and SBEST.
    pub sbest: Option<SbestResult>,
}

pub fn localize(case: &BugCase, technique: Technique, eff: &Effective) -> Result<Localization> {
    match technique {
        Technique::Ochiai => {
            let (ranking, warnings) = ochiai_baseline(&case.coverage);
            Ok(Localization {
                technique,
                ranking,
                warnings,
                sbest: None,
            })
        }
        Technique::StackTrace => {
            let view = case.internal_view(eff)?;
            let universe = ranking_universe(&case.coverage, &view);
            let (ranking, warnings) = stack_trace_ranking(&view, &universe);
            Ok(Localization {
                technique,
                ranking,
                warnings,
                sbest: None,
            })
        }
        Technique::SbOnly | Technique::Sbest => {
            let view = case.internal_view(eff)?;
            let cfg = eff.sbest_config()?;
            let result = if technique == Technique::Sbest {
                sbest_rank(&case.coverage, &view, &cfg)?
            } else {
                sb_score_only(&case.coverage, &view, &cfg)?
            };
            Ok(Localization {
                technique,
                ranking: result.ranking.clone(),
                warnings: result.warnings.clone(),
                sbest: Some(result),
            })
        }
    }
}
