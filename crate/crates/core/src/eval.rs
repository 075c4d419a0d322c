//! Ranking-quality metrics: P@k, AP/MAP, reciprocal rank/MRR and Top-K.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::method::MethodId;
use crate::sbfl::RankedList;

/// The buggy methods of one bug; never empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    pub bug_id: String,
    pub buggy_methods: Vec<MethodId>,
}

impl GroundTruth {
    pub fn new(bug_id: impl Into<String>, methods: Vec<MethodId>) -> Result<Self> {
        let mut buggy_methods = methods;
        buggy_methods.sort();
        buggy_methods.dedup();
        let bug_id = bug_id.into();
        if buggy_methods.is_empty() {
            return Err(Error::Config(format!("bug {bug_id}: no buggy methods")));
        }
        Ok(GroundTruth {
            bug_id,
            buggy_methods,
        })
    }

    /// Reads `buggy_methods.txt`: one canonical method id per line, `#`
    /// comments allowed.
    pub fn load(bug_id: &str, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut methods = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let m = line
                .parse()
                .map_err(|e: Error| Error::format(path.display().to_string(), i + 1, e.to_string()))?;
            methods.push(m);
        }
        GroundTruth::new(bug_id, methods)
    }
}

/// How equal-score groups are ordered when computing metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    /// The ranking's own ordinal order (canonical method id).
    #[default]
    Ordinal,
    /// Buggy methods first within each tie group.
    Best,
    /// Buggy methods last within each tie group.
    Worst,
}

impl FromStr for TiePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ordinal" => Ok(TiePolicy::Ordinal),
            "best" => Ok(TiePolicy::Best),
            "worst" => Ok(TiePolicy::Worst),
            _ => Err(Error::Config(format!("tie policy `{s}`: expected ordinal, best or worst"))),
        }
    }
}

impl std::fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TiePolicy::Ordinal => "ordinal",
            TiePolicy::Best => "best",
            TiePolicy::Worst => "worst",
        })
    }
}

/// Relevance flag per ranked position. Each buggy method is credited at
/// most once, at the first entry matching it.
fn relevance(ranked: &RankedList, truth: &GroundTruth, tie: TiePolicy) -> Vec<bool> {
    let mut order: Vec<(f64, &MethodId, bool)> = ranked
        .entries
        .iter()
        .map(|e| {
            let hit = truth.buggy_methods.iter().any(|b| b.matches(&e.method));
            (e.score, &e.method, hit)
        })
        .collect();
    if tie != TiePolicy::Ordinal {
        let mut start = 0;
        while start < order.len() {
            let mut end = start + 1;
            while end < order.len() && order[end].0 == order[start].0 {
                end += 1;
            }
            // stable: non-relevant order is preserved
            order[start..end].sort_by_key(|&(_, _, hit)| if tie == TiePolicy::Best { !hit } else { hit });
            start = end;
        }
    }
    let mut claimed = vec![false; truth.buggy_methods.len()];
    order
        .into_iter()
        .map(|(_, method, hit)| {
            if !hit {
                return false;
            }
            match truth
                .buggy_methods
                .iter()
                .enumerate()
                .find(|(i, b)| !claimed[*i] && b.matches(method))
            {
                Some((i, _)) => {
                    claimed[i] = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

pub fn precision_at_k(ranked: &RankedList, truth: &GroundTruth, k: usize) -> Result<f64> {
    if k == 0 || k > ranked.len() {
        return Err(Error::CutoffOutOfRange { k, len: ranked.len() });
    }
    let rel = relevance(ranked, truth, TiePolicy::Ordinal);
    Ok(rel[..k].iter().filter(|&&r| r).count() as f64 / k as f64)
}

fn ap_of(rel: &[bool], faulty: usize) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &r) in rel.iter().enumerate() {
        if r {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / faulty as f64
}

/// Mean of P@k over the ranks holding a buggy method, divided by the total
/// number of buggy methods (so unranked buggy methods lower the score).
pub fn average_precision(ranked: &RankedList, truth: &GroundTruth) -> f64 {
    ap_of(&relevance(ranked, truth, TiePolicy::Ordinal), truth.buggy_methods.len())
}

/// `1 / r` for the first buggy rank `r`; 0 when none is ranked.
pub fn reciprocal_rank(ranked: &RankedList, truth: &GroundTruth) -> f64 {
    relevance(ranked, truth, TiePolicy::Ordinal)
        .iter()
        .position(|&r| r)
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BugMetrics {
    pub ap: f64,
    pub first_rank: Option<usize>,
    pub reciprocal_rank: f64,
    pub top1: bool,
    pub top3: bool,
    pub top5: bool,
}

impl BugMetrics {
    pub fn top(&self, k: usize) -> bool {
        self.first_rank.is_some_and(|r| r <= k)
    }
}

pub fn bug_metrics(ranked: &RankedList, truth: &GroundTruth, tie: TiePolicy) -> BugMetrics {
    let rel = relevance(ranked, truth, tie);
    let first_rank = rel.iter().position(|&r| r).map(|i| i + 1);
    let within = |k: usize| first_rank.is_some_and(|r| r <= k);
    BugMetrics {
        ap: ap_of(&rel, truth.buggy_methods.len()),
        first_rank,
        reciprocal_rank: first_rank.map_or(0.0, |r| 1.0 / r as f64),
        top1: within(1),
        top3: within(3),
        top5: within(5),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateMetrics {
    pub q: usize,
    pub map: f64,
    pub mrr: f64,
    pub top1: usize,
    pub top3: usize,
    pub top5: usize,
}

/// Means of AP and RR and Top-K hit counts. An empty slice yields zeros.
pub fn aggregate(per_bug: &[BugMetrics]) -> AggregateMetrics {
    let q = per_bug.len();
    let mean = |f: fn(&BugMetrics) -> f64| {
        if q == 0 {
            0.0
        } else {
            per_bug.iter().map(f).sum::<f64>() / q as f64
        }
    };
    AggregateMetrics {
        q,
        map: mean(|b| b.ap),
        mrr: mean(|b| b.reciprocal_rank),
        top1: per_bug.iter().filter(|b| b.top1).count(),
        top3: per_bug.iter().filter(|b| b.top3).count(),
        top5: per_bug.iter().filter(|b| b.top5).count(),
    }
}
