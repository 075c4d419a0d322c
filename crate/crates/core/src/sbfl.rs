//! Method-level spectrum counts, the Ochiai formula and deterministic
//! ranking.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::coverage::CoverageDataset;
use crate::method::MethodId;
use crate::warning::Warning;

/// Per-method partition of the test suite by (covered, failed).
///
/// The first digit is coverage, the second the outcome: `n10` counts passing
/// tests that cover the method.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SpectrumCounts {
    pub n00: usize,
    pub n10: usize,
    pub n01: usize,
    pub n11: usize,
}

impl SpectrumCounts {
    pub fn total(&self) -> usize {
        self.n00 + self.n10 + self.n01 + self.n11
    }
}

/// Counts for every spectra method, treating `failing` as the failing set
/// and all other tests as passing. A method is covered by a test when at
/// least one of its lines is hit.
pub fn spectrum_counts(
    ds: &CoverageDataset,
    failing: &BTreeSet<usize>,
) -> BTreeMap<MethodId, SpectrumCounts> {
    let tests = ds.tests().len();
    ds.method_index()
        .iter()
        .map(|(method, cols)| {
            let mut c = SpectrumCounts::default();
            for t in 0..tests {
                let covered = ds.matrix().count_in(t, cols) > 0;
                match (covered, failing.contains(&t)) {
                    (false, false) => c.n00 += 1,
                    (true, false) => c.n10 += 1,
                    (false, true) => c.n01 += 1,
                    (true, true) => c.n11 += 1,
                }
            }
            (method.clone(), c)
        })
        .collect()
}

/// `n11 / sqrt((n11 + n01) * (n11 + n10))`, or 0 when the denominator is 0.
pub fn ochiai(c: &SpectrumCounts) -> f64 {
    let denom = ((c.n11 + c.n01) as f64 * (c.n11 + c.n10) as f64).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        c.n11 as f64 / denom
    }
}

pub const TIE_POLICY: &str = "score-desc/method-asc";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub rank: usize,
    pub method: MethodId,
    pub score: f64,
}

/// Methods in a deterministic total order: score descending, then canonical
/// method id ascending. Ranks are ordinal, 1..=N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
    pub tie_policy: &'static str,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodId> {
        self.entries.iter().map(|e| &e.method)
    }

    pub fn rank_of(&self, method: &MethodId) -> Option<usize> {
        self.entries.iter().find(|e| &e.method == method).map(|e| e.rank)
    }

    pub fn score_of(&self, method: &MethodId) -> Option<f64> {
        self.entries.iter().find(|e| &e.method == method).map(|e| e.score)
    }

    /// `rank,method,score` with scores at 6 decimals (ties to even).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,method,score\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{:.6}\n", e.rank, csv_quote(&e.method.to_string()), e.score));
        }
        out
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Ranks `scores` by descending score with canonical-id tie-break.
pub fn rank<I>(scores: I) -> RankedList
where
    I: IntoIterator<Item = (MethodId, f64)>,
{
    let mut items: Vec<(MethodId, f64)> = scores
        .into_iter()
        .map(|(m, s)| {
            debug_assert!(s.is_finite(), "non-finite score for {m}");
            // fold -0.0 into 0.0 so total_cmp agrees with ==
            (m, s + 0.0)
        })
        .collect();
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    RankedList {
        entries: items
            .into_iter()
            .enumerate()
            .map(|(i, (method, score))| RankedEntry {
                rank: i + 1,
                method,
                score,
            })
            .collect(),
        tie_policy: TIE_POLICY,
    }
}

/// Ochiai scores for the given failing set.
pub fn ochiai_scores(ds: &CoverageDataset, failing: &BTreeSet<usize>) -> BTreeMap<MethodId, f64> {
    spectrum_counts(ds, failing)
        .into_iter()
        .map(|(m, c)| (m, ochiai(&c)))
        .collect()
}

/// Plain Ochiai over the dataset's actual failing tests.
pub fn ochiai_baseline(ds: &CoverageDataset) -> (RankedList, Vec<Warning>) {
    let failing = ds.failing_tests();
    let mut warnings = Vec::new();
    if failing.is_empty() {
        log::warn!("{}", Warning::NoFailingTests);
        warnings.push(Warning::NoFailingTests);
    }
    (rank(ochiai_scores(ds, &failing)), warnings)
}
