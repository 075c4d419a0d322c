//! Stack-trace position ranking.

use std::collections::BTreeSet;

use crate::coverage::CoverageDataset;
use crate::method::MethodId;
use crate::sbfl::{rank, RankedList};
use crate::stacktrace::InternalFrameView;
use crate::warning::Warning;

/// Every spectra method plus the trace methods the spectra do not know.
pub fn ranking_universe(ds: &CoverageDataset, trace: &InternalFrameView) -> BTreeSet<MethodId> {
    let mut universe: BTreeSet<MethodId> = ds.methods().cloned().collect();
    for m in &trace.methods {
        if ds.resolve(m).is_empty() {
            universe.insert(m.clone());
        }
    }
    universe
}

/// Trace methods first, in internal-frame order; the rest of `universe`
/// follows in canonical order. Overloads matched by one trace method share
/// its position and are ordered canonically among themselves.
///
/// The score of a method at trace position `k` is `1/k`, 0 off the trace.
pub fn stack_trace_ranking(
    trace: &InternalFrameView,
    universe: &BTreeSet<MethodId>,
) -> (RankedList, Vec<Warning>) {
    let mut warnings = Vec::new();
    if trace.is_empty() {
        log::warn!("{}", Warning::EmptyTrace);
        warnings.push(Warning::EmptyTrace);
    }
    let mut placed: BTreeSet<&MethodId> = BTreeSet::new();
    let mut scores: Vec<(MethodId, f64)> = Vec::with_capacity(universe.len());
    for (i, method) in trace.methods.iter().enumerate() {
        let score = 1.0 / (i + 1) as f64;
        let mut hit = false;
        for u in universe.iter().filter(|u| u.matches(method)) {
            hit = true;
            if placed.insert(u) {
                scores.push((u.clone(), score));
            }
        }
        if !hit {
            // outside the declared universe; still ranked at its position
            scores.push((method.clone(), score));
        }
    }
    scores.extend(
        universe
            .iter()
            .filter(|u| !placed.contains(u))
            .map(|u| (u.clone(), 0.0)),
    );
    (rank(scores), warnings)
}
