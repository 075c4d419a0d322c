//! Stack-trace-driven localization without fault-triggering tests.
//!
//! The tests covering the most lines of the top stack-trace methods stand in
//! for the failing set of an Ochiai computation (the SB score); a positional
//! bonus for methods on the trace (the ST score) is added on top.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::coverage::CoverageDataset;
use crate::error::{Error, Result};
use crate::method::MethodId;
use crate::sbfl::{ochiai_scores, rank, RankedList};
use crate::stacktrace::{top_internal_methods, InternalFrameView};
use crate::warning::Warning;

/// Trace ranks beyond this all receive [`ST_FLOOR`].
pub const ST_CAP_RANK: usize = 10;
pub const ST_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SbestConfig {
    /// Number of proxy failing tests.
    pub x: usize,
    /// Number of top internal stack methods used to pick the proxies.
    pub m: usize,
}

impl Default for SbestConfig {
    fn default() -> Self {
        SbestConfig { x: 15, m: 5 }
    }
}

impl SbestConfig {
    pub fn new(x: usize, m: usize) -> Result<Self> {
        let cfg = SbestConfig { x, m };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x == 0 || self.m == 0 {
            return Err(Error::Config(format!(
                "X and M must be at least 1 (got X={}, M={})",
                self.x, self.m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProxySelection {
    /// Covered lines of the top trace methods, indexed by test id.
    pub per_test_score: Vec<usize>,
    /// Proxy failing tests, best first.
    pub selected: Vec<usize>,
    /// Fewer than X tests had a positive score.
    pub truncated: bool,
}

impl ProxySelection {
    pub fn failing_set(&self) -> BTreeSet<usize> {
        self.selected.iter().copied().collect()
    }
}

/// Score components for one method. `total - st_score == sb_score` holds
/// exactly in floating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SbestScores {
    pub sb_score: f64,
    pub st_score: f64,
    pub total: f64,
}

impl SbestScores {
    /// Combines an SB and an ST score. The stored SB component is the
    /// rounding-consistent `total - st`, which differs from `sb` by at most
    /// one ulp of the total.
    pub fn combine(sb: f64, st: f64) -> Self {
        let total = sb + st;
        SbestScores {
            sb_score: total - st,
            st_score: st,
            total,
        }
    }
}

/// Spectra methods corresponding to the given trace methods, deduplicated.
fn resolve_all<'a>(ds: &'a CoverageDataset, methods: &[MethodId]) -> BTreeSet<&'a MethodId> {
    methods.iter().flat_map(|m| ds.resolve(m)).collect()
}

/// Sum over the top trace methods of the lines of each method hit by test `t`.
pub fn st_covered_lines(ds: &CoverageDataset, top_methods: &[MethodId], t: usize) -> usize {
    resolve_all(ds, top_methods)
        .into_iter()
        .map(|m| ds.covered_lines(t, m))
        .sum()
}

/// Picks the `x` tests with the most covered trace-method lines, ties broken
/// by test name. Tests covering none of those lines are never selected.
pub fn select_proxy_failing(
    ds: &CoverageDataset,
    top_methods: &[MethodId],
    x: usize,
) -> Result<ProxySelection> {
    let resolved = resolve_all(ds, top_methods);
    let per_test_score: Vec<usize> = (0..ds.tests().len())
        .map(|t| resolved.iter().map(|m| ds.covered_lines(t, m)).sum())
        .collect();
    let mut candidates: Vec<usize> = (0..ds.tests().len())
        .filter(|&t| per_test_score[t] > 0)
        .collect();
    if candidates.is_empty() {
        return Err(Error::DisjointTrace(top_methods.len()));
    }
    let tests = ds.tests();
    candidates.sort_by(|&a, &b| {
        per_test_score[b]
            .cmp(&per_test_score[a])
            .then_with(|| tests[a].name.cmp(&tests[b].name))
            .then_with(|| a.cmp(&b))
    });
    let truncated = candidates.len() < x;
    candidates.truncate(x);
    Ok(ProxySelection {
        per_test_score,
        selected: candidates,
        truncated,
    })
}

/// Positional bonus: `1/rank` up to rank 10, 0.1 beyond, 0 off the trace.
pub fn st_score(method: &MethodId, internal: &InternalFrameView) -> f64 {
    match internal.position(method) {
        Some(r) if r <= ST_CAP_RANK => 1.0 / r as f64,
        Some(_) => ST_FLOOR,
        None => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SbestResult {
    pub ranking: RankedList,
    pub scores: BTreeMap<MethodId, SbestScores>,
    pub selection: ProxySelection,
    pub top_methods: Vec<MethodId>,
    pub warnings: Vec<Warning>,
}

fn run(
    ds: &CoverageDataset,
    trace: &InternalFrameView,
    cfg: &SbestConfig,
    with_st: bool,
) -> Result<SbestResult> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    if trace.is_empty() {
        warnings.push(Warning::EmptyTrace);
    }
    let top_methods = top_internal_methods(trace, cfg.m).to_vec();

    let coarse = trace
        .methods
        .iter()
        .filter(|m| ds.columns_of(m).is_none() && !ds.resolve(m).is_empty())
        .count();
    if coarse > 0 {
        log::warn!("{}", Warning::CoarseMatch { methods: coarse });
        warnings.push(Warning::CoarseMatch { methods: coarse });
    }

    let selection = match select_proxy_failing(ds, &top_methods, cfg.x) {
        Ok(sel) => {
            if sel.truncated {
                warnings.push(Warning::ProxyTruncated {
                    selected: sel.selected.len(),
                    threshold: cfg.x,
                });
            }
            sel
        }
        Err(Error::DisjointTrace(n)) => {
            let w = Warning::ProxyDisjoint { top_methods: n };
            log::warn!("{w}");
            warnings.push(w);
            ProxySelection {
                per_test_score: vec![0; ds.tests().len()],
                selected: Vec::new(),
                truncated: true,
            }
        }
        Err(e) => return Err(e),
    };

    let sb = ochiai_scores(ds, &selection.failing_set());

    // ST scores by first trace position; trace methods unknown to the
    // spectra join the universe with a zero SB score
    let mut st: BTreeMap<MethodId, f64> = BTreeMap::new();
    for (i, method) in trace.methods.iter().enumerate() {
        let value = match i + 1 {
            r if r <= ST_CAP_RANK => 1.0 / r as f64,
            _ => ST_FLOOR,
        };
        let resolved = ds.resolve(method);
        if resolved.is_empty() {
            st.entry(method.clone()).or_insert(value);
        }
        for target in resolved {
            st.entry(target.clone()).or_insert(value);
        }
    }

    let mut scores = BTreeMap::new();
    for (method, &sb_raw) in &sb {
        let st_value = if with_st { st.get(method).copied().unwrap_or(0.0) } else { 0.0 };
        scores.insert(method.clone(), SbestScores::combine(sb_raw, st_value));
    }
    for (method, &st_value) in &st {
        if !scores.contains_key(method) {
            let st_value = if with_st { st_value } else { 0.0 };
            scores.insert(method.clone(), SbestScores::combine(0.0, st_value));
        }
    }

    let ranking = rank(scores.iter().map(|(m, s)| (m.clone(), s.total)));
    Ok(SbestResult {
        ranking,
        scores,
        selection,
        top_methods,
        warnings,
    })
}

/// Full ranking: SB score over the proxy failing set plus the ST score.
pub fn sbest_rank(
    ds: &CoverageDataset,
    trace: &InternalFrameView,
    cfg: &SbestConfig,
) -> Result<SbestResult> {
    run(ds, trace, cfg, true)
}

/// The same pipeline with the positional bonus disabled.
pub fn sb_score_only(
    ds: &CoverageDataset,
    trace: &InternalFrameView,
    cfg: &SbestConfig,
) -> Result<SbestResult> {
    run(ds, trace, cfg, false)
}

/// Audit dump of a run: per-test covered trace lines, the proxy set and the
/// per-method score decomposition.
pub fn explain(ds: &CoverageDataset, result: &SbestResult) -> serde_json::Value {
    let tests = ds.tests();
    let per_test: Vec<_> = result
        .selection
        .per_test_score
        .iter()
        .enumerate()
        .map(|(t, &lines)| {
            serde_json::json!({
                "test": tests[t].name,
                "st_covered_lines": lines,
                "selected": result.selection.selected.contains(&t),
            })
        })
        .collect();
    let selected: Vec<&str> = result
        .selection
        .selected
        .iter()
        .map(|&t| tests[t].name.as_str())
        .collect();
    let methods: Vec<_> = result
        .ranking
        .entries
        .iter()
        .map(|e| {
            let s = &result.scores[&e.method];
            serde_json::json!({
                "rank": e.rank,
                "method": e.method,
                "sb_score": s.sb_score,
                "st_score": s.st_score,
                "total": s.total,
            })
        })
        .collect();
    serde_json::json!({
        "top_methods": result.top_methods,
        "per_test": per_test,
        "selected": selected,
        "truncated": result.selection.truncated,
        "methods": methods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{BitMatrix, LineInfo, Outcome};
    use crate::sbfl::ochiai;
    use proptest::prelude::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn m(s: &str) -> MethodId {
        s.parse().unwrap()
    }

    fn view(names: &[&str]) -> InternalFrameView {
        InternalFrameView {
            methods: names.iter().map(|n| m(n)).collect(),
        }
    }

    /// `lines[j]` lines for method j; `hits[t][j]` lines of method j hit by t.
    fn dataset(names: &[&str], lines: &[usize], hits: &[Vec<usize>]) -> CoverageDataset {
        let tests = names.iter().map(|n| (n.to_string(), Outcome::Pass)).collect();
        let mut cols = Vec::new();
        let mut owner = Vec::new();
        for (j, &n) in lines.iter().enumerate() {
            for k in 0..n {
                cols.push(LineInfo::parse(&format!("app$C#m{j}:{}", 100 * j + k + 1)).unwrap());
                owner.push((j, k));
            }
        }
        let mut matrix = BitMatrix::new(names.len(), cols.len());
        for (t, row) in hits.iter().enumerate() {
            for (c, &(j, k)) in owner.iter().enumerate() {
                matrix.set(t, c, k < row[j]);
            }
        }
        CoverageDataset::from_parts(tests, cols, matrix).unwrap()
    }

    #[test]
    fn st_score_table() {
        let v = InternalFrameView {
            methods: (1..=12).map(|i| m(&format!("app$C#f{i}"))).collect(),
        };
        assert_eq!(st_score(&m("app$C#f1"), &v), 1.0);
        assert_eq!(st_score(&m("app$C#f2"), &v), 0.5);
        assert_eq!(st_score(&m("app$C#f10"), &v), 0.1);
        assert_eq!(st_score(&m("app$C#f11"), &v), 0.1);
        assert_eq!(st_score(&m("app$C#nope"), &v), 0.0);
    }

    #[test]
    fn covered_lines_sum_over_top_methods() {
        let ds = dataset(
            &["t0", "t1"],
            &[3, 1, 1, 2, 4],
            &[vec![3, 0, 0, 2, 0], vec![0, 0, 0, 0, 4]],
        );
        let top = vec![m("app$C#m0"), m("app$C#m1"), m("app$C#m2"), m("app$C#m3")];
        assert_eq!(st_covered_lines(&ds, &top, 0), 5);
        assert_eq!(st_covered_lines(&ds, &top, 1), 0);
    }

    #[test]
    fn covered_lines_match_column_walk() {
        let mut rng = StdRng::seed_from_u64(3);
        let lines = [2, 3, 1, 4, 2, 3];
        let hits: Vec<Vec<usize>> = (0..8)
            .map(|_| lines.iter().map(|&n| rng.gen_range(0..=n)).collect())
            .collect();
        let names: Vec<String> = (0..8).map(|i| format!("t{i}")).collect();
        let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let ds = dataset(&name_refs, &lines, &hits);
        let top = vec![m("app$C#m1"), m("app$C#m3"), m("app$C#m4")];
        for t in 0..8 {
            // walk every column, keep those whose spectra row names a top method
            let expect = (0..ds.lines().len())
                .filter(|&c| {
                    let owner = ds.lines()[c].method.as_ref().unwrap();
                    top.contains(owner) && ds.matrix().get(t, c)
                })
                .count();
            assert_eq!(st_covered_lines(&ds, &top, t), expect);
        }
    }

    #[test]
    fn selects_exactly_x_highest() {
        let names: Vec<String> = (0..20).map(|i| format!("t{i:02}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        // tests 0..17 cover i+1 lines of a 20-line method, the rest nothing
        let hits: Vec<Vec<usize>> = (0..20).map(|i| vec![if i < 17 { i + 1 } else { 0 }]).collect();
        let ds = dataset(&refs, &[20], &hits);
        let sel = select_proxy_failing(&ds, &[m("app$C#m0")], 15).unwrap();
        assert_eq!(sel.selected.len(), 15);
        assert!(!sel.truncated);
        let expect: Vec<usize> = (2..17).rev().collect();
        assert_eq!(sel.selected, expect);
    }

    #[test]
    fn fewer_candidates_than_threshold() {
        let hits: Vec<Vec<usize>> = (0..10).map(|i| vec![usize::from(i < 7)]).collect();
        let names: Vec<String> = (0..10).map(|i| format!("t{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let ds = dataset(&refs, &[1], &hits);
        let sel = select_proxy_failing(&ds, &[m("app$C#m0")], 15).unwrap();
        assert_eq!(sel.selected.len(), 7);
        assert!(sel.truncated);
        assert!(sel.selected.iter().all(|&t| sel.per_test_score[t] >= 1));
    }

    #[test]
    fn boundary_tie_goes_to_smaller_name() {
        // "beta" and "alpha" tie at 9 for the last slot
        let ds = dataset(&["zeta", "beta", "alpha"], &[12], &[vec![12], vec![9], vec![9]]);
        let sel = select_proxy_failing(&ds, &[m("app$C#m0")], 2).unwrap();
        assert_eq!(sel.selected, vec![0, 2]);
    }

    #[test]
    fn disjoint_trace_is_an_error() {
        let ds = dataset(&["a", "b"], &[1, 1], &[vec![1, 0], vec![1, 0]]);
        assert!(matches!(
            select_proxy_failing(&ds, &[m("app$C#m1")], 15),
            Err(Error::DisjointTrace(1))
        ));
        assert!(matches!(
            select_proxy_failing(&ds, &[], 15),
            Err(Error::DisjointTrace(0))
        ));
    }

    #[test]
    fn planted_fault_at_trace_top_ranks_first() {
        // 5 methods, 12 tests; m0 is on top of the trace
        let mut hits = Vec::new();
        for t in 0..12 {
            hits.push(vec![
                if t < 4 { 2 } else { 0 },
                usize::from(!(4..10).contains(&t)),
                usize::from(t % 2 == 0),
                usize::from(t >= 6),
                1,
            ]);
        }
        let names: Vec<String> = (0..12).map(|i| format!("t{i:02}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let ds = dataset(&refs, &[2, 1, 1, 1, 1], &hits);
        let trace = view(&["app$C#m0", "app$C#m1"]);
        let cfg = SbestConfig::new(3, 5).unwrap();
        let res = sbest_rank(&ds, &trace, &cfg).unwrap();
        // per-test covered lines: t0..t3 → 3, t10,t11 → 1; proxies t00,t01,t02
        assert_eq!(res.selection.selected, vec![0, 1, 2]);
        // m0: n11=3, n10=1, n01=0 → 3/sqrt(3*4)
        let s0 = res.scores[&m("app$C#m0")];
        assert!((s0.sb_score - 3.0 / 12f64.sqrt()).abs() < 1e-12);
        assert_eq!(s0.st_score, 1.0);
        assert_eq!(res.ranking.entries[0].method, m("app$C#m0"));
        // m1: n11=3, n10=3 → 3/sqrt(18), plus 0.5
        let s1 = res.scores[&m("app$C#m1")];
        assert!((s1.total - (3.0 / 18f64.sqrt() + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn composed_worked_values() {
        let s = SbestScores::combine(6.0 / 128f64.sqrt(), 0.5);
        assert!((s.total - 1.030).abs() < 5e-4);
        assert_eq!(s.total - s.st_score, s.sb_score);
    }

    #[test]
    fn m_beyond_trace_length_truncates() {
        let ds = dataset(&["a", "b", "c"], &[1, 1, 1], &[vec![1, 0, 0], vec![1, 1, 0], vec![0, 0, 1]]);
        let trace = view(&["app$C#m0", "app$C#m1"]);
        let big = sbest_rank(&ds, &trace, &SbestConfig::new(15, 50).unwrap()).unwrap();
        let exact = sbest_rank(&ds, &trace, &SbestConfig::new(15, 2).unwrap()).unwrap();
        assert_eq!(big.ranking, exact.ranking);
        assert_eq!(big.top_methods.len(), 2);
    }

    #[test]
    fn off_spectra_trace_method_keeps_st_score() {
        let ds = dataset(&["a", "b"], &[1], &[vec![1], vec![0]]);
        let trace = view(&["app$Gone#g", "app$C#m0"]);
        let res = sbest_rank(&ds, &trace, &SbestConfig::default()).unwrap();
        let gone = res.scores[&m("app$Gone#g")];
        assert_eq!((gone.sb_score, gone.st_score), (0.0, 1.0));
        // m0: SB 1 (its only covering test is the proxy) plus ST 1/2
        assert_eq!(res.ranking.entries[0].method, m("app$C#m0"));
        assert_eq!(res.ranking.entries[0].score, 1.5);
        assert_eq!(res.ranking.entries[1].method, m("app$Gone#g"));
    }

    #[test]
    fn sb_only_is_sbest_minus_st() {
        let ds = dataset(
            &["a", "b", "c", "d"],
            &[2, 1, 3],
            &[vec![2, 0, 1], vec![1, 1, 0], vec![0, 1, 3], vec![0, 0, 0]],
        );
        let trace = view(&["app$C#m2", "app$C#m0"]);
        let cfg = SbestConfig::default();
        let full = sbest_rank(&ds, &trace, &cfg).unwrap();
        let sb = sb_score_only(&ds, &trace, &cfg).unwrap();
        for (method, s) in &full.scores {
            let only = sb.scores[method].total;
            assert!((s.total - s.st_score - only).abs() <= 2.0 * f64::EPSILON);
            assert_eq!(sb.scores[method].st_score, 0.0);
        }
    }

    #[test]
    fn sb_only_equals_ochiai_with_proxy_failing_set() {
        let mut rng = StdRng::seed_from_u64(12);
        let lines = [2, 3, 1, 2, 2];
        let hits: Vec<Vec<usize>> = (0..12)
            .map(|_| lines.iter().map(|&n| rng.gen_range(0..=n)).collect())
            .collect();
        let names: Vec<String> = (0..12).map(|i| format!("t{i:02}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let ds = dataset(&refs, &lines, &hits);
        let trace = view(&["app$C#m3", "app$C#m1"]);
        let cfg = SbestConfig::new(4, 5).unwrap();
        let res = sb_score_only(&ds, &trace, &cfg).unwrap();

        // independent route: rebuild the dataset with the proxies marked FAIL
        let proxies = res.selection.failing_set();
        let relabeled = CoverageDataset::from_parts(
            ds.tests()
                .iter()
                .map(|t| {
                    let o = if proxies.contains(&t.test_id) { Outcome::Fail } else { Outcome::Pass };
                    (t.name.clone(), o)
                })
                .collect(),
            ds.lines().to_vec(),
            ds.matrix().clone(),
        )
        .unwrap();
        let (baseline, _) = crate::sbfl::ochiai_baseline(&relabeled);
        assert_eq!(res.ranking, baseline);
    }

    #[test]
    fn disjoint_falls_back_to_st_only() {
        let ds = dataset(&["a", "b"], &[1, 1], &[vec![1, 0], vec![1, 0]]);
        let trace = view(&["app$C#m1", "app$Other#x"]);
        let res = sbest_rank(&ds, &trace, &SbestConfig::default()).unwrap();
        assert!(res.warnings.contains(&Warning::ProxyDisjoint { top_methods: 2 }));
        assert!(res.scores.values().all(|s| s.sb_score == 0.0));
        assert_eq!(res.ranking.entries[0].method, m("app$C#m1"));
        let sb = sb_score_only(&ds, &trace, &SbestConfig::default()).unwrap();
        assert!(sb.ranking.entries.iter().all(|e| e.score == 0.0));
    }

    #[test]
    fn empty_trace_does_not_panic() {
        let ds = dataset(&["a"], &[1], &[vec![1]]);
        let res = sbest_rank(&ds, &InternalFrameView::default(), &SbestConfig::default()).unwrap();
        assert!(res.warnings.contains(&Warning::EmptyTrace));
        assert!(res.ranking.entries.iter().all(|e| e.score == 0.0));
    }

    #[test]
    fn signature_overloads_share_trace_position() {
        let tests = vec![("t1".to_string(), Outcome::Pass), ("t2".to_string(), Outcome::Pass)];
        let lines = ["app$C#f(int):1", "app$C#f(long):5", "app$C#g():9"]
            .iter()
            .map(|s| LineInfo::parse(s).unwrap())
            .collect();
        let mut matrix = BitMatrix::new(2, 3);
        matrix.set(0, 0, true);
        matrix.set(1, 2, true);
        let ds = CoverageDataset::from_parts(tests, lines, matrix).unwrap();
        let trace = view(&["app$C#f"]);
        let res = sbest_rank(&ds, &trace, &SbestConfig::default()).unwrap();
        assert_eq!(res.scores[&m("app$C#f(int)")].st_score, 1.0);
        assert_eq!(res.scores[&m("app$C#f(long)")].st_score, 1.0);
        assert!(res.warnings.contains(&Warning::CoarseMatch { methods: 1 }));
        assert_eq!(st_covered_lines(&ds, &trace.methods, 0), 1);
    }

    proptest! {
        #[test]
        fn proxy_sets_are_nested_in_x(seed in any::<u64>(), x in 1usize..12) {
            let mut rng = StdRng::seed_from_u64(seed);
            let lines = [3, 2, 4];
            let hits: Vec<Vec<usize>> = (0..14)
                .map(|_| lines.iter().map(|&n| if rng.gen_bool(0.6) { rng.gen_range(0..=n) } else { 0 }).collect())
                .collect();
            let names: Vec<String> = (0..14).map(|i| format!("t{}", (i * 7) % 14)).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let ds = dataset(&refs, &lines, &hits);
            let top = vec![m("app$C#m0"), m("app$C#m2")];
            if let (Ok(a), Ok(b)) = (select_proxy_failing(&ds, &top, x), select_proxy_failing(&ds, &top, x + 1)) {
                prop_assert!(a.failing_set().is_subset(&b.failing_set()));
                prop_assert!(b.selected.starts_with(&a.selected));
                prop_assert!(a.selected.iter().all(|&t| a.per_test_score[t] > 0));
            }
        }

        #[test]
        fn decomposition_and_bounds(seed in any::<u64>()) {
            let mut rng = StdRng::seed_from_u64(seed);
            let lines: Vec<usize> = (0..6).map(|_| rng.gen_range(1..4)).collect();
            let hits: Vec<Vec<usize>> = (0..10)
                .map(|_| lines.iter().map(|&n| rng.gen_range(0..=n)).collect())
                .collect();
            let names: Vec<String> = (0..10).map(|i| format!("t{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let ds = dataset(&refs, &lines, &hits);
            let trace_len = rng.gen_range(1..6);
            let trace = InternalFrameView {
                methods: (0..trace_len).map(|j| m(&format!("app$C#m{}", (j * 5 + 1) % 6))).collect(),
            };
            let res = sbest_rank(&ds, &trace, &SbestConfig::new(rng.gen_range(1..8), rng.gen_range(1..6)).unwrap()).unwrap();
            for s in res.scores.values() {
                prop_assert_eq!(s.total - s.st_score, s.sb_score);
                prop_assert_eq!(s.sb_score + s.st_score, s.total);
                prop_assert!((0.0..=2.0).contains(&s.total));
                prop_assert!((0.0..=1.0).contains(&s.sb_score));
            }
            // raw Ochiai and the stored SB component agree to one ulp
            let counts = crate::sbfl::spectrum_counts(&ds, &res.selection.failing_set());
            for (method, c) in counts {
                let raw = ochiai(&c);
                prop_assert!((res.scores[&method].sb_score - raw).abs() <= 2.0 * f64::EPSILON);
            }
        }
    }
}
