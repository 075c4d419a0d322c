//! Static call graphs and the minimum call distance from stack-trace
//! methods to buggy methods.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::method::MethodId;
use crate::warning::Warning;

/// Directed caller → callee graph. Duplicate edges collapse; self-loops are
/// kept but never shorten a distance.
#[derive(Debug, Clone, Default)]
pub struct CallGraph {
    nodes: Vec<MethodId>,
    index: HashMap<MethodId, usize>,
    callees: Vec<BTreeSet<usize>>,
    callers: Vec<BTreeSet<usize>>,
}

impl CallGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges<I>(edges: I) -> Self
    where
        I: IntoIterator<Item = (MethodId, MethodId)>,
    {
        let mut g = CallGraph::new();
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    fn intern(&mut self, m: MethodId) -> usize {
        if let Some(&i) = self.index.get(&m) {
            return i;
        }
        let i = self.nodes.len();
        self.index.insert(m.clone(), i);
        self.nodes.push(m);
        self.callees.push(BTreeSet::new());
        self.callers.push(BTreeSet::new());
        i
    }

    pub fn add_node(&mut self, m: MethodId) {
        self.intern(m);
    }

    pub fn add_edge(&mut self, caller: MethodId, callee: MethodId) {
        let a = self.intern(caller);
        let b = self.intern(callee);
        self.callees[a].insert(b);
        self.callers[b].insert(a);
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.callees.iter().map(BTreeSet::len).sum()
    }

    pub fn contains(&self, m: &MethodId) -> bool {
        self.index.contains_key(m)
    }

    pub fn has_edge(&self, caller: &MethodId, callee: &MethodId) -> bool {
        match (self.index.get(caller), self.index.get(callee)) {
            (Some(&a), Some(&b)) => self.callees[a].contains(&b),
            _ => false,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &MethodId> {
        self.nodes.iter()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&MethodId, &MethodId)> {
        self.callees
            .iter()
            .enumerate()
            .flat_map(move |(a, out)| out.iter().map(move |&b| (&self.nodes[a], &self.nodes[b])))
    }

    /// Node indices matching `m` (signatures compared only when both carry
    /// one), in canonical order.
    fn matching(&self, m: &MethodId) -> Vec<usize> {
        if let Some(&i) = self.index.get(m) {
            return vec![i];
        }
        let mut hits: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].matches(m))
            .collect();
        hits.sort_by(|&a, &b| self.nodes[a].cmp(&self.nodes[b]));
        hits
    }

    /// Reads a `caller,callee` CSV. Fields may be quoted; unquoted commas
    /// inside parameter lists are allowed.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file = path.display().to_string();
        let mut g = CallGraph::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields = split_row(line)
                .ok_or_else(|| Error::format(&file, line_no, "unbalanced quotes or parentheses"))?;
            if !header_seen {
                header_seen = true;
                if fields == ["caller", "callee"] {
                    continue;
                }
                return Err(Error::format(&file, line_no, "expected header `caller,callee`"));
            }
            if fields.len() != 2 {
                return Err(Error::format(
                    &file,
                    line_no,
                    format!("expected 2 fields, found {}", fields.len()),
                ));
            }
            let parse = |s: &str| {
                s.parse::<MethodId>()
                    .map_err(|e| Error::format(&file, line_no, e.to_string()))
            };
            g.add_edge(parse(&fields[0])?, parse(&fields[1])?);
        }
        if !header_seen {
            return Err(Error::format(&file, 1, "empty call graph file (missing header)"));
        }
        Ok(g)
    }
}

/// Splits on commas outside quotes and parentheses.
fn split_row(line: &str) -> Option<Vec<String>> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            '(' if !quoted => {
                depth += 1;
                cur.push(c);
            }
            ')' if !quoted => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
                cur.push(c);
            }
            ',' if !quoted && depth == 0 => fields.push(std::mem::take(&mut cur).trim().to_string()),
            _ => cur.push(c),
        }
    }
    if quoted || depth != 0 {
        return None;
    }
    fields.push(cur.trim().to_string());
    Some(fields)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Distance {
    Reachable(usize),
    Unreachable,
}

impl Distance {
    pub fn value(&self) -> Option<usize> {
        match self {
            Distance::Reachable(d) => Some(*d),
            Distance::Unreachable => None,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Reachable(d) => write!(f, "{d}"),
            Distance::Unreachable => f.write_str("UNREACHABLE"),
        }
    }
}

impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Distance::Reachable(d) => s.serialize_u64(*d as u64),
            Distance::Unreachable => s.serialize_str("UNREACHABLE"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistanceResult {
    pub distance: Distance,
    /// Trace method first, buggy method last; `distance + 1` entries.
    pub witness_path: Option<Vec<MethodId>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DistanceOptions {
    /// Follow edges in both directions.
    pub undirected: bool,
}

/// Fewest caller → callee edges from any trace method to any buggy method.
/// Zero when a buggy method is itself on the trace.
pub fn min_distance(
    g: &CallGraph,
    trace_methods: &[MethodId],
    buggy: &[MethodId],
    opts: DistanceOptions,
) -> (DistanceResult, Vec<Warning>) {
    let mut warnings = Vec::new();
    let missing: Vec<MethodId> = trace_methods
        .iter()
        .chain(buggy)
        .filter(|m| g.matching(m).is_empty())
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if !missing.is_empty() {
        log::warn!("{} method(s) absent from the call graph", missing.len());
        warnings.push(Warning::NotInGraph { methods: missing });
    }

    for t in trace_methods {
        if buggy.iter().any(|b| b.matches(t)) {
            return (
                DistanceResult {
                    distance: Distance::Reachable(0),
                    witness_path: Some(vec![t.clone()]),
                },
                warnings,
            );
        }
    }

    let targets: BTreeSet<usize> = buggy.iter().flat_map(|b| g.matching(b)).collect();
    let mut sources: Vec<usize> = trace_methods.iter().flat_map(|t| g.matching(t)).collect();
    sources.sort_by(|&a, &b| g.nodes[a].cmp(&g.nodes[b]));
    sources.dedup();

    let mut parent: Vec<Option<usize>> = vec![None; g.node_count()];
    let mut visited = vec![false; g.node_count()];
    let mut queue = VecDeque::new();
    for &s in &sources {
        if !visited[s] {
            visited[s] = true;
            queue.push_back((s, 0usize));
        }
    }
    while let Some((node, depth)) = queue.pop_front() {
        if targets.contains(&node) {
            let mut path = vec![node];
            let mut cur = node;
            while let Some(p) = parent[cur] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return (
                DistanceResult {
                    distance: Distance::Reachable(depth),
                    witness_path: Some(path.into_iter().map(|i| g.nodes[i].clone()).collect()),
                },
                warnings,
            );
        }
        let forward = g.callees[node].iter();
        let backward = g.callers[node].iter().filter(|_| opts.undirected);
        let mut next: Vec<usize> = forward.chain(backward).copied().collect();
        next.sort_by(|&a, &b| g.nodes[a].cmp(&g.nodes[b]));
        for n in next {
            if !visited[n] {
                visited[n] = true;
                parent[n] = Some(node);
                queue.push_back((n, depth + 1));
            }
        }
    }
    (
        DistanceResult {
            distance: Distance::Unreachable,
            witness_path: None,
        },
        warnings,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceSummary {
    pub bugs: usize,
    pub zero_distance: usize,
    pub reachable: usize,
    pub fraction_zero: f64,
    pub fraction_reachable: f64,
    /// Mean over reachable bugs; `None` when no bug is reachable.
    pub mean_distance: Option<f64>,
    pub per_bug: BTreeMap<String, DistanceResult>,
}

pub fn distance_report(results: &BTreeMap<String, DistanceResult>) -> DistanceSummary {
    let bugs = results.len();
    let reachable: Vec<usize> = results.values().filter_map(|r| r.distance.value()).collect();
    let zero_distance = reachable.iter().filter(|&&d| d == 0).count();
    let frac = |n: usize| if bugs == 0 { 0.0 } else { n as f64 / bugs as f64 };
    DistanceSummary {
        bugs,
        zero_distance,
        reachable: reachable.len(),
        fraction_zero: frac(zero_distance),
        fraction_reachable: frac(reachable.len()),
        mean_distance: if reachable.is_empty() {
            None
        } else {
            Some(reachable.iter().sum::<usize>() as f64 / reachable.len() as f64)
        },
        per_bug: results.clone(),
    }
}

impl DistanceSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bug,distance,witness\n");
        for (bug, r) in &self.per_bug {
            let witness = r
                .witness_path
                .as_ref()
                .map(|p| p.iter().map(ToString::to_string).collect::<Vec<_>>().join(" -> "))
                .unwrap_or_default();
            out.push_str(&format!("{bug},{},\"{witness}\"\n", r.distance));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn m(s: &str) -> MethodId {
        s.parse().unwrap()
    }

    fn graph(edges: &[(&str, &str)]) -> CallGraph {
        CallGraph::from_edges(edges.iter().map(|(a, b)| (m(a), m(b))))
    }

    fn check_witness(g: &CallGraph, r: &DistanceResult, trace: &[MethodId], buggy: &[MethodId]) {
        let path = r.witness_path.as_ref().unwrap();
        assert_eq!(path.len(), r.distance.value().unwrap() + 1);
        assert!(trace.iter().any(|t| t.matches(&path[0])));
        assert!(buggy.iter().any(|b| b.matches(path.last().unwrap())));
        for w in path.windows(2) {
            assert!(g.has_edge(&w[0], &w[1]), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn buggy_in_trace_is_zero() {
        let g = graph(&[("p$A#a", "p$B#b")]);
        let (r, _) = min_distance(&g, &[m("p$A#a"), m("p$B#b")], &[m("p$B#b")], Default::default());
        assert_eq!(r.distance, Distance::Reachable(0));
        assert_eq!(r.witness_path.unwrap(), vec![m("p$B#b")]);
    }

    #[test]
    fn three_call_chain() {
        let g = graph(&[
            ("p$Trace#top", "p$Mid#a"),
            ("p$Mid#a", "p$Mid#b"),
            ("p$Mid#b", "p$Bug#fix"),
            ("p$Trace#top", "p$Other#x"),
        ]);
        let trace = [m("p$Trace#top")];
        let buggy = [m("p$Bug#fix")];
        let (r, _) = min_distance(&g, &trace, &buggy, Default::default());
        assert_eq!(r.distance, Distance::Reachable(3));
        check_witness(&g, &r, &trace, &buggy);
    }

    #[test]
    fn direction_matters() {
        let g = graph(&[("p$Bug#fix", "p$Trace#top")]);
        let (r, _) = min_distance(&g, &[m("p$Trace#top")], &[m("p$Bug#fix")], Default::default());
        assert_eq!(r.distance, Distance::Unreachable);
        let (u, _) = min_distance(
            &g,
            &[m("p$Trace#top")],
            &[m("p$Bug#fix")],
            DistanceOptions { undirected: true },
        );
        assert_eq!(u.distance, Distance::Reachable(1));
    }

    #[test]
    fn disconnected_and_missing_nodes() {
        let mut g = graph(&[("p$A#a", "p$B#b")]);
        g.add_node(m("p$Lonely#x"));
        let (r, w) = min_distance(&g, &[m("p$A#a")], &[m("p$Lonely#x")], Default::default());
        assert_eq!(r.distance, Distance::Unreachable);
        assert!(w.is_empty());
        let (r, w) = min_distance(&g, &[m("p$Ghost#g")], &[m("p$Ghost#g")], Default::default());
        assert_eq!(r.distance, Distance::Reachable(0));
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn signatures_resolve_against_frames() {
        let g = graph(&[("p$A#a(int)", "p$B#b(java.lang.String,int)")]);
        let (r, _) = min_distance(&g, &[m("p$A#a")], &[m("p$B#b(java.lang.String,int)")], Default::default());
        assert_eq!(r.distance, Distance::Reachable(1));
    }

    #[test]
    fn report_arithmetic() {
        let mk = |d: Distance| DistanceResult {
            distance: d,
            witness_path: None,
        };
        let three: BTreeMap<String, DistanceResult> = [
            ("a".to_string(), mk(Distance::Reachable(0))),
            ("b".to_string(), mk(Distance::Reachable(0))),
            ("c".to_string(), mk(Distance::Reachable(1))),
        ]
        .into();
        let s = distance_report(&three);
        assert_eq!((s.reachable, s.bugs, s.zero_distance), (3, 3, 2));
        assert!((s.mean_distance.unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let two: BTreeMap<String, DistanceResult> = [
            ("a".to_string(), mk(Distance::Reachable(0))),
            ("b".to_string(), mk(Distance::Unreachable)),
        ]
        .into();
        let s = distance_report(&two);
        assert_eq!(s.fraction_reachable, 0.5);
        assert_eq!(s.mean_distance, Some(0.0));
    }

    #[test]
    fn report_matches_independent_aggregation() {
        let ds = [Some(0), None, Some(2), Some(0), Some(1), None, Some(4), Some(0), Some(3), Some(1)];
        let results: BTreeMap<String, DistanceResult> = ds
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let distance = d.map_or(Distance::Unreachable, Distance::Reachable);
                (format!("bug{i}"), DistanceResult { distance, witness_path: None })
            })
            .collect();
        let s = distance_report(&results);
        // hand tally: 8 reachable, 3 zeros, sum 11
        assert_eq!(s.reachable, 8);
        assert_eq!(s.zero_distance, 3);
        assert_eq!(s.fraction_zero, 0.3);
        assert_eq!(s.mean_distance, Some(11.0 / 8.0));
    }

    #[test]
    fn loads_csv_with_duplicates_and_signatures() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "caller,callee").unwrap();
        writeln!(f, "p$A#a(int,int),p$B#b").unwrap();
        writeln!(f, "\"p$A#a(int,int)\",\"p$B#b\"").unwrap();
        writeln!(f, "p$B#b,p$C#c()").unwrap();
        let g = CallGraph::load(f.path()).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.node_count(), 3);
    }

    #[test]
    fn malformed_row_reports_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "caller,callee\np$A#a,p$B#b\np$A#a").unwrap();
        let err = CallGraph::load(f.path()).unwrap_err().to_string();
        assert!(err.contains(":3:"), "{err}");
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "from,to\n").unwrap();
        assert!(CallGraph::load(f.path()).is_err());
    }

    #[test]
    fn fifty_edge_fixture_counts() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "caller,callee").unwrap();
        let mut lines = Vec::new();
        for i in 0..50 {
            let line = format!("p$N#n{},p$N#n{}", i % 13, (i * 7 + 3) % 17);
            writeln!(f, "{line}").unwrap();
            lines.push(line);
        }
        let g = CallGraph::load(f.path()).unwrap();
        let distinct_edges: BTreeSet<&String> = lines.iter().collect();
        let distinct_nodes: BTreeSet<&str> = lines.iter().flat_map(|l| l.split(',')).collect();
        assert_eq!(g.edge_count(), distinct_edges.len());
        assert_eq!(g.node_count(), distinct_nodes.len());
    }

    proptest! {
        #[test]
        fn adding_edges_never_increases_distance(
            base in proptest::collection::vec((0usize..12, 0usize..12), 0..30),
            extra in proptest::collection::vec((0usize..12, 0usize..12), 1..10),
            src in proptest::collection::btree_set(0usize..12, 1..3),
            dst in proptest::collection::btree_set(0usize..12, 1..3),
        ) {
            let name = |i: usize| m(&format!("p$N#n{i:02}"));
            let mut g = CallGraph::new();
            for i in 0..12 { g.add_node(name(i)); }
            for &(a, b) in &base { g.add_edge(name(a), name(b)); }
            let trace: Vec<MethodId> = src.iter().map(|&i| name(i)).collect();
            let buggy: Vec<MethodId> = dst.iter().map(|&i| name(i)).collect();
            let (before, _) = min_distance(&g, &trace, &buggy, Default::default());
            if before.witness_path.is_some() { check_witness(&g, &before, &trace, &buggy); }

            // duplicating edges in a different order changes nothing
            let mut shuffled = CallGraph::new();
            for i in (0..12).rev() { shuffled.add_node(name(i)); }
            for &(a, b) in base.iter().rev().chain(base.iter()) { shuffled.add_edge(name(a), name(b)); }
            let (same, _) = min_distance(&shuffled, &trace, &buggy, Default::default());
            prop_assert_eq!(same.distance, before.distance);

            for &(a, b) in &extra { g.add_edge(name(a), name(b)); }
            let (after, _) = min_distance(&g, &trace, &buggy, Default::default());
            prop_assert!(after.distance <= before.distance);
        }
    }
}
