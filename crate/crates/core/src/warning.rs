use std::fmt;

use serde::Serialize;

use crate::method::MethodId;

/// Non-fatal conditions surfaced alongside results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// The designated failing set is empty; every Ochiai score is 0.
    NoFailingTests,
    /// No test covers any of the top stack-trace methods.
    ProxyDisjoint { top_methods: usize },
    /// Fewer tests than the threshold cover the stack-trace methods.
    ProxyTruncated { selected: usize, threshold: usize },
    /// The stack trace yielded no internal method.
    EmptyTrace,
    /// Stack-trace methods matched spectra overloads by name only.
    CoarseMatch { methods: usize },
    /// Methods missing from the call graph, treated as isolated nodes.
    NotInGraph { methods: Vec<MethodId> },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NoFailingTests => write!(f, "no failing tests: all Ochiai scores are 0"),
            Warning::ProxyDisjoint { top_methods } => write!(
                f,
                "stack trace disjoint from coverage: no test covers the top {top_methods} trace methods; ranking by stack position only"
            ),
            Warning::ProxyTruncated {
                selected,
                threshold,
            } => write!(
                f,
                "only {selected} tests cover the trace methods (threshold {threshold})"
            ),
            Warning::EmptyTrace => write!(f, "stack trace has no internal frames"),
            Warning::CoarseMatch { methods } => write!(
                f,
                "{methods} stack-trace method(s) matched spectra entries without parameter signatures"
            ),
            Warning::NotInGraph { methods } => {
                write!(f, "{} method(s) absent from the call graph", methods.len())
            }
        }
    }
}
