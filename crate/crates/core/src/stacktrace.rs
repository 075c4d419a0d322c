//! Java stack-trace extraction from free-form bug-report text.
//!
//! Accepted frame grammar:
//!
//! ```text
//! <exception>[: message]
//! \tat <class_fqn>.<method>(<file>:<line>)
//! \tat <class_fqn>.<method>(<file>)
//! \tat <class_fqn>.<method>(Unknown Source)
//! \tat <class_fqn>.<method>(Native Method)
//! \t... <N> more
//! Caused by: <exception>[: message]
//! ```
//!
//! Module/class-loader prefixes (`java.base/`, `app//`) and trailing jar
//! annotations (`~[foo.jar:1.0]`) are tolerated and dropped.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::method::MethodId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StackFrame {
    #[serde(rename = "class")]
    pub class_fqn: String,
    #[serde(rename = "method")]
    pub method_name: String,
    #[serde(rename = "file")]
    pub file_name: Option<String>,
    #[serde(rename = "line")]
    pub line_number: Option<u32>,
    #[serde(skip)]
    pub frame_index: usize,
}

impl StackFrame {
    pub fn method_id(&self) -> Result<MethodId> {
        MethodId::from_frame(&self.class_fqn, &self.method_name)
    }

    fn location(&self) -> String {
        match (&self.file_name, self.line_number) {
            (Some(file), Some(line)) => format!("{file}:{line}"),
            (Some(file), None) => file.clone(),
            (None, Some(line)) => format!("Unknown Source:{line}"),
            (None, None) => "Unknown Source".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParsedStackTrace {
    /// `None` when frames were found without a recognisable exception header.
    #[serde(rename = "exception")]
    pub exception_fqn: Option<String>,
    pub message: Option<String>,
    pub frames: Vec<StackFrame>,
    pub causes: Vec<ParsedStackTrace>,
}

impl ParsedStackTrace {
    /// Primary frames followed by each cause's frames, in order.
    pub fn flattened_frames(&self) -> impl Iterator<Item = &StackFrame> {
        let mut out = Vec::new();
        self.collect_frames(&mut out);
        out.into_iter()
    }

    fn collect_frames<'a>(&'a self, out: &mut Vec<&'a StackFrame>) {
        out.extend(&self.frames);
        for c in &self.causes {
            c.collect_frames(out);
        }
    }

    /// Renders the trace in the JVM's own printed form. Parsing the result
    /// yields an equal structure.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, false);
        out
    }

    fn render_into(&self, out: &mut String, as_cause: bool) {
        let header = match (&self.exception_fqn, &self.message) {
            (Some(exc), Some(msg)) => Some(format!("{exc}: {msg}")),
            (Some(exc), None) => Some(exc.clone()),
            _ => None,
        };
        match (header, as_cause) {
            (Some(h), true) => {
                let _ = writeln!(out, "Caused by: {h}");
            }
            (Some(h), false) => {
                let _ = writeln!(out, "{h}");
            }
            (None, _) => {}
        }
        for frame in &self.frames {
            let _ = writeln!(
                out,
                "\tat {}.{}({})",
                frame.class_fqn,
                frame.method_name,
                frame.location()
            );
        }
        for cause in &self.causes {
            cause.render_into(out, true);
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialization cannot fail")
    }
}

/// Frame-pattern options for [`parse_stack_traces`].
#[derive(Debug, Clone)]
pub struct ParserConfig {
    /// Only accept `at` lines that start with whitespace.
    pub require_indent: bool,
    /// Strip HTML tags and decode basic entities before parsing.
    pub strip_html: bool,
    /// How many non-blank lines may separate an exception header from the
    /// first frame of its trace.
    pub max_header_distance: usize,
}

impl Default for ParserConfig {
    fn default() -> Self {
        ParserConfig {
            require_indent: false,
            strip_html: false,
            max_header_distance: 3,
        }
    }
}

struct Patterns {
    frame: Regex,
    hidden_class: Regex,
    elision: Regex,
    caused_by: Regex,
    suppressed: Regex,
    header: Regex,
    header_inline: Regex,
}

fn patterns() -> &'static Patterns {
    static PATTERNS: OnceLock<Patterns> = OnceLock::new();
    PATTERNS.get_or_init(|| Patterns {
        frame: Regex::new(
            r"^(?P<indent>\s*)at\s+(?:[^\s/()]*/)*(?P<target>[\w$.<>]+)\((?P<loc>[^()]*)\)(?:\s*~?\[[^\]]*\])?\s*$",
        )
        .unwrap(),
        hidden_class: Regex::new(r"(\$\$Lambda\$?\d*)/0x[0-9a-fA-F]+").unwrap(),
        elision: Regex::new(r"^\s*\.\.\.\s*\d+\s+(?:more|common frames omitted)\s*$").unwrap(),
        caused_by: Regex::new(
            r"^(?P<indent>\s*)Caused by:\s*(?P<exc>[A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*)(?::\s*(?P<msg>.*?))?\s*$",
        )
        .unwrap(),
        suppressed: Regex::new(r"^\s*Suppressed:\s").unwrap(),
        header: Regex::new(
            r#"^\s*(?:Exception in thread "[^"]*"\s+)?(?P<exc>[A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)+)(?::\s*(?P<msg>.*?))?\s*$"#,
        )
        .unwrap(),
        header_inline: Regex::new(
            r"(?:^|[\s\[(])(?P<exc>(?:[a-z_$][\w$]*\.)+[A-Z][\w$]*(?:Exception|Error|Throwable))(?::\s*(?P<msg>.*?))?\s*$",
        )
        .unwrap(),
    })
}

#[derive(Debug, Clone)]
struct Header {
    exception: String,
    message: Option<String>,
}

impl Header {
    fn from_captures(caps: &regex::Captures<'_>) -> Self {
        Header {
            exception: caps["exc"].to_string(),
            message: caps
                .name("msg")
                .map(|m| m.as_str().trim().to_string())
                .filter(|m| !m.is_empty()),
        }
    }

    fn into_segment(header: Option<Header>) -> ParsedStackTrace {
        let (exception_fqn, message) = match header {
            Some(h) => (Some(h.exception), h.message),
            None => (None, None),
        };
        ParsedStackTrace {
            exception_fqn,
            message,
            frames: Vec::new(),
            causes: Vec::new(),
        }
    }
}

fn parse_frame(caps: &regex::Captures<'_>, index: usize) -> Option<StackFrame> {
    let target = &caps["target"];
    let dot = target.rfind('.')?;
    let (class, method) = (&target[..dot], &target[dot + 1..]);
    if class.is_empty() || method.is_empty() || class.ends_with('.') {
        return None;
    }
    let loc = caps["loc"].trim();
    let (file_name, line_number) = match loc {
        "Native Method" | "Unknown Source" | "" => (None, None),
        _ => {
            let (file, line) = match loc.rsplit_once(':') {
                Some((file, line)) => match line.trim().parse::<i64>() {
                    Ok(n) => (file, Some(n)),
                    Err(_) => (loc, None),
                },
                None => (loc, None),
            };
            let line = line.and_then(|n| u32::try_from(n).ok()).filter(|&n| n >= 1);
            let file = match file.trim() {
                "Unknown Source" | "Native Method" | "" => None,
                f => Some(f.to_string()),
            };
            (file, line)
        }
    };
    Some(StackFrame {
        class_fqn: class.to_string(),
        method_name: method.to_string(),
        file_name,
        line_number,
        frame_index: index,
    })
}

#[derive(Default)]
struct TraceBuilder {
    primary: Option<ParsedStackTrace>,
    causes: Vec<ParsedStackTrace>,
}

impl TraceBuilder {
    fn active(&mut self) -> &mut ParsedStackTrace {
        match self.causes.last_mut() {
            Some(cause) => cause,
            None => self.primary.as_mut().expect("builder always has a primary segment"),
        }
    }

    fn push_frame(&mut self, caps: &regex::Captures<'_>) {
        let segment = self.active();
        if let Some(frame) = parse_frame(caps, segment.frames.len()) {
            segment.frames.push(frame);
        }
    }

    fn finish(self) -> Option<ParsedStackTrace> {
        let mut primary = self.primary?;
        // segments without any frame cannot be used downstream
        primary.causes = self.causes.into_iter().filter(|c| !c.frames.is_empty()).collect();
        if primary.frames.is_empty() {
            if primary.causes.is_empty() {
                return None;
            }
            // frames only under causes: promote the first cause's frames
            let first = primary.causes.remove(0);
            primary.frames = first.frames;
            if primary.exception_fqn.is_none() {
                primary.exception_fqn = first.exception_fqn;
                primary.message = first.message;
            }
        }
        Some(primary)
    }
}

/// Extracts every stack trace found in `text`, in order of appearance.
///
/// Never fails: lines that do not fit the grammar are skipped or end the
/// current trace.
pub fn parse_stack_traces(text: &str, config: &ParserConfig) -> Vec<ParsedStackTrace> {
    let stripped;
    let text = if config.strip_html {
        stripped = strip_markup(text);
        stripped.as_str()
    } else {
        text
    };
    let p = patterns();
    let mut traces = Vec::new();
    let mut current: Option<TraceBuilder> = None;
    let mut pending: Option<(Header, usize)> = None;
    let mut suppressed_indent: Option<usize> = None;

    for raw in text.lines() {
        // hidden lambda classes print as `Foo$$Lambda$14/0x0000000800066840`
        let normalized = p.hidden_class.replace_all(raw.trim_end_matches('\r'), "${1}");
        let line = normalized.as_ref();

        if let Some(caps) = p.frame.captures(line) {
            if config.require_indent && caps["indent"].is_empty() {
                // fall through to the generic handling below
            } else {
                if let Some(indent) = suppressed_indent {
                    if caps["indent"].len() > indent {
                        continue;
                    }
                    suppressed_indent = None;
                }
                let builder = current.get_or_insert_with(|| {
                    let header = pending.take().map(|(h, _)| h);
                    TraceBuilder {
                        primary: Some(Header::into_segment(header)),
                        causes: Vec::new(),
                    }
                });
                builder.push_frame(&caps);
                continue;
            }
        }

        if p.elision.is_match(line) {
            continue;
        }

        if let Some(caps) = p.caused_by.captures(line) {
            if let Some(indent) = suppressed_indent {
                if caps["indent"].len() > indent {
                    continue;
                }
                suppressed_indent = None;
            }
            let header = Header::from_captures(&caps);
            match current.as_mut() {
                Some(builder) => builder.causes.push(Header::into_segment(Some(header))),
                None => pending = Some((header, 0)),
            }
            continue;
        }

        if current.is_some() {
            if p.suppressed.is_match(line) {
                let indent = line.len() - line.trim_start().len();
                suppressed_indent = Some(indent);
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
        }

        if line.trim().is_empty() {
            continue;
        }

        if let Some(builder) = current.take() {
            traces.extend(builder.finish());
            suppressed_indent = None;
        }

        let header = p
            .header
            .captures(line)
            .or_else(|| p.header_inline.captures(line))
            .map(|caps| Header::from_captures(&caps));
        pending = match (header, pending.take()) {
            (Some(h), _) => Some((h, 0)),
            (None, Some((h, distance))) if distance < config.max_header_distance => {
                Some((h, distance + 1))
            }
            (None, _) => None,
        };
    }
    if let Some(builder) = current.take() {
        traces.extend(builder.finish());
    }
    traces
}

/// Removes HTML tags (keeping `<init>`/`<clinit>`) and decodes the common
/// entities. Block-level tags become line breaks.
pub fn strip_markup(text: &str) -> String {
    static TAG: OnceLock<Regex> = OnceLock::new();
    let tag = TAG.get_or_init(|| Regex::new(r"</?([A-Za-z][A-Za-z0-9]*)(?:\s[^<>]*)?/?>").unwrap());
    let replaced = tag.replace_all(text, |caps: &regex::Captures<'_>| {
        let name = caps[1].to_ascii_lowercase();
        match name.as_str() {
            "init" | "clinit" => caps[0].to_string(),
            "br" | "p" | "div" | "pre" | "li" | "tr" => "\n".to_string(),
            _ => String::new(),
        }
    });
    replaced
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&nbsp;", " ")
        .replace("&amp;", "&")
}

/// Stack-trace methods belonging to the project under analysis, in
/// first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InternalFrameView {
    pub methods: Vec<MethodId>,
}

impl InternalFrameView {
    pub fn is_empty(&self) -> bool {
        self.methods.is_empty()
    }

    pub fn len(&self) -> usize {
        self.methods.len()
    }

    /// 1-based first-occurrence position of `method`, signatures compared
    /// only when both sides carry one.
    pub fn position(&self, method: &MethodId) -> Option<usize> {
        self.methods
            .iter()
            .position(|m| m.matches(method))
            .map(|i| i + 1)
    }
}

fn is_internal(class_fqn: &str, prefixes: &[String]) -> bool {
    prefixes.iter().any(|p| class_fqn.starts_with(p.as_str()))
}

fn view_of_frames<'a>(
    frames: impl Iterator<Item = &'a StackFrame>,
    prefixes: &[String],
) -> InternalFrameView {
    let mut seen = HashSet::new();
    let mut methods = Vec::new();
    for frame in frames.filter(|f| is_internal(&f.class_fqn, prefixes)) {
        let Ok(id) = frame.method_id() else {
            continue;
        };
        if seen.insert(id.clone()) {
            methods.push(id);
        }
    }
    InternalFrameView { methods }
}

/// Internal methods of `trace` (primary frames, then cause frames), each
/// method kept at its first occurrence.
pub fn internal_view(trace: &ParsedStackTrace, prefixes: &[String]) -> InternalFrameView {
    view_of_frames(trace.flattened_frames(), prefixes)
}

pub fn top_internal_methods(view: &InternalFrameView, m: usize) -> &[MethodId] {
    &view.methods[..m.min(view.methods.len())]
}

/// Which trace(s) of a multi-trace report drive localization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceSelection {
    #[default]
    First,
    Index(usize),
    Merge,
}

impl std::str::FromStr for TraceSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(TraceSelection::First),
            "merge" => Ok(TraceSelection::Merge),
            n => n
                .parse()
                .map(TraceSelection::Index)
                .map_err(|_| Error::Config(format!("trace selection `{s}`: expected first, merge or an index"))),
        }
    }
}

impl std::fmt::Display for TraceSelection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceSelection::First => f.write_str("first"),
            TraceSelection::Merge => f.write_str("merge"),
            TraceSelection::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Applies a [`TraceSelection`] and the internal-prefix filter.
pub fn select_internal_view(
    traces: &[ParsedStackTrace],
    selection: TraceSelection,
    prefixes: &[String],
) -> Result<InternalFrameView> {
    if prefixes.is_empty() {
        return Err(Error::NoPrefixes);
    }
    match selection {
        TraceSelection::First => traces
            .first()
            .map(|t| internal_view(t, prefixes))
            .ok_or_else(|| Error::NoTrace("report contains no stack trace".into())),
        TraceSelection::Index(i) => traces
            .get(i)
            .map(|t| internal_view(t, prefixes))
            .ok_or_else(|| {
                Error::NoTrace(format!("trace index {i} out of range ({} found)", traces.len()))
            }),
        TraceSelection::Merge => {
            if traces.is_empty() {
                return Err(Error::NoTrace("report contains no stack trace".into()));
            }
            Ok(view_of_frames(
                traces.iter().flat_map(|t| t.flattened_frames()),
                prefixes,
            ))
        }
    }
}
