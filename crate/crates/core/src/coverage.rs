//! Coverage spectra: test outcomes, the test × line hit matrix and the
//! line → method mapping.
//!
//! Per-bug file layout:
//!
//! * `tests.csv`: header `name,outcome[,...]`, outcome `PASS` or `FAIL`
//! * `spectra.csv`: one line identifier per row,
//!   `<package>$<Class>#<method>[(<params>)]:<line>`; row i is matrix column i.
//!   An optional leading `name` header row is skipped.
//! * `matrix.txt`: one row per test, space-separated `0`/`1`, optional
//!   trailing `+` (pass) or `-` (fail).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::method::MethodId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn parse(token: &str) -> Option<Self> {
        match token {
            "PASS" => Some(Outcome::Pass),
            "FAIL" => Some(Outcome::Fail),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestCase {
    pub test_id: usize,
    pub name: String,
    pub outcome: Outcome,
}

/// One spectra row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineInfo {
    /// Identifier text before the `:<line>` suffix.
    pub owner: String,
    pub method: Option<MethodId>,
    pub line_number: u32,
}

impl LineInfo {
    /// Parses a spectra identifier. Rows without `#` denote class-level
    /// lines that belong to no method.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let (owner, line) = text
            .rsplit_once(':')
            .ok_or_else(|| format!("missing `:<line>` suffix in `{text}`"))?;
        let line_number = line
            .trim()
            .parse::<u32>()
            .map_err(|_| format!("bad line number `{line}`"))?;
        let method = if owner.contains('#') {
            Some(owner.parse::<MethodId>().map_err(|e| e.to_string())?)
        } else if owner.contains('$') && !owner.ends_with('$') {
            None
        } else {
            return Err(format!("unrecognised line identifier `{text}`"));
        };
        Ok(LineInfo {
            owner: method.as_ref().map_or_else(|| owner.to_string(), |m| m.to_string()),
            method,
            line_number,
        })
    }
}

impl fmt::Display for LineInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.owner, self.line_number)
    }
}

/// Row-major bit matrix; rows are tests, columns are lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        BitMatrix {
            rows,
            cols,
            words_per_row,
            words: vec![0; rows * words_per_row],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols, "bit ({row},{col}) out of bounds");
        let word = self.words[row * self.words_per_row + col / 64];
        word >> (col % 64) & 1 == 1
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        assert!(row < self.rows && col < self.cols, "bit ({row},{col}) out of bounds");
        let word = &mut self.words[row * self.words_per_row + col / 64];
        let mask = 1u64 << (col % 64);
        if value {
            *word |= mask;
        } else {
            *word &= !mask;
        }
    }

    fn row_words(&self, row: usize) -> &[u64] {
        &self.words[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    pub fn row_popcount(&self, row: usize) -> usize {
        self.row_words(row).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of set bits of `row` among `cols`.
    pub fn count_in(&self, row: usize, cols: &[usize]) -> usize {
        let words = self.row_words(row);
        cols.iter()
            .filter(|&&c| words[c / 64] >> (c % 64) & 1 == 1)
            .count()
    }
}

#[derive(Debug, Clone)]
pub struct CoverageDataset {
    tests: Vec<TestCase>,
    lines: Vec<LineInfo>,
    matrix: BitMatrix,
    method_index: BTreeMap<MethodId, Vec<usize>>,
    by_coarse: HashMap<MethodId, Vec<MethodId>>,
}

/// Per-test count of a method's covered lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MethodCoverageSummary {
    pub method: MethodId,
    pub covering_tests: BTreeSet<usize>,
    /// Indexed by test id.
    pub lines_covered_by: Vec<usize>,
}

impl CoverageDataset {
    /// Assembles a dataset from in-memory parts, checking every structural
    /// invariant.
    pub fn from_parts(
        tests: Vec<(String, Outcome)>,
        lines: Vec<LineInfo>,
        matrix: BitMatrix,
    ) -> Result<Self> {
        if matrix.rows() != tests.len() {
            return Err(Error::Dimension {
                what: "matrix rows vs tests".into(),
                expected: tests.len(),
                found: matrix.rows(),
            });
        }
        if matrix.cols() != lines.len() {
            return Err(Error::Dimension {
                what: "matrix columns vs spectra lines".into(),
                expected: lines.len(),
                found: matrix.cols(),
            });
        }
        let tests = tests
            .into_iter()
            .enumerate()
            .map(|(test_id, (name, outcome))| TestCase {
                test_id,
                name,
                outcome,
            })
            .collect();
        let mut method_index: BTreeMap<MethodId, Vec<usize>> = BTreeMap::new();
        for (col, line) in lines.iter().enumerate() {
            if let Some(m) = &line.method {
                method_index.entry(m.clone()).or_default().push(col);
            }
        }
        let mut by_coarse: HashMap<MethodId, Vec<MethodId>> = HashMap::new();
        for m in method_index.keys() {
            by_coarse.entry(m.coarse()).or_default().push(m.clone());
        }
        Ok(CoverageDataset {
            tests,
            lines,
            matrix,
            method_index,
            by_coarse,
        })
    }

    /// Loads `tests.csv`, `spectra.csv` and `matrix.txt` from `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| Error::io(path, e))
        };
        let tests = parse_tests(&read("tests.csv")?)?;
        let lines = parse_spectra(&read("spectra.csv")?)?;
        let matrix = parse_matrix(&read("matrix.txt")?, &tests, lines.len())?;
        CoverageDataset::from_parts(tests, lines, matrix)
    }

    /// Writes the three files in canonical form.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let write = |name: &str, body: String| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(path, e))
        };
        let (tests, spectra, matrix) = self.render();
        write("tests.csv", tests)?;
        write("spectra.csv", spectra)?;
        write("matrix.txt", matrix)
    }

    /// Canonical text of `tests.csv`, `spectra.csv` and `matrix.txt`.
    pub fn render(&self) -> (String, String, String) {
        let mut tests = String::from("name,outcome\n");
        for t in &self.tests {
            tests.push_str(&csv_field(&t.name));
            tests.push(',');
            tests.push_str(&t.outcome.to_string());
            tests.push('\n');
        }
        let mut spectra = String::new();
        for line in &self.lines {
            spectra.push_str(&line.to_string());
            spectra.push('\n');
        }
        let mut matrix = String::new();
        for t in &self.tests {
            for col in 0..self.lines.len() {
                matrix.push(if self.matrix.get(t.test_id, col) { '1' } else { '0' });
                matrix.push(' ');
            }
            matrix.push(match t.outcome {
                Outcome::Pass => '+',
                Outcome::Fail => '-',
            });
            matrix.push('\n');
        }
        (tests, spectra, matrix)
    }

    pub fn tests(&self) -> &[TestCase] {
        &self.tests
    }

    pub fn lines(&self) -> &[LineInfo] {
        &self.lines
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn method_index(&self) -> &BTreeMap<MethodId, Vec<usize>> {
        &self.method_index
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodId> {
        self.method_index.keys()
    }

    pub fn columns_of(&self, method: &MethodId) -> Option<&[usize]> {
        self.method_index.get(method).map(Vec::as_slice)
    }

    pub fn failing_tests(&self) -> BTreeSet<usize> {
        self.tests
            .iter()
            .filter(|t| t.outcome == Outcome::Fail)
            .map(|t| t.test_id)
            .collect()
    }

    /// Spectra methods matching `query`: the exact method when present,
    /// otherwise every overload sharing its coarse key whose signature does
    /// not conflict.
    pub fn resolve(&self, query: &MethodId) -> Vec<&MethodId> {
        if let Some((key, _)) = self.method_index.get_key_value(query) {
            return vec![key];
        }
        self.by_coarse
            .get(&query.coarse())
            .into_iter()
            .flatten()
            .filter(|m| m.matches(query))
            .map(|m| self.method_index.get_key_value(m).unwrap().0)
            .collect()
    }

    /// Number of `method`'s lines hit by `test` (0 for unknown methods).
    pub fn covered_lines(&self, test: usize, method: &MethodId) -> usize {
        self.columns_of(method)
            .map_or(0, |cols| self.matrix.count_in(test, cols))
    }

    pub fn method_summary(&self, method: &MethodId) -> Result<MethodCoverageSummary> {
        let cols = self
            .columns_of(method)
            .ok_or_else(|| Error::UnknownMethod(method.clone()))?;
        let lines_covered_by: Vec<usize> = (0..self.tests.len())
            .map(|t| self.matrix.count_in(t, cols))
            .collect();
        let covering_tests = lines_covered_by
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(t, _)| t)
            .collect();
        Ok(MethodCoverageSummary {
            method: method.clone(),
            covering_tests,
            lines_covered_by,
        })
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn parse_tests(text: &str) -> Result<Vec<(String, Outcome)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::format("tests.csv", 1, e.to_string()))?;
    let cols: Vec<&str> = headers.iter().map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "name" || cols[1] != "outcome" {
        return Err(Error::format(
            "tests.csv",
            1,
            format!("expected header `name,outcome[,...]`, found `{}`", cols.join(",")),
        ));
    }
    let mut tests = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::format("tests.csv", line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let name = record.get(0).unwrap_or("").trim();
        let token = record.get(1).unwrap_or("").trim();
        if name.is_empty() {
            return Err(Error::format("tests.csv", line, "empty test name"));
        }
        let outcome = Outcome::parse(token).ok_or_else(|| {
            Error::format("tests.csv", line, format!("unknown outcome `{token}`"))
        })?;
        tests.push((name.to_string(), outcome));
    }
    Ok(tests)
}

fn parse_spectra(text: &str) -> Result<Vec<LineInfo>> {
    let mut lines = Vec::new();
    for (i, row) in text.lines().enumerate() {
        let row = row.trim();
        if row.is_empty() || (i == 0 && row == "name") {
            continue;
        }
        let info = LineInfo::parse(row).map_err(|msg| Error::format("spectra.csv", i + 1, msg))?;
        lines.push(info);
    }
    Ok(lines)
}

fn parse_matrix(text: &str, tests: &[(String, Outcome)], cols: usize) -> Result<BitMatrix> {
    let rows: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    if rows.len() != tests.len() {
        return Err(Error::Dimension {
            what: "matrix.txt rows vs tests.csv entries".into(),
            expected: tests.len(),
            found: rows.len(),
        });
    }
    let mut matrix = BitMatrix::new(rows.len(), cols);
    for (row, (line_no, text)) in rows.into_iter().enumerate() {
        let mut tokens: Vec<&str> = text.split_whitespace().collect();
        let symbol = match tokens.last() {
            Some(&"+") => Some(Outcome::Pass),
            Some(&"-") => Some(Outcome::Fail),
            _ => None,
        };
        if symbol.is_some() {
            tokens.pop();
        }
        if let Some(symbol) = symbol {
            let expected = tests[row].1;
            if symbol != expected {
                return Err(Error::format(
                    "matrix.txt",
                    line_no + 1,
                    format!(
                        "outcome symbol says {symbol} but tests.csv says {expected} for `{}`",
                        tests[row].0
                    ),
                ));
            }
        }
        if tokens.len() != cols {
            return Err(Error::Dimension {
                what: format!("matrix.txt line {} columns vs spectra.csv lines", line_no + 1),
                expected: cols,
                found: tokens.len(),
            });
        }
        for (col, token) in tokens.into_iter().enumerate() {
            match token {
                "1" => matrix.set(row, col, true),
                "0" => {}
                other => {
                    return Err(Error::format(
                        "matrix.txt",
                        line_no + 1,
                        format!("unexpected token `{other}` in column {col}"),
                    ))
                }
            }
        }
    }
    Ok(matrix)
}
