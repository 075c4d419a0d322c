#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crashloc::coverage::{BitMatrix, CoverageDataset, LineInfo, Outcome};
use crashloc::stacktrace::{parse_stack_traces, ParserConfig};
use crashloc::MethodId;
use rand::rngs::StdRng;
use rand::Rng;
use serde_json::Value;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn golden_root() -> PathBuf {
    fixtures().join("golden")
}

pub fn golden_corpus() -> PathBuf {
    golden_root().join("corpus")
}

pub fn expected(name: &str) -> String {
    std::fs::read_to_string(golden_root().join("expected").join(name)).unwrap()
}

pub fn method(s: &str) -> MethodId {
    s.parse().unwrap()
}

pub fn crashloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crashloc"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Every `.txt` under the parser fixture directory with its golden JSON.
pub fn parser_cases() -> Vec<(String, String, Value)> {
    let dir = fixtures().join("parser");
    let mut names: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|txt| {
            let stem = txt.file_stem().unwrap().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(&txt).unwrap();
            let json = std::fs::read_to_string(txt.with_extension("json")).unwrap();
            (stem, text, serde_json::from_str(&json).unwrap())
        })
        .collect()
}

/// Parses one fixture; files named `*html*` go through markup stripping.
pub fn parse_fixture(name: &str, text: &str) -> Value {
    let config = ParserConfig {
        strip_html: name.contains("html"),
        ..ParserConfig::default()
    };
    serde_json::to_value(parse_stack_traces(text, &config)).unwrap()
}

/// Random dataset: `methods` methods of 1..=4 lines each, `tests` tests,
/// hit probability `density`, about a quarter of tests failing.
pub fn random_dataset(rng: &mut StdRng, tests: usize, methods: usize, density: f64) -> CoverageDataset {
    let mut lines = Vec::new();
    for j in 0..methods {
        for k in 0..rng.gen_range(1..=4) {
            lines.push(LineInfo::parse(&format!("app.pkg$C{}#m{j}(int):{}", j % 3, 10 * j + k + 1)).unwrap());
        }
    }
    let names = (0..tests)
        .map(|t| {
            let outcome = if rng.gen_bool(0.25) { Outcome::Fail } else { Outcome::Pass };
            (format!("app.pkg.T#t{t:03}"), outcome)
        })
        .collect();
    let mut matrix = BitMatrix::new(tests, lines.len());
    for t in 0..tests {
        for c in 0..lines.len() {
            matrix.set(t, c, rng.gen_bool(density));
        }
    }
    CoverageDataset::from_parts(names, lines, matrix).unwrap()
}

/// Random trace over the dataset's methods, sometimes with a method the
/// spectra do not know.
pub fn random_trace(rng: &mut StdRng, ds: &CoverageDataset) -> crashloc::stacktrace::InternalFrameView {
    let all: Vec<MethodId> = ds.methods().map(|m| m.coarse()).collect();
    let mut picked: Vec<MethodId> = Vec::new();
    for _ in 0..rng.gen_range(0..=12) {
        let m = all[rng.gen_range(0..all.len())].clone();
        if !picked.contains(&m) {
            picked.push(m);
        }
    }
    if rng.gen_bool(0.2) {
        picked.insert(rng.gen_range(0..=picked.len()), method("app.pkg$Gone#g"));
    }
    crashloc::stacktrace::InternalFrameView { methods: picked }
}

pub fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.path().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}
