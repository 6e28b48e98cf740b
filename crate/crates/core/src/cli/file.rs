//! Sectioned plain-text problem files.
//!
//! ```text
//! # comment
//! [orders]
//! alpha1 = 2.5
//! alpha2 = 1.5
//! [boundary]
//! h1 = t^-1.5 * exp(-t)
//! h1_exponent = -1.5
//! ```
//!
//! Sections: `orders`, `boundary`, `rhs`, `growth`, `lipschitz`, `solver`,
//! `reference`. Unknown sections, unknown keys and duplicates are errors.
//! `#` starts a comment anywhere on a line.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::exprlang::{parse, Env, Expr};
use crate::fracops::FracOrder;
use crate::problem::{BoundarySpec, GrowthData, LipschitzData, ProblemSpec};
use crate::solver::{Interpolation, Scheme};

/// Parse failure with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct FileError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Solver settings carried by a problem file.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SolverConfig {
    pub grid_n: usize,
    pub theta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub samples: usize,
    pub interpolation: Interpolation,
    pub points_per_panel: usize,
    /// Points of the mapped rule covering `[t_N, inf)`.
    pub tail_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_n: 64,
            theta: 5.0,
            tol: 1e-5,
            max_iter: 500,
            scheme: Scheme::Monotone,
            seed: 0x5eed,
            samples: 10_000,
            interpolation: Interpolation::Linear,
            points_per_panel: 8,
            tail_points: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub spec: ProblemSpec,
    pub solver: SolverConfig,
    /// Published values to compare against, by constant name.
    pub references: Vec<(String, Expr)>,
}

const SECTIONS: [&str; 7] = ["orders", "boundary", "rhs", "growth", "lipschitz", "solver", "reference"];

/// Names accepted in `[reference]`.
pub fn is_reference_name(name: &str) -> bool {
    let b = name.as_bytes();
    let comp = |c: u8| c == b'1' || c == b'2';
    match name {
        "L" | "m" | "R" | "r" => true,
        _ if name.len() == 6 && name.starts_with("gamma") => comp(b[5]),
        _ if name.len() == 7 && name.starts_with("lambda") => comp(b[6]),
        _ if name.len() == 4 && name.starts_with("tau") => comp(b[3]),
        _ if name.len() == 3 && b[0] == b'a' => comp(b[1]) && (b'0'..=b'4').contains(&b[2]),
        _ if name.len() == 3 && b[0] == b'b' => comp(b[1]) && (b'1'..=b'4').contains(&b[2]),
        _ => false,
    }
}

struct Entry {
    line: usize,
    column: usize,
    value: String,
}

impl Entry {
    fn err(&self, message: impl Into<String>) -> FileError {
        FileError { line: self.line, column: self.column, message: message.into() }
    }

    fn expr(&self) -> Result<Expr, FileError> {
        parse(&self.value).map_err(|e| FileError {
            line: self.line,
            column: self.column + e.offset,
            message: e.to_string(),
        })
    }

    /// A number, written either as a literal or as a constant expression.
    fn number(&self) -> Result<f64, FileError> {
        let e = self.expr()?;
        if !e.variables().is_empty() {
            return Err(self.err("expected a constant"));
        }
        e.eval(&Env::new()).map_err(|err| self.err(err.to_string()))
    }

    fn integer(&self) -> Result<u64, FileError> {
        let v = self.value.trim();
        let parsed = match v.strip_prefix("0x") {
            Some(hex) => u64::from_str_radix(hex, 16),
            None => v.parse(),
        };
        parsed.map_err(|_| self.err(format!("expected a nonnegative integer, got `{v}`")))
    }

    fn boolean(&self) -> Result<bool, FileError> {
        match self.value.trim() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(self.err(format!("expected true or false, got `{other}`"))),
        }
    }
}

type Section = BTreeMap<String, Entry>;

fn keys(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn split_sections(text: &str) -> Result<BTreeMap<&'static str, (usize, Section)>, FileError> {
    let mut sections: BTreeMap<&'static str, (usize, Section)> = BTreeMap::new();
    let mut current: Option<&'static str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or(FileError {
                line,
                column: indent + 1,
                message: "unterminated section header".into(),
            })?;
            let name = name.trim();
            let known = SECTIONS.iter().find(|s| **s == name).ok_or(FileError {
                line,
                column: indent + 2,
                message: format!("unknown section `{name}`"),
            })?;
            if sections.contains_key(known) {
                return Err(FileError { line, column: indent + 1, message: format!("duplicate section `{name}`") });
            }
            sections.insert(known, (line, Section::new()));
            current = Some(known);
            continue;
        }
        let Some(section) = current else {
            return Err(FileError { line, column: indent + 1, message: "key outside of any section".into() });
        };
        let eq = content.find('=').ok_or(FileError {
            line,
            column: indent + 1,
            message: "expected `key = value`".into(),
        })?;
        let key = content[..eq].trim().to_string();
        let value_raw = &content[eq + 1..];
        let value_col = eq + 2 + (value_raw.len() - value_raw.trim_start().len());
        let entry = Entry { line, column: value_col, value: value_raw.trim().to_string() };
        if key.is_empty() {
            return Err(FileError { line, column: indent + 1, message: "empty key".into() });
        }
        if entry.value.is_empty() {
            return Err(entry.err(format!("missing value for `{key}`")));
        }
        let map = &mut sections.get_mut(section).expect("section inserted").1;
        if map.contains_key(&key) {
            return Err(FileError { line, column: indent + 1, message: format!("duplicate key `{key}`") });
        }
        map.insert(key, entry);
    }
    Ok(sections)
}

/// Takes entries out of one section and rejects what is left over.
struct Reader {
    name: &'static str,
    line: usize,
    entries: Section,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<Entry, FileError> {
        self.take(key).ok_or(FileError {
            line: self.line,
            column: 1,
            message: format!("section [{}] is missing `{key}`", self.name),
        })
    }

    /// Rejects keys outside `allowed` before anything is read.
    fn only(&self, allowed: &[String]) -> Result<(), FileError> {
        let unknown = self.entries.iter().filter(|(k, _)| !allowed.contains(k)).min_by_key(|(_, e)| e.line);
        match unknown {
            None => Ok(()),
            Some((key, e)) => Err(FileError {
                line: e.line,
                column: 1,
                message: format!("unknown key `{key}` in section [{}]", self.name),
            }),
        }
    }

    fn finish(self) -> Result<(), FileError> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some((key, e)) => Err(FileError {
                line: e.line,
                column: 1,
                message: format!("unknown key `{key}` in section [{}]", self.name),
            }),
        }
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        let mut sections = split_sections(text)?;
        let mut reader = |name: &'static str, required: bool| -> Result<Option<Reader>, FileError> {
            match sections.remove(name) {
                Some((line, entries)) => Ok(Some(Reader { name, line, entries })),
                None if required => Err(FileError { line: 1, column: 1, message: format!("missing section [{name}]") }),
                None => Ok(None),
            }
        };

        let mut orders = reader("orders", true)?.expect("required");
        orders.only(&keys(&["alpha1", "alpha2"]))?;
        let mut alpha = [FracOrder::new(2.0).expect("valid"); 2];
        for (i, a) in alpha.iter_mut().enumerate() {
            let e = orders.require(&format!("alpha{}", i + 1))?;
            *a = FracOrder::new(e.number()?).map_err(|err| e.err(err.to_string()))?;
        }
        orders.finish()?;

        let mut h = [BoundarySpec::zero(), BoundarySpec::zero()];
        if let Some(mut b) = reader("boundary", false)? {
            b.only(&keys(&["h1", "h1_exponent", "h1_decay", "h2", "h2_exponent", "h2_decay"]))?;
            for (i, hs) in h.iter_mut().enumerate() {
                let k = i + 1;
                if let Some(e) = b.take(&format!("h{k}")) {
                    hs.expr = e.expr()?;
                }
                if let Some(e) = b.take(&format!("h{k}_exponent")) {
                    hs.endpoint_exponent = e.number()?;
                }
                if let Some(e) = b.take(&format!("h{k}_decay")) {
                    let rate = e.number()?;
                    if !(rate > 0.0) {
                        return Err(e.err("decay rate must be positive"));
                    }
                    hs.decay_hint = Some(rate);
                }
            }
            b.finish()?;
        }

        let mut rhs = reader("rhs", true)?.expect("required");
        rhs.only(&keys(&["f1", "f2", "monotone"]))?;
        let f = [rhs.require("f1")?.expr()?, rhs.require("f2")?.expr()?];
        let monotone = match rhs.take("monotone") {
            Some(e) => e.boolean()?,
            None => false,
        };
        rhs.finish()?;

        let growth = match reader("growth", false)? {
            None => None,
            Some(mut g) => {
                let allowed: Vec<String> = (1..=2)
                    .flat_map(|i| {
                        (0..5).map(move |k| format!("a{i}{k}")).chain((1..=4).map(move |k| format!("lambda{i}{k}")))
                    })
                    .collect();
                g.only(&allowed)?;
                let mut data = GrowthData {
                    a: std::array::from_fn(|_| std::array::from_fn(|_| Expr::Num(0.0))),
                    lambda: [[0.0; 4]; 2],
                };
                for i in 0..2 {
                    for k in 0..5 {
                        data.a[i][k] = g.require(&format!("a{}{}", i + 1, k))?.expr()?;
                    }
                    for k in 0..4 {
                        data.lambda[i][k] = g.require(&format!("lambda{}{}", i + 1, k + 1))?.number()?;
                    }
                }
                g.finish()?;
                Some(data)
            }
        };

        let lipschitz = match reader("lipschitz", false)? {
            None => None,
            Some(mut l) => {
                let allowed: Vec<String> = (1..=2).flat_map(|i| (1..=4).map(move |k| format!("b{i}{k}"))).collect();
                l.only(&allowed)?;
                let mut data = LipschitzData { b: std::array::from_fn(|_| std::array::from_fn(|_| Expr::Num(0.0))) };
                for i in 0..2 {
                    for k in 0..4 {
                        data.b[i][k] = l.require(&format!("b{}{}", i + 1, k + 1))?.expr()?;
                    }
                }
                l.finish()?;
                Some(data)
            }
        };

        let mut solver = SolverConfig::default();
        if let Some(mut s) = reader("solver", false)? {
            s.only(&keys(&[
                "grid_n",
                "theta",
                "tol",
                "max_iter",
                "scheme",
                "seed",
                "samples",
                "interpolation",
                "points_per_panel",
                "tail_points",
            ]))?;
            let count = |e: Entry| -> Result<usize, FileError> {
                usize::try_from(e.integer()?).map_err(|_| e.err("value too large"))
            };
            if let Some(e) = s.take("grid_n") {
                solver.grid_n = count(e)?;
            }
            if let Some(e) = s.take("theta") {
                solver.theta = e.number()?;
            }
            if let Some(e) = s.take("tol") {
                solver.tol = e.number()?;
                if !(solver.tol > 0.0) {
                    return Err(e.err("tol must be positive"));
                }
            }
            if let Some(e) = s.take("max_iter") {
                solver.max_iter = count(e)?;
            }
            if let Some(e) = s.take("scheme") {
                solver.scheme = e.value.parse().map_err(|m: String| e.err(m))?;
            }
            if let Some(e) = s.take("seed") {
                solver.seed = e.integer()?;
            }
            if let Some(e) = s.take("samples") {
                solver.samples = count(e)?;
            }
            if let Some(e) = s.take("interpolation") {
                solver.interpolation = e.value.parse().map_err(|m: String| e.err(m))?;
            }
            if let Some(e) = s.take("points_per_panel") {
                solver.points_per_panel = count(e)?;
            }
            if let Some(e) = s.take("tail_points") {
                solver.tail_points = count(e)?;
            }
            s.finish()?;
        }

        let mut references = Vec::new();
        if let Some(r) = reader("reference", false)? {
            let mut entries: Vec<(String, Entry)> = r.entries.into_iter().collect();
            entries.sort_by_key(|(_, e)| e.line);
            for (name, e) in entries {
                if !is_reference_name(&name) {
                    return Err(FileError {
                        line: e.line,
                        column: 1,
                        message: format!("unknown key `{name}` in section [reference]"),
                    });
                }
                let expr = e.expr()?;
                e.number()?;
                references.push((name, expr));
            }
        }

        let spec = ProblemSpec::new(alpha, h, f, growth, lipschitz, monotone).map_err(|err| FileError {
            line: 1,
            column: 1,
            message: err.to_string(),
        })?;
        Ok(Self { spec, solver, references })
    }

    /// Published values, evaluated.
    pub fn reference_values(&self) -> Vec<(String, f64)> {
        self.references.iter().filter_map(|(n, e)| e.eval(&Env::new()).ok().map(|v| (n.clone(), v))).collect()
    }

    /// Canonical text; parsing it gives back an equal `ProblemFile`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ProblemFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.spec;
        let mut out = String::new();
        let _ = writeln!(out, "[orders]");
        for (i, a) in p.alpha.iter().enumerate() {
            let _ = writeln!(out, "alpha{} = {:?}", i + 1, a.value());
        }
        let _ = writeln!(out, "\n[boundary]");
        for (i, h) in p.h.iter().enumerate() {
            let k = i + 1;
            let _ = writeln!(out, "h{k} = {}", h.expr);
            let _ = writeln!(out, "h{k}_exponent = {:?}", h.endpoint_exponent);
            if let Some(d) = h.decay_hint {
                let _ = writeln!(out, "h{k}_decay = {d:?}");
            }
        }
        let _ = writeln!(out, "\n[rhs]");
        for (i, fi) in p.f.iter().enumerate() {
            let _ = writeln!(out, "f{} = {fi}", i + 1);
        }
        let _ = writeln!(out, "monotone = {}", p.monotone);
        if let Some(g) = &p.growth {
            let _ = writeln!(out, "\n[growth]");
            for i in 0..2 {
                for k in 0..5 {
                    let _ = writeln!(out, "a{}{k} = {}", i + 1, g.a[i][k]);
                }
                for k in 0..4 {
                    let _ = writeln!(out, "lambda{}{} = {:?}", i + 1, k + 1, g.lambda[i][k]);
                }
            }
        }
        if let Some(l) = &p.lipschitz {
            let _ = writeln!(out, "\n[lipschitz]");
            for i in 0..2 {
                for k in 0..4 {
                    let _ = writeln!(out, "b{}{} = {}", i + 1, k + 1, l.b[i][k]);
                }
            }
        }
        let s = &self.solver;
        let _ = writeln!(out, "\n[solver]");
        let _ = writeln!(out, "grid_n = {}", s.grid_n);
        let _ = writeln!(out, "theta = {:?}", s.theta);
        let _ = writeln!(out, "tol = {:?}", s.tol);
        let _ = writeln!(out, "max_iter = {}", s.max_iter);
        let _ = writeln!(out, "scheme = {}", s.scheme);
        let _ = writeln!(out, "seed = {}", s.seed);
        let _ = writeln!(out, "samples = {}", s.samples);
        let interp = match s.interpolation {
            Interpolation::Linear => "linear",
            Interpolation::MonotoneCubic => "monotone-cubic",
        };
        let _ = writeln!(out, "interpolation = {interp}");
        let _ = writeln!(out, "points_per_panel = {}", s.points_per_panel);
        let _ = writeln!(out, "tail_points = {}", s.tail_points);
        if !self.references.is_empty() {
            let _ = writeln!(out, "\n[reference]");
            for (name, e) in &self.references {
                let _ = writeln!(out, "{name} = {e}");
            }
        }
        f.write_str(&out)
    }
}
