//! `check`, `solve` and `kernel-dump`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use super::{example, FileError, ProblemFile};
use crate::kernels::KernelError;
use crate::problem::{analyze, check_h1, CheckOptions, Hypothesis, HypothesisReport, ProblemError, Status};
use crate::quad::DEFAULT_CONSTANT_TOL;
use crate::solver::{
    contract_iterate, monotone_iterate, Direction, Grid, Interpolation, IterOptions, IterationTrace, Operator,
    PlanOptions, Scheme, SolverError,
};
use crate::verify::{
    contraction_audit, error_bound_audit, ordering_audit, verify_solution, VerificationReport, VerifyError,
    AUDIT_QUAD_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_PARSE: i32 = 4;

/// Random pairs drawn by the contraction audit after a Picard run.
const CONTRACTION_SAMPLES: usize = 20;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Parse { path: String, source: FileError },
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => EXIT_PARSE,
            _ => EXIT_FAILURE,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

#[derive(Debug, Parser)]
#[command(name = "fracbvp", version, about = "Coupled fractional boundary value problems on the half-line")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive the constants and test the hypotheses.
    Check(CheckArgs),
    /// Iterate to a solution and verify it.
    Solve(SolveArgs),
    /// Tabulate the Green's kernels on a rectangular grid.
    KernelDump(DumpArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Problem file.
    #[arg(required_unless_present = "example", conflicts_with = "example")]
    pub file: Option<PathBuf>,
    /// Shipped example instead of a file (ex31, ex32).
    #[arg(long)]
    pub example: Option<String>,
    /// Machine-readable output on stdout.
    #[arg(long)]
    pub json: bool,
    /// Quadrature tolerance for constants; iteration tolerance for `solve`.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Number of grid nodes.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Seed for the randomized checks.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Iteration budget.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Scheme whose hypotheses decide the exit code; defaults to the file's.
    #[arg(long)]
    pub scheme: Option<Scheme>,
    /// Random samples for the falsification checks.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// monotone or contraction; defaults to the file's.
    #[arg(long)]
    pub scheme: Option<Scheme>,
    /// Scale of the node map t = theta x / (1 - x).
    #[arg(long)]
    pub theta: Option<f64>,
    /// linear or monotone-cubic, between nodes.
    #[arg(long)]
    pub interpolation: Option<Interpolation>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DumpArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Points per axis.
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    /// Largest t and s.
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    /// Start both axes at 0 instead of t_max / points.
    #[arg(long)]
    pub include_zero: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Loaded {
    name: String,
    file: ProblemFile,
}

fn load(input: &InputArgs) -> Result<Loaded, CliError> {
    if let Some(name) = &input.example {
        let file = example(name).ok_or_else(|| CliError::Usage(format!("unknown example `{name}` (ex31, ex32)")))?;
        return Ok(Loaded { name: name.clone(), file });
    }
    let path = input.file.as_ref().ok_or_else(|| CliError::Usage("no problem file given".into()))?;
    let text = std::fs::read_to_string(path).map_err(io_err(path.display().to_string()))?;
    let file =
        ProblemFile::parse(&text).map_err(|source| CliError::Parse { path: path.display().to_string(), source })?;
    let name = path.file_stem().map_or("problem".into(), |s| s.to_string_lossy().into_owned());
    Ok(Loaded { name, file })
}

/// Hypotheses a scheme relies on.
pub fn required_hypotheses(scheme: Scheme) -> &'static [Hypothesis] {
    match scheme {
        Scheme::Monotone => &[Hypothesis::H1, Hypothesis::H2, Hypothesis::H4],
        Scheme::Contraction => &[Hypothesis::H1, Hypothesis::H3, Hypothesis::Contraction],
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_PARSE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match run(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Check(a) => cmd_check(a, out),
        Command::Solve(a) => cmd_solve(a, out, err),
        Command::KernelDump(a) => cmd_kernel_dump(a, out),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.10}"))
}

fn print_report(out: &mut dyn Write, name: &str, rep: &HypothesisReport) -> io::Result<()> {
    writeln!(out, "problem {name}")?;
    writeln!(out, "  alpha          {:?}", rep.alpha)?;
    writeln!(out, "  Gamma(alpha)   {:.5}  {:.5}", rep.gamma_alpha[0], rep.gamma_alpha[1])?;
    writeln!(out, "  Lambda         {}  {}", fmt_opt(rep.lambda[0]), fmt_opt(rep.lambda[1]))?;
    if let Some(li) = rep.l_i {
        writeln!(out, "  L_i            {:.6}  {:.6}", li[0], li[1])?;
    }
    writeln!(out, "  L              {}", fmt_opt(rep.l))?;
    if let Some(a) = rep.a_star {
        for (i, row) in a.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.8}")).collect();
            writeln!(out, "  a*{}           {}", i + 1, cells.join("  "))?;
        }
        writeln!(out, "  R              {}", fmt_opt(rep.big_r))?;
        if let Some(b) = rep.self_map_bound {
            writeln!(out, "  self-map bound {:.6}  {:.6}", b[0], b[1])?;
        }
    }
    if let Some(b) = rep.b_star {
        for (i, row) in b.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.8}")).collect();
            writeln!(out, "  b*{}           {}", i + 1, cells.join("  "))?;
        }
        if let Some(t) = rep.tau {
            writeln!(out, "  tau            {:.10}  {:.10}", t[0], t[1])?;
        }
        writeln!(out, "  m              {}", fmt_opt(rep.m))?;
        writeln!(out, "  r              {}", fmt_opt(rep.r))?;
    }
    writeln!(out, "hypotheses")?;
    for v in &rep.verdicts {
        let status = match v.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skipped",
        };
        writeln!(out, "  {:<12} {status}", format!("{:?}", v.hypothesis))?;
        for r in &v.reasons {
            writeln!(out, "               {r}")?;
        }
    }
    if !rep.references.is_empty() {
        writeln!(out, "published values")?;
        for r in &rep.references {
            let mark = if r.matches { "ok" } else { "MISMATCH" };
            writeln!(
                out,
                "  {:<8} published {:<14.8e} computed {:<16} {mark}",
                r.name,
                r.published,
                fmt_opt(r.computed)
            )?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    problem: &'a str,
    scheme: Scheme,
    required: &'a [Hypothesis],
    passed: bool,
    report: &'a HypothesisReport,
}

pub fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let Loaded { name, file } = load(&a.input)?;
    let opts = CheckOptions {
        tol: a.input.tol.unwrap_or(DEFAULT_CONSTANT_TOL),
        samples: a.samples.unwrap_or(file.solver.samples),
        seed: a.input.seed.unwrap_or(file.solver.seed),
    };
    let mut rep = analyze(&file.spec, &opts);
    rep.compare_references(&file.reference_values());
    let scheme = a.scheme.unwrap_or(file.solver.scheme);
    let required = required_hypotheses(scheme);
    let passed = rep.all_pass(required);
    let w = |e| CliError::Io { context: "stdout".into(), source: e };
    if a.input.json {
        let doc = CheckOutput { problem: &name, scheme, required, passed, report: &rep };
        serde_json::to_writer_pretty(&mut *out, &doc)?;
        writeln!(out).map_err(w)?;
    } else {
        print_report(out, &name, &rep).map_err(w)?;
        writeln!(out, "{scheme} scheme requires {required:?}: {}", if passed { "satisfied" } else { "NOT satisfied" })
            .map_err(w)?;
    }
    Ok(if passed { EXIT_OK } else { EXIT_HYPOTHESIS })
}

/// Resolved configuration written at the top of every output file.
fn header(
    name: &str,
    file: &ProblemFile,
    grid: &Grid,
    plan: &PlanOptions,
    extra: &[(&str, f64)],
) -> Vec<(String, String)> {
    let c = &file.solver;
    let mut h = vec![
        ("problem".to_string(), name.to_string()),
        ("scheme".into(), c.scheme.to_string()),
        ("seed".into(), c.seed.to_string()),
        ("tol".into(), format!("{:?}", c.tol)),
        ("max_iter".into(), c.max_iter.to_string()),
        ("grid_n".into(), grid.len().to_string()),
        ("theta".into(), format!("{:?}", grid.theta())),
        ("t_max".into(), format!("{:?}", grid.t_max())),
        ("interpolation".into(), format!("{:?}", plan.interpolation).to_lowercase()),
        ("points_per_panel".into(), plan.points_per_panel.to_string()),
        ("tail_points".into(), plan.tail_points.to_string()),
        ("quad_tol".into(), format!("{:?}", AUDIT_QUAD_TOL)),
    ];
    h.extend(extra.iter().map(|(k, v)| (k.to_string(), format!("{v:?}"))));
    h
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path.display().to_string()))
}

fn write_trace(
    dir: &Path,
    stem: &str,
    trace: &IterationTrace,
    hdr: &[(String, String)],
) -> Result<Vec<PathBuf>, CliError> {
    let sol = dir.join(format!("{stem}.csv"));
    trace.last().write_csv(create(&sol)?, hdr).map_err(io_err(sol.display().to_string()))?;
    let tr = dir.join(format!("{stem}_trace.csv"));
    trace.write_csv(create(&tr)?, hdr).map_err(io_err(tr.display().to_string()))?;
    Ok(vec![sol, tr])
}

#[derive(Serialize)]
struct RunSummary {
    direction: Option<Direction>,
    converged: bool,
    iterations: usize,
    last_diff: Option<f64>,
    norm: f64,
    elapsed_s: f64,
    warnings: Vec<String>,
}

impl RunSummary {
    fn of(t: &IterationTrace) -> Self {
        Self {
            direction: t.direction,
            converged: t.converged,
            iterations: t.iterations(),
            last_diff: t.records.last().map(|r| r.diff),
            norm: t.last().norm(),
            elapsed_s: t.elapsed_s,
            warnings: t.warnings.clone(),
        }
    }
}

#[derive(Serialize)]
struct SolveOutput {
    problem: String,
    scheme: Scheme,
    config: std::collections::BTreeMap<String, String>,
    runs: Vec<RunSummary>,
    verification: Vec<VerificationReport>,
    files: Vec<PathBuf>,
    /// Iteration count the a priori bound promises, contraction only.
    predicted_iterations: Option<f64>,
    ok: bool,
}

pub fn cmd_solve(a: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let Loaded { name, mut file } = load(&a.input)?;
    let c = &mut file.solver;
    if let Some(v) = a.input.tol {
        c.tol = v;
    }
    if let Some(v) = a.input.grid_n {
        c.grid_n = v;
    }
    if let Some(v) = a.input.seed {
        c.seed = v;
    }
    if let Some(v) = a.input.max_iter {
        c.max_iter = v;
    }
    if let Some(v) = a.scheme {
        c.scheme = v;
    }
    if let Some(v) = a.theta {
        c.theta = v;
    }
    if let Some(v) = a.interpolation {
        c.interpolation = v;
    }
    let cfg = c.clone();
    if !(cfg.tol > 0.0) {
        return Err(CliError::Usage(format!("tol must be positive, got {}", cfg.tol)));
    }

    let rep = analyze(&file.spec, &CheckOptions { tol: DEFAULT_CONSTANT_TOL, samples: cfg.samples, seed: cfg.seed });
    let required = required_hypotheses(cfg.scheme);
    let e = |e| CliError::Io { context: "stderr".into(), source: e };
    if !rep.all_pass(required) {
        writeln!(err, "refusing to run the {} scheme on {name}: required hypotheses fail", cfg.scheme).map_err(e)?;
        for v in rep.verdicts.iter().filter(|v| required.contains(&v.hypothesis) && !v.passed()) {
            writeln!(err, "  {:?}: {}", v.hypothesis, v.reasons.join("; ")).map_err(e)?;
        }
        if cfg.scheme == Scheme::Contraction {
            if let Some(m) = rep.m.filter(|m| *m >= 1.0) {
                writeln!(err, "  contraction modulus m = {m:.6} is not below 1, so T need not be a contraction")
                    .map_err(e)?;
            }
        }
        return Ok(EXIT_HYPOTHESIS);
    }

    let kernels = file.spec.kernel_sets(DEFAULT_CONSTANT_TOL)?;
    let grid = Arc::new(Grid::new(cfg.grid_n, cfg.theta)?);
    let plan = PlanOptions {
        points_per_panel: cfg.points_per_panel,
        tail_points: cfg.tail_points,
        interpolation: cfg.interpolation,
    };
    let op = Operator::new(&file.spec, &kernels, grid.clone(), plan)?;
    let opts = IterOptions::new(cfg.tol, cfg.max_iter);
    std::fs::create_dir_all(&a.out).map_err(io_err(a.out.display().to_string()))?;

    let mut files = Vec::new();
    let mut verification = Vec::new();
    let (runs, ok, predicted) = match cfg.scheme {
        Scheme::Monotone => {
            let big_r = rep.big_r.expect("H2 passed, so R exists");
            let hdr = header(&name, &file, &grid, &plan, &[("R", big_r)]);
            let lower = monotone_iterate(&op, Direction::Lower, big_r, &opts)?;
            files.extend(write_trace(&a.out, &format!("{name}_lower"), &lower, &hdr)?);
            let upper = monotone_iterate(&op, Direction::Upper, big_r, &opts)?;
            files.extend(write_trace(&a.out, &format!("{name}_upper"), &upper, &hdr)?);
            let audit = ordering_audit(&lower, &upper, AUDIT_QUAD_TOL);
            let ok = audit.ok;
            for t in [&lower, &upper] {
                let mut v = verify_solution(&op, &kernels, t.last())?;
                v.ordering = Some(audit.clone());
                verification.push(v);
            }
            (vec![RunSummary::of(&lower), RunSummary::of(&upper)], ok, None)
        }
        Scheme::Contraction => {
            let m = rep.m.expect("contraction verdict passed, so m exists");
            let hdr = header(&name, &file, &grid, &plan, &[("m", m)]);
            let trace = contract_iterate(&op, None, m, &opts)?;
            files.extend(write_trace(&a.out, &name, &trace, &hdr)?);
            let audit = error_bound_audit(&trace, m, trace.last(), AUDIT_QUAD_TOL);
            let radius = rep.r.unwrap_or_else(|| trace.last().norm());
            let sampled = contraction_audit(&op, m, radius, CONTRACTION_SAMPLES, cfg.seed, AUDIT_QUAD_TOL)?;
            let ok = audit.ok && sampled.ok;
            let mut v = verify_solution(&op, &kernels, trace.last())?;
            v.error_bound = Some(audit);
            v.contraction = Some(sampled);
            verification.push(v);
            // Smallest n with m^n / (1 - m) d_1 <= tol.
            let predicted = trace
                .records
                .first()
                .filter(|r| r.diff > 0.0)
                .map(|r| ((cfg.tol * (1.0 - m) / r.diff).ln() / m.ln()).max(0.0).ceil());
            (vec![RunSummary::of(&trace)], ok, predicted)
        }
    };

    let hdr = header(&name, &file, &grid, &plan, &[]);
    let vpath = a.out.join(format!("{name}_verification.json"));
    let doc = SolveOutput {
        problem: name.clone(),
        scheme: cfg.scheme,
        config: hdr.into_iter().collect(),
        runs,
        verification,
        files: files.clone(),
        predicted_iterations: predicted,
        ok,
    };
    let mut vf = create(&vpath)?;
    serde_json::to_writer_pretty(&mut vf, &doc)?;
    vf.flush().map_err(io_err(vpath.display().to_string()))?;

    let w = |e| CliError::Io { context: "stdout".into(), source: e };
    if a.input.json {
        serde_json::to_writer_pretty(&mut *out, &doc)?;
        writeln!(out).map_err(w)?;
    } else {
        print_solve(out, &doc, &vpath).map_err(w)?;
    }
    let converged = doc.runs.iter().all(|r| r.converged);
    Ok(if !converged {
        EXIT_NO_CONVERGENCE
    } else if !ok {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}

fn print_solve(out: &mut dyn Write, doc: &SolveOutput, vpath: &Path) -> io::Result<()> {
    writeln!(out, "problem {} ({} scheme)", doc.problem, doc.scheme)?;
    for (r, v) in doc.runs.iter().zip(&doc.verification) {
        let label = r.direction.map_or("picard".to_string(), |d| format!("{d:?}").to_lowercase());
        writeln!(
            out,
            "  {label:<8} converged={} iterations={} d_last={} norm={:.6} fixed-point residual={:.2e} bc residual=({:.2e}, {:.2e})",
            r.converged,
            r.iterations,
            r.last_diff.map_or("-".into(), |d| format!("{d:.2e}")),
            r.norm,
            v.fixed_point_residual,
            v.bc_residual[0],
            v.bc_residual[1],
        )?;
        for w in &r.warnings {
            writeln!(out, "           warning: {w}")?;
        }
    }
    if let Some(n) = doc.predicted_iterations {
        writeln!(out, "  a priori iteration budget {n}")?;
    }
    if let Some(a) = doc.verification.first().and_then(|v| v.ordering.as_ref()) {
        writeln!(out, "  ordering audit: {} ({} comparisons)", if a.ok { "pass" } else { "FAIL" }, a.comparisons)?;
        if let Some(v) = &a.violation {
            writeln!(out, "    first violation: {v:?}")?;
        }
    }
    if let Some(a) = doc.verification.first().and_then(|v| v.error_bound.as_ref()) {
        writeln!(
            out,
            "  error-bound audit: {} (worst ratio {:.4})",
            if a.ok { "pass" } else { "FAIL" },
            a.worst_ratio
        )?;
    }
    if let Some(a) = doc.verification.first().and_then(|v| v.contraction.as_ref()) {
        writeln!(
            out,
            "  contraction audit: {} ({} pairs in the ball of radius {:.4}, observed modulus {:.4})",
            if a.ok { "pass" } else { "FAIL" },
            a.samples,
            a.radius,
            a.observed_modulus
        )?;
    }
    for f in &doc.files {
        writeln!(out, "  wrote {}", f.display())?;
    }
    writeln!(out, "  wrote {}", vpath.display())
}

/// Axis for the dump: `points` values up to `t_max`.
pub fn dump_axis(points: usize, t_max: f64, include_zero: bool) -> Vec<f64> {
    if include_zero {
        let d = points.saturating_sub(1).max(1) as f64;
        (0..points).map(|k| t_max * k as f64 / d).collect()
    } else {
        (1..=points).map(|k| t_max * k as f64 / points as f64).collect()
    }
}

pub fn cmd_kernel_dump(a: &DumpArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let Loaded { name, file } = load(&a.input)?;
    if a.points == 0 || !(a.t_max > 0.0) {
        return Err(CliError::Usage("kernel-dump needs points >= 1 and t_max > 0".into()));
    }
    let tol = a.input.tol.unwrap_or(DEFAULT_CONSTANT_TOL);
    let (h1, _) = check_h1(&file.spec, tol);
    if !h1.passed() {
        writeln!(io::stderr(), "H1 fails for {name}: {}", h1.reasons.join("; ")).ok();
        return Ok(EXIT_HYPOTHESIS);
    }
    let kernels = file.spec.kernel_sets(tol)?;
    let axis = dump_axis(a.points, a.t_max, a.include_zero);
    let mut sink: Box<dyn Write + '_> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(&mut *out),
    };
    let ctx = a.out.as_ref().map_or("stdout".to_string(), |p| p.display().to_string());
    let hdr = [
        ("problem", name),
        ("points", a.points.to_string()),
        ("t_max", format!("{:?}", a.t_max)),
        ("tol", format!("{tol:?}")),
    ];
    for (k, v) in hdr {
        writeln!(sink, "# {k}={v}").map_err(io_err(ctx.clone()))?;
    }
    let mut w = csv::Writer::from_writer(sink);
    let mut cols = vec!["t".to_string(), "s".to_string()];
    for i in 1..=2 {
        for c in ["K{}_1", "K{}_2", "K{}", "Kstar{}", "K{}_bound", "Kstar{}_bound"] {
            cols.push(c.replace("{}", &i.to_string()));
        }
    }
    let csv_err = |e: csv::Error| CliError::Io { context: ctx.clone(), source: e.into() };
    w.write_record(&cols).map_err(csv_err)?;
    for &t in &axis {
        for &s in &axis {
            let mut row = vec![t, s];
            for ks in &kernels {
                let (k1, k2) = (ks.k1(t, s)?, ks.k2(t, s)?);
                row.extend([k1, k2, k1 + k2, ks.kstar(t, s)?, ks.k_bound(t), ks.kstar_bound()]);
            }
            w.write_record(row.iter().map(|x| format!("{x:?}"))).map_err(csv_err)?;
        }
    }
    w.flush().map_err(io_err(ctx))?;
    Ok(EXIT_OK)
}
