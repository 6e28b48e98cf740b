use std::path::Path;

use fracbvp::cli::{example, example_source, run_from, ProblemFile};

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("fracbvp").chain(args.iter().copied());
    let code = run_from(argv, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn write_problem(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// Data rows of a CSV file with `#` header lines.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    let body = body.join("\n");
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let cols = rd.headers().unwrap().iter().map(str::to_string).collect();
    let rows = rd.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    (cols, rows)
}

#[test]
fn check_reports_the_constants() {
    let r = run(&["check", "--example", "ex31"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("Gamma(alpha)   1.32934  0.88623"), "{}", r.out);
    assert!(r.out.contains("Lambda"));
    assert!(r.out.contains("requires [H1, H2, H4]: satisfied"));
    assert!(!r.out.contains("MISMATCH"));

    let r = run(&["check", "--example", "ex32"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("m              0.98574"), "{}", r.out);
    let tau2 = r.out.lines().find(|l| l.trim_start().starts_with("tau2")).unwrap();
    assert!(tau2.ends_with("MISMATCH"), "{tau2}");
}

#[test]
fn check_json_parses() {
    let r = run(&["check", "--example", "ex32", "--json"]);
    assert_eq!(r.code, 0);
    let v: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["passed"], serde_json::Value::Bool(true));
    assert!((v["report"]["m"].as_f64().unwrap() - 0.985_740_294_5).abs() < 1e-8);
}

#[test]
fn doubled_lipschitz_data_fails_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    let mut pf = example("ex32").unwrap();
    let lip = pf.spec.lipschitz.as_mut().unwrap();
    for row in lip.b.iter_mut() {
        for b in row.iter_mut() {
            *b = fracbvp::exprlang::parse(&format!("2*({b})")).unwrap();
        }
    }
    let path = write_problem(dir.path(), "doubled.prob", &pf.to_text());
    let r = run(&["check", &path, "--scheme", "contraction"]);
    assert_eq!(r.code, 2);
    assert!(r.out.contains("NOT satisfied"));

    let out = dir.path().join("out");
    let r = run(&["solve", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("contraction modulus m = 1.97"), "{}", r.err);
    assert!(!out.join("doubled.csv").exists());
}

#[test]
fn parse_errors_exit_with_their_location() {
    let dir = tempfile::tempdir().unwrap();
    let text = example_source("ex31").unwrap().replace("alpha2 = 1.5", "alpha2 = 1.5 +");
    let path = write_problem(dir.path(), "broken.prob", &text);
    let r = run(&["check", &path]);
    assert_eq!(r.code, 4);
    assert!(r.err.contains("broken.prob:"), "{}", r.err);

    assert_eq!(run(&["check"]).code, 4);
    assert_eq!(run(&["frobnicate"]).code, 4);
    assert_eq!(run(&["--help"]).code, 0);
}

#[test]
fn files_round_trip_through_text() {
    for name in ["ex31", "ex32"] {
        let pf = example(name).unwrap();
        let again = ProblemFile::parse(&pf.to_text()).unwrap();
        assert_eq!(again.to_text(), pf.to_text());
        assert_eq!(again.reference_values(), pf.reference_values());
    }
}

#[test]
fn monotone_solve_writes_ordered_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let r = run(&["solve", "--example", "ex31", "--out", out, "--tol", "1e-5"]);
    assert_eq!(r.code, 0, "{}\n{}", r.out, r.err);
    assert!(r.out.contains("ordering audit: pass"));
    let read = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap();
    let lower = read("ex31_lower.csv");
    assert!(lower.starts_with("# problem=ex31\n"));
    assert!(lower.contains("# tol=0.00001") || lower.contains("# tol=1e-5"), "{lower}");
    let (cols, lo) = csv_rows(&lower);
    assert_eq!(cols, ["t", "u", "v", "du", "dv"]);
    let (_, up) = csv_rows(&read("ex31_upper.csv"));
    assert_eq!(lo.len(), 64);
    for (a, b) in lo.iter().zip(&up) {
        assert!(a[1..].iter().zip(&b[1..]).all(|(x, y)| *x > 0.0 && x <= y));
    }
    let v: serde_json::Value = serde_json::from_str(&read("ex31_verification.json")).unwrap();
    assert_eq!(v["ok"], serde_json::Value::Bool(true));
    assert_eq!(v["runs"].as_array().unwrap().len(), 2);
    assert!(read("ex31_lower_trace.csv").lines().count() > 10);
}

#[test]
fn contraction_solve_converges_within_its_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let r = run(&["solve", "--example", "ex32", "--out", out, "--json"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["ok"], serde_json::Value::Bool(true));
    assert_eq!(v["config"]["tol"], "0.0001");
    let run0 = &v["runs"][0];
    assert_eq!(run0["converged"], serde_json::Value::Bool(true));
    let predicted = v["predicted_iterations"].as_f64().unwrap();
    assert!(run0["iterations"].as_f64().unwrap() <= predicted);
    assert_eq!(v["verification"][0]["error_bound"]["ok"], serde_json::Value::Bool(true));
    assert_eq!(v["verification"][0]["contraction"]["ok"], serde_json::Value::Bool(true));
    assert!(dir.path().join("ex32.csv").exists());
}

#[test]
fn budget_exhaustion_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let r = run(&["solve", "--example", "ex32", "--out", out, "--tol", "1e-12", "--max-iter", "2", "--grid-n", "16"]);
    assert_eq!(r.code, 3, "{}", r.err);
}

#[test]
fn kernel_dump_stays_within_the_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.csv");
    let r = run(&["kernel-dump", "--example", "ex31", "--out", path.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.err);
    let (cols, rows) = csv_rows(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(cols.len(), 14);
    assert_eq!(rows.len(), 400);
    let col = |name: &str| cols.iter().position(|c| c == name).unwrap();
    for i in 1..=2 {
        let (k, kb) = (col(&format!("K{i}")), col(&format!("K{i}_bound")));
        let (ks, ksb) = (col(&format!("Kstar{i}")), col(&format!("Kstar{i}_bound")));
        for row in &rows {
            assert!(row[k] >= 0.0 && row[k] <= row[kb] * (1.0 + 1e-9));
            assert!(row[ks] >= 0.0 && row[ks] <= row[ksb] * (1.0 + 1e-9));
        }
    }
}

#[test]
fn kernel_dump_without_boundary_weights() {
    let text = example_source("ex31").unwrap();
    let mut pf = ProblemFile::parse(text).unwrap();
    pf.spec.h = [fracbvp::problem::BoundarySpec::zero(), fracbvp::problem::BoundarySpec::zero()];
    let dir = tempfile::tempdir().unwrap();
    let path = write_problem(dir.path(), "flat.prob", &pf.to_text());
    let r = run(&["kernel-dump", &path, "--points", "5", "--include-zero"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let (cols, rows) = csv_rows(&r.out);
    assert_eq!(rows.len(), 25);
    let k12 = cols.iter().position(|c| c == "K1_2").unwrap();
    assert!(rows.iter().all(|row| row[k12] == 0.0));
    // t = 0 rows vanish
    let k1 = cols.iter().position(|c| c == "K1").unwrap();
    assert!(rows.iter().filter(|row| row[0] == 0.0).all(|row| row[k1] == 0.0));
}
