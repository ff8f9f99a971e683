use std::path::Path;
use std::process::{Command, Output};

fn pac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pac")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// CSV rows without the `#` metadata lines.
fn body(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const CHAIN: &str = "csp 3 * 2\ncon 0 1 3\n0 0\n0 1\n1 1\ncon 1 2 3\n0 0\n0 1\n1 1\n";

#[test]
fn pac_prints_beliefs_and_status() {
    let dir = tempfile::tempdir().unwrap();
    let chain = write(dir.path(), "chain.csp", CHAIN);
    let text = stdout(&pac(&["pac", &chain]));
    assert!(text.lines().any(|l| l.starts_with("# status: converged")));
    let rows = body(&text);
    assert_eq!(rows[0], "var,value,prob");
    assert_eq!(rows.len(), 7);
    let p: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((p - 0.75).abs() < 1e-9);
}

#[test]
fn count_and_estimate_agree_on_a_chain() {
    let dir = tempfile::tempdir().unwrap();
    let chain = write(dir.path(), "chain.csp", CHAIN);
    let count = stdout(&pac(&["count", &chain, "--frequencies"]));
    assert!(count.contains("# total: 4"));
    for method in ["pac", "sst", "up", "mst"] {
        let est = stdout(&pac(&["estimate", &chain, "--method", method]));
        let (a, b) = (body(&count), body(&est));
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b).skip(1) {
            let px: f64 = x.rsplit(',').next().unwrap().parse().unwrap();
            let py: f64 = y.rsplit(',').next().unwrap().parse().unwrap();
            assert!((px - py).abs() < 1e-9, "{method}: {x} vs {y}");
        }
    }
}

#[test]
fn gen_is_deterministic_and_parseable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csp").display().to_string();
    let args = ["gen", "--n", "6", "--m", "3", "--p1", "0.5", "--p2", "0.3", "--seed", "9"];
    stdout(&pac(&[&args[..], &["--out", &a]].concat()));
    let again = stdout(&pac(&args));
    assert_eq!(std::fs::read_to_string(&a).unwrap(), again);
    stdout(&pac(&["ac3", &a]));
    let tree = stdout(&pac(&["gen", "--n", "5", "--m", "2", "--p2", "0.2", "--tree"]));
    assert_eq!(tree.lines().filter(|l| l.starts_with("con ")).count(), 4);
}

#[test]
fn solve_emits_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let chain = write(dir.path(), "chain.csp", CHAIN);
    for extra in [
        &[][..],
        &["--belief", "pac", "--val-rule", "max-belief", "--var-rule", "max-belief", "--dynamic"],
        &["--belief", "peleg", "--val-rule", "max-belief"],
        &["--var-rule", "random", "--val-rule", "random", "--seed", "3"],
    ] {
        let text = stdout(&pac(&[&["solve", chain.as_str()][..], extra].concat()));
        let rows = body(&text);
        assert_eq!(rows[0], "instance,heuristic,outcome,backtracks,nodes,propagation_rounds");
        assert_eq!(rows.len(), 2);
        assert!(rows[1].contains(",solution,"));
    }
}

#[test]
fn ac3_reports_wipeout() {
    let dir = tempfile::tempdir().unwrap();
    let dead = write(dir.path(), "dead.csp", "csp 2 * 1\ncon 0 1 0\n");
    let text = stdout(&pac(&["ac3", &dead]));
    assert!(text.contains("# status: wipeout"));
    let text = stdout(&pac(&["solve", &dead]));
    assert!(text.contains(",unsatisfiable,1,2,0"));
}

#[test]
fn bad_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csp", "csp 2 * 2\ncon 0 0 0\n");
    assert_eq!(pac(&["pac", &bad]).status.code(), Some(2));
    assert_eq!(pac(&["pac", "/nonexistent/file.csp"]).status.code(), Some(2));
    let chain = write(dir.path(), "chain.csp", CHAIN);
    assert_eq!(pac(&["pac", &chain, "--epsilon=-1"]).status.code(), Some(2));
    let spec = write(dir.path(), "s.toml", "[corpus]\nseed = 1\nfamilies = []\nunknown = 3\n");
    assert_eq!(pac(&["study-search", "--spec", &spec]).status.code(), Some(2));
}

#[test]
fn empty_study_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "s.toml", "[corpus]\nseed = 1\nfamilies = []\n");
    let text = stdout(&pac(&["study-search", "--spec", &spec]));
    assert_eq!(body(&text), vec!["heuristic,problems,solved,median_backtracks,mean_backtracks", "random,0,0,NaN,NaN", "pac-static,0,0,NaN,NaN", "pac-dynamic,0,0,NaN,NaN", "peleg,0,0,NaN,NaN"]);
    assert!(text.contains("# corpus: 0 instances"));
}

#[test]
fn oscillator_scan_writes_instance_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("osc.csp").display().to_string();
    let trace = dir.path().join("trace.csv").display().to_string();
    stdout(&pac(&["find-oscillator", "--seed", "2", "--attempts", "100", "--out", &inst, "--trace", &trace]));
    let text = std::fs::read_to_string(&inst).unwrap();
    assert!(text.contains("# status: oscillating 2"));
    let replay = stdout(&pac(&["pac", &inst, "--epsilon", "1e-10", "--max-iter", "2000"]));
    assert!(replay.contains("# status: oscillating 2"));
    assert!(std::fs::read_to_string(&trace).unwrap().contains("k,residual,residual_two_step,min_mass"));
}
