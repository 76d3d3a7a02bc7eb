use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sse-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &PathBuf, file: &str, body: &str) -> String {
    let p = dir.join(file);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sse-cut"))
        .args(args)
        .output()
        .unwrap()
}

fn report(out: &Output) -> Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn edges_json(n: usize, edges: &[(usize, usize)]) -> String {
    let list: Vec<String> = edges
        .iter()
        .map(|(u, v)| format!("[{u}, {v}, 1]"))
        .collect();
    format!("{{\"n\": {n}, \"edges\": [{}]}}", list.join(", "))
}

fn cycle(n: usize) -> String {
    let e: Vec<(usize, usize)> = (0..n)
        .map(|i| (i.min((i + 1) % n), i.max((i + 1) % n)))
        .collect();
    edges_json(n, &e)
}

#[test]
fn brute_on_c4() {
    let dir = scratch("c4");
    let g = write(&dir, "c4.json", &cycle(4));
    let v = report(&run(&["brute", "--graph", &g]));
    assert_eq!(v["command"], "brute");
    assert_eq!(v["seed"], 0);
    assert!((v["result"]["sparsity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn uniform_flow_on_k6_is_a_certificate() {
    let dir = scratch("k6");
    let pairs: Vec<(usize, usize)> = (0..6)
        .flat_map(|u| ((u + 1)..6).map(move |v| (u, v)))
        .collect();
    let g = write(&dir, "k6.json", &edges_json(6, &pairs));
    let paths: Vec<String> = pairs
        .iter()
        .map(|(u, v)| format!("{{\"verts\": [{u}, {v}], \"amount\": 0.2}}"))
        .collect();
    let f = write(
        &dir,
        "uniform.json",
        &format!("{{\"paths\": [{}]}}", paths.join(", ")),
    );
    let v = report(&run(&[
        "flow-verify",
        "--graph",
        &g,
        "--flow",
        &f,
        "--spectral",
        "2",
        "1.0",
        "1.0",
    ]));
    let spec = &v["result"]["spectral"];
    assert_eq!(spec["valid"], true);
    // L = (6I − J)/5, so λ₂ = 6/5
    assert!((spec["lambda_measured"].as_f64().unwrap() - 1.2).abs() < 1e-9);
    assert_eq!(v["result"]["capacity"]["passed"], true);
    let v = report(&run(&[
        "flow-verify",
        "--graph",
        &g,
        "--flow",
        &f,
        "--spectral",
        "2",
        "1.0",
        "1.5",
    ]));
    assert_eq!(v["result"]["spectral"]["valid"], false);
}

#[test]
fn disconnected_graph_rounds_to_zero() {
    let dir = scratch("disc");
    let g = write(
        &dir,
        "disconnected.json",
        &edges_json(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]),
    );
    let v = report(&run(&["gs-round", "--graph", &g, "--r", "2"]));
    assert_eq!(v["result"]["sparsity"].as_f64().unwrap(), 0.0);
    let mut set: Vec<u64> = v["result"]["cut"]["set"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap())
        .collect();
    set.sort();
    assert!(set == [0, 1, 2] || set == [3, 4, 5]);
}

#[test]
fn out_file_matches_stdout() {
    let dir = scratch("out");
    let g = write(&dir, "c6.json", &cycle(6));
    let out = dir.join("report.json");
    let o = run(&[
        "brute",
        "--graph",
        &g,
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&out).unwrap(), o.stdout);
    assert_eq!(report(&o)["seed"], 9);
}

#[test]
fn malformed_input_exits_one_with_position() {
    let dir = scratch("bad");
    let g = write(&dir, "bad.json", "{\"n\":3,\"edges\":[[0,1,1],\n");
    let o = run(&["brute", "--graph", &g]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("malformed input") && err.contains("line 2"),
        "{err}"
    );
    let o = run(&[
        "brute",
        "--graph",
        &dir.join("missing.json").to_string_lossy(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unmet_balance_is_inconclusive() {
    let dir = scratch("c5");
    let g = write(&dir, "c5.json", &cycle(5));
    let o = run(&[
        "flow-round",
        "--graph",
        &g,
        "--mode",
        "balanced",
        "--balance",
        "1.0",
        "--iterations",
        "20",
    ]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn bench_writes_csv() {
    let dir = scratch("bench");
    let g = write(&dir, "c6.json", &cycle(6));
    let o = run(&["bench", "--graph", &g]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("instance,algorithm,sparsity,oracle,ratio,seconds")
    );
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 6, "{line}");
        let ratio: f64 = cols[4].parse().unwrap();
        assert!(ratio >= 1.0 - 1e-7, "{line}");
    }
}
