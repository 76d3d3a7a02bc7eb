use serde_json::Value;
use ssecut_demo::{analyze, planted, round};

const C4: &str = r#"{"n": 4, "edges": [[0, 1, 1], [1, 2, 1], [2, 3, 1], [0, 3, 1]]}"#;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn c4_optimum_and_scored_set() {
    let v = parse(&analyze(C4, "[0, 1]").unwrap());
    // normalized C4: two edges of weight 1/2 cross, 4·1/(2·2) = 1
    assert!((v["optimum"]["sparsity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["cut"]["sparsity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let v = parse(&analyze(C4, "[0, 2]").unwrap());
    assert!((v["cut"]["sparsity"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!(parse(&analyze(C4, "").unwrap())["cut"].is_null());
}

#[test]
fn bad_input_is_an_error() {
    assert!(analyze("{", "").is_err());
    assert!(analyze(C4, "[9]").is_err());
    assert!(analyze(C4, "[0, 1, 2, 3]").is_err());
    assert!(planted(10, 0.9, 3, 0, 1).is_err());
}

#[test]
fn rounding_two_triangles() {
    let g = r#"{"n": 6, "edges": [[0,1,1],[1,2,1],[0,2,1],[3,4,1],[4,5,1],[3,5,1],[2,3,0.1]]}"#;
    let v = parse(&round(g, 2, 0.5, 0).unwrap());
    let opt = v["optimum"]["sparsity"].as_f64().unwrap();
    let got = v["cut"]["sparsity"].as_f64().unwrap();
    assert!(got >= opt - 1e-9);
    assert!(got <= v["bound"].as_f64().unwrap() + 1e-6);
    let mut set: Vec<u64> = v["cut"]["set"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap())
        .collect();
    set.sort();
    assert!(set == [0, 1, 2] || set == [3, 4, 5], "{set:?}");
}

#[test]
fn planted_round_trip() {
    let v = parse(&planted(12, 0.5, 3, 2, 4).unwrap());
    let graph = v["graph"].to_string();
    let set = v["planted"].to_string();
    let a = parse(&analyze(&graph, &set).unwrap());
    let want = v["measured"]["planted_sparsity"].as_f64().unwrap();
    assert!((a["cut"]["sparsity"].as_f64().unwrap() - want).abs() < 1e-9);
    assert_eq!(
        planted(12, 0.5, 3, 2, 4).unwrap(),
        planted(12, 0.5, 3, 2, 4).unwrap()
    );
}
