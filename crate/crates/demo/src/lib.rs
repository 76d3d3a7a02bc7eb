//! Browser bindings. Each export takes and returns JSON strings; the plain
//! functions underneath are what the native tests call.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use ssecut::embed::{solve_embedding_sweep, SolverOptions};
use ssecut::gs_round::gs_round;
use ssecut::oracle::brute_sparsest;
use ssecut::{planted, CutResult, Graph};

/// Largest graph the page will round; the embedding solve grows quickly.
pub const MAX_ROUND_N: usize = 16;

fn load(graph_json: &str) -> Result<Graph, String> {
    let g = Graph::from_json_str(graph_json).map_err(|e| e.to_string())?;
    Ok(g.normalize_regular().map_err(|e| e.to_string())?.graph)
}

fn to_string<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Scores `set` (a JSON array, or empty for none) and finds the sparsest
/// cut by enumeration.
pub fn analyze(graph_json: &str, set_json: &str) -> Result<String, String> {
    let g = load(graph_json)?;
    let cut: Option<CutResult> = if set_json.trim().is_empty() {
        None
    } else {
        let set: Vec<usize> = serde_json::from_str(set_json).map_err(|e| format!("set: {e}"))?;
        Some(g.cut_quality(&set).map_err(|e| e.to_string())?)
    };
    let optimum = brute_sparsest(&g).map_err(|e| e.to_string())?;
    to_string(&json!({ "n": g.n(), "cut": cut, "optimum": optimum }))
}

/// Solves the base embedding, rounds it by column selection and compares
/// with the exhaustive optimum.
pub fn round(graph_json: &str, r: usize, eps: f64, seed: u64) -> Result<String, String> {
    let g = load(graph_json)?;
    if g.n() > MAX_ROUND_N {
        return Err(format!("rounding is limited to n ≤ {MAX_ROUND_N} here"));
    }
    let sol = solve_embedding_sweep(&g, &SolverOptions::default())
        .map_err(|e| e.to_string())?
        .solution;
    let rep = gs_round(&g, &sol, r, eps, seed).map_err(|e| e.to_string())?;
    let optimum = brute_sparsest(&g).map_err(|e| e.to_string())?;
    let ratio = if optimum.sparsity > 0.0 {
        rep.sparsity / optimum.sparsity
    } else {
        1.0
    };
    to_string(&json!({
        "phi_sdp": sol.objective,
        "gamma": rep.gamma,
        "bound": rep.bound,
        "selected": rep.selected,
        "cut": rep.best_cut,
        "optimum": optimum,
        "ratio": ratio,
    }))
}

/// A planted instance with its graph in the input format.
pub fn planted(
    n: usize,
    rho: f64,
    inner_degree: usize,
    cross_edges: usize,
    seed: u64,
) -> Result<String, String> {
    let inst =
        planted::generate(n, rho, inner_degree, cross_edges, seed).map_err(|e| e.to_string())?;
    to_string(&json!({
        "graph": inst.graph.to_json(),
        "planted": inst.planted,
        "degree": inst.degree,
        "measured": inst.measured,
    }))
}

#[wasm_bindgen(js_name = analyze)]
pub fn analyze_js(graph_json: &str, set_json: &str) -> Result<String, JsError> {
    analyze(graph_json, set_json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = round)]
pub fn round_js(graph_json: &str, r: usize, eps: f64, seed: u32) -> Result<String, JsError> {
    round(graph_json, r, eps, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = planted)]
pub fn planted_js(
    n: usize,
    rho: f64,
    inner_degree: usize,
    cross_edges: usize,
    seed: u32,
) -> Result<String, JsError> {
    planted(n, rho, inner_degree, cross_edges, seed as u64).map_err(|e| JsError::new(&e))
}
