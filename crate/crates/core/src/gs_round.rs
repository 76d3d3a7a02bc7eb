//! Guruswami–Sinop style rounding: column selection, the projection residual
//! `γ`, threshold rounding, and eigenvalue-tail bounds.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embed::{LasserreSolution, VectorSolution};
use crate::error::{Error, Result};
use crate::graph::{keep_better, sweep_cut, CutResult, Graph};
use crate::linalg::{
    eigenvalues, norm, orthonormal_basis, project_residual, sum_tail_descending, Matrix,
};
use crate::rng;
use crate::sse_flow::{verify_capacity, MultiFlow};

/// Slack on every asserted inequality.
pub const CONTRACT_TOL: f64 = 1e-6;
const RANDOM_DIRECTIONS: usize = 64;
const EXHAUSTIVE_CAP: u64 = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundingReport {
    pub selected: Vec<usize>,
    pub gamma: f64,
    /// `φ_SDP / (1 − γ)`, infinite when `γ = 1`.
    pub bound: f64,
    #[serde(rename = "cut")]
    pub best_cut: CutResult,
    pub sparsity: f64,
    pub seed: u64,
}

/// `γ = ‖X_S^⊥ X‖_F² / ‖X‖_F²`.
pub fn projection_gamma(sol: &VectorSolution, set: &[usize]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::OutOfRange("column set is empty".into()));
    }
    if let Some(&bad) = set.iter().find(|&&u| u >= sol.n()) {
        return Err(Error::OutOfRange(format!("column {bad} out of range")));
    }
    let x = sol.matrix();
    let total = x.frobenius_sq();
    if total <= 0.0 {
        return Err(Error::Degenerate("all vectors are zero".into()));
    }
    let res = project_residual(&x, set);
    Ok((res.frobenius_sq() / total).clamp(0.0, 1.0))
}

/// `r' = ⌈r/ε⌉ + r + 1`.
pub fn column_count(r: usize, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(format!("eps = {eps} must lie in (0, 1)")));
    }
    Ok((r as f64 / eps - 1e-9).ceil() as usize + r + 1)
}

/// The column-selection target `(1−ε)^{-1}·Σ_{i>r} σ_i(XᵀX) / ‖X‖_F²`.
pub fn column_bound(sol: &VectorSolution, r: usize, eps: f64) -> Result<f64> {
    let k = sol.gram();
    let total = k.trace();
    if total <= 0.0 {
        return Err(Error::Degenerate("all vectors are zero".into()));
    }
    let tail = sum_tail_descending(&k, r.min(sol.n()))?.max(0.0);
    Ok(tail / ((1.0 - eps) * total))
}

/// Residual trace of the Gram matrix `k` after projecting out `set`, by
/// sequential pivoting.
fn residual_trace(k: &Matrix, set: &[usize]) -> f64 {
    let n = k.rows();
    let mut k = k.clone();
    let scale = k.trace().max(1e-300);
    for &j in set {
        let piv = k[(j, j)];
        if piv <= 1e-14 * scale {
            continue;
        }
        let col: Vec<f64> = (0..n).map(|i| k[(i, j)]).collect();
        for a in 0..n {
            for b in 0..n {
                k[(a, b)] -= col[a] * col[b] / piv;
            }
        }
    }
    k.trace().max(0.0)
}

fn greedy_columns(k: &Matrix, count: usize) -> Vec<usize> {
    let n = k.rows();
    let mut res = k.clone();
    let scale = k.trace().max(1e-300);
    let mut chosen = vec![false; n];
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if chosen[j] || res[(j, j)] <= 1e-14 * scale {
                continue;
            }
            let gain = (0..n).map(|u| res[(j, u)] * res[(j, u)]).sum::<f64>() / res[(j, j)];
            if best.map_or(true, |(g, _)| gain > g + 1e-15 * scale) {
                best = Some((gain, j));
            }
        }
        let j = match best {
            Some((_, j)) => j,
            // the residual is zero; pad with the first unused columns
            None => (0..n).find(|&j| !chosen[j]).expect("count ≤ n"),
        };
        chosen[j] = true;
        out.push(j);
        let piv = res[(j, j)];
        if piv > 1e-14 * scale {
            let col: Vec<f64> = (0..n).map(|i| res[(i, j)]).collect();
            for a in 0..n {
                for b in 0..n {
                    res[(a, b)] -= col[a] * col[b] / piv;
                }
            }
        }
    }
    out
}

/// One pass of best-improvement swaps until `target` is met or no swap helps.
fn swap_improve(k: &Matrix, set: &mut Vec<usize>, target: f64) -> f64 {
    let n = k.rows();
    let mut current = residual_trace(k, set);
    while current > target {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..set.len() {
            for j in 0..n {
                if set.contains(&j) {
                    continue;
                }
                let mut trial = set.clone();
                trial[i] = j;
                let v = residual_trace(k, &trial);
                if v < current - 1e-15 && best.map_or(true, |(b, _, _)| v < b) {
                    best = Some((v, i, j));
                }
            }
        }
        match best {
            Some((v, i, j)) => {
                set[i] = j;
                current = v;
            }
            None => break,
        }
    }
    current
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    let mut c: u64 = 1;
    for i in 0..k {
        c = c.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    c
}

fn exhaustive_columns(k: &Matrix, count: usize) -> (Vec<usize>, f64) {
    let n = k.rows();
    let mut combo: Vec<usize> = (0..count).collect();
    let mut best = (combo.clone(), residual_trace(k, &combo));
    loop {
        let mut i = count;
        while i > 0 && combo[i - 1] == n - count + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        combo[i - 1] += 1;
        for j in i..count {
            combo[j] = combo[j - 1] + 1;
        }
        let v = residual_trace(k, &combo);
        if v < best.1 - 1e-15 {
            best = (combo.clone(), v);
        }
    }
    best
}

/// Deterministic greedy column selection of `r' = ⌈r/ε⌉ + r + 1` columns.
///
/// The tail bound is checked on the result. When greedy misses it, local
/// swaps and then (for small instances) exhaustive search take over; failing
/// all three is a contract violation.
pub fn column_select(sol: &VectorSolution, r: usize, eps: f64) -> Result<Vec<usize>> {
    let n = sol.n();
    let count = column_count(r, eps)?;
    if count > n {
        return Err(Error::OutOfRange(format!(
            "r' = {count} columns requested from {n} vectors"
        )));
    }
    let k = sol.gram();
    let total = k.trace();
    if total <= 0.0 {
        return Err(Error::Degenerate("all vectors are zero".into()));
    }
    let target = (column_bound(sol, r, eps)? + CONTRACT_TOL) * total;
    let mut set = greedy_columns(&k, count);
    let mut value = residual_trace(&k, &set);
    if value > target {
        value = swap_improve(&k, &mut set, target);
    }
    if value > target && binomial(n, count) <= EXHAUSTIVE_CAP {
        let (s, v) = exhaustive_columns(&k, count);
        set = s;
        value = v;
    }
    if value > target {
        return Err(Error::ContractViolation(format!(
            "column selection residual {:.3e} exceeds the tail bound {:.3e}",
            value / total,
            target / total
        )));
    }
    Ok(set)
}

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let nv = norm(v);
    (nv > 1e-12).then(|| v.iter().map(|x| x / nv).collect())
}

/// Candidate directions: a basis of `span(X_S)`, the selected vectors
/// themselves and random unit combinations of the basis.
fn directions(sol: &VectorSolution, set: &[usize], seed: u64) -> Vec<Vec<f64>> {
    let x = sol.matrix();
    let basis = orthonormal_basis(&x, set);
    let mut dirs = basis.clone();
    dirs.extend(set.iter().filter_map(|&s| normalized(&x.column(s))));
    if !basis.is_empty() {
        let mut rng = rng::stream(seed, 0);
        for _ in 0..RANDOM_DIRECTIONS {
            let mut w = vec![0.0; x.rows()];
            for q in &basis {
                let c: f64 = rng.sample(StandardNormal);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi += c * qi;
                }
            }
            if let Some(w) = normalized(&w) {
                dirs.push(w);
            }
        }
    }
    dirs
}

/// Threshold rounding of a vector solution with respect to the columns `set`.
///
/// Sweeps every gap of the projections onto the candidate directions and of
/// the distances to each selected vector. Errors with a full dump if the
/// result breaks `sparsity ≤ φ_SDP/(1−γ)`.
pub fn threshold_round(
    g: &Graph,
    sol: &VectorSolution,
    set: &[usize],
    seed: u64,
) -> Result<CutResult> {
    let n = g.n();
    if sol.n() != n {
        return Err(Error::Dimension(format!(
            "{} vectors for {n} vertices",
            sol.n()
        )));
    }
    let gamma = projection_gamma(sol, set)?;
    let mut best: Option<CutResult> = None;
    for w in directions(sol, set, seed) {
        let values: Vec<f64> = sol.vectors.iter().map(|v| dot_padded(&w, v)).collect();
        if let Some(c) = sweep_cut(g, &values) {
            keep_better(n, &mut best, c);
        }
    }
    for &s in set {
        let values: Vec<f64> = (0..n).map(|u| sol.distance(u, s)).collect();
        if let Some(c) = sweep_cut(g, &values) {
            keep_better(n, &mut best, c);
        }
    }
    let best = best.ok_or_else(|| Error::Degenerate("all vectors project to one point".into()))?;
    let cut = g.cut_quality(&best.set)?;
    check_gs_contract(&cut, sol.objective, gamma, set)?;
    Ok(cut)
}

fn dot_padded(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn gs_bound(phi_sdp: f64, gamma: f64) -> f64 {
    if gamma < 1.0 {
        phi_sdp / (1.0 - gamma)
    } else {
        f64::INFINITY
    }
}

fn check_gs_contract(cut: &CutResult, phi_sdp: f64, gamma: f64, set: &[usize]) -> Result<()> {
    let bound = gs_bound(phi_sdp, gamma);
    if gamma < 1.0 && cut.sparsity > bound + CONTRACT_TOL {
        return Err(Error::ContractViolation(format!(
            "threshold rounding: sparsity {} > φ_SDP/(1−γ) = {} (φ_SDP = {}, γ = {}, S = {:?}, T = {:?})",
            cut.sparsity, bound, phi_sdp, gamma, set, cut.set
        )));
    }
    Ok(())
}

/// Column selection followed by threshold rounding. When `r'` exceeds `n`
/// every column is selected.
pub fn gs_round(
    g: &Graph,
    sol: &VectorSolution,
    r: usize,
    eps: f64,
    seed: u64,
) -> Result<RoundingReport> {
    let count = column_count(r, eps)?;
    let selected = if count >= sol.n() {
        (0..sol.n()).collect()
    } else {
        column_select(sol, r, eps)?
    };
    let gamma = projection_gamma(sol, &selected)?;
    let best_cut = threshold_round(g, sol, &selected, seed)?;
    Ok(RoundingReport {
        bound: gs_bound(sol.objective, gamma),
        sparsity: best_cut.sparsity,
        selected,
        gamma,
        best_cut,
        seed,
    })
}

/// Rounding with the conditionals of a Lasserre table: for each labeling `f`
/// of `set` with positive mass, sweep `⟨x_S(f), x_u⟩ / ‖x_S(f)‖²`. The best
/// labeling is kept rather than a sampled one.
pub fn threshold_round_lasserre(
    g: &Graph,
    las: &LasserreSolution,
    set: &[usize],
) -> Result<CutResult> {
    let n = g.n();
    if las.n != n {
        return Err(Error::Dimension(format!(
            "table has {} vertices, graph {n}",
            las.n
        )));
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() > las.r + 1 {
        return Err(Error::OutOfRange(format!(
            "|S| = {} exceeds the table level {}",
            sorted.len(),
            las.r + 1
        )));
    }
    let k = sorted.len();
    let mut best: Option<CutResult> = None;
    for bits in 0..(1u32 << k) {
        let labels: Vec<u8> = (0..k).map(|i| ((bits >> (k - 1 - i)) & 1) as u8).collect();
        let key = las
            .key_index(&sorted, &labels)
            .ok_or_else(|| Error::OutOfRange(format!("no key for {sorted:?}")))?;
        let p = las.inner(key, key);
        if p <= 1e-12 {
            continue;
        }
        let values: Vec<f64> = (0..n)
            .map(|u| las.inner(key, las.singleton(u)) / p)
            .collect();
        if let Some(c) = sweep_cut(g, &values) {
            keep_better(n, &mut best, c);
        }
    }
    let best = best.ok_or_else(|| Error::Degenerate("every conditional is constant".into()))?;
    let cut = g.cut_quality(&best.set)?;
    let sol = las.singleton_solution(g)?;
    let gamma = projection_gamma(&sol, &sorted)?;
    check_gs_contract(&cut, sol.objective, gamma, &sorted)?;
    Ok(cut)
}

/// Lower bound on the Laplacian spectrum: `tr(YZ)/λ_{r+1}(Z)` against the
/// tail `Σ_{i>r} σ_i(Y)`. Returns `(tail, bound)`.
pub fn trace_min_check(y: &Matrix, z: &Matrix, r: usize) -> Result<(f64, f64)> {
    if !y.is_square() || y.rows() != z.rows() || !z.is_square() {
        return Err(Error::Dimension(
            "Y and Z must be square of equal size".into(),
        ));
    }
    let n = y.rows();
    if r >= n {
        return Err(Error::OutOfRange(format!("r = {r} must be below n = {n}")));
    }
    let ey = eigenvalues(y)?;
    let ez = eigenvalues(z)?;
    for (name, e) in [("Y", &ey), ("Z", &ez)] {
        let top = e.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        if e[0] < -1e-9 * top.max(1.0) {
            return Err(Error::OutOfRange(format!(
                "{name} is not PSD (λ_min = {:e})",
                e[0]
            )));
        }
    }
    let lam = ez[r];
    if lam <= 1e-12 {
        return Err(Error::Degenerate(format!("λ_{}(Z) = {lam:e}", r + 1)));
    }
    let tail: f64 = ey[..n - r].iter().map(|v| v.max(0.0)).sum();
    let bound = y.trace_product(z) / lam;
    if tail > bound + CONTRACT_TOL {
        return Err(Error::ContractViolation(format!(
            "eigenvalue tail {tail} exceeds tr(YZ)/λ = {bound}"
        )));
    }
    Ok((tail, bound))
}

fn relative_tail(sol: &VectorSolution, r: usize) -> Result<f64> {
    let k = sol.gram();
    let total = k.trace();
    if total <= 0.0 {
        return Err(Error::Degenerate("all vectors are zero".into()));
    }
    Ok(sum_tail_descending(&k, r)?.max(0.0) / total)
}

/// `φ_SDP/λ_{r+1}(G)`, after checking that it dominates the relative
/// eigenvalue tail of `XᵀX`.
pub fn tail_bound_via_graph(sol: &VectorSolution, g: &Graph, r: usize) -> Result<f64> {
    let n = g.n();
    if r >= n {
        return Err(Error::OutOfRange(format!("r = {r} must be below n = {n}")));
    }
    let lam = eigenvalues(&g.laplacian())?[r];
    if lam <= 1e-9 {
        return Err(Error::Degenerate(format!("λ_{}(G) = {lam:e}", r + 1)));
    }
    let value = sol.objective / lam;
    let tail = relative_tail(sol, r)?;
    if tail > value + CONTRACT_TOL {
        return Err(Error::ContractViolation(format!(
            "relative tail {tail} exceeds φ_SDP/λ_{} = {value}",
            r + 1
        )));
    }
    Ok(value)
}

/// `φ_SDP/λ_{r+1}(L(F))` for a flow routed in `g`, checking both the tail
/// inequality and `tr(XᵀX·L(F)) ≤ tr(XᵀX·L(G))`.
pub fn tail_bound_via_flow(
    sol: &VectorSolution,
    flow: &MultiFlow,
    g: &Graph,
    r: usize,
) -> Result<f64> {
    let n = g.n();
    if flow.n != n || sol.n() != n {
        return Err(Error::Dimension(
            "flow, solution and graph sizes differ".into(),
        ));
    }
    if r >= n {
        return Err(Error::OutOfRange(format!("r = {r} must be below n = {n}")));
    }
    if let Some(e) = verify_capacity(flow, g)?.worst {
        return Err(Error::InvalidFlow(format!(
            "edge ({}, {}) carries {} > capacity {}",
            e.u, e.v, e.load, e.capacity
        )));
    }
    let lf = flow.laplacian();
    let lam = eigenvalues(&lf)?[r];
    if lam <= 1e-9 {
        return Err(Error::Degenerate(format!("λ_{}(L(F)) = {lam:e}", r + 1)));
    }
    let k = sol.gram();
    let via_flow = k.trace_product(&lf);
    let via_graph = k.trace_product(&g.laplacian());
    if via_flow > via_graph + CONTRACT_TOL * (1.0 + via_graph.abs()) {
        return Err(Error::ContractViolation(format!(
            "tr(XᵀX·L(F)) = {via_flow} exceeds tr(XᵀX·L(G)) = {via_graph}"
        )));
    }
    let value = sol.objective / lam;
    let tail = relative_tail(sol, r)?;
    if tail > value + CONTRACT_TOL {
        return Err(Error::ContractViolation(format!(
            "relative tail {tail} exceeds φ_SDP/λ_{}(F) = {value}",
            r + 1
        )));
    }
    Ok(value)
}
