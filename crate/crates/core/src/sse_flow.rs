//! Path-based multicommodity flows, the small-set-expander flow predicates,
//! the weak→SSE and combinatorial→spectral conversions, and construction of
//! spectral flows by Frank–Wolfe over a finite path basis.

use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CutResult, Graph};
use crate::linalg::{eigenvalues, eigh, sum_smallest, Matrix};
use crate::lp::{max_flow, solve_lp, FlowNetwork, LpOutcome, LpProblem, Relation, FLOW_EPS};
use crate::oracle::{self, mask_members};

const LOAD_TOL: f64 = 1e-9;
const CERT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowPath {
    pub verts: Vec<usize>,
    pub amount: f64,
}

/// On-disk flow format: `{"paths": [{"verts": [...], "amount": x}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowJson {
    pub paths: Vec<FlowPath>,
}

/// A multicommodity flow given by its paths. Demands, degrees and the demand
/// Laplacian are derived from the path endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiFlow {
    pub n: usize,
    pub paths: Vec<FlowPath>,
}

impl MultiFlow {
    pub fn new(n: usize, paths: Vec<FlowPath>) -> Result<Self> {
        for (k, p) in paths.iter().enumerate() {
            if !(p.amount.is_finite() && p.amount >= 0.0) {
                return Err(Error::InvalidFlow(format!(
                    "path {k} has amount {}",
                    p.amount
                )));
            }
            if p.verts.len() < 2 {
                return Err(Error::InvalidFlow(format!(
                    "path {k} has fewer than two vertices"
                )));
            }
            if let Some(&v) = p.verts.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidFlow(format!(
                    "path {k} visits vertex {v} ≥ n = {n}"
                )));
            }
            if p.verts.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidFlow(format!(
                    "path {k} repeats a vertex in place"
                )));
            }
            if p.verts.first() == p.verts.last() {
                return Err(Error::InvalidFlow(format!(
                    "path {k} starts and ends at one vertex"
                )));
            }
        }
        Ok(Self { n, paths })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            paths: Vec::new(),
        }
    }

    /// Every edge of `g` as a one-hop path carrying its capacity.
    pub fn from_graph(g: &Graph) -> Self {
        let paths = g
            .edges()
            .into_iter()
            .map(|(u, v, w)| FlowPath {
                verts: vec![u, v],
                amount: w,
            })
            .collect();
        Self { n: g.n(), paths }
    }

    /// Symmetric demand matrix `δ_ij`.
    pub fn demands(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for p in &self.paths {
            let (i, j) = (p.verts[0], *p.verts.last().unwrap());
            m[(i, j)] += p.amount;
            m[(j, i)] += p.amount;
        }
        m
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for p in &self.paths {
            d[p.verts[0]] += p.amount;
            d[*p.verts.last().unwrap()] += p.amount;
        }
        d
    }

    /// Laplacian of the demand graph.
    pub fn laplacian(&self) -> Matrix {
        let mut l = self.demands().scale(-1.0);
        for (i, d) in self.degrees().into_iter().enumerate() {
            l[(i, i)] += d;
        }
        l
    }

    pub fn demand_graph(&self) -> Graph {
        Graph::from_matrix(&self.demands()).expect("demands are symmetric and nonnegative")
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            paths: self
                .paths
                .iter()
                .map(|p| FlowPath {
                    verts: p.verts.clone(),
                    amount: p.amount * s,
                })
                .collect(),
        }
    }

    /// `a·self + b·other`, keeping every path of both.
    pub fn combine(&self, a: f64, other: &MultiFlow, b: f64) -> Self {
        let mut out = self.scaled(a);
        out.paths.extend(other.scaled(b).paths);
        out.paths.retain(|p| p.amount > 0.0);
        out
    }

    /// Total amount routed through each vertex pair `(u, v)`, `u < v`.
    pub fn edge_loads(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for p in &self.paths {
            for w in p.verts.windows(2) {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                m[(a, b)] += p.amount;
            }
        }
        m
    }

    pub fn to_json(&self) -> FlowJson {
        FlowJson {
            paths: self.paths.clone(),
        }
    }

    pub fn from_json(n: usize, json: &FlowJson) -> Result<Self> {
        Self::new(n, json.paths.clone())
    }

    pub fn from_json_str(n: usize, s: &str) -> Result<Self> {
        let json: FlowJson = serde_json::from_str(s).map_err(|e| {
            Error::Parse(format!(
                "flow JSON at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        Self::from_json(n, &json)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeLoad {
    pub u: usize,
    pub v: usize,
    pub load: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub passed: bool,
    /// Edge with the largest excess load, when some edge is over capacity.
    pub worst: Option<EdgeLoad>,
}

/// Checks `Σ_{p∋e} f_p ≤ c_e + 1e-9` for every edge. Paths through a
/// non-edge are an error.
pub fn verify_capacity(flow: &MultiFlow, g: &Graph) -> Result<CapacityReport> {
    if flow.n != g.n() {
        return Err(Error::Dimension(format!(
            "flow on {} vertices, graph {}",
            flow.n,
            g.n()
        )));
    }
    for (k, p) in flow.paths.iter().enumerate() {
        if let Some(w) = p.verts.windows(2).find(|w| g.weight(w[0], w[1]) <= 0.0) {
            return Err(Error::InvalidFlow(format!(
                "path {k} uses ({}, {}), which is not an edge",
                w[0], w[1]
            )));
        }
    }
    let loads = flow.edge_loads();
    let mut worst: Option<EdgeLoad> = None;
    for u in 0..g.n() {
        for v in (u + 1)..g.n() {
            let load = loads[(u, v)];
            let capacity = g.weight(u, v);
            let excess = load - capacity;
            if excess > LOAD_TOL
                && worst
                    .as_ref()
                    .map_or(true, |w| excess > w.load - w.capacity)
            {
                worst = Some(EdgeLoad {
                    u,
                    v,
                    load,
                    capacity,
                });
            }
        }
    }
    Ok(CapacityReport {
        passed: worst.is_none(),
        worst,
    })
}

/// A set with its crossing demand and flow expansion `crossing / (d|S|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowWitness {
    pub set: Vec<usize>,
    pub crossing: f64,
    pub expansion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SseReport {
    pub passed: bool,
    pub max_degree: f64,
    /// First vertex with degree above `d`, if any.
    pub degree_violation: Option<usize>,
    /// Minimum flow expansion over the checked size range, with its set.
    pub minimum: FlowWitness,
    /// The minimizing set when it falls short of `β`.
    pub witness: Option<FlowWitness>,
}

/// Minimum of `crossing/(d|S|)` over `lo ≤ |S| ≤ hi` on a demand graph, by
/// exhaustive enumeration. Ties go to the smaller set, then lexicographic.
fn min_flow_expansion(demand: &Graph, d: f64, lo: usize, hi: usize) -> Result<FlowWitness> {
    if demand.n() > oracle::MAX_N {
        return Err(Error::TooLarge {
            n: demand.n(),
            max: oracle::MAX_N,
        });
    }
    let mut best: Option<(f64, usize, u32, f64)> = None;
    oracle::enumerate(demand, |mask, size, cut| {
        if size < lo || size > hi {
            return;
        }
        let e = cut / (d * size as f64);
        let better = match best {
            None => true,
            Some((be, bs, bm, _)) => {
                if e < be - 1e-12 {
                    true
                } else if e > be + 1e-12 {
                    false
                } else if size != bs {
                    size < bs
                } else {
                    mask_members(mask) < mask_members(bm)
                }
            }
        };
        if better {
            best = Some((e, size, mask, cut));
        }
    });
    let (_, _, mask, _) =
        best.ok_or_else(|| Error::OutOfRange(format!("empty size range [{lo}, {hi}]")))?;
    let set = mask_members(mask);
    let crossing = demand.cut_weight(&set);
    Ok(FlowWitness {
        expansion: crossing / (d * set.len() as f64),
        set,
        crossing,
    })
}

fn check_params(r: usize, d: f64) -> Result<()> {
    if r == 0 {
        return Err(Error::OutOfRange("r must be positive".into()));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::OutOfRange(format!("d = {d} must be positive")));
    }
    Ok(())
}

fn sse_report(flow: &MultiFlow, d: f64, beta: f64, lo: usize, hi: usize) -> Result<SseReport> {
    let degrees = flow.degrees();
    let max_degree = degrees.iter().cloned().fold(0.0, f64::max);
    let degree_violation = degrees.iter().position(|&x| x > d + LOAD_TOL);
    let minimum = min_flow_expansion(&flow.demand_graph(), d, lo, hi)?;
    let short = minimum.crossing < beta * d * minimum.set.len() as f64 - LOAD_TOL;
    Ok(SseReport {
        passed: degree_violation.is_none() && !short,
        max_degree,
        degree_violation,
        witness: short.then(|| minimum.clone()),
        minimum,
    })
}

/// `(r, d, β)`-SSE check: degrees at most `d` and every set of size at most
/// `n/r` has crossing demand at least `βd|S|`. Exhaustive, so `n ≤ 24`.
pub fn verify_sse(flow: &MultiFlow, r: usize, d: f64, beta: f64) -> Result<SseReport> {
    check_params(r, d)?;
    let hi = flow.n / r;
    sse_report(flow, d, beta, 1, hi.min(flow.n.saturating_sub(1)))
}

/// Weak variant: only sets with `n/3r ≤ |S| ≤ n/r`.
pub fn verify_weak_sse(flow: &MultiFlow, r: usize, d: f64, beta: f64) -> Result<SseReport> {
    check_params(r, d)?;
    let (lo, hi) = weak_range(flow.n, r);
    sse_report(flow, d, beta, lo, hi.min(flow.n.saturating_sub(1)))
}

/// `[⌈n/3r⌉, ⌊n/r⌋]`.
fn weak_range(n: usize, r: usize) -> (usize, usize) {
    let lo = ((n as f64 / (3.0 * r as f64)) - 1e-9).ceil().max(1.0) as usize;
    (lo, n / r)
}

/// `(r, d, λ)` claim about a flow together with the measured `λ_r(L(F))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCertificate {
    pub r: usize,
    pub d: f64,
    pub lambda: f64,
    pub lambda_measured: f64,
    pub degrees: Vec<f64>,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowJson>,
}

impl SpectralCertificate {
    /// Recomputes validity from the recorded numbers.
    pub fn holds(&self) -> bool {
        self.degrees
            .iter()
            .all(|&x| x >= self.d / 2.0 - CERT_TOL && x <= self.d + CERT_TOL)
            && self.lambda_measured >= self.d * self.lambda - CERT_TOL
    }
}

/// Measures `λ_r(L(F))` (1-based, ascending) and the degree window
/// `[d/2, d]`.
pub fn verify_spectral(
    flow: &MultiFlow,
    r: usize,
    d: f64,
    lambda: f64,
) -> Result<SpectralCertificate> {
    check_params(r, d)?;
    if r > flow.n {
        return Err(Error::OutOfRange(format!("r = {r} exceeds n = {}", flow.n)));
    }
    let values = eigenvalues(&flow.laplacian())?;
    let mut cert = SpectralCertificate {
        r,
        d,
        lambda,
        lambda_measured: values[r - 1],
        degrees: flow.degrees(),
        valid: false,
        flow: Some(flow.to_json()),
    };
    cert.valid = cert.holds();
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SseRepair {
    Flow(MultiFlow),
    SmallSet(CutResult),
}

/// Turns a weak SSE flow into an `(r, d, β/6)`-SSE flow, or finds a set of
/// size at most `n/r` whose expansion in `g` is below `dβ`.
pub fn weak_to_sse(flow: &MultiFlow, g: &Graph, r: usize, d: f64, beta: f64) -> Result<SseRepair> {
    let n = g.n();
    if flow.n != n {
        return Err(Error::Dimension(format!(
            "flow on {} vertices, graph {n}",
            flow.n
        )));
    }
    let weak = verify_weak_sse(flow, r, d, beta)?;
    if !weak.passed {
        return Err(Error::InvalidFlow(format!(
            "not a weak ({r}, {d}, {beta}) SSE flow: {:?}",
            weak.witness.map(|w| w.set)
        )));
    }
    let (lo, _) = weak_range(n, r);
    let demand = flow.demand_graph();
    // peel off small sets whose expansion in the remaining flow is below β
    let mut removed = vec![false; n];
    loop {
        let rest: Vec<usize> = (0..n).filter(|&v| !removed[v]).collect();
        if lo <= 1 || rest.len() < 2 {
            break;
        }
        let sub = demand.induced(&rest);
        let found = min_flow_expansion(&sub, d, 1, lo - 1)?;
        if found.crossing >= beta * d * found.set.len() as f64 - LOAD_TOL {
            break;
        }
        for &i in &found.set {
            removed[rest[i]] = true;
        }
    }
    let u: Vec<usize> = (0..n).filter(|&v| removed[v]).collect();
    if u.is_empty() {
        return Ok(SseRepair::Flow(flow.clone()));
    }
    if 3 * r * u.len() > n {
        return Err(Error::ContractViolation(format!(
            "removed set of size {} exceeds n/3r for a weak SSE flow",
            u.len()
        )));
    }
    // single-commodity flow from U to V∖U, dβ per terminal
    let cap = d * beta;
    let (s, t) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2, s, t);
    let mut edge_arcs = Vec::new();
    for (a, b, w) in g.edges() {
        edge_arcs.push((a, b, net.arcs.len()));
        net.add_arc(a, b, w);
        net.add_arc(b, a, w);
    }
    for v in 0..n {
        if removed[v] {
            net.add_arc(s, v, cap);
        } else {
            net.add_arc(v, t, cap);
        }
    }
    let mf = max_flow(&net)?;
    let need = cap * u.len() as f64;
    if mf.value < need - 1e-9 * (1.0 + need) {
        let q: Vec<usize> = mf.cut.iter().copied().filter(|&v| v < n).collect();
        let cut = g.cut_quality(&q)?;
        if cut.cut_weight >= cap * q.len() as f64 {
            return Err(Error::ContractViolation(format!(
                "min-cut side {q:?} has expansion {} ≥ dβ = {cap}",
                cut.cut_weight / q.len() as f64
            )));
        }
        return Ok(SseRepair::SmallSet(cut));
    }
    let f1 = decompose(n, &edge_arcs, &mf.flow, &removed);
    let out = flow.combine(0.5, &f1, 0.5);
    let check = verify_sse(&out, r, d, beta / 6.0)?;
    if !check.passed {
        return Err(Error::ContractViolation(format!(
            "repaired flow fails the (r, d, β/6) check: {:?}",
            check.witness
        )));
    }
    Ok(SseRepair::Flow(out))
}

/// Path decomposition of a single-commodity flow on the undirected edges,
/// after cancelling opposite arc flows. Paths run from vertices with surplus
/// (inside `is_source`) to vertices with deficit; leftover cycles are dropped.
fn decompose(
    n: usize,
    edge_arcs: &[(usize, usize, usize)],
    arc_flow: &[f64],
    is_source: &[bool],
) -> MultiFlow {
    let mut net = vec![vec![0.0; n]; n];
    for &(a, b, k) in edge_arcs {
        let f = arc_flow[k] - arc_flow[k + 1];
        if f > FLOW_EPS {
            net[a][b] = f;
        } else if f < -FLOW_EPS {
            net[b][a] = -f;
        }
    }
    // surplus > 0 at sources, < 0 at sinks
    let mut surplus: Vec<f64> = (0..n)
        .map(|v| net[v].iter().sum::<f64>() - (0..n).map(|u| net[u][v]).sum::<f64>())
        .collect();
    let mut paths = Vec::new();
    for src in (0..n).filter(|&v| is_source[v]) {
        while surplus[src] > FLOW_EPS {
            let mut prev = vec![usize::MAX; n];
            prev[src] = src;
            let mut q = VecDeque::from([src]);
            let mut end = None;
            while let Some(x) = q.pop_front() {
                if !is_source[x] && surplus[x] < -FLOW_EPS {
                    end = Some(x);
                    break;
                }
                for y in 0..n {
                    if net[x][y] > FLOW_EPS && prev[y] == usize::MAX {
                        prev[y] = x;
                        q.push_back(y);
                    }
                }
            }
            let Some(end) = end else { break };
            let mut verts = vec![end];
            let mut x = end;
            while x != src {
                x = prev[x];
                verts.push(x);
            }
            verts.reverse();
            let amount = verts
                .windows(2)
                .map(|w| net[w[0]][w[1]])
                .fold(surplus[src].min(-surplus[end]), f64::min);
            for w in verts.windows(2) {
                net[w[0]][w[1]] -= amount;
            }
            surplus[src] -= amount;
            surplus[end] += amount;
            paths.push(FlowPath { verts, amount });
        }
    }
    MultiFlow { n, paths }
}

/// `F₂ = F/2 + d·F₁/2` where `F₁` routes each edge's capacity over that
/// edge. On a graph with unit degrees every degree of `F₂` lands in
/// `[d/2, d]`.
pub fn comb_to_spectral(flow: &MultiFlow, g: &Graph, d: f64) -> Result<MultiFlow> {
    let n = g.n();
    if flow.n != n {
        return Err(Error::Dimension(format!(
            "flow on {} vertices, graph {n}",
            flow.n
        )));
    }
    if !(d > 0.0) {
        return Err(Error::OutOfRange(format!("d = {d} must be positive")));
    }
    if let Some(v) = flow.degrees().iter().position(|&x| x > d + LOAD_TOL) {
        return Err(Error::InvalidFlow(format!(
            "vertex {v} has degree above d = {d}"
        )));
    }
    if g.degrees().iter().any(|&x| (x - 1.0).abs() > 1e-9) {
        return Err(Error::InvalidGraph(
            "graph must be normalized to unit degrees".into(),
        ));
    }
    let out = flow.combine(0.5, &MultiFlow::from_graph(g), 0.5 * d);
    if let Some(v) = out
        .degrees()
        .iter()
        .position(|&x| x < d / 2.0 - LOAD_TOL || x > d + LOAD_TOL)
    {
        return Err(Error::ContractViolation(format!(
            "vertex {v} left the degree window"
        )));
    }
    // F/2 and d·F₁/2 each fit in half the capacity when d ≤ 1
    if d <= 1.0 + 1e-12 && verify_capacity(flow, g)?.passed && !verify_capacity(&out, g)?.passed {
        return Err(Error::ContractViolation(
            "combined flow exceeds capacity".into(),
        ));
    }
    Ok(out)
}

/// Largest flow expansion `crossing/(d|S_i|)` among pairwise disjoint sets.
pub fn disjoint_expansion_check(flow: &MultiFlow, sets: &[Vec<usize>], d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::OutOfRange(format!("d = {d} must be positive")));
    }
    let mut owner = vec![false; flow.n];
    for s in sets {
        if s.is_empty() {
            return Err(Error::OutOfRange("empty set".into()));
        }
        for &v in s {
            if v >= flow.n {
                return Err(Error::OutOfRange(format!("vertex {v} out of range")));
            }
            if owner[v] {
                return Err(Error::OutOfRange(format!("vertex {v} appears in two sets")));
            }
            owner[v] = true;
        }
    }
    let demand = flow.demand_graph();
    Ok(sets
        .iter()
        .map(|s| demand.cut_weight(s) / (d * s.len() as f64))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Shortest path from `s` to `t` on lengths `1/c_e`, avoiding banned
/// vertices and arcs.
fn dijkstra(
    g: &Graph,
    s: usize,
    t: usize,
    banned_v: &[bool],
    banned_e: &[(usize, usize)],
) -> Option<(f64, Vec<usize>)> {
    #[derive(PartialEq)]
    struct Item(f64, usize);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Item {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
        }
    }
    let n = g.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    dist[s] = 0.0;
    let mut heap = BinaryHeap::from([Item(0.0, s)]);
    while let Some(Item(dx, x)) = heap.pop() {
        if dx > dist[x] {
            continue;
        }
        if x == t {
            break;
        }
        for (y, w) in g.neighbors(x) {
            if banned_v[y] || banned_e.contains(&(x, y)) {
                continue;
            }
            let nd = dx + 1.0 / w;
            if nd < dist[y] - 1e-15 {
                dist[y] = nd;
                prev[y] = x;
                heap.push(Item(nd, y));
            }
        }
    }
    if !dist[t].is_finite() {
        return None;
    }
    let mut path = vec![t];
    let mut x = t;
    while x != s {
        x = prev[x];
        path.push(x);
    }
    path.reverse();
    Some((dist[t], path))
}

fn path_length(g: &Graph, p: &[usize]) -> f64 {
    p.windows(2).map(|w| 1.0 / g.weight(w[0], w[1])).sum()
}

/// Yen's `k` shortest simple paths from `s` to `t`.
fn k_shortest(g: &Graph, s: usize, t: usize, k: usize) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut found: Vec<Vec<usize>> = Vec::new();
    let Some((_, first)) = dijkstra(g, s, t, &vec![false; n], &[]) else {
        return found;
    };
    found.push(first);
    let mut candidates: Vec<(f64, Vec<usize>)> = Vec::new();
    while found.len() < k {
        let last = found.last().unwrap().clone();
        for i in 0..last.len() - 1 {
            let spur = last[i];
            let root = &last[..=i];
            let mut banned_e = Vec::new();
            for p in &found {
                if p.len() > i && &p[..=i] == root {
                    banned_e.push((p[i], p[i + 1]));
                }
            }
            let mut banned_v = vec![false; n];
            for &v in &root[..i] {
                banned_v[v] = true;
            }
            if let Some((_, tail)) = dijkstra(g, spur, t, &banned_v, &banned_e) {
                let mut p = root[..i].to_vec();
                p.extend(tail);
                if !found.contains(&p) && !candidates.iter().any(|c| c.1 == p) {
                    candidates.push((path_length(g, &p), p));
                }
            }
        }
        if candidates.is_empty() {
            break;
        }
        let best = (0..candidates.len())
            .min_by(|&a, &b| {
                candidates[a]
                    .0
                    .total_cmp(&candidates[b].0)
                    .then(candidates[a].1.cmp(&candidates[b].1))
            })
            .unwrap();
        found.push(candidates.swap_remove(best).1);
    }
    found
}

fn hop_diameter(g: &Graph) -> usize {
    let n = g.n();
    let mut diam = 0;
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for (y, _) in g.neighbors(x) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    q.push_back(y);
                }
            }
        }
        diam = diam.max(
            dist.into_iter()
                .filter(|&d| d != usize::MAX)
                .max()
                .unwrap_or(0),
        );
    }
    diam
}

/// Up to `k` shortest simple paths per vertex pair on lengths `1/c_e`, at
/// most `2·diameter` hops each.
pub fn path_basis(g: &Graph, k: usize) -> Vec<Vec<usize>> {
    let n = g.n();
    let limit = 2 * hop_diameter(g).max(1);
    let mut out = Vec::new();
    for s in 0..n {
        for t in (s + 1)..n {
            out.extend(
                k_shortest(g, s, t, k)
                    .into_iter()
                    .filter(|p| p.len() - 1 <= limit),
            );
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ConstructOptions {
    pub iterations: usize,
    pub paths_per_pair: usize,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        Self {
            iterations: 300,
            paths_per_pair: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralConstruction {
    pub flow: MultiFlow,
    /// `(2r, d, λ_{2r}/d)` certificate of the returned flow.
    pub certificate: SpectralCertificate,
    /// `Σ_{i ≤ 2r} λ_i(L(F))` at the returned flow.
    pub objective: f64,
    /// Objective after every Frank–Wolfe iteration, starting point first.
    pub history: Vec<f64>,
}

struct Basis<'a> {
    paths: &'a [Vec<usize>],
    n: usize,
}

impl Basis<'_> {
    fn flow(&self, f: &[f64]) -> MultiFlow {
        MultiFlow {
            n: self.n,
            paths: self
                .paths
                .iter()
                .zip(f)
                .filter(|(_, &a)| a > 0.0)
                .map(|(p, &a)| FlowPath {
                    verts: p.clone(),
                    amount: a,
                })
                .collect(),
        }
    }

    fn laplacian(&self, f: &[f64]) -> Matrix {
        let mut l = Matrix::zeros(self.n, self.n);
        for (p, &a) in self.paths.iter().zip(f) {
            let (i, j) = (p[0], *p.last().unwrap());
            l[(i, i)] += a;
            l[(j, j)] += a;
            l[(i, j)] -= a;
            l[(j, i)] -= a;
        }
        l
    }
}

/// Supergradient of `Σ_{i≤k} λ_i(L)` with respect to each path amount.
/// Eigenvalues tied with `λ_k` (within `1e-8`) share the boundary weight.
fn supergradient(basis: &Basis, f: &[f64], k: usize) -> Result<Vec<f64>> {
    let eig = eigh(&basis.laplacian(f))?;
    let b = eig.values[k - 1];
    let tol = 1e-8 * b.abs().max(1.0);
    let cluster: Vec<usize> = (0..basis.n)
        .filter(|&i| (eig.values[i] - b).abs() <= tol)
        .collect();
    let inside = cluster.iter().filter(|&&i| i < k).count() as f64;
    let weights: Vec<f64> = (0..basis.n)
        .map(|i| {
            if cluster.contains(&i) {
                inside / cluster.len() as f64
            } else if i < k {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(basis
        .paths
        .iter()
        .map(|p| {
            let (i, j) = (p[0], *p.last().unwrap());
            (0..basis.n)
                .filter(|&c| weights[c] > 0.0)
                .map(|c| {
                    let diff = eig.vectors[(i, c)] - eig.vectors[(j, c)];
                    weights[c] * diff * diff
                })
                .sum()
        })
        .collect())
}

/// Maximizes the sum of the `2r` smallest Laplacian eigenvalues of a flow
/// routed in `g` with every degree in `[d/2, d]`, by Frank–Wolfe over the
/// path basis with exact line search. The objective never decreases.
pub fn construct_spectral_flow(
    g: &Graph,
    r: usize,
    d: f64,
    opts: &ConstructOptions,
) -> Result<SpectralConstruction> {
    let n = g.n();
    check_params(r, d)?;
    let k = 2 * r;
    if k > n {
        return Err(Error::OutOfRange(format!("2r = {k} exceeds n = {n}")));
    }
    if g.components().len() > 1 {
        return Err(Error::InvalidGraph("graph must be connected".into()));
    }
    let paths = path_basis(g, opts.paths_per_pair.max(1));
    if paths.is_empty() {
        return Err(Error::Degenerate("path basis is empty".into()));
    }
    let basis = Basis { paths: &paths, n };
    let m = paths.len();
    let mut lp = LpProblem::new(vec![0.0; m]);
    for v in 0..n {
        let row: Vec<f64> = paths
            .iter()
            .map(|p| (p[0] == v) as u8 as f64 + (*p.last().unwrap() == v) as u8 as f64)
            .collect();
        lp.add(row.clone(), Relation::Le, d);
        lp.add(row, Relation::Ge, d / 2.0);
    }
    for (u, v, w) in g.edges() {
        let row: Vec<f64> = paths
            .iter()
            .map(|p| {
                p.windows(2)
                    .filter(|e| (e[0] == u && e[1] == v) || (e[0] == v && e[1] == u))
                    .count() as f64
            })
            .collect();
        lp.add(row, Relation::Le, w);
    }
    let objective = |f: &[f64]| -> Result<f64> { sum_smallest(&basis.laplacian(f), k) };
    let mut f = match solve_lp(&lp)? {
        LpOutcome::Optimal { point, .. } => point,
        _ => {
            return Err(Error::Infeasible(format!(
                "no flow in the path basis keeps every degree in [{}, {d}]",
                d / 2.0
            )))
        }
    };
    // the scaled edge flow is a natural feasible start when it fits
    let edge_start: Vec<f64> = paths
        .iter()
        .map(|p| {
            if p.len() == 2 {
                d * g.weight(p[0], p[1])
            } else {
                0.0
            }
        })
        .collect();
    if lp.violation(&edge_start) <= LOAD_TOL && objective(&edge_start)? > objective(&f)? {
        f = edge_start;
    }
    let mut value = objective(&f)?;
    let mut history = vec![value];
    for it in 0..opts.iterations {
        let grad = supergradient(&basis, &f, k)?;
        lp.objective = grad.clone();
        let s = match solve_lp(&lp)? {
            LpOutcome::Optimal { point, .. } => point,
            _ => break,
        };
        let gap: f64 = grad
            .iter()
            .zip(s.iter().zip(&f))
            .map(|(g, (a, b))| g * (a - b))
            .sum();
        if gap <= 1e-9 {
            break;
        }
        let at = |t: f64| -> Vec<f64> { f.iter().zip(&s).map(|(a, b)| a + t * (b - a)).collect() };
        // golden-section search on the concave segment objective
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut v1 = objective(&at(x1))?;
        let mut v2 = objective(&at(x2))?;
        for _ in 0..40 {
            if v1 < v2 {
                lo = x1;
                x1 = x2;
                v1 = v2;
                x2 = lo + phi * (hi - lo);
                v2 = objective(&at(x2))?;
            } else {
                hi = x2;
                x2 = x1;
                v2 = v1;
                x1 = hi - phi * (hi - lo);
                v1 = objective(&at(x1))?;
            }
        }
        let mut best = (value, None);
        for t in [0.5 * (lo + hi), 2.0 / (it as f64 + 2.0), 1.0] {
            let p = at(t);
            let v = objective(&p)?;
            if v > best.0 {
                best = (v, Some(p));
            }
        }
        match best {
            (v, Some(p)) => {
                f = p;
                value = v;
            }
            _ => {
                history.push(value);
                break;
            }
        }
        history.push(value);
    }
    let flow = basis.flow(&f);
    let lam_k = eigenvalues(&flow.laplacian())?[k - 1];
    // Σ_{i≤2r} λ_i ≤ 2r·λ_{2r}
    if lam_k < value / k as f64 - 1e-9 {
        return Err(Error::ContractViolation(format!(
            "λ_{k} = {lam_k} is below objective/2r = {}",
            value / k as f64
        )));
    }
    let certificate = verify_spectral(&flow, k, d, lam_k / d)?;
    Ok(SpectralConstruction {
        flow,
        certificate,
        objective: value,
        history,
    })
}
