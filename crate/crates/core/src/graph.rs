//! Weighted undirected graphs, cut measures and Laplacians.
//!
//! Graphs are stored densely; every quantity here is computed from scratch so
//! the other modules can use it as ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Symmetric nonnegative edge-weight matrix with cached weighted degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    weights: Vec<f64>,
    degrees: Vec<f64>,
}

/// Result of [`Graph::normalize_regular`].
#[derive(Debug, Clone)]
pub struct Normalized {
    pub graph: Graph,
    /// Whether the input already had equal degrees (scaling was uniform).
    pub was_regular: bool,
}

/// A vertex set together with its cut weight, sparsity and expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutResult {
    pub set: Vec<usize>,
    pub cut_weight: f64,
    pub sparsity: f64,
    pub expansion: f64,
}

impl CutResult {
    pub fn size(&self) -> usize {
        self.set.len()
    }
}

/// On-disk graph format: `{"n": int, "edges": [[u, v, w], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

const REGULAR_TOL: f64 = 1e-12;

impl Graph {
    /// Builds a graph from an undirected edge list. Duplicated pairs,
    /// self-loops, out-of-range endpoints and negative or non-finite weights
    /// are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut weights = vec![0.0; n * n];
        let mut seen = vec![false; n * n];
        for (k, &(u, v, w)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {k} ({u}, {v}) has an endpoint outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!(
                    "edge {k} is a self-loop at {u}"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "edge {k} has invalid weight {w}"
                )));
            }
            if seen[u * n + v] {
                return Err(Error::InvalidGraph(format!(
                    "edge {k} duplicates pair ({u}, {v})"
                )));
            }
            seen[u * n + v] = true;
            seen[v * n + u] = true;
            weights[u * n + v] = w;
            weights[v * n + u] = w;
        }
        Ok(Self::from_raw(n, weights))
    }

    /// Builds a graph from a dense weight matrix.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidGraph("weight matrix is not square".into()));
        }
        let n = m.rows();
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(Error::InvalidGraph(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let w = m[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidGraph(format!("invalid weight at ({i}, {j})")));
                }
                if (w - m[(j, i)]).abs() > 1e-12 * (1.0 + w.abs()) {
                    return Err(Error::InvalidGraph(format!(
                        "asymmetric weight at ({i}, {j})"
                    )));
                }
            }
        }
        let mut weights = m.as_slice().to_vec();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = 0.5 * (weights[i * n + j] + weights[j * n + i]);
                weights[i * n + j] = w;
                weights[j * n + i] = w;
            }
        }
        Ok(Self::from_raw(n, weights))
    }

    pub(crate) fn from_raw(n: usize, weights: Vec<f64>) -> Self {
        let degrees = (0..n)
            .map(|i| weights[i * n..(i + 1) * n].iter().sum())
            .collect();
        Self {
            n,
            weights,
            degrees,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Subgraph induced by `verts`, relabeled `0..verts.len()` in the given order.
    pub fn induced(&self, verts: &[usize]) -> Graph {
        let m = verts.len();
        let mut w = vec![0.0; m * m];
        for (a, &u) in verts.iter().enumerate() {
            for (b, &v) in verts.iter().enumerate() {
                if a != b {
                    w[a * m + b] = self.weight(u, v);
                }
            }
        }
        Graph::from_raw(m, w)
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    /// Edges with positive weight as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                let w = self.weight(u, v);
                if w > 0.0 {
                    out.push((u, v, w));
                }
            }
        }
        out
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(j, &w)| (j, w))
    }

    pub fn total_weight(&self) -> f64 {
        self.degrees.iter().sum::<f64>() / 2.0
    }

    pub fn is_regular(&self) -> bool {
        let first = match self.degrees.first() {
            Some(&d) => d,
            None => return true,
        };
        self.degrees
            .iter()
            .all(|&d| (d - first).abs() <= REGULAR_TOL * first.abs().max(1.0))
    }

    pub fn adjacency(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self.weight(i, j);
            }
        }
        m
    }

    /// Rescales to unit degree. Each weight becomes
    /// `(w_ij / d_i + w_ij / d_j) / 2`; on a regular input this is the exact
    /// uniform scaling by `1 / d`, otherwise degrees are only approximately 1.
    pub fn normalize_regular(&self) -> Result<Normalized> {
        if let Some(i) = self.degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::IsolatedVertex(i));
        }
        let was_regular = self.is_regular();
        let n = self.n;
        let mut weights = vec![0.0; n * n];
        if was_regular {
            let d = self.degrees[0];
            for (dst, &w) in weights.iter_mut().zip(&self.weights) {
                *dst = w / d;
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    let w = self.weight(i, j);
                    if w > 0.0 {
                        weights[i * n + j] = 0.5 * (w / self.degrees[i] + w / self.degrees[j]);
                    }
                }
            }
        }
        Ok(Normalized {
            graph: Self::from_raw(n, weights),
            was_regular,
        })
    }

    pub fn cut_weight_mask(&self, inside: &[bool]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            if !inside[i] {
                continue;
            }
            let row = self.row(i);
            for j in 0..self.n {
                if !inside[j] {
                    total += row[j];
                }
            }
        }
        total
    }

    /// `E(S, V∖S)`.
    pub fn cut_weight(&self, set: &[usize]) -> f64 {
        self.cut_weight_mask(&mask(self.n, set))
    }

    /// Cut weight, sparsity `n·E/(|S|(n−|S|))` and expansion `E/min(|S|, n−|S|)`.
    pub fn cut_quality(&self, set: &[usize]) -> Result<CutResult> {
        if let Some(&v) = set.iter().find(|&&v| v >= self.n) {
            return Err(Error::OutOfRange(format!("vertex {v} ≥ n = {}", self.n)));
        }
        let inside = mask(self.n, set);
        let size = inside.iter().filter(|&&b| b).count();
        if size == 0 || size == self.n {
            return Err(Error::TrivialSet { size, n: self.n });
        }
        let cut = self.cut_weight_mask(&inside);
        Ok(cut_result(self.n, members(&inside), cut))
    }

    /// `L = D − A`.
    pub fn laplacian(&self) -> Matrix {
        let n = self.n;
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                l[(i, j)] = if i == j {
                    self.degrees[i]
                } else {
                    -self.weight(i, j)
                };
            }
        }
        l
    }

    /// `D^{-1/2} L D^{-1/2}`.
    pub fn normalized_laplacian(&self) -> Result<Matrix> {
        if let Some(i) = self.degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::IsolatedVertex(i));
        }
        let n = self.n;
        let inv: Vec<f64> = self.degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
        let l = self.laplacian();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = l[(i, j)] * inv[i] * inv[j];
            }
        }
        Ok(out)
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.n];
        let mut comps = Vec::new();
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut stack = vec![s];
            label[s] = id;
            let mut members = Vec::new();
            while let Some(u) = stack.pop() {
                members.push(u);
                for (v, _) in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = id;
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n,
            edges: self.edges(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        for (k, &(u, v, _)) in json.edges.iter().enumerate() {
            if u >= v && u < json.n && v < json.n && u != v {
                return Err(Error::InvalidGraph(format!(
                    "edge {k} ({u}, {v}) must be listed with u < v"
                )));
            }
        }
        Self::from_edges(json.n, &json.edges)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let json: GraphJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&json)
    }
}

/// Builds a `CutResult` from a sorted member list and its cut weight.
pub(crate) fn cut_result(n: usize, set: Vec<usize>, cut: f64) -> CutResult {
    let s = set.len() as f64;
    let nf = n as f64;
    let cut = cut.max(0.0);
    CutResult {
        sparsity: nf * cut / (s * (nf - s)),
        expansion: cut / s.min(nf - s),
        cut_weight: cut,
        set,
    }
}

pub fn mask(n: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in set {
        m[v] = true;
    }
    m
}

pub fn members(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i)
        .collect()
}

pub fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    let m = mask(n, set);
    (0..n).filter(|&i| !m[i]).collect()
}

/// The side of the cut `(set, V∖set)` that is smaller, or contains vertex 0
/// when both sides have equal size.
pub fn canonical_side(n: usize, set: &[usize]) -> Vec<usize> {
    let mut s: Vec<usize> = set.to_vec();
    s.sort_unstable();
    s.dedup();
    let other = complement(n, &s);
    if other.len() < s.len() || (other.len() == s.len() && other.first() == Some(&0)) {
        other
    } else {
        s
    }
}

/// Whether two vertex sets describe the same cut (possibly as complements).
pub fn same_cut(n: usize, a: &[usize], b: &[usize]) -> bool {
    canonical_side(n, a) == canonical_side(n, b)
}

/// Whether `a` beats `b`: lower sparsity (beyond `1e-12`), then the smaller
/// canonical side, then the lexicographically smaller one.
pub fn better_cut(n: usize, a: &CutResult, b: &CutResult) -> bool {
    if a.sparsity < b.sparsity - 1e-12 {
        return true;
    }
    if a.sparsity > b.sparsity + 1e-12 {
        return false;
    }
    let (ca, cb) = (canonical_side(n, &a.set), canonical_side(n, &b.set));
    (ca.len(), &ca) < (cb.len(), &cb)
}

/// Keeps the better of `best` and `cand`.
pub fn keep_better(n: usize, best: &mut Option<CutResult>, cand: CutResult) {
    if best.as_ref().map_or(true, |b| better_cut(n, &cand, b)) {
        *best = Some(cand);
    }
}

/// Best threshold cut `{u : values[u] ≤ t}` over every gap between distinct
/// sorted values; `None` when all values coincide. The set is reported as its
/// canonical side.
pub fn sweep_cut(g: &Graph, values: &[f64]) -> Option<CutResult> {
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut inner = vec![0.0; n];
    let mut cut = 0.0;
    let mut best: Option<CutResult> = None;
    for (k, &v) in order.iter().enumerate().take(n.saturating_sub(1)) {
        cut += g.degree(v) - 2.0 * inner[v];
        for (u, w) in g.row(v).iter().enumerate() {
            inner[u] += w;
        }
        if values[order[k + 1]] - values[v] <= 1e-12 * (1.0 + values[v].abs()) {
            continue;
        }
        let mut set: Vec<usize> = order[..=k].to_vec();
        set.sort_unstable();
        let side = canonical_side(n, &set);
        let cand = cut_result(n, side, cut);
        keep_better(n, &mut best, cand);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::linalg::eigenvalues;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn k4_normalizes_to_one_third() {
        let norm = generators::complete(4).normalize_regular().unwrap();
        assert!(norm.was_regular);
        for (_, _, w) in norm.graph.edges() {
            assert!((w - 1.0 / 3.0).abs() < TOL);
        }
        assert!(norm.graph.degrees().iter().all(|d| (d - 1.0).abs() < TOL));
    }

    #[test]
    fn degree_one_graph_is_unchanged() {
        let g = generators::cycle(5).normalize_regular().unwrap().graph;
        let again = g.normalize_regular().unwrap();
        assert!(again.was_regular);
        assert_eq!(again.graph, g);
    }

    #[test]
    fn star_averaging() {
        let star = Graph::from_edges(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]).unwrap();
        let norm = star.normalize_regular().unwrap();
        assert!(!norm.was_regular);
        for (_, _, w) in norm.graph.edges() {
            assert!((w - 2.0 / 3.0).abs() < TOL);
        }
        assert!((norm.graph.degree(0) - 2.0).abs() < TOL);
        for leaf in 1..4 {
            assert!((norm.graph.degree(leaf) - 2.0 / 3.0).abs() < TOL);
        }
    }

    #[test]
    fn isolated_vertex_is_named() {
        let g = Graph::from_edges(3, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            g.normalize_regular(),
            Err(Error::IsolatedVertex(2))
        ));
        assert!(matches!(
            g.normalized_laplacian(),
            Err(Error::IsolatedVertex(2))
        ));
    }

    #[test]
    fn cut_weights() {
        let k4 = generators::complete(4).normalize_regular().unwrap().graph;
        assert!((k4.cut_weight(&[2]) - 1.0).abs() < TOL);
        assert_eq!(k4.cut_weight(&[]), 0.0);
        let c4 = generators::cycle(4).normalize_regular().unwrap().graph;
        assert!((c4.cut_weight(&[0, 1]) - 1.0).abs() < TOL);
    }

    #[test]
    fn cut_quality_examples() {
        let k4 = generators::complete(4).normalize_regular().unwrap().graph;
        let one = k4.cut_quality(&[0]).unwrap();
        assert!((one.sparsity - 4.0 / 3.0).abs() < TOL);
        assert!((one.expansion - 1.0).abs() < TOL);
        let two = k4.cut_quality(&[0, 3]).unwrap();
        assert!((two.sparsity - 4.0 / 3.0).abs() < TOL);
        assert!((two.expansion - 2.0 / 3.0).abs() < TOL);
        let c4 = generators::cycle(4).normalize_regular().unwrap().graph;
        let adj = c4.cut_quality(&[1, 2]).unwrap();
        assert!((adj.sparsity - 1.0).abs() < TOL);
        assert!((adj.expansion - 0.5).abs() < TOL);
        assert!(matches!(c4.cut_quality(&[]), Err(Error::TrivialSet { .. })));
        assert!(matches!(
            c4.cut_quality(&[0, 1, 2, 3]),
            Err(Error::TrivialSet { .. })
        ));
        assert!(matches!(c4.cut_quality(&[9]), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn laplacians() {
        let k2 = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(
            k2.laplacian().to_rows(),
            vec![vec![1.0, -1.0], vec![-1.0, 1.0]]
        );
        let c4 = generators::cycle(4).normalize_regular().unwrap().graph;
        let l = c4.laplacian();
        let nl = c4.normalized_laplacian().unwrap();
        assert!(l.sub(&nl).frobenius_norm() < TOL);
        let ev = eigenvalues(&l).unwrap();
        for (a, b) in ev.iter().zip([0.0, 1.0, 1.0, 2.0]) {
            assert!((a - b).abs() < TOL);
        }
    }

    #[test]
    fn loader_rejections() {
        assert!(Graph::from_edges(3, &[(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        assert!(Graph::from_edges(3, &[(1, 1, 1.0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 3, 1.0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 1, -1.0)]).is_err());
        assert!(Graph::from_json_str(r#"{"n": 3, "edges": [[2, 1, 1.0]]}"#).is_err());
        assert!(Graph::from_json_str(r#"{"n": 3, "edges": [[0, 1, 1.0], [0, 1, 0.5]]}"#).is_err());
        let g = Graph::from_json_str(r#"{"n": 3, "edges": [[0, 1, 0.5], [1, 2, 1.5]]}"#).unwrap();
        assert_eq!(g.degree(1), 2.0);
        let err = Graph::from_json_str(r#"{"n": 3, "edges": [[0, 1, 0.5],, ]}"#).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    fn random_graph() -> impl Strategy<Value = Graph> {
        (2usize..10, proptest::collection::vec(0.0f64..2.0, 45)).prop_map(|(n, ws)| {
            let mut edges = Vec::new();
            let mut k = 0;
            for u in 0..n {
                for v in (u + 1)..n {
                    if ws[k] > 0.7 {
                        edges.push((u, v, ws[k]));
                    }
                    k += 1;
                }
            }
            Graph::from_edges(n, &edges).unwrap()
        })
    }

    proptest! {
        #[test]
        fn cut_invariants(g in random_graph(), bits in proptest::collection::vec(any::<bool>(), 10)) {
            let n = g.n();
            let set: Vec<usize> = (0..n).filter(|&i| bits[i]).collect();
            prop_assert!((g.cut_weight(&set) - g.cut_weight(&complement(n, &set))).abs() < TOL);
            if !set.is_empty() && set.len() < n {
                let c = g.cut_quality(&set).unwrap();
                prop_assert!(c.expansion <= c.sparsity + TOL);
                prop_assert!(c.sparsity <= 2.0 * c.expansion + TOL);
                // indicator Rayleigh quotient
                let x: Vec<f64> = (0..n).map(|i| if bits[i] { 1.0 } else { 0.0 }).collect();
                let l = g.laplacian();
                let mut q = 0.0;
                for i in 0..n { for j in 0..n { q += x[i] * l[(i, j)] * x[j]; } }
                prop_assert!((q - c.cut_weight).abs() < TOL);
                if 2 * set.len() <= n {
                    prop_assert!((q / set.len() as f64 - c.expansion).abs() < TOL);
                }
            }
            let ev = eigenvalues(&g.laplacian()).unwrap();
            prop_assert!(ev.iter().all(|&v| v >= -1e-9));
            let l = g.laplacian();
            for i in 0..n {
                let s: f64 = (0..n).map(|j| l[(i, j)]).sum();
                prop_assert!(s.abs() < TOL);
            }
        }
    }
}
