//! ℓ₂² vector solutions: the base relaxation solver, mean shift and
//! translation, and validation of externally supplied Lasserre tables.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{axpy, dist_sq, dot, eigh, norm_sq, psd_factor, Matrix};

/// One vector per vertex with the relaxation objective `Σ C_uv‖X̄_u−X̄_v‖²/ν`.
///
/// `nu` is the total squared norm of the centered vectors; it is kept when
/// the solution is translated, since distances (and so the objective) do not
/// change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorSolution {
    pub vectors: Vec<Vec<f64>>,
    pub objective: f64,
    pub mu: f64,
    pub nu: f64,
    /// Vertex moved to the origin by [`translate_to_origin`], if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<usize>,
}

/// Worst violations of the solution invariants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Feasibility {
    pub centering: f64,
    pub max_norm_sq: f64,
    pub triangle: f64,
    pub objective_gap: f64,
}

impl Feasibility {
    pub fn holds(&self, tol: f64) -> bool {
        self.centering <= tol
            && self.max_norm_sq <= 1.0 + tol
            && self.triangle <= tol
            && self.objective_gap <= tol
    }
}

impl VectorSolution {
    /// Centers `vectors` and computes `nu` and the objective on `g`.
    pub fn from_vectors(g: &Graph, vectors: Vec<Vec<f64>>, mu: f64) -> Result<Self> {
        if vectors.len() != g.n() {
            return Err(Error::Dimension(format!(
                "{} vectors for {} vertices",
                vectors.len(),
                g.n()
            )));
        }
        let vectors = mean_shift(&vectors);
        let nu: f64 = vectors.iter().map(|v| norm_sq(v)).sum();
        if nu <= 0.0 {
            return Err(Error::Degenerate("all vectors coincide".into()));
        }
        let objective = edge_energy(g, &vectors) / nu;
        Ok(Self {
            vectors,
            objective,
            mu,
            nu,
            origin: None,
        })
    }

    /// Solution of an integral cut: `x_u = 1_S(u) − |S|/n` in one dimension.
    pub fn integral(g: &Graph, set: &[usize]) -> Result<Self> {
        let n = g.n();
        let mask = crate::graph::mask(n, set);
        let mu = set.len() as f64 / n as f64;
        let vectors = mask
            .iter()
            .map(|&b| vec![if b { 1.0 } else { 0.0 }])
            .collect();
        Self::from_vectors(g, vectors, mu)
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors.iter().map(|v| v.len()).max().unwrap_or(0)
    }

    /// Matrix whose column `u` is `X̄_u` (zero padded to a common dimension).
    pub fn matrix(&self) -> Matrix {
        let d = self.dim().max(1);
        let cols: Vec<Vec<f64>> = self
            .vectors
            .iter()
            .map(|v| {
                let mut c = v.clone();
                c.resize(d, 0.0);
                c
            })
            .collect();
        Matrix::from_columns(&cols)
    }

    /// `X̄ᵀX̄`, the vertex Gram matrix.
    pub fn gram(&self) -> Matrix {
        let n = self.n();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(&self.vectors[i], &self.vectors[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.vectors.iter().map(|v| norm_sq(v)).sum()
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        dist_sq(&self.vectors[u], &self.vectors[v])
    }

    pub fn feasibility(&self, g: &Graph) -> Feasibility {
        let n = self.n();
        let d = self.dim();
        let mut sum = vec![0.0; d];
        for v in &self.vectors {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
        let centering = if self.origin.is_some() {
            0.0
        } else {
            norm_sq(&sum).sqrt()
        };
        let max_norm_sq = self.vectors.iter().map(|v| norm_sq(v)).fold(0.0, f64::max);
        let dist = distance_matrix(&self.vectors);
        let triangle = max_triangle_violation(&dist, n);
        let objective_gap = (edge_energy(g, &self.vectors) / self.nu - self.objective).abs();
        Feasibility {
            centering,
            max_norm_sq,
            triangle,
            objective_gap,
        }
    }
}

fn edge_energy(g: &Graph, vectors: &[Vec<f64>]) -> f64 {
    g.edges()
        .iter()
        .map(|&(u, v, w)| w * dist_sq(&vectors[u], &vectors[v]))
        .sum()
}

pub(crate) fn distance_matrix(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = dist_sq(&vectors[i], &vectors[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// `max(d_ab − d_ac − d_cb)` over all triples, clamped at zero.
pub(crate) fn max_triangle_violation(d: &[Vec<f64>], n: usize) -> f64 {
    let mut worst = 0.0_f64;
    for a in 0..n {
        for b in (a + 1)..n {
            for c in 0..n {
                if c != a && c != b {
                    worst = worst.max(d[a][b] - d[a][c] - d[c][b]);
                }
            }
        }
    }
    worst
}

/// `X̄_u = x_u − (1/n)Σ_v x_v`.
pub fn mean_shift(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let d = vectors.iter().map(|v| v.len()).max().unwrap_or(0);
    let mut mean = vec![0.0; d];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    vectors
        .iter()
        .map(|v| {
            (0..d)
                .map(|k| v.get(k).copied().unwrap_or(0.0) - mean[k])
                .collect()
        })
        .collect()
}

/// Moves the vertex `t` minimizing `Σ_u ‖X_u − X_t‖²` to the origin (smallest
/// index on ties). For centered input this total is at most twice `ν`.
pub fn translate_to_origin(sol: &VectorSolution) -> VectorSolution {
    let n = sol.n();
    let costs: Vec<f64> = (0..n)
        .map(|t| (0..n).map(|u| sol.distance(u, t)).sum())
        .collect();
    let best = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * best.abs().max(1e-300);
    let t = (0..n).find(|&t| costs[t] <= best + tol).unwrap_or(0);
    let shift = sol.vectors[t].clone();
    let vectors = sol
        .vectors
        .iter()
        .map(|v| v.iter().zip(&shift).map(|(a, b)| a - b).collect())
        .collect();
    VectorSolution {
        vectors,
        objective: sol.objective,
        mu: sol.mu,
        nu: sol.nu,
        origin: Some(t),
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Feasibility residual regarded as converged.
    pub tol: f64,
    /// Objective change regarded as stalled over `stall_window` iterations.
    pub stall: f64,
    pub stall_window: usize,
    /// Residual above which a run that hits the iteration cap is an error.
    pub fail_residual: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tol: 1e-6,
            stall: 1e-8,
            stall_window: 50,
            fail_residual: 1e-3,
        }
    }
}

/// Output of the base solver with diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseEmbedding {
    pub solution: VectorSolution,
    pub iterations: usize,
    /// Feasibility residual of the raw Gram matrix before repair.
    pub residual: f64,
    /// Objective of the repaired relaxation vectors.
    pub relaxation_objective: f64,
    /// Weight of the uniform metric mixed in to restore the triangle
    /// inequalities exactly.
    pub mix: f64,
    /// Set of the integral solution returned when it beat the relaxation
    /// vectors.
    pub integral: Option<Vec<usize>>,
}

/// Sparse linear functional on the Gram matrix, stored over both symmetric
/// entries so evaluation and adjoint are plain sums.
struct Lin {
    terms: Vec<(usize, f64)>,
    rhs: f64,
}

struct LinBuilder {
    size: usize,
    terms: Vec<(usize, f64)>,
}

impl LinBuilder {
    fn new(size: usize) -> Self {
        Self {
            size,
            terms: Vec::new(),
        }
    }

    fn entry(&mut self, i: usize, j: usize, c: f64) {
        if i == j {
            self.terms.push((i * self.size + i, c));
        } else {
            self.terms.push((i * self.size + j, 0.5 * c));
            self.terms.push((j * self.size + i, 0.5 * c));
        }
    }

    /// Adds `s · d(a, b)`; `None` is the origin.
    fn dist(&mut self, a: Option<usize>, b: Option<usize>, s: f64) {
        match (a, b) {
            (Some(a), Some(b)) => {
                self.entry(a, a, s);
                self.entry(b, b, s);
                self.entry(a, b, -2.0 * s);
            }
            (Some(a), None) | (None, Some(a)) => self.entry(a, a, s),
            (None, None) => {}
        }
    }

    fn finish(mut self, rhs: f64) -> Lin {
        self.terms.sort_unstable_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (k, c) in self.terms {
            match merged.last_mut() {
                Some(last) if last.0 == k => last.1 += c,
                _ => merged.push((k, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        // unit rows keep the ADMM system well conditioned
        let scale = merged.iter().map(|t| t.1 * t.1).sum::<f64>().sqrt();
        if scale > 0.0 {
            merged.iter_mut().for_each(|t| t.1 /= scale);
        }
        Lin {
            terms: merged,
            rhs: if scale > 0.0 { rhs / scale } else { rhs },
        }
    }
}

impl Lin {
    fn eval(&self, g: &[f64]) -> f64 {
        self.terms.iter().map(|&(k, c)| c * g[k]).sum::<f64>() - self.rhs
    }

    fn add_adjoint(&self, y: f64, out: &mut [f64]) {
        for &(k, c) in &self.terms {
            out[k] += c * y;
        }
    }
}

struct Relaxation {
    size: usize,
    cost: Vec<f64>,
    eqs: Vec<Lin>,
    ineqs: Vec<Lin>,
}

impl Relaxation {
    /// Gram index 0 is `x_∅`, vertex `u` is `u + 1`; triangle inequalities
    /// range over the vertices, `x_∅` and the origin.
    fn new(g: &Graph, mu: f64) -> Self {
        let n = g.n();
        let size = n + 1;
        let nf = n as f64;
        let mut cost = vec![0.0; size * size];
        let scale = 1.0 / (nf * mu * (1.0 - mu));
        for (u, v, w) in g.edges() {
            let (a, b) = (u + 1, v + 1);
            cost[a * size + a] += w * scale;
            cost[b * size + b] += w * scale;
            cost[a * size + b] -= w * scale;
            cost[b * size + a] -= w * scale;
        }
        let mut eqs = Vec::new();
        let mut b = LinBuilder::new(size);
        b.entry(0, 0, 1.0);
        eqs.push(b.finish(1.0));
        for u in 1..size {
            let mut b = LinBuilder::new(size);
            b.entry(u, 0, 1.0);
            b.entry(u, u, -1.0);
            eqs.push(b.finish(0.0));
        }
        let mut b = LinBuilder::new(size);
        for u in 1..size {
            b.entry(u, 0, 1.0);
        }
        eqs.push(b.finish(nf * mu));
        for v in 1..size {
            let mut b = LinBuilder::new(size);
            for u in 1..size {
                b.entry(u, v, 1.0);
            }
            b.entry(v, 0, -nf * mu);
            eqs.push(b.finish(0.0));
        }
        let points: Vec<Option<usize>> = (0..size).map(Some).chain([None]).collect();
        let mut ineqs = Vec::new();
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                for k in 0..points.len() {
                    if k == i || k == j {
                        continue;
                    }
                    let (a, bb, c) = (points[i], points[j], points[k]);
                    let mut b = LinBuilder::new(size);
                    b.dist(a, bb, 1.0);
                    b.dist(a, c, -1.0);
                    b.dist(c, bb, -1.0);
                    let lin = b.finish(0.0);
                    if !lin.terms.is_empty() {
                        ineqs.push(lin);
                    }
                }
            }
        }
        Self {
            size,
            cost,
            eqs,
            ineqs,
        }
    }

    fn objective(&self, g: &[f64]) -> f64 {
        self.cost.iter().zip(g).map(|(a, b)| a * b).sum()
    }

    fn residual(&self, g: &[f64]) -> f64 {
        let e = self.eqs.iter().map(|l| l.eval(g).abs()).fold(0.0, f64::max);
        let i = self
            .ineqs
            .iter()
            .map(|l| l.eval(g).max(0.0))
            .fold(0.0, f64::max);
        e.max(i)
    }
}

fn feasible_start(n: usize, mu: f64) -> Vec<f64> {
    let size = n + 1;
    let nf = n as f64;
    let mut g = vec![0.0; size * size];
    g[0] = 1.0;
    for u in 1..size {
        g[u] = mu;
        g[u * size] = mu;
        for v in 1..size {
            g[u * size + v] = if u == v {
                mu
            } else {
                mu * mu - mu * (1.0 - mu) / (nf - 1.0)
            };
        }
    }
    g
}

/// Projection onto the PSD cone. `basis` (row-major, columns are vectors)
/// is the eigenbasis from the previous call; rotating into it first leaves
/// Jacobi a nearly diagonal matrix. It is updated in place.
fn psd_projection(g: &[f64], size: usize, basis: &mut Vec<f64>) -> Result<Vec<f64>> {
    let n = size;
    if basis.len() != n * n {
        *basis = Matrix::identity(n).as_slice().to_vec();
    }
    let b = Matrix::from_rows(
        &(0..n)
            .map(|i| basis[i * n..(i + 1) * n].to_vec())
            .collect::<Vec<_>>(),
    );
    let m = Matrix::from_rows(
        &(0..n)
            .map(|i| g[i * n..(i + 1) * n].to_vec())
            .collect::<Vec<_>>(),
    );
    let mut rotated = b.transpose().matmul(&m).matmul(&b);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (rotated[(i, j)] + rotated[(j, i)]);
            rotated[(i, j)] = v;
            rotated[(j, i)] = v;
        }
    }
    let eig = eigh(&rotated)?;
    let vecs = b.matmul(&eig.vectors);
    *basis = vecs.as_slice().to_vec();
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        let lam = eig.values[k];
        if lam <= 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = vecs[(i, k)] * lam;
            for j in i..n {
                out[i * n + j] += vi * vecs[(j, k)];
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            out[j * n + i] = out[i * n + j];
        }
    }
    Ok(out)
}

/// Dense Cholesky factor (lower, row-major) of a symmetric positive definite
/// matrix.
fn cholesky(a: &[f64], m: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Degenerate("constraint system is singular".into()));
                }
                l[i * m + i] = s.sqrt();
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &[f64], m: usize, b: &mut [f64]) {
    for i in 0..m {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * m + k] * b[k];
        }
        b[i] = s / l[i * m + i];
    }
    for i in (0..m).rev() {
        let mut s = b[i];
        for k in (i + 1)..m {
            s -= l[k * m + i] * b[k];
        }
        b[i] = s / l[i * m + i];
    }
}

/// Relaxation restricted to the equalities plus a working set of triangle
/// inequalities, each carrying a nonnegative slack: `⟨T, X⟩ + s = 0`.
///
/// The system `ÃÃᵀy = b` is solved by eliminating the inequality block with
/// the Woodbury identity, so only `I + AᵢᵀAᵢ` (Gram-sized) and the Schur
/// complement on the equality rows are factored.
struct Working<'a> {
    rel: &'a Relaxation,
    active: Vec<usize>,
    /// Active rows over the packed upper triangle, off-diagonal entries
    /// scaled by `√2` so inner products between rows are unchanged.
    packed: Vec<Vec<(usize, f64)>>,
    chol_w: Vec<f64>,
    chol_s: Vec<f64>,
    /// `Aᵢ aₑⱼᵀ` for each equality row `j`.
    cross: Vec<Vec<f64>>,
}

impl<'a> Working<'a> {
    fn new(rel: &'a Relaxation, active: Vec<usize>) -> Result<Self> {
        let size = rel.size;
        let p = size * size;
        let q = size * (size + 1) / 2;
        let ne = rel.eqs.len();
        let mut slot = vec![0; p];
        let mut next = 0;
        for i in 0..size {
            for j in i..size {
                slot[i * size + j] = next;
                slot[j * size + i] = next;
                next += 1;
            }
        }
        let packed: Vec<Vec<(usize, f64)>> = active
            .iter()
            .map(|&a| {
                let mut row: Vec<(usize, f64)> = Vec::new();
                for &(k, c) in &rel.ineqs[a].terms {
                    let off = k / size != k % size;
                    let c = if off {
                        c * std::f64::consts::FRAC_1_SQRT_2
                    } else {
                        c
                    };
                    match row.iter_mut().find(|t| t.0 == slot[k]) {
                        Some(t) => t.1 += c,
                        None => row.push((slot[k], c)),
                    }
                }
                row
            })
            .collect();
        let mut w = vec![0.0; q * q];
        for k in 0..q {
            w[k * q + k] = 1.0;
        }
        for row in &packed {
            for &(k, c) in row {
                for &(l, d) in row {
                    w[k * q + l] += c * d;
                }
            }
        }
        let mut work = Self {
            rel,
            active,
            packed,
            chol_w: cholesky(&w, q)?,
            chol_s: Vec::new(),
            cross: Vec::with_capacity(ne),
        };
        let mut dense = vec![0.0; p];
        let mut s = vec![0.0; ne * ne];
        for j in 0..ne {
            for &(k, c) in &rel.eqs[j].terms {
                dense[k] = c;
            }
            for i in 0..ne {
                s[i * ne + j] = rel.eqs[i].terms.iter().map(|&(k, c)| c * dense[k]).sum();
            }
            let col: Vec<f64> = work
                .active
                .iter()
                .map(|&a| rel.ineqs[a].terms.iter().map(|&(k, c)| c * dense[k]).sum())
                .collect();
            for &(k, _) in &rel.eqs[j].terms {
                dense[k] = 0.0;
            }
            work.cross.push(col);
        }
        for j in 0..ne {
            let z = work.solve_ineq(&work.cross[j]);
            for i in 0..ne {
                s[i * ne + j] -= dot(&work.cross[i], &z);
            }
            s[j * ne + j] += 1e-12;
        }
        work.chol_s = cholesky(&s, ne)?;
        Ok(work)
    }

    /// `(I + AᵢAᵢᵀ)⁻¹ v = v − Aᵢ(I + AᵢᵀAᵢ)⁻¹Aᵢᵀv`.
    fn solve_ineq(&self, v: &[f64]) -> Vec<f64> {
        let size = self.rel.size;
        let q = size * (size + 1) / 2;
        let mut u = vec![0.0; q];
        for (row, &vi) in self.packed.iter().zip(v) {
            for &(k, c) in row {
                u[k] += c * vi;
            }
        }
        cholesky_solve(&self.chol_w, q, &mut u);
        self.packed
            .iter()
            .zip(v)
            .map(|(row, &vi)| vi - row.iter().map(|&(k, c)| c * u[k]).sum::<f64>())
            .collect()
    }

    /// Solves `ÃÃᵀy = b` in place.
    fn solve(&self, y: &mut [f64]) {
        let ne = self.rel.eqs.len();
        let (ye, yi) = y.split_at_mut(ne);
        let t = self.solve_ineq(yi);
        for j in 0..ne {
            ye[j] -= dot(&self.cross[j], &t);
        }
        cholesky_solve(&self.chol_s, ne, ye);
        for j in 0..ne {
            axpy(-ye[j], &self.cross[j], yi);
        }
        let out = self.solve_ineq(yi);
        yi.copy_from_slice(&out);
    }

    fn rows(&self) -> impl Iterator<Item = &Lin> {
        self.rel
            .eqs
            .iter()
            .chain(self.active.iter().map(|&i| &self.rel.ineqs[i]))
    }

    /// `Ã(X, s)` without right-hand sides.
    fn apply(&self, x: &[f64], s: &[f64]) -> Vec<f64> {
        let ne = self.rel.eqs.len();
        self.rows()
            .enumerate()
            .map(|(i, l)| {
                let v = l.eval(x) + l.rhs;
                if i >= ne {
                    v + s[i - ne]
                } else {
                    v
                }
            })
            .collect()
    }

    fn adjoint(&self, y: &[f64], out_x: &mut [f64], out_s: &mut [f64]) {
        out_x.iter_mut().for_each(|v| *v = 0.0);
        let ne = self.rel.eqs.len();
        for (i, l) in self.rows().enumerate() {
            l.add_adjoint(y[i], out_x);
            if i >= ne {
                out_s[i - ne] = y[i];
            }
        }
    }

    fn rhs(&self) -> Vec<f64> {
        self.rows().map(|l| l.rhs).collect()
    }
}

struct AdmmState {
    x: Vec<f64>,
    s: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    zs: Vec<f64>,
    penalty: f64,
    basis: Vec<f64>,
}

/// Dual alternating-direction augmented Lagrangian for
/// `min ⟨C, X⟩` over the working set, `X ⪰ 0`, slacks `≥ 0`.
/// Returns the number of iterations used.
fn admm(work: &Working, st: &mut AdmmState, budget: usize, tol: f64) -> Result<usize> {
    let rel = work.rel;
    let size = rel.size;
    let len = size * size;
    let m = rel.eqs.len() + work.active.len();
    let b = work.rhs();
    let mut aty = vec![0.0; len];
    let mut aty_s = vec![0.0; work.active.len()];
    for it in 1..=budget {
        // y-step
        let ax = work.apply(&st.x, &st.s);
        let cz: Vec<f64> = (0..len).map(|k| rel.cost[k] - st.z[k]).collect();
        let czs: Vec<f64> = st.zs.iter().map(|v| -v).collect();
        let acz = work.apply(&cz, &czs);
        let mut y: Vec<f64> = (0..m)
            .map(|i| st.penalty * (b[i] - ax[i]) + acz[i])
            .collect();
        work.solve(&mut y);
        work.adjoint(&y, &mut aty, &mut aty_s);
        // V = c − Ãᵀy − μx; z = Π(V); x = Π(−V)/μ
        let v: Vec<f64> = (0..len)
            .map(|k| rel.cost[k] - aty[k] - st.penalty * st.x[k])
            .collect();
        let neg: Vec<f64> = v.iter().map(|a| -a).collect();
        let xp = psd_projection(&neg, size, &mut st.basis)?;
        let x_new: Vec<f64> = xp.iter().map(|a| a / st.penalty).collect();
        let z_new: Vec<f64> = (0..len).map(|k| v[k] + xp[k]).collect();
        let vs: Vec<f64> = (0..aty_s.len())
            .map(|i| -aty_s[i] - st.penalty * st.s[i])
            .collect();
        let s_new: Vec<f64> = vs.iter().map(|a| (-a).max(0.0) / st.penalty).collect();
        let zs_new: Vec<f64> = vs.iter().map(|a| a.max(0.0)).collect();
        st.x = x_new;
        st.s = s_new;
        st.z = z_new;
        st.zs = zs_new;
        st.y = y;
        if it % 10 == 0 || it == budget {
            let ax = work.apply(&st.x, &st.s);
            let pinf = (0..m).map(|i| (ax[i] - b[i]).abs()).fold(0.0, f64::max);
            work.adjoint(&st.y, &mut aty, &mut aty_s);
            let dinf = (0..len)
                .map(|k| (rel.cost[k] - aty[k] - st.z[k]).abs())
                .chain((0..aty_s.len()).map(|i| (-aty_s[i] - st.zs[i]).abs()))
                .fold(0.0, f64::max);
            let pobj = rel.objective(&st.x);
            let dobj: f64 = b.iter().zip(&st.y).map(|(a, c)| a * c).sum();
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            if pinf < tol && dinf < tol && gap < tol {
                return Ok(it);
            }
            if dinf > 10.0 * pinf {
                st.penalty = (st.penalty / 1.6).max(1e-4);
            } else if pinf > 10.0 * dinf {
                st.penalty = (st.penalty * 1.6).min(1e4);
            }
        }
    }
    Ok(budget)
}

// ADMM iterations between working-set updates
const ROUND_BUDGET: usize = 200;

/// Solves the relaxation Gram matrix by a cutting-plane loop: ADMM on the
/// equalities plus the working set of triangle inequalities, adding the
/// most violated triangles every round.
fn solve_gram(g: &Graph, mu: f64, opts: &SolverOptions) -> Result<(Vec<f64>, usize, f64)> {
    let n = g.n();
    let rel = Relaxation::new(g, mu);
    let size = rel.size;
    let len = size * size;
    let batch = 12 * size;
    let mut active: Vec<usize> = Vec::new();
    let mut in_set = vec![false; rel.ineqs.len()];
    let mut st = AdmmState {
        x: feasible_start(n, mu),
        s: Vec::new(),
        y: vec![0.0; rel.eqs.len()],
        z: vec![0.0; len],
        zs: Vec::new(),
        penalty: 1.0,
        basis: Vec::new(),
    };
    let mut iterations = 0;
    let mut work = Working::new(&rel, active.clone())?;
    loop {
        let budget = opts
            .max_iterations
            .saturating_sub(iterations)
            .clamp(1, ROUND_BUDGET);
        let used = admm(&work, &mut st, budget, opts.tol)?;
        iterations += used;
        let converged = used < budget;
        let mut violated: Vec<(f64, usize)> = rel
            .ineqs
            .iter()
            .enumerate()
            .filter(|(i, _)| !in_set[*i])
            .map(|(i, l)| (l.eval(&st.x), i))
            .filter(|(v, _)| *v > opts.tol)
            .collect();
        if iterations >= opts.max_iterations || (violated.is_empty() && converged) {
            break;
        }
        violated.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in violated.iter().take(batch) {
            in_set[i] = true;
            active.push(i);
            st.s.push(0.0);
            st.zs.push(0.0);
            st.y.push(0.0);
        }
        if work.active.len() != active.len() {
            work = Working::new(&rel, active.clone())?;
        }
    }
    let residual = rel.residual(&st.x);
    if residual > opts.fail_residual {
        return Err(Error::NotConverged {
            iterations,
            residual,
        });
    }
    Ok((st.x, iterations, residual))
}
/// Concatenates `√(1−t)·X̄` with `√t` times a uniform-metric simplex of the
/// same mean squared distance, with `t` just large enough to clear every
/// triangle violation. Returns the new vectors and `t`.
fn repair_triangles(vectors: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let n = vectors.len();
    let dist = distance_matrix(vectors);
    let viol = max_triangle_violation(&dist, n);
    if viol <= 0.0 || n < 3 {
        return (vectors.to_vec(), 0.0);
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let mean: f64 = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| dist[i][j])
        .sum::<f64>()
        / pairs;
    let c = mean.max(1e-12);
    let t = (viol / (viol + c) * (1.0 + 1e-6) + 1e-15).min(1.0);
    let a = (1.0 - t).sqrt();
    let b = (t * c / 2.0).sqrt();
    let out = vectors
        .iter()
        .enumerate()
        .map(|(u, v)| {
            let mut w: Vec<f64> = v.iter().map(|x| a * x).collect();
            let mut e = vec![0.0; n];
            e[u] = b;
            w.extend(e);
            w
        })
        .collect();
    (out, t)
}

/// Re-factors the Gram of centered vectors into at most `n` coordinates and
/// scales down if any squared norm exceeds 1.
fn compact(vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = vectors.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = dot(&vectors[i], &vectors[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    let mut out = mean_shift(&psd_factor(&k)?);
    let top = out.iter().map(|v| norm_sq(v)).fold(0.0, f64::max);
    if top > 1.0 {
        let s = 1.0 / top.sqrt();
        out.iter_mut()
            .for_each(|v| v.iter_mut().for_each(|x| *x *= s));
    }
    Ok(out)
}

/// Directions for integral candidates: the rows of the vertex Gram, its
/// principal axes, and the low Laplacian eigenvectors.
fn candidate_directions(g: &Graph, vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = g.n();
    let mut dirs = Vec::new();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = dot(&vectors[i], &vectors[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    for i in 0..n {
        dirs.push(k.row(i).to_vec());
    }
    let eig = eigh(&k)?;
    let top = eig.values.last().copied().unwrap_or(0.0);
    for j in 0..n {
        if eig.values[j] > 1e-9 * top {
            dirs.push(eig.vector(j));
        }
    }
    let lap = eigh(&g.laplacian())?;
    for j in 1..n.min(5) {
        dirs.push(lap.vector(j));
    }
    Ok(dirs)
}

/// Best set of exactly `k` vertices among top/bottom-`k` prefixes of the
/// sorted directions.
fn best_prefix_set(g: &Graph, dirs: &[Vec<f64>], k: usize) -> Option<(f64, Vec<usize>)> {
    let n = g.n();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for d in dirs {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        for side in [&order[..k], &order[n - k..]] {
            let mut set = side.to_vec();
            set.sort_unstable();
            let cut = g.cut_weight(&set);
            let phi = n as f64 * cut / (k as f64 * (n - k) as f64);
            if best.as_ref().map_or(true, |(b, s)| {
                phi < *b - 1e-12 || (phi <= *b + 1e-12 && set < *s)
            }) {
                best = Some((phi, set));
            }
        }
    }
    best
}

fn balance_count(n: usize, mu: f64) -> Result<usize> {
    let k = (mu * n as f64).round();
    if (k - mu * n as f64).abs() > 1e-9 || k < 1.0 || 2.0 * k > n as f64 {
        return Err(Error::OutOfRange(format!(
            "balance mu = {mu} must be one of 1/n, 2/n, ..., 1/2 for n = {n}"
        )));
    }
    Ok(k as usize)
}

/// Solves the base relaxation at balance `mu` and returns the best exactly
/// feasible solution: the repaired relaxation vectors, or an integral cut of
/// the same balance found by sweeping along them when that is no worse.
pub fn solve_base_embedding(g: &Graph, mu: f64, opts: &SolverOptions) -> Result<BaseEmbedding> {
    let n = g.n();
    if n < 2 {
        return Err(Error::OutOfRange("need at least two vertices".into()));
    }
    let k = balance_count(n, mu)?;
    let (gram, iterations, residual) = solve_gram(g, mu, opts)?;
    let size = n + 1;
    let m = Matrix::from_rows(
        &(0..size)
            .map(|i| gram[i * size..(i + 1) * size].to_vec())
            .collect::<Vec<_>>(),
    );
    let all = psd_factor(&m)?;
    let centered = mean_shift(&all[1..]);
    let (repaired, mix) = repair_triangles(&centered);
    let vectors = compact(&repaired)?;
    let relaxed = VectorSolution::from_vectors(g, vectors, mu);
    let dirs = match &relaxed {
        Ok(s) => candidate_directions(g, &s.vectors)?,
        Err(_) => candidate_directions(g, &vec![vec![0.0]; n])?,
    };
    let integral = best_prefix_set(g, &dirs, k);
    let relaxation_objective = relaxed
        .as_ref()
        .map(|s| s.objective)
        .unwrap_or(f64::INFINITY);
    match (relaxed, integral) {
        (Ok(sol), Some((phi, _))) if sol.objective < phi - 1e-12 => Ok(BaseEmbedding {
            solution: sol,
            iterations,
            residual,
            relaxation_objective,
            mix,
            integral: None,
        }),
        (_, Some((_, set))) => Ok(BaseEmbedding {
            solution: VectorSolution::integral(g, &set)?,
            iterations,
            residual,
            relaxation_objective,
            mix,
            integral: Some(set),
        }),
        (Ok(sol), None) => Ok(BaseEmbedding {
            solution: sol,
            iterations,
            residual,
            relaxation_objective,
            mix,
            integral: None,
        }),
        (Err(e), None) => Err(e),
    }
}

/// Solves at every balance `1/n, …, ⌊n/2⌋/n` and keeps the smallest
/// objective (smallest balance on ties).
pub fn solve_embedding_sweep(g: &Graph, opts: &SolverOptions) -> Result<BaseEmbedding> {
    let n = g.n();
    let mut best: Option<BaseEmbedding> = None;
    for k in 1..=n / 2 {
        let emb = solve_base_embedding(g, k as f64 / n as f64, opts)?;
        if best.as_ref().map_or(true, |b| {
            emb.solution.objective < b.solution.objective - 1e-12
        }) {
            best = Some(emb);
        }
    }
    best.ok_or_else(|| Error::OutOfRange("need at least two vertices".into()))
}

/// A Lasserre table: the Gram matrix over all `(S, f)` with `|S| ≤ r + 1`.
///
/// Keys are ordered by set size, then lexicographically by the sorted set,
/// then by labeling read as a binary number with the first vertex as the most
/// significant bit.
#[derive(Debug, Clone)]
pub struct LasserreSolution {
    pub n: usize,
    pub r: usize,
    pub keys: Vec<(Vec<usize>, Vec<u8>)>,
    pub gram: Matrix,
    index: HashMap<(Vec<usize>, Vec<u8>), usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LasserreEntry {
    pub sets: (Vec<usize>, Vec<u8>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LasserreJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub r: usize,
    pub entries: Vec<LasserreEntry>,
    pub gram: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LasserreReport {
    pub passed: bool,
    pub conditions: Vec<ConditionCheck>,
}

/// Canonical key order for `n` vertices and level `r`.
pub fn lasserre_keys(n: usize, r: usize) -> Vec<(Vec<usize>, Vec<u8>)> {
    let mut keys = Vec::new();
    for size in 0..=(r + 1).min(n) {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            for bits in 0..(1u32 << size) {
                let labels = (0..size)
                    .map(|i| ((bits >> (size - 1 - i)) & 1) as u8)
                    .collect();
                keys.push((combo.clone(), labels));
            }
            // next combination
            let mut i = size;
            while i > 0 && combo[i - 1] == n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    keys
}

fn merge(a: &(Vec<usize>, Vec<u8>), b: &(Vec<usize>, Vec<u8>)) -> Option<(Vec<usize>, Vec<u8>)> {
    let mut map: Vec<(usize, u8)> = a.0.iter().copied().zip(a.1.iter().copied()).collect();
    for (&v, &l) in b.0.iter().zip(&b.1) {
        match map.iter().find(|(u, _)| *u == v) {
            Some(&(_, l2)) if l2 != l => return None,
            Some(_) => {}
            None => map.push((v, l)),
        }
    }
    map.sort_unstable();
    Some(map.into_iter().unzip())
}

impl LasserreSolution {
    pub fn new(n: usize, r: usize, gram: Matrix) -> Result<Self> {
        let keys = lasserre_keys(n, r);
        if gram.rows() != keys.len() || gram.cols() != keys.len() {
            return Err(Error::Dimension(format!(
                "level {r} on {n} vertices needs a {0}x{0} table, got {1}x{2}",
                keys.len(),
                gram.rows(),
                gram.cols()
            )));
        }
        let index = keys
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, k)| (k, i))
            .collect();
        Ok(Self {
            n,
            r,
            keys,
            gram,
            index,
        })
    }

    /// The table of a distribution over cuts: `x_S(f)` has one coordinate per
    /// cut, equal to `√p` when `f` agrees with that cut's indicator on `S`.
    pub fn from_distribution(n: usize, r: usize, cuts: &[(f64, Vec<usize>)]) -> Result<Self> {
        let keys = lasserre_keys(n, r);
        let vecs: Vec<Vec<f64>> = keys
            .iter()
            .map(|(set, labels)| {
                cuts.iter()
                    .map(|(p, cut)| {
                        let ok = set
                            .iter()
                            .zip(labels)
                            .all(|(v, &l)| cut.contains(v) == (l == 1));
                        if ok {
                            p.sqrt()
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let m = keys.len();
        let mut gram = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                gram[(i, j)] = dot(&vecs[i], &vecs[j]);
            }
        }
        Self::new(n, r, gram)
    }

    pub fn key_index(&self, set: &[usize], labels: &[u8]) -> Option<usize> {
        self.index.get(&(set.to_vec(), labels.to_vec())).copied()
    }

    /// `⟨x_S(f), x_T(g)⟩`.
    pub fn inner(&self, a: usize, b: usize) -> f64 {
        self.gram[(a, b)]
    }

    pub fn singleton(&self, u: usize) -> usize {
        self.key_index(&[u], &[1]).expect("singleton key")
    }

    /// Checks the defining conditions and reports the worst violation of each.
    pub fn validate(&self, tol: f64) -> Result<LasserreReport> {
        let m = self.keys.len();
        let empty = self.key_index(&[], &[]).expect("empty key");
        let norm_empty = (self.gram[(empty, empty)] - 1.0).abs();
        let mut conflict = 0.0_f64;
        let mut groups: HashMap<(Vec<usize>, Vec<u8>), (f64, f64)> = HashMap::new();
        for a in 0..m {
            for b in a..m {
                let v = self.gram[(a, b)];
                match merge(&self.keys[a], &self.keys[b]) {
                    None => conflict = conflict.max(v.abs()),
                    Some(key) => {
                        let e = groups.entry(key).or_insert((v, v));
                        e.0 = e.0.min(v);
                        e.1 = e.1.max(v);
                    }
                }
            }
        }
        let consistency = groups.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
        let mut label_sum = 0.0_f64;
        for u in 0..self.n {
            let z = self.key_index(&[u], &[0]).expect("key");
            let o = self.key_index(&[u], &[1]).expect("key");
            let s = self.gram[(z, z)] + self.gram[(o, o)] - self.gram[(empty, empty)];
            label_sum = label_sum.max(s.abs());
        }
        // Σ_g x_S(f∘g) = x_{S∖u}(f), measured as a squared norm.
        let mut marginal = 0.0_f64;
        for (set, labels) in &self.keys {
            for pos in 0..set.len() {
                let mut rest_set = set.clone();
                let mut rest_lab = labels.clone();
                rest_set.remove(pos);
                rest_lab.remove(pos);
                if labels[pos] != 0 {
                    continue;
                }
                let a = self.key_index(set, labels).expect("key");
                let mut other = labels.clone();
                other[pos] = 1;
                let b = self.key_index(set, &other).expect("key");
                let c = self.key_index(&rest_set, &rest_lab).expect("key");
                let gm = |i: usize, j: usize| self.gram[(i, j)];
                let sq = gm(a, a) + gm(b, b) + gm(c, c) + 2.0 * gm(a, b)
                    - 2.0 * gm(a, c)
                    - 2.0 * gm(b, c);
                marginal = marginal.max(sq.abs().sqrt());
            }
        }
        let sym = self.gram.max_asymmetry();
        let min_eig = if sym <= 1e-10 * self.gram.frobenius_norm().max(1.0) {
            eigh(&self.gram)?.values.first().copied().unwrap_or(0.0)
        } else {
            f64::NEG_INFINITY
        };
        let psd = (-min_eig).max(0.0);
        let mk = |name: &str, worst: f64| ConditionCheck {
            name: name.to_string(),
            passed: worst <= tol,
            worst,
        };
        let conditions = vec![
            mk("unit_empty", norm_empty),
            mk("label_conflict", conflict),
            mk("union_consistency", consistency),
            mk("label_sum", label_sum),
            mk("marginal", marginal),
            mk("psd", psd),
        ];
        Ok(LasserreReport {
            passed: conditions.iter().all(|c| c.passed),
            conditions,
        })
    }

    /// `x_u = x_u(1)`, mean shifted, as a [`VectorSolution`] on `g`.
    pub fn singleton_solution(&self, g: &Graph) -> Result<VectorSolution> {
        if g.n() != self.n {
            return Err(Error::Dimension(format!(
                "graph has {} vertices, table {}",
                g.n(),
                self.n
            )));
        }
        let idx: Vec<usize> = (0..self.n).map(|u| self.singleton(u)).collect();
        let mut k = Matrix::zeros(self.n, self.n);
        for (i, &a) in idx.iter().enumerate() {
            for (j, &b) in idx.iter().enumerate() {
                k[(i, j)] = self.gram[(a, b)];
            }
        }
        let sym = Matrix::from_rows(
            &(0..self.n)
                .map(|i| (0..self.n).map(|j| 0.5 * (k[(i, j)] + k[(j, i)])).collect())
                .collect::<Vec<_>>(),
        );
        let vectors = psd_factor(&sym)?;
        let mu = idx.iter().map(|&a| self.gram[(a, a)]).sum::<f64>() / self.n as f64;
        VectorSolution::from_vectors(g, vectors, mu)
    }

    pub fn to_json(&self) -> LasserreJson {
        LasserreJson {
            n: Some(self.n),
            r: self.r,
            entries: self
                .keys
                .iter()
                .map(|k| LasserreEntry { sets: k.clone() })
                .collect(),
            gram: self.gram.to_rows(),
        }
    }

    pub fn from_json(json: &LasserreJson) -> Result<Self> {
        let n = match json.n {
            Some(n) => n,
            None => json
                .entries
                .iter()
                .flat_map(|e| e.sets.0.iter().copied())
                .max()
                .map_or(0, |m| m + 1),
        };
        let keys = lasserre_keys(n, json.r);
        if json.entries.len() != keys.len() {
            return Err(Error::Parse(format!(
                "expected {} entries for n = {n}, r = {}, found {}",
                keys.len(),
                json.r,
                json.entries.len()
            )));
        }
        for (i, (e, k)) in json.entries.iter().zip(&keys).enumerate() {
            if &e.sets != k {
                return Err(Error::Parse(format!(
                    "entry {i} is {:?}, expected {:?} in canonical order",
                    e.sets, k
                )));
            }
        }
        if json.gram.len() != keys.len() || json.gram.iter().any(|r| r.len() != keys.len()) {
            return Err(Error::Parse("gram must be square over the entries".into()));
        }
        Self::new(n, json.r, Matrix::from_rows(&json.gram))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete, cycle, disjoint_union};
    use crate::linalg::eigenvalues;
    use crate::oracle::brute_sparsest;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn norm(g: Graph) -> Graph {
        g.normalize_regular().unwrap().graph
    }

    fn lambda2(g: &Graph) -> f64 {
        eigenvalues(&g.laplacian()).unwrap()[1]
    }

    #[test]
    fn mean_shift_examples() {
        let out = mean_shift(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(out, vec![vec![0.5, -0.5], vec![-0.5, 0.5]]);
        let centered = vec![vec![1.0, 2.0], vec![-1.0, -2.0]];
        assert_eq!(mean_shift(&centered), centered);
    }

    proptest! {
        #[test]
        fn mean_shift_preserves_distances(raw in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 6)) {
            let out = mean_shift(&raw);
            let n = raw.len();
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((dist_sq(&raw[i], &raw[j]) - dist_sq(&out[i], &out[j])).abs() < 1e-10);
                }
            }
            let total: f64 = out.iter().map(|v| norm_sq(v)).sum();
            let pairs: f64 = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .map(|(i, j)| dist_sq(&raw[i], &raw[j])).sum();
            prop_assert!((total - pairs / n as f64).abs() < 1e-9);
        }
    }

    fn solution(vectors: Vec<Vec<f64>>) -> VectorSolution {
        let n = vectors.len();
        VectorSolution::from_vectors(&norm(cycle(n.max(3))), vectors, 0.5).unwrap()
    }

    #[test]
    fn translation_examples() {
        let s = solution(vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![-1.0, 0.0]]);
        let t = translate_to_origin(&s);
        assert_eq!(t.origin, Some(1));
        assert_eq!(t.vectors, s.vectors);
        let p = vec![0.3, 0.4];
        let anti = VectorSolution {
            vectors: vec![p.clone(), p.iter().map(|x| -x).collect()],
            objective: 1.0,
            mu: 0.5,
            nu: 2.0 * norm_sq(&p),
            origin: None,
        };
        let t = translate_to_origin(&anti);
        assert_eq!(t.origin, Some(0));
        let total: f64 = t.vectors.iter().map(|v| norm_sq(v)).sum();
        assert!((total - 4.0 * norm_sq(&p)).abs() < 1e-12);
        assert!((total - 2.0 * anti.nu).abs() < 1e-12);
    }

    #[test]
    fn translation_choice_is_exhaustively_best() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let raw: Vec<Vec<f64>> = (0..8)
                .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let s = VectorSolution::from_vectors(&norm(cycle(8)), raw, 0.5).unwrap();
            let t = translate_to_origin(&s);
            let total = |k: usize| -> f64 { (0..8).map(|u| s.distance(u, k)).sum() };
            let chosen = t.origin.unwrap();
            for k in 0..8 {
                assert!(total(chosen) <= total(k) + 1e-12);
            }
            assert!(total(chosen) <= 2.0 * s.nu + 1e-12);
            assert!(norm_sq(&t.vectors[chosen]) == 0.0);
        }
    }

    #[test]
    fn two_triangles_split_at_zero() {
        let g = norm(disjoint_union(&complete(3), &complete(3)));
        let emb = solve_base_embedding(&g, 0.5, &SolverOptions::default()).unwrap();
        let s = &emb.solution;
        assert!(s.objective.abs() < 1e-9);
        assert!(s.feasibility(&g).holds(1e-7));
        // two antipodal clusters
        for u in 0..6 {
            for v in 0..6 {
                let same = (u < 3) == (v < 3);
                let d = s.distance(u, v);
                if same {
                    assert!(d < 1e-9);
                } else {
                    assert!((d - 4.0 * norm_sq(&s.vectors[u])).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn small_relaxations_are_bounded() {
        let k4 = norm(complete(4));
        let e = solve_base_embedding(&k4, 0.5, &SolverOptions::default()).unwrap();
        assert!(e.solution.objective <= 4.0 / 3.0 + 1e-6);
        assert!(e.solution.objective >= lambda2(&k4) - 1e-7);
        let c4 = norm(cycle(4));
        let e = solve_base_embedding(&c4, 0.5, &SolverOptions::default()).unwrap();
        assert!(e.solution.objective <= 1.0 + 1e-6);
        assert!(e.solution.objective >= 0.5);
        assert!(e.solution.feasibility(&c4).holds(1e-7));
    }

    #[test]
    fn c8_relaxation_is_between_spectral_and_oracle() {
        let g = norm(cycle(8));
        let e = solve_embedding_sweep(&g, &SolverOptions::default()).unwrap();
        let oracle = brute_sparsest(&g).unwrap().sparsity;
        assert!(e.solution.objective <= oracle + 1e-6);
        assert!(e.solution.objective >= lambda2(&g) - 1e-7);
        assert!(e.solution.feasibility(&g).holds(1e-7));
    }

    #[test]
    fn rejects_bad_balance() {
        let g = norm(cycle(6));
        assert!(solve_base_embedding(&g, 0.7, &SolverOptions::default()).is_err());
        assert!(solve_base_embedding(&g, 0.25, &SolverOptions::default()).is_err());
    }

    #[test]
    fn lasserre_key_order() {
        let keys = lasserre_keys(3, 0);
        assert_eq!(keys[0], (vec![], vec![]));
        assert_eq!(keys[1], (vec![0], vec![0]));
        assert_eq!(keys[2], (vec![0], vec![1]));
        let keys = lasserre_keys(3, 1);
        assert_eq!(keys.len(), 1 + 3 * 2 + 3 * 4);
        assert_eq!(keys[7], (vec![0, 1], vec![0, 0]));
        assert_eq!(keys[8], (vec![0, 1], vec![0, 1]));
        assert_eq!(keys[9], (vec![0, 1], vec![1, 0]));
    }

    #[test]
    fn integral_table_passes_exactly() {
        let sol = LasserreSolution::from_distribution(4, 1, &[(1.0, vec![0, 1])]).unwrap();
        let report = sol.validate(1e-12).unwrap();
        assert!(report.passed, "{report:?}");
        // the combinatorial conditions hold with no rounding at all
        for c in report.conditions.iter().filter(|c| c.name != "psd") {
            assert_eq!(c.worst, 0.0, "{}", c.name);
        }
    }

    #[test]
    fn bad_empty_norm_is_reported() {
        let mut sol = LasserreSolution::from_distribution(4, 1, &[(1.0, vec![0, 1])]).unwrap();
        sol.gram[(0, 0)] = 0.9;
        let report = sol.validate(1e-7).unwrap();
        let unit = &report.conditions[0];
        assert_eq!(unit.name, "unit_empty");
        assert!(!unit.passed && (unit.worst - 0.1).abs() < 1e-12);
        assert!(!report.passed);
    }

    #[test]
    fn mixture_of_c4_cuts_passes() {
        let sol =
            LasserreSolution::from_distribution(4, 1, &[(0.5, vec![0, 1]), (0.5, vec![1, 2])])
                .unwrap();
        let report = sol.validate(1e-9).unwrap();
        assert!(report.passed, "{report:?}");
        for (a, (set, labels)) in sol.keys.iter().enumerate() {
            let p = sol.inner(a, a);
            if p <= 1e-12 {
                continue;
            }
            for u in 0..4 {
                let c = sol.inner(a, sol.singleton(u)) / p;
                assert!(
                    (-1e-12..=1.0 + 1e-12).contains(&c),
                    "{set:?} {labels:?} {u}: {c}"
                );
            }
        }
        let g = norm(cycle(4));
        let vs = sol.singleton_solution(&g).unwrap();
        assert!(vs.feasibility(&g).holds(1e-9));
        // each cut has sparsity 1 on normalized C4
        assert!((vs.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lasserre_json_round_trip() {
        let sol = LasserreSolution::from_distribution(3, 1, &[(1.0, vec![2])]).unwrap();
        let text = serde_json::to_string(&sol.to_json()).unwrap();
        let back: LasserreJson = serde_json::from_str(&text).unwrap();
        let again = LasserreSolution::from_json(&back).unwrap();
        assert_eq!(again.gram, sol.gram);
        let mut broken = back.clone();
        broken.entries.swap(1, 2);
        assert!(LasserreSolution::from_json(&broken).is_err());
    }
}
