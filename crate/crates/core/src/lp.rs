//! Dense two-phase simplex and Dinic max-flow.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize objective·x` subject to `constraints`, `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, point: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::OutOfRange("non-finite objective coefficient".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::Dimension(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::OutOfRange(format!("constraint {i} is not finite")));
            }
        }
        Ok(())
    }

    /// Largest violation of the constraints and bounds at `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

const PIVOT_EPS: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows + 1` rows of `cols + 1` entries; last column is the rhs, last row
    /// the objective (reduced costs, maximization: entering on negatives).
    t: Vec<f64>,
    basis: Vec<usize>,
    blocked: Vec<bool>,
    iterations: usize,
    max_iterations: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.t[pr * w + pc];
        for c in 0..w {
            self.t[pr * w + c] /= p;
        }
        let prow: Vec<f64> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[r * w..(r + 1) * w];
            for (dst, &src) in row.iter_mut().zip(&prow) {
                *dst -= f * src;
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let obj = self.rows;
        let mut best: Option<(usize, f64)> = None;
        for c in 0..self.cols {
            if self.blocked[c] {
                continue;
            }
            let v = self.at(obj, c);
            if v < -PIVOT_EPS {
                if bland {
                    return Some(c);
                }
                if best.map_or(true, |(_, b)| v < b) {
                    best = Some((c, v));
                }
            }
        }
        best.map(|(c, _)| c)
    }

    fn leaving(&self, pc: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, pc);
            if a > PIVOT_EPS {
                let ratio = self.rhs(r) / a;
                let better = match best {
                    None => true,
                    Some((br, b)) => {
                        ratio < b - 1e-12 || (ratio <= b + 1e-12 && self.basis[r] < self.basis[br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
        }
        best.map(|(r, _)| r)
    }

    fn run(&mut self) -> Result<Phase> {
        let mut degenerate = 0;
        loop {
            let bland = degenerate >= DEGENERATE_RUN;
            let pc = match self.entering(bland) {
                Some(c) => c,
                None => return Ok(Phase::Optimal),
            };
            let pr = match self.leaving(pc) {
                Some(r) => r,
                None => return Ok(Phase::Unbounded),
            };
            if self.rhs(pr).abs() <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(Error::NotConverged {
                    iterations: self.iterations,
                    residual: f64::NAN,
                });
            }
        }
    }
}

/// Solves `p` with a two-phase dense tableau. Dantzig pricing, switching to
/// Bland's rule after a run of degenerate pivots.
pub fn solve_lp(p: &LpProblem) -> Result<LpOutcome> {
    p.validate()?;
    let nv = p.objective.len();
    let m = p.constraints.len();
    // Normalize rows to nonnegative rhs.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = p
        .constraints
        .iter()
        .map(|c| {
            if c.rhs < 0.0 {
                let rel = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coeffs.iter().map(|a| -a).collect(), rel, -c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs)
            }
        })
        .collect();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = nv + n_slack + n_art;
    let w = cols + 1;
    let mut t = vec![0.0; (m + 1) * w];
    let mut basis = vec![0; m];
    let mut slack = nv;
    let mut art = nv + n_slack;
    let art_start = art;
    for (r, (coeffs, rel, rhs)) in rows.iter_mut().enumerate() {
        t[r * w..r * w + nv].copy_from_slice(coeffs);
        t[r * w + cols] = *rhs;
        match rel {
            Relation::Le => {
                t[r * w + slack] = 1.0;
                basis[r] = slack;
                slack += 1;
            }
            Relation::Ge => {
                t[r * w + slack] = -1.0;
                slack += 1;
                t[r * w + art] = 1.0;
                basis[r] = art;
                art += 1;
            }
            Relation::Eq => {
                t[r * w + art] = 1.0;
                basis[r] = art;
                art += 1;
            }
        }
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        t,
        basis,
        blocked: vec![false; cols],
        iterations: 0,
        max_iterations: 50 * (m + cols) + 10_000,
    };

    if n_art > 0 {
        // Phase 1: maximize −Σ artificials.
        let obj = m * w;
        for c in art_start..cols {
            tab.t[obj + c] = 1.0;
        }
        for r in 0..m {
            if tab.basis[r] >= art_start {
                for c in 0..w {
                    tab.t[obj + c] -= tab.t[r * w + c];
                }
            }
        }
        tab.run()?;
        let infeas = -tab.t[obj + cols];
        let scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);
        if infeas > 1e-9 * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&c| tab.at(r, c).abs() > 1e-9) {
                    tab.pivot(r, c);
                }
            }
        }
        for c in art_start..cols {
            tab.blocked[c] = true;
        }
    }

    // Phase 2.
    let obj = m * w;
    for c in 0..w {
        tab.t[obj + c] = 0.0;
    }
    for (c, &v) in p.objective.iter().enumerate() {
        tab.t[obj + c] = -v;
    }
    for r in 0..m {
        let b = tab.basis[r];
        let f = tab.t[obj + b];
        if f != 0.0 {
            for c in 0..w {
                tab.t[obj + c] -= f * tab.t[r * w + c];
            }
        }
    }
    match tab.run()? {
        Phase::Unbounded => Ok(LpOutcome::Unbounded),
        Phase::Optimal => {
            let mut point = vec![0.0; nv];
            for r in 0..m {
                if tab.basis[r] < nv {
                    point[tab.basis[r]] = tab.rhs(r).max(0.0);
                }
            }
            let value = p.objective.iter().zip(&point).map(|(a, b)| a * b).sum();
            Ok(LpOutcome::Optimal { value, point })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub cap: f64,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub nodes: usize,
    pub arcs: Vec<Arc>,
    pub source: usize,
    pub sink: usize,
}

#[derive(Debug, Clone)]
pub struct MaxFlow {
    pub value: f64,
    /// Flow on each arc of the network, in input order.
    pub flow: Vec<f64>,
    /// Source side of a minimum cut.
    pub cut: Vec<usize>,
}

pub const FLOW_EPS: f64 = 1e-10;

impl FlowNetwork {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Self {
        Self {
            nodes,
            arcs: Vec::new(),
            source,
            sink,
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64) {
        self.arcs.push(Arc { from, to, cap });
    }

    /// Capacity of arcs leaving `side`.
    pub fn cut_capacity(&self, side: &[bool]) -> f64 {
        self.arcs
            .iter()
            .filter(|a| side[a.from] && !side[a.to])
            .map(|a| a.cap)
            .sum()
    }
}

struct Dinic {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
    level: Vec<i64>,
    iter: Vec<usize>,
}

impl Dinic {
    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > FLOW_EPS && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.iter[u] < self.head[u].len() {
            let e = self.head[u][self.iter[u]];
            let v = self.to[e];
            if self.cap[e] > FLOW_EPS && self.level[v] == self.level[u] + 1 {
                let d = self.dfs(v, t, pushed.min(self.cap[e]));
                if d > FLOW_EPS {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            self.iter[u] += 1;
        }
        0.0
    }
}

/// Dinic's algorithm on real capacities; residuals below `FLOW_EPS` count
/// as saturated.
pub fn max_flow(net: &FlowNetwork) -> Result<MaxFlow> {
    let (s, t) = (net.source, net.sink);
    if s == t || s >= net.nodes || t >= net.nodes {
        return Err(Error::OutOfRange(
            "source and sink must be distinct nodes".into(),
        ));
    }
    let mut d = Dinic {
        head: vec![Vec::new(); net.nodes],
        to: Vec::with_capacity(2 * net.arcs.len()),
        cap: Vec::with_capacity(2 * net.arcs.len()),
        level: vec![-1; net.nodes],
        iter: vec![0; net.nodes],
    };
    for a in &net.arcs {
        if a.from >= net.nodes || a.to >= net.nodes || !(a.cap >= 0.0) {
            return Err(Error::OutOfRange(format!("invalid arc {a:?}")));
        }
        d.head[a.from].push(d.to.len());
        d.to.push(a.to);
        d.cap.push(a.cap);
        d.head[a.to].push(d.to.len());
        d.to.push(a.from);
        d.cap.push(0.0);
    }
    let mut value = 0.0;
    while d.bfs(s, t) {
        d.iter.iter_mut().for_each(|i| *i = 0);
        loop {
            let f = d.dfs(s, t, f64::INFINITY);
            if f <= FLOW_EPS {
                break;
            }
            value += f;
        }
    }
    let flow = net
        .arcs
        .iter()
        .enumerate()
        .map(|(i, a)| (a.cap - d.cap[2 * i]).max(0.0))
        .collect();
    let cut = (0..net.nodes).filter(|&v| d.level[v] >= 0).collect();
    Ok(MaxFlow { value, flow, cut })
}
