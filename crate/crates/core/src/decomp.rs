//! Padded decompositions, the good-or-small-cut rounding on top of them, and
//! a region-growing partition oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embed::VectorSolution;
use crate::error::{Error, Result};
use crate::graph::{keep_better, CutResult, Graph};
use crate::gs_round::{gs_round, CONTRACT_TOL};
use crate::linalg::Matrix;
use crate::orth_sep::RoundOutcome;
use crate::rng;

const METRIC_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddedPartition {
    pub blocks: Vec<Vec<usize>>,
    /// Diameter bound Δ.
    pub scale: f64,
    /// Padding parameter of the construction, `10·H_n`.
    pub beta: f64,
    /// Carving radius of this draw.
    pub radius: f64,
    pub seed: u64,
}

impl PaddedPartition {
    pub fn block_of(&self, n: usize) -> Vec<usize> {
        let mut of = vec![0; n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &u in block {
                of[u] = b;
            }
        }
        of
    }
}

/// Errors unless `dist` is a symmetric semimetric up to `1e-7`.
pub fn check_metric(dist: &Matrix) -> Result<()> {
    let n = dist.rows();
    if !dist.is_square() {
        return Err(Error::Dimension(format!(
            "{}×{} distance matrix",
            n,
            dist.cols()
        )));
    }
    for i in 0..n {
        if dist[(i, i)].abs() > METRIC_TOL {
            return Err(Error::NotMetric(format!("d({i}, {i}) = {}", dist[(i, i)])));
        }
        for j in 0..n {
            let d = dist[(i, j)];
            if d.is_nan()
                || d < -METRIC_TOL
                || (d - dist[(j, i)]).abs() > METRIC_TOL * (1.0 + d.abs())
            {
                return Err(Error::NotMetric(format!(
                    "d({i}, {j}) = {d}, d({j}, {i}) = {}",
                    dist[(j, i)]
                )));
            }
            for k in 0..n {
                if d > dist[(i, k)] + dist[(k, j)] + METRIC_TOL {
                    return Err(Error::NotMetric(format!(
                        "d({i}, {j}) = {d} > d({i}, {k}) + d({k}, {j}) = {}",
                        dist[(i, k)] + dist[(k, j)]
                    )));
                }
            }
        }
    }
    Ok(())
}

fn harmonic(n: usize) -> f64 {
    (1..=n.max(1)).map(|k| 1.0 / k as f64).sum()
}

/// Ball carving: a uniform radius in `[Δ/4, Δ/2]`, centers in random order,
/// each point joins the first center whose ball holds it.
pub fn padded_decomposition(dist: &Matrix, delta: f64, seed: u64) -> Result<PaddedPartition> {
    check_metric(dist)?;
    if !(delta > 0.0) {
        return Err(Error::OutOfRange(format!(
            "scale Δ = {delta} must be positive"
        )));
    }
    Ok(carve(dist, delta, seed))
}

fn carve(dist: &Matrix, delta: f64, seed: u64) -> PaddedPartition {
    let n = dist.rows();
    let mut rng = rng::stream(seed, 0);
    let radius = delta * rng.gen_range(0.25..=0.5);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut taken = vec![false; n];
    let mut blocks = Vec::new();
    for &c in &order {
        let block: Vec<usize> = (0..n)
            .filter(|&u| !taken[u] && dist[(c, u)] <= radius)
            .collect();
        if block.is_empty() {
            continue;
        }
        for &u in &block {
            taken[u] = true;
        }
        blocks.push(block);
    }
    blocks.sort();
    PaddedPartition {
        blocks,
        scale: delta,
        beta: 10.0 * harmonic(n),
        radius,
        seed,
    }
}

/// Per point, the fraction of `draws` decompositions in which the ball of
/// the given radius stays inside the point's block.
pub fn padding_frequency(
    dist: &Matrix,
    delta: f64,
    radius: f64,
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_metric(dist)?;
    let n = dist.rows();
    let mut hits = vec![0usize; n];
    for k in 0..draws {
        let p = carve(dist, delta, rng::split(seed, k as u64));
        let of = p.block_of(n);
        for u in 0..n {
            if (0..n).all(|v| dist[(u, v)] > radius || of[v] == of[u]) {
                hits[u] += 1;
            }
        }
    }
    Ok(hits
        .iter()
        .map(|&h| h as f64 / draws.max(1) as f64)
        .collect())
}

/// Shortest paths in `g` where edge `uv` has length `‖X_u − X_v‖²`.
pub fn embedding_metric(g: &Graph, sol: &VectorSolution) -> Result<Matrix> {
    let n = g.n();
    if sol.n() != n {
        return Err(Error::Dimension(format!(
            "{} vectors for {n} vertices",
            sol.n()
        )));
    }
    let mut d = Matrix::from_diag(&vec![0.0; n]);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[(i, j)] = if g.weight(i, j) > 0.0 {
                    sol.distance(i, j)
                } else {
                    f64::INFINITY
                };
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[(i, k)];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dik + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    Ok(d)
}

#[derive(Debug, Clone)]
pub struct GenusOptions {
    /// Δ as a multiple of `(ε/2)·Σ‖X_u‖²/n`.
    pub scale_factor: f64,
    pub draws: usize,
}

impl Default for GenusOptions {
    fn default() -> Self {
        Self {
            scale_factor: 1.0,
            draws: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmallSetSearch {
    pub best: Option<CutResult>,
    pub scale: f64,
    /// Mean over draws of the capacity cut by the eroded sets.
    pub mean_capacity: f64,
    pub capacity_sigma: f64,
    /// `(β/Δ)·Σ C_uv‖X_u − X_v‖²`.
    pub capacity_bound: f64,
    /// Mean over draws of `Σ |T̂|`.
    pub mean_eroded: f64,
    pub draws: usize,
}

/// Draws padded decompositions of the embedding metric at scale Δ, erodes
/// each block of at most `n/r` points by a uniform `τ ∈ [0, Δ/β]`, and keeps
/// the sparsest eroded set.
pub fn padded_small_set(
    g: &Graph,
    sol: &VectorSolution,
    r: usize,
    eps: f64,
    beta_pad: f64,
    seed: u64,
    opts: &GenusOptions,
) -> Result<SmallSetSearch> {
    let n = g.n();
    if r == 0 || !(eps > 0.0 && eps < 1.0) || !(beta_pad >= 1.0) {
        return Err(Error::OutOfRange(format!(
            "need r ≥ 1, ε ∈ (0, 1), β ≥ 1; got r = {r}, ε = {eps}, β = {beta_pad}"
        )));
    }
    let d = embedding_metric(g, sol)?;
    let mass: f64 = sol
        .vectors
        .iter()
        .map(|v| v.iter().map(|a| a * a).sum::<f64>())
        .sum();
    let scale = opts.scale_factor * (eps / 2.0) * mass / n as f64;
    if !(scale > 0.0) {
        return Err(Error::Degenerate("all vectors are zero".into()));
    }
    let limit = n as f64 / r as f64;
    let capacity_bound = (beta_pad / scale)
        * g.edges()
            .iter()
            .map(|&(u, v, w)| w * sol.distance(u, v))
            .sum::<f64>();
    let mut best: Option<CutResult> = None;
    let (mut cap_sum, mut cap_sq, mut eroded_sum) = (0.0, 0.0, 0.0);
    for k in 0..opts.draws {
        let sub = rng::split(seed, k as u64);
        let p = carve(&d, scale, sub);
        let tau = rng::stream(sub, 1).gen_range(0.0..=scale / beta_pad);
        let of = p.block_of(n);
        let mut region = vec![usize::MAX; n];
        for (b, block) in p.blocks.iter().enumerate() {
            if block.len() as f64 > limit {
                continue;
            }
            let hat: Vec<usize> = block
                .iter()
                .copied()
                .filter(|&u| (0..n).all(|v| d[(u, v)] > tau || of[v] == b))
                .collect();
            for &u in &hat {
                region[u] = b;
            }
            eroded_sum += hat.len() as f64;
            if !hat.is_empty() && hat.len() < n {
                keep_better(n, &mut best, g.cut_quality(&hat)?);
            }
        }
        let cut: f64 = g
            .edges()
            .iter()
            .filter(|&&(u, v, _)| region[u] != region[v])
            .map(|&(_, _, w)| w)
            .sum();
        cap_sum += cut;
        cap_sq += cut * cut;
    }
    let t = opts.draws.max(1) as f64;
    let mean = cap_sum / t;
    let var = (cap_sq / t - mean * mean).max(0.0);
    Ok(SmallSetSearch {
        best: best.map(|b| g.cut_quality(&b.set)).transpose()?,
        scale,
        mean_capacity: mean,
        capacity_sigma: (var / t).sqrt(),
        capacity_bound,
        mean_eroded: eroded_sum / t,
        draws: opts.draws,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenusRound {
    pub outcome: RoundOutcome,
    pub phi_sdp: f64,
    pub beta_pad: f64,
    pub search: Option<SmallSetSearch>,
}

/// Column-selection rounding when it reaches `(1+ε)·φ_SDP`, otherwise the
/// padded small-set search. In the small-set branch `kappa` is the measured
/// `sparsity / (β/ε² · φ_SDP)`.
pub fn genus_round(
    g: &Graph,
    sol: &VectorSolution,
    r: usize,
    eps: f64,
    beta_pad: f64,
    seed: u64,
    opts: &GenusOptions,
) -> Result<GenusRound> {
    let phi_sdp = sol.objective;
    match gs_round(g, sol, r, eps, seed) {
        Ok(rep) if rep.sparsity <= (1.0 + eps) * phi_sdp + CONTRACT_TOL => {
            return Ok(GenusRound {
                outcome: RoundOutcome::Cut {
                    cut: rep.best_cut,
                    via: "columns".into(),
                    gamma: rep.gamma,
                },
                phi_sdp,
                beta_pad,
                search: None,
            })
        }
        Ok(_) | Err(Error::ContractViolation(_)) => {}
        Err(e) => return Err(e),
    }
    let search = padded_small_set(g, sol, r, eps, beta_pad, seed, opts)?;
    let set = search.best.clone().ok_or_else(|| {
        Error::Inconclusive(format!(
            "no eroded set of at most n/r points in {} draws at scale {:.3e}",
            search.draws, search.scale
        ))
    })?;
    let scale = beta_pad / (eps * eps) * phi_sdp;
    Ok(GenusRound {
        outcome: RoundOutcome::SmallSet {
            kappa: if scale > 0.0 {
                set.sparsity / scale
            } else {
                f64::INFINITY
            },
            set,
            size_limit: g.n() as f64 / r as f64,
        },
        phi_sdp,
        beta_pad,
        search: Some(search),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedBlock {
    pub set: Vec<usize>,
    /// Vertex of the seed set with the smallest eccentricity in the block.
    pub center: usize,
    /// That eccentricity.
    pub radius: f64,
    /// Growth radius around the seed set.
    pub growth: f64,
    pub boundary: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionOracleState {
    pub n: usize,
    pub remaining: Vec<usize>,
    pub blocks: Vec<RemovedBlock>,
    pub boundary_capacity: f64,
    /// `nα / (20Δ·ln 30r)`.
    pub capacity_cap: f64,
    pub d0: f64,
    /// `D₀ / (Δ·ln 30r·ln(rW/nα))`, when the last factor is positive.
    pub constant: Option<f64>,
    pub total_volume: f64,
    pub f_r: f64,
    weights: Vec<Vec<(usize, f64, f64)>>,
}

/// Sets up the oracle. `lengths[(u, v)]` is the length of edge `uv`.
/// `D₀ = 40·(W/nα)·ln(2F)·Δ·ln 30r`, which makes the capacity cap hold for
/// every sequence of removals.
pub fn region_oracle_init(
    g: &Graph,
    lengths: &Matrix,
    r: usize,
    f_r: f64,
    alpha: f64,
    delta: f64,
) -> Result<RegionOracleState> {
    let n = g.n();
    if lengths.rows() != n || lengths.cols() != n {
        return Err(Error::Dimension(format!(
            "{}×{} lengths for {n} vertices",
            lengths.rows(),
            lengths.cols()
        )));
    }
    if r == 0 || !(f_r >= 1.0) || !(alpha > 0.0) || !(delta > 0.0) {
        return Err(Error::OutOfRange(format!(
            "need r ≥ 1, F ≥ 1, α > 0, Δ > 0; got r = {r}, F = {f_r}, α = {alpha}, Δ = {delta}"
        )));
    }
    let mut weights = vec![Vec::new(); n];
    let mut total = 0.0;
    for (u, v, c) in g.edges() {
        let w = lengths[(u, v)];
        if !(w >= 0.0) || (w - lengths[(v, u)]).abs() > 1e-12 * (1.0 + w) {
            return Err(Error::OutOfRange(format!(
                "bad length {w} on edge ({u}, {v})"
            )));
        }
        weights[u].push((v, c, w));
        weights[v].push((u, c, w));
        total += c * w;
    }
    let log30r = (30.0 * r as f64).ln();
    let x = total / (n as f64 * alpha);
    let d0 = 40.0 * x * (2.0 * f_r).ln() * delta * log30r;
    let inner = (r as f64 * x).ln();
    Ok(RegionOracleState {
        n,
        remaining: (0..n).collect(),
        blocks: Vec::new(),
        boundary_capacity: 0.0,
        capacity_cap: n as f64 * alpha / (20.0 * delta * log30r),
        d0,
        constant: (inner > 0.0).then(|| d0 / (delta * log30r * inner)),
        total_volume: total,
        f_r,
        weights,
    })
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn dijkstra(st: &RegionOracleState, alive: &[bool], sources: &[usize]) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; st.n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        d[s] = 0.0;
        heap.push(Item(0.0, s));
    }
    while let Some(Item(du, u)) = heap.pop() {
        if du > d[u] {
            continue;
        }
        for &(v, _, w) in &st.weights[u] {
            if alive[v] && du + w < d[v] {
                d[v] = du + w;
                heap.push(Item(d[v], v));
            }
        }
    }
    d
}

/// Grows a region around `s` inside the remaining vertices and removes it.
/// Region volume is `|S|·W/n` plus the length-weighted capacity covered;
/// the radius is the first one, up to `D₀`, whose boundary capacity is at
/// most `ln(V(D₀)/V₀)/D₀` times the volume.
pub fn region_oracle_remove(
    mut st: RegionOracleState,
    s: &[usize],
) -> Result<(Vec<usize>, RegionOracleState)> {
    let n = st.n;
    let mut alive = vec![false; n];
    for &u in &st.remaining {
        alive[u] = true;
    }
    let mut seed = s.to_vec();
    seed.sort_unstable();
    seed.dedup();
    if seed.is_empty() || (seed.len() as f64) < n as f64 / st.f_r - 1e-9 {
        return Err(Error::OutOfRange(format!(
            "seed set of size {} is below n/F = {:.3}",
            seed.len(),
            n as f64 / st.f_r
        )));
    }
    if let Some(&u) = seed.iter().find(|&&u| u >= n || !alive[u]) {
        return Err(Error::OutOfRange(format!(
            "vertex {u} is not in the remaining set"
        )));
    }
    let d = dijkstra(&st, &alive, &seed);
    let v0 = seed.len() as f64 * st.total_volume / n as f64;
    // volume and boundary of the ball {d ≤ b}, evaluated at radius e ≥ b
    let measure = |b: f64, e: f64| {
        let (mut vol, mut cut) = (v0, 0.0);
        for u in 0..n {
            if !alive[u] || d[u] > b {
                continue;
            }
            for &(v, c, w) in &st.weights[u] {
                if !alive[v] {
                    continue;
                }
                if d[v] <= b {
                    vol += 0.5 * c * w;
                } else {
                    vol += c * (e - d[u]).min(w).max(0.0);
                    cut += c;
                }
            }
        }
        (vol, cut)
    };
    let mut breaks: Vec<f64> = (0..n)
        .filter(|&u| alive[u] && d[u] <= st.d0)
        .map(|u| d[u])
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut growth = 0.0;
    if st.d0 > 0.0 {
        let (v_top, _) = measure(st.d0, st.d0);
        let kappa = (v_top / v0).ln() / st.d0;
        let mut fallback = (f64::INFINITY, 0.0);
        let mut chosen = None;
        for (k, &b) in breaks.iter().enumerate() {
            let e = breaks.get(k + 1).copied().unwrap_or(st.d0).min(st.d0);
            let (vol, cut) = measure(b, e);
            if cut <= kappa * vol * (1.0 + 1e-12) {
                chosen = Some(b);
                break;
            }
            if cut / vol < fallback.0 {
                fallback = (cut / vol, b);
            }
        }
        growth = chosen.unwrap_or(fallback.1);
    }
    let block: Vec<usize> = (0..n).filter(|&u| alive[u] && d[u] <= growth).collect();
    let inside = crate::graph::mask(n, &block);
    let boundary: f64 = block
        .iter()
        .flat_map(|&u| st.weights[u].iter().map(move |&(v, c, _)| (v, c)))
        .filter(|&(v, _)| alive[v] && !inside[v])
        .map(|(_, c)| c)
        .sum();
    let within: Vec<bool> = (0..n).map(|u| inside[u]).collect();
    let (center, radius) = seed
        .iter()
        .map(|&c| {
            let dc = dijkstra(&st, &within, &[c]);
            (c, block.iter().map(|&u| dc[u]).fold(0.0, f64::max))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("seed is nonempty");
    st.boundary_capacity += boundary;
    st.remaining.retain(|&u| !inside[u]);
    st.blocks.push(RemovedBlock {
        set: block.clone(),
        center,
        radius,
        growth,
        boundary,
    });
    if st.boundary_capacity > st.capacity_cap * (1.0 + 1e-9) {
        return Err(Error::ContractViolation(format!(
            "boundary capacity {} exceeds nα/(20Δ ln 30r) = {}",
            st.boundary_capacity, st.capacity_cap
        )));
    }
    Ok((block, st))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{solve_embedding_sweep, SolverOptions};
    use crate::generators::{complete, disjoint_union, grid};
    use crate::oracle::{brute_small_set, brute_sparsest};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn euclid(points: &[(f64, f64)]) -> Matrix {
        let n = points.len();
        let mut d = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                d[(i, j)] = ((points[i].0 - points[j].0).powi(2)
                    + (points[i].1 - points[j].1).powi(2))
                .sqrt();
            }
        }
        d
    }

    fn diameter(d: &Matrix, block: &[usize]) -> f64 {
        block
            .iter()
            .flat_map(|&a| block.iter().map(move |&b| d[(a, b)]))
            .fold(0.0, f64::max)
    }

    #[test]
    fn single_point() {
        let p = padded_decomposition(&Matrix::zeros(1, 1), 1.0, 0).unwrap();
        assert_eq!(p.blocks, vec![vec![0]]);
    }

    #[test]
    fn far_clusters_never_mix() {
        let mut d = Matrix::zeros(6, 6);
        for i in 0..6 {
            for j in 0..6 {
                if (i < 3) != (j < 3) {
                    d[(i, j)] = 5.0;
                }
            }
        }
        for seed in 0..100 {
            let p = padded_decomposition(&d, 1.0, seed).unwrap();
            assert_eq!(p.blocks, vec![vec![0, 1, 2], vec![3, 4, 5]]);
        }
    }

    #[test]
    fn uniform_metric_padding() {
        let delta = 1.0;
        let mut d = Matrix::zeros(16, 16);
        for i in 0..16 {
            for j in 0..16 {
                if i != j {
                    d[(i, j)] = delta / 2.0;
                }
            }
        }
        let beta = padded_decomposition(&d, delta, 0).unwrap().beta;
        let draws = 10_000;
        let freq = padding_frequency(&d, delta, delta / beta, draws, 1).unwrap();
        let sigma = (0.125 * 0.875 / draws as f64).sqrt();
        assert!(freq.iter().all(|&f| f >= 0.125 - 3.0 * sigma));
    }

    #[test]
    fn rejects_non_metric() {
        let mut d = Matrix::zeros(3, 3);
        for (i, j, v) in [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)] {
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
        assert!(matches!(
            padded_decomposition(&d, 1.0, 0),
            Err(Error::NotMetric(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn blocks_cover_and_respect_diameter(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..15);
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0))).collect();
            let d = euclid(&pts);
            let delta = rng.gen_range(0.2..2.0);
            let p = padded_decomposition(&d, delta, seed).unwrap();
            let mut seen = vec![0; n];
            for b in &p.blocks {
                prop_assert!(diameter(&d, b) <= delta + 1e-9);
                for &u in b { seen[u] += 1; }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }

        #[test]
        fn padding_holds_statistically(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..12);
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0))).collect();
            let d = euclid(&pts);
            let delta = rng.gen_range(0.2..2.0);
            let beta = 10.0 * harmonic(n);
            let draws = 2000;
            let freq = padding_frequency(&d, delta, delta / beta, draws, seed).unwrap();
            let sigma = (0.125 * 0.875 / draws as f64).sqrt();
            prop_assert!(freq.iter().all(|&f| f >= 0.125 - 3.0 * sigma), "{:?}", freq);
        }
    }

    #[test]
    fn genus_round_on_grid() {
        let g = grid(4, 4).normalize_regular().unwrap().graph;
        let sol = solve_embedding_sweep(&g, &SolverOptions::default())
            .unwrap()
            .solution;
        let eps = 0.5;
        let out = genus_round(&g, &sol, 4, eps, 3.0, 7, &GenusOptions::default()).unwrap();
        match out.outcome {
            RoundOutcome::Cut { cut, .. } => {
                assert!(cut.sparsity <= (1.0 + eps) * out.phi_sdp + 1e-6);
                assert!(cut.sparsity >= brute_sparsest(&g).unwrap().sparsity - 1e-9);
            }
            RoundOutcome::SmallSet { set, .. } => {
                assert!(set.size() <= 4);
                assert!(set.sparsity >= brute_small_set(&g, 4.0).unwrap().phi_r - 1e-9);
            }
        }
    }

    #[test]
    fn genus_round_disconnected() {
        let g = disjoint_union(&complete(3), &complete(3));
        let sol = VectorSolution::integral(&g, &[0, 1, 2]).unwrap();
        let out = genus_round(&g, &sol, 2, 0.5, 3.0, 1, &GenusOptions::default()).unwrap();
        match out.outcome {
            RoundOutcome::Cut { cut, .. } => assert_eq!(cut.sparsity, 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn orthonormal_solution_gives_small_sets() {
        let n = 8;
        let g = complete(n).normalize_regular().unwrap().graph;
        let vectors: Vec<Vec<f64>> = (0..n)
            .map(|u| (0..n).map(|k| f64::from(u8::from(k == u))).collect())
            .collect();
        let sol = VectorSolution::from_vectors(&g, vectors, 0.5).unwrap();
        let s = padded_small_set(&g, &sol, 2, 0.5, 3.0, 11, &GenusOptions::default()).unwrap();
        let best = s.best.unwrap();
        assert!(best.size() <= n / 2);
        assert!(s.mean_capacity <= s.capacity_bound + 3.0 * s.capacity_sigma);
        assert!(s.mean_eroded > 0.0);
        assert_eq!(best.sparsity, g.cut_quality(&best.set).unwrap().sparsity);
    }

    fn lengths_from(g: &Graph, f: impl Fn(usize, usize) -> f64) -> Matrix {
        let n = g.n();
        let mut m = Matrix::zeros(n, n);
        for (u, v, _) in g.edges() {
            m[(u, v)] = f(u, v);
            m[(v, u)] = f(u, v);
        }
        m
    }

    #[test]
    fn oracle_whole_remaining_set() {
        let g = complete(5);
        let st = region_oracle_init(&g, &lengths_from(&g, |_, _| 1.0), 2, 2.0, 1.0, 1.0).unwrap();
        let (block, st) = region_oracle_remove(st, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(block, vec![0, 1, 2, 3, 4]);
        assert_eq!(st.blocks[0].boundary, 0.0);
        assert!(st.remaining.is_empty());
    }

    #[test]
    fn oracle_far_clusters() {
        let mut e = disjoint_union(&complete(4), &complete(4)).edges();
        e.push((3, 4, 1.0));
        let g = Graph::from_edges(8, &e).unwrap();
        let len = lengths_from(&g, |u, v| if (u < 4) != (v < 4) { 1e6 } else { 1.0 });
        let st = region_oracle_init(&g, &len, 2, 2.0, 1e7, 1.0).unwrap();
        assert!(st.d0 < 1e6);
        let (block, st) = region_oracle_remove(st, &[0, 1, 2, 3]).unwrap();
        assert_eq!(block, vec![0, 1, 2, 3]);
        assert_eq!(st.blocks[0].boundary, 1.0);
        assert!(region_oracle_remove(st.clone(), &[0, 4, 5, 6]).is_err());
        assert!(region_oracle_remove(st, &[4]).is_err());
    }

    #[test]
    fn oracle_random_removals() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 20;
            let mut e: Vec<(usize, usize, f64)> = (1..n)
                .map(|v| (rng.gen_range(0..v), v, rng.gen_range(0.2..2.0)))
                .collect();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.2) && !e.iter().any(|x| (x.0, x.1) == (u, v)) {
                        e.push((u, v, rng.gen_range(0.2..2.0)));
                    }
                }
            }
            let g = Graph::from_edges(n, &e).unwrap();
            let lens = lengths_from(&g, |u, v| 0.1 + ((u * 7 + v * 13) % 10) as f64 / 10.0);
            let mut st =
                region_oracle_init(&g, &lens, 3, 5.0, rng.gen_range(0.5..4.0), 1.0).unwrap();
            while st.remaining.len() >= 4 {
                let mut pool = st.remaining.clone();
                pool.shuffle(&mut rng);
                let seed_set: Vec<usize> = pool[..4].to_vec();
                let before = st.remaining.clone();
                let (block, next) = region_oracle_remove(st, &seed_set).unwrap();
                assert!(seed_set.iter().all(|u| block.contains(u)));
                assert!(block.iter().all(|u| before.contains(u)));
                assert!(next.remaining.iter().all(|u| !block.contains(u)));
                assert!(next.boundary_capacity <= next.capacity_cap + 1e-9);
                assert!(next.blocks.last().unwrap().growth <= next.d0);
                st = next;
            }
        }
    }
}
