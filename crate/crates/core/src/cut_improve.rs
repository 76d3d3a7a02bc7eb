//! Eigenspace enumeration and max-flow cut improvement, driven by a spectral
//! SSE flow.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{better_cut, canonical_side, CutResult, Graph};
use crate::linalg::{eigenvalues, eigh, Matrix};
use crate::lp::{max_flow, FlowNetwork};
use crate::sse_flow::{MultiFlow, SpectralCertificate};

pub const DEFAULT_NET_RESOLUTION: f64 = 0.25;
pub const DEFAULT_CANDIDATE_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Enumeration {
    /// Distinct threshold sets, each as a sorted member list.
    pub candidates: Vec<Vec<usize>>,
    /// Number of net directions swept.
    pub directions: usize,
    pub lambda_r: f64,
    /// Whether `λ_r ≥ 20Φ/ε`, the regime where closeness is promised.
    pub hypothesis: bool,
    /// `8Φ/λ_r`, the promised relative distance to a low-expansion set.
    pub radius: f64,
}

/// Points of the grid `{−1, −1+h, …, 1}^r` with `h = resolution`, minus the
/// origin. Normalized, they form a net of the unit sphere.
fn net(r: usize, resolution: f64) -> Vec<Vec<f64>> {
    let steps = (2.0 / resolution).round() as usize;
    let total = (steps + 1).pow(r as u32);
    let mut out = Vec::with_capacity(total);
    for code in 0..total {
        let mut c = code;
        let mut v = Vec::with_capacity(r);
        for _ in 0..r {
            v.push(-1.0 + (c % (steps + 1)) as f64 * resolution);
            c /= steps + 1;
        }
        if v.iter().any(|x| x.abs() > 1e-12) {
            out.push(v);
        }
    }
    out
}

/// Threshold sets of every net direction in the span of the `r` bottom
/// eigenvectors of `l`. `phi` and `eps` only set the reported hypothesis
/// and radius.
pub fn eigenspace_enumerate(
    l: &Matrix,
    r: usize,
    phi: f64,
    eps: f64,
    resolution: f64,
    cap: usize,
) -> Result<Enumeration> {
    let n = l.rows();
    if r == 0 || r > n {
        return Err(Error::OutOfRange(format!("r = {r} must lie in 1..={n}")));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::OutOfRange(format!(
            "net resolution {resolution} must lie in (0, 1]"
        )));
    }
    let eig = eigh(l)?;
    let lambda_r = eig.values[r - 1];
    if lambda_r <= 1e-9 {
        return Err(Error::Degenerate(format!("λ_{r} = {lambda_r:e}")));
    }
    let steps = (2.0 / resolution).round() as usize;
    let directions = (steps + 1).saturating_pow(r as u32);
    if directions.saturating_mul(n) > cap {
        return Err(Error::OutOfRange(format!(
            "{directions} directions × {n} thresholds exceed the candidate cap {cap}"
        )));
    }
    let basis: Vec<Vec<f64>> = (0..r).map(|k| eig.vector(k)).collect();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut count = 0;
    for c in net(r, resolution) {
        count += 1;
        let x: Vec<f64> = (0..n)
            .map(|u| (0..r).map(|k| c[k] * basis[k][u]).sum())
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
        for k in 0..n - 1 {
            if x[order[k]] - x[order[k + 1]] <= 1e-12 {
                continue;
            }
            let mut set = order[..=k].to_vec();
            set.sort_unstable();
            seen.insert(set);
        }
    }
    Ok(Enumeration {
        candidates: seen.into_iter().collect(),
        directions: count,
        lambda_r,
        hypothesis: lambda_r >= 20.0 * phi / eps,
        radius: 8.0 * phi / lambda_r,
    })
}

/// Sink side `Q` of the minimum cut in `g` augmented with terminal edges of
/// capacity `4φ/δ`: `T → sink` and `source → V∖T`.
pub fn improve_cut(g: &Graph, t: &[usize], phi_guess: f64, delta: f64) -> Result<CutResult> {
    let n = g.n();
    let inside = crate::graph::mask(n, t);
    let size = inside.iter().filter(|&&b| b).count();
    if size == 0 || size == n || t.iter().any(|&v| v >= n) {
        return Err(Error::TrivialSet { size, n });
    }
    if !(phi_guess > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!(
            "need φ > 0 and δ ∈ (0, 1), got φ = {phi_guess}, δ = {delta}"
        )));
    }
    let cap = 4.0 * phi_guess / delta;
    let (s, sink) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2, s, sink);
    for (u, v, w) in g.edges() {
        net.add_arc(u, v, w);
        net.add_arc(v, u, w);
    }
    for v in 0..n {
        if inside[v] {
            net.add_arc(v, sink, cap);
        } else {
            net.add_arc(s, v, cap);
        }
    }
    let mf = max_flow(&net)?;
    let source_side = crate::graph::mask(n + 2, &mf.cut);
    let q: Vec<usize> = (0..n).filter(|&v| !source_side[v]).collect();
    if q.is_empty() || q.len() == n {
        return Err(Error::Degenerate(
            "minimum cut leaves one side empty".into(),
        ));
    }
    g.cut_quality(&q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundMode {
    Sparsest,
    Expansion,
    /// Both sides at least `⌈c·n/2⌉`, scored by expansion.
    Balanced(f64),
}

impl RoundMode {
    fn delta(self, eps: f64) -> f64 {
        match self {
            RoundMode::Sparsest => eps,
            RoundMode::Expansion => 0.5,
            RoundMode::Balanced(c) => c / 2.0,
        }
    }

    fn admits(self, n: usize, cut: &CutResult) -> bool {
        match self {
            RoundMode::Balanced(c) => {
                let need = ((c * n as f64 / 2.0) - 1e-9).ceil() as usize;
                cut.size().min(n - cut.size()) >= need
            }
            _ => true,
        }
    }

    fn better(self, n: usize, a: &CutResult, b: &CutResult) -> bool {
        match self {
            RoundMode::Sparsest => better_cut(n, a, b),
            _ => {
                if (a.expansion - b.expansion).abs() > 1e-12 {
                    a.expansion < b.expansion
                } else {
                    let (ca, cb) = (canonical_side(n, &a.set), canonical_side(n, &b.set));
                    (ca.len(), &ca) < (cb.len(), &cb)
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowRoundOptions {
    pub net_resolution: f64,
    pub candidate_cap: usize,
}

impl Default for FlowRoundOptions {
    fn default() -> Self {
        Self {
            net_resolution: DEFAULT_NET_RESOLUTION,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
        }
    }
}

/// Enumerates eigenspace candidates of `L(F)` for the certified flow and
/// improves each by max-flow over a `(1+ε)`-geometric grid of expansion
/// guesses, from half the spectral gap of `g` up to its largest degree.
pub fn flow_round(
    g: &Graph,
    cert: &SpectralCertificate,
    eps: f64,
    mode: RoundMode,
    opts: &FlowRoundOptions,
) -> Result<CutResult> {
    let n = g.n();
    if !cert.holds() {
        return Err(Error::InvalidFlow("certificate does not hold".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(format!("eps = {eps} must lie in (0, 1)")));
    }
    if let RoundMode::Balanced(c) = mode {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::OutOfRange(format!(
                "balance c = {c} must lie in (0, 1]"
            )));
        }
    }
    let comps = g.components();
    if comps.len() > 1 {
        let mut best: Option<CutResult> = None;
        for comp in &comps {
            let cut = g.cut_quality(comp)?;
            if mode.admits(n, &cut) && best.as_ref().map_or(true, |b| mode.better(n, &cut, b)) {
                best = Some(cut);
            }
        }
        if let Some(b) = best {
            return Ok(b);
        }
    }
    let flow_json = cert
        .flow
        .as_ref()
        .ok_or_else(|| Error::InvalidFlow("certificate carries no flow".into()))?;
    let flow = MultiFlow::from_json(n, flow_json)?;
    let lf = flow.laplacian();
    let measured = eigenvalues(&lf)?[cert.r - 1];
    if (measured - cert.lambda_measured).abs() > 1e-7 * (1.0 + measured.abs()) {
        return Err(Error::InvalidFlow(format!(
            "certificate records λ = {}, flow has {measured}",
            cert.lambda_measured
        )));
    }
    let gap = eigenvalues(&g.laplacian())?[1];
    let top = g.degrees().iter().cloned().fold(0.0, f64::max);
    let lo = (gap / 2.0).max(1e-6 * top);
    let mut guesses = Vec::new();
    let mut phi = lo;
    while phi <= top * (1.0 + eps) {
        guesses.push(phi);
        phi *= 1.0 + eps;
    }
    let en = eigenspace_enumerate(
        &lf,
        cert.r,
        lo,
        eps,
        opts.net_resolution,
        opts.candidate_cap,
    )?;
    let delta = mode.delta(eps);
    let mut best: Option<CutResult> = None;
    let offer = |cut: CutResult, best: &mut Option<CutResult>| {
        if mode.admits(n, &cut) && best.as_ref().map_or(true, |b| mode.better(n, &cut, b)) {
            *best = Some(cut);
        }
    };
    for t in &en.candidates {
        offer(g.cut_quality(t)?, &mut best);
        for &phi in &guesses {
            match improve_cut(g, t, phi, delta) {
                Ok(q) => offer(q, &mut best),
                Err(Error::Degenerate(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let best =
        best.ok_or_else(|| Error::Inconclusive("no candidate met the balance requirement".into()))?;
    let mut cut = g.cut_quality(&best.set)?;
    cut.set = canonical_side(n, &cut.set);
    Ok(cut)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{barbell, complete, cycle, disjoint_union};
    use crate::oracle::{brute_balanced, brute_sparsest};
    use crate::sse_flow::{construct_spectral_flow, verify_spectral, ConstructOptions};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn norm(g: Graph) -> Graph {
        g.normalize_regular().unwrap().graph
    }

    fn bridged_triangles() -> Graph {
        let mut e = disjoint_union(&complete(3), &complete(3)).edges();
        e.push((2, 3, 1.0));
        Graph::from_edges(6, &e).unwrap()
    }

    /// Two K6 joined through a middle vertex.
    fn barbell13() -> Graph {
        let mut e = disjoint_union(&complete(6), &complete(6)).edges();
        e.push((5, 12, 1.0));
        e.push((12, 6, 1.0));
        norm(Graph::from_edges(13, &e).unwrap())
    }

    fn hamming(n: usize, a: &[usize], b: &[usize]) -> usize {
        let (ma, mb) = (crate::graph::mask(n, a), crate::graph::mask(n, b));
        (0..n).filter(|&i| ma[i] != mb[i]).count()
    }

    #[test]
    fn enumerate_finds_components() {
        let g = disjoint_union(&complete(3), &complete(3));
        let en =
            eigenspace_enumerate(&g.laplacian(), 3, 0.0, 0.5, 0.25, DEFAULT_CANDIDATE_CAP).unwrap();
        assert!(en.candidates.contains(&vec![0, 1, 2]));
        assert!(en.candidates.contains(&vec![3, 4, 5]));
        assert!(matches!(
            eigenspace_enumerate(&g.laplacian(), 2, 0.0, 0.5, 0.25, DEFAULT_CANDIDATE_CAP),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn enumerate_vacuous_on_complete() {
        let g = norm(complete(6));
        let eps = 0.5;
        let en =
            eigenspace_enumerate(&g.laplacian(), 2, 0.0, eps, 0.25, DEFAULT_CANDIDATE_CAP).unwrap();
        assert!((en.lambda_r - 1.2).abs() < 1e-9);
        assert!(en.directions <= 81 && en.candidates.len() <= 81 * 5);
        // no set qualifies as planted
        for mask in 1u32..63 {
            let set = crate::oracle::mask_members(mask);
            assert!(g.cut_quality(&set).unwrap().expansion > eps * en.lambda_r / 20.0);
        }
    }

    #[test]
    fn enumerate_barbell_contract() {
        let g = norm(barbell(6));
        let s: Vec<usize> = (0..6).collect();
        let phi = g.cut_quality(&s).unwrap().expansion;
        let en =
            eigenspace_enumerate(&g.laplacian(), 2, phi, 0.5, 0.25, DEFAULT_CANDIDATE_CAP).unwrap();
        let best = en
            .candidates
            .iter()
            .map(|c| hamming(12, c, &s))
            .min()
            .unwrap();
        assert!(best as f64 / 6.0 <= 8.0 * phi / en.lambda_r);
        assert_eq!(best, 0);
    }

    #[test]
    fn candidate_cap() {
        let g = norm(cycle(10));
        assert!(matches!(
            eigenspace_enumerate(&g.laplacian(), 4, 0.1, 0.5, 0.25, 1000),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn improve_exact_triangle() {
        let g = bridged_triangles();
        let q = improve_cut(&g, &[0, 1, 2], 1.0 / 3.0, 0.5).unwrap();
        assert_eq!(q.set, vec![0, 1, 2]);
        assert!((q.expansion - 1.0 / 3.0).abs() < 1e-12);
        assert!(improve_cut(&g, &[], 0.3, 0.5).is_err());
        assert!(improve_cut(&g, &[0], 0.3, 1.5).is_err());
    }

    #[test]
    fn improve_recovers_flipped_vertex() {
        let g = barbell13();
        let s: Vec<usize> = (0..6).collect();
        let phi = g.cut_quality(&s).unwrap().expansion;
        // the enumerated optimum among sets of size at most 6 is S itself
        let opt = crate::oracle::brute_set_range(&g, 1, 6).unwrap();
        assert_eq!(opt.set, s);
        for t in [(1..6).collect::<Vec<_>>(), (0..6).chain([7]).collect()] {
            let q = improve_cut(&g, &t, phi, 0.5).unwrap();
            assert_eq!(q.set, s);
            assert!(q.expansion <= phi + 1e-12);
        }
    }

    #[test]
    fn flow_round_barbell_sparsest() {
        let g = norm(barbell(6));
        let c = construct_spectral_flow(&g, 1, 1.0, &ConstructOptions::default()).unwrap();
        let cut = flow_round(
            &g,
            &c.certificate,
            0.5,
            RoundMode::Sparsest,
            &FlowRoundOptions::default(),
        )
        .unwrap();
        let opt = brute_sparsest(&g).unwrap();
        assert!((cut.sparsity - opt.sparsity).abs() < 1e-9);
        assert_eq!(cut.set, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn flow_round_balanced_cycle() {
        let g = norm(cycle(12));
        let c = construct_spectral_flow(&g, 1, 1.0, &ConstructOptions::default()).unwrap();
        let eps = 0.5;
        let cut = flow_round(
            &g,
            &c.certificate,
            eps,
            RoundMode::Balanced(0.5),
            &FlowRoundOptions::default(),
        )
        .unwrap();
        assert!(cut.size() >= 3 && cut.size() <= 9);
        let opt = brute_balanced(&g, 0.5).unwrap();
        assert!(cut.expansion <= (1.0 + eps) * opt.expansion + 1e-9);
    }

    #[test]
    fn flow_round_disconnected() {
        let g = disjoint_union(&complete(3), &complete(4));
        let cert = verify_spectral(&MultiFlow::from_graph(&g), 2, 3.0, 0.0).unwrap();
        assert!(cert.valid);
        let cut = flow_round(
            &g,
            &cert,
            0.5,
            RoundMode::Sparsest,
            &FlowRoundOptions::default(),
        )
        .unwrap();
        assert_eq!(cut.sparsity, 0.0);
        assert_eq!(cut.set, vec![0, 1, 2]);
    }

    #[test]
    fn flow_round_rejects_bad_certificate() {
        let g = norm(barbell(4));
        let mut cert = verify_spectral(&MultiFlow::from_graph(&g), 2, 1.0, 0.0).unwrap();
        cert.lambda = 10.0;
        assert!(matches!(
            flow_round(
                &g,
                &cert,
                0.5,
                RoundMode::Sparsest,
                &FlowRoundOptions::default()
            ),
            Err(Error::InvalidFlow(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn improve_never_worse(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(4..12);
            let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|v| (rng.gen_range(0..v), v, 1.0)).collect();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.3) && !edges.iter().any(|e| (e.0, e.1) == (u, v)) {
                        edges.push((u, v, rng.gen_range(0.2..1.0)));
                    }
                }
            }
            let g = norm(Graph::from_edges(n, &edges).unwrap());
            let size = rng.gen_range(1..=n / 2);
            let mut t: Vec<usize> = (0..n).collect();
            for i in 0..size {
                let j = rng.gen_range(i..n);
                t.swap(i, j);
            }
            t.truncate(size);
            let base = g.cut_quality(&t).unwrap().expansion;
            let phi = base * rng.gen_range(1.0..3.0);
            let delta = rng.gen_range(0.05..0.95);
            if let Ok(q) = improve_cut(&g, &t, phi, delta) {
                prop_assert!(q.expansion <= base + 1e-9, "{} > {}", q.expansion, base);
            }
        }
    }
}
