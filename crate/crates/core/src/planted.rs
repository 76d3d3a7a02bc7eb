//! Planted expander instances: two random regular sides joined by sparse
//! cross edges, plus an oracle check of the small-set expansion hypothesis.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CutResult, Graph};
use crate::oracle::{brute_set_range, MAX_N};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub planted_expansion: f64,
    pub planted_sparsity: f64,
    /// Expansion of the induced subgraphs on `S` and `V∖S`, when small
    /// enough to enumerate.
    pub inner_expansion: Option<f64>,
    pub outer_expansion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance {
    /// Normalized to unit degree.
    pub graph: Graph,
    pub planted: Vec<usize>,
    pub rho: f64,
    /// Degree before normalization.
    pub degree: usize,
    pub inner_degree: usize,
    pub cross_edges: usize,
    pub seed: u64,
    pub measured: Measured,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub planted: Vec<usize>,
    pub rho: f64,
}

impl PlantedInstance {
    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            planted: self.planted.clone(),
            rho: self.rho,
        }
    }
}

type EdgeSet = BTreeSet<(usize, usize)>;

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// `d` random perfect matchings on `0..s`, retried until simple.
fn matchings(s: usize, d: usize, rng: &mut ChaCha8Rng) -> Option<EdgeSet> {
    'outer: for _ in 0..200 {
        let mut edges = EdgeSet::new();
        for _ in 0..d {
            let mut perm: Vec<usize> = (0..s).collect();
            perm.shuffle(rng);
            for pair in perm.chunks(2) {
                if !edges.insert(key(pair[0], pair[1])) {
                    continue 'outer;
                }
            }
        }
        return Some(edges);
    }
    None
}

/// Circulant graph on `0..s` with random offsets, randomly relabeled.
fn circulant(s: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<EdgeSet> {
    let mut offsets = Vec::new();
    if d % 2 == 1 {
        offsets.push(s / 2);
    }
    let mut pool: Vec<usize> = (1..=(s - 1) / 2).collect();
    if pool.len() < d / 2 {
        return Err(Error::Infeasible(format!(
            "no {d}-regular circulant on {s} vertices"
        )));
    }
    pool.shuffle(rng);
    offsets.extend_from_slice(&pool[..d / 2]);
    let mut label: Vec<usize> = (0..s).collect();
    label.shuffle(rng);
    let mut edges = EdgeSet::new();
    for i in 0..s {
        for &o in &offsets {
            edges.insert(key(label[i], label[(i + o) % s]));
        }
    }
    Ok(edges)
}

fn regular_side(s: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<EdgeSet> {
    if d >= s || (s * d) % 2 == 1 {
        return Err(Error::Infeasible(format!(
            "no {d}-regular graph on {s} vertices"
        )));
    }
    if d == 0 {
        return Ok(EdgeSet::new());
    }
    if s % 2 == 0 {
        if let Some(e) = matchings(s, d, rng) {
            return Ok(e);
        }
    }
    circulant(s, d, rng)
}

/// Builds the instance. Cross edges come from switches that trade one inner
/// edge on each side for two cross edges, so `cross_edges` must be even. When
/// the sides are equal and `cross_edges` is a multiple of the side size, a
/// circulant bipartite layer is added instead and degrees grow by
/// `cross_edges / side`.
pub fn generate(
    n: usize,
    rho: f64,
    inner_degree: usize,
    cross_edges: usize,
    seed: u64,
) -> Result<PlantedInstance> {
    if !(rho > 0.0 && rho <= 0.5) {
        return Err(Error::OutOfRange(format!(
            "rho = {rho} must lie in (0, 1/2]"
        )));
    }
    let s = ((rho * n as f64) + 1e-9).floor() as usize;
    if s < 2 {
        return Err(Error::OutOfRange(format!("floor(ρn) = {s} is below 2")));
    }
    let t = n - s;
    let mut rng = rng::stream(seed, 0);
    let mut a = regular_side(s, inner_degree, &mut rng)?;
    let b_local = regular_side(t, inner_degree, &mut rng)?;
    let mut b: EdgeSet = b_local.iter().map(|&(u, v)| (u + s, v + s)).collect();
    let mut cross = EdgeSet::new();
    let mut degree = inner_degree;
    if cross_edges > 0 && s == t && cross_edges % s == 0 {
        let c = cross_edges / s;
        let mut offsets: Vec<usize> = (0..s).collect();
        offsets.shuffle(&mut rng);
        for i in 0..s {
            for &o in &offsets[..c] {
                cross.insert((i, s + (i + o) % s));
            }
        }
        degree += c;
    } else if cross_edges > 0 {
        if cross_edges % 2 == 1 {
            return Err(Error::Infeasible(format!(
                "{cross_edges} cross edges cannot keep the graph regular"
            )));
        }
        for _ in 0..cross_edges / 2 {
            switch(&mut a, &mut b, &mut cross, &mut rng)?;
        }
    }
    let edges: Vec<(usize, usize, f64)> = a
        .iter()
        .chain(&b)
        .chain(&cross)
        .map(|&(u, v)| (u, v, 1.0))
        .collect();
    let raw = Graph::from_edges(n, &edges)?;
    if raw.degrees().iter().any(|&x| x != degree as f64) {
        return Err(Error::Infeasible("construction lost regularity".into()));
    }
    let graph = raw.normalize_regular()?.graph;
    let planted: Vec<usize> = (0..s).collect();
    let measured = measure(&graph, &planted)?;
    Ok(PlantedInstance {
        graph,
        planted,
        rho,
        degree,
        inner_degree,
        cross_edges,
        seed,
        measured,
    })
}

/// Replaces inner edges `a1a2` and `b1b2` by cross edges `a1b1`, `a2b2`.
fn switch(
    a: &mut EdgeSet,
    b: &mut EdgeSet,
    cross: &mut EdgeSet,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let la: Vec<_> = a.iter().copied().collect();
    let lb: Vec<_> = b.iter().copied().collect();
    if la.is_empty() || lb.is_empty() {
        return Err(Error::Infeasible("no inner edges left to switch".into()));
    }
    for _ in 0..1000 {
        let (a1, a2) = la[rng.gen_range(0..la.len())];
        let (b1, b2) = lb[rng.gen_range(0..lb.len())];
        let (b1, b2) = if rng.gen() { (b1, b2) } else { (b2, b1) };
        if cross.contains(&(a1, b1)) || cross.contains(&(a2, b2)) {
            continue;
        }
        a.remove(&(a1, a2));
        b.remove(&key(b1, b2));
        cross.insert((a1, b1));
        cross.insert((a2, b2));
        return Ok(());
    }
    Err(Error::Infeasible(
        "could not place cross edges without duplicates".into(),
    ))
}

fn measure(g: &Graph, planted: &[usize]) -> Result<Measured> {
    let n = g.n();
    let cut = g.cut_quality(planted)?;
    let rest: Vec<usize> = (planted.len()..n).collect();
    let inner = |side: &[usize]| -> Result<Option<f64>> {
        if side.len() < 2 || side.len() > MAX_N {
            return Ok(None);
        }
        let h = g.induced(side);
        Ok(Some(brute_set_range(&h, 1, side.len() - 1)?.expansion))
    };
    Ok(Measured {
        planted_expansion: cut.expansion,
        planted_sparsity: cut.sparsity,
        inner_expansion: inner(planted)?,
        outer_expansion: inner(&rest)?,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub passed: bool,
    /// `c·Φ(S)·√(ln n·ln(1/ρε)) / ε^{3/2}`.
    pub threshold: f64,
    /// Smallest expansion over `1 ≤ |T| ≤ ⌊ρn/2⌋`.
    pub min_expansion: f64,
    pub witness: CutResult,
    /// `min_expansion / threshold`.
    pub margin: f64,
    /// False when `Φ(S) = 0` or the threshold exceeds every possible
    /// expansion, so the hypothesis says nothing useful.
    pub interesting: bool,
}

/// Checks by enumeration that every set of at most `ρn/2` vertices expands
/// by at least the threshold.
pub fn check_hypothesis(
    inst: &PlantedInstance,
    eps: f64,
    constant: f64,
) -> Result<HypothesisReport> {
    check_planted(&inst.graph, &inst.planted, inst.rho, eps, constant)
}

/// [`check_hypothesis`] for any graph with a marked set `S` of density `ρ`.
pub fn check_planted(
    g: &Graph,
    planted: &[usize],
    rho: f64,
    eps: f64,
    constant: f64,
) -> Result<HypothesisReport> {
    let n = g.n();
    if n > MAX_N {
        return Err(Error::TooLarge { n, max: MAX_N });
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(format!("eps = {eps} must lie in (0, 1)")));
    }
    if !(rho > 0.0 && rho <= 0.5) {
        return Err(Error::OutOfRange(format!(
            "rho = {rho} must lie in (0, 1/2]"
        )));
    }
    let planted_expansion = g.cut_quality(planted)?.expansion;
    let k = ((rho * n as f64 / 2.0) + 1e-9).floor().max(1.0) as usize;
    let witness = brute_set_range(g, 1, k)?;
    let log_term = ((n as f64).ln() * (1.0 / (rho * eps)).ln()).max(0.0).sqrt();
    let threshold = constant * planted_expansion * log_term / eps.powf(1.5);
    let top = g.degrees().iter().cloned().fold(0.0, f64::max);
    Ok(HypothesisReport {
        passed: witness.expansion >= threshold,
        threshold,
        min_expansion: witness.expansion,
        margin: if threshold > 0.0 {
            witness.expansion / threshold
        } else {
            f64::INFINITY
        },
        interesting: planted_expansion > 0.0 && threshold < top,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_sparsest;
    use proptest::prelude::*;

    #[test]
    fn disconnected_halves() {
        let inst = generate(12, 0.5, 3, 0, 1).unwrap();
        assert_eq!(inst.planted.len(), 6);
        assert_eq!(inst.measured.planted_expansion, 0.0);
        assert_eq!(inst.graph.components().len(), 2);
        let rep = check_hypothesis(&inst, 0.5, 1.0).unwrap();
        assert!(!rep.interesting);
    }

    #[test]
    fn switched_cross_edges() {
        let inst = generate(16, 0.25, 3, 2, 7).unwrap();
        assert_eq!(inst.planted, vec![0, 1, 2, 3]);
        assert_eq!(inst.degree, 3);
        let w = 1.0 / 3.0;
        assert!((inst.measured.planted_expansion - 2.0 * w / 4.0).abs() < 1e-12);
        let direct = inst.graph.cut_weight(&inst.planted) / 4.0;
        assert_eq!(inst.measured.planted_expansion, direct);
        assert!(inst.graph.is_regular());
    }

    #[test]
    fn complete_bipartite_cross() {
        let inst = generate(8, 0.5, 3, 16, 2).unwrap();
        assert_eq!(inst.degree, 7);
        // K8: every cut of four has expansion 16·(1/7)/4
        assert!((inst.measured.planted_expansion - 4.0 / 7.0).abs() < 1e-12);
        let rep = check_hypothesis(&inst, 0.5, 1.0).unwrap();
        assert!(!rep.interesting);
        assert!(
            brute_sparsest(&inst.graph).unwrap().sparsity >= inst.measured.planted_sparsity - 1e-12
        );
    }

    #[test]
    fn strong_sides_pass() {
        let inst = generate(20, 0.5, 9, 2, 3).unwrap();
        let rep = check_hypothesis(&inst, 0.5, 1.0).unwrap();
        assert!(rep.passed && rep.interesting, "{rep:?}");
        assert!(rep.margin > 1.0);
        assert!(inst.measured.inner_expansion.unwrap() > inst.measured.planted_expansion);
    }

    #[test]
    fn infeasible_parameters() {
        assert!(matches!(
            generate(10, 0.5, 3, 0, 0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            generate(16, 0.25, 3, 3, 0),
            Err(Error::Infeasible(_))
        ));
        assert!(generate(16, 0.05, 3, 2, 0).is_err());
        assert!(generate(8, 0.25, 2, 20, 0).is_err());
    }

    #[test]
    fn sidecar_json() {
        let inst = generate(16, 0.25, 3, 2, 7).unwrap();
        let v = serde_json::to_value(inst.sidecar()).unwrap();
        assert_eq!(v["planted"], serde_json::json!([0, 1, 2, 3]));
        assert_eq!(v["rho"], serde_json::json!(0.25));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn regular_and_deterministic(seed in 0u64..10_000, half in 3usize..9, d in 2usize..5, switches in 0usize..3) {
            let n = 2 * half + 2;
            let rho = (half as f64) / n as f64;
            if d >= half { return Ok(()); }
            let a = generate(n, rho, d, 2 * switches, seed);
            let b = generate(n, rho, d, 2 * switches, seed);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(&a, &b);
                    prop_assert_eq!(a.degree, d);
                    prop_assert!(a.graph.degrees().iter().all(|&x| (x - 1.0).abs() < 1e-12));
                    prop_assert_eq!(a.planted.len(), half);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "nondeterministic"),
            }
        }
    }
}
