use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ssecut::cut_improve::{flow_round, FlowRoundOptions, RoundMode};
use ssecut::embed::{solve_embedding_sweep, SolverOptions};
use ssecut::generators::{barbell, cycle};
use ssecut::graph::same_cut;
use ssecut::gs_round::gs_round;
use ssecut::oracle::brute_sparsest;
use ssecut::planted::{check_hypothesis, generate};
use ssecut::sse_flow::{construct_spectral_flow, verify_spectral, ConstructOptions};
use ssecut::Graph;

fn norm(g: Graph) -> Graph {
    g.normalize_regular().unwrap().graph
}

#[test]
fn barbell_side_from_embedding() {
    let g = norm(barbell(5));
    let sol = solve_embedding_sweep(&g, &SolverOptions::default())
        .unwrap()
        .solution;
    let rep = gs_round(&g, &sol, 2, 0.5, 0).unwrap();
    let side: Vec<usize> = (0..5).collect();
    assert!(
        same_cut(10, &rep.best_cut.set, &side),
        "{:?}",
        rep.best_cut.set
    );
    assert!(sol.objective <= rep.sparsity + 1e-6);
}

#[test]
fn planted_side_from_flow() {
    let inst = generate(16, 0.5, 7, 2, 3).unwrap();
    assert!(check_hypothesis(&inst, 0.5, 1.0).unwrap().passed);
    let c = construct_spectral_flow(&inst.graph, 1, 1.0, &ConstructOptions::default()).unwrap();
    let again = verify_spectral(&c.flow, 2, 1.0, c.certificate.lambda).unwrap();
    assert!(again.valid);
    assert!((again.lambda_measured - c.certificate.lambda_measured).abs() < 1e-12);
    let cut = flow_round(
        &inst.graph,
        &c.certificate,
        0.5,
        RoundMode::Sparsest,
        &FlowRoundOptions::default(),
    )
    .unwrap();
    assert!(
        same_cut(16, &cut.set, &inst.planted),
        "{:?} vs {:?}",
        cut.set,
        inst.planted
    );
}

#[test]
fn cycle_rounds_to_an_optimal_arc() {
    let g = norm(cycle(10));
    let sol = solve_embedding_sweep(&g, &SolverOptions::default())
        .unwrap()
        .solution;
    let rep = gs_round(&g, &sol, 2, 0.5, 4).unwrap();
    let opt = brute_sparsest(&g).unwrap();
    assert!((rep.sparsity - opt.sparsity).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rounding_never_beats_the_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(4..=9);
        let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|v| (rng.gen_range(0..v), v, 1.0)).collect();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen_bool(0.3) && !edges.iter().any(|e| (e.0, e.1) == (u, v)) {
                    edges.push((u, v, rng.gen_range(0.5..2.0)));
                }
            }
        }
        let g = norm(Graph::from_edges(n, &edges).unwrap());
        let sol = solve_embedding_sweep(&g, &SolverOptions::default()).unwrap().solution;
        let opt = brute_sparsest(&g).unwrap();
        let rep = gs_round(&g, &sol, 2, 0.5, seed).unwrap();
        prop_assert!(rep.sparsity >= opt.sparsity - 1e-7);
        prop_assert!(sol.objective <= opt.sparsity + 1e-6);
        prop_assert!(rep.sparsity <= rep.bound + 1e-6);
    }
}
