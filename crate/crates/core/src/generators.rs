//! Small deterministic graph families used in tests, benches and the demo.
//! All generators use unit weights.

use crate::graph::Graph;

fn build(n: usize, edges: Vec<(usize, usize)>) -> Graph {
    let mut weights = vec![0.0; n * n];
    for (u, v) in edges {
        weights[u * n + v] = 1.0;
        weights[v * n + u] = 1.0;
    }
    Graph::from_raw(n, weights)
}

pub fn complete(n: usize) -> Graph {
    let mut e = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            e.push((u, v));
        }
    }
    build(n, e)
}

pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3, "cycle needs at least 3 vertices");
    build(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
}

pub fn path(n: usize) -> Graph {
    build(n, (1..n).map(|i| (i - 1, i)).collect())
}

/// `rows × cols` grid, vertex `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let mut e = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                e.push((v, v + 1));
            }
            if r + 1 < rows {
                e.push((v, v + cols));
            }
        }
    }
    build(rows * cols, e)
}

/// Two `K_k` cliques joined by a single edge `(k-1, k)`.
pub fn barbell(k: usize) -> Graph {
    let mut e = Vec::new();
    for base in [0, k] {
        for u in 0..k {
            for v in (u + 1)..k {
                e.push((base + u, base + v));
            }
        }
    }
    e.push((k - 1, k));
    build(2 * k, e)
}

/// Disjoint union; vertices of `b` are shifted by `a.n()`.
pub fn disjoint_union(a: &Graph, b: &Graph) -> Graph {
    let n = a.n() + b.n();
    let mut weights = vec![0.0; n * n];
    for (u, v, w) in a.edges() {
        weights[u * n + v] = w;
        weights[v * n + u] = w;
    }
    let s = a.n();
    for (u, v, w) in b.edges() {
        weights[(u + s) * n + v + s] = w;
        weights[(v + s) * n + u + s] = w;
    }
    Graph::from_raw(n, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_degrees() {
        assert_eq!(complete(5).edges().len(), 10);
        assert!(cycle(6).degrees().iter().all(|&d| d == 2.0));
        assert_eq!(path(4).edges().len(), 3);
        assert_eq!(grid(3, 4).edges().len(), 3 * 3 + 2 * 4);
        let b = barbell(4);
        assert_eq!(b.edges().len(), 13);
        assert_eq!(b.cut_weight(&[0, 1, 2, 3]), 1.0);
        let u = disjoint_union(&complete(3), &complete(3));
        assert_eq!(u.components(), vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }
}
