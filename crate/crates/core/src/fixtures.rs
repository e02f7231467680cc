//! The six small example graphs with their conventional vertex labels
//! (`v_k` is index `k - 1`), plus a seeded random-graph generator for
//! property tests.

use rand::Rng;

use crate::graph::Graph;

fn build(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::new(n, edges.iter().copied()).expect("fixture is a valid graph")
}

/// Single edge `v1 - v2`.
pub fn k2() -> Graph {
    build(2, &[(0, 1)])
}

/// Path `v1 - v2 - v3`.
pub fn l3() -> Graph {
    build(3, &[(0, 1), (1, 2)])
}

/// Triangle on `v1, v2, v3`.
pub fn k3() -> Graph {
    build(3, &[(0, 1), (1, 2), (0, 2)])
}

/// Path `v1 - v2 - v3 - v4`.
pub fn l4() -> Graph {
    build(4, &[(0, 1), (1, 2), (2, 3)])
}

/// Triangle `v2 v3 v4` with pendant `v1` attached to `v2`.
pub fn kl31() -> Graph {
    build(4, &[(0, 1), (1, 2), (2, 3), (1, 3)])
}

/// Star with center `v2`.
pub fn s4() -> Graph {
    build(4, &[(0, 1), (1, 2), (1, 3)])
}

/// All six fixtures with their names.
pub fn all() -> Vec<(&'static str, Graph)> {
    vec![("K2", k2()), ("L3", l3()), ("K3", k3()), ("L4", l4()), ("KL31", kl31()), ("S4", s4())]
}

/// Erdős–Rényi `G(n, p)` sample.
pub fn random_graph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let edges: Vec<_> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|_| rng.random_bool(p))
        .collect();
    Graph::new(n, edges).expect("generated edges are valid")
}

/// Rejection-samples `G(n, p)` until the result is connected.
pub fn random_connected<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    assert!(n >= 1 && p > 0.0, "need n >= 1 and p > 0");
    loop {
        let g = random_graph(n, p, rng);
        if g.is_connected() {
            return g;
        }
    }
}
