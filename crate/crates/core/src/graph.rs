//! Undirected simple graphs, the edge-list text format, and the Laplacian
//! Hamiltonian `H = D - A` of the walk.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{cr, Real};
use crate::{CMatrix, CVector, Complex};

/// Finite undirected graph without self-loops or multi-edges.
///
/// Vertices are `0..n`; edges are stored as ordered pairs `(u, v)` with `u < v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    /// Builds a graph, deduplicating edges given in either orientation.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph must have at least one vertex".into()));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n {
                return Err(Error::VertexOutOfRange { vertex: u, n });
            }
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at vertex {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self { n, edges: set })
    }

    /// Graph on `n` vertices with no edges.
    pub fn edgeless(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    /// Complete graph `K_n`.
    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Symmetric 0/1 adjacency matrix with zero diagonal.
    pub fn adjacency(&self) -> DMatrix<u8> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            a[(u, v)] = 1;
            a[(v, u)] = 1;
        }
        a
    }

    /// Walk Hamiltonian `H = D - A` (the negated graph Laplacian, unit hopping rate).
    pub fn hamiltonian<T: Real>(&self) -> HermitianMatrix<T> {
        let mut h = CMatrix::<T>::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            h[(u, v)] -= cr(T::one());
            h[(v, u)] -= cr(T::one());
            h[(u, u)] += cr(T::one());
            h[(v, v)] += cr(T::one());
        }
        HermitianMatrix(h)
    }

    /// Graph with exactly the vertex pairs absent from `self`.
    pub fn complement(&self) -> Self {
        let edges = (0..self.n)
            .flat_map(|u| (u + 1..self.n).map(move |v| (u, v)))
            .filter(|&(u, v)| !self.has_edge(u, v))
            .collect();
        Self { n: self.n, edges }
    }

    /// Maximal connected vertex sets, each sorted, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(u, v) in &self.edges {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru.max(rv)] = ru.min(rv);
            }
        }
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.n];
        for v in 0..self.n {
            let r = find(&mut parent, v);
            if slot[r] == usize::MAX {
                slot[r] = comps.len();
                comps.push(Vec::new());
            }
            comps[slot[r]].push(v);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().len() == 1
    }

    /// A state that never reaches `final_vertex`, built from a disconnected
    /// complement.
    ///
    /// When the complement splits and some component not containing
    /// `final_vertex` has at least two vertices `a < b`, the state
    /// `(|a⟩ - |b⟩)/√2` is orthogonal to the uniform state, hence an eigenstate
    /// of `H_{K_n}`, and its amplitude at `final_vertex` stays zero for all
    /// times. The pair is the two highest-indexed vertices of the first such
    /// component. Returns `None` when no such component exists.
    pub fn complement_witness<T: Real>(&self, final_vertex: usize) -> Result<Option<CVector<T>>> {
        if final_vertex >= self.n {
            return Err(Error::VertexOutOfRange { vertex: final_vertex, n: self.n });
        }
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        let comps = self.complement().connected_components();
        if comps.len() < 2 {
            return Ok(None);
        }
        let Some(c) = comps.iter().find(|c| c.len() >= 2 && !c.contains(&final_vertex)) else {
            return Ok(None);
        };
        let (a, b) = (c[c.len() - 2], c[c.len() - 1]);
        let amp = T::one() / T::lit(2.0).sqrt();
        let mut psi = CVector::<T>::zeros(self.n);
        psi[a] = cr(amp);
        psi[b] = cr(-amp);
        Ok(Some(psi))
    }
}

/// Parses the edge-list text format.
///
/// The first non-comment line holds the vertex count `n`; each following
/// non-comment line holds one edge `u v` (0-based). `#` starts a comment that
/// runs to end of line. Blank lines are ignored; LF and CRLF are accepted.
/// Duplicate edges (in either orientation) collapse to one.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut edges = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match n {
            None => {
                if tokens.len() != 1 {
                    return Err(err(format!("expected vertex count, found `{content}`")));
                }
                let count: usize = tokens[0]
                    .parse()
                    .map_err(|_| err(format!("invalid vertex count `{}`", tokens[0])))?;
                if count == 0 {
                    return Err(err("vertex count must be at least 1".into()));
                }
                n = Some(count);
            }
            Some(count) => {
                if tokens.len() != 2 {
                    return Err(err(format!("expected `u v`, found `{content}`")));
                }
                let parse = |t: &str| {
                    t.parse::<usize>().map_err(|_| err(format!("invalid vertex index `{t}`")))
                };
                let (u, v) = (parse(tokens[0])?, parse(tokens[1])?);
                for w in [u, v] {
                    if w >= count {
                        return Err(err(format!("vertex {w} out of range (n = {count})")));
                    }
                }
                if u == v {
                    return Err(err(format!("self-loop at vertex {u}")));
                }
                edges.insert((u.min(v), u.max(v)));
            }
        }
    }
    let n = n.ok_or(Error::Parse { line: 0, message: "missing vertex count".into() })?;
    Ok(Graph { n, edges })
}

/// Complex Hermitian matrix, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<T: Real>(CMatrix<T>);

impl<T: Real> HermitianMatrix<T> {
    /// Wraps `m` after checking `m = m†` elementwise to within
    /// `1e-12 · max(1, max|m_ij|)` (widened to a few ulps for `f32`).
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        check_hermitian(&m)?;
        Ok(Self(m))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix<T> {
        self.0
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.0[(r, c)]
    }
}

pub(crate) fn check_hermitian<T: Real>(m: &CMatrix<T>) -> Result<()> {
    let dev = hermitian_deviation(m);
    let scale = m.iter().map(|z| z.norm_sqr().sqrt()).fold(T::one(), |a, b| a.max(b));
    let tol = T::lit(1e-12).max(T::default_epsilon() * T::lit(16.0)) * scale;
    if dev > tol {
        return Err(Error::NotHermitian { deviation: dev.to_f64() });
    }
    Ok(())
}

/// Largest elementwise modulus of `m - m†`.
pub fn hermitian_deviation<T: Real>(m: &CMatrix<T>) -> T {
    let mut worst = T::zero();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let d = m[(r, c)] - m[(c, r)].conj();
            worst = worst.max(d.norm_sqr().sqrt());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(h: &HermitianMatrix<f64>) -> Vec<Vec<f64>> {
        (0..h.n()).map(|r| (0..h.n()).map(|c| h.get(r, c).re).collect()).collect()
    }

    #[test]
    fn parses_single_edge() {
        let g = parse_edge_list("2\n0 1").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn parses_path_with_comments_and_crlf() {
        let g = parse_edge_list("# L3\r\n3  # three vertices\r\n0 1\r\n\r\n1 2\r\n").unwrap();
        assert_eq!(g, Graph::new(3, [(0, 1), (1, 2)]).unwrap());
    }

    #[test]
    fn parse_deduplicates() {
        let g = parse_edge_list("3\n0 1\n1 0").unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let cases = [
            ("2\n0 2", 2),
            ("3\n0 1\n1 1", 3),
            ("3\n0 1\nfoo bar", 3),
            ("3\n0 1 2", 2),
            ("x", 1),
            ("\n\n0", 3),
        ];
        for (text, line) in cases {
            match parse_edge_list(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
        assert!(matches!(parse_edge_list("# nothing\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn hamiltonian_examples() {
        let k2 = Graph::new(2, [(0, 1)]).unwrap().hamiltonian::<f64>();
        assert_eq!(real(&k2), vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let l3 = Graph::new(3, [(0, 1), (1, 2)]).unwrap().hamiltonian::<f64>();
        assert_eq!(
            real(&l3),
            vec![vec![1.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 1.0]]
        );
        let e3 = Graph::edgeless(3).unwrap().hamiltonian::<f64>();
        assert!(e3.matrix().iter().all(|z| *z == Complex::new(0.0, 0.0)));
    }

    #[test]
    fn complement_examples() {
        let k3 = Graph::complete(3).unwrap();
        assert_eq!(k3.complement(), Graph::edgeless(3).unwrap());
        let s4 = Graph::new(4, [(0, 1), (1, 2), (1, 3)]).unwrap();
        // of the six pairs only {0,2}, {0,3}, {2,3} are absent from S_4
        assert_eq!(s4.complement(), Graph::new(4, [(0, 2), (0, 3), (2, 3)]).unwrap());
        assert_eq!(Graph::complete(2).unwrap().complement(), Graph::edgeless(2).unwrap());
    }

    #[test]
    fn component_examples() {
        let l4 = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(l4.connected_components(), vec![vec![0, 1, 2, 3]]);
        let s4c = Graph::new(4, [(0, 1), (1, 2), (1, 3)]).unwrap().complement();
        assert_eq!(s4c.connected_components(), vec![vec![0, 2, 3], vec![1]]);
        let e3 = Graph::edgeless(3).unwrap();
        assert_eq!(e3.connected_components(), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn witness_examples() {
        let s4 = Graph::new(4, [(0, 1), (1, 2), (1, 3)]).unwrap();
        let psi = s4.complement_witness::<f64>(1).unwrap().unwrap();
        let h = 0.5f64.sqrt();
        let expect = [0.0, 0.0, h, -h];
        for (z, e) in psi.iter().zip(expect) {
            assert!((z.re - e).abs() < 1e-15 && z.im == 0.0);
        }
        let k2 = Graph::complete(2).unwrap();
        assert!(k2.complement_witness::<f64>(0).unwrap().is_none());
        // complement of L_4 has edges {0,2},{0,3},{1,3}: connected
        let l4 = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(l4.complement(), Graph::new(4, [(0, 2), (0, 3), (1, 3)]).unwrap());
        assert!(l4.complement_witness::<f64>(0).unwrap().is_none());
    }

    #[test]
    fn witness_requires_connected_graph() {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        assert_eq!(g.complement_witness::<f64>(0), Err(Error::Disconnected));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = Complex::new(0.0, 1.0);
        m[(1, 0)] = Complex::new(0.0, 1.0);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
    }
}
