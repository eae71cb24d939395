//! Simple undirected weighted graphs and a few standard generators.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected edge stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl Edge {
    pub fn key(&self) -> (usize, usize) {
        (self.u, self.v)
    }
}

/// Simple undirected graph: no self-loops, no parallel edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from `(u, v, weight)` triples.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut g = Graph::new(n);
        for (u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    /// Unweighted convenience constructor (all weights 1).
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Graph::from_edges(n, pairs.iter().map(|&(u, v)| (u, v, 1.0)))
    }

    pub fn add_edge(&mut self, u: usize, v: usize, weight: f64) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(Error::Size(format!(
                "edge ({u}, {v}) out of range for {} vertices",
                self.n
            )));
        }
        if u == v {
            return Err(Error::Domain(format!("self-loop at vertex {u}")));
        }
        if self.has_edge(u, v) {
            return Err(Error::Domain(format!("duplicate edge ({u}, {v})")));
        }
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        self.edges.push(Edge { u: a, v: b, weight });
        self.adj[u].push(v);
        self.adj[v].push(u);
        Ok(())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() {
            (u, v)
        } else {
            (v, u)
        };
        self.adj[a].contains(&b)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.edges.iter().map(Edge::key).collect()
    }

    /// 0/1 adjacency matrix.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.u, e.v)] = 1.0;
            a[(e.v, e.u)] = 1.0;
        }
        a
    }

    /// Hop distances from `src`; `None` for unreachable vertices.
    pub fn bfs_distances(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].expect("visited");
            for &w in &self.adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut k = 0;
            while k < comp.len() {
                let u = comp[k];
                k += 1;
                for &w in &self.adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.components().len() == 1
    }

    /// Fails with [`Error::Disconnected`] unless the graph is connected.
    pub fn require_connected(&self) -> Result<()> {
        let comps = self.components();
        if comps.len() > 1 {
            return Err(Error::Disconnected { components: comps });
        }
        Ok(())
    }
}

/// Standard graph families used in tests and examples.
pub mod generators {
    use super::*;

    pub fn complete(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in (u + 1)..n {
                g.add_edge(u, v, 1.0).expect("simple");
            }
        }
        g
    }

    pub fn complete_bipartite(a: usize, b: usize) -> Graph {
        let mut g = Graph::new(a + b);
        for u in 0..a {
            for v in a..(a + b) {
                g.add_edge(u, v, 1.0).expect("simple");
            }
        }
        g
    }

    /// Star with hub 0.
    pub fn star(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for v in 1..n {
            g.add_edge(0, v, 1.0).expect("simple");
        }
        g
    }

    pub fn path(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for v in 1..n {
            g.add_edge(v - 1, v, 1.0).expect("simple");
        }
        g
    }

    pub fn cycle(n: usize) -> Graph {
        let mut g = path(n);
        if n >= 3 {
            g.add_edge(n - 1, 0, 1.0).expect("simple");
        }
        g
    }

    /// Circulant `k`-regular graph (`k` even, `k < n`): each vertex joined to
    /// its `k/2` nearest neighbours on either side of a ring.
    pub fn ring_lattice(n: usize, k: usize) -> Graph {
        assert!(k.is_multiple_of(2) && k < n, "need even k < n");
        let mut g = Graph::new(n);
        for u in 0..n {
            for s in 1..=k / 2 {
                let v = (u + s) % n;
                if !g.has_edge(u, v) {
                    g.add_edge(u, v, 1.0).expect("simple");
                }
            }
        }
        g
    }

    /// Preferential-attachment graph: starts from a star on `m + 1` vertices
    /// and attaches each new vertex to `m` distinct targets drawn in
    /// proportion to degree.
    pub fn barabasi_albert(n: usize, m: usize, seed: u64) -> Graph {
        assert!(m >= 1 && m < n, "need 1 <= m < n");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Graph::new(n);
        for v in 1..=m {
            g.add_edge(0, v, 1.0).expect("simple");
        }
        let mut repeated: Vec<usize> = g.edges().iter().flat_map(|e| [e.u, e.v]).collect();
        for source in (m + 1)..n {
            let mut targets = BTreeSet::new();
            while targets.len() < m {
                targets.insert(*repeated.choose(&mut rng).expect("non-empty"));
            }
            for &t in &targets {
                g.add_edge(source, t, 1.0).expect("simple");
                repeated.push(t);
                repeated.push(source);
            }
        }
        g
    }

    /// Maximal planar graph grown by repeatedly inserting a vertex inside a
    /// random triangular face and joining it to the three corners.
    pub fn random_triangulation(n: usize, seed: u64) -> Graph {
        assert!(n >= 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Graph::from_pairs(n, &[(0, 1), (1, 2), (0, 2)]).expect("simple");
        // both sides of the initial triangle are faces
        let mut faces = vec![[0, 1, 2], [0, 1, 2]];
        for v in 3..n {
            let k = rng.random_range(0..faces.len());
            let [a, b, c] = faces.swap_remove(k);
            for u in [a, b, c] {
                g.add_edge(u, v, 1.0).expect("simple");
            }
            faces.extend([[a, b, v], [b, c, v], [a, c, v]]);
        }
        g
    }

    /// Erdős–Rényi `G(n, p)`.
    pub fn gnp(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random::<f64>() < p {
                    g.add_edge(u, v, 1.0).expect("simple");
                }
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::generators::*;
    use super::*;

    #[test]
    fn rejects_loops_and_duplicates() {
        let mut g = Graph::new(3);
        g.add_edge(0, 1, 0.5).unwrap();
        assert!(g.add_edge(1, 0, 0.5).is_err());
        assert!(g.add_edge(2, 2, 0.5).is_err());
        assert!(g.add_edge(0, 3, 0.5).is_err());
        assert_eq!(g.edges()[0].key(), (0, 1));
    }

    #[test]
    fn generator_sizes() {
        assert_eq!(complete(5).n_edges(), 10);
        assert_eq!(complete_bipartite(3, 3).n_edges(), 9);
        assert_eq!(star(6).n_edges(), 5);
        assert_eq!(cycle(7).n_edges(), 7);
        assert!(ring_lattice(10, 4).degrees().iter().all(|&d| d == 4));
        let ba = barabasi_albert(200, 3, 1);
        assert_eq!(ba.n_edges(), 3 + 3 * (200 - 4));
        let tri = random_triangulation(50, 3);
        assert_eq!(tri.n_edges(), 3 * 50 - 6);
    }

    #[test]
    fn components_and_distances() {
        let g = Graph::from_pairs(5, &[(0, 1), (1, 2), (3, 4)]).unwrap();
        assert_eq!(g.components(), vec![vec![0, 1, 2], vec![3, 4]]);
        assert_eq!(
            g.bfs_distances(0),
            vec![Some(0), Some(1), Some(2), None, None]
        );
        assert!(matches!(
            g.require_connected(),
            Err(Error::Disconnected { .. })
        ));
    }
}
