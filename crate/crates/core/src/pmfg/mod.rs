//! Planar maximally filtered graphs, maximum spanning trees and topology
//! diagnostics of filtered correlation networks.

pub mod planarity;
pub mod topology;

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::Graph;
pub use planarity::{
    check_planarity, is_kuratowski_subdivision, is_planar, planar_embedding, PlanarityCertificate,
    PlanarityResult, RotationSystem,
};
pub use topology::{
    avg_shortest_path, clustering_coefficient, heterogeneity, jaccard, topology_report,
    TopologyReport,
};

/// A filtered network together with a planar embedding of it.
#[derive(Debug, Clone)]
pub struct PlanarGraph {
    graph: Graph,
    embedding: RotationSystem,
}

impl PlanarGraph {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn embedding(&self) -> &RotationSystem {
        &self.embedding
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.graph.degrees()
    }

    /// Re-verifies the stored embedding against the edge set.
    pub fn certificate_valid(&self) -> bool {
        self.embedding.verify(&self.graph)
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

fn check_weights(corr: &DMatrix<f64>, min_n: usize) -> Result<()> {
    let n = corr.nrows();
    if corr.ncols() != n {
        return Err(Error::Size(format!(
            "weight matrix is {}x{}",
            n,
            corr.ncols()
        )));
    }
    if n < min_n {
        return Err(Error::Size(format!(
            "need at least {min_n} vertices, got {n}"
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (corr[(i, j)], corr[(j, i)]);
            if !a.is_finite() {
                return Err(Error::Domain(format!("non-finite weight at ({i}, {j})")));
            }
            if a != b {
                return Err(Error::Domain(format!(
                    "weight matrix not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Upper-triangle pairs sorted by descending weight, ties by `(i, j)`.
fn candidates(corr: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let n = corr.nrows();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push((i, j, corr[(i, j)]));
        }
    }
    out.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    out
}

/// Vertex set of a maximal planar subgraph of the growing network.
///
/// Seeded by the first triangle and grown by any vertex with three neighbours
/// inside it. A planar graph with `3V - 6` edges is a triangulation with a
/// unique embedding, so everything hanging off the core must sit inside one
/// triangular face: its core attachments are at most three mutually adjacent
/// vertices. A candidate edge that would break this can be rejected at once.
struct Core {
    member: Vec<bool>,
    links: Vec<u8>,
    seeded: bool,
}

impl Core {
    fn new(n: usize) -> Self {
        Core {
            member: vec![false; n],
            links: vec![0; n],
            seeded: false,
        }
    }

    /// Core vertices reachable from `x` through non-core vertices (just `x`
    /// itself for a core vertex), accumulated into `att`. Stops early once
    /// more than three are found.
    fn attachments(&self, g: &Graph, x: usize, att: &mut Vec<usize>, seen: &mut Vec<usize>) {
        if self.member[x] {
            if !att.contains(&x) {
                att.push(x);
            }
            return;
        }
        let base = seen.len();
        seen.push(x);
        let mut k = base;
        while k < seen.len() && att.len() <= 3 {
            let u = seen[k];
            k += 1;
            for &w in g.neighbors(u) {
                if self.member[w] {
                    if !att.contains(&w) {
                        att.push(w);
                    }
                } else if !seen.contains(&w) {
                    seen.push(w);
                }
            }
        }
    }

    /// True if `i`-`j` provably destroys planarity.
    fn forbids(&self, g: &Graph, i: usize, j: usize) -> bool {
        if !self.seeded {
            return false;
        }
        let mut att = Vec::with_capacity(4);
        let mut seen = Vec::new();
        self.attachments(g, i, &mut att, &mut seen);
        if att.len() <= 3 && !(self.member[i] && self.member[j]) && seen.contains(&j) {
            // same hanging piece: the core is unaffected
            return false;
        }
        self.attachments(g, j, &mut att, &mut seen);
        if att.len() > 3 {
            return true;
        }
        att.iter()
            .enumerate()
            .any(|(k, &a)| att[k + 1..].iter().any(|&b| !g.has_edge(a, b)))
    }

    fn absorb(&mut self, g: &Graph, start: usize) {
        let mut queue = vec![start];
        while let Some(x) = queue.pop() {
            if self.member[x] {
                continue;
            }
            self.member[x] = true;
            for &y in g.neighbors(x) {
                if !self.member[y] {
                    self.links[y] = self.links[y].saturating_add(1);
                    if self.links[y] >= 3 {
                        queue.push(y);
                    }
                }
            }
        }
    }

    fn edge_added(&mut self, g: &Graph, i: usize, j: usize) {
        if !self.seeded {
            let ni = g.neighbors(i);
            if let Some(&k) = g.neighbors(j).iter().find(|k| ni.contains(k)) {
                self.seeded = true;
                for v in [i, j, k] {
                    self.absorb(g, v);
                }
            }
            return;
        }
        for (a, b) in [(i, j), (j, i)] {
            if self.member[a] && !self.member[b] {
                self.links[b] = self.links[b].saturating_add(1);
                if self.links[b] >= 3 {
                    self.absorb(g, b);
                }
            }
        }
    }
}

/// Greedy planar filtering: visit pairs by descending weight and keep an
/// edge whenever the graph stays planar, until `3(N - 2)` edges are placed.
///
/// Most candidates are settled locally. An edge joining two components, or
/// two vertices on a common face of the current embedding, is always planar;
/// two non-adjacent vertices of a triangulated subgraph never are. Only the
/// remaining candidates go through a full planarity test.
pub fn build_pmfg(corr: &DMatrix<f64>) -> Result<PlanarGraph> {
    check_weights(corr, 3)?;
    let n = corr.nrows();
    let target = 3 * (n - 2);
    let mut graph = Graph::new(n);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(target);
    let mut emb = RotationSystem::new(n);
    let mut uf = UnionFind::new(n);
    let mut core = Core::new(n);

    for (i, j, w) in candidates(corr) {
        if pairs.len() == target {
            break;
        }
        if uf.find(i) != uf.find(j) {
            uf.union(i, j);
            emb.insert_edge(i, j, None, None);
        } else if core.forbids(&graph, i, j) {
            continue;
        } else if let Some((di, dj)) = emb.common_face(i, j) {
            emb.insert_edge(i, j, Some(di), Some(dj));
        } else {
            pairs.push((i, j));
            match planar_embedding(n, &pairs) {
                Some(e) => {
                    emb = e;
                    pairs.pop();
                }
                None => {
                    pairs.pop();
                    continue;
                }
            }
        }
        pairs.push((i, j));
        graph.add_edge(i, j, w)?;
        core.edge_added(&graph, i, j);
    }
    Ok(PlanarGraph {
        graph,
        embedding: emb,
    })
}

/// Maximum-weight spanning tree (Kruskal), same tie rule as [`build_pmfg`].
pub fn build_mst(corr: &DMatrix<f64>) -> Result<Graph> {
    check_weights(corr, 2)?;
    let n = corr.nrows();
    let mut uf = UnionFind::new(n);
    let mut g = Graph::new(n);
    for (i, j, w) in candidates(corr) {
        if uf.union(i, j) {
            g.add_edge(i, j, w)?;
            if g.n_edges() == n - 1 {
                break;
            }
        }
    }
    Ok(g)
}

/// Writes `u,v,weight` rows using ticker names.
pub fn write_edge_list(path: &Path, graph: &Graph, tickers: &[String]) -> Result<()> {
    if tickers.len() != graph.n() {
        return Err(Error::VertexMismatch(tickers.len(), graph.n()));
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "u,v,weight")?;
        for e in graph.edges() {
            writeln!(w, "{},{},{}", tickers[e.u], tickers[e.v], e.weight)?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
