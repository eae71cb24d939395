//! Structural diagnostics of filtered networks.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Clustering, path length, heterogeneity and turnover of one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopologyReport {
    pub clustering: f64,
    pub path_length: f64,
    pub heterogeneity: f64,
    pub jaccard_prev: Option<f64>,
}

/// Mean local clustering over all vertices; degree < 2 counts as 0.
pub fn clustering_coefficient(g: &Graph) -> f64 {
    let n = g.n();
    if n == 0 {
        return 0.0;
    }
    let mut mark = vec![false; n];
    let mut total = 0.0;
    for v in 0..n {
        let nb = g.neighbors(v);
        let k = nb.len();
        if k < 2 {
            continue;
        }
        for &u in nb {
            mark[u] = true;
        }
        let mut links = 0usize;
        for &u in nb {
            links += g.neighbors(u).iter().filter(|&&w| mark[w]).count();
        }
        for &u in nb {
            mark[u] = false;
        }
        // each link among neighbours was seen from both ends
        total += links as f64 / (k * (k - 1)) as f64;
    }
    total / n as f64
}

/// Mean hop distance over unordered vertex pairs.
pub fn avg_shortest_path(g: &Graph) -> Result<f64> {
    let n = g.n();
    if n < 2 {
        return Err(Error::Size(format!(
            "path length needs 2 vertices, got {n}"
        )));
    }
    g.require_connected()?;
    let mut sum = 0usize;
    for s in 0..n {
        sum += g
            .bfs_distances(s)
            .into_iter()
            .map(|d| d.expect("connected"))
            .sum::<usize>();
    }
    Ok(sum as f64 / (n * (n - 1)) as f64)
}

/// Degree heterogeneity index: 0 for regular graphs, 1 for the star.
pub fn heterogeneity(g: &Graph) -> Result<f64> {
    let n = g.n();
    if n < 3 {
        return Err(Error::Size(format!(
            "heterogeneity needs 3 vertices, got {n}"
        )));
    }
    let deg = g.degrees();
    if let Some(v) = deg.iter().position(|&k| k == 0) {
        return Err(Error::IsolatedVertex(v));
    }
    let mut by_pair: BTreeMap<usize, usize> = BTreeMap::new();
    for e in g.edges() {
        *by_pair.entry(deg[e.u] * deg[e.v]).or_default() += 1;
    }
    let sum: f64 = by_pair
        .into_iter()
        .map(|(p, count)| {
            let r = p.isqrt();
            if r * r == p {
                count as f64 / r as f64
            } else {
                count as f64 / p as f64 * (p as f64).sqrt()
            }
        })
        .sum();
    let nf = n as f64;
    Ok((nf - 2.0 * sum) / (nf - 2.0 * (nf - 1.0).sqrt()))
}

/// Edge-set overlap `|E1 ∩ E2| / |E1 ∪ E2|`; two empty graphs give 1.
pub fn jaccard(a: &Graph, b: &Graph) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::VertexMismatch(a.n(), b.n()));
    }
    let (ea, eb) = (a.edge_set(), b.edge_set());
    let inter = ea.intersection(&eb).count();
    let union = ea.len() + eb.len() - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

pub fn topology_report(g: &Graph, prev: Option<&Graph>) -> Result<TopologyReport> {
    Ok(TopologyReport {
        clustering: clustering_coefficient(g),
        path_length: avg_shortest_path(g)?,
        heterogeneity: heterogeneity(g)?,
        jaccard_prev: prev.map(|p| jaccard(p, g)).transpose()?,
    })
}
