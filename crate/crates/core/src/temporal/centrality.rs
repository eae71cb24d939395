//! Stock rankings from temporal eigenvector centrality and from a
//! rank-aggregated centrality on the static union network.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityMethod {
    Temporal,
    Aggregated,
}

impl CentralityMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CentralityMethod::Temporal => "temporal",
            CentralityMethod::Aggregated => "aggregated",
        }
    }
}

impl std::str::FromStr for CentralityMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "temporal" => Ok(CentralityMethod::Temporal),
            "aggregated" => Ok(CentralityMethod::Aggregated),
            other => Err(Error::Config(format!(
                "unknown centrality method '{other}' (expected temporal or aggregated)"
            ))),
        }
    }
}

/// Per-stock scores, higher meaning more central, plus the induced order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityRanking {
    pub tickers: Vec<String>,
    pub scores: Vec<f64>,
    /// Per-layer eigenvector entries `t * N + i` (temporal method only).
    pub components: Vec<f64>,
    pub lambda1: Option<f64>,
    pub method: CentralityMethod,
    /// Stock indices from most to least central.
    pub order: Vec<usize>,
}

impl CentralityRanking {
    fn new(
        tickers: Vec<String>,
        scores: Vec<f64>,
        components: Vec<f64>,
        lambda1: Option<f64>,
        method: CentralityMethod,
    ) -> Self {
        let order = rank_order(&scores, &tickers);
        CentralityRanking {
            tickers,
            scores,
            components,
            lambda1,
            method,
            order,
        }
    }

    pub fn n(&self) -> usize {
        self.scores.len()
    }

    /// 1-based rank of every stock.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![0; self.n()];
        for (pos, &i) in self.order.iter().enumerate() {
            r[i] = pos + 1;
        }
        r
    }

    /// Writes `ticker,score,rank,method` rows in rank order.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "ticker,score,rank,method")?;
        for (pos, &i) in self.order.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{}",
                self.tickers[i],
                self.scores[i],
                pos + 1,
                self.method.as_str()
            )?;
        }
        w.flush()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Descending score, ties by ticker.
fn rank_order(scores: &[f64], tickers: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| tickers[a].cmp(&tickers[b]))
    });
    order
}

/// Sums each stock's eigenvector entries over layers (absolute values when
/// `absolute` is set).
pub fn temporal_centrality(
    nu: &[f64],
    lambda1: f64,
    tickers: &[String],
    layers: usize,
    absolute: bool,
) -> Result<CentralityRanking> {
    let n = tickers.len();
    if nu.len() != n * layers {
        return Err(Error::Size(format!(
            "eigenvector has {} entries, expected {n} x {layers}",
            nu.len()
        )));
    }
    let mut scores = vec![0.0; n];
    for t in 0..layers {
        for (i, s) in scores.iter_mut().enumerate() {
            let v = nu[t * n + i];
            *s += if absolute { v.abs() } else { v };
        }
    }
    Ok(CentralityRanking::new(
        tickers.to_vec(),
        scores,
        nu.to_vec(),
        Some(lambda1),
        CentralityMethod::Temporal,
    ))
}

/// Unweighted union of the layers' edge sets.
pub fn aggregate_network(layers: &[Graph]) -> Result<Graph> {
    let Some(first) = layers.first() else {
        return Err(Error::InsufficientData("no layers to aggregate".into()));
    };
    let n = first.n();
    let mut g = Graph::new(n);
    for layer in layers {
        if layer.n() != n {
            return Err(Error::VertexMismatch(n, layer.n()));
        }
        for e in layer.edges() {
            if !g.has_edge(e.u, e.v) {
                g.add_edge(e.u, e.v, 1.0)?;
            }
        }
    }
    Ok(g)
}

/// Principal eigenvector of a connected graph's adjacency matrix, by power
/// iteration on `A + I` (the shift keeps bipartite graphs convergent).
pub fn eigenvector_centrality(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..100_000 {
        let mut y: Vec<f64> = (0..n)
            .map(|i| x[i] + g.neighbors(i).iter().map(|&j| x[j]).sum::<f64>())
            .collect();
        let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= nrm);
        let diff = y
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = y;
        if diff < 1e-13 {
            break;
        }
    }
    x
}

/// Fractional rank positions (1 = best) of `values`. Values within `1e-12`
/// relative of each other share the average of their positions.
pub fn fractional_ranks(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let ord = values[a].total_cmp(&values[b]);
        if higher_is_better { ord.reverse() } else { ord }.then(a.cmp(&b))
    });
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[idx[end]] - values[idx[start]]).abs() <= 1e-12 * scale {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// The four component centralities used by [`hybrid_centrality`]:
/// degree, eigenvector, closeness and eccentricity.
pub fn component_centralities(g: &Graph) -> Result<[Vec<f64>; 4]> {
    g.require_connected()?;
    let n = g.n();
    let degree: Vec<f64> = g.degrees().into_iter().map(|k| k as f64).collect();
    let eigen = eigenvector_centrality(g);
    let mut closeness = vec![0.0; n];
    let mut eccentricity = vec![0.0; n];
    for v in 0..n {
        let d: Vec<usize> = g
            .bfs_distances(v)
            .into_iter()
            .map(|d| d.expect("connected"))
            .collect();
        let total: usize = d.iter().sum();
        closeness[v] = if total == 0 {
            0.0
        } else {
            (n - 1) as f64 / total as f64
        };
        eccentricity[v] = *d.iter().max().expect("non-empty") as f64;
    }
    Ok([degree, eigen, closeness, eccentricity])
}

/// Rank aggregation over degree, eigenvector centrality, closeness and
/// eccentricity: each vertex's average rank `r` maps to `(N - r) / (N - 1)`,
/// so the most central vertex on every measure scores 1.
pub fn hybrid_centrality(g: &Graph, tickers: &[String]) -> Result<CentralityRanking> {
    let n = g.n();
    if tickers.len() != n {
        return Err(Error::VertexMismatch(tickers.len(), n));
    }
    if n < 2 {
        return Err(Error::Size(format!(
            "hybrid centrality needs 2 vertices, got {n}"
        )));
    }
    let [degree, eigen, closeness, ecc] = component_centralities(g)?;
    let ranks = [
        fractional_ranks(&degree, true),
        fractional_ranks(&eigen, true),
        fractional_ranks(&closeness, true),
        fractional_ranks(&ecc, false),
    ];
    let scores = (0..n)
        .map(|i| {
            let avg = ranks.iter().map(|r| r[i]).sum::<f64>() / 4.0;
            (n as f64 - avg) / (n - 1) as f64
        })
        .collect();
    Ok(CentralityRanking::new(
        tickers.to_vec(),
        scores,
        Vec::new(),
        None,
        CentralityMethod::Aggregated,
    ))
}
