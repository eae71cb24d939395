//! Portfolio selection from centrality rankings, mean-variance frontiers and
//! expected-shortfall optimisation.
//!
//! Scenario matrices are asset-major: `returns[i][s]` is the return of asset
//! `i` in scenario `s`.

pub mod es;
pub mod lp;
pub mod qp;

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::temporal::CentralityRanking;
pub use es::{expected_shortfall, minimize_es, portfolio_pnl, EsResult};
pub use qp::{kkt_residual, mean_variance_weights};

/// Weighted set of stocks, identified by index into the panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    pub members: Vec<usize>,
    pub weights: Vec<f64>,
    pub long_only: bool,
}

impl Portfolio {
    pub fn new(members: Vec<usize>, weights: Vec<f64>, long_only: bool) -> Self {
        Portfolio {
            members,
            weights,
            long_only,
        }
    }

    pub fn equal(members: Vec<usize>) -> Self {
        let w = 1.0 / members.len() as f64;
        let weights = vec![w; members.len()];
        Portfolio::new(members, weights, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Central,
    Peripheral,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Central => "central",
            Mode::Peripheral => "peripheral",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central" => Ok(Mode::Central),
            "peripheral" => Ok(Mode::Peripheral),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected central or peripheral)"
            ))),
        }
    }
}

/// The `m` highest-scoring (central) or lowest-scoring (peripheral) stocks,
/// returned in ascending index order. Ties follow the ranking's ticker rule.
pub fn select_portfolio(ranking: &CentralityRanking, m: usize, mode: Mode) -> Result<Vec<usize>> {
    let n = ranking.order.len();
    if m == 0 || m > n {
        return Err(Error::Config(format!("portfolio size {m} outside 1..={n}")));
    }
    let mut members = match mode {
        Mode::Central => ranking.order[..m].to_vec(),
        Mode::Peripheral => ranking.order[n - m..].to_vec(),
    };
    members.sort_unstable();
    Ok(members)
}

pub(crate) fn check_scenarios(returns: &[Vec<f64>], min_len: usize) -> Result<()> {
    let Some(first) = returns.first() else {
        return Err(Error::InsufficientData("no assets".into()));
    };
    let l = first.len();
    if l < min_len {
        return Err(Error::InsufficientData(format!(
            "{l} scenarios, need at least {min_len}"
        )));
    }
    for (i, r) in returns.iter().enumerate() {
        if r.len() != l {
            return Err(Error::Size(format!(
                "asset {i} has {} scenarios, expected {l}",
                r.len()
            )));
        }
        if let Some(s) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite return for asset {i} at scenario {s}"
            )));
        }
    }
    Ok(())
}

pub fn sample_means(returns: &[Vec<f64>]) -> Vec<f64> {
    returns
        .iter()
        .map(|r| r.iter().sum::<f64>() / r.len() as f64)
        .collect()
}

/// Unbiased sample covariance.
pub fn sample_covariance(returns: &[Vec<f64>]) -> DMatrix<f64> {
    let m = returns.len();
    let l = returns.first().map_or(0, Vec::len);
    let means = sample_means(returns);
    let centred: Vec<Vec<f64>> = returns
        .iter()
        .zip(&means)
        .map(|(r, mu)| r.iter().map(|v| v - mu).collect())
        .collect();
    let mut cov = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let s: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
            cov[(i, j)] = s / (l as f64 - 1.0);
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub q: f64,
    /// Mean daily portfolio return.
    pub ret: f64,
    /// Portfolio variance.
    pub risk: f64,
    pub weights: Vec<f64>,
}

/// `q = 0` followed by 49 geometrically spaced values from `1e-3` to `10`.
pub fn default_q_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    grid.extend((0..49).map(|k| 1e-3 * 10f64.powf(4.0 * k as f64 / 48.0)));
    grid
}

/// Optimal portfolios over a grid of risk tolerances, using the sample
/// moments of `returns`. Points come back sorted by `q`.
pub fn efficient_frontier(
    returns: &[Vec<f64>],
    q_grid: &[f64],
    long_only: bool,
) -> Result<Vec<FrontierPoint>> {
    check_scenarios(returns, 2)?;
    if q_grid.is_empty() {
        return Err(Error::Config("empty risk-tolerance grid".into()));
    }
    let cov = sample_covariance(returns);
    let mean = sample_means(returns);
    let mut qs = q_grid.to_vec();
    qs.sort_by(f64::total_cmp);
    qs.par_iter()
        .map(|&q| {
            let p = mean_variance_weights(&cov, &mean, q, long_only)?;
            let w = nalgebra::DVector::from_column_slice(&p.weights);
            let risk = w.dot(&(&cov * &w)).max(0.0);
            let ret = p.weights.iter().zip(&mean).map(|(a, b)| a * b).sum();
            Ok(FrontierPoint {
                q,
                ret,
                risk,
                weights: p.weights,
            })
        })
        .collect()
}

/// Writes `q,risk,return,weights_json` rows.
pub fn write_frontier_csv(path: &Path, points: &[FrontierPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["q", "risk", "return", "weights_json"])
        .map_err(|e| csv_error(path, e))?;
    for p in points {
        let weights =
            serde_json::to_string(&p.weights).map_err(|e| Error::Serialization(e.to_string()))?;
        w.write_record([
            p.q.to_string(),
            p.risk.to_string(),
            p.ret.to_string(),
            weights,
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Serialization(format!("{other:?}")),
    }
}
