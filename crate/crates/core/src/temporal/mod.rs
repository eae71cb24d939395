//! Temporal networks: per-window PMFG layers coupled through autoregressive
//! fits of each stock's correlation strength.

pub mod arima;
pub mod centrality;
pub mod supra;

use rayon::prelude::*;
use serde::Serialize;

use crate::corrnet::CorrelationSequence;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::pmfg::{build_pmfg, PlanarGraph};
pub use arima::{fit_arima, ArimaConfig, ArimaFit};
pub use centrality::{
    aggregate_network, hybrid_centrality, temporal_centrality, CentralityMethod, CentralityRanking,
};
pub use supra::{
    build_supra, leading_eigenpair, EigenConfig, EigenMethod, Eigenpair, SupraEvolutionMatrix,
};

/// Row sums `s_{i,t}` of each window's correlation matrix, diagonal included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrengthSeries {
    /// `values[i][t]`.
    pub values: Vec<Vec<f64>>,
}

pub fn strength_series(seq: &CorrelationSequence) -> StrengthSeries {
    let n = seq.n_stocks();
    let values = (0..n)
        .map(|i| seq.windows.iter().map(|c| c.row(i).sum()).collect())
        .collect();
    StrengthSeries { values }
}

/// Fits every stock's strength series in parallel. Series shorter than the
/// configured minimum get a model without autoregressive terms, so short
/// sequences still produce (uncoupled) supra matrices.
pub fn fit_strengths(s: &StrengthSeries, cfg: &ArimaConfig) -> Result<Vec<ArimaFit>> {
    cfg.validate()?;
    s.values
        .par_iter()
        .enumerate()
        .map(|(i, series)| {
            let fit = match fit_arima(series, cfg) {
                Ok(f) => f,
                Err(Error::SeriesTooShort { needed, got }) => {
                    log::warn!("stock {i}: {got} windows < {needed}, no temporal coupling");
                    ArimaFit::degenerate(i, 0)
                }
                Err(e) => return Err(e),
            };
            Ok(ArimaFit { stock: i, ..fit })
        })
        .collect()
}

/// PMFG of every window, built in parallel.
pub fn build_layers(seq: &CorrelationSequence) -> Result<Vec<PlanarGraph>> {
    seq.windows.par_iter().map(build_pmfg).collect()
}

/// Everything derived from one correlation sequence.
#[derive(Debug, Clone)]
pub struct TemporalNetwork {
    pub layers: Vec<PlanarGraph>,
    pub strengths: StrengthSeries,
    pub fits: Vec<ArimaFit>,
    pub supra: SupraEvolutionMatrix,
}

impl TemporalNetwork {
    pub fn build(seq: &CorrelationSequence, cfg: &ArimaConfig) -> Result<Self> {
        let layers = build_layers(seq)?;
        let strengths = strength_series(seq);
        let fits = fit_strengths(&strengths, cfg)?;
        let graphs = layers.iter().map(|l| l.graph().clone()).collect::<Vec<_>>();
        let supra = build_supra(&graphs, &fits)?;
        Ok(TemporalNetwork {
            layers,
            strengths,
            fits,
            supra,
        })
    }

    pub fn graphs(&self) -> Vec<Graph> {
        self.layers.iter().map(|l| l.graph().clone()).collect()
    }

    /// Temporal eigenvector centrality.
    pub fn temporal_ranking(
        &self,
        tickers: &[String],
        eig: &EigenConfig,
        absolute: bool,
    ) -> Result<CentralityRanking> {
        let pair = leading_eigenpair(&self.supra, eig)?;
        temporal_centrality(
            &pair.vector,
            pair.lambda,
            tickers,
            self.supra.layers(),
            absolute,
        )
    }

    /// Rank-aggregated centrality on the union of all layers.
    pub fn aggregated_ranking(&self, tickers: &[String]) -> Result<CentralityRanking> {
        hybrid_centrality(&aggregate_network(&self.graphs())?, tickers)
    }

    pub fn ranking(
        &self,
        method: CentralityMethod,
        tickers: &[String],
        eig: &EigenConfig,
        absolute: bool,
    ) -> Result<CentralityRanking> {
        match method {
            CentralityMethod::Temporal => self.temporal_ranking(tickers, eig, absolute),
            CentralityMethod::Aggregated => self.aggregated_ranking(tickers),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrnet::WindowConfig;
    use nalgebra::DMatrix;

    fn seq_of(windows: Vec<DMatrix<f64>>) -> CorrelationSequence {
        let anchors = (0..windows.len())
            .map(|k| chrono::NaiveDate::from_ymd_opt(2001, 1, 1 + k as u32).unwrap())
            .collect();
        CorrelationSequence {
            windows,
            anchors,
            config: WindowConfig { delta: 2, step: 1 },
            degenerate: Vec::new(),
        }
    }

    #[test]
    fn strength_examples() {
        let two = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let three = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.4, 0.2, 1.0, 0.6, 0.4, 0.6, 1.0]);
        assert_eq!(
            strength_series(&seq_of(vec![two])).values,
            vec![vec![1.5], vec![1.5]]
        );
        let s = strength_series(&seq_of(vec![three, DMatrix::identity(3, 3)]));
        for (row, want) in s.values.iter().zip([1.6, 1.8, 2.0]) {
            assert!((row[0] - want).abs() < 1e-15);
            assert_eq!(row[1], 1.0);
        }
    }

    #[test]
    fn short_sequences_are_uncoupled() {
        let windows = vec![DMatrix::from_element(5, 5, 0.3); 4];
        let net = TemporalNetwork::build(&seq_of(windows), &ArimaConfig::default()).unwrap();
        assert!(net.fits.iter().all(|f| f.phi.is_empty()));
        assert_eq!(net.layers.len(), 4);
        assert_eq!(net.supra.dim(), 20);
    }
}
