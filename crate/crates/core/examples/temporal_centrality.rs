//! Temporal eigenvector centrality from the supra-evolution matrix, next to
//! the aggregated-network baseline.

use tempnet::corrnet::{rolling_correlations, WindowConfig};
use tempnet::data::{log_returns, synth_one_factor, FactorSpec};
use tempnet::temporal::{leading_eigenpair, ArimaConfig, EigenConfig, TemporalNetwork};

fn main() -> tempnet::Result<()> {
    let mut spec = FactorSpec::linear_betas(20, 1001, 0.3, 0.3, 0.01, 0.01, 5);
    // one stock loads heavily on the factor
    spec.betas[7] = 2.5;
    let returns = log_returns(&synth_one_factor(&spec)?)?;
    let seq = rolling_correlations(
        &returns,
        WindowConfig {
            delta: 250,
            step: 25,
        },
    )?;
    let net = TemporalNetwork::build(&seq, &ArimaConfig::default())?;

    for fit in net.fits.iter().take(3) {
        println!(
            "stock {} ARIMA({},{},{}) phi {:?}",
            fit.stock, fit.p, fit.d, fit.q, fit.phi
        );
    }

    let eig = EigenConfig::default();
    let pair = leading_eigenpair(&net.supra, &eig)?;
    println!(
        "lambda1 {:.6} via {:?}, residual {:.1e}",
        pair.lambda, pair.method, pair.residual
    );

    let temporal = net.temporal_ranking(&returns.tickers, &eig, false)?;
    // with many windows the union of layers is close to complete, so the
    // aggregated scores bunch up and ties fall back to ticker order
    let aggregated = net.aggregated_ranking(&returns.tickers)?;
    println!("rank  temporal        aggregated");
    for k in 0..5 {
        let (a, b) = (temporal.order[k], aggregated.order[k]);
        println!(
            "{:>4}  {} {:>9.4}  {} {:>6.2}",
            k + 1,
            temporal.tickers[a],
            temporal.scores[a],
            aggregated.tickers[b],
            aggregated.scores[b]
        );
    }
    Ok(())
}
