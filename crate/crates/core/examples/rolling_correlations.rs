//! Rolling-window Pearson correlations and the strength series the temporal
//! coupling is fitted to.

use tempnet::corrnet::{rolling_correlations, WindowConfig};
use tempnet::data::{log_returns, synth_one_factor, FactorSpec};
use tempnet::temporal::strength_series;

fn main() -> tempnet::Result<()> {
    let spec = FactorSpec::linear_betas(10, 1001, 0.2, 1.8, 0.01, 0.01, 1);
    let returns = log_returns(&synth_one_factor(&spec)?)?;
    let seq = rolling_correlations(
        &returns,
        WindowConfig {
            delta: 250,
            step: 50,
        },
    )?;
    println!("{} windows of {} days", seq.len(), seq.config.delta);

    let first = &seq.windows[0];
    let n = first.nrows();
    println!(
        "lowest-beta pair {:.3}, highest-beta pair {:.3}",
        first[(0, 1)],
        first[(n - 2, n - 1)]
    );

    let s = strength_series(&seq);
    for (ticker, row) in returns.tickers.iter().zip(&s.values) {
        let shown: Vec<String> = row.iter().map(|v| format!("{v:.2}")).collect();
        println!("{ticker}  {}", shown.join(" "));
    }
    Ok(())
}
