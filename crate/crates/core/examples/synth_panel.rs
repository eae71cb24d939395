//! Generate a one-factor price panel, write it as wide CSV and read it back.
//!
//! ```bash
//! cargo run --example synth_panel
//! ```

use tempnet::data::{load_prices, log_returns, synth_one_factor, AlignmentPolicy, FactorSpec};

fn main() -> tempnet::Result<()> {
    let spec = FactorSpec::linear_betas(8, 250, 0.2, 1.8, 0.01, 0.01, 42);
    let prices = synth_one_factor(&spec)?;

    let mut csv = Vec::new();
    prices.write_wide_csv(&mut csv)?;
    let reloaded = load_prices(csv.as_slice(), &AlignmentPolicy::default())?;
    assert_eq!(reloaded.tickers, prices.tickers);

    let returns = log_returns(&reloaded)?;
    println!("{} stocks, {} returns", returns.n_stocks(), returns.len());
    for (ticker, r) in returns.tickers.iter().zip(&returns.returns) {
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        let sd = (r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r.len() - 1) as f64).sqrt();
        println!("{ticker}  daily sd {sd:.4}");
    }
    Ok(())
}
