//! Empirical expected shortfall and the long-only portfolio minimising it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StudentT};
use tempnet::portfolio::{expected_shortfall, minimize_es, portfolio_pnl};

fn main() -> tempnet::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = StudentT::new(4.0).expect("valid dof");
    // heavier scale for later assets
    let returns: Vec<Vec<f64>> = (0..4)
        .map(|i| {
            let scale = 0.01 * (1.0 + i as f64);
            (0..500)
                .map(|_| 2e-4 + scale * t.sample(&mut rng))
                .collect()
        })
        .collect();
    let alpha = 0.05;

    for (i, r) in returns.iter().enumerate() {
        let es = expected_shortfall(r, alpha)?;
        println!("asset {i}: VaR level {:+.4}, ES {:.4}", es.var_level, es.es);
    }
    let equal = expected_shortfall(&portfolio_pnl(&returns, &[0.25; 4]), alpha)?;
    let (p, best) = minimize_es(&returns, alpha)?;
    println!("equal weights ES {:.4}", equal.es);
    println!(
        "optimised ES     {:.4} with weights {:.3?}",
        best.es, p.weights
    );
    Ok(())
}
