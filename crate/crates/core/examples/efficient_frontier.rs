//! Long-only and unconstrained mean-variance frontiers of a small universe.

use tempnet::data::{log_returns, synth_one_factor, FactorSpec};
use tempnet::portfolio::{default_q_grid, efficient_frontier};

fn main() -> tempnet::Result<()> {
    let spec = FactorSpec::linear_betas(6, 500, 0.2, 1.8, 0.01, 0.01, 9);
    let returns = log_returns(&synth_one_factor(&spec)?)?;

    for long_only in [true, false] {
        let pts = efficient_frontier(&returns.returns, &default_q_grid(), long_only)?;
        println!("long_only = {long_only}");
        println!("        q      risk     return");
        for p in pts.iter().step_by(7) {
            println!("{:>9.4}  {:.3e}  {:+.3e}", p.q, p.risk, p.ret);
        }
        let last = pts.last().expect("non-empty grid");
        let w: Vec<String> = last.weights.iter().map(|w| format!("{w:.2}")).collect();
        println!("weights at q = {}: [{}]\n", last.q, w.join(", "));
    }
    Ok(())
}
