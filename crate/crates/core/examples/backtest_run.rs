//! Out-of-sample experiment: select on the estimation window, optimise and
//! evaluate on the following days, then write the run directory.

use tempnet::backtest::{run_outofsample, ExperimentConfig, Provenance};
use tempnet::corrnet::WindowConfig;
use tempnet::data::{log_returns, synth_one_factor, FactorSpec};

fn main() -> tempnet::Result<()> {
    let spec = FactorSpec::linear_betas(40, 1301, 0.2, 1.8, 0.01, 0.01, 21);
    let returns = log_returns(&synth_one_factor(&spec)?)?;
    let cfg = ExperimentConfig {
        window: WindowConfig {
            delta: 250,
            step: 50,
        },
        estimation_len: 1000,
        evaluation_len: 250,
        sizes: vec![5, 10, 20, 30],
        frontier_size: 20,
        seed: spec.seed,
        ..ExperimentConfig::default()
    };
    let provenance = Provenance::for_panel(&returns, "synthetic", None, spec.seed);
    let report = run_outofsample(&returns, &cfg, provenance)?;

    for curve in &report.es_curves {
        let es: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{:.4}", p.es))
            .collect();
        println!(
            "{:<10} {:<10} ES by size: {}",
            curve.mode.as_str(),
            curve.method.as_str(),
            es.join(" ")
        );
    }

    let out = std::env::temp_dir().join("tempnet-example");
    let dir = report.write(&out, Some("example"))?;
    println!("artifacts in {}", dir.display());
    Ok(())
}
