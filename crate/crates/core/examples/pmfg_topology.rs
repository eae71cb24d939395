//! Filter a correlation matrix to its PMFG and report the window topology.

use tempnet::corrnet::{rolling_correlations, WindowConfig};
use tempnet::data::{log_returns, synth_one_factor, FactorSpec};
use tempnet::pmfg::{build_mst, build_pmfg, topology_report};

fn main() -> tempnet::Result<()> {
    let spec = FactorSpec::linear_betas(30, 801, 0.2, 1.8, 0.01, 0.01, 3);
    let returns = log_returns(&synth_one_factor(&spec)?)?;
    let seq = rolling_correlations(
        &returns,
        WindowConfig {
            delta: 200,
            step: 100,
        },
    )?;

    let mut prev = None;
    println!("window_end   C      L      gamma  jaccard");
    for (corr, end) in seq.windows.iter().zip(&seq.anchors) {
        let pmfg = build_pmfg(corr)?;
        assert!(pmfg.certificate_valid());
        let mst = build_mst(corr)?;
        assert!(mst.edge_set().is_subset(&pmfg.graph().edge_set()));

        let g = pmfg.into_graph();
        let t = topology_report(&g, prev.as_ref())?;
        let j = t
            .jaccard_prev
            .map_or("-".to_string(), |j| format!("{j:.3}"));
        println!(
            "{end}  {:.3}  {:.3}  {:.3}  {j}",
            t.clustering, t.path_length, t.heterogeneity
        );
        prev = Some(g);
    }
    Ok(())
}
