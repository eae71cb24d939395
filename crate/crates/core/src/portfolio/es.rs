//! Empirical expected shortfall and its minimisation over long-only
//! portfolios.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lp::{self, LinearProgram};
use super::{check_scenarios, Portfolio};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsResult {
    /// Tail probability.
    pub alpha: f64,
    /// Empirical alpha-quantile of the return distribution.
    pub var_level: f64,
    /// Expected shortfall, on the loss scale.
    pub es: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "tail probability {alpha} outside (0, 1)"
        )))
    }
}

/// Expected shortfall of the empirical distribution of `pnl`.
///
/// With `x` the lower empirical alpha-quantile,
/// `ES = -(1/alpha) (E[X 1{X <= x}] - x (P[X <= x] - alpha))`, which is the
/// average of the worst `alpha * L` outcomes with the boundary scenario
/// weighted fractionally.
pub fn expected_shortfall(pnl: &[f64], alpha: f64) -> Result<EsResult> {
    check_alpha(alpha)?;
    if pnl.is_empty() {
        return Err(Error::InsufficientData(
            "no scenarios for expected shortfall".into(),
        ));
    }
    if let Some(i) = pnl.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite scenario return at {i}")));
    }
    let l = pnl.len();
    let mut sorted = pnl.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((alpha * l as f64).ceil() as usize).clamp(1, l);
    let x = sorted[k - 1];
    let (mut tail_sum, mut count) = (0.0, 0usize);
    for &v in sorted.iter().take_while(|&&v| v <= x) {
        tail_sum += v;
        count += 1;
    }
    let lf = l as f64;
    let es = -(tail_sum / lf - x * (count as f64 / lf - alpha)) / alpha;
    Ok(EsResult {
        alpha,
        var_level: x,
        es,
    })
}

/// Scenario returns `Σ_i ω_i r_{i,s}` of a weighted portfolio.
pub fn portfolio_pnl(returns: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let l = returns.first().map_or(0, Vec::len);
    (0..l)
        .map(|s| returns.iter().zip(weights).map(|(r, w)| w * r[s]).sum())
        .collect()
}

/// Long-only, fully invested weights minimising empirical expected shortfall.
///
/// `returns[i][s]` is asset `i` in scenario `s`. The linearised problem is
/// solved through its dual, whose variables are scenario probabilities capped
/// at `1/(alpha L)`; this keeps the basis at `m + 1` rows however many
/// scenarios there are. Identical assets share their weight equally.
pub fn minimize_es(returns: &[Vec<f64>], alpha: f64) -> Result<(Portfolio, EsResult)> {
    check_alpha(alpha)?;
    check_scenarios(returns, 1)?;
    let l = returns[0].len();

    // collapse identical assets
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..returns.len() {
        match groups.iter_mut().find(|g| returns[g[0]] == returns[i]) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    let m = groups.len();
    let scale = returns.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = if scale > 0.0 { 1.0 / scale } else { 1.0 };

    // columns: pi_s (L), sigma_i (m), t (free); rows: assets then budget
    let cols = l + m + 1;
    let mut a = DMatrix::zeros(m + 1, cols);
    for (g, members) in groups.iter().enumerate() {
        let r = &returns[members[0]];
        for s in 0..l {
            a[(g, s)] = r[s] * scale;
        }
        a[(g, l + g)] = 1.0;
        a[(g, l + m)] = 1.0;
    }
    for s in 0..l {
        a[(m, s)] = 1.0;
    }
    let mut b = DVector::zeros(m + 1);
    b[m] = 1.0;
    let mut c = DVector::zeros(cols);
    c[l + m] = -1.0;
    let cap = 1.0 / (alpha * l as f64);
    let mut lower = vec![0.0; cols];
    let mut upper = vec![f64::INFINITY; cols];
    upper[..l].fill(cap);
    lower[l + m] = f64::NEG_INFINITY;

    let sol = lp::solve(
        &LinearProgram {
            a,
            b,
            c,
            lower,
            upper,
        },
        1e-12,
        50 * (cols + m + 1) + 1000,
    )?;

    let mut group_w: Vec<f64> = sol.duals[..m].iter().map(|y| (-y).max(0.0)).collect();
    let total: f64 = group_w.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Convergence(format!(
            "expected-shortfall dual produced weight total {total}"
        )));
    }
    group_w.iter_mut().for_each(|w| *w /= total);
    let mut weights = vec![0.0; returns.len()];
    for (members, w) in groups.iter().zip(&group_w) {
        for &i in members {
            weights[i] = w / members.len() as f64;
        }
    }
    let es = expected_shortfall(&portfolio_pnl(returns, &weights), alpha)?;
    Ok((
        Portfolio {
            members: (0..returns.len()).collect(),
            weights,
            long_only: true,
        },
        es,
    ))
}
