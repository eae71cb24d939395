//! Mean-variance weights: `min ω'Σω - q R'ω` over the budget constraint,
//! optionally with `ω >= 0`.

use nalgebra::{DMatrix, DVector};

use super::Portfolio;
use crate::error::{Error, Result};

/// Covariance with a small ridge added when it is numerically singular.
/// The ridge is `1e-10 * trace / m`.
pub fn condition_covariance(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = cov.nrows();
    if m == 0 || cov.ncols() != m {
        return Err(Error::Size(format!(
            "covariance must be square and non-empty, got {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("covariance has non-finite entries".into()));
    }
    let scale = cov.amax().max(f64::MIN_POSITIVE);
    for i in 0..m {
        for j in 0..i {
            if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Domain(format!(
                    "covariance is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let eig = cov.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    let mut out = cov.clone();
    if lo <= 1e-12 * hi.abs().max(f64::MIN_POSITIVE) {
        let eps = 1e-10 * cov.trace().abs().max(f64::MIN_POSITIVE) / m as f64;
        for i in 0..m {
            out[(i, i)] += eps;
        }
    }
    Ok(out)
}

/// Solves the equality-constrained problem on the variables in `free`,
/// returning the step for those variables and the budget multiplier.
fn eqp_step(h: &DMatrix<f64>, g: &DVector<f64>, free: &[usize]) -> Option<(Vec<f64>, f64)> {
    let k = free.len();
    let mut kkt = DMatrix::zeros(k + 1, k + 1);
    let mut rhs = DVector::zeros(k + 1);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            kkt[(a, b)] = h[(i, j)];
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
        rhs[a] = -g[i];
    }
    let sol = kkt.lu().solve(&rhs)?;
    sol.iter()
        .all(|v| v.is_finite())
        .then(|| (sol.rows(0, k).iter().copied().collect(), sol[k]))
}

/// First-order optimality residual of `weights` for the problem defined by
/// `cov`, `mean` and `q`: stationarity on positive weights, sign of the
/// multipliers on zero weights (long-only) and the budget.
pub fn kkt_residual(
    cov: &DMatrix<f64>,
    mean: &[f64],
    q: f64,
    weights: &[f64],
    long_only: bool,
) -> f64 {
    let w = DVector::from_column_slice(weights);
    let g = (cov * &w) * 2.0 - DVector::from_column_slice(mean) * q;
    let free: Vec<usize> = (0..weights.len())
        .filter(|&i| !long_only || weights[i] > 1e-12)
        .collect();
    let nu = if free.is_empty() {
        0.0
    } else {
        -free.iter().map(|&i| g[i]).sum::<f64>() / free.len() as f64
    };
    let mut r = (weights.iter().sum::<f64>() - 1.0).abs();
    for i in 0..weights.len() {
        let lam = g[i] + nu;
        r = r.max(if free.contains(&i) {
            lam.abs()
        } else {
            (-lam).max(0.0)
        });
        if long_only {
            r = r.max((-weights[i]).max(0.0));
        }
    }
    r
}

/// Optimal weights for risk tolerance `q`. Without the sign constraint the
/// first-order system is solved directly; with it, a primal active-set method
/// starting from equal weights.
pub fn mean_variance_weights(
    cov: &DMatrix<f64>,
    mean: &[f64],
    q: f64,
    long_only: bool,
) -> Result<Portfolio> {
    let m = cov.nrows();
    if mean.len() != m {
        return Err(Error::Size(format!(
            "{} means for a {m}x{m} covariance",
            mean.len()
        )));
    }
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::Config(format!(
            "risk tolerance {q} must be finite and >= 0"
        )));
    }
    let h = condition_covariance(cov)? * 2.0;
    let c = DVector::from_column_slice(mean) * -q;
    let all: Vec<usize> = (0..m).collect();
    let mut w = DVector::from_element(m, 1.0 / m as f64);

    if !long_only {
        let g = &h * &w + &c;
        let (p, _) = eqp_step(&h, &g, &all)
            .ok_or_else(|| Error::Convergence("singular mean-variance system".into()))?;
        for i in 0..m {
            w[i] += p[i];
        }
        return Ok(Portfolio::new(all, w.iter().copied().collect(), false));
    }

    let tol = 1e-12 * (h.amax() + c.amax() + 1.0);
    let mut fixed = vec![false; m];
    // set after a full step: the iterate then solves the current subproblem
    // and any recomputed step is round-off
    let mut settled = false;
    let cap = 10 * m + 100;
    for _ in 0..cap {
        let free: Vec<usize> = (0..m).filter(|&i| !fixed[i]).collect();
        let g = &h * &w + &c;
        let (p, nu) = eqp_step(&h, &g, &free)
            .ok_or_else(|| Error::Convergence("singular active-set system".into()))?;
        let step_norm = p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if settled || step_norm <= 1e-14 {
            settled = false;
            // release the constraint with the most negative multiplier
            let worst = (0..m)
                .filter(|&i| fixed[i])
                .map(|i| (i, g[i] + nu))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((i, lam)) if lam < -tol => fixed[i] = false,
                _ => {
                    let weights = w.iter().map(|v| v.max(0.0)).collect::<Vec<_>>();
                    let total: f64 = weights.iter().sum();
                    return Ok(Portfolio::new(
                        all,
                        weights.iter().map(|v| v / total).collect(),
                        true,
                    ));
                }
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut block = None;
        for (a, &i) in free.iter().enumerate() {
            if p[a] < 0.0 {
                let ratio = -w[i] / p[a];
                if ratio < alpha {
                    alpha = ratio;
                    block = Some(i);
                }
            }
        }
        for (a, &i) in free.iter().enumerate() {
            w[i] += alpha * p[a];
        }
        match block {
            Some(i) => {
                w[i] = 0.0;
                fixed[i] = true;
            }
            None => settled = true,
        }
    }
    Err(Error::Convergence(format!(
        "active set did not settle in {cap} iterations (weights {:?})",
        w.as_slice()
    )))
}
