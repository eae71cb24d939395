//! ARIMA order selection and conditional least-squares estimation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Search grid and differencing rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaConfig {
    pub p_grid: Vec<usize>,
    pub q_grid: Vec<usize>,
    pub d_max: usize,
    /// Keep differencing while the lag-1 autocorrelation exceeds this.
    pub d_threshold: f64,
}

impl Default for ArimaConfig {
    fn default() -> Self {
        ArimaConfig {
            p_grid: vec![1, 2, 3],
            q_grid: vec![0, 1, 2],
            d_max: 2,
            d_threshold: 0.95,
        }
    }
}

impl ArimaConfig {
    pub fn p_max(&self) -> usize {
        self.p_grid.iter().copied().max().unwrap_or(0)
    }

    pub fn q_max(&self) -> usize {
        self.q_grid.iter().copied().max().unwrap_or(0)
    }

    /// Shortest series accepted by [`fit_arima`].
    pub fn min_len(&self) -> usize {
        10 + self.p_max() + self.d_max
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_grid.is_empty() || self.q_grid.is_empty() {
            return Err(Error::Config("ARIMA order grids must be non-empty".into()));
        }
        if !(self.d_threshold > 0.0 && self.d_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "differencing threshold {} outside (0, 1]",
                self.d_threshold
            )));
        }
        Ok(())
    }
}

/// Fitted ARIMA(p, d, q) model for one series.
///
/// The model on the `d`-times differenced, demeaned series `y` is
/// `y_t = Σ phi_l y_{t-l} + e_t - Σ theta_l e_{t-l}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaFit {
    pub stock: usize,
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub noise_var: f64,
    pub aic: f64,
}

impl ArimaFit {
    /// Model with no dynamics, used for constant series.
    pub fn degenerate(stock: usize, d: usize) -> Self {
        ArimaFit {
            stock,
            p: 0,
            d,
            q: 0,
            phi: Vec::new(),
            theta: Vec::new(),
            noise_var: 0.0,
            aic: f64::NEG_INFINITY,
        }
    }
}

/// Sample lag-1 autocorrelation; `None` for a constant series.
pub fn lag1_autocorrelation(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let den: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if den <= f64::EPSILON * f64::EPSILON * x.len() as f64 * mean.abs().max(1.0) {
        return None;
    }
    let num: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    Some(num / den)
}

pub fn difference(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Least squares by SVD; `None` when the fit is not finite.
fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = x.clone().svd(true, true);
    let tol = svd.singular_values.max() * 1e-12;
    let beta = svd.solve(y, tol).ok()?;
    beta.iter().all(|b| b.is_finite()).then_some(beta)
}

/// Conditional-sum-of-squares residual variance of a candidate model on the
/// sample starting at `start`, with pre-sample errors set to zero.
fn css_variance(y: &[f64], phi: &[f64], theta: &[f64], start: usize) -> f64 {
    let mut e = vec![0.0; y.len()];
    let mut ss = 0.0;
    for t in start..y.len() {
        let mut pred = 0.0;
        for (l, f) in phi.iter().enumerate() {
            pred += f * y[t - l - 1];
        }
        for (l, th) in theta.iter().enumerate() {
            if t > l {
                pred -= th * e[t - l - 1];
            }
        }
        e[t] = y[t] - pred;
        ss += e[t] * e[t];
    }
    ss / (y.len() - start) as f64
}

/// Regression design: lags of `y` (and optionally of `e`) for `t in rows`.
fn design(
    y: &[f64],
    e: Option<&[f64]>,
    p: usize,
    q: usize,
    rows: std::ops::Range<usize>,
) -> (DMatrix<f64>, DVector<f64>) {
    let k = p + q;
    let nrows = rows.len();
    let mut x = DMatrix::zeros(nrows, k);
    let mut target = DVector::zeros(nrows);
    for (r, t) in rows.enumerate() {
        for l in 0..p {
            x[(r, l)] = y[t - l - 1];
        }
        if let Some(e) = e {
            for l in 0..q {
                x[(r, p + l)] = e[t - l - 1];
            }
        }
        target[r] = y[t];
    }
    (x, target)
}

/// Residuals of a long autoregression, zero before its sample starts.
fn long_ar_residuals(y: &[f64], order: usize) -> Option<Vec<f64>> {
    let (x, target) = design(y, None, order, 0, order..y.len());
    let beta = least_squares(&x, &target)?;
    let fitted = &x * &beta;
    let mut e = vec![0.0; y.len()];
    for (r, t) in (order..y.len()).enumerate() {
        e[t] = target[r] - fitted[r];
    }
    Some(e)
}

/// Differences the series (lag-1 autocorrelation rule), then selects (p, q)
/// by AIC over the configured grid. Pure AR candidates are fitted by OLS;
/// candidates with an MA part by the two-stage regression on residuals of a
/// long autoregression. All candidates are scored on a common sample.
pub fn fit_arima(series: &[f64], cfg: &ArimaConfig) -> Result<ArimaFit> {
    cfg.validate()?;
    if series.len() < cfg.min_len() {
        return Err(Error::SeriesTooShort {
            needed: cfg.min_len(),
            got: series.len(),
        });
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite value at position {i}")));
    }
    if is_constant(series) {
        return Ok(ArimaFit::degenerate(0, 0));
    }

    let mut x = series.to_vec();
    let mut d = 0;
    while d < cfg.d_max {
        match lag1_autocorrelation(&x) {
            Some(r) if r > cfg.d_threshold => {
                x = difference(&x);
                d += 1;
            }
            _ => break,
        }
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let y: Vec<f64> = x.iter().map(|v| v - mean).collect();
    if lag1_autocorrelation(&y).is_none() {
        return Ok(ArimaFit::degenerate(0, d));
    }

    let n = y.len();
    let start = cfg.p_max();
    let long_order = (cfg.p_max() + cfg.q_max())
        .max((n as f64).ln().ceil() as usize * 2)
        .min(n / 3);
    let resid = if cfg.q_max() > 0 {
        long_ar_residuals(&y, long_order)
    } else {
        None
    };

    let mut best: Option<ArimaFit> = None;
    for &p in &cfg.p_grid {
        for &q in &cfg.q_grid {
            let coef = if q == 0 {
                if p == 0 {
                    Some(DVector::zeros(0))
                } else {
                    let (dx, dy) = design(&y, None, p, 0, start..n);
                    least_squares(&dx, &dy)
                }
            } else {
                let Some(e) = resid.as_deref() else { continue };
                let first = start.max(long_order + q);
                if n <= first + p + q {
                    continue;
                }
                let (dx, dy) = design(&y, Some(e), p, q, first..n);
                least_squares(&dx, &dy)
            };
            let Some(coef) = coef else { continue };
            let phi: Vec<f64> = coef.iter().take(p).copied().collect();
            let theta: Vec<f64> = coef.iter().skip(p).map(|c| -c).collect();
            let var = css_variance(&y, &phi, &theta, start);
            if !var.is_finite() {
                continue;
            }
            let aic =
                (n - start) as f64 * var.max(f64::MIN_POSITIVE).ln() + 2.0 * (p + q + 1) as f64;
            if best.as_ref().is_none_or(|b| aic < b.aic) {
                best = Some(ArimaFit {
                    stock: 0,
                    p,
                    d,
                    q,
                    phi,
                    theta,
                    noise_var: var,
                    aic,
                });
            }
        }
    }
    best.ok_or_else(|| Error::Convergence("no ARIMA candidate produced a finite fit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let e = noise(n + 200, seed);
        let mut x = vec![0.0; n + 200];
        for t in 1..x.len() {
            x[t] = phi * x[t - 1] + e[t];
        }
        x.split_off(200)
    }

    #[test]
    fn recovers_ar1_in_most_seeds() {
        let mut hits = 0;
        for seed in 0..20 {
            let fit = fit_arima(&ar1(0.6, 2000, seed), &ArimaConfig::default()).unwrap();
            assert_eq!(fit.d, 0);
            assert_eq!(fit.phi.len(), fit.p);
            assert_eq!(fit.theta.len(), fit.q);
            if (fit.phi[0] - 0.6).abs() < 0.1 {
                hits += 1;
            }
        }
        assert!(hits >= 18, "{hits}/20");
    }

    #[test]
    fn white_noise_has_small_ar_term() {
        let fit = fit_arima(&noise(2000, 11), &ArimaConfig::default()).unwrap();
        assert_eq!(fit.d, 0);
        assert!(fit.phi[0].abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn random_walk_is_differenced_once() {
        let mut walk = noise(2000, 5);
        for t in 1..walk.len() {
            walk[t] += walk[t - 1];
        }
        assert!(lag1_autocorrelation(&walk).unwrap() > 0.95);
        assert!(lag1_autocorrelation(&difference(&walk)).unwrap() < 0.95);
        assert_eq!(fit_arima(&walk, &ArimaConfig::default()).unwrap().d, 1);
    }

    #[test]
    fn constant_and_short_series() {
        let fit = fit_arima(&[3.0; 40], &ArimaConfig::default()).unwrap();
        assert_eq!((fit.p, fit.d, fit.q), (0, 0, 0));
        assert!(fit.phi.is_empty());
        let short = vec![1.0; 14];
        assert!(matches!(
            fit_arima(&short, &ArimaConfig::default()),
            Err(Error::SeriesTooShort {
                needed: 15,
                got: 14
            })
        ));
    }

    #[test]
    fn linear_trend_differences_to_constant() {
        let trend: Vec<f64> = (0..200).map(|t| 2.0 + 0.5 * t as f64).collect();
        let fit = fit_arima(&trend, &ArimaConfig::default()).unwrap();
        assert_eq!((fit.p, fit.d, fit.q), (0, 1, 0));
    }

    #[test]
    fn ma_component_is_selected_for_ma_data() {
        let e = noise(3001, 8);
        let x: Vec<f64> = (1..e.len()).map(|t| e[t] - 0.7 * e[t - 1]).collect();
        let fit = fit_arima(&x, &ArimaConfig::default()).unwrap();
        assert!(fit.q >= 1, "{fit:?}");
    }
}
