//! Rolling-window Pearson correlation matrices.

use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{csv_write_err, ReturnPanel};
use crate::error::{Error, Result};

/// Window length and shift, in return observations. Windows start at the
/// beginning of the panel and are labelled by the date of their last return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub delta: usize,
    pub step: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            delta: 500,
            step: 25,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self, len: usize) -> Result<()> {
        if self.delta < 2 {
            return Err(Error::Config(format!(
                "window length must be at least 2, got {}",
                self.delta
            )));
        }
        if self.step < 1 {
            return Err(Error::Config("window step must be at least 1".into()));
        }
        if self.delta > len {
            return Err(Error::Config(format!(
                "window length {} exceeds panel length {len}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// `floor((len - delta) / step) + 1`.
pub fn window_count(len: usize, delta: usize, step: usize) -> Result<usize> {
    WindowConfig { delta, step }.validate(len)?;
    Ok((len - delta) / step + 1)
}

/// A pair whose correlation was undefined in some window and replaced by 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegeneratePair {
    pub window: usize,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSequence {
    pub windows: Vec<DMatrix<f64>>,
    /// End date of each window.
    pub anchors: Vec<NaiveDate>,
    pub config: WindowConfig,
    pub degenerate: Vec<DegeneratePair>,
}

impl CorrelationSequence {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn n_stocks(&self) -> usize {
        self.windows.first().map_or(0, |m| m.nrows())
    }
}

/// Centred, unit-norm copy of `x`, or `None` for a constant series.
fn standardize(x: &[f64]) -> Option<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let centred: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let norm = centred.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 0.0 || !norm.is_finite() {
        return None;
    }
    Some(centred.into_iter().map(|v| v / norm).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pearson correlation of two equal-length series, clamped to `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Size(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Size("need at least two observations".into()));
    }
    let zx = standardize(x).ok_or(Error::UndefinedCorrelation("x"))?;
    let zy = standardize(y).ok_or(Error::UndefinedCorrelation("y"))?;
    Ok(dot(&zx, &zy).clamp(-1.0, 1.0))
}

fn window_matrix(
    returns: &ReturnPanel,
    start: usize,
    delta: usize,
) -> (DMatrix<f64>, Vec<(usize, usize)>) {
    let n = returns.n_stocks();
    let z: Vec<Option<Vec<f64>>> = returns
        .returns
        .iter()
        .map(|r| standardize(&r[start..start + delta]))
        .collect();
    let mut m = DMatrix::identity(n, n);
    let mut degenerate = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let rho = match (&z[i], &z[j]) {
                (Some(a), Some(b)) => dot(a, b).clamp(-1.0, 1.0),
                _ => {
                    degenerate.push((i, j));
                    0.0
                }
            };
            m[(i, j)] = rho;
            m[(j, i)] = rho;
        }
    }
    (m, degenerate)
}

/// Correlation matrix of every window `[t*step, t*step + delta)`.
///
/// Pairs involving a constant series are set to 0 and listed in
/// [`CorrelationSequence::degenerate`].
pub fn rolling_correlations(
    returns: &ReturnPanel,
    config: WindowConfig,
) -> Result<CorrelationSequence> {
    let t = window_count(returns.len(), config.delta, config.step)?;
    if config.delta < returns.n_stocks() {
        log::warn!(
            "window length {} is shorter than the number of stocks {}; matrices will be singular",
            config.delta,
            returns.n_stocks()
        );
    }
    let results: Vec<_> = (0..t)
        .into_par_iter()
        .map(|w| window_matrix(returns, w * config.step, config.delta))
        .collect();
    let mut windows = Vec::with_capacity(t);
    let mut degenerate = Vec::new();
    for (w, (m, deg)) in results.into_iter().enumerate() {
        if !deg.is_empty() {
            log::warn!(
                "window {w}: {} undefined correlation(s) set to 0",
                deg.len()
            );
        }
        degenerate.extend(
            deg.into_iter()
                .map(|(i, j)| DegeneratePair { window: w, i, j }),
        );
        windows.push(m);
    }
    let anchors = (0..t)
        .map(|w| returns.dates[w * config.step + config.delta - 1])
        .collect();
    Ok(CorrelationSequence {
        windows,
        anchors,
        config,
        degenerate,
    })
}

/// Writes one `corr_<enddate>.csv` per window into `dir`.
pub fn write_correlation_csvs(
    seq: &CorrelationSequence,
    tickers: &[String],
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (m, anchor) in seq.windows.iter().zip(&seq.anchors) {
        let path = dir.join(format!("corr_{}.csv", anchor.format("%Y-%m-%d")));
        let mut w = csv::Writer::from_path(&path).map_err(csv_write_err)?;
        let mut header = vec!["ticker".to_string()];
        header.extend(tickers.iter().cloned());
        w.write_record(&header).map_err(csv_write_err)?;
        for (i, t) in tickers.iter().enumerate() {
            let mut rec = vec![t.clone()];
            rec.extend((0..m.ncols()).map(|j| format!("{}", m[(i, j)])));
            w.write_record(&rec).map_err(csv_write_err)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::business_days;
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1., 2., 3.], &[2., 4., 6.]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1., 2., 3.], &[3., 2., 1.]).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson(&[1., 1., 1.], &[1., 2., 3.]),
            Err(Error::UndefinedCorrelation("x"))
        ));
        assert!(matches!(pearson(&[1.], &[1.]), Err(Error::Size(_))));
        assert!(matches!(pearson(&[1., 2.], &[1.]), Err(Error::Size(_))));
    }

    #[test]
    fn window_counts() {
        assert_eq!(window_count(4025, 500, 25).unwrap(), 142);
        assert_eq!(window_count(3000, 300, 25).unwrap(), 109);
        assert_eq!(window_count(2700, 300, 25).unwrap(), 97);
        assert_eq!(window_count(500, 500, 25).unwrap(), 1);
        assert_eq!(window_count(510, 500, 7).unwrap(), 2);
        assert!(matches!(window_count(499, 500, 25), Err(Error::Config(_))));
    }

    fn panel(returns: Vec<Vec<f64>>) -> ReturnPanel {
        let l = returns[0].len();
        ReturnPanel {
            tickers: (0..returns.len()).map(|i| format!("T{i}")).collect(),
            dates: business_days(l),
            returns,
        }
    }

    #[test]
    fn identical_rows_give_all_ones() {
        let row: Vec<f64> = (0..40).map(|t| ((t * 7919) % 13) as f64 - 6.0).collect();
        let p = panel(vec![row.clone(), row.clone(), row]);
        let seq = rolling_correlations(&p, WindowConfig { delta: 10, step: 5 }).unwrap();
        assert_eq!(seq.len(), 7);
        for m in &seq.windows {
            assert!(m.iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn constant_series_reported_and_zeroed() {
        let p = panel(vec![vec![1.0; 6], vec![1., 2., 0., 3., 1., 2.]]);
        let seq = rolling_correlations(&p, WindowConfig { delta: 4, step: 2 }).unwrap();
        assert_eq!(seq.degenerate.len(), 2);
        assert_eq!(seq.windows[0][(0, 1)], 0.0);
        assert_eq!(seq.windows[0][(0, 0)], 1.0);
    }

    #[test]
    fn window_longer_than_panel_is_config_error() {
        let p = panel(vec![vec![1., 2., 3.], vec![3., 1., 2.]]);
        assert!(matches!(
            rolling_correlations(&p, WindowConfig { delta: 4, step: 1 }),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn anchors_are_window_end_dates() {
        let p = panel(vec![
            vec![1., 2., 0., 3., 1., 2., 5.],
            vec![3., 1., 2., 0., 1., 4., 2.],
        ]);
        let seq = rolling_correlations(&p, WindowConfig { delta: 3, step: 2 }).unwrap();
        assert_eq!(seq.anchors, vec![p.dates[2], p.dates[4], p.dates[6]]);
    }

    fn series() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 30)
    }

    proptest! {
        #[test]
        fn symmetric_unit_diagonal_and_bounded(a in series(), b in series(), c in series()) {
            let p = panel(vec![a, b, c]);
            let seq = rolling_correlations(&p, WindowConfig { delta: 12, step: 6 }).unwrap();
            for m in &seq.windows {
                for i in 0..3 {
                    prop_assert_eq!(m[(i, i)], 1.0);
                    for j in 0..3 {
                        prop_assert_eq!(m[(i, j)], m[(j, i)]);
                        prop_assert!((-1.0..=1.0).contains(&m[(i, j)]));
                    }
                }
            }
        }

        #[test]
        fn shift_and_scale_invariance(a in series(), b in series(), shift in -5.0f64..5.0, scale in 0.01f64..100.0) {
            let r = pearson(&a, &b).unwrap();
            let shifted: Vec<f64> = a.iter().map(|v| v + shift).collect();
            let scaled: Vec<f64> = a.iter().map(|v| v * scale).collect();
            prop_assert!((pearson(&shifted, &b).unwrap() - r).abs() < 1e-12);
            prop_assert!((pearson(&scaled, &b).unwrap() - r).abs() < 1e-12);
        }

        #[test]
        fn windows_match_direct_recomputation(a in series(), b in series(), c in series()) {
            let p = panel(vec![a, b, c]);
            let cfg = WindowConfig { delta: 9, step: 4 };
            let seq = rolling_correlations(&p, cfg).unwrap();
            for (w, m) in seq.windows.iter().enumerate() {
                let s = w * cfg.step;
                for i in 0..3 {
                    for j in (i + 1)..3 {
                        let direct = pearson(&p.returns[i][s..s + cfg.delta], &p.returns[j][s..s + cfg.delta]).unwrap();
                        prop_assert_eq!(m[(i, j)].to_bits(), direct.to_bits());
                    }
                }
            }
        }
    }
}
