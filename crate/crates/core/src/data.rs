//! Price ingestion, log returns and synthetic one-factor panels.
//!
//! Two CSV layouts are accepted:
//!
//! * wide: `date,<ticker>,<ticker>,...` with one adjusted close per cell, an
//!   empty cell meaning "missing";
//! * long: `date,ticker,close`.
//!
//! Both are aligned onto the union of observed dates. Tickers whose coverage
//! falls below [`AlignmentPolicy::min_coverage`] are dropped, remaining gaps are
//! forward-filled and then back-filled so the panel is rectangular. Tickers
//! are sorted lexicographically, which makes ingestion independent of layout
//! and column order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Aligned panel of adjusted closing prices, one row per stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePanel {
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// `prices[i][t]` is the close of stock `i` on `dates[t]`.
    pub prices: Vec<Vec<f64>>,
}

impl PricePanel {
    /// Builds a panel after checking shape and date ordering.
    ///
    /// Price positivity is checked later by [`log_returns`], which reports the
    /// offending stock and date.
    pub fn new(tickers: Vec<String>, dates: Vec<NaiveDate>, prices: Vec<Vec<f64>>) -> Result<Self> {
        if tickers.len() != prices.len() {
            return Err(Error::Size(format!(
                "{} tickers but {} price rows",
                tickers.len(),
                prices.len()
            )));
        }
        if let Some((i, row)) = prices
            .iter()
            .enumerate()
            .find(|(_, row)| row.len() != dates.len())
        {
            return Err(Error::Size(format!(
                "row for {} has {} prices, expected {}",
                tickers[i],
                row.len(),
                dates.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Domain(format!(
                "dates must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(PricePanel {
            tickers,
            dates,
            prices,
        })
    }

    pub fn n_stocks(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    /// Writes the panel as a wide CSV.
    pub fn write_wide_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string()];
        header.extend(self.tickers.iter().cloned());
        w.write_record(&header).map_err(csv_write_err)?;
        for (t, date) in self.dates.iter().enumerate() {
            let mut rec = Vec::with_capacity(self.tickers.len() + 1);
            rec.push(date.format(DATE_FORMAT).to_string());
            for row in &self.prices {
                rec.push(format!("{}", row[t]));
            }
            w.write_record(&rec).map_err(csv_write_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Log returns, one row per stock. `dates[t]` is the date at which return `t`
/// is realised, i.e. the later of the two price dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnPanel {
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<Vec<f64>>,
}

impl ReturnPanel {
    pub fn n_stocks(&self) -> usize {
        self.tickers.len()
    }

    /// Number of return observations `L`.
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Restricts the panel to the observations `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<ReturnPanel> {
        if start >= end || end > self.len() {
            return Err(Error::Config(format!(
                "slice [{start}, {end}) out of range for panel of length {}",
                self.len()
            )));
        }
        Ok(ReturnPanel {
            tickers: self.tickers.clone(),
            dates: self.dates[start..end].to_vec(),
            returns: self
                .returns
                .iter()
                .map(|r| r[start..end].to_vec())
                .collect(),
        })
    }

    /// Keeps only the stocks at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> ReturnPanel {
        ReturnPanel {
            tickers: indices.iter().map(|&i| self.tickers[i].clone()).collect(),
            dates: self.dates.clone(),
            returns: indices.iter().map(|&i| self.returns[i].clone()).collect(),
        }
    }
}

/// CSV layout of a price file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Detect from the header: `date,ticker,close` is long, anything else wide.
    #[default]
    Auto,
    Wide,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentPolicy {
    /// Minimum fraction of dates a ticker must cover to be kept.
    pub min_coverage: f64,
    pub layout: Layout,
}

impl Default for AlignmentPolicy {
    fn default() -> Self {
        AlignmentPolicy {
            min_coverage: 0.9,
            layout: Layout::Auto,
        }
    }
}

/// Reads and aligns a price panel from a CSV source.
pub fn load_prices<R: Read>(source: R, policy: &AlignmentPolicy) -> Result<PricePanel> {
    if !(0.0..=1.0).contains(&policy.min_coverage) {
        return Err(Error::Config(format!(
            "min_coverage must lie in [0, 1], got {}",
            policy.min_coverage
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::Format {
                line,
                column: 0,
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        records.push((line, rec));
    }
    let Some((header_line, header)) = records.first() else {
        return Err(Error::Format {
            line: 1,
            column: 1,
            message: "empty file".into(),
        });
    };
    let header: Vec<String> = header.iter().map(|s| s.to_ascii_lowercase()).collect();
    let layout = match policy.layout {
        Layout::Auto if header == ["date", "ticker", "close"] => Layout::Long,
        Layout::Auto => Layout::Wide,
        other => other,
    };
    if header.first().map(String::as_str) != Some("date") {
        return Err(Error::Format {
            line: *header_line,
            column: 1,
            message: "first column must be `date`".into(),
        });
    }
    let series = match layout {
        Layout::Long => parse_long(&records)?,
        _ => parse_wide(&records)?,
    };
    align(series, policy.min_coverage)
}

/// Convenience wrapper around [`load_prices`] for a file path.
pub fn load_prices_path(path: impl AsRef<Path>, policy: &AlignmentPolicy) -> Result<PricePanel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_prices(std::io::BufReader::new(file), policy)
}

type RawSeries = BTreeMap<String, BTreeMap<NaiveDate, f64>>;

fn parse_date(s: &str, line: usize, column: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, DATE_FORMAT).map_err(|e| Error::Format {
        line,
        column,
        message: format!("bad date {s:?}: {e}"),
    })
}

fn parse_price(s: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Format {
        line,
        column,
        message: format!("bad price {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Format {
            line,
            column,
            message: format!("non-finite price {s:?}"),
        });
    }
    Ok(v)
}

fn parse_wide(records: &[(usize, csv::StringRecord)]) -> Result<RawSeries> {
    let (header_line, header) = &records[0];
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if tickers.is_empty() {
        return Err(Error::Format {
            line: *header_line,
            column: 2,
            message: "no ticker columns".into(),
        });
    }
    let mut seen = BTreeSet::new();
    for (k, t) in tickers.iter().enumerate() {
        if t.is_empty() || !seen.insert(t.clone()) {
            return Err(Error::Format {
                line: *header_line,
                column: k + 2,
                message: format!("empty or duplicate ticker {t:?}"),
            });
        }
    }
    let mut series: RawSeries = tickers
        .iter()
        .map(|t| (t.clone(), BTreeMap::new()))
        .collect();
    let mut dates = BTreeSet::new();
    for (line, rec) in &records[1..] {
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != tickers.len() + 1 {
            return Err(Error::Format {
                line: *line,
                column: rec.len().min(tickers.len() + 1),
                message: format!("expected {} fields, found {}", tickers.len() + 1, rec.len()),
            });
        }
        let date = parse_date(&rec[0], *line, 1)?;
        if !dates.insert(date) {
            return Err(Error::Format {
                line: *line,
                column: 1,
                message: format!("duplicate date {date}"),
            });
        }
        for (k, cell) in rec.iter().skip(1).enumerate() {
            if cell.is_empty() {
                continue;
            }
            let v = parse_price(cell, *line, k + 2)?;
            series.get_mut(&tickers[k]).expect("ticker").insert(date, v);
        }
    }
    Ok(series)
}

fn parse_long(records: &[(usize, csv::StringRecord)]) -> Result<RawSeries> {
    let mut series: RawSeries = BTreeMap::new();
    for (line, rec) in &records[1..] {
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 3 {
            return Err(Error::Format {
                line: *line,
                column: rec.len().min(3),
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let date = parse_date(&rec[0], *line, 1)?;
        let ticker = &rec[1];
        if ticker.is_empty() {
            return Err(Error::Format {
                line: *line,
                column: 2,
                message: "empty ticker".into(),
            });
        }
        let entry = series.entry(ticker.to_string()).or_default();
        if rec[2].is_empty() {
            continue;
        }
        let v = parse_price(&rec[2], *line, 3)?;
        if entry.insert(date, v).is_some() {
            return Err(Error::Format {
                line: *line,
                column: 1,
                message: format!("duplicate observation for {ticker} on {date}"),
            });
        }
    }
    Ok(series)
}

fn align(series: RawSeries, min_coverage: f64) -> Result<PricePanel> {
    let all_dates: BTreeSet<NaiveDate> = series.values().flat_map(|s| s.keys().copied()).collect();
    let total = all_dates.len();
    if total == 0 {
        return Err(Error::InsufficientData("no observations".into()));
    }
    let kept: Vec<(String, BTreeMap<NaiveDate, f64>)> = series
        .into_iter()
        .filter(|(ticker, obs)| {
            let coverage = obs.len() as f64 / total as f64;
            let keep = coverage >= min_coverage && !obs.is_empty();
            if !keep {
                log::info!("dropping {ticker}: coverage {coverage:.3} below {min_coverage}");
            }
            keep
        })
        .collect();
    if kept.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} stock(s) survive the coverage filter, need at least 2",
            kept.len()
        )));
    }
    let dates: Vec<NaiveDate> = kept
        .iter()
        .flat_map(|(_, s)| s.keys().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if dates.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} date(s) survive alignment, need at least 3",
            dates.len()
        )));
    }
    let mut tickers = Vec::with_capacity(kept.len());
    let mut prices = Vec::with_capacity(kept.len());
    for (ticker, obs) in kept {
        let mut row: Vec<Option<f64>> = dates.iter().map(|d| obs.get(d).copied()).collect();
        let mut last = None;
        for cell in row.iter_mut() {
            match cell {
                Some(v) => last = Some(*v),
                None => *cell = last,
            }
        }
        let first = row.iter().flatten().next().copied();
        let row: Vec<f64> = row
            .into_iter()
            .map(|c| c.or(first).expect("non-empty series"))
            .collect();
        tickers.push(ticker);
        prices.push(row);
    }
    PricePanel::new(tickers, dates, prices)
}

/// `r_i(t) = ln p_i(t+1) - ln p_i(t)`.
pub fn log_returns(panel: &PricePanel) -> Result<ReturnPanel> {
    if panel.n_dates() < 2 {
        return Err(Error::InsufficientData(
            "need at least two price dates for a return".into(),
        ));
    }
    let mut returns = Vec::with_capacity(panel.n_stocks());
    for (i, row) in panel.prices.iter().enumerate() {
        if let Some((t, p)) = row
            .iter()
            .enumerate()
            .find(|(_, p)| !(**p > 0.0 && p.is_finite()))
        {
            return Err(Error::Domain(format!(
                "non-positive price {p} for {} on {}",
                panel.tickers[i], panel.dates[t]
            )));
        }
        returns.push(row.windows(2).map(|w| w[1].ln() - w[0].ln()).collect());
    }
    Ok(ReturnPanel {
        tickers: panel.tickers.clone(),
        dates: panel.dates[1..].to_vec(),
        returns,
    })
}

/// Parameters of the synthetic one-factor generator
/// `r_i(t) = beta_i f(t) + eps_i(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub n_stocks: usize,
    /// Number of price dates; the panel has `n_days - 1` returns.
    pub n_days: usize,
    pub betas: Vec<f64>,
    pub factor_vol: f64,
    pub idio_vol: f64,
    pub seed: u64,
}

impl FactorSpec {
    /// Loadings spaced evenly over `[beta_min, beta_max]` in ticker order.
    pub fn linear_betas(
        n_stocks: usize,
        n_days: usize,
        beta_min: f64,
        beta_max: f64,
        factor_vol: f64,
        idio_vol: f64,
        seed: u64,
    ) -> Self {
        let betas = (0..n_stocks)
            .map(|i| {
                if n_stocks <= 1 {
                    beta_min
                } else {
                    beta_min + (beta_max - beta_min) * i as f64 / (n_stocks - 1) as f64
                }
            })
            .collect();
        FactorSpec {
            n_stocks,
            n_days,
            betas,
            factor_vol,
            idio_vol,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_stocks < 2 {
            return Err(Error::Config(format!(
                "n_stocks must be at least 2, got {}",
                self.n_stocks
            )));
        }
        if self.n_days < 2 {
            return Err(Error::Config(format!(
                "n_days must be at least 2, got {}",
                self.n_days
            )));
        }
        if self.betas.len() != self.n_stocks {
            return Err(Error::Config(format!(
                "{} betas for {} stocks",
                self.betas.len(),
                self.n_stocks
            )));
        }
        if self.betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("betas must be finite".into()));
        }
        for (name, v) in [("factor_vol", self.factor_vol), ("idio_vol", self.idio_vol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn tickers(&self) -> Vec<String> {
        let width = (self.n_stocks.max(2) - 1).to_string().len().max(3);
        (0..self.n_stocks)
            .map(|i| format!("S{i:0width$}"))
            .collect()
    }
}

/// Generated log returns, `n_stocks x (n_days - 1)`.
pub fn factor_returns(spec: &FactorSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let betas = vec![spec.betas.clone(); spec.n_days - 1];
    regime_returns(spec, &betas)
}

fn regime_returns(spec: &FactorSpec, betas_by_day: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n_ret = spec.n_days - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let factor = Normal::new(0.0, spec.factor_vol).map_err(|e| Error::Config(e.to_string()))?;
    let idio = Normal::new(0.0, spec.idio_vol).map_err(|e| Error::Config(e.to_string()))?;
    let mut out = vec![vec![0.0; n_ret]; spec.n_stocks];
    for (t, betas) in betas_by_day.iter().enumerate().take(n_ret) {
        let f = factor.sample(&mut rng);
        for (i, row) in out.iter_mut().enumerate() {
            row[t] = betas[i] * f + idio.sample(&mut rng);
        }
    }
    Ok(out)
}

/// Weekday calendar starting at 2000-01-03.
pub fn business_days(n: usize) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

/// Cumulative-exponential prices starting at 100.
pub fn prices_from_returns(
    tickers: Vec<String>,
    dates: Vec<NaiveDate>,
    returns: &[Vec<f64>],
) -> Result<PricePanel> {
    let prices = returns
        .iter()
        .map(|row| {
            let mut cum = 0.0;
            let mut out = Vec::with_capacity(row.len() + 1);
            out.push(100.0);
            for r in row {
                cum += r;
                out.push(100.0 * cum.exp());
            }
            out
        })
        .collect();
    PricePanel::new(tickers, dates, prices)
}

/// Synthetic one-factor price panel. Deterministic in `spec.seed`.
pub fn synth_one_factor(spec: &FactorSpec) -> Result<PricePanel> {
    let returns = factor_returns(spec)?;
    prices_from_returns(spec.tickers(), business_days(spec.n_days), &returns)
}

/// One-factor panel whose loadings switch from `spec.betas` to
/// `second_betas` at return index `switch_at`.
pub fn synth_regime_switch(
    spec: &FactorSpec,
    second_betas: &[f64],
    switch_at: usize,
) -> Result<PricePanel> {
    spec.validate()?;
    if second_betas.len() != spec.n_stocks {
        return Err(Error::Config(format!(
            "{} second-regime betas for {} stocks",
            second_betas.len(),
            spec.n_stocks
        )));
    }
    let betas: Vec<Vec<f64>> = (0..spec.n_days - 1)
        .map(|t| {
            if t < switch_at {
                spec.betas.clone()
            } else {
                second_betas.to_vec()
            }
        })
        .collect();
    let returns = regime_returns(spec, &betas)?;
    prices_from_returns(spec.tickers(), business_days(spec.n_days), &returns)
}

/// Writes a panel in long layout; mostly useful for tests and conversions.
pub fn write_long_csv<W: Write>(panel: &PricePanel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "ticker", "close"])
        .map_err(csv_write_err)?;
    for (t, date) in panel.dates.iter().enumerate() {
        let d = date.format(DATE_FORMAT).to_string();
        for (i, ticker) in panel.tickers.iter().enumerate() {
            w.write_record([
                d.as_str(),
                ticker.as_str(),
                &format!("{}", panel.prices[i][t]),
            ])
            .map_err(csv_write_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub(crate) fn csv_write_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv writer>", io),
        other => Error::Serialization(format!("{other:?}")),
    }
}

/// Map from ticker to row index.
pub fn ticker_index(tickers: &[String]) -> HashMap<&str, usize> {
    tickers
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect()
}
