//! End-to-end experiments: topology series, centrality-guided frontiers and
//! expected-shortfall curves, written to a self-describing run directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corrnet::{rolling_correlations, WindowConfig};
use crate::data::{csv_write_err, ReturnPanel};
use crate::error::{Error, Result};
use crate::pmfg::{build_pmfg, topology_report, TopologyReport};
use crate::portfolio::{
    default_q_grid, efficient_frontier, expected_shortfall, minimize_es, portfolio_pnl,
    sample_covariance, sample_means, select_portfolio, write_frontier_csv, FrontierPoint, Mode,
};
use crate::temporal::{
    ArimaConfig, CentralityMethod, CentralityRanking, EigenConfig, TemporalNetwork,
};

/// Which slice the out-of-sample optimiser estimates its moments on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceSource {
    /// Optimise on the evaluation slice itself.
    #[default]
    Evaluation,
    /// Optimise on the estimation slice, then evaluate on the next days.
    Estimation,
}

impl std::str::FromStr for CovarianceSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "evaluation" => Ok(CovarianceSource::Evaluation),
            "estimation" => Ok(CovarianceSource::Estimation),
            other => Err(Error::Config(format!(
                "unknown covariance source '{other}' (expected evaluation or estimation)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sample {
    InSample,
    OutOfSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub window: WindowConfig,
    /// Return days used to build the networks out of sample.
    pub estimation_len: usize,
    /// Return days used for optimisation and evaluation out of sample.
    pub evaluation_len: usize,
    /// Portfolio sizes for expected-shortfall curves.
    pub sizes: Vec<usize>,
    /// Portfolio size for efficient frontiers.
    pub frontier_size: usize,
    pub modes: Vec<Mode>,
    pub methods: Vec<CentralityMethod>,
    pub tail_prob: f64,
    pub q_grid: Vec<f64>,
    pub long_only: bool,
    pub covariance_source: CovarianceSource,
    /// Sum absolute eigenvector entries for temporal centrality.
    pub absolute_centrality: bool,
    pub arima: ArimaConfig,
    pub eigen: EigenConfig,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            window: WindowConfig::default(),
            estimation_len: 3500,
            evaluation_len: 225,
            sizes: (1..=12).map(|k| 5 * k).collect(),
            frontier_size: 30,
            modes: vec![Mode::Central, Mode::Peripheral],
            methods: vec![CentralityMethod::Temporal, CentralityMethod::Aggregated],
            tail_prob: 0.05,
            q_grid: default_q_grid(),
            long_only: true,
            covariance_source: CovarianceSource::Evaluation,
            absolute_centrality: false,
            arima: ArimaConfig::default(),
            eigen: EigenConfig::default(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::Config("no portfolio sizes given".into()));
        }
        if let Some(m) = self
            .sizes
            .iter()
            .chain([&self.frontier_size])
            .find(|&&m| m == 0)
        {
            return Err(Error::Config(format!(
                "portfolio size {m} must be positive"
            )));
        }
        if self.modes.is_empty() || self.methods.is_empty() {
            return Err(Error::Config(
                "at least one mode and one method are required".into(),
            ));
        }
        if !(self.tail_prob > 0.0 && self.tail_prob < 1.0) {
            return Err(Error::Config(format!(
                "tail probability {} outside (0, 1)",
                self.tail_prob
            )));
        }
        if self.q_grid.is_empty() || self.q_grid.iter().any(|q| !(*q >= 0.0 && q.is_finite())) {
            return Err(Error::Config(
                "risk tolerances must be a non-empty list of finite values >= 0".into(),
            ));
        }
        self.arima.validate()
    }

    fn check_universe(&self, n: usize) -> Result<()> {
        if let Some(m) = self
            .sizes
            .iter()
            .chain([&self.frontier_size])
            .find(|&&m| m > n)
        {
            return Err(Error::Config(format!(
                "portfolio size {m} exceeds the {n} available stocks"
            )));
        }
        Ok(())
    }

    fn check_split(&self, len: usize) -> Result<()> {
        if self.estimation_len + self.evaluation_len > len {
            return Err(Error::Config(format!(
                "estimation ({}) plus evaluation ({}) exceeds the {len} available return days",
                self.estimation_len, self.evaluation_len
            )));
        }
        if self.evaluation_len < 2 {
            return Err(Error::Config(
                "evaluation slice needs at least 2 days".into(),
            ));
        }
        Ok(())
    }

    /// First 12 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(json.as_bytes()))[..12].to_string()
    }
}

/// Topology of one window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologyRow {
    pub window_end: NaiveDate,
    #[serde(flatten)]
    pub report: TopologyReport,
}

/// Per-window C, L, gamma and Jaccard overlap with the previous window.
pub fn run_topology(panel: &ReturnPanel, window: WindowConfig) -> Result<Vec<TopologyRow>> {
    let seq = rolling_correlations(panel, window)?;
    let layers = seq
        .windows
        .par_iter()
        .map(build_pmfg)
        .collect::<Result<Vec<_>>>()?;
    topology_rows(
        &layers.iter().map(|l| l.graph().clone()).collect::<Vec<_>>(),
        &seq.anchors,
    )
}

fn topology_rows(
    graphs: &[crate::graph::Graph],
    anchors: &[NaiveDate],
) -> Result<Vec<TopologyRow>> {
    (0..graphs.len())
        .into_par_iter()
        .map(|t| {
            let prev = t.checked_sub(1).map(|p| &graphs[p]);
            Ok(TopologyRow {
                window_end: anchors[t],
                report: topology_report(&graphs[t], prev)?,
            })
        })
        .collect()
}

/// Writes `window_end,C,L,gamma,jaccard` rows; the first window has no
/// predecessor and an empty Jaccard cell.
pub fn write_topology<W: std::io::Write>(writer: W, rows: &[TopologyRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["window_end", "C", "L", "gamma", "jaccard"])
        .map_err(csv_write_err)?;
    for r in rows {
        w.write_record([
            r.window_end.to_string(),
            r.report.clustering.to_string(),
            r.report.path_length.to_string(),
            r.report.heterogeneity.to_string(),
            r.report
                .jaccard_prev
                .map(|j| j.to_string())
                .unwrap_or_default(),
        ])
        .map_err(csv_write_err)?;
    }
    w.flush().map_err(|e| Error::io("<topology>", e))
}

pub fn write_topology_csv(path: &Path, rows: &[TopologyRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_topology(file, rows)
}

/// Networks, topology and rankings of one slice of returns.
#[derive(Debug, Clone)]
pub struct NetworkAnalysis {
    pub network: TemporalNetwork,
    pub topology: Vec<TopologyRow>,
    pub rankings: BTreeMap<CentralityMethod, CentralityRanking>,
}

pub fn analyse(panel: &ReturnPanel, cfg: &ExperimentConfig) -> Result<NetworkAnalysis> {
    let seq = rolling_correlations(panel, cfg.window)?;
    let network = TemporalNetwork::build(&seq, &cfg.arima)?;
    let topology = topology_rows(&network.graphs(), &seq.anchors)?;
    let mut rankings = BTreeMap::new();
    for &method in &cfg.methods {
        let r = network.ranking(method, &panel.tickers, &cfg.eigen, cfg.absolute_centrality)?;
        rankings.insert(method, r);
    }
    Ok(NetworkAnalysis {
        network,
        topology,
        rankings,
    })
}

/// Members chosen for one (mode, method, m) combination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub mode: Mode,
    pub method: CentralityMethod,
    pub m: usize,
    pub members: Vec<usize>,
}

/// All selections the configuration asks for, in (method, mode, m) order.
pub fn selections(
    rankings: &BTreeMap<CentralityMethod, CentralityRanking>,
    cfg: &ExperimentConfig,
) -> Result<Vec<Selection>> {
    let mut sizes = cfg.sizes.clone();
    sizes.push(cfg.frontier_size);
    sizes.sort_unstable();
    sizes.dedup();
    let mut out = Vec::new();
    for (&method, ranking) in rankings {
        for &mode in &cfg.modes {
            for &m in &sizes {
                out.push(Selection {
                    mode,
                    method,
                    m,
                    members: select_portfolio(ranking, m, mode)?,
                });
            }
        }
    }
    Ok(out)
}

/// Selection-phase output plus the slices portfolios are optimised and
/// evaluated on.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub sample: Sample,
    pub analysis: NetworkAnalysis,
    pub selections: Vec<Selection>,
    pub optimise_on: ReturnPanel,
    pub evaluate_on: ReturnPanel,
}

/// Builds networks and selections. Out of sample, only the first
/// `estimation_len` days are visible to this phase.
pub fn prepare(panel: &ReturnPanel, cfg: &ExperimentConfig, sample: Sample) -> Result<Prepared> {
    cfg.validate()?;
    cfg.check_universe(panel.n_stocks())?;
    let (network_slice, optimise_on, evaluate_on) = match sample {
        Sample::InSample => (panel.clone(), panel.clone(), panel.clone()),
        Sample::OutOfSample => {
            cfg.check_split(panel.len())?;
            let est = panel.slice(0, cfg.estimation_len)?;
            let eval = panel.slice(cfg.estimation_len, cfg.estimation_len + cfg.evaluation_len)?;
            let opt = match cfg.covariance_source {
                CovarianceSource::Evaluation => eval.clone(),
                CovarianceSource::Estimation => est.clone(),
            };
            (est, opt, eval)
        }
    };
    let analysis = analyse(&network_slice, cfg)?;
    let selections = selections(&analysis.rankings, cfg)?;
    Ok(Prepared {
        sample,
        analysis,
        selections,
        optimise_on,
        evaluate_on,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierCurve {
    pub mode: Mode,
    pub method: CentralityMethod,
    pub m: usize,
    pub members: Vec<usize>,
    pub points: Vec<FrontierPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EsPoint {
    pub m: usize,
    pub es: f64,
    pub var_level: f64,
    pub members: Vec<usize>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EsCurve {
    pub mode: Mode,
    pub method: CentralityMethod,
    pub points: Vec<EsPoint>,
}

fn rows(panel: &ReturnPanel, members: &[usize]) -> Vec<Vec<f64>> {
    members.iter().map(|&i| panel.returns[i].clone()).collect()
}

/// Frontier of one selection; moments for risk and return come from the
/// evaluation slice even when weights were fitted elsewhere.
fn frontier_for(p: &Prepared, sel: &Selection, cfg: &ExperimentConfig) -> Result<FrontierCurve> {
    let fit = rows(&p.optimise_on, &sel.members);
    let mut points = efficient_frontier(&fit, &cfg.q_grid, cfg.long_only)?;
    if p.optimise_on.dates != p.evaluate_on.dates {
        let eval = rows(&p.evaluate_on, &sel.members);
        let cov = sample_covariance(&eval);
        let mean = sample_means(&eval);
        for pt in &mut points {
            let w = nalgebra::DVector::from_column_slice(&pt.weights);
            pt.risk = w.dot(&(&cov * &w)).max(0.0);
            pt.ret = pt.weights.iter().zip(&mean).map(|(a, b)| a * b).sum();
        }
    }
    Ok(FrontierCurve {
        mode: sel.mode,
        method: sel.method,
        m: sel.m,
        members: sel.members.clone(),
        points,
    })
}

fn es_point(p: &Prepared, sel: &Selection, cfg: &ExperimentConfig) -> Result<EsPoint> {
    let (portfolio, fitted) = minimize_es(&rows(&p.optimise_on, &sel.members), cfg.tail_prob)?;
    let realised = if p.optimise_on.dates == p.evaluate_on.dates {
        fitted
    } else {
        let pnl = portfolio_pnl(&rows(&p.evaluate_on, &sel.members), &portfolio.weights);
        expected_shortfall(&pnl, cfg.tail_prob)?
    };
    Ok(EsPoint {
        m: sel.m,
        es: realised.es,
        var_level: realised.var_level,
        members: sel.members.clone(),
        weights: portfolio.weights,
    })
}

/// Frontiers at `frontier_size` for every (mode, method).
pub fn frontiers(p: &Prepared, cfg: &ExperimentConfig) -> Result<Vec<FrontierCurve>> {
    p.selections
        .par_iter()
        .filter(|s| s.m == cfg.frontier_size)
        .map(|s| frontier_for(p, s, cfg))
        .collect()
}

/// Minimum-ES curves over `sizes` for every (mode, method). Jobs run in
/// parallel; results keep the (method, mode, m) order of the selections.
pub fn es_curves(p: &Prepared, cfg: &ExperimentConfig) -> Result<Vec<EsCurve>> {
    let jobs: Vec<&Selection> = p
        .selections
        .iter()
        .filter(|s| cfg.sizes.contains(&s.m))
        .collect();
    let points = jobs
        .par_iter()
        .map(|s| es_point(p, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut curves: Vec<EsCurve> = Vec::new();
    for (s, pt) in jobs.iter().zip(points) {
        match curves.last_mut() {
            Some(c) if c.mode == s.mode && c.method == s.method => c.points.push(pt),
            _ => curves.push(EsCurve {
                mode: s.mode,
                method: s.method,
                points: vec![pt],
            }),
        }
    }
    Ok(curves)
}

/// Expected-shortfall curves under in-sample or out-of-sample semantics.
pub fn es_vs_size(
    panel: &ReturnPanel,
    cfg: &ExperimentConfig,
    sample: Sample,
) -> Result<Vec<EsCurve>> {
    es_curves(&prepare(panel, cfg, sample)?, cfg)
}

/// What the report was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub library_version: String,
    pub seed: u64,
    /// Description of the input, e.g. a file name.
    pub input: String,
    /// SHA-256 of the input bytes, or of the panel when none were given.
    pub input_sha256: String,
    pub tickers: Vec<String>,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
}

impl Provenance {
    pub fn for_panel(
        panel: &ReturnPanel,
        input: &str,
        input_sha256: Option<String>,
        seed: u64,
    ) -> Self {
        Provenance {
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            input: input.to_string(),
            input_sha256: input_sha256.unwrap_or_else(|| panel_digest(panel)),
            tickers: panel.tickers.clone(),
            first_date: panel.dates.first().copied(),
            last_date: panel.dates.last().copied(),
        }
    }
}

/// SHA-256 over tickers, dates and the bit patterns of all returns.
pub fn panel_digest(panel: &ReturnPanel) -> String {
    let mut h = Sha256::new();
    for t in &panel.tickers {
        h.update(t.as_bytes());
        h.update([0]);
    }
    for d in &panel.dates {
        h.update(d.to_string().as_bytes());
    }
    for row in &panel.returns {
        for v in row {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone)]
pub struct BacktestReport {
    pub config: ExperimentConfig,
    pub sample: Sample,
    pub topology: Vec<TopologyRow>,
    pub rankings: BTreeMap<CentralityMethod, CentralityRanking>,
    pub selections: Vec<Selection>,
    pub frontiers: Vec<FrontierCurve>,
    pub es_curves: Vec<EsCurve>,
    pub provenance: Provenance,
}

/// Runs one experiment, computing only the requested artifacts.
pub fn run_experiment(
    panel: &ReturnPanel,
    cfg: &ExperimentConfig,
    sample: Sample,
    provenance: Provenance,
    artifacts: Artifacts,
) -> Result<BacktestReport> {
    let p = prepare(panel, cfg, sample)?;
    let frontiers = if artifacts.frontiers {
        frontiers(&p, cfg)?
    } else {
        Vec::new()
    };
    let es_curves = if artifacts.es_curves {
        es_curves(&p, cfg)?
    } else {
        Vec::new()
    };
    Ok(BacktestReport {
        config: cfg.clone(),
        sample,
        topology: p.analysis.topology,
        rankings: p.analysis.rankings,
        selections: p.selections,
        frontiers,
        es_curves,
        provenance,
    })
}

/// Networks, selection, frontiers and ES all on the full panel.
pub fn run_insample(
    panel: &ReturnPanel,
    cfg: &ExperimentConfig,
    provenance: Provenance,
) -> Result<BacktestReport> {
    run_experiment(
        panel,
        cfg,
        Sample::InSample,
        provenance,
        Artifacts::default(),
    )
}

/// Networks and selection on the first `estimation_len` days; portfolios
/// evaluated on the following `evaluation_len` days.
pub fn run_outofsample(
    panel: &ReturnPanel,
    cfg: &ExperimentConfig,
    provenance: Provenance,
) -> Result<BacktestReport> {
    run_experiment(
        panel,
        cfg,
        Sample::OutOfSample,
        provenance,
        Artifacts::default(),
    )
}

/// Directory name `run_<id>_<hash>`; the id defaults to a UTC timestamp.
pub fn run_dir_name(run_id: Option<&str>, config_hash: &str) -> String {
    let id = match run_id {
        Some(id) => id.to_string(),
        None => chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string(),
    };
    format!("run_{id}_{config_hash}")
}

pub fn write_es_csv(path: &Path, curve: &EsCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_write_err)?;
    w.write_record(["m", "mode", "method", "es"])
        .map_err(csv_write_err)?;
    for p in &curve.points {
        w.write_record([
            p.m.to_string(),
            curve.mode.as_str().to_string(),
            curve.method.as_str().to_string(),
            p.es.to_string(),
        ])
        .map_err(csv_write_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Which parts of a report to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Artifacts {
    pub frontiers: bool,
    pub es_curves: bool,
}

impl Default for Artifacts {
    fn default() -> Self {
        Artifacts {
            frontiers: true,
            es_curves: true,
        }
    }
}

#[derive(Serialize)]
struct ReportJson<'a> {
    config: &'a ExperimentConfig,
    sample: Sample,
    topology: String,
    centrality: Vec<String>,
    frontiers: Vec<String>,
    es_curves: Vec<String>,
    selections: BTreeMap<String, Vec<&'a str>>,
    provenance: &'a Provenance,
}

impl BacktestReport {
    /// Writes `report.json` and its CSV side files into a new run directory
    /// under `out`, returning the directory.
    pub fn write(&self, out: &Path, run_id: Option<&str>) -> Result<PathBuf> {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&self.config)?);
        hasher.update(serde_json::to_vec(&self.sample)?);
        hasher.update(self.provenance.input_sha256.as_bytes());
        let hash = hex::encode(hasher.finalize())[..12].to_string();
        let dir = out.join(run_dir_name(run_id, &hash));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

        let topology = "topology.csv".to_string();
        write_topology_csv(&dir.join(&topology), &self.topology)?;
        let mut centrality = Vec::new();
        for (method, r) in &self.rankings {
            let name = format!("centrality_{}.csv", method.as_str());
            r.write_csv(&dir.join(&name))?;
            centrality.push(name);
        }
        let mut frontiers = Vec::new();
        for f in &self.frontiers {
            let name = format!(
                "frontier_{}_{}_m{}.csv",
                f.mode.as_str(),
                f.method.as_str(),
                f.m
            );
            write_frontier_csv(&dir.join(&name), &f.points)?;
            frontiers.push(name);
        }
        let mut es_curves = Vec::new();
        for c in &self.es_curves {
            let name = format!("es_{}_{}.csv", c.mode.as_str(), c.method.as_str());
            write_es_csv(&dir.join(&name), c)?;
            es_curves.push(name);
        }
        let tickers = &self.provenance.tickers;
        let selections = self
            .selections
            .iter()
            .map(|s| {
                let mut key = String::new();
                let _ = write!(key, "{}_{}_m{}", s.mode.as_str(), s.method.as_str(), s.m);
                (
                    key,
                    s.members.iter().map(|&i| tickers[i].as_str()).collect(),
                )
            })
            .collect();
        let report = ReportJson {
            config: &self.config,
            sample: self.sample,
            topology,
            centrality,
            frontiers,
            es_curves,
            selections,
            provenance: &self.provenance,
        };
        let path = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(dir)
    }
}
