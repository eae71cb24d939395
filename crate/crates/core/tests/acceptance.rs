//! Acceptance suite. Each criterion runs against an oracle written here,
//! independently of the library code it checks, and prints one line.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use tempnet::backtest::{es_curves, frontiers, prepare, ExperimentConfig, Sample};
use tempnet::corrnet::{window_count, WindowConfig};
use tempnet::data::{log_returns, synth_one_factor, FactorSpec, ReturnPanel};
use tempnet::graph::{generators, Graph};
use tempnet::pmfg::{build_pmfg, heterogeneity, is_planar};
use tempnet::portfolio::{
    default_q_grid, efficient_frontier, expected_shortfall, mean_variance_weights, minimize_es,
    portfolio_pnl, Mode,
};
use tempnet::temporal::{
    build_supra, fit_arima, leading_eigenpair, temporal_centrality, ArimaConfig, ArimaFit,
    CentralityMethod, EigenConfig,
};

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

// ---------------------------------------------------------------- 1

fn window_counts() -> Outcome {
    let cases = [
        ((4025, 500, 25), 142),
        ((3000, 300, 25), 109),
        ((2700, 300, 25), 97),
    ];
    let start = Instant::now();
    let got: Vec<usize> = cases
        .iter()
        .map(|&((l, d, s), _)| window_count(l, d, s).expect("valid window"))
        .collect();
    let elapsed = start.elapsed();
    for (&(case, want), got) in cases.iter().zip(&got) {
        ensure(*got == want, || {
            format!("{case:?} gave {got}, expected {want}")
        })?;
    }
    ensure(elapsed < Duration::from_millis(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("142/109/97 in {elapsed:?}"))
}

// ---------------------------------------------------------------- 2

/// Pearson correlation of a few-factor model with random loadings.
fn random_correlation(n: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    let k = r.random_range(1..=3);
    let t = r.random_range(2 * n..6 * n);
    let loads = DMatrix::from_fn(n, k, |_, _| r.random_range(-1.0..1.5));
    let f = DMatrix::from_fn(k, t, |_, _| gauss(r));
    let e = DMatrix::from_fn(n, t, |_, _| gauss(r));
    let mut x = &loads * f + e;
    for mut row in x.row_iter_mut() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
        let nrm = row.norm();
        row /= nrm;
    }
    let mut c = &x * x.transpose();
    c.fill_diagonal(1.0);
    c
}

/// Maximum spanning tree by Prim's algorithm.
fn prim_tree(w: &DMatrix<f64>) -> BTreeSet<(usize, usize)> {
    let n = w.nrows();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = BTreeSet::new();
    best[0] = f64::INFINITY;
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .max_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[v] = true;
        if v != 0 {
            edges.insert((parent[v].min(v), parent[v].max(v)));
        }
        for u in 0..n {
            if !in_tree[u] && w[(v, u)] > best[u] {
                best[u] = w[(v, u)];
                parent[u] = v;
            }
        }
    }
    edges
}

fn pmfg_structure() -> Outcome {
    let mut r = rng(2);
    let mut with_mst = 0;
    for case in 0..200 {
        let n = r.random_range(10..=60);
        let c = random_correlation(n, &mut r);
        let pg = build_pmfg(&c).map_err(|e| format!("case {case}: {e}"))?;
        let g = pg.graph();
        ensure(pg.certificate_valid(), || {
            format!("case {case}: embedding rejected")
        })?;
        let check = is_planar(g);
        ensure(check.planar && check.validate(g), || {
            format!("case {case}: not planar")
        })?;
        ensure(g.n_edges() == 3 * (n - 2), || {
            format!("case {case}: {} edges for N = {n}", g.n_edges())
        })?;
        let mut off: Vec<f64> = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| c[(i, j)])
            .collect();
        off.sort_by(f64::total_cmp);
        if off.windows(2).all(|p| p[0] < p[1]) {
            let tree = prim_tree(&c);
            let edges = g.edge_set();
            ensure(tree.is_subset(&edges), || {
                format!("case {case}: MST edge missing")
            })?;
            with_mst += 1;
        }
    }
    ensure(with_mst >= 190, || {
        format!("only {with_mst} cases had distinct weights")
    })?;
    Ok(format!(
        "200 planar, 3(N-2) edges, MST contained in {with_mst}/{with_mst} distinct-weight cases"
    ))
}

// ---------------------------------------------------------------- 3

fn gamma_direct(g: &Graph) -> f64 {
    let k = g.degrees();
    let n = g.n() as f64;
    let s: f64 = g
        .edges()
        .iter()
        .map(|e| 1.0 / ((k[e.u] * k[e.v]) as f64).sqrt())
        .sum();
    (n - 2.0 * s) / (n - 2.0 * (n - 1.0).sqrt())
}

fn heterogeneity_calibration() -> Outcome {
    for n in [3, 4, 5, 10, 17, 100, 1000] {
        let g = heterogeneity(&generators::star(n)).unwrap();
        ensure(g == 1.0, || format!("star({n}) gave {g:e}"))?;
    }
    for (n, k) in [(10, 2), (10, 4), (30, 6), (101, 8), (1000, 10)] {
        let g = heterogeneity(&generators::ring_lattice(n, k)).unwrap();
        ensure(g == 0.0, || format!("ring_lattice({n}, {k}) gave {g:e}"))?;
    }
    for n in [4, 7, 12] {
        let g = heterogeneity(&generators::complete(n)).unwrap();
        ensure(g == 0.0, || format!("complete({n}) gave {g:e}"))?;
    }
    for seed in 0..20 {
        let g = generators::random_triangulation(40, seed);
        let (a, b) = (heterogeneity(&g).unwrap(), gamma_direct(&g));
        ensure((a - b).abs() < 1e-12, || {
            format!("triangulation {seed}: {a} vs {b}")
        })?;
    }
    let gammas: Vec<f64> = (0..10)
        .map(|seed| heterogeneity(&generators::barabasi_albert(1000, 10, seed)).unwrap())
        .collect();
    let mean = gammas.iter().sum::<f64>() / gammas.len() as f64;
    ensure((mean - 0.11).abs() <= 0.03, || {
        format!("BA mean gamma {mean:.4}")
    })?;
    Ok(format!(
        "star 1, regular 0, BA(1000, 10) mean gamma {mean:.4}"
    ))
}

// ---------------------------------------------------------------- 4

fn fit_with(stock: usize, phi: Vec<f64>) -> ArimaFit {
    ArimaFit {
        stock,
        p: phi.len(),
        phi,
        ..ArimaFit::degenerate(stock, 0)
    }
}

fn random_layer(n: usize, r: &mut ChaCha8Rng) -> Graph {
    if r.random_bool(0.5) {
        build_pmfg(&random_correlation(n, r)).unwrap().into_graph()
    } else {
        generators::random_triangulation(n, r.random())
    }
}

/// Largest real part over the spectrum of a general dense matrix. Repeated
/// layer eigenvalues can come back as a pair with tiny imaginary parts.
fn dense_leading(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Null vector of `m - lambda I` from the smallest singular value.
fn null_vector(m: &DMatrix<f64>, lambda: f64) -> Vec<f64> {
    let k = m.nrows();
    let shifted = m - DMatrix::identity(k, k) * lambda;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.unwrap();
    let j = svd.singular_values.imin();
    let mut v: Vec<f64> = vt.row(j).iter().copied().collect();
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

fn spectral_oracle() -> Outcome {
    let mut r = rng(4);
    let cfg = EigenConfig::default();
    let mut worst = 0.0f64;
    for case in 0..50 {
        let n = r.random_range(8..=25);
        let t = r.random_range(2..=200 / n);
        let layers: Vec<Graph> = (0..t).map(|_| random_layer(n, &mut r)).collect();
        let fits: Vec<ArimaFit> = (0..n)
            .map(|i| {
                let p = r.random_range(0..=3);
                fit_with(i, (0..p).map(|_| r.random_range(-0.6..0.6)).collect())
            })
            .collect();
        let supra = build_supra(&layers, &fits).unwrap();
        let pair = leading_eigenpair(&supra, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        let dense = supra.to_dense();
        let lambda = dense_leading(&dense);
        let err = (pair.lambda - lambda).abs();
        worst = worst.max(err);
        ensure(err <= 1e-8, || {
            format!("case {case}: lambda {} vs {lambda}", pair.lambda)
        })?;

        let tickers: Vec<String> = (0..n).map(|i| format!("X{i:02}")).collect();
        let ours = temporal_centrality(&pair.vector, pair.lambda, &tickers, t, false).unwrap();
        let v = null_vector(&dense, lambda);
        let oracle: Vec<f64> = (0..n).map(|i| (0..t).map(|s| v[s * n + i]).sum()).collect();
        let scale = oracle.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let tie = 1e-7 * scale;
        for w in ours.order.windows(2) {
            ensure(oracle[w[0]] >= oracle[w[1]] - tie, || {
                format!("case {case}: order puts {} before {}", w[0], w[1])
            })?;
        }

        let zero: Vec<ArimaFit> = (0..n).map(|i| fit_with(i, Vec::new())).collect();
        let uncoupled = build_supra(&layers, &zero).unwrap();
        let pair = leading_eigenpair(&uncoupled, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        let top = layers
            .iter()
            .map(|g| g.adjacency_matrix().symmetric_eigen().eigenvalues.max())
            .fold(f64::NEG_INFINITY, f64::max);
        ensure((pair.lambda - top).abs() <= 1e-10, || {
            format!("case {case}: uncoupled lambda {} vs {top}", pair.lambda)
        })?;
    }
    Ok(format!("50 instances, max |lambda error| {worst:.1e}"))
}

// ---------------------------------------------------------------- 5

fn ar1(phi: f64, len: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut x = 0.0;
    let mut out = Vec::with_capacity(len);
    for t in 0..len + 200 {
        x = phi * x + gauss(&mut r);
        if t >= 200 {
            out.push(x);
        }
    }
    out
}

/// Slope of `x_t` on `x_{t-1}` with intercept.
fn ols_lag1(x: &[f64]) -> f64 {
    let (y, z) = (&x[1..], &x[..x.len() - 1]);
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let mz = z.iter().sum::<f64>() / z.len() as f64;
    let sxy: f64 = y.iter().zip(z).map(|(a, b)| (a - my) * (b - mz)).sum();
    let sxx: f64 = z.iter().map(|b| (b - mz).powi(2)).sum();
    sxy / sxx
}

fn arima_recovery() -> Outcome {
    let cfg = ArimaConfig::default();
    let mut hits = 0;
    let mut notes = Vec::new();
    for seed in 0..20 {
        let x = ar1(0.6, 2000, 500 + seed);
        let fit = fit_arima(&x, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        // first impulse-response weight, equal to phi for an AR(1)
        let psi1 =
            fit.phi.first().copied().unwrap_or(0.0) - fit.theta.first().copied().unwrap_or(0.0);
        let oracle = ols_lag1(&x);
        if fit.d == 0 && (psi1 - 0.6).abs() <= 0.1 && (psi1 - oracle).abs() <= 0.1 {
            hits += 1;
        } else {
            notes.push(format!(
                "seed {seed}: ({},{},{}) psi1 {psi1:.3} ols {oracle:.3}",
                fit.p, fit.d, fit.q
            ));
        }
    }
    ensure(hits >= 18, || {
        format!("{hits}/20 recovered; {}", notes.join("; "))
    })?;
    for seed in 0..20 {
        let mut r = rng(900 + seed);
        let mut level = 0.0;
        let walk: Vec<f64> = (0..2000)
            .map(|_| {
                level += gauss(&mut r);
                level
            })
            .collect();
        let fit = fit_arima(&walk, &cfg).map_err(|e| format!("walk {seed}: {e}"))?;
        ensure(fit.d == 1, || format!("walk {seed} chose d = {}", fit.d))?;
    }
    Ok(format!(
        "AR(1) recovered in {hits}/20, random walk d = 1 in 20/20"
    ))
}

// ---------------------------------------------------------------- 6

/// Budget-constrained optimum without sign constraints:
/// `w = A + q B`, `A = S⁻¹1 / 1'S⁻¹1`, `B = (S⁻¹μ - (1'S⁻¹μ) A) / 2`.
fn closed_form(cov: &DMatrix<f64>, mean: &[f64], q: f64) -> Vec<f64> {
    let m = cov.nrows();
    let inv = cov.clone().try_inverse().unwrap();
    let ones = DVector::from_element(m, 1.0);
    let mu = DVector::from_column_slice(mean);
    let si1 = &inv * &ones;
    let a = &si1 / ones.dot(&si1);
    let simu = &inv * &mu;
    let b = (simu - &a * ones.dot(&(&inv * &mu))) * 0.5;
    (a + b * q).iter().copied().collect()
}

fn mean_variance_oracle() -> Outcome {
    let eye = DMatrix::<f64>::identity(2, 2);
    let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
    // (covariance, means, q, expected weights)
    let cases = [
        (&eye, [0.1, 0.1], 0.7, [0.5, 0.5]),
        (&diag, [0.0, 0.0], 0.0, [0.8, 0.2]),
        (&eye, [0.1, 0.2], 1.0, [0.475, 0.525]),
    ];
    for (cov, mean, q, want) in cases {
        let oracle = closed_form(cov, &mean, q);
        for long_only in [false, true] {
            let p = mean_variance_weights(cov, &mean, q, long_only).map_err(|e| e.to_string())?;
            for i in 0..2 {
                ensure(
                    (p.weights[i] - want[i]).abs() <= 1e-8 && (oracle[i] - want[i]).abs() <= 1e-12,
                    || format!("{want:?}: got {:?}, oracle {oracle:?}", p.weights),
                )?;
            }
        }
    }
    let mut r = rng(6);
    for case in 0..100 {
        let m = r.random_range(2..=8);
        let l = r.random_range(30..120);
        let f: Vec<f64> = (0..l).map(|_| 0.01 * gauss(&mut r)).collect();
        let returns: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let beta = r.random_range(0.0..2.0);
                let drift = r.random_range(-1e-3..1e-3);
                let vol = r.random_range(0.005..0.03);
                f.iter()
                    .map(|v| drift + beta * v + vol * gauss(&mut r))
                    .collect()
            })
            .collect();
        for long_only in [true, false] {
            let pts = efficient_frontier(&returns, &default_q_grid(), long_only)
                .map_err(|e| format!("case {case}: {e}"))?;
            for w in pts.windows(2) {
                ensure(
                    w[1].ret >= w[0].ret - 1e-10 && w[1].risk >= w[0].risk - 1e-10,
                    || {
                        format!(
                            "case {case} (long_only {long_only}): not monotone at q = {}",
                            w[1].q
                        )
                    },
                )?;
            }
        }
    }
    Ok("3 closed forms to 1e-8, 100 monotone frontiers".into())
}

// ---------------------------------------------------------------- 7

/// Worst `alpha L` scenarios with the last one counted fractionally.
fn sorted_tail(pnl: &[f64], alpha: f64) -> f64 {
    let mut s = pnl.to_vec();
    s.sort_by(f64::total_cmp);
    let budget = alpha * s.len() as f64;
    let full = budget.floor() as usize;
    let mut acc: f64 = s[..full].iter().sum();
    if full < s.len() {
        acc += (budget - full as f64) * s[full];
    }
    -acc / budget
}

/// `min_c c + E[(-X - c)+] / alpha`, minimised over scenario values.
fn ru_minimum(pnl: &[f64], alpha: f64) -> f64 {
    let l = pnl.len() as f64;
    pnl.iter()
        .map(|&x| {
            let c = -x;
            c + pnl.iter().map(|&y| (-y - c).max(0.0)).sum::<f64>() / (alpha * l)
        })
        .fold(f64::INFINITY, f64::min)
}

fn grid_es(returns: &[Vec<f64>], alpha: f64) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..=100 {
        for b in 0..=100 - a {
            let w = [
                a as f64 / 100.0,
                b as f64 / 100.0,
                (100 - a - b) as f64 / 100.0,
            ];
            let es = expected_shortfall(&portfolio_pnl(returns, &w), alpha)
                .unwrap()
                .es;
            best = best.min(es);
        }
    }
    best
}

fn es_oracle() -> Outcome {
    let mut r = rng(7);
    let mut fractional = 0;
    for case in 0..1000 {
        let l = r.random_range(1..=200);
        let alpha = match case % 4 {
            0 => 0.05,
            1 => r.random_range(1..=l) as f64 / l as f64 * if l > 1 { 1.0 - 1e-9 } else { 0.5 },
            _ => r.random_range(0.001..0.999),
        };
        let pnl: Vec<f64> = if case % 3 == 0 {
            // heavy ties
            (0..l)
                .map(|_| r.random_range(-3..=3) as f64 * 0.01)
                .collect()
        } else {
            (0..l).map(|_| 0.02 * gauss(&mut r)).collect()
        };
        if (alpha * l as f64).fract() != 0.0 {
            fractional += 1;
        }
        let got = expected_shortfall(&pnl, alpha)
            .map_err(|e| format!("case {case}: {e}"))?
            .es;
        let (a, b) = (sorted_tail(&pnl, alpha), ru_minimum(&pnl, alpha));
        ensure((got - a).abs() <= 1e-12 && (got - b).abs() <= 1e-12, || {
            format!("case {case} (L {l}, alpha {alpha}): {got} vs {a} / {b}")
        })?;
    }
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let mut r = rng(70 + seed);
        let returns: Vec<Vec<f64>> = (0..3)
            .map(|i| {
                let mu = 0.001 * i as f64;
                let sd = 0.01 * (1.0 + i as f64 * 0.5);
                let d = Normal::new(mu, sd).unwrap();
                (0..50).map(|_| d.sample(&mut r)).collect()
            })
            .collect();
        let (_, opt) = minimize_es(&returns, 0.05).map_err(|e| format!("seed {seed}: {e}"))?;
        let grid = grid_es(&returns, 0.05);
        worst = worst.max((opt.es - grid).abs());
        ensure(
            (opt.es - grid).abs() <= 1e-3 && opt.es <= grid + 1e-9,
            || format!("seed {seed}: optimiser {} vs grid {grid}", opt.es),
        )?;
    }
    Ok(format!(
        "1000 sets ({fractional} fractional) to 1e-12; grid gap at most {worst:.1e}"
    ))
}

// ---------------------------------------------------------------- 8

fn one_factor_returns(n: usize, days: usize, seed: u64) -> ReturnPanel {
    let spec = FactorSpec::linear_betas(n, days, 0.2, 1.8, 0.01, 0.01, seed);
    log_returns(&synth_one_factor(&spec).unwrap()).unwrap()
}

fn peripheral_beats_central() -> Outcome {
    let cfg = ExperimentConfig {
        window: WindowConfig {
            delta: 250,
            step: 25,
        },
        sizes: vec![30],
        frontier_size: 30,
        methods: vec![CentralityMethod::Temporal],
        q_grid: vec![0.0],
        ..ExperimentConfig::default()
    };
    let mut wins = 0;
    let mut losses = Vec::new();
    for seed in 0..20 {
        let panel = one_factor_returns(100, 2001, 8000 + seed);
        let p = prepare(&panel, &cfg, Sample::InSample).map_err(|e| format!("seed {seed}: {e}"))?;
        let fr = frontiers(&p, &cfg).map_err(|e| e.to_string())?;
        let es = es_curves(&p, &cfg).map_err(|e| e.to_string())?;
        let risk = |mode| fr.iter().find(|c| c.mode == mode).unwrap().points[0].risk;
        let shortfall = |mode| es.iter().find(|c| c.mode == mode).unwrap().points[0].es;
        let (rp, rc) = (risk(Mode::Peripheral), risk(Mode::Central));
        let (ep, ec) = (shortfall(Mode::Peripheral), shortfall(Mode::Central));
        if rp < rc && ep < ec {
            wins += 1;
        } else {
            losses.push(format!(
                "seed {seed}: risk {rp:.3e}/{rc:.3e} es {ep:.4}/{ec:.4}"
            ));
        }
    }
    ensure(wins >= 18, || format!("{wins}/20; {}", losses.join("; ")))?;
    Ok(format!("peripheral lower risk and ES in {wins}/20 seeds"))
}

// ---------------------------------------------------------------- 9

fn no_look_ahead() -> Outcome {
    let cfg = ExperimentConfig {
        window: WindowConfig {
            delta: 200,
            step: 50,
        },
        estimation_len: 1000,
        evaluation_len: 225,
        sizes: vec![5, 10, 20],
        frontier_size: 15,
        ..ExperimentConfig::default()
    };
    for seed in 0..5 {
        let panel = one_factor_returns(30, 1301, 9000 + seed);
        let clean = prepare(&panel, &cfg, Sample::OutOfSample).map_err(|e| e.to_string())?;
        let mut poisoned = panel.clone();
        let mut r = rng(seed);
        for row in &mut poisoned.returns {
            for v in &mut row[cfg.estimation_len..] {
                *v = r.random_range(-5.0..5.0);
            }
            row[cfg.estimation_len..].reverse();
        }
        let dirty = prepare(&poisoned, &cfg, Sample::OutOfSample).map_err(|e| e.to_string())?;
        ensure(clean.evaluate_on != dirty.evaluate_on, || {
            "poison did not reach the evaluation slice".into()
        })?;
        ensure(clean.selections == dirty.selections, || {
            format!("seed {seed}: selections changed")
        })?;
        let truncated = panel.slice(0, cfg.estimation_len).unwrap();
        let alone = tempnet::backtest::analyse(&truncated, &cfg).map_err(|e| e.to_string())?;
        ensure(alone.rankings == clean.analysis.rankings, || {
            format!("seed {seed}: rankings depend on later days")
        })?;
    }
    Ok(format!(
        "selections identical across 5 seeds ({} per seed)",
        2 * 2 * 4
    ))
}

// ---------------------------------------------------------------- 10

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

fn tempnet(args: &[&str], cwd: &Path) -> std::result::Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tempnet"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).trim().to_string())
}

fn end_to_end_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    tempnet(
        &[
            "synth", "--stocks", "40", "--days", "1500", "--seed", "10", "--out", "p.csv",
        ],
        dir,
    )?;
    let mut compared = 0;
    let flag_sets: [&[&str]; 2] = [
        &["--delta", "250", "--step", "50"],
        &[
            "--delta",
            "200",
            "--step",
            "50",
            "--out-of-sample",
            "--est",
            "1200",
            "--eval",
            "225",
        ],
    ];
    for (k, extra) in flag_sets.iter().enumerate() {
        let mut dirs = Vec::new();
        for out in ["a", "b"] {
            let mut args = vec![
                "backtest",
                "--input",
                "p.csv",
                "--run-id",
                "det",
                "--seed",
                "3",
                "--out-dir",
                out,
            ];
            args.extend_from_slice(extra);
            dirs.push(dir.join(tempnet(&args, dir)?));
        }
        let (fa, fb) = (files(&dirs[0]), files(&dirs[1]));
        ensure(!fa.is_empty(), || "no artifacts written".into())?;
        let names = |v: &[PathBuf], root: &Path| -> Vec<PathBuf> {
            v.iter()
                .map(|p| p.strip_prefix(root).unwrap().to_path_buf())
                .collect()
        };
        ensure(names(&fa, &dirs[0]) == names(&fb, &dirs[1]), || {
            format!("set {k}: file lists differ")
        })?;
        for (a, b) in fa.iter().zip(&fb) {
            ensure(
                std::fs::read(a).unwrap() == std::fs::read(b).unwrap(),
                || format!("set {k}: {} differs", a.display()),
            )?;
            compared += 1;
        }
    }
    Ok(format!(
        "{compared} artifacts byte-identical over 2 flag sets"
    ))
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 10] = [
        ("window counts", Duration::from_millis(1), window_counts),
        ("PMFG structure", Duration::from_secs(60), pmfg_structure),
        (
            "heterogeneity calibration",
            Duration::from_secs(30),
            heterogeneity_calibration,
        ),
        (
            "supra spectral oracle",
            Duration::from_secs(60),
            spectral_oracle,
        ),
        ("ARIMA recovery", Duration::from_secs(30), arima_recovery),
        (
            "mean-variance oracle",
            Duration::from_secs(30),
            mean_variance_oracle,
        ),
        ("ES oracle", Duration::from_secs(120), es_oracle),
        (
            "peripheral vs central",
            Duration::from_secs(600),
            peripheral_beats_central,
        ),
        ("no look-ahead", Duration::from_secs(120), no_look_ahead),
        (
            "end-to-end determinism",
            Duration::from_secs(600),
            end_to_end_determinism,
        ),
    ];
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = 0;
    for (k, (name, bound, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        // criterion 1 times its own computation
        let result = result.and_then(|s| {
            if k > 0 && elapsed > *bound {
                Err(format!("{s}, but took {elapsed:.1?} (limit {bound:?})"))
            } else {
                Ok(s)
            }
        });
        match result {
            Ok(s) => println!("criterion {:>2} {name}: PASS ({s}) [{elapsed:.2?}]", k + 1),
            Err(s) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({s}) [{elapsed:.2?}]", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
