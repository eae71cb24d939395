//! Supra-evolution matrix and its leading eigenpair.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::arima::ArimaFit;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Block lower-triangular `NT x NT` matrix: layer adjacencies on the diagonal,
/// diagonal autoregressive couplings `W_{t,t-l} = diag(phi_{i,l})` below it.
///
/// Index `t * N + i` addresses stock `i` in layer `t`.
#[derive(Debug, Clone)]
pub struct SupraEvolutionMatrix {
    n: usize,
    adj: Vec<Vec<Vec<usize>>>,
    phi: Vec<Vec<f64>>,
}

pub fn build_supra(layers: &[Graph], fits: &[ArimaFit]) -> Result<SupraEvolutionMatrix> {
    let Some(first) = layers.first() else {
        return Err(Error::InsufficientData("no layers".into()));
    };
    let n = first.n();
    for g in layers {
        if g.n() != n {
            return Err(Error::VertexMismatch(n, g.n()));
        }
    }
    if fits.len() != n {
        return Err(Error::VertexMismatch(n, fits.len()));
    }
    let adj = layers
        .iter()
        .map(|g| (0..n).map(|i| g.neighbors(i).to_vec()).collect())
        .collect();
    Ok(SupraEvolutionMatrix {
        n,
        adj,
        phi: fits.iter().map(|f| f.phi.clone()).collect(),
    })
}

impl SupraEvolutionMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.adj.len()
    }

    pub fn dim(&self) -> usize {
        self.n * self.adj.len()
    }

    /// AR coefficients of stock `i`.
    pub fn phi(&self, i: usize) -> &[f64] {
        &self.phi[i]
    }

    fn layer_matvec(&self, t: usize, x: &[f64], y: &mut [f64]) {
        for (i, nb) in self.adj[t].iter().enumerate() {
            y[i] = nb.iter().map(|&j| x[j]).sum();
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        for t in 0..self.layers() {
            let (lo, hi) = (t * n, (t + 1) * n);
            self.layer_matvec(t, &x[lo..hi], &mut y[lo..hi]);
            for i in 0..n {
                for (l, f) in self.phi[i].iter().enumerate() {
                    if l < t {
                        y[lo + i] += f * x[(t - l - 1) * n + i];
                    }
                }
            }
        }
    }

    /// Block `(ta, tb)` as a dense `N x N` matrix.
    pub fn block(&self, ta: usize, tb: usize) -> DMatrix<f64> {
        let n = self.n;
        let mut b = DMatrix::zeros(n, n);
        if ta == tb {
            for (i, nb) in self.adj[ta].iter().enumerate() {
                for &j in nb {
                    b[(i, j)] = 1.0;
                }
            }
        } else if ta > tb {
            let l = ta - tb;
            for i in 0..n {
                if let Some(&f) = self.phi[i].get(l - 1) {
                    b[(i, i)] = f;
                }
            }
        }
        b
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let (n, tt) = (self.n, self.layers());
        let mut m = DMatrix::zeros(n * tt, n * tt);
        for (row, col, v) in self.triplets() {
            m[(row, col)] = v;
        }
        debug_assert!((0..tt).all(|t| m.view((t * n, t * n), (n, n)) == self.block(t, t)));
        m
    }

    /// Non-zero entries `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n;
        let mut out = Vec::new();
        for t in 0..self.layers() {
            for i in 0..n {
                let row = t * n + i;
                for (l, &f) in self.phi[i].iter().enumerate().rev() {
                    if l < t && f != 0.0 {
                        out.push((row, (t - l - 1) * n + i, f));
                    }
                }
                let mut nb = self.adj[t][i].clone();
                nb.sort_unstable();
                out.extend(nb.into_iter().map(|j| (row, t * n + j, 1.0)));
            }
        }
        out
    }

    /// Writes the coordinate triplets as CSV `row,col,value`.
    pub fn write_triplets(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "row,col,value")?;
            for (r, c, v) in self.triplets() {
                writeln!(w, "{r},{c},{v}")?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}

/// Stopping rule for the eigensolver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    PowerIteration,
    ForwardSubstitution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub lambda: f64,
    /// Unit-norm eigenvector with non-negative entry sum.
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub method: EigenMethod,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn normalize_with_sign(x: &mut [f64]) {
    let nrm = norm(x);
    let sign = if x.iter().sum::<f64>() < 0.0 {
        -1.0
    } else {
        1.0
    };
    for v in x.iter_mut() {
        *v *= sign / nrm;
    }
}

fn residual(a: &SupraEvolutionMatrix, lambda: f64, x: &[f64]) -> f64 {
    let mut y = vec![0.0; x.len()];
    a.matvec(x, &mut y);
    y.iter()
        .zip(x)
        .map(|(yi, xi)| (yi - lambda * xi).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn power_iteration(a: &SupraEvolutionMatrix, cfg: &EigenConfig) -> Option<(f64, Vec<f64>, usize)> {
    let dim = a.dim();
    let mut x = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut y = vec![0.0; dim];
    for it in 1..=cfg.max_iter {
        a.matvec(&x, &mut y);
        let lambda: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
        let res = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| (yi - lambda * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        if res <= cfg.tol {
            return Some((lambda, x, it));
        }
        let nrm = norm(&y);
        if nrm == 0.0 || !nrm.is_finite() {
            return None;
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / nrm;
        }
    }
    None
}

/// Largest eigenvalue and Perron vector of one layer, by power iteration on
/// `A + I` (dense symmetric solve if that stalls).
fn layer_perron(a: &SupraEvolutionMatrix, t: usize, cfg: &EigenConfig) -> (f64, Vec<f64>) {
    let n = a.n;
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];
    for _ in 0..cfg.max_iter {
        a.layer_matvec(t, &x, &mut y);
        let lambda: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
        let res = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| (yi - lambda * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        if res <= cfg.tol * 1e-2 {
            return (lambda, x);
        }
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += xi;
        }
        let nrm = norm(&y);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / nrm;
        }
    }
    let eig = a.block(t, t).symmetric_eigen();
    let k = eig.eigenvalues.imax();
    (
        eig.eigenvalues[k],
        eig.eigenvectors.column(k).iter().copied().collect(),
    )
}

/// Direct construction: the eigenvector vanishes before the last layer `t*`
/// attaining the largest layer eigenvalue, equals that layer's Perron vector
/// at `t*`, and later layers follow from `(λI - A^s) v^s = Σ W v^{s-l}`.
fn forward_substitution(a: &SupraEvolutionMatrix, cfg: &EigenConfig) -> Result<(f64, Vec<f64>)> {
    let (n, tt) = (a.n, a.layers());
    let perron: Vec<(f64, Vec<f64>)> = (0..tt).map(|t| layer_perron(a, t, cfg)).collect();
    let lambda = perron.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-9 * lambda.abs().max(1.0);
    let tied: Vec<usize> = (0..tt).filter(|&t| lambda - perron[t].0 <= tie).collect();
    let t_star = *tied.last().expect("at least one layer");
    let mut v = vec![0.0; n * tt];
    v[t_star * n..(t_star + 1) * n].copy_from_slice(&perron[t_star].1);
    for s in (t_star + 1)..tt {
        let mut rhs = DVector::zeros(n);
        for i in 0..n {
            for (l, f) in a.phi[i].iter().enumerate() {
                if l < s {
                    rhs[i] += f * v[(s - l - 1) * n + i];
                }
            }
        }
        let mut m = -a.block(s, s);
        for i in 0..n {
            m[(i, i)] += lambda;
        }
        let lu = m.lu();
        let sol = lu.solve(&rhs).filter(|x| x.iter().all(|v| v.is_finite()));
        match sol {
            Some(x) => v[s * n..(s + 1) * n].copy_from_slice(x.as_slice()),
            None => return Err(Error::DegenerateSpectrum { layers: tied }),
        }
    }
    Ok((lambda, v))
}

/// Leading eigenpair of the supra-evolution matrix.
///
/// Power iteration from the all-ones vector is tried first; if it does not
/// reach the residual tolerance the eigenpair is built directly from the
/// block-triangular structure.
pub fn leading_eigenpair(a: &SupraEvolutionMatrix, cfg: &EigenConfig) -> Result<Eigenpair> {
    let (lambda, mut v, iterations, method) = match power_iteration(a, cfg) {
        Some((l, v, it)) => (l, v, it, EigenMethod::PowerIteration),
        None => {
            log::debug!("power iteration did not converge; using forward substitution");
            let (l, v) = forward_substitution(a, cfg)?;
            (l, v, cfg.max_iter, EigenMethod::ForwardSubstitution)
        }
    };
    if norm(&v) == 0.0 {
        return Err(Error::Convergence("zero eigenvector".into()));
    }
    normalize_with_sign(&mut v);
    let res = residual(a, lambda, &v);
    if res > 1e-8 {
        return Err(Error::Convergence(format!(
            "eigenpair residual {res:e} above 1e-8 (lambda = {lambda})"
        )));
    }
    Ok(Eigenpair {
        lambda,
        vector: v,
        residual: res,
        iterations,
        method,
    })
}
