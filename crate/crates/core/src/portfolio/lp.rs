//! Bounded-variable revised simplex for small dense linear programs.
//!
//! Solves `min c'x  s.t.  A x = b,  l <= x <= u` where bounds may be
//! infinite. The basis inverse is kept dense and updated by elementary row
//! operations, with a fresh factorisation every few dozen pivots. Phase one
//! minimises the sum of artificial variables.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const REFACTOR_EVERY: usize = 64;
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Constraint matrix, one column per variable.
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Row duals `y` with `c - A'y` the reduced costs.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic,
    AtLower,
    AtUpper,
    /// Free variable parked at zero.
    Zero,
}

struct Simplex<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    art_sign: Vec<f64>,
    basis: Vec<usize>,
    binv: DMatrix<f64>,
    tol: f64,
    iterations: usize,
    max_iter: usize,
}

impl<'a> Simplex<'a> {
    fn column(&self, j: usize) -> DVector<f64> {
        if j < self.a.ncols() {
            self.a.column(j).into_owned()
        } else {
            // artificial for row r, signed so that it starts non-negative
            let r = j - self.a.ncols();
            let mut e = DVector::zeros(self.a.nrows());
            e[r] = self.art_sign[r];
            e
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.a.nrows();
        let mut bm = DMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            bm.set_column(k, &self.column(j));
        }
        self.binv = bm
            .try_inverse()
            .ok_or_else(|| Error::Convergence("simplex basis became singular".into()))?;
        // recompute basic values from the nonbasic ones
        let mut rhs = self.b.clone();
        for j in 0..self.x.len() {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                rhs -= self.column(j) * self.x[j];
            }
        }
        let xb = &self.binv * rhs;
        for (k, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[k];
        }
        Ok(())
    }

    fn duals(&self) -> DVector<f64> {
        let cb = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|&j| self.cost[j]));
        self.binv.tr_mul(&cb)
    }

    fn reduced_cost(&self, y: &DVector<f64>, j: usize) -> f64 {
        if j < self.a.ncols() {
            self.cost[j] - self.a.column(j).dot(y)
        } else {
            let r = j - self.a.ncols();
            self.cost[j] - self.art_sign[r] * y[r]
        }
    }

    /// Entering variable and direction (+1 increase, -1 decrease).
    fn price(&self, y: &DVector<f64>, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.x.len() {
            if self.state[j] == State::Basic || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.reduced_cost(y, j);
            let (gain, step) = match self.state[j] {
                State::AtLower if d < -self.tol => (-d, 1.0),
                State::AtUpper if d > self.tol => (d, -1.0),
                State::Zero if d.abs() > self.tol => (d.abs(), -d.signum()),
                _ => continue,
            };
            if bland {
                return Some((j, step));
            }
            if best.is_none_or(|b| gain > b.2) {
                best = Some((j, step, gain));
            }
        }
        best.map(|(j, s, _)| (j, s))
    }

    fn iterate(&mut self) -> Result<()> {
        let mut since_refactor = 0;
        let mut degenerate = 0;
        loop {
            if self.iterations >= self.max_iter {
                return Err(Error::Convergence(format!(
                    "simplex iteration cap {} reached",
                    self.max_iter
                )));
            }
            let y = self.duals();
            let Some((j, dir)) = self.price(&y, degenerate >= DEGENERATE_STREAK) else {
                return Ok(());
            };
            self.iterations += 1;
            let w = &self.binv * self.column(j);
            // ratio test
            let mut theta = self.upper[j] - self.lower[j];
            let mut leave: Option<(usize, f64)> = None;
            for (k, &bj) in self.basis.iter().enumerate() {
                let delta = -dir * w[k];
                if delta.abs() <= 1e-12 {
                    continue;
                }
                let room = if delta < 0.0 {
                    (self.x[bj] - self.lower[bj]) / -delta
                } else {
                    (self.upper[bj] - self.x[bj]) / delta
                };
                let room = room.max(0.0);
                let better = room < theta - 1e-14
                    || (room <= theta + 1e-14
                        && leave.is_some_and(|(lk, _)| w[k].abs() > w[lk].abs()));
                if better {
                    theta = room;
                    leave = Some((
                        k,
                        if delta < 0.0 {
                            self.lower[bj]
                        } else {
                            self.upper[bj]
                        },
                    ));
                }
            }
            if !theta.is_finite() {
                return Err(Error::Infeasible("linear program is unbounded".into()));
            }
            degenerate = if theta <= 1e-13 { degenerate + 1 } else { 0 };
            self.x[j] += dir * theta;
            for (k, &bj) in self.basis.iter().enumerate() {
                self.x[bj] -= dir * theta * w[k];
            }
            match leave {
                None => {
                    self.state[j] = if dir > 0.0 {
                        State::AtUpper
                    } else {
                        State::AtLower
                    };
                    self.x[j] = if dir > 0.0 {
                        self.upper[j]
                    } else {
                        self.lower[j]
                    };
                }
                Some((r, bound)) => {
                    let out = self.basis[r];
                    self.x[out] = bound;
                    self.state[out] = if bound == self.lower[out] {
                        State::AtLower
                    } else {
                        State::AtUpper
                    };
                    self.basis[r] = j;
                    self.state[j] = State::Basic;
                    let pivot = w[r];
                    let row = self.binv.row(r) / pivot;
                    for k in 0..self.binv.nrows() {
                        if k != r && w[k] != 0.0 {
                            let f = w[k];
                            let mut target = self.binv.row_mut(k);
                            target -= &row * f;
                        }
                    }
                    self.binv.set_row(r, &row);
                    since_refactor += 1;
                    if since_refactor >= REFACTOR_EVERY {
                        self.refactor()?;
                        since_refactor = 0;
                    }
                }
            }
        }
    }
}

/// Solves the program; `max_iter` bounds the pivots of both phases.
pub fn solve(lp: &LinearProgram, tol: f64, max_iter: usize) -> Result<LpSolution> {
    let (m, n) = (lp.a.nrows(), lp.a.ncols());
    if lp.b.len() != m || lp.c.len() != n || lp.lower.len() != n || lp.upper.len() != n {
        return Err(Error::Size("inconsistent linear program dimensions".into()));
    }
    let mut x = Vec::with_capacity(n + m);
    let mut state = Vec::with_capacity(n + m);
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l > u {
            return Err(Error::Infeasible(format!("variable {j} has empty bounds")));
        }
        if l.is_finite() {
            x.push(l);
            state.push(State::AtLower);
        } else if u.is_finite() {
            x.push(u);
            state.push(State::AtUpper);
        } else {
            x.push(0.0);
            state.push(State::Zero);
        }
    }
    let resid = &lp.b - &lp.a * DVector::from_column_slice(&x);
    let art_sign: Vec<f64> = resid
        .iter()
        .map(|r| if *r < 0.0 { -1.0 } else { 1.0 })
        .collect();
    x.extend(resid.iter().map(|r| r.abs()));
    state.extend(std::iter::repeat_n(State::Basic, m));

    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    lower.extend(std::iter::repeat_n(0.0, m));
    upper.extend(std::iter::repeat_n(f64::INFINITY, m));
    let mut cost = vec![0.0; n];
    cost.extend(std::iter::repeat_n(1.0, m));

    let mut sx = Simplex {
        a: &lp.a,
        b: &lp.b,
        cost,
        lower,
        upper,
        x,
        state,
        art_sign,
        basis: (n..n + m).collect(),
        binv: DMatrix::from_diagonal(&DVector::from_iterator(
            m,
            resid.iter().map(|r| if *r < 0.0 { -1.0 } else { 1.0 }),
        )),
        tol,
        iterations: 0,
        max_iter,
    };
    sx.iterate()?;
    let infeas: f64 = sx.x[n..].iter().sum();
    let scale = 1.0 + lp.b.amax();
    if infeas > tol * scale * 10.0 {
        return Err(Error::Infeasible(format!(
            "linear program infeasible (artificial sum {infeas:e})"
        )));
    }
    // phase two: pin artificials to zero
    for j in n..n + m {
        sx.upper[j] = 0.0;
        if sx.state[j] != State::Basic {
            sx.x[j] = 0.0;
            sx.state[j] = State::AtLower;
        }
    }
    sx.cost =
        lp.c.iter()
            .copied()
            .chain(std::iter::repeat_n(0.0, m))
            .collect();
    sx.refactor()?;
    sx.iterate()?;
    sx.refactor()?;
    let duals = sx.duals();
    let x: Vec<f64> = sx.x[..n].to_vec();
    let objective = lp.c.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        x,
        duals: duals.iter().copied().collect(),
        objective,
        iterations: sx.iterations,
    })
}
