//! Binary regularized solvers behind the one-vs-rest models.
//!
//! Every objective has the form
//!
//! ```text
//! J(w, b) = (1/n) * sum_i omega_i * loss(z_i * (x_i . w + b)) + R(w)
//! R(w)    = ||w||_1 / (C n)        (L1)
//!         = ||w||_2^2 / (2 C n)    (L2)
//! ```
//!
//! with `z_i` in {-1, +1} and the bias left unpenalized. Smooth objectives
//! (L2 logistic, L2 squared hinge) run L-BFGS with a backtracking Armijo
//! search and stop when `||grad J||_inf <= tol`. The L1 logistic objective runs
//! cyclic coordinate descent with a seeded sweep order: a Newton step on each
//! coordinate, soft-thresholded, with a backtracking check; it stops when the
//! largest parameter change in a sweep is `<= tol`.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryLoss {
    Logistic,
    SquaredHinge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularizer {
    L1,
    L2,
}

/// One binary problem: rows of `x`, targets in {-1, +1}, per-row weights.
pub struct BinaryProblem<'a> {
    pub x: &'a CsrMatrix,
    pub z: &'a [f64],
    pub omega: &'a [f64],
    pub c: f64,
    pub loss: BinaryLoss,
    pub reg: Regularizer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryFit {
    pub w: Vec<f64>,
    pub b: f64,
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
    /// Objective value after every iteration, starting with the initial point.
    pub trace: Vec<f64>,
}

/// `S(x, t) = sign(x) * max(|x| - t, 0)`.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl BinaryLoss {
    /// Loss at signed margin `u = z * (x . w + b)`.
    pub fn value(self, u: f64) -> f64 {
        match self {
            BinaryLoss::Logistic => softplus(-u),
            BinaryLoss::SquaredHinge => {
                let h = (1.0 - u).max(0.0);
                h * h
            }
        }
    }

    /// d loss / d u.
    pub fn derivative(self, u: f64) -> f64 {
        match self {
            BinaryLoss::Logistic => -sigmoid(-u),
            BinaryLoss::SquaredHinge => -2.0 * (1.0 - u).max(0.0),
        }
    }
}

impl BinaryProblem<'_> {
    pub fn n(&self) -> usize {
        self.x.n_rows()
    }

    pub fn dim(&self) -> usize {
        self.x.n_cols()
    }

    fn lambda(&self) -> f64 {
        1.0 / (self.c * self.n() as f64)
    }

    pub fn penalty(&self, w: &[f64]) -> f64 {
        match self.reg {
            Regularizer::L1 => self.lambda() * w.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::L2 => 0.5 * self.lambda() * w.iter().map(|v| v * v).sum::<f64>(),
        }
    }

    pub fn margins(&self, w: &[f64], b: f64) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.z[i] * (self.x.row_dot(i, w) + b))
            .collect()
    }

    pub fn objective(&self, w: &[f64], b: f64) -> f64 {
        let n = self.n() as f64;
        let data: f64 = self
            .margins(w, b)
            .iter()
            .zip(self.omega)
            .map(|(&u, &o)| o * self.loss.value(u))
            .sum();
        data / n + self.penalty(w)
    }

    /// Gradient of the smooth part (data term plus L2 penalty, if any).
    /// Returns `(objective, grad_w, grad_b)`.
    pub fn smooth_gradient(&self, w: &[f64], b: f64) -> (f64, Vec<f64>, f64) {
        let n = self.n() as f64;
        let mut grad = vec![0.0; self.dim()];
        let mut gb = 0.0;
        let mut data = 0.0;
        for i in 0..self.n() {
            let u = self.z[i] * (self.x.row_dot(i, w) + b);
            data += self.omega[i] * self.loss.value(u);
            let r = self.omega[i] * self.loss.derivative(u) * self.z[i] / n;
            if r != 0.0 {
                let (idx, vals) = self.x.row(i);
                for (&j, &v) in idx.iter().zip(vals) {
                    grad[j] += r * v;
                }
                gb += r;
            }
        }
        let mut obj = data / n;
        if self.reg == Regularizer::L2 {
            let lam = self.lambda();
            for (g, &wj) in grad.iter_mut().zip(w) {
                *g += lam * wj;
            }
            obj += self.penalty(w);
        }
        (obj, grad, gb)
    }
}

const LBFGS_MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// L-BFGS on a smooth objective over `[w..., b]`.
fn lbfgs<F>(
    dim: usize,
    mut eval: F,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64, usize, bool, Vec<f64>)
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = vec![0.0; dim];
    let (mut f, mut g) = eval(&x);
    let mut trace = vec![f];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = inf_norm(&g) <= tol;

    while !converged && iterations < max_iter {
        // Two-loop recursion for the search direction.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = history.back().map_or_else(
            || 1.0 / inf_norm(&g).max(1e-12),
            |(s, y, _)| dot(s, y) / dot(y, y),
        );
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - beta) * si;
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            // Not a descent direction: restart from steepest descent.
            history.clear();
            let scale = 1.0 / inf_norm(&g).max(1e-12);
            d = g.iter().map(|v| -v * scale).collect();
            slope = dot(&g, &d);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (fn_, gn) = eval(&xn);
            if fn_.is_finite() && fn_ <= f + ARMIJO_C1 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };
        iterations += 1;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(1e-300) {
            if history.len() == LBFGS_MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        f = fn_;
        g = gn;
        trace.push(f);
        converged = inf_norm(&g) <= tol;
    }
    (x, f, iterations, converged, trace)
}

fn solve_smooth(p: &BinaryProblem<'_>, tol: f64, max_iter: usize) -> BinaryFit {
    let d = p.dim();
    let (x, f, iterations, converged, trace) = lbfgs(
        d + 1,
        |params| {
            let (obj, mut gw, gb) = p.smooth_gradient(&params[..d], params[d]);
            gw.push(gb);
            (obj, gw)
        },
        tol,
        max_iter,
    );
    BinaryFit {
        b: x[d],
        w: x[..d].to_vec(),
        iterations,
        objective: f,
        converged,
        trace,
    }
}

fn solve_l1_logistic(p: &BinaryProblem<'_>, tol: f64, max_iter: usize, seed: u64) -> BinaryFit {
    let n = p.n();
    let nf = n as f64;
    let d = p.dim();
    let lam = p.lambda();
    let cols = p.x.columns();
    let loss = p.loss;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut u = vec![0.0; n];
    let mut trace = vec![p.objective(&w, b)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..d).filter(|&j| !cols[j].is_empty()).collect();
    let mut converged = false;
    let mut iterations = 0;

    // Change in the data term when coordinate entries `col` move by `delta`.
    let data_change = |u: &[f64], col: &[(usize, f64)], delta: f64| -> f64 {
        col.iter()
            .map(|&(i, v)| {
                let un = u[i] + p.z[i] * v * delta;
                p.omega[i] * (loss.value(un) - loss.value(u[i]))
            })
            .sum::<f64>()
            / nf
    };

    while iterations < max_iter {
        iterations += 1;
        let mut max_change = 0.0f64;
        order.shuffle(&mut rng);

        // Unpenalized bias first: damped Newton step.
        let mut g = 0.0;
        let mut h = 0.0;
        for ((&ui, &wi), &zi) in u.iter().zip(p.omega).zip(p.z) {
            let s = sigmoid(ui);
            g += wi * loss.derivative(ui) * zi;
            h += wi * s * (1.0 - s);
        }
        g /= nf;
        h = (h / nf).max(1e-12);
        let all_rows: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0)).collect();
        let mut step = -g / h;
        for _ in 0..30 {
            if data_change(&u, &all_rows, step) <= 0.5 * g * step {
                break;
            }
            step *= 0.5;
        }
        if data_change(&u, &all_rows, step) <= 0.0 {
            b += step;
            for (ui, &zi) in u.iter_mut().zip(p.z) {
                *ui += zi * step;
            }
            max_change = max_change.max(step.abs());
        }

        for &j in &order {
            let col = &cols[j];
            let mut g = 0.0;
            let mut h = 0.0;
            for &(i, v) in col {
                let s = sigmoid(u[i]);
                g += p.omega[i] * loss.derivative(u[i]) * p.z[i] * v;
                h += p.omega[i] * s * (1.0 - s) * v * v;
            }
            g /= nf;
            h = (h / nf).max(1e-12);
            let target = soft_threshold(w[j] - g / h, lam / h);
            let mut delta = target - w[j];
            if delta == 0.0 {
                continue;
            }
            // Sufficient decrease along the coordinate (proximal Newton rule).
            let decrease_bound = |dl: f64| g * dl + lam * ((w[j] + dl).abs() - w[j].abs());
            let mut accepted = false;
            for _ in 0..30 {
                let change =
                    data_change(&u, col, delta) + lam * ((w[j] + delta).abs() - w[j].abs());
                if change <= 0.01 * decrease_bound(delta) {
                    accepted = true;
                    break;
                }
                delta *= 0.5;
            }
            if !accepted {
                continue;
            }
            w[j] += delta;
            for &(i, v) in col {
                u[i] += p.z[i] * v * delta;
            }
            max_change = max_change.max(delta.abs());
        }
        let obj = {
            let data: f64 = u
                .iter()
                .zip(p.omega)
                .map(|(&ui, &o)| o * loss.value(ui))
                .sum();
            data / nf + p.penalty(&w)
        };
        trace.push(obj);
        if max_change <= tol {
            converged = true;
            break;
        }
    }
    BinaryFit {
        objective: *trace.last().unwrap_or(&f64::NAN),
        w,
        b,
        iterations,
        converged,
        trace,
    }
}

/// Solves one binary problem with the solver appropriate to its penalty.
pub fn solve(p: &BinaryProblem<'_>, tol: f64, max_iter: usize, seed: u64) -> BinaryFit {
    match (p.reg, p.loss) {
        (Regularizer::L1, BinaryLoss::Logistic) => solve_l1_logistic(p, tol, max_iter, seed),
        (Regularizer::L1, BinaryLoss::SquaredHinge) => {
            unreachable!("L1 squared hinge is not offered")
        }
        (Regularizer::L2, _) => solve_smooth(p, tol, max_iter),
    }
}
