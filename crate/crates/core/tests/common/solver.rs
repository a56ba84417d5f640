//! Independent checks on the linear solvers. Each returns a short summary on
//! success and a description of the first violation otherwise.

use hsol_core::corpus::Label;
use hsol_core::linmodel::{self, BinaryLoss, BinaryProblem, Regularizer};
use hsol_core::sparse::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub x: CsrMatrix,
    pub z: Vec<f64>,
    pub omega: Vec<f64>,
    pub c: f64,
}

impl Instance {
    pub fn problem(&self, loss: BinaryLoss, reg: Regularizer) -> BinaryProblem<'_> {
        BinaryProblem {
            x: &self.x,
            z: &self.z,
            omega: &self.omega,
            c: self.c,
            loss,
            reg,
        }
    }
}

/// Random small binary problem with a sprinkling of exact zeros.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Instance {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    if rng.gen_bool(0.25) {
                        0.0
                    } else {
                        rng.gen_range(-2.0..2.0)
                    }
                })
                .collect()
        })
        .collect();
    Instance {
        x: CsrMatrix::from_dense(&rows),
        z: (0..n)
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect(),
        omega: (0..n).map(|_| rng.gen_range(0.5..2.0)).collect(),
        c: rng.gen_range(0.1..10.0),
    }
}

fn objective_at(p: &BinaryProblem<'_>, theta: &[f64]) -> f64 {
    let d = theta.len() - 1;
    p.objective(&theta[..d], theta[d])
}

/// Analytic gradients against central differences on 20 random instances for
/// both smooth losses.
pub fn gradients_match_finite_differences() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let inst = random_instance(&mut rng, 15, 4);
        for loss in [BinaryLoss::Logistic, BinaryLoss::SquaredHinge] {
            let p = inst.problem(loss, Regularizer::L2);
            let theta: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (_, gw, gb) = p.smooth_gradient(&theta[..4], theta[4]);
            let analytic: Vec<f64> = gw.into_iter().chain([gb]).collect();
            for (j, &a) in analytic.iter().enumerate() {
                let mut up = theta.clone();
                let mut down = theta.clone();
                up[j] += h;
                down[j] -= h;
                let fd = (objective_at(&p, &up) - objective_at(&p, &down)) / (2.0 * h);
                let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-2);
                worst = worst.max(rel);
                if rel > 1e-5 {
                    return Err(format!(
                        "case {case} {loss:?} coordinate {j}: analytic {a} vs fd {fd}"
                    ));
                }
            }
        }
    }
    Ok(format!("40 gradients, worst relative error {worst:.2e}"))
}

/// The L2 logistic objective never increases across L-BFGS iterations.
pub fn l2_objective_is_monotone() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut steps = 0;
    for case in 0..20 {
        let inst = random_instance(&mut rng, 30, 6);
        let fit = linmodel::solver::solve(
            &inst.problem(BinaryLoss::Logistic, Regularizer::L2),
            1e-8,
            500,
            0,
        );
        for (t, pair) in fit.trace.windows(2).enumerate() {
            if pair[1] > pair[0] + 1e-12 {
                return Err(format!(
                    "case {case} iteration {t}: {} -> {}",
                    pair[0], pair[1]
                ));
            }
        }
        steps += fit.trace.len() - 1;
    }
    Ok(format!("{steps} iterations checked"))
}

/// Minimizes a convex function of four variables by repeatedly evaluating an
/// 11^4 grid and shrinking it around the best point.
fn zoom_grid(f: impl Fn(&[f64]) -> f64) -> (Vec<f64>, f64) {
    let mut center = vec![0.0; 4];
    let mut half = 8.0;
    let mut best = f(&center);
    for _ in 0..40 {
        let mut best_point = center.clone();
        for a in 0..11 {
            for b in 0..11 {
                for c in 0..11 {
                    for d in 0..11 {
                        let point: Vec<f64> = [a, b, c, d]
                            .iter()
                            .zip(&center)
                            .map(|(&i, &m)| m + half * (i as f64 - 5.0) / 5.0)
                            .collect();
                        let v = f(&point);
                        if v < best {
                            best = v;
                            best_point = point;
                        }
                    }
                }
            }
        }
        center = best_point;
        half *= 0.5;
    }
    (center, best)
}

fn brute_force_instance() -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..12)
        .map(|_| (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect())
        .collect();
    // Labels follow a noisy linear rule so the optimum is interior.
    let z = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let s = r[0] - 0.5 * r[1] + 0.2;
            if (s > 0.0) != (i % 5 == 0) {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    Instance {
        x: CsrMatrix::from_dense(&rows),
        z,
        omega: vec![1.0; 12],
        c: 1.0,
    }
}

/// Solver optimum against a dense grid search on a 12-row, 3-feature problem,
/// for every penalty the logistic model offers.
pub fn solver_matches_brute_force() -> Result<String, String> {
    let inst = brute_force_instance();
    let mut report = Vec::new();
    for (loss, reg) in [
        (BinaryLoss::Logistic, Regularizer::L2),
        (BinaryLoss::Logistic, Regularizer::L1),
        (BinaryLoss::SquaredHinge, Regularizer::L2),
    ] {
        let p = inst.problem(loss, reg);
        let fit = linmodel::solver::solve(&p, 1e-9, 10_000, 0);
        let solver_obj = p.objective(&fit.w, fit.b);
        let (_, grid_obj) = zoom_grid(|t| objective_at(&p, t));
        let gap = solver_obj - grid_obj;
        if gap.abs() > 1e-4 {
            return Err(format!(
                "{loss:?}/{reg:?}: solver {solver_obj} vs grid {grid_obj}"
            ));
        }
        report.push(format!("{loss:?}/{reg:?} gap {gap:.1e}"));
    }
    Ok(report.join(", "))
}

/// 40 points in two dimensions split by the line x0 + x1 = 0.
pub fn separable_set() -> (CsrMatrix, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    while rows.len() < 40 {
        let p = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let s: f64 = p[0] + p[1];
        if s.abs() < 0.5 {
            continue;
        }
        y.push(if s > 0.0 { Label::Hate } else { Label::Neither });
        rows.push(p.to_vec());
    }
    (CsrMatrix::from_dense(&rows), y)
}

pub fn accuracy(pred: &[Label], truth: &[Label]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}
