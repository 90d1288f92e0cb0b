use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::generate::logistic;
use crate::{Error, Result};

const SEPARATION_NORM: f64 = 1e4;
const SEPARATION_RIDGE: f64 = 1e-6;
const ROUNDING: f64 = 1e-14;

/// A logistic regression fitted on a subset of the covariates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedLogit {
    /// Covariate indices the model sees, ascending.
    pub used: Vec<usize>,
    /// One coefficient per entry of `used`.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    /// Euclidean norm of the mean-loss gradient at the returned fit.
    pub grad_norm: f64,
    /// Mean loss after each accepted step, starting from the zero fit.
    /// Non-increasing up to rounding (relative 1e-14).
    pub loss_history: Vec<f64>,
    /// Set when the unpenalised fit diverged and a small ridge was added.
    pub separation: bool,
    pub ridge: f64,
}

impl FittedLogit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        logistic(self.linear(x))
    }

    fn linear(&self, x: &[f64]) -> f64 {
        self.intercept + self.used.iter().zip(&self.coefficients).map(|(&j, b)| x[j] * b).sum::<f64>()
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

struct Problem {
    design: DMatrix<f64>,
    y: DVector<f64>,
    ridge: f64,
}

impl Problem {
    fn n(&self) -> f64 {
        self.design.nrows() as f64
    }

    fn loss(&self, theta: &DVector<f64>) -> f64 {
        let eta = &self.design * theta;
        let nll: f64 = eta.iter().zip(self.y.iter()).map(|(&e, &y)| softplus(e) - y * e).sum();
        nll / self.n() + 0.5 * self.ridge * theta.rows(1, theta.len() - 1).norm_squared()
    }

    fn gradient_hessian(&self, theta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let eta = &self.design * theta;
        let p = eta.map(logistic);
        let resid = &p - &self.y;
        let mut grad = self.design.tr_mul(&resid) / self.n();
        let mut weighted = self.design.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            row *= p[i] * (1.0 - p[i]);
        }
        let mut hess = self.design.tr_mul(&weighted) / self.n();
        for j in 1..theta.len() {
            grad[j] += self.ridge * theta[j];
            hess[(j, j)] += self.ridge;
        }
        (grad, hess)
    }
}

fn newton_step(hess: DMatrix<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = hess.clone().cholesky() {
        return Ok(-chol.solve(grad));
    }
    // Singular Hessian (e.g. a constant covariate): minimum-norm step.
    hess.svd(true, true)
        .solve(&(-grad), 1e-12)
        .map_err(|e| Error::numerical("logistic fit", e))
}

enum Outcome {
    Done(FittedLogit),
    Diverged,
}

fn run_irls(problem: &Problem, used: &[usize], tol: f64, max_iter: usize) -> Result<Outcome> {
    let dim = problem.design.ncols();
    let mut theta = DVector::zeros(dim);
    let mut loss = problem.loss(&theta);
    let mut history = vec![loss];
    let finish = |theta: &DVector<f64>, grad_norm: f64, iterations: usize, history: Vec<f64>| FittedLogit {
        used: used.to_vec(),
        coefficients: theta.iter().skip(1).copied().collect(),
        intercept: theta[0],
        iterations,
        grad_norm,
        loss_history: history,
        separation: false,
        ridge: problem.ridge,
    };

    for iter in 0..max_iter {
        let (grad, hess) = problem.gradient_hessian(&theta);
        let grad_norm = grad.norm();
        if grad_norm <= tol {
            return Ok(Outcome::Done(finish(&theta, grad_norm, iter, history)));
        }
        let step = newton_step(hess, &grad)?;
        let mut t = 1.0;
        let accepted = loop {
            let candidate = &theta + &step * t;
            let candidate_loss = problem.loss(&candidate);
            if candidate_loss <= loss {
                break Some((candidate, candidate_loss));
            }
            // Close to the optimum the decrease drops below the resolution of
            // the loss; judge the full step by the gradient instead.
            if t == 1.0
                && candidate_loss - loss <= ROUNDING * loss.abs().max(1.0)
                && problem.gradient_hessian(&candidate).0.norm() < grad_norm
            {
                break Some((candidate, candidate_loss));
            }
            t *= 0.5;
            if t < 1e-12 {
                break None;
            }
        };
        match accepted {
            Some((candidate, candidate_loss)) => {
                theta = candidate;
                loss = candidate_loss;
                history.push(loss);
            }
            None => {
                // No representable descent left; accept if the gradient is
                // already at rounding level.
                if grad_norm <= tol.sqrt() {
                    return Ok(Outcome::Done(finish(&theta, grad_norm, iter, history)));
                }
                return Err(Error::numerical(
                    "logistic fit",
                    format!("line search stalled with gradient norm {grad_norm:e}"),
                ));
            }
        }
        if theta.rows(1, dim - 1).norm() > SEPARATION_NORM {
            return Ok(Outcome::Diverged);
        }
    }
    let (grad, _) = problem.gradient_hessian(&theta);
    Err(Error::numerical(
        "logistic fit",
        format!("no convergence in {max_iter} iterations (gradient norm {:e})", grad.norm()),
    ))
}

/// Maximum-likelihood logistic regression by Newton iterations (IRLS) with
/// step halving, on the instances `ids` and without the covariates in
/// `missing`.
///
/// Stops when the Euclidean norm of the mean-loss gradient falls to `tol`.
/// If the coefficients pass norm 1e4 (separable data) a warning is logged
/// and the fit is redone with ridge penalty 1e-6.
pub fn fit_logistic(
    covariates: &[Vec<f64>],
    labels: &[usize],
    ids: &[usize],
    missing: &[usize],
    tol: f64,
    max_iter: usize,
) -> Result<FittedLogit> {
    let Some(&first) = ids.first() else {
        return Err(Error::Argument("no training instances".into()));
    };
    let positives = ids.iter().filter(|&&i| labels[i] == 1).count();
    if positives == 0 || positives == ids.len() {
        return Err(Error::Argument("both labels must be present in the training part".into()));
    }
    let dim = covariates[first].len();
    let used: Vec<usize> = (0..dim).filter(|j| !missing.contains(j)).collect();
    let design = DMatrix::from_fn(ids.len(), used.len() + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            covariates[ids[r]][used[c - 1]]
        }
    });
    let y = DVector::from_iterator(ids.len(), ids.iter().map(|&i| labels[i] as f64));
    let mut problem = Problem { design, y, ridge: 0.0 };

    match run_irls(&problem, &used, tol, max_iter)? {
        Outcome::Done(fit) => Ok(fit),
        Outcome::Diverged => {
            warn!("logistic fit: coefficient norm above {SEPARATION_NORM:e}, data look separable; refitting with ridge {SEPARATION_RIDGE:e}");
            problem.ridge = SEPARATION_RIDGE;
            match run_irls(&problem, &used, tol, max_iter)? {
                Outcome::Done(fit) => Ok(FittedLogit { separation: true, ..fit }),
                Outcome::Diverged => Err(Error::numerical(
                    "logistic fit",
                    "coefficients diverge even with a ridge penalty",
                )),
            }
        }
    }
}
