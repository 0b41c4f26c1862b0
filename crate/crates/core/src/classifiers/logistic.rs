//! L2-regularized logistic regression fitted by damped Newton iterations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_training_set, sigmoid};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    /// Penalty `lambda / 2 * ||w||^2`; the bias is not penalized.
    pub lambda: f64,
    pub max_iter: usize,
    /// Convergence threshold on the Euclidean norm of the full gradient.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Objective value before the first and after every accepted step.
    pub loss_history: Vec<f64>,
}

impl LogisticModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias + x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>()
    }

    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Vec<f64> {
        matrix
            .rows_iter()
            .map(|x| sigmoid(self.decision(x)))
            .collect()
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Regularized negative log-likelihood and its gradient `(d/dw, d/db)`.
pub fn loss_and_gradient(
    weights: &[f64],
    bias: f64,
    matrix: &FeatureMatrix,
    labels: &[usize],
    lambda: f64,
) -> (f64, Vec<f64>, f64) {
    let mut loss = 0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>();
    let mut grad: Vec<f64> = weights.iter().map(|w| lambda * w).collect();
    let mut grad_b = 0.0;
    for (x, &y) in matrix.rows_iter().zip(labels) {
        let z = bias + x.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>();
        let y = y as f64;
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        for (g, a) in grad.iter_mut().zip(x) {
            *g += r * a;
        }
        grad_b += r;
    }
    (loss, grad, grad_b)
}

fn objective(w: &[f64], b: f64, matrix: &FeatureMatrix, labels: &[usize], lambda: f64) -> f64 {
    let mut loss = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    for (x, &y) in matrix.rows_iter().zip(labels) {
        let z = b + x.iter().zip(w).map(|(a, v)| a * v).sum::<f64>();
        loss += softplus(z) - y as f64 * z;
    }
    loss
}

pub fn train_logistic(
    matrix: &FeatureMatrix,
    labels: &[usize],
    config: &LogisticConfig,
) -> Result<LogisticModel> {
    check_training_set(matrix, labels)?;
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::OneClassOnly);
    }
    if !(config.lambda >= 0.0) || !(config.tol > 0.0) {
        return Err(Error::InvalidConfig(
            "lambda must be >= 0 and tol > 0".into(),
        ));
    }
    let d = matrix.ncols();
    let lambda = config.lambda;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let (mut loss, mut gw, mut gb) = loss_and_gradient(&w, b, matrix, labels, lambda);
    let mut history = vec![loss];
    let mut iterations = 0;
    let norm = |gw: &[f64], gb: f64| (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
    let mut gnorm = norm(&gw, gb);

    while gnorm >= config.tol && iterations < config.max_iter {
        iterations += 1;
        // Hessian over [w; b]
        let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
        for x in matrix.rows_iter() {
            let p = sigmoid(b + x.iter().zip(&w).map(|(a, v)| a * v).sum::<f64>());
            let s = p * (1.0 - p);
            if s == 0.0 {
                continue;
            }
            for i in 0..d {
                let sxi = s * x[i];
                if sxi == 0.0 {
                    continue;
                }
                for j in i..d {
                    h[(i, j)] += sxi * x[j];
                }
                h[(i, d)] += sxi;
            }
            h[(d, d)] += s;
        }
        for i in 0..=d {
            for j in 0..i {
                h[(i, j)] = h[(j, i)];
            }
            if i < d {
                h[(i, i)] += lambda;
            }
        }
        let g = DVector::from_iterator(d + 1, gw.iter().copied().chain([gb]));
        let step = newton_direction(h, &g);
        let slope = -g.dot(&step);

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand_w: Vec<f64> = w.iter().enumerate().map(|(i, v)| v - t * step[i]).collect();
            let cand_b = b - t * step[d];
            let cand = objective(&cand_w, cand_b, matrix, labels, lambda);
            if cand <= loss + 1e-4 * t * slope {
                w = cand_w;
                b = cand_b;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        (loss, gw, gb) = loss_and_gradient(&w, b, matrix, labels, lambda);
        history.push(loss);
        gnorm = norm(&gw, gb);
    }

    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(Error::Numerical("logistic weights diverged".into()));
    }
    Ok(LogisticModel {
        weights: w,
        bias: b,
        lambda,
        iterations,
        gradient_norm: gnorm,
        converged: gnorm < config.tol,
        loss_history: history,
    })
}

/// Solve `H step = g`, adding diagonal damping until `H` is positive definite.
fn newton_direction(h: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let scale = h.diagonal().iter().cloned().fold(0.0, f64::max).max(1.0);
    let mut mu = 0.0;
    loop {
        let mut hm = h.clone();
        if mu > 0.0 {
            for i in 0..hm.nrows() {
                hm[(i, i)] += mu;
            }
        }
        if let Some(ch) = hm.cholesky() {
            return ch.solve(g);
        }
        mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
        if mu > 1e10 * scale {
            // plain gradient step
            return g / scale;
        }
    }
}
