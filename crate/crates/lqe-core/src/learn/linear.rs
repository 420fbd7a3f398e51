//! Linear classifiers: multinomial logistic regression and a one-vs-rest
//! linear SVM.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{FeatureMatrix, LogRegParams, SvmParams};
use crate::math;
use crate::rng::{stream, stream_rng};

/// Weights of a linear model: one `(w, b)` pair per class.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearWeights {
    /// Row-major `k x d`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub n_features: usize,
}

impl LinearWeights {
    fn zeros(k: usize, d: usize) -> Self {
        LinearWeights {
            weights: alloc::vec![0.0; k * d],
            bias: alloc::vec![0.0; k],
            n_features: d,
        }
    }

    fn class_row(&self, c: usize) -> &[f64] {
        &self.weights[c * self.n_features..(c + 1) * self.n_features]
    }

    /// `w_c . x + b_c` for every class.
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        (0..self.bias.len())
            .map(|c| dot(self.class_row(c), x) + self.bias[c])
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable in-place softmax.
pub fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = math::exp(*s - max);
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}

/// L2-regularized mean cross-entropy of a flattened softmax model, and its
/// gradient.
///
/// `params` is `[w_00..w_0d, ..., w_k0..w_kd, b_0..b_k]` for `k` classes
/// over `d` features; the bias is not regularized. Exposed so the analytic
/// gradient can be checked against finite differences.
pub fn softmax_ce_loss_grad(
    params: &[f64],
    x: &FeatureMatrix,
    y_local: &[u8],
    k: usize,
    lambda: f64,
) -> (f64, Vec<f64>) {
    let d = x.cols();
    let n = x.rows();
    debug_assert_eq!(params.len(), k * d + k);
    let (w, b) = params.split_at(k * d);
    let mut grad = alloc::vec![0.0; params.len()];
    let mut loss = 0.0;
    let inv_n = 1.0 / n as f64;
    let mut probs = alloc::vec![0.0; k];
    for (row, &label) in x.iter_rows().zip(y_local) {
        for (c, p) in probs.iter_mut().enumerate() {
            *p = dot(&w[c * d..(c + 1) * d], row) + b[c];
        }
        softmax_in_place(&mut probs);
        loss -= math::ln(probs[label as usize].max(1e-300)) * inv_n;
        for c in 0..k {
            let delta = (probs[c] - if c == label as usize { 1.0 } else { 0.0 }) * inv_n;
            let g_row = &mut grad[c * d..(c + 1) * d];
            for (g, v) in g_row.iter_mut().zip(row) {
                *g += delta * v;
            }
            grad[k * d + c] += delta;
        }
    }
    // L2 on weights only
    for i in 0..k * d {
        loss += 0.5 * lambda * w[i] * w[i];
        grad[i] += lambda * w[i];
    }
    (loss, grad)
}

/// Full-batch gradient descent on the softmax cross-entropy.
///
/// Stops when the gradient norm drops below `tol` or the epoch budget is
/// exhausted. If a step would increase the loss the step size is halved
/// (persistently), which keeps the per-epoch training loss non-increasing.
pub fn fit_logreg(
    x: &FeatureMatrix,
    y_local: &[u8],
    k: usize,
    hp: &LogRegParams,
) -> LinearWeights {
    let d = x.cols();
    let mut params = alloc::vec![0.0; k * d + k];
    let mut lr = hp.learning_rate;
    let (mut loss, mut grad) = softmax_ce_loss_grad(&params, x, y_local, k, hp.l2_lambda);
    for _ in 0..hp.max_epochs {
        let grad_norm = math::sqrt(grad.iter().map(|g| g * g).sum::<f64>());
        if grad_norm < hp.tol {
            break;
        }
        let mut stepped = false;
        for _ in 0..40 {
            let candidate: Vec<f64> =
                params.iter().zip(&grad).map(|(p, g)| p - lr * g).collect();
            let (new_loss, new_grad) =
                softmax_ce_loss_grad(&candidate, x, y_local, k, hp.l2_lambda);
            if new_loss <= loss {
                params = candidate;
                loss = new_loss;
                grad = new_grad;
                stepped = true;
                break;
            }
            lr *= 0.5;
        }
        if !stepped {
            break;
        }
    }
    let (w, b) = params.split_at(k * d);
    LinearWeights { weights: w.to_vec(), bias: b.to_vec(), n_features: d }
}

/// Training loss trajectory of the logistic regression, for the
/// monotonicity check. Returns the loss after each committed epoch.
#[cfg(test)]
pub fn logreg_loss_trajectory(
    x: &FeatureMatrix,
    y_local: &[u8],
    k: usize,
    hp: &LogRegParams,
) -> Vec<f64> {
    let d = x.cols();
    let mut params = alloc::vec![0.0; k * d + k];
    let mut lr = hp.learning_rate;
    let (mut loss, mut grad) = softmax_ce_loss_grad(&params, x, y_local, k, hp.l2_lambda);
    let mut trajectory = alloc::vec![loss];
    for _ in 0..hp.max_epochs {
        let grad_norm = math::sqrt(grad.iter().map(|g| g * g).sum::<f64>());
        if grad_norm < hp.tol {
            break;
        }
        let mut stepped = false;
        for _ in 0..40 {
            let candidate: Vec<f64> =
                params.iter().zip(&grad).map(|(p, g)| p - lr * g).collect();
            let (new_loss, new_grad) =
                softmax_ce_loss_grad(&candidate, x, y_local, k, hp.l2_lambda);
            if new_loss <= loss {
                params = candidate;
                loss = new_loss;
                grad = new_grad;
                stepped = true;
                break;
            }
            lr *= 0.5;
        }
        if !stepped {
            break;
        }
        trajectory.push(loss);
    }
    trajectory
}

/// One-vs-rest linear SVM trained by stochastic subgradient descent on the
/// L2-regularized hinge loss, with seeded per-epoch shuffles.
pub fn fit_svm(
    x: &FeatureMatrix,
    y_local: &[u8],
    k: usize,
    hp: &SvmParams,
    seed: u64,
) -> LinearWeights {
    let d = x.cols();
    let n = x.rows();
    let mut model = LinearWeights::zeros(k, d);
    let mut order: Vec<usize> = (0..n).collect();
    for c in 0..k {
        let w = &mut model.weights[c * d..(c + 1) * d];
        let b = &mut model.bias[c];
        for epoch in 0..hp.max_epochs {
            let mut rng =
                stream_rng(seed, &[stream::EPOCH_SHUFFLE, c as u64, epoch as u64]);
            order.shuffle(&mut rng);
            for &i in &order {
                let row = x.row(i);
                let target = if y_local[i] as usize == c { 1.0 } else { -1.0 };
                let margin = target * (dot(w, row) + *b);
                let decay = 1.0 - hp.learning_rate * hp.l2_lambda;
                for wj in w.iter_mut() {
                    *wj *= decay;
                }
                if margin < 1.0 {
                    for (wj, v) in w.iter_mut().zip(row) {
                        *wj += hp.learning_rate * target * v;
                    }
                    *b += hp.learning_rate * target;
                }
            }
        }
    }
    model
}
