//! One-hidden-layer perceptron: ReLU hidden units, softmax output,
//! cross-entropy loss, mini-batch gradient descent with momentum.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::linear::softmax_in_place;
use super::{FeatureMatrix, MlpParams};
use crate::math;
use crate::rng::{stream, stream_rng};

/// Fitted MLP weights. `w1` is `hidden x d`, `w2` is `k x hidden`, both
/// row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpWeights {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub n_features: usize,
    pub hidden: usize,
}

impl MlpWeights {
    fn flatten(&self) -> Vec<f64> {
        let mut flat =
            Vec::with_capacity(self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len());
        flat.extend_from_slice(&self.w1);
        flat.extend_from_slice(&self.b1);
        flat.extend_from_slice(&self.w2);
        flat.extend_from_slice(&self.b2);
        flat
    }

    fn unflatten(flat: &[f64], d: usize, hidden: usize, k: usize) -> MlpWeights {
        let (w1, rest) = flat.split_at(hidden * d);
        let (b1, rest) = rest.split_at(hidden);
        let (w2, b2) = rest.split_at(k * hidden);
        MlpWeights {
            w1: w1.to_vec(),
            b1: b1.to_vec(),
            w2: w2.to_vec(),
            b2: b2.to_vec(),
            n_features: d,
            hidden,
        }
    }

    fn hidden_activations(&self, row: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|h| {
                let w = &self.w1[h * self.n_features..(h + 1) * self.n_features];
                let z: f64 =
                    w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>() + self.b1[h];
                z.max(0.0)
            })
            .collect()
    }

    /// Softmax class probabilities for one raw (already scaled) row.
    pub fn probabilities(&self, row: &[f64]) -> Vec<f64> {
        let a1 = self.hidden_activations(row);
        let k = self.b2.len();
        let mut scores: Vec<f64> = (0..k)
            .map(|c| {
                let w = &self.w2[c * self.hidden..(c + 1) * self.hidden];
                w.iter().zip(&a1).map(|(a, b)| a * b).sum::<f64>() + self.b2[c]
            })
            .collect();
        softmax_in_place(&mut scores);
        scores
    }
}

/// Mean cross-entropy of a flattened MLP over a batch, and its gradient.
///
/// `params` layout is `[w1 | b1 | w2 | b2]`. Exposed so the backpropagated
/// gradient can be checked against central finite differences.
pub fn mlp_loss_grad(
    params: &[f64],
    x: &FeatureMatrix,
    y_local: &[u8],
    k: usize,
    hidden: usize,
) -> (f64, Vec<f64>) {
    let d = x.cols();
    let n = x.rows();
    debug_assert_eq!(params.len(), hidden * d + hidden + k * hidden + k);
    let model = MlpWeights::unflatten(params, d, hidden, k);
    let mut grad = alloc::vec![0.0; params.len()];
    let (gw1, rest) = grad.split_at_mut(hidden * d);
    let (gb1, rest) = rest.split_at_mut(hidden);
    let (gw2, gb2) = rest.split_at_mut(k * hidden);
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    for (row, &label) in x.iter_rows().zip(y_local) {
        let a1 = model.hidden_activations(row);
        let mut probs: Vec<f64> = (0..k)
            .map(|c| {
                let w = &model.w2[c * hidden..(c + 1) * hidden];
                w.iter().zip(&a1).map(|(a, b)| a * b).sum::<f64>() + model.b2[c]
            })
            .collect();
        softmax_in_place(&mut probs);
        loss -= math::ln(probs[label as usize].max(1e-300)) * inv_n;

        // output layer deltas
        let mut dz2 = probs;
        dz2[label as usize] -= 1.0;
        for delta in dz2.iter_mut() {
            *delta *= inv_n;
        }
        for c in 0..k {
            let g_row = &mut gw2[c * hidden..(c + 1) * hidden];
            for (g, a) in g_row.iter_mut().zip(&a1) {
                *g += dz2[c] * a;
            }
            gb2[c] += dz2[c];
        }
        // hidden layer deltas through the ReLU mask
        for h in 0..hidden {
            if a1[h] <= 0.0 {
                continue;
            }
            let mut da: f64 = 0.0;
            for c in 0..k {
                da += dz2[c] * model.w2[c * hidden + h];
            }
            let g_row = &mut gw1[h * d..(h + 1) * d];
            for (g, v) in g_row.iter_mut().zip(row) {
                *g += da * v;
            }
            gb1[h] += da;
        }
    }
    (loss, grad)
}

/// Trains the MLP with a fixed epoch budget of seeded mini-batch sweeps.
pub(crate) fn fit_mlp(
    x: &FeatureMatrix,
    y_local: &[u8],
    k: usize,
    hp: &MlpParams,
    seed: u64,
) -> MlpWeights {
    let d = x.cols();
    let hidden = hp.hidden_units;
    let n = x.rows();

    // He-style init for the ReLU layer, smaller fan-in scaling on top
    let mut rng = stream_rng(seed, &[stream::MLP_INIT]);
    let scale1 = math::sqrt(2.0 / d.max(1) as f64);
    let scale2 = math::sqrt(2.0 / hidden as f64);
    let mut model = MlpWeights {
        w1: (0..hidden * d)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z * scale1
            })
            .collect(),
        b1: alloc::vec![0.0; hidden],
        w2: (0..k * hidden)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z * scale2
            })
            .collect(),
        b2: alloc::vec![0.0; k],
        n_features: d,
        hidden,
    };

    let mut params = model.flatten();
    let mut velocity = alloc::vec![0.0; params.len()];
    let mut order: Vec<usize> = (0..n).collect();
    let mut batch_rows: Vec<f64> = Vec::new();
    let mut batch_labels: Vec<u8> = Vec::new();
    for epoch in 0..hp.epochs {
        let mut rng = stream_rng(seed, &[stream::EPOCH_SHUFFLE, epoch as u64]);
        order.shuffle(&mut rng);
        for batch in order.chunks(hp.batch_size) {
            batch_rows.clear();
            batch_labels.clear();
            for &i in batch {
                batch_rows.extend_from_slice(x.row(i));
                batch_labels.push(y_local[i]);
            }
            let xb = FeatureMatrix::new(core::mem::take(&mut batch_rows), batch.len(), d)
                .expect("batch shape");
            let (_, grad) = mlp_loss_grad(&params, &xb, &batch_labels, k, hidden);
            batch_rows = xb.data;
            for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = hp.momentum * *v - hp.learning_rate * g;
                *p += *v;
            }
        }
    }
    model = MlpWeights::unflatten(&params, d, hidden, k);
    model
}
