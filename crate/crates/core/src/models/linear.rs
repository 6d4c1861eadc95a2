use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(p: usize) -> Self {
        Self {
            weights: vec![0.0; p],
            bias: 0.0,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Per-sample weights: `w_pos` for positives, 1 for negatives.
pub fn class_weights(y: &[u8], w_pos: f64) -> Vec<f64> {
    y.iter().map(|&v| if v == 1 { w_pos } else { 1.0 }).collect()
}

/// L(w, b) = (1/n) Σ s_i [log(1 + e^{z_i}) − y_i z_i] + (λ/2)‖w‖², z = w·x + b.
///
/// Returns (loss, ∂L/∂w, ∂L/∂b). The bias is not penalized.
pub fn logistic_loss_and_gradient(
    x: &Matrix,
    y: &[u8],
    sample_weight: &[f64],
    model: &LinearModel,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.n_rows() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; x.n_cols()];
    let mut gb = 0.0;
    for (i, row) in x.rows().enumerate() {
        let z = model.decision(row);
        let t = y[i] as f64;
        let s = sample_weight[i];
        loss += s * (softplus(z) - t * z);
        let r = s * (sigmoid(z) - t);
        for (g, v) in gw.iter_mut().zip(row) {
            *g += r * v;
        }
        gb += r;
    }
    let penalty: f64 = model.weights.iter().map(|w| w * w).sum();
    for (g, w) in gw.iter_mut().zip(&model.weights) {
        *g = *g / n + l2 * w;
    }
    (loss / n + 0.5 * l2 * penalty, gw, gb / n)
}

/// Full-batch gradient descent with the ridge term applied proximally
/// (w ← (w − lr·∇data) / (1 + lr·λ)), which stays stable for any λ.
/// Returns the model and the loss before each epoch plus the final loss.
pub fn fit_logistic(
    x: &Matrix,
    y: &[u8],
    learning_rate: f64,
    epochs: usize,
    l2: f64,
    w_pos: f64,
) -> (LinearModel, Vec<f64>) {
    let sw = class_weights(y, w_pos);
    let mut m = LinearModel::zeros(x.n_cols());
    let mut history = Vec::with_capacity(epochs + 1);
    for _ in 0..epochs {
        let (loss, gw, gb) = logistic_loss_and_gradient(x, y, &sw, &m, l2);
        history.push(loss);
        let shrink = 1.0 + learning_rate * l2;
        for (w, g) in m.weights.iter_mut().zip(&gw) {
            let data_grad = g - l2 * *w;
            *w = (*w - learning_rate * data_grad) / shrink;
        }
        m.bias -= learning_rate * gb;
    }
    history.push(logistic_loss_and_gradient(x, y, &sw, &m, l2).0);
    (m, history)
}

/// Hinge loss + (λ/2)‖w‖² by stochastic subgradient descent with step
/// η_t = lr / (1 + lr·λ·t); rows are visited in a fresh seeded order each epoch.
pub fn fit_linear_svm(
    x: &Matrix,
    y: &[u8],
    learning_rate: f64,
    epochs: usize,
    l2: f64,
    w_pos: f64,
    seed: u64,
) -> LinearModel {
    let mut rng = rng_from(seed);
    let mut m = LinearModel::zeros(x.n_cols());
    let mut order: Vec<usize> = (0..x.n_rows()).collect();
    let mut t = 0.0;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1.0;
            let eta = learning_rate / (1.0 + learning_rate * l2 * t);
            let row = x.row(i);
            let sign = if y[i] == 1 { 1.0 } else { -1.0 };
            let margin = sign * m.decision(row);
            let shrink = 1.0 - eta * l2;
            for w in m.weights.iter_mut() {
                *w *= shrink;
            }
            if margin < 1.0 {
                let c = if y[i] == 1 { w_pos } else { 1.0 };
                for (w, v) in m.weights.iter_mut().zip(row) {
                    *w += eta * c * sign * v;
                }
                m.bias += eta * c * sign;
            }
        }
    }
    m
}
