//! Binary logistic regression by full-batch gradient descent.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LogisticParams {
    pub learning_rate: f64,
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn zeros(dim: usize) -> Self {
        LogisticModel {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.logit(row))
    }

    fn logit(&self, row: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(row).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Mean cross-entropy plus `l2 / 2 * |w|^2` (bias unpenalised), and its
    /// gradient as (d/dw, d/db).
    pub fn loss_and_gradient(&self, x: &[Vec<f64>], y: &[f64], l2: f64) -> (f64, Vec<f64>, f64) {
        let n = x.len().max(1) as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; self.weights.len()];
        let mut grad_b = 0.0;
        for (row, &t) in x.iter().zip(y) {
            let z = self.logit(row);
            // log(1 + e^z) - t z, evaluated stably
            loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z;
            let err = sigmoid(z) - t;
            for (g, v) in grad.iter_mut().zip(row) {
                *g += err * v;
            }
            grad_b += err;
        }
        loss /= n;
        grad_b /= n;
        let mut penalty = 0.0;
        for (g, w) in grad.iter_mut().zip(&self.weights) {
            *g = *g / n + l2 * w;
            penalty += w * w;
        }
        (loss + 0.5 * l2 * penalty, grad, grad_b)
    }

    pub(crate) fn fit(x: &[Vec<f64>], y: &[f64], params: &LogisticParams) -> LogisticModel {
        let dim = x.first().map_or(0, Vec::len);
        let mut m = LogisticModel::zeros(dim);
        for _ in 0..params.max_iter {
            let (_, grad, grad_b) = m.loss_and_gradient(x, y, params.l2);
            let norm = (grad.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
            if norm < params.tol {
                break;
            }
            for (w, g) in m.weights.iter_mut().zip(&grad) {
                *w -= params.learning_rate * g;
            }
            m.bias -= params.learning_rate * grad_b;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_model_loss_is_ln2() {
        let m = LogisticModel::zeros(2);
        let (loss, _, _) = m.loss_and_gradient(&[vec![1.0, 2.0], vec![0.0, 1.0]], &[1.0, 0.0], 0.5);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn separable_data_is_learned() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 19.0]).collect();
        let y: Vec<f64> = (0..20).map(|i| if i >= 10 { 1.0 } else { 0.0 }).collect();
        let p = LogisticParams {
            learning_rate: 1.0,
            l2: 0.0,
            max_iter: 5000,
            tol: 1e-9,
        };
        let m = LogisticModel::fit(&x, &y, &p);
        assert!(m.predict(&[0.0]) < 0.2);
        assert!(m.predict(&[1.0]) > 0.8);
    }
}
