//! Gaussian naive Bayes for two classes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

impl NaiveBayesModel {
    /// `y` must hold both classes. Variances get `var_smoothing` times the
    /// largest per-feature variance added, as in common implementations.
    pub(crate) fn fit(x: &[Vec<f64>], y: &[bool], var_smoothing: f64) -> NaiveBayesModel {
        let dim = x.first().map_or(0, Vec::len);
        let mut counts = [0usize; 2];
        let mut means = [vec![0.0; dim], vec![0.0; dim]];
        for (row, &c) in x.iter().zip(y) {
            let c = c as usize;
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(row) {
                *m += v;
            }
        }
        for c in 0..2 {
            for m in &mut means[c] {
                *m /= counts[c].max(1) as f64;
            }
        }
        let mut variances = [vec![0.0; dim], vec![0.0; dim]];
        for (row, &c) in x.iter().zip(y) {
            let c = c as usize;
            for ((s, v), m) in variances[c].iter_mut().zip(row).zip(&means[c]) {
                *s += (v - m).powi(2);
            }
        }
        for c in 0..2 {
            for s in &mut variances[c] {
                *s /= counts[c].max(1) as f64;
            }
        }
        let n = x.len() as f64;
        let overall_max = (0..dim)
            .map(|j| {
                let mean = x.iter().map(|r| r[j]).sum::<f64>() / n;
                x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n
            })
            .fold(0.0, f64::max);
        let eps = (var_smoothing * overall_max).max(1e-12);
        for c in 0..2 {
            for s in &mut variances[c] {
                *s += eps;
            }
        }
        NaiveBayesModel {
            priors: [counts[0] as f64 / n, counts[1] as f64 / n],
            means,
            variances,
        }
    }

    /// P(class 1 | row).
    pub fn predict(&self, row: &[f64]) -> f64 {
        let joint = |c: usize| {
            self.priors[c].ln()
                + row
                    .iter()
                    .zip(&self.means[c])
                    .zip(&self.variances[c])
                    .map(|((v, m), s)| -0.5 * (2.0 * std::f64::consts::PI * s).ln() - (v - m).powi(2) / (2.0 * s))
                    .sum::<f64>()
        };
        let (a, b) = (joint(0), joint(1));
        // softmax over the two log joints
        1.0 / (1.0 + (a - b).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_clusters() {
        let x = vec![vec![0.0], vec![0.1], vec![0.9], vec![1.0]];
        let y = [false, false, true, true];
        let m = NaiveBayesModel::fit(&x, &y, 1e-9);
        assert_eq!(m.priors, [0.5, 0.5]);
        assert!(m.predict(&[0.05]) < 0.01);
        assert!(m.predict(&[0.95]) > 0.99);
        assert!((m.predict(&[0.5]) - 0.5).abs() < 1e-9);
    }
}
