//! Multinomial logistic regression over sparse real-valued features,
//! trained by per-example SGD.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model_io::ModelFile;
use crate::neural::{softmax, Mat};

/// Sparse feature vector: (index, value) pairs.
pub type SparseVec = Vec<(u32, f64)>;

/// Binary indicator features as a sparse vector.
pub fn indicators(indices: &[u32]) -> SparseVec {
    indices.iter().map(|&i| (i, 1.0)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogReg {
    /// `classes × dim`
    pub weights: Mat,
    pub bias: Mat,
}

/// SGD settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRegConfig {
    pub alpha: f64,
    pub epochs: usize,
    /// L2 penalty applied to the touched weights at each step.
    pub l2: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            alpha: 0.1,
            epochs: 10,
            l2: 0.0,
        }
    }
}

impl LogReg {
    pub fn zeros(dim: usize, classes: usize) -> Self {
        LogReg {
            weights: Mat::zeros(classes, dim),
            bias: Mat::zeros(1, classes),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn classes(&self) -> usize {
        self.weights.rows()
    }

    pub fn logits(&self, x: &[(u32, f64)]) -> Vec<f64> {
        (0..self.classes())
            .map(|c| {
                let row = self.weights.row(c);
                self.bias.get(0, c)
                    + x.iter()
                        .filter(|(i, _)| (*i as usize) < row.len())
                        .map(|&(i, v)| row[i as usize] * v)
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn probs(&self, x: &[(u32, f64)]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    /// Most probable class; ties go to the lower index.
    pub fn predict(&self, x: &[(u32, f64)]) -> usize {
        argmax(&self.probs(x))
    }

    fn step(&mut self, x: &[(u32, f64)], gold: usize, config: &LogRegConfig) -> f64 {
        let p = self.probs(x);
        let loss = -p[gold].max(f64::MIN_POSITIVE).ln();
        let cols = self.weights.cols();
        for (c, &pc) in p.iter().enumerate() {
            let g = pc - if c == gold { 1.0 } else { 0.0 };
            let row = self.weights.row_mut(c);
            for &(i, v) in x {
                let i = i as usize;
                if i < cols {
                    row[i] -= config.alpha * (g * v + config.l2 * row[i]);
                }
            }
            self.bias.data_mut()[c] -= config.alpha * g;
        }
        loss
    }

    /// Train from zero weights; returns the model and per-epoch mean loss.
    pub fn train<R: Rng>(
        data: &[(SparseVec, usize)],
        dim: usize,
        classes: usize,
        config: &LogRegConfig,
        rng: &mut R,
    ) -> Result<(Self, Vec<f64>)> {
        if classes < 2 {
            return Err(Error::Config(
                "logistic regression needs two classes".into(),
            ));
        }
        let mut model = LogReg::zeros(dim, classes);
        let mut losses = Vec::with_capacity(config.epochs);
        let mut order: Vec<usize> = (0..data.len()).collect();
        for _ in 0..config.epochs {
            order.shuffle(rng);
            let mut total = 0.0;
            for &i in &order {
                let (x, y) = &data[i];
                total += model.step(x, *y, config);
            }
            losses.push(if data.is_empty() {
                0.0
            } else {
                total / data.len() as f64
            });
        }
        Ok((model, losses))
    }

    pub fn write_into(&self, file: &mut ModelFile, prefix: &str) {
        file.push_array(&format!("{prefix}.weights"), &self.weights);
        file.push_array(&format!("{prefix}.bias"), &self.bias);
    }

    pub fn read_from(file: &ModelFile, prefix: &str) -> Result<Self> {
        let weights = file.array(&format!("{prefix}.weights"))?.clone();
        let bias = file.array(&format!("{prefix}.bias"))?.clone();
        if bias.shape() != (1, weights.rows()) {
            return Err(Error::Model(format!(
                "{prefix}: bias shape does not match weights"
            )));
        }
        Ok(LogReg { weights, bias })
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn learns_indicator_rule() {
        let data: Vec<(SparseVec, usize)> = (0..40)
            .map(|i| {
                let y = i % 3;
                (indicators(&[y as u32, 3 + (i % 4) as u32]), y)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (model, losses) =
            LogReg::train(&data, 7, 3, &LogRegConfig::default(), &mut rng).unwrap();
        assert!(losses.last().unwrap() < &losses[0]);
        for (x, y) in &data {
            assert_eq!(model.predict(x), *y);
        }
    }

    #[test]
    fn zero_model_is_uniform_and_ignores_unknown_indices() {
        let m = LogReg::zeros(3, 2);
        assert_eq!(m.probs(&[(0, 1.0), (99, 5.0)]), vec![0.5, 0.5]);
        assert_eq!(m.predict(&[]), 0);
    }
}
