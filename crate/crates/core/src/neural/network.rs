use rand::seq::SliceRandom;
use rand::Rng;

use super::head::{head_backward, head_forward, DenseHead, DropoutMask, HeadGrads};
use super::lstm::{lstm_backward, lstm_forward, LstmGrads, LstmParams, LstmSpec};
use super::matrix::Mat;
use crate::error::{Error, Result};

/// Scale of the uniform initialization interval.
pub const INIT_SCALE: f64 = 0.1;

/// Input pathways switched off for ablation runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Ablation {
    /// Treat the path embedding as the zero vector.
    pub no_path_embeddings: bool,
    /// Feed an empty binary feature set.
    pub no_binary_features: bool,
}

impl Ablation {
    pub fn name(&self) -> &'static str {
        match (self.no_path_embeddings, self.no_binary_features) {
            (false, false) => "none",
            (true, false) => "path",
            (false, true) => "binary",
            (true, true) => "path+binary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let (p, b) = match s {
            "none" => (false, false),
            "path" => (true, false),
            "binary" => (false, true),
            "path+binary" => (true, true),
            _ => return None,
        };
        Some(Ablation {
            no_path_embeddings: p,
            no_binary_features: b,
        })
    }
}

/// Optimization settings for one network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub alpha: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    /// Hard errors for unusable values; soft warnings for values outside
    /// the ranges the hyperparameter search covers.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout {} must be in [0, 1)",
                self.dropout
            )));
        }
        let mut warnings = Vec::new();
        if !(0.00006..=0.3).contains(&self.alpha) {
            warnings.push(format!(
                "learning rate {} outside [0.00006, 0.3]",
                self.alpha
            ));
        }
        if self.dropout > 0.5 {
            warnings.push(format!("dropout {} outside [0, 0.5]", self.dropout));
        }
        Ok(warnings)
    }
}

/// A training instance: encoded path, binary features, gold class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub path: Vec<usize>,
    pub features: Vec<u32>,
    pub gold: usize,
}

/// Output of a forward pass through the whole network.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// Path embedding `e_n` (zero under path ablation).
    pub embedding: Vec<f64>,
    /// Hidden layer `h`.
    pub hidden: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Path LSTM plus output head.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub spec: LstmSpec,
    pub lstm: LstmParams,
    pub head: DenseHead,
    pub ablation: Ablation,
}

/// Gradients for every parameter of a [`Network`].
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkGrads {
    pub lstm: Option<LstmGrads>,
    pub head: HeadGrads,
}

impl Network {
    pub fn new<R: Rng>(
        spec: LstmSpec,
        binary_dim: usize,
        hidden_dim: usize,
        classes: usize,
        ablation: Ablation,
        rng: &mut R,
    ) -> Result<Self> {
        spec.validate()?;
        if hidden_dim == 0 || classes < 2 {
            return Err(Error::Config(format!(
                "need a positive hidden size and at least two classes (hidden {hidden_dim}, classes {classes})"
            )));
        }
        let lstm = LstmParams::uniform(&spec, INIT_SCALE, rng);
        let head = DenseHead::uniform(
            binary_dim.max(1),
            spec.embed_dim,
            hidden_dim,
            classes,
            INIT_SCALE,
            rng,
        );
        Ok(Network {
            spec,
            lstm,
            head,
            ablation,
        })
    }

    pub fn classes(&self) -> usize {
        self.head.classes()
    }

    /// All parameter arrays in serialization order.
    pub fn arrays(&self) -> Vec<(&'static str, &Mat)> {
        let mut out = self.lstm.arrays();
        out.extend(self.head.arrays());
        out
    }

    pub fn arrays_mut(&mut self) -> Vec<(&'static str, &mut Mat)> {
        let mut out = self.lstm.arrays_mut();
        out.extend(self.head.arrays_mut());
        out
    }

    fn binary<'a>(&self, features: &'a [u32]) -> &'a [u32] {
        if self.ablation.no_binary_features {
            &[]
        } else {
            features
        }
    }

    /// Inference forward pass.
    pub fn predict(&self, path: &[usize], features: &[u32]) -> Result<Prediction> {
        let embedding = if self.ablation.no_path_embeddings {
            vec![0.0; self.spec.embed_dim]
        } else {
            lstm_forward(&self.spec, &self.lstm, path)?.0
        };
        let out = head_forward(&self.head, &embedding, self.binary(features), None)?;
        Ok(Prediction {
            embedding,
            hidden: out.hidden,
            probs: out.probs,
        })
    }

    /// Loss `-log s_gold` and its gradients, optionally under a fixed
    /// dropout mask.
    pub fn loss_and_grads(
        &self,
        example: &Example,
        dropout: Option<&DropoutMask>,
    ) -> Result<(f64, NetworkGrads)> {
        let features = self.binary(&example.features);
        let (embedding, cache) = if self.ablation.no_path_embeddings {
            (vec![0.0; self.spec.embed_dim], None)
        } else {
            let (e, c) = lstm_forward(&self.spec, &self.lstm, &example.path)?;
            (e, Some(c))
        };
        let out = head_forward(&self.head, &embedding, features, dropout)?;
        let loss = -out.probs[example.gold].max(f64::MIN_POSITIVE).ln();
        let (head, d_embed) = head_backward(
            &self.head,
            &embedding,
            features,
            &out,
            dropout,
            example.gold,
        )?;
        let lstm = match cache {
            Some(c) => Some(lstm_backward(&self.spec, &self.lstm, &c, &d_embed)?),
            None => None,
        };
        Ok((loss, NetworkGrads { lstm, head }))
    }

    /// Loss only, for finite differences.
    pub fn loss(&self, example: &Example, dropout: Option<&DropoutMask>) -> Result<f64> {
        let features = self.binary(&example.features);
        let embedding = if self.ablation.no_path_embeddings {
            vec![0.0; self.spec.embed_dim]
        } else {
            lstm_forward(&self.spec, &self.lstm, &example.path)?.0
        };
        let out = head_forward(&self.head, &embedding, features, dropout)?;
        Ok(-out.probs[example.gold].max(f64::MIN_POSITIVE).ln())
    }

    /// `θ -= alpha · ∇θ`
    pub fn apply(&mut self, grads: &NetworkGrads, alpha: f64) {
        if let Some(g) = &grads.lstm {
            g.apply(&mut self.lstm, -alpha);
        }
        grads.head.apply(&mut self.head, -alpha);
    }

    /// One SGD step; returns the loss before the update.
    pub fn sgd_step<R: Rng>(
        &mut self,
        example: &Example,
        config: &TrainConfig,
        rng: &mut R,
    ) -> Result<f64> {
        let mask = (config.dropout > 0.0).then(|| {
            DropoutMask::sample(
                self.spec.embed_dim,
                self.head.hidden_dim(),
                config.dropout,
                rng,
            )
        });
        let (loss, grads) = self.loss_and_grads(example, mask.as_ref())?;
        self.apply(&grads, config.alpha);
        Ok(loss)
    }

    /// Dense gradients in the order of [`Network::arrays`]. Arrays that
    /// receive no gradient under the ablation are all-zero.
    pub fn dense_grads(&self, grads: &NetworkGrads) -> Vec<(&'static str, Mat)> {
        let mut out = match &grads.lstm {
            Some(g) => g.dense_arrays(&self.spec),
            None => self
                .lstm
                .arrays()
                .into_iter()
                .map(|(n, m)| (n, Mat::zeros(m.rows(), m.cols())))
                .collect(),
        };
        out.extend(grads.head.dense_arrays(&self.head));
        out
    }

    pub fn is_finite(&self) -> bool {
        self.arrays().iter().all(|(_, m)| m.is_finite())
    }
}

/// One pass of per-example SGD over `examples` in a seeded random order.
/// Returns the mean loss observed before each update.
pub fn train_epoch<R: Rng>(
    network: &mut Network,
    examples: &[Example],
    config: &TrainConfig,
    rng: &mut R,
) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    for i in order {
        total += network.sgd_step(&examples[i], config, rng)?;
    }
    Ok(total / examples.len() as f64)
}

/// Mean loss without dropout.
pub fn mean_loss(network: &Network, examples: &[Example]) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for ex in examples {
        total += network.loss(ex, None)?;
    }
    Ok(total / examples.len() as f64)
}
