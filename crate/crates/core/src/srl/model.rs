use rand::Rng;

use crate::config::{Category, NetworkConfig, NetworkKind, Task};
use crate::conll::Sentence;
use crate::deptree::{extract_path_sequence, DepTree, WordPolicy};
use crate::error::{Error, Result};
use crate::features::{encode_path_items_frozen, feature_strings, FeatureDict};
use crate::model_io::ModelFile;
use crate::neural::{Ablation, DenseHead, LstmParams, LstmSpec, Network, Prediction};

pub const ARG: &str = "ARG";
pub const NONE: &str = "NONE";

/// Label index of `ARG` in identification models.
pub const ARG_INDEX: usize = 0;

/// One trained argument network with its dictionaries.
#[derive(Clone, Debug, PartialEq)]
pub struct SrlModel {
    pub kind: NetworkKind,
    pub network: Network,
    /// Binary feature dictionary (frozen).
    pub features: FeatureDict,
    /// Path item vocabulary (frozen).
    pub path_vocab: FeatureDict,
    pub labels: Vec<String>,
    pub word_policy: WordPolicy,
}

/// Encoded network input for one (predicate, candidate) pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedPair {
    pub path: Vec<usize>,
    pub features: Vec<u32>,
}

impl SrlModel {
    /// Fresh randomly initialized model over fixed dictionaries.
    pub fn new<R: Rng>(
        kind: NetworkKind,
        config: &NetworkConfig,
        features: FeatureDict,
        path_vocab: FeatureDict,
        labels: Vec<String>,
        word_policy: WordPolicy,
        ablation: Ablation,
        rng: &mut R,
    ) -> Result<Self> {
        if kind.task() == Task::Identification && labels != [ARG, NONE] {
            return Err(Error::Config(
                "identification labels must be [ARG, NONE]".into(),
            ));
        }
        let spec = LstmSpec {
            input_dim: path_vocab.len(),
            embed_dim: config.embed_dim,
            use_forget_gate: config.use_forget_gate,
            memory_to_gates: config.memory_to_gates,
        };
        let network = Network::new(
            spec,
            features.len(),
            config.hidden_dim,
            labels.len(),
            ablation,
            rng,
        )?;
        Ok(SrlModel {
            kind,
            network,
            features,
            path_vocab,
            labels,
            word_policy,
        })
    }

    pub fn task(&self) -> Task {
        self.kind.task()
    }

    pub fn category(&self) -> Category {
        self.kind.category()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Path and binary features through the frozen dictionaries.
    pub fn encode(
        &self,
        sentence: &Sentence,
        tree: &DepTree,
        predicate: usize,
        candidate: usize,
    ) -> Result<EncodedPair> {
        let seq = extract_path_sequence(tree, sentence, predicate, candidate, self.word_policy)?;
        let path = encode_path_items_frozen(&seq, &self.path_vocab);
        let strings = feature_strings(sentence, tree, predicate, candidate)?;
        let features = self.features.encode(&strings).indices().to_vec();
        Ok(EncodedPair { path, features })
    }

    pub fn predict_encoded(&self, pair: &EncodedPair) -> Result<Prediction> {
        self.network.predict(&pair.path, &pair.features)
    }

    pub fn predict(
        &self,
        sentence: &Sentence,
        tree: &DepTree,
        predicate: usize,
        candidate: usize,
    ) -> Result<Prediction> {
        self.predict_encoded(&self.encode(sentence, tree, predicate, candidate)?)
    }

    pub fn to_model_file(&self) -> ModelFile {
        let mut f = ModelFile::new("network");
        let spec = &self.network.spec;
        f.push_meta("network", self.kind.name());
        f.push_meta("word_policy", self.word_policy.name());
        f.push_meta("ablation", self.network.ablation.name());
        f.push_meta("forget_gate", spec.use_forget_gate);
        f.push_meta("memory_to_gates", spec.memory_to_gates);
        f.push_meta("embed", spec.embed_dim);
        f.push_meta("hidden", self.network.head.hidden_dim());
        f.push_dict("labels", &self.labels);
        f.push_dict("features", self.features.strings());
        f.push_dict("path_vocab", self.path_vocab.strings());
        for (name, m) in self.network.arrays() {
            f.push_array(name, m);
        }
        f
    }

    pub fn from_model_file(f: &ModelFile) -> Result<Self> {
        if f.kind != "network" {
            return Err(Error::Model(format!(
                "expected a network file, found {:?}",
                f.kind
            )));
        }
        let bad = |what: &str| Error::Model(format!("invalid {what}"));
        let kind = NetworkKind::parse(f.meta("network")?).ok_or_else(|| bad("network kind"))?;
        let word_policy =
            WordPolicy::parse(f.meta("word_policy")?).ok_or_else(|| bad("word policy"))?;
        let ablation = Ablation::parse(f.meta("ablation")?).ok_or_else(|| bad("ablation"))?;
        let labels = f.dict("labels")?.to_vec();
        let features = FeatureDict::from_strings(f.dict("features")?.to_vec());
        let path_vocab = FeatureDict::from_strings(f.dict("path_vocab")?.to_vec());
        let spec = LstmSpec {
            input_dim: path_vocab.len(),
            embed_dim: f.meta_parse("embed")?,
            use_forget_gate: f.meta_bool("forget_gate")?,
            memory_to_gates: f.meta_bool("memory_to_gates")?,
        };
        spec.validate()?;
        let hidden: usize = f.meta_parse("hidden")?;
        let mut network = Network {
            spec,
            lstm: LstmParams::zeros(&spec),
            head: DenseHead::zeros(features.len().max(1), spec.embed_dim, hidden, labels.len()),
            ablation,
        };
        for (name, m) in network.arrays_mut() {
            let stored = f.array(name)?;
            if stored.shape() != m.shape() {
                return Err(Error::Model(format!(
                    "array {name} has shape {:?}, expected {:?}",
                    stored.shape(),
                    m.shape()
                )));
            }
            *m = stored.clone();
        }
        Ok(SrlModel {
            kind,
            network,
            features,
            path_vocab,
            labels,
            word_policy,
        })
    }
}
