//! System configuration and its line-oriented file format.
//!
//! ```text
//! # comment
//! seed = 1
//! rerank_n = 4
//!
//! [cls-verb]
//! forget_gate = true
//! embed = 5
//! ```
//!
//! Global keys come before the first section; each section configures one
//! of the four argument networks. Unknown keys are errors.

use std::fmt::Write as _;

use crate::deptree::WordPolicy;
use crate::error::{Error, Result};
use crate::logreg::LogRegConfig;
use crate::neural::{Ablation, TrainConfig};

/// Verbal or nominal predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Verb,
    Noun,
}

impl Category {
    /// Routing by predicted POS tag: tags starting with `N` are nominal,
    /// everything else goes to the verbal models.
    pub fn of_pos(ppos: &str) -> Self {
        if ppos.starts_with('N') {
            Category::Noun
        } else {
            Category::Verb
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Verb => "verb",
            Category::Noun => "noun",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Task {
    Identification,
    Classification,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Identification => "identification",
            Task::Classification => "classification",
        }
    }
}

/// One of the four argument networks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NetworkKind {
    IdVerb,
    IdNoun,
    ClsVerb,
    ClsNoun,
}

impl NetworkKind {
    pub const ALL: [NetworkKind; 4] = [
        NetworkKind::IdVerb,
        NetworkKind::IdNoun,
        NetworkKind::ClsVerb,
        NetworkKind::ClsNoun,
    ];

    pub fn new(task: Task, category: Category) -> Self {
        match (task, category) {
            (Task::Identification, Category::Verb) => NetworkKind::IdVerb,
            (Task::Identification, Category::Noun) => NetworkKind::IdNoun,
            (Task::Classification, Category::Verb) => NetworkKind::ClsVerb,
            (Task::Classification, Category::Noun) => NetworkKind::ClsNoun,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn task(self) -> Task {
        match self {
            NetworkKind::IdVerb | NetworkKind::IdNoun => Task::Identification,
            NetworkKind::ClsVerb | NetworkKind::ClsNoun => Task::Classification,
        }
    }

    pub fn category(self) -> Category {
        match self {
            NetworkKind::IdVerb | NetworkKind::ClsVerb => Category::Verb,
            NetworkKind::IdNoun | NetworkKind::ClsNoun => Category::Noun,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NetworkKind::IdVerb => "id-verb",
            NetworkKind::IdNoun => "id-noun",
            NetworkKind::ClsVerb => "cls-verb",
            NetworkKind::ClsNoun => "cls-noun",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Architecture and optimization settings of one argument network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetworkConfig {
    pub use_forget_gate: bool,
    pub memory_to_gates: bool,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub alpha: f64,
    pub dropout: f64,
    pub epochs: usize,
}

impl NetworkConfig {
    /// Tuned settings per network.
    pub fn default_for(kind: NetworkKind) -> Self {
        let (forget, m2g, e, h, alpha, dropout, epochs) = match kind {
            NetworkKind::IdVerb => (false, true, 25, 90, 0.0006, 0.42, 20),
            NetworkKind::IdNoun => (false, true, 16, 125, 0.0009, 0.25, 20),
            NetworkKind::ClsVerb => (true, false, 5, 300, 0.0155, 0.50, 20),
            NetworkKind::ClsNoun => (false, false, 88, 500, 0.0055, 0.46, 20),
        };
        NetworkConfig {
            use_forget_gate: forget,
            memory_to_gates: m2g,
            embed_dim: e,
            hidden_dim: h,
            alpha,
            dropout,
            epochs,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            alpha: self.alpha,
            dropout: self.dropout,
            epochs: self.epochs,
            seed,
        }
    }

    /// Hard errors plus soft warnings, as for [`TrainConfig::validate`].
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        let mut warnings = self.train_config(0).validate()?;
        if self.embed_dim > 100 {
            warnings.push(format!(
                "embedding size {} outside [1, 100]",
                self.embed_dim
            ));
        }
        if self.hidden_dim > 500 {
            warnings.push(format!("hidden size {} outside [1, 500]", self.hidden_dim));
        }
        Ok(warnings)
    }
}

/// Everything needed to train a system.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub seed: u64,
    /// Indexed by [`NetworkKind::index`].
    pub networks: [NetworkConfig; 4],
    pub ablation: Ablation,
    pub word_policy: WordPolicy,
    /// Path words seen fewer times than this map to the unknown-word item.
    pub word_cutoff: usize,
    /// Minimum identification probability for an argument.
    pub threshold: f64,
    /// Beam size of the reranker.
    pub rerank_n: usize,
    pub predicate: LogRegConfig,
    pub reranker: LogRegConfig,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            seed: 1,
            networks: NetworkKind::ALL.map(NetworkConfig::default_for),
            ablation: Ablation::default(),
            word_policy: WordPolicy::Lemma,
            word_cutoff: 2,
            threshold: 0.5,
            rerank_n: 4,
            predicate: LogRegConfig {
                alpha: 0.1,
                epochs: 10,
                l2: 0.0,
            },
            reranker: LogRegConfig {
                alpha: 0.01,
                epochs: 10,
                l2: 0.0,
            },
        }
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("line {line}: invalid value {value:?} for {key}")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "+" => Ok(true),
        "false" | "no" | "off" | "-" => Ok(false),
        _ => Err(Error::Config(format!(
            "line {line}: invalid boolean {value:?} for {key}"
        ))),
    }
}

impl SystemConfig {
    pub fn network(&self, kind: NetworkKind) -> &NetworkConfig {
        &self.networks[kind.index()]
    }

    pub fn network_mut(&mut self, kind: NetworkKind) -> &mut NetworkConfig {
        &mut self.networks[kind.index()]
    }

    /// Apply the settings in `text` on top of `self`.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        let mut section: Option<NetworkKind> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = Some(NetworkKind::parse(name.trim()).ok_or_else(|| {
                    Error::Config(format!("line {line}: unknown section [{name}]"))
                })?);
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {line}: expected key = value")))?;
            match section {
                Some(kind) => self.apply_network_key(kind, line, key, value)?,
                None => self.apply_global_key(line, key, value)?,
            }
        }
        Ok(())
    }

    pub fn from_str_with_defaults(text: &str) -> Result<Self> {
        let mut c = SystemConfig::default();
        c.apply_str(text)?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_with_defaults(&text)
    }

    fn apply_global_key(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_value(line, key, value)?,
            "ablation" => {
                self.ablation = Ablation::parse(value).ok_or_else(|| {
                    Error::Config(format!("line {line}: unknown ablation {value:?}"))
                })?
            }
            "word_policy" => {
                self.word_policy = WordPolicy::parse(value).ok_or_else(|| {
                    Error::Config(format!("line {line}: unknown word policy {value:?}"))
                })?
            }
            "word_cutoff" => self.word_cutoff = parse_value(line, key, value)?,
            "threshold" => self.threshold = parse_value(line, key, value)?,
            "rerank_n" => self.rerank_n = parse_value(line, key, value)?,
            "predicate_alpha" => self.predicate.alpha = parse_value(line, key, value)?,
            "predicate_epochs" => self.predicate.epochs = parse_value(line, key, value)?,
            "reranker_alpha" => self.reranker.alpha = parse_value(line, key, value)?,
            "reranker_epochs" => self.reranker.epochs = parse_value(line, key, value)?,
            // applies to all four networks
            "epochs" => {
                let epochs = parse_value(line, key, value)?;
                self.networks.iter_mut().for_each(|n| n.epochs = epochs);
            }
            _ => return Err(Error::Config(format!("line {line}: unknown key {key:?}"))),
        }
        Ok(())
    }

    fn apply_network_key(
        &mut self,
        kind: NetworkKind,
        line: usize,
        key: &str,
        value: &str,
    ) -> Result<()> {
        let n = self.network_mut(kind);
        match key {
            "forget_gate" => n.use_forget_gate = parse_bool(line, key, value)?,
            "memory_to_gates" => n.memory_to_gates = parse_bool(line, key, value)?,
            "embed" => n.embed_dim = parse_value(line, key, value)?,
            "hidden" => n.hidden_dim = parse_value(line, key, value)?,
            "alpha" => n.alpha = parse_value(line, key, value)?,
            "dropout" => n.dropout = parse_value(line, key, value)?,
            "epochs" => n.epochs = parse_value(line, key, value)?,
            _ => {
                return Err(Error::Config(format!(
                    "line {line}: unknown key {key:?} in [{}]",
                    kind.name()
                )))
            }
        }
        Ok(())
    }

    /// Validate all values; returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        for kind in NetworkKind::ALL {
            for w in self.network(kind).validate()? {
                warnings.push(format!("[{}] {}", kind.name(), w));
            }
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold {} must be in [0, 1]",
                self.threshold
            )));
        }
        if self.rerank_n == 0 {
            return Err(Error::Config("rerank_n must be at least 1".into()));
        }
        for (name, lr) in [("predicate", &self.predicate), ("reranker", &self.reranker)] {
            if lr.alpha.is_nan() || lr.alpha <= 0.0 {
                return Err(Error::Config(format!("{name}_alpha must be positive")));
            }
        }
        Ok(warnings)
    }

    /// Render in the file format; parsing the result gives back `self`.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "ablation = {}", self.ablation.name());
        let _ = writeln!(s, "word_policy = {}", self.word_policy.name());
        let _ = writeln!(s, "word_cutoff = {}", self.word_cutoff);
        let _ = writeln!(s, "threshold = {}", self.threshold);
        let _ = writeln!(s, "rerank_n = {}", self.rerank_n);
        let _ = writeln!(s, "predicate_alpha = {}", self.predicate.alpha);
        let _ = writeln!(s, "predicate_epochs = {}", self.predicate.epochs);
        let _ = writeln!(s, "reranker_alpha = {}", self.reranker.alpha);
        let _ = writeln!(s, "reranker_epochs = {}", self.reranker.epochs);
        for kind in NetworkKind::ALL {
            let n = self.network(kind);
            let _ = writeln!(s, "\n[{}]", kind.name());
            let _ = writeln!(s, "forget_gate = {}", n.use_forget_gate);
            let _ = writeln!(s, "memory_to_gates = {}", n.memory_to_gates);
            let _ = writeln!(s, "embed = {}", n.embed_dim);
            let _ = writeln!(s, "hidden = {}", n.hidden_dim);
            let _ = writeln!(s, "alpha = {}", n.alpha);
            let _ = writeln!(s, "dropout = {}", n.dropout);
            let _ = writeln!(s, "epochs = {}", n.epochs);
        }
        s
    }
}
