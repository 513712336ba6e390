//! Seeded random search over the per-network hyperparameters.
//!
//! ```text
//! alpha = 0.00006 0.3      # sampled log-uniformly
//! dropout = 0 0.5
//! embed = 1 100
//! hidden = 1 500
//! forget_gate = on off     # values to choose from
//! memory_to_gates = on off
//! epochs = 5               # training budget per trial
//! networks = id-verb cls-verb
//! ```

use rand::Rng;

use crate::config::{NetworkConfig, NetworkKind, SystemConfig};
use crate::conll::Sentence;
use crate::deptree::DepTree;
use crate::error::{Error, Result};
use crate::srl::{component_rng, train_network};

#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    pub alpha: (f64, f64),
    pub dropout: (f64, f64),
    pub embed: (usize, usize),
    pub hidden: (usize, usize),
    pub forget_gate: Vec<bool>,
    pub memory_to_gates: Vec<bool>,
    pub epochs: usize,
    pub networks: Vec<NetworkKind>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            alpha: (0.00006, 0.3),
            dropout: (0.0, 0.5),
            embed: (1, 100),
            hidden: (1, 500),
            forget_gate: vec![true, false],
            memory_to_gates: vec![true, false],
            epochs: 5,
            networks: NetworkKind::ALL.to_vec(),
        }
    }
}

fn pair<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<(T, T)> {
    let bad = || {
        Error::Config(format!(
            "line {line}: {key} needs two numbers, got {value:?}"
        ))
    };
    let mut parts = value.split_whitespace();
    let lo = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
    let hi = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn bools(line: usize, key: &str, value: &str) -> Result<Vec<bool>> {
    let mut out = Vec::new();
    for v in value.split_whitespace() {
        let b = match v {
            "true" | "yes" | "on" => true,
            "false" | "no" | "off" => false,
            _ => {
                return Err(Error::Config(format!(
                    "line {line}: invalid boolean {v:?} for {key}"
                )))
            }
        };
        if !out.contains(&b) {
            out.push(b);
        }
    }
    Ok(out)
}

impl SearchSpace {
    /// Parse a space file; keys not given keep their default ranges.
    pub fn parse(text: &str) -> Result<Self> {
        let mut space = SearchSpace::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {line}: expected key = value")))?;
            match key {
                "alpha" => space.alpha = pair(line, key, value)?,
                "dropout" => space.dropout = pair(line, key, value)?,
                "embed" => space.embed = pair(line, key, value)?,
                "hidden" => space.hidden = pair(line, key, value)?,
                "forget_gate" => space.forget_gate = bools(line, key, value)?,
                "memory_to_gates" => space.memory_to_gates = bools(line, key, value)?,
                "epochs" => {
                    space.epochs = value.parse().map_err(|_| {
                        Error::Config(format!("line {line}: invalid epochs {value:?}"))
                    })?
                }
                "networks" => {
                    space.networks = value
                        .split_whitespace()
                        .map(|n| {
                            NetworkKind::parse(n).ok_or_else(|| {
                                Error::Config(format!("line {line}: unknown network {n:?}"))
                            })
                        })
                        .collect::<Result<_>>()?
                }
                _ => return Err(Error::Config(format!("line {line}: unknown key {key:?}"))),
            }
        }
        space.validate()?;
        Ok(space)
    }

    /// Fails when any dimension admits no value.
    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::Config(format!("empty search space: {what}")));
        if !(self.alpha.0 > 0.0 && self.alpha.0 <= self.alpha.1 && self.alpha.1.is_finite()) {
            return empty("alpha needs 0 < low <= high");
        }
        if !(0.0 <= self.dropout.0 && self.dropout.0 <= self.dropout.1 && self.dropout.1 < 1.0) {
            return empty("dropout needs 0 <= low <= high < 1");
        }
        if self.embed.0 == 0 || self.embed.0 > self.embed.1 {
            return empty("embed needs 1 <= low <= high");
        }
        if self.hidden.0 == 0 || self.hidden.0 > self.hidden.1 {
            return empty("hidden needs 1 <= low <= high");
        }
        if self.forget_gate.is_empty() || self.memory_to_gates.is_empty() {
            return empty("no gate setting to choose from");
        }
        if self.epochs == 0 {
            return empty("epochs must be positive");
        }
        if self.networks.is_empty() {
            return empty("no networks");
        }
        Ok(())
    }

    /// One configuration drawn from the space.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> NetworkConfig {
        let (lo, hi) = (self.alpha.0.ln(), self.alpha.1.ln());
        let alpha = if lo == hi {
            self.alpha.0
        } else {
            rng.gen_range(lo..=hi).exp()
        };
        NetworkConfig {
            use_forget_gate: self.forget_gate[rng.gen_range(0..self.forget_gate.len())],
            memory_to_gates: self.memory_to_gates[rng.gen_range(0..self.memory_to_gates.len())],
            embed_dim: rng.gen_range(self.embed.0..=self.embed.1),
            hidden_dim: rng.gen_range(self.hidden.0..=self.hidden.1),
            alpha: alpha.clamp(self.alpha.0, self.alpha.1),
            dropout: rng.gen_range(self.dropout.0..=self.dropout.1),
            epochs: self.epochs,
        }
    }
}

/// Trials of one network, best dev score first.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub kind: NetworkKind,
    /// (trial number, configuration, dev score); ties keep trial order.
    pub trials: Vec<(usize, NetworkConfig, f64)>,
}

impl SearchResult {
    pub fn best(&self) -> &NetworkConfig {
        &self.trials[0].1
    }
}

/// Dev score of one trial: the best epoch's network-level dev score.
fn run_trial(
    kind: NetworkKind,
    candidate: &NetworkConfig,
    base: &SystemConfig,
    train: (&[Sentence], &[DepTree]),
    dev: (&[Sentence], &[DepTree]),
) -> Result<f64> {
    let mut config = base.clone();
    *config.network_mut(kind) = *candidate;
    match train_network(kind, train.0, train.1, Some(dev), &config) {
        Ok((_, log)) => Ok(log
            .last()
            .and_then(|l| l.split("best_dev_f1=").nth(1))
            .and_then(|v| v.parse().ok())
            .unwrap_or(0.0)),
        // a diverging sample is a bad configuration, not a failed search
        Err(Error::Model(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Sample `iterations` configurations per network from a seeded stream and
/// rank them by dev score. Samples are drawn before any training, so the
/// result does not depend on `jobs`.
pub fn random_search(
    train: &[Sentence],
    dev: &[Sentence],
    base: &SystemConfig,
    space: &SearchSpace,
    iterations: usize,
    jobs: usize,
) -> Result<Vec<SearchResult>> {
    space.validate()?;
    if iterations == 0 {
        return Err(Error::Config("empty search space: zero iterations".into()));
    }
    if dev.is_empty() {
        return Err(Error::Config("search needs a non-empty dev corpus".into()));
    }
    let train_trees: Vec<DepTree> = train.iter().map(DepTree::from_sentence).collect();
    let dev_trees: Vec<DepTree> = dev.iter().map(DepTree::from_sentence).collect();
    let mut rng = component_rng(base.seed, 20);
    let mut tasks = Vec::new();
    for &kind in &space.networks {
        for t in 0..iterations {
            tasks.push((kind, t, space.sample(&mut rng)));
        }
    }

    let run = |task: &(NetworkKind, usize, NetworkConfig)| {
        run_trial(
            task.0,
            &task.2,
            base,
            (train, &train_trees),
            (dev, &dev_trees),
        )
    };
    let jobs = jobs.max(1).min(tasks.len());
    let scores: Vec<f64> = if jobs == 1 {
        tasks.iter().map(run).collect::<Result<_>>()?
    } else {
        let chunk = tasks.len().div_ceil(jobs);
        let parts: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = tasks
                .chunks(chunk)
                .map(|part| scope.spawn(move || part.iter().map(run).collect::<Result<Vec<_>>>()))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("search thread panicked"))
                .collect()
        });
        let mut all = Vec::with_capacity(tasks.len());
        for p in parts {
            all.extend(p?);
        }
        all
    };

    let mut results: Vec<SearchResult> = Vec::new();
    for ((kind, t, cfg), score) in tasks.into_iter().zip(scores) {
        match results.iter_mut().find(|r| r.kind == kind) {
            Some(r) => r.trials.push((t, cfg, score)),
            None => results.push(SearchResult {
                kind,
                trials: vec![(t, cfg, score)],
            }),
        }
    }
    for r in &mut results {
        r.trials.sort_by(|a, b| b.2.total_cmp(&a.2));
    }
    Ok(results)
}

/// `base` with every searched network replaced by its best trial.
pub fn best_config(base: &SystemConfig, results: &[SearchResult]) -> SystemConfig {
    let mut config = base.clone();
    for r in results {
        *config.network_mut(r.kind) = *r.best();
    }
    config
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::synth::generate;

    proptest! {
        #[test]
        fn samples_stay_in_range(seed in 0u64..1000) {
            let space = SearchSpace::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let c = space.sample(&mut rng);
                prop_assert!((0.00006..=0.3).contains(&c.alpha));
                prop_assert!((0.0..=0.5).contains(&c.dropout));
                prop_assert!((1..=100).contains(&c.embed_dim));
                prop_assert!((1..=500).contains(&c.hidden_dim));
                prop_assert!(c.validate().is_ok());
            }
        }
    }

    #[test]
    fn parses_space_files() {
        let s = SearchSpace::parse("alpha = 0.001 0.01\nforget_gate = off\nnetworks = cls-noun\n")
            .unwrap();
        assert_eq!(s.alpha, (0.001, 0.01));
        assert_eq!(s.forget_gate, vec![false]);
        assert_eq!(s.networks, vec![NetworkKind::ClsNoun]);
        assert_eq!(s.hidden, (1, 500));
    }

    #[test]
    fn empty_spaces_are_rejected() {
        for text in [
            "alpha = 0.1 0.01",
            "alpha = 0 0.1",
            "embed = 10 5",
            "forget_gate =",
            "networks =",
            "dropout = 0.2 1.0",
            "epochs = 0",
        ] {
            assert!(
                matches!(SearchSpace::parse(text), Err(Error::Config(_))),
                "{text} accepted"
            );
        }
        assert!(SearchSpace::parse("size = 3").is_err());
    }

    #[test]
    fn one_iteration_returns_that_config() {
        let corpus = generate(3, 30);
        let (train, dev) = corpus.split_at(20);
        let space = SearchSpace::parse("epochs = 1\nnetworks = cls-verb\nhidden = 1 20").unwrap();
        let base = SystemConfig::default();
        let results = random_search(train, dev, &base, &space, 1, 1).unwrap();
        let mut rng = component_rng(base.seed, 20);
        assert_eq!(results.len(), 1);
        assert_eq!(results[0].trials.len(), 1);
        assert_eq!(results[0].best(), &space.sample(&mut rng));
        let cfg = best_config(&base, &results);
        assert_eq!(cfg.network(NetworkKind::ClsVerb), results[0].best());
    }

    #[test]
    fn seeded_search_is_reproducible() {
        let corpus = generate(4, 30);
        let (train, dev) = corpus.split_at(20);
        let space = SearchSpace::parse(
            "epochs = 1\nnetworks = id-noun cls-verb\nhidden = 1 20\nembed = 1 10",
        )
        .unwrap();
        let base = SystemConfig::default();
        let a = random_search(train, dev, &base, &space, 3, 1).unwrap();
        let b = random_search(train, dev, &base, &space, 3, 3).unwrap();
        assert_eq!(a, b);
        assert!(a
            .iter()
            .all(|r| r.trials.windows(2).all(|w| w[0].2 >= w[1].2)));
        assert!(random_search(train, dev, &base, &space, 0, 1).is_err());
    }
}
