use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Category, NetworkKind, SystemConfig, Task};
use crate::conll::Sentence;
use crate::deptree::{extract_path_sequence, DepTree};
use crate::error::{Error, Result};
use crate::features::{encode_path_items_frozen, feature_strings, FeatureDict, PathVocabBuilder};
use crate::neural::{train_epoch, Example, Network};
use crate::rerank::{nbest_structures, CandidateStructure, CategoryReranker, RerankerModel};

use super::bundle::Bundle;
use super::model::{SrlModel, ARG, ARG_INDEX, NONE};
use super::pipeline::score_candidates;
use super::predicates::PredicateClassifier;

/// Random stream of each training component; all derive from the one seed.
const PREDICATE_STREAM: u64 = 10;
const RERANKER_STREAM: u64 = 11;

/// Generator for one training component.
pub fn component_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One supervised (predicate, candidate) pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub sentence: usize,
    pub predicate: usize,
    pub candidate: usize,
    pub label: String,
}

/// Training pairs of one network from gold predicates. Identification
/// pairs every predicate with every reachable token; classification keeps
/// the gold arguments.
pub fn collect_instances(
    corpus: &[Sentence],
    trees: &[DepTree],
    kind: NetworkKind,
) -> Vec<Instance> {
    let mut out = Vec::new();
    for (si, (sentence, tree)) in corpus.iter().zip(trees).enumerate() {
        for (col, pred) in sentence.predicate_ids().into_iter().enumerate() {
            if Category::of_pos(&sentence.token(pred).ppos) != kind.category() {
                continue;
            }
            match kind.task() {
                Task::Identification => {
                    for cand in 1..=sentence.len() {
                        if tree.path(pred, cand).is_err() {
                            continue;
                        }
                        let role = &sentence.token(cand).apreds[col];
                        out.push(Instance {
                            sentence: si,
                            predicate: pred,
                            candidate: cand,
                            label: if role.is_empty() { NONE } else { ARG }.to_owned(),
                        });
                    }
                }
                Task::Classification => {
                    for (arg, role) in sentence.arguments(col) {
                        if tree.path(pred, arg).is_ok() {
                            out.push(Instance {
                                sentence: si,
                                predicate: pred,
                                candidate: arg,
                                label: role.to_owned(),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Label dictionary of a network. Classification networks need two labels,
/// so a category seen with fewer roles is padded with A0 and A1.
fn label_dict(kind: NetworkKind, instances: &[Instance]) -> Vec<String> {
    match kind.task() {
        Task::Identification => vec![ARG.to_owned(), NONE.to_owned()],
        Task::Classification => {
            let mut labels: BTreeSet<String> = instances.iter().map(|i| i.label.clone()).collect();
            for pad in ["A0", "A1"] {
                if labels.len() >= 2 {
                    break;
                }
                labels.insert(pad.to_owned());
            }
            labels.into_iter().collect()
        }
    }
}

/// Dev-set quality of one network: F1 of the ARG class for identification,
/// accuracy for classification. Percent.
pub fn network_dev_score(
    model: &SrlModel,
    corpus: &[Sentence],
    trees: &[DepTree],
    instances: &[Instance],
    threshold: f64,
) -> Result<f64> {
    let (mut correct, mut predicted, mut gold) = (0usize, 0usize, 0usize);
    for inst in instances {
        let p = model.predict(
            &corpus[inst.sentence],
            &trees[inst.sentence],
            inst.predicate,
            inst.candidate,
        )?;
        match model.task() {
            Task::Identification => {
                let is_arg = p.probs[ARG_INDEX] >= threshold;
                let gold_arg = inst.label == ARG;
                predicted += usize::from(is_arg);
                gold += usize::from(gold_arg);
                correct += usize::from(is_arg && gold_arg);
            }
            Task::Classification => {
                let best = crate::logreg::argmax(&p.probs);
                predicted += 1;
                gold += 1;
                correct += usize::from(model.labels[best] == inst.label);
            }
        }
    }
    let p = if predicted == 0 {
        0.0
    } else {
        correct as f64 / predicted as f64
    };
    let r = if gold == 0 {
        0.0
    } else {
        correct as f64 / gold as f64
    };
    Ok(if p + r == 0.0 {
        0.0
    } else {
        200.0 * p * r / (p + r)
    })
}

/// Build dictionaries, train one network, and keep the epoch with the best
/// dev score (the last epoch without dev data). Returns the model and its
/// log lines.
pub fn train_network(
    kind: NetworkKind,
    corpus: &[Sentence],
    trees: &[DepTree],
    dev: Option<(&[Sentence], &[DepTree])>,
    config: &SystemConfig,
) -> Result<(SrlModel, Vec<String>)> {
    let net_config = config.network(kind);
    let mut rng = component_rng(config.seed, kind.index() as u64 + 1);
    let instances = collect_instances(corpus, trees, kind);

    let mut vocab = PathVocabBuilder::new();
    let mut paths = Vec::with_capacity(instances.len());
    let mut dict = FeatureDict::new();
    let mut feats = Vec::with_capacity(instances.len());
    for inst in &instances {
        let (s, t) = (&corpus[inst.sentence], &trees[inst.sentence]);
        let seq = extract_path_sequence(t, s, inst.predicate, inst.candidate, config.word_policy)?;
        vocab.add(&seq);
        paths.push(seq);
        let strings = feature_strings(s, t, inst.predicate, inst.candidate)?;
        feats.push(dict.encode_mut(&strings).indices().to_vec());
    }
    dict.freeze();
    let path_vocab = vocab.build(config.word_cutoff);
    let labels = label_dict(kind, &instances);

    let mut model = SrlModel::new(
        kind,
        net_config,
        dict,
        path_vocab,
        labels,
        config.word_policy,
        config.ablation,
        &mut rng,
    )?;
    let examples: Vec<Example> = instances
        .iter()
        .zip(paths.iter().zip(feats))
        .map(|(inst, (seq, features))| Example {
            path: encode_path_items_frozen(seq, &model.path_vocab),
            features,
            gold: model.label_index(&inst.label).expect("label in dictionary"),
        })
        .collect();

    let dev_instances = dev.map(|(c, t)| collect_instances(c, t, kind));
    let train_cfg = net_config.train_config(config.seed);
    let mut log = Vec::new();
    let mut best: Option<(f64, Network)> = None;
    for epoch in 1..=net_config.epochs {
        let loss = train_epoch(&mut model.network, &examples, &train_cfg, &mut rng)?;
        if !model.network.is_finite() {
            return Err(Error::Model(format!(
                "{} diverged in epoch {epoch}; lower the learning rate",
                kind.name()
            )));
        }
        let mut line = format!("network={} epoch={epoch} loss={loss:.6}", kind.name());
        if let (Some((dc, dt)), Some(di)) = (dev, &dev_instances) {
            let score = network_dev_score(&model, dc, dt, di, config.threshold)?;
            line.push_str(&format!(" dev_f1={score:.2}"));
            if best.as_ref().is_none_or(|(b, _)| score > *b) {
                best = Some((score, model.network.clone()));
            }
        }
        log.push(line);
    }
    if let Some((score, network)) = best {
        model.network = network;
        log.push(format!("network={} best_dev_f1={score:.2}", kind.name()));
    }
    Ok((model, log))
}

/// Labeled F1 of a candidate structure against gold (argument, label index)
/// pairs; 100 when both are empty.
pub fn structure_f1(structure: &CandidateStructure, gold: &[(usize, Option<usize>)]) -> f64 {
    let predicted = structure.arguments.len();
    if predicted == 0 && gold.is_empty() {
        return 100.0;
    }
    let correct = structure
        .arguments
        .iter()
        .filter(|a| gold.iter().any(|&(id, l)| id == a.id && l == Some(a.label)))
        .count();
    200.0 * correct as f64 / (predicted + gold.len()) as f64
}

/// Train the per-category rerankers on n-best lists from the trained
/// networks. The positive structure of each predicate is the one with the
/// highest labeled F1 against gold.
pub fn train_reranker(
    bundle: &Bundle,
    corpus: &[Sentence],
    trees: &[DepTree],
    config: &SystemConfig,
) -> Result<RerankerModel> {
    let n = config.rerank_n;
    let mut groups: [Vec<(Vec<CandidateStructure>, usize)>; 2] = [Vec::new(), Vec::new()];
    for (sentence, tree) in corpus.iter().zip(trees) {
        for (col, pred) in sentence.predicate_ids().into_iter().enumerate() {
            let category = Category::of_pos(&sentence.token(pred).ppos);
            let cls = bundle.model(NetworkKind::new(Task::Classification, category));
            let candidates = score_candidates(bundle, sentence, tree, pred, n, config.threshold)?;
            let list = nbest_structures(pred, &candidates, n, config.threshold);
            let gold: Vec<(usize, Option<usize>)> = sentence
                .arguments(col)
                .into_iter()
                .map(|(id, role)| (id, cls.label_index(role)))
                .collect();
            let mut best = 0;
            let mut best_f1 = f64::NEG_INFINITY;
            for (i, s) in list.iter().enumerate() {
                let f1 = structure_f1(s, &gold);
                if f1 > best_f1 {
                    best = i;
                    best_f1 = f1;
                }
            }
            let slot = match category {
                Category::Verb => 0,
                Category::Noun => 1,
            };
            groups[slot].push((list, best));
        }
    }
    let mut rng = component_rng(config.seed, RERANKER_STREAM);
    let mut model = RerankerModel {
        n,
        ..Default::default()
    };
    for (slot, category) in [(0, Category::Verb), (1, Category::Noun)] {
        if groups[slot].is_empty() {
            continue;
        }
        let cls = bundle.model(NetworkKind::new(Task::Classification, category));
        let r = CategoryReranker::train(
            &groups[slot],
            cls.labels.len(),
            cls.network.spec.embed_dim,
            cls.network.head.hidden_dim(),
            &config.reranker,
            &mut rng,
        )?;
        match category {
            Category::Verb => model.verb = Some(r),
            Category::Noun => model.noun = Some(r),
        }
    }
    Ok(model)
}

/// Train a complete system. Networks train on up to `jobs` threads; the
/// result does not depend on `jobs`.
pub fn train_bundle(
    corpus: &[Sentence],
    dev: Option<&[Sentence]>,
    config: &SystemConfig,
    jobs: usize,
) -> Result<Bundle> {
    config.validate()?;
    let trees: Vec<DepTree> = corpus.iter().map(DepTree::from_sentence).collect();
    let dev_trees: Option<Vec<DepTree>> =
        dev.map(|d| d.iter().map(DepTree::from_sentence).collect());
    let dev_pair = dev.zip(dev_trees.as_deref());

    let jobs = jobs.clamp(1, NetworkKind::ALL.len());
    let mut results: Vec<Result<(SrlModel, Vec<String>)>> = Vec::new();
    for group in NetworkKind::ALL.chunks(jobs) {
        if group.len() == 1 {
            results.push(train_network(group[0], corpus, &trees, dev_pair, config));
            continue;
        }
        let trees = &trees;
        std::thread::scope(|scope| {
            let handles: Vec<_> = group
                .iter()
                .map(|&kind| {
                    scope.spawn(move || train_network(kind, corpus, trees, dev_pair, config))
                })
                .collect();
            for h in handles {
                results.push(h.join().expect("training thread panicked"));
            }
        });
    }
    let mut models = Vec::with_capacity(4);
    let mut log = Vec::new();
    for r in results {
        let (model, lines) = r?;
        models.push(model);
        log.extend(lines);
    }

    let mut rng = component_rng(config.seed, PREDICATE_STREAM);
    let predicates = PredicateClassifier::train(corpus, &config.predicate, &mut rng)?;
    let mut bundle = Bundle {
        config: config.clone(),
        models,
        predicates,
        reranker: None,
        log,
    };
    if config.rerank_n > 1 {
        let reranker = train_reranker(&bundle, corpus, &trees, config)?;
        bundle.log.push(format!(
            "reranker n={} verb={} noun={}",
            reranker.n,
            reranker.verb.is_some(),
            reranker.noun.is_some()
        ));
        bundle.reranker = Some(reranker);
    }
    Ok(bundle)
}
