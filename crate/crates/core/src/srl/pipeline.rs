use crate::config::{Category, NetworkKind, SystemConfig, Task};
use crate::conll::Sentence;
use crate::deptree::DepTree;
use crate::error::{Error, Result};
use crate::rerank::{
    beam_members, local_structure, nbest_structures, rerank, CandidateStructure, ScoredCandidate,
};

use super::bundle::Bundle;
use super::model::{SrlModel, ARG_INDEX};

/// Switches for [`label_sentence`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelOptions {
    /// Take predicates and senses positions from the input's FILLPRED column.
    pub gold_predicates: bool,
    pub use_reranker: bool,
    pub rerank_n: usize,
    pub threshold: f64,
}

impl LabelOptions {
    pub fn from_config(config: &SystemConfig) -> Self {
        LabelOptions {
            gold_predicates: false,
            use_reranker: true,
            rerank_n: config.rerank_n,
            threshold: config.threshold,
        }
    }
}

/// A chosen argument with its scores.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledArgument {
    pub id: usize,
    pub label: String,
    pub p_id: f64,
    pub p_label: f64,
    pub embedding: Vec<f64>,
    pub hidden: Vec<f64>,
}

/// Predicate with its sense and argument structure.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledStructure {
    pub predicate: usize,
    pub sense: String,
    pub arguments: Vec<LabeledArgument>,
}

fn check_task(model: &SrlModel, task: Task) -> Result<()> {
    if model.task() != task {
        return Err(Error::Config(format!(
            "{} model used for {}",
            model.kind.name(),
            task.name()
        )));
    }
    Ok(())
}

/// Identification probability for every candidate that has a tree path to
/// the predicate. The predicate itself is a candidate; tokens in another
/// tree of a forest are not.
pub fn identification_scores(
    sentence: &Sentence,
    tree: &DepTree,
    predicate: usize,
    model: &SrlModel,
) -> Result<Vec<(usize, f64)>> {
    check_task(model, Task::Identification)?;
    let mut out = Vec::with_capacity(sentence.len());
    for cand in 1..=sentence.len() {
        let pair = match model.encode(sentence, tree, predicate, cand) {
            Ok(p) => p,
            Err(Error::NoPath { .. }) => continue,
            Err(e) => return Err(e),
        };
        out.push((cand, model.predict_encoded(&pair)?.probs[ARG_INDEX]));
    }
    Ok(out)
}

/// Candidates whose argument probability reaches `threshold`.
pub fn identify_arguments(
    sentence: &Sentence,
    tree: &DepTree,
    predicate: usize,
    model: &SrlModel,
    threshold: f64,
) -> Result<Vec<(usize, f64)>> {
    Ok(identification_scores(sentence, tree, predicate, model)?
        .into_iter()
        .filter(|&(_, p)| p >= threshold)
        .collect())
}

/// Label distribution of one argument plus the network states behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    /// (label index, probability), sorted descending; ties keep label order.
    pub ranked: Vec<(usize, f64)>,
    pub embedding: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl Classification {
    pub fn best(&self) -> (usize, f64) {
        self.ranked[0]
    }
}

pub fn classify_argument(
    sentence: &Sentence,
    tree: &DepTree,
    predicate: usize,
    argument: usize,
    model: &SrlModel,
) -> Result<Classification> {
    check_task(model, Task::Classification)?;
    let pred = model.predict(sentence, tree, predicate, argument)?;
    let mut ranked: Vec<(usize, f64)> = pred.probs.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(Classification {
        ranked,
        embedding: pred.embedding,
        hidden: pred.hidden,
    })
}

/// Identification scores for all candidates and classification scores for
/// those the beam of size `n` (or the local structure) can use.
pub fn score_candidates(
    bundle: &Bundle,
    sentence: &Sentence,
    tree: &DepTree,
    predicate: usize,
    n: usize,
    threshold: f64,
) -> Result<Vec<ScoredCandidate>> {
    let category = Category::of_pos(&sentence.token(predicate).ppos);
    let id_model = bundle.model(NetworkKind::new(Task::Identification, category));
    let cls_model = bundle.model(NetworkKind::new(Task::Classification, category));
    let mut candidates: Vec<ScoredCandidate> =
        identification_scores(sentence, tree, predicate, id_model)?
            .into_iter()
            .map(|(id, p_arg)| ScoredCandidate {
                id,
                p_arg,
                ranked: Vec::new(),
                embedding: Vec::new(),
                hidden: Vec::new(),
            })
            .collect();
    let p_args: Vec<f64> = candidates.iter().map(|c| c.p_arg).collect();
    let members = if n <= 1 {
        (0..p_args.len())
            .filter(|&i| p_args[i] >= threshold)
            .collect()
    } else {
        beam_members(&p_args, n, threshold)
    };
    for i in members {
        let c = &mut candidates[i];
        let cls = classify_argument(sentence, tree, predicate, c.id, cls_model)?;
        c.ranked = cls.ranked;
        c.embedding = cls.embedding;
        c.hidden = cls.hidden;
    }
    Ok(candidates)
}

fn to_labeled(structure: &CandidateStructure, sense: String, model: &SrlModel) -> LabeledStructure {
    LabeledStructure {
        predicate: structure.predicate,
        sense,
        arguments: structure
            .arguments
            .iter()
            .map(|a| LabeledArgument {
                id: a.id,
                label: model.labels[a.label].clone(),
                p_id: a.p_id,
                p_label: a.p_label,
                embedding: a.embedding.clone(),
                hidden: a.hidden.clone(),
            })
            .collect(),
    }
}

/// Argument structure of one predicate. Without a reranker (or with
/// n = 1) this is the local structure.
pub fn label_predicate(
    bundle: &Bundle,
    sentence: &Sentence,
    tree: &DepTree,
    predicate: usize,
    sense: String,
    options: &LabelOptions,
) -> Result<LabeledStructure> {
    let category = Category::of_pos(&sentence.token(predicate).ppos);
    let cls_model = bundle.model(NetworkKind::new(Task::Classification, category));
    let reranker = bundle
        .reranker
        .as_ref()
        .and_then(|r| r.get(category))
        .filter(|_| options.use_reranker && options.rerank_n > 1);
    let n = if reranker.is_some() {
        options.rerank_n
    } else {
        1
    };
    let candidates = score_candidates(bundle, sentence, tree, predicate, n, options.threshold)?;
    let chosen = match reranker {
        Some(r) => {
            let mut list = nbest_structures(predicate, &candidates, n, options.threshold);
            let best = rerank(&mut list, r)?;
            list.swap_remove(best)
        }
        None => local_structure(predicate, &candidates, options.threshold),
    };
    Ok(to_labeled(&chosen, sense, cls_model))
}

/// Predicates of a sentence: the FILLPRED tokens in gold mode, otherwise
/// the predicate classifier's decisions.
pub fn predicates_of(
    bundle: &Bundle,
    sentence: &Sentence,
    tree: &DepTree,
    gold_predicates: bool,
) -> Vec<usize> {
    if gold_predicates {
        sentence.predicate_ids()
    } else {
        bundle.predicates.identify(sentence, tree)
    }
}

/// Run the full pipeline on one sentence. All annotation of the input is
/// replaced; the other columns are kept as they are.
pub fn label_sentence(
    sentence: &Sentence,
    bundle: &Bundle,
    options: &LabelOptions,
) -> Result<Sentence> {
    let tree = DepTree::from_sentence(sentence);
    let mut frames = Vec::new();
    for pred in predicates_of(bundle, sentence, &tree, options.gold_predicates) {
        let sense = bundle.predicates.disambiguate(sentence, &tree, pred);
        let s = label_predicate(bundle, sentence, &tree, pred, sense, options)?;
        frames.push((
            s.predicate,
            s.sense,
            s.arguments.into_iter().map(|a| (a.id, a.label)).collect(),
        ));
    }
    let mut out = sentence.clone();
    out.set_annotation(frames);
    Ok(out)
}

/// Label a corpus on up to `jobs` threads; output order follows the input.
pub fn label_corpus(
    corpus: &[Sentence],
    bundle: &Bundle,
    options: &LabelOptions,
    jobs: usize,
) -> Result<Vec<Sentence>> {
    let jobs = jobs.max(1).min(corpus.len().max(1));
    if jobs == 1 {
        return corpus
            .iter()
            .map(|s| label_sentence(s, bundle, options))
            .collect();
    }
    let chunk = corpus.len().div_ceil(jobs);
    let results: Vec<Result<Vec<Sentence>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = corpus
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|s| label_sentence(s, bundle, options))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("labeling thread panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(corpus.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Path embedding of one predicate-argument candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingRow {
    /// 1-based position of the sentence in the corpus.
    pub sentence: usize,
    pub predicate: usize,
    pub argument: usize,
    /// Gold role from the input, if annotated.
    pub gold: Option<String>,
    /// Classification-network path embedding.
    pub embedding: Vec<f64>,
}

impl EmbeddingRow {
    /// Tab-separated: the four metadata fields then the embedding values,
    /// written so that they parse back bit-for-bit.
    pub fn to_line(&self) -> String {
        let mut fields = vec![
            self.sentence.to_string(),
            self.predicate.to_string(),
            self.argument.to_string(),
            self.gold.clone().unwrap_or_else(|| "_".into()),
        ];
        fields.extend(self.embedding.iter().map(|v| v.to_string()));
        fields.join("\t")
    }
}

/// Embeddings of every candidate the identifier accepts, ordered by
/// sentence, predicate and argument.
pub fn dump_embeddings(
    corpus: &[Sentence],
    bundle: &Bundle,
    options: &LabelOptions,
) -> Result<Vec<EmbeddingRow>> {
    let mut rows = Vec::new();
    for (si, sentence) in corpus.iter().enumerate() {
        let tree = DepTree::from_sentence(sentence);
        let gold_columns = sentence.predicate_ids();
        for pred in predicates_of(bundle, sentence, &tree, options.gold_predicates) {
            let category = Category::of_pos(&sentence.token(pred).ppos);
            let id_model = bundle.model(NetworkKind::new(Task::Identification, category));
            let cls_model = bundle.model(NetworkKind::new(Task::Classification, category));
            let gold_args = gold_columns
                .iter()
                .position(|&p| p == pred)
                .map(|col| sentence.arguments(col))
                .unwrap_or_default();
            for (arg, _) in identify_arguments(sentence, &tree, pred, id_model, options.threshold)?
            {
                let p = cls_model.predict(sentence, &tree, pred, arg)?;
                rows.push(EmbeddingRow {
                    sentence: si + 1,
                    predicate: pred,
                    argument: arg,
                    gold: gold_args
                        .iter()
                        .find(|(a, _)| *a == arg)
                        .map(|(_, l)| l.to_string()),
                    embedding: p.embedding,
                });
            }
        }
    }
    Ok(rows)
}
