//! Global reranking of n-best argument structures per predicate.
//!
//! Candidates come from a beam over argument subsets (ranked by the
//! identification probabilities) crossed with label assignments (ranked by
//! the classification probabilities). A logistic regression over the
//! label-offset hidden and embedding states of the arguments supplies a
//! global score, and the final choice maximizes the geometric mean of the
//! global score and every per-argument score.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::Rng;

use crate::config::Category;
use crate::error::{Error, Result};
use crate::logreg::{LogReg, LogRegConfig, SparseVec};
use crate::model_io::ModelFile;

/// One argument of a candidate structure.
#[derive(Clone, Debug, PartialEq)]
pub struct ArgumentChoice {
    pub id: usize,
    /// Index into the classification label dictionary.
    pub label: usize,
    pub p_id: f64,
    pub p_label: f64,
    pub embedding: Vec<f64>,
    pub hidden: Vec<f64>,
}

/// One scored predicate-argument structure.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateStructure {
    pub predicate: usize,
    /// Sorted by argument id.
    pub arguments: Vec<ArgumentChoice>,
    /// Log of the local product score (subset probability times label
    /// probabilities).
    pub local_log_score: f64,
    /// Reranker probability of being the best structure, once scored.
    pub global: Option<f64>,
}

impl CandidateStructure {
    /// Same arguments with the same labels.
    pub fn same_structure(&self, other: &CandidateStructure) -> bool {
        self.predicate == other.predicate
            && self.arguments.len() == other.arguments.len()
            && self
                .arguments
                .iter()
                .zip(&other.arguments)
                .all(|(a, b)| a.id == b.id && a.label == b.label)
    }

    pub fn labeled_arguments(&self) -> Vec<(usize, usize)> {
        self.arguments.iter().map(|a| (a.id, a.label)).collect()
    }
}

/// Heap entry ordered by score (max first), then by insertion order.
#[derive(Debug)]
struct Entry<T> {
    score: f64,
    seq: usize,
    item: T,
}

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for Entry<T> {}
impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn ln(p: f64) -> f64 {
    p.ln()
}

/// The `n` most probable inclusion subsets of independent candidates with
/// inclusion probabilities `probs`, as (included indices ascending, log
/// probability), best first. The best subset includes exactly the
/// candidates with p ≥ 0.5; every other subset is reached by flipping a
/// set of decisions, whose cost is the sum of the flipped log-odds.
pub fn top_subsets(probs: &[f64], n: usize) -> Vec<(Vec<usize>, f64)> {
    let best: Vec<bool> = probs.iter().map(|&p| p >= 0.5).collect();
    let best_score: f64 = probs
        .iter()
        .zip(&best)
        .map(|(&p, &inc)| if inc { ln(p) } else { ln(1.0 - p) })
        .sum();
    // flip costs, ascending; ties keep candidate order
    let mut flips: Vec<(f64, usize)> = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| ((ln(p) - ln(1.0 - p)).abs(), i))
        .collect();
    flips.sort_by(|a, b| a.0.total_cmp(&b.0));

    let to_subset = |flipped: &[usize]| -> Vec<usize> {
        let mut inc = best.clone();
        for &k in flipped {
            let i = flips[k].1;
            inc[i] = !inc[i];
        }
        (0..probs.len()).filter(|&i| inc[i]).collect()
    };

    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push((to_subset(&[]), best_score));
    // Each flip set is a strictly increasing list of positions in `flips`;
    // successors extend it by the next position or advance its last one.
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    if !flips.is_empty() {
        heap.push(Entry {
            score: -flips[0].0,
            seq,
            item: vec![0usize],
        });
        seq += 1;
    }
    while out.len() < n {
        let Some(Entry { score, item, .. }) = heap.pop() else {
            break;
        };
        out.push((to_subset(&item), best_score + score));
        let last = *item.last().unwrap();
        if last + 1 < flips.len() {
            let mut extend = item.clone();
            extend.push(last + 1);
            heap.push(Entry {
                score: score - flips[last + 1].0,
                seq,
                item: extend,
            });
            seq += 1;
            let mut advance = item;
            *advance.last_mut().unwrap() = last + 1;
            heap.push(Entry {
                score: score + flips[last].0 - flips[last + 1].0,
                seq,
                item: advance,
            });
            seq += 1;
        }
    }
    out
}

/// The `n` best joint label assignments for arguments whose label
/// distributions are given as probabilities sorted descending. Returns
/// (rank per argument, log probability), best first.
pub fn top_labelings(ranked: &[Vec<f64>], n: usize) -> Vec<(Vec<usize>, f64)> {
    let score =
        |ranks: &[usize]| -> f64 { ranks.iter().zip(ranked).map(|(&r, dist)| ln(dist[r])).sum() };
    let mut out = Vec::with_capacity(n);
    if n == 0 || ranked.iter().any(|d| d.is_empty()) {
        return out;
    }
    let start = vec![0usize; ranked.len()];
    let mut seen = HashSet::new();
    seen.insert(start.clone());
    let mut heap = BinaryHeap::new();
    heap.push(Entry {
        score: score(&start),
        seq: 0,
        item: start,
    });
    let mut seq = 1;
    while out.len() < n {
        let Some(Entry { score: s, item, .. }) = heap.pop() else {
            break;
        };
        for k in 0..item.len() {
            if item[k] + 1 < ranked[k].len() {
                let mut next = item.clone();
                next[k] += 1;
                if seen.insert(next.clone()) {
                    heap.push(Entry {
                        score: score(&next),
                        seq,
                        item: next,
                    });
                    seq += 1;
                }
            }
        }
        out.push((item, s));
    }
    out
}

/// Scores of one candidate argument as seen by the beam.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidate {
    pub id: usize,
    pub p_arg: f64,
    /// (label index, probability), sorted by descending probability.
    pub ranked: Vec<(usize, f64)>,
    pub embedding: Vec<f64>,
    pub hidden: Vec<f64>,
}

/// The local structure: candidates at or above `threshold` with their most
/// probable labels.
pub fn local_structure(
    predicate: usize,
    candidates: &[ScoredCandidate],
    threshold: f64,
) -> CandidateStructure {
    let included: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].p_arg >= threshold)
        .collect();
    build_structure(predicate, candidates, &included, &vec![0; included.len()])
}

fn build_structure(
    predicate: usize,
    candidates: &[ScoredCandidate],
    included: &[usize],
    ranks: &[usize],
) -> CandidateStructure {
    let mut arguments: Vec<ArgumentChoice> = included
        .iter()
        .zip(ranks)
        .map(|(&i, &r)| {
            let c = &candidates[i];
            let (label, p_label) = c.ranked[r];
            ArgumentChoice {
                id: c.id,
                label,
                p_id: c.p_arg,
                p_label,
                embedding: c.embedding.clone(),
                hidden: c.hidden.clone(),
            }
        })
        .collect();
    arguments.sort_by_key(|a| a.id);
    let included_set: HashSet<usize> = included.iter().copied().collect();
    let subset: f64 = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if included_set.contains(&i) {
                ln(c.p_arg)
            } else {
                ln(1.0 - c.p_arg)
            }
        })
        .sum();
    let labels: f64 = arguments.iter().map(|a| ln(a.p_label)).sum();
    CandidateStructure {
        predicate,
        arguments,
        local_log_score: subset + labels,
        global: None,
    }
}

/// Candidate indices that can appear in the top `n` subsets, plus those at
/// or above `threshold`. Only these need classification scores.
pub fn beam_members(p_args: &[f64], n: usize, threshold: f64) -> Vec<usize> {
    let mut members: Vec<usize> = top_subsets(p_args, n)
        .into_iter()
        .flat_map(|(s, _)| s)
        .chain((0..p_args.len()).filter(|&i| p_args[i] >= threshold))
        .collect();
    members.sort_unstable();
    members.dedup();
    members
}

/// n-best candidate structures for one predicate, best local score first.
/// The local structure is always part of the list: if the beam misses it,
/// it replaces the last entry. `candidates` must carry label rankings for
/// every index returned by [`beam_members`].
pub fn nbest_structures(
    predicate: usize,
    candidates: &[ScoredCandidate],
    n: usize,
    threshold: f64,
) -> Vec<CandidateStructure> {
    let n = n.max(1);
    let p_args: Vec<f64> = candidates.iter().map(|c| c.p_arg).collect();
    let mut all = Vec::new();
    for (subset, _) in top_subsets(&p_args, n) {
        let ranked: Vec<Vec<f64>> = subset
            .iter()
            .map(|&i| candidates[i].ranked.iter().map(|&(_, p)| p).collect())
            .collect();
        for (ranks, _) in top_labelings(&ranked, n) {
            all.push(build_structure(predicate, candidates, &subset, &ranks));
        }
    }
    // stable: equal scores keep enumeration order
    all.sort_by(|a, b| b.local_log_score.total_cmp(&a.local_log_score));
    all.truncate(n);
    let local = local_structure(predicate, candidates, threshold);
    if !all.iter().any(|s| s.same_structure(&local)) {
        if all.len() == n {
            all.pop();
        }
        all.push(local);
    }
    all
}

/// Label-offset concatenation of argument states: argument with label k
/// writes `[e; h]` into block k; arguments sharing a label are summed.
pub fn rerank_features(
    structure: &CandidateStructure,
    num_labels: usize,
    embed_dim: usize,
    hidden_dim: usize,
) -> Result<SparseVec> {
    let width = embed_dim + hidden_dim;
    let mut dense = vec![0.0; num_labels * width];
    for a in &structure.arguments {
        if a.embedding.len() != embed_dim || a.hidden.len() != hidden_dim {
            return Err(Error::Shape(format!(
                "argument {} lacks cached states of sizes {}/{}",
                a.id, embed_dim, hidden_dim
            )));
        }
        if a.label >= num_labels {
            return Err(Error::Shape(format!(
                "label index {} out of range",
                a.label
            )));
        }
        let block = &mut dense[a.label * width..(a.label + 1) * width];
        for (d, v) in block.iter_mut().zip(a.embedding.iter().chain(&a.hidden)) {
            *d += v;
        }
    }
    Ok(dense
        .into_iter()
        .enumerate()
        .filter(|(_, v)| *v != 0.0)
        .map(|(i, v)| (i as u32, v))
        .collect())
}

/// Geometric mean of the global score and both scores of every argument,
/// computed in the log domain.
pub fn geometric_score(p_global: f64, arguments: &[(f64, f64)]) -> f64 {
    let sum: f64 = ln(p_global)
        + arguments
            .iter()
            .map(|&(p_id, p_label)| ln(p_id) + ln(p_label))
            .sum::<f64>();
    (sum / (1 + 2 * arguments.len()) as f64).exp()
}

/// Reranking regression of one predicate category.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryReranker {
    pub num_labels: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Class 0 = other structure, class 1 = best structure.
    pub model: LogReg,
}

impl CategoryReranker {
    pub fn features(&self, s: &CandidateStructure) -> Result<SparseVec> {
        rerank_features(s, self.num_labels, self.embed_dim, self.hidden_dim)
    }

    pub fn global_probability(&self, s: &CandidateStructure) -> Result<f64> {
        Ok(self.model.probs(&self.features(s)?)[1])
    }

    /// Train from groups of candidate structures, each with the index of
    /// its best member.
    pub fn train<R: Rng>(
        groups: &[(Vec<CandidateStructure>, usize)],
        num_labels: usize,
        embed_dim: usize,
        hidden_dim: usize,
        config: &LogRegConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let mut data = Vec::new();
        for (structures, best) in groups {
            for (i, s) in structures.iter().enumerate() {
                let x = rerank_features(s, num_labels, embed_dim, hidden_dim)?;
                data.push((x, usize::from(i == *best)));
            }
        }
        let dim = num_labels * (embed_dim + hidden_dim);
        let (model, _) = LogReg::train(&data, dim, 2, config, rng)?;
        Ok(CategoryReranker {
            num_labels,
            embed_dim,
            hidden_dim,
            model,
        })
    }
}

/// Select the structure with the highest geometric-mean score. Ties go to
/// the higher local score, then to the earlier structure. Fills in the
/// global scores.
pub fn rerank(structures: &mut [CandidateStructure], reranker: &CategoryReranker) -> Result<usize> {
    if structures.is_empty() {
        return Err(Error::Shape("nothing to rerank".into()));
    }
    let mut scores = Vec::with_capacity(structures.len());
    for s in structures.iter_mut() {
        let g = reranker.global_probability(s)?;
        s.global = Some(g);
        let args: Vec<(f64, f64)> = s.arguments.iter().map(|a| (a.p_id, a.p_label)).collect();
        scores.push(geometric_score(g, &args));
    }
    let mut best = 0;
    for i in 1..structures.len() {
        let better = match scores[i].total_cmp(&scores[best]) {
            Ordering::Greater => true,
            Ordering::Equal => structures[i].local_log_score > structures[best].local_log_score,
            Ordering::Less => false,
        };
        if better {
            best = i;
        }
    }
    Ok(best)
}

/// Per-category rerankers; a missing category falls back to the local
/// structure.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RerankerModel {
    pub n: usize,
    pub verb: Option<CategoryReranker>,
    pub noun: Option<CategoryReranker>,
}

impl RerankerModel {
    pub fn get(&self, category: Category) -> Option<&CategoryReranker> {
        match category {
            Category::Verb => self.verb.as_ref(),
            Category::Noun => self.noun.as_ref(),
        }
    }

    pub fn to_model_file(&self) -> ModelFile {
        let mut f = ModelFile::new("reranker");
        f.push_meta("n", self.n);
        for (cat, r) in [(Category::Verb, &self.verb), (Category::Noun, &self.noun)] {
            if let Some(r) = r {
                let name = cat.name();
                f.push_meta(&format!("{name}.labels"), r.num_labels);
                f.push_meta(&format!("{name}.embed"), r.embed_dim);
                f.push_meta(&format!("{name}.hidden"), r.hidden_dim);
                r.model.write_into(&mut f, name);
            }
        }
        f
    }

    pub fn from_model_file(f: &ModelFile) -> Result<Self> {
        if f.kind != "reranker" {
            return Err(Error::Model(format!(
                "expected a reranker file, found {:?}",
                f.kind
            )));
        }
        let read = |cat: Category| -> Result<Option<CategoryReranker>> {
            let name = cat.name();
            if !f.has_array(&format!("{name}.weights")) {
                return Ok(None);
            }
            let r = CategoryReranker {
                num_labels: f.meta_parse(&format!("{name}.labels"))?,
                embed_dim: f.meta_parse(&format!("{name}.embed"))?,
                hidden_dim: f.meta_parse(&format!("{name}.hidden"))?,
                model: LogReg::read_from(f, name)?,
            };
            if r.model.dim() != r.num_labels * (r.embed_dim + r.hidden_dim)
                || r.model.classes() != 2
            {
                return Err(Error::Model(format!(
                    "{name} reranker has inconsistent shape"
                )));
            }
            Ok(Some(r))
        };
        Ok(RerankerModel {
            n: f.meta_parse("n")?,
            verb: read(Category::Verb)?,
            noun: read(Category::Noun)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Every subset with its log probability, best first, by enumeration.
    fn brute_force_subsets(probs: &[f64]) -> Vec<(Vec<usize>, f64)> {
        let k = probs.len();
        let mut all: Vec<(Vec<usize>, f64)> = (0..1usize << k)
            .map(|mask| {
                let inc: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
                let lp = (0..k)
                    .map(|i| {
                        if mask >> i & 1 == 1 {
                            probs[i].ln()
                        } else {
                            (1.0 - probs[i]).ln()
                        }
                    })
                    .sum();
                (inc, lp)
            })
            .collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1));
        all
    }

    fn candidate(id: usize, p_arg: f64, ranked: &[(usize, f64)]) -> ScoredCandidate {
        ScoredCandidate {
            id,
            p_arg,
            ranked: ranked.to_vec(),
            embedding: vec![id as f64, 1.0],
            hidden: vec![0.5, -(id as f64), 2.0],
        }
    }

    proptest! {
        #[test]
        fn top_subsets_match_enumeration(
            probs in proptest::collection::vec(0.01f64..0.99, 0..=12),
            n in 1usize..40,
        ) {
            let fast = top_subsets(&probs, n);
            let slow = brute_force_subsets(&probs);
            prop_assert_eq!(fast.len(), n.min(slow.len()));
            for (i, (subset, lp)) in fast.iter().enumerate() {
                // scores agree rank by rank; ties may order differently
                prop_assert!((lp - slow[i].1).abs() < 1e-9);
                let exact = slow.iter().find(|(s, _)| s == subset).unwrap().1;
                prop_assert!((lp - exact).abs() < 1e-9);
            }
            let mut seen: Vec<&Vec<usize>> = fast.iter().map(|(s, _)| s).collect();
            seen.sort();
            seen.dedup();
            prop_assert_eq!(seen.len(), fast.len());
        }

        #[test]
        fn top_labelings_match_enumeration(
            dists in proptest::collection::vec(
                proptest::collection::vec(0.01f64..1.0, 1..4), 0..4),
            n in 1usize..20,
        ) {
            let ranked: Vec<Vec<f64>> = dists
                .into_iter()
                .map(|mut d| {
                    let z: f64 = d.iter().sum();
                    d.iter_mut().for_each(|p| *p /= z);
                    d.sort_by(|a, b| b.total_cmp(a));
                    d
                })
                .collect();
            let mut all: Vec<f64> = vec![0.0];
            for d in &ranked {
                all = all.iter().flat_map(|s| d.iter().map(move |p| s + p.ln())).collect();
            }
            all.sort_by(|a, b| b.total_cmp(a));
            let fast = top_labelings(&ranked, n);
            prop_assert_eq!(fast.len(), n.min(all.len()));
            for (i, (_, lp)) in fast.iter().enumerate() {
                prop_assert!((lp - all[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn best_subset_takes_candidates_at_one_half() {
        let top = top_subsets(&[0.9, 0.2, 0.5, 0.7], 1);
        assert_eq!(top[0].0, vec![0, 2, 3]);
    }

    #[test]
    fn geometric_mean_example() {
        assert!((geometric_score(0.8, &[(0.2, 0.5)]) - 0.4309).abs() < 1e-4);
        assert!((geometric_score(0.3, &[]) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn features_are_offset_by_label_and_summed() {
        let arg = |id: usize, label: usize, e: f64, h: f64| ArgumentChoice {
            id,
            label,
            p_id: 0.9,
            p_label: 0.9,
            embedding: vec![e],
            hidden: vec![h, 0.0],
        };
        let s = CandidateStructure {
            predicate: 1,
            arguments: vec![
                arg(2, 2, 1.0, 2.0),
                arg(3, 0, 4.0, 5.0),
                arg(4, 2, 0.5, -2.0),
            ],
            local_log_score: 0.0,
            global: None,
        };
        let x = rerank_features(&s, 3, 1, 2).unwrap();
        // block 0 = [4, 5, 0]; block 1 empty; block 2 = [1.5, 0, 0]
        assert_eq!(x, vec![(0, 4.0), (1, 5.0), (6, 1.5)]);
        assert!(rerank_features(&s, 2, 1, 2).is_err());
        assert!(rerank_features(&s, 3, 2, 2).is_err());
    }

    #[test]
    fn nbest_starts_with_local_structure() {
        let cands = vec![
            candidate(1, 0.9, &[(0, 0.6), (1, 0.4)]),
            candidate(2, 0.45, &[(1, 0.7), (0, 0.3)]),
            candidate(3, 0.05, &[(0, 1.0)]),
        ];
        let list = nbest_structures(7, &cands, 4, 0.5);
        assert_eq!(list.len(), 4);
        let local = local_structure(7, &cands, 0.5);
        assert!(list[0].same_structure(&local));
        assert_eq!(local.labeled_arguments(), vec![(1, 0)]);
        for w in list.windows(2) {
            assert!(w[0].local_log_score >= w[1].local_log_score);
        }
        let one = nbest_structures(7, &cands, 1, 0.5);
        assert_eq!(one.len(), 1);
        assert!(one[0].same_structure(&local));
    }

    #[test]
    fn local_structure_is_kept_when_threshold_differs() {
        let cands = vec![
            candidate(1, 0.55, &[(0, 1.0)]),
            candidate(2, 0.6, &[(0, 1.0)]),
        ];
        // threshold 0.7 excludes both, a structure the beam ranks last
        let list = nbest_structures(9, &cands, 2, 0.7);
        assert_eq!(list.len(), 2);
        assert!(list[1].arguments.is_empty());
    }

    #[test]
    fn reranker_learns_to_prefer_second_ranked_gold() {
        // gold is always the rank-2 structure, marked by label 1
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let make = |rng: &mut ChaCha8Rng| {
            let a = rng.gen_range(0.55..0.65);
            let cands = vec![candidate(1, 0.95, &[(0, a), (1, 1.0 - a)])];
            nbest_structures(0, &cands, 2, 0.5)
        };
        let groups: Vec<(Vec<CandidateStructure>, usize)> = (0..40)
            .map(|_| {
                let list = make(&mut rng);
                let best = list.iter().position(|s| s.arguments[0].label == 1).unwrap();
                assert_eq!(best, 1);
                (list, best)
            })
            .collect();
        let cfg = LogRegConfig {
            alpha: 0.5,
            epochs: 50,
            ..LogRegConfig::default()
        };
        let r = CategoryReranker::train(&groups, 2, 2, 3, &cfg, &mut rng).unwrap();
        let mut list = make(&mut rng);
        let best = rerank(&mut list, &r).unwrap();
        assert_eq!(list[best].arguments[0].label, 1);
        assert!(list.iter().all(|s| s.global.is_some()));
    }

    #[test]
    fn reranker_model_round_trip() {
        let r = CategoryReranker {
            num_labels: 2,
            embed_dim: 1,
            hidden_dim: 2,
            model: LogReg::zeros(6, 2),
        };
        let m = RerankerModel {
            n: 4,
            verb: Some(r),
            noun: None,
        };
        let back = RerankerModel::from_model_file(&m.to_model_file()).unwrap();
        assert_eq!(back, m);
        assert!(back.get(Category::Noun).is_none());
    }
}
