use std::collections::BTreeMap;

use rand::Rng;

use crate::conll::Sentence;
use crate::deptree::DepTree;
use crate::error::{Error, Result};
use crate::features::FeatureDict;
use crate::logreg::{argmax, indicators, LogReg, LogRegConfig};
use crate::model_io::ModelFile;

/// Tokens that may be predicates at all: verbal or nominal predicted tags.
pub fn is_predicate_candidate(ppos: &str) -> bool {
    ppos.starts_with('V') || ppos.starts_with('N')
}

/// Word form, predicted tag and the dependency relations to all children.
pub fn predicate_feature_strings(sentence: &Sentence, tree: &DepTree, id: usize) -> Vec<String> {
    let t = sentence.token(id);
    let mut out = vec![format!("form={}", t.form), format!("pos={}", t.ppos)];
    let rels: Vec<&str> = tree.children(id).iter().map(|&c| tree.label(c)).collect();
    for r in &rels {
        out.push(format!("child.rel={r}"));
    }
    out.push(format!("child.rels={}", rels.join("+")));
    out
}

/// Sense inventory of one lemma.
#[derive(Clone, Debug, PartialEq)]
pub struct LemmaSenses {
    /// Senses in first-seen order.
    pub senses: Vec<String>,
    pub most_frequent: String,
    /// Present only when training saw at least two senses.
    pub classifier: Option<LogReg>,
}

/// Logistic-regression predicate identification and disambiguation.
#[derive(Clone, Debug, PartialEq)]
pub struct PredicateClassifier {
    pub features: FeatureDict,
    /// Class 0 = predicate, class 1 = not a predicate.
    pub identifier: LogReg,
    /// Keyed by predicted lemma.
    pub lemmas: BTreeMap<String, LemmaSenses>,
}

impl PredicateClassifier {
    /// Train on gold FILLPRED/PRED columns over predicted syntax.
    pub fn train<R: Rng>(corpus: &[Sentence], config: &LogRegConfig, rng: &mut R) -> Result<Self> {
        let mut features = FeatureDict::new();
        let mut id_data = Vec::new();
        // lemma -> (sense -> count, first-seen sense order, examples)
        let mut per_lemma: BTreeMap<
            String,
            (
                BTreeMap<String, usize>,
                Vec<String>,
                Vec<(Vec<u32>, String)>,
            ),
        > = BTreeMap::new();

        for sentence in corpus {
            let tree = DepTree::from_sentence(sentence);
            for t in &sentence.tokens {
                if !is_predicate_candidate(&t.ppos) {
                    continue;
                }
                let strings = predicate_feature_strings(sentence, &tree, t.id);
                let feats = features.encode_mut(&strings).indices().to_vec();
                id_data.push((indicators(&feats), if t.fillpred { 0 } else { 1 }));
                if t.fillpred {
                    let entry = per_lemma.entry(t.plemma.clone()).or_default();
                    let count = entry.0.entry(t.pred.clone()).or_insert(0);
                    if *count == 0 {
                        entry.1.push(t.pred.clone());
                    }
                    *count += 1;
                    entry.2.push((feats, t.pred.clone()));
                }
            }
        }
        features.freeze();
        let dim = features.len();
        let (identifier, _) = LogReg::train(&id_data, dim, 2, config, rng)?;

        let mut lemmas = BTreeMap::new();
        for (lemma, (counts, order, examples)) in per_lemma {
            // earliest seen wins ties
            let mut most_frequent = &order[0];
            for s in &order {
                if counts[s] > counts[most_frequent] {
                    most_frequent = s;
                }
            }
            let most_frequent = most_frequent.clone();
            let classifier = if order.len() >= 2 {
                let data: Vec<_> = examples
                    .iter()
                    .map(|(f, s)| (indicators(f), order.iter().position(|o| o == s).unwrap()))
                    .collect();
                Some(LogReg::train(&data, dim, order.len(), config, rng)?.0)
            } else {
                None
            };
            lemmas.insert(
                lemma,
                LemmaSenses {
                    senses: order,
                    most_frequent,
                    classifier,
                },
            );
        }
        Ok(PredicateClassifier {
            features,
            identifier,
            lemmas,
        })
    }

    fn encode(&self, sentence: &Sentence, tree: &DepTree, id: usize) -> Vec<(u32, f64)> {
        let strings = predicate_feature_strings(sentence, tree, id);
        indicators(self.features.encode(&strings).indices())
    }

    /// Tokens classified as predicates, in surface order.
    pub fn identify(&self, sentence: &Sentence, tree: &DepTree) -> Vec<usize> {
        sentence
            .tokens
            .iter()
            .filter(|t| is_predicate_candidate(&t.ppos))
            .filter(|t| self.identifier.predict(&self.encode(sentence, tree, t.id)) == 0)
            .map(|t| t.id)
            .collect()
    }

    /// Sense of a predicate token: per-lemma classifier, else the most
    /// frequent training sense, else `lemma.01`.
    pub fn disambiguate(&self, sentence: &Sentence, tree: &DepTree, id: usize) -> String {
        let lemma = &sentence.token(id).plemma;
        match self.lemmas.get(lemma) {
            Some(LemmaSenses {
                senses,
                classifier: Some(c),
                ..
            }) => senses[argmax(&c.probs(&self.encode(sentence, tree, id)))].clone(),
            Some(s) => s.most_frequent.clone(),
            None => format!("{lemma}.01"),
        }
    }

    pub fn to_model_file(&self) -> ModelFile {
        let mut f = ModelFile::new("predicates");
        f.push_dict("features", self.features.strings());
        self.identifier.write_into(&mut f, "identify");
        let names: Vec<String> = self.lemmas.keys().cloned().collect();
        f.push_dict("lemmas", &names);
        let mfs: Vec<String> = self
            .lemmas
            .values()
            .map(|l| l.most_frequent.clone())
            .collect();
        f.push_dict("most_frequent", &mfs);
        for (i, l) in self.lemmas.values().enumerate() {
            f.push_dict(&format!("senses.{i}"), &l.senses);
            if let Some(c) = &l.classifier {
                c.write_into(&mut f, &format!("sense.{i}"));
            }
        }
        f
    }

    pub fn from_model_file(f: &ModelFile) -> Result<Self> {
        if f.kind != "predicates" {
            return Err(Error::Model(format!(
                "expected a predicate classifier file, found {:?}",
                f.kind
            )));
        }
        let features = FeatureDict::from_strings(f.dict("features")?.to_vec());
        let identifier = LogReg::read_from(f, "identify")?;
        let names = f.dict("lemmas")?;
        let mfs = f.dict("most_frequent")?;
        if names.len() != mfs.len() {
            return Err(Error::Model(
                "lemma and sense tables differ in length".into(),
            ));
        }
        let mut lemmas = BTreeMap::new();
        for (i, (name, mf)) in names.iter().zip(mfs).enumerate() {
            let prefix = format!("sense.{i}");
            let classifier = if f.has_array(&format!("{prefix}.weights")) {
                Some(LogReg::read_from(f, &prefix)?)
            } else {
                None
            };
            lemmas.insert(
                name.clone(),
                LemmaSenses {
                    senses: f.dict(&format!("senses.{i}"))?.to_vec(),
                    most_frequent: mf.clone(),
                    classifier,
                },
            );
        }
        Ok(PredicateClassifier {
            features,
            identifier,
            lemmas,
        })
    }
}
