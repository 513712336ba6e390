//! Sparse binary indicator features and string dictionaries.

use std::collections::HashMap;

use crate::conll::Sentence;
use crate::deptree::{DepTree, PathItem, PathSequence};
use crate::error::Result;

/// Bidirectional string/index map. Indices are dense in `[0, len)`; a
/// frozen dictionary never grows.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeatureDict {
    strings: Vec<String>,
    index: HashMap<String, u32>,
    frozen: bool,
}

impl FeatureDict {
    pub fn new() -> Self {
        Self::default()
    }

    /// Frozen dictionary over `strings` in the given order.
    pub fn from_strings(strings: Vec<String>) -> Self {
        let mut dict = FeatureDict::new();
        for s in strings {
            dict.insert(&s);
        }
        dict.freeze();
        dict
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn get(&self, s: &str) -> Option<u32> {
        self.index.get(s).copied()
    }

    pub fn string(&self, idx: u32) -> &str {
        &self.strings[idx as usize]
    }

    pub fn strings(&self) -> &[String] {
        &self.strings
    }

    fn insert(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.strings.len() as u32;
        self.strings.push(s.to_owned());
        self.index.insert(s.to_owned(), i);
        i
    }

    /// Index of `s`, adding it when the dictionary is not frozen.
    pub fn lookup_or_insert(&mut self, s: &str) -> Option<u32> {
        if self.frozen {
            self.get(s)
        } else {
            Some(self.insert(s))
        }
    }

    /// Indices of known strings; unknown ones are dropped.
    pub fn encode<S: AsRef<str>>(&self, strings: &[S]) -> BinaryFeatureSet {
        BinaryFeatureSet::new(
            strings
                .iter()
                .filter_map(|s| self.get(s.as_ref()))
                .collect(),
        )
    }

    /// Like [`FeatureDict::encode`], but grows an unfrozen dictionary.
    pub fn encode_mut<S: AsRef<str>>(&mut self, strings: &[S]) -> BinaryFeatureSet {
        BinaryFeatureSet::new(
            strings
                .iter()
                .filter_map(|s| self.lookup_or_insert(s.as_ref()))
                .collect(),
        )
    }
}

/// Sorted, duplicate-free set of active feature indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BinaryFeatureSet(Vec<u32>);

impl BinaryFeatureSet {
    pub fn new(mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        BinaryFeatureSet(indices)
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Position of the candidate relative to the predicate.
fn relative_position(predicate: usize, candidate: usize) -> &'static str {
    use std::cmp::Ordering::*;
    match candidate.cmp(&predicate) {
        Less => "left",
        Equal => "self",
        Greater => "right",
    }
}

/// Feature strings for one (predicate, candidate) pair. Every string is
/// prefixed with its template name.
pub fn feature_strings(
    sentence: &Sentence,
    tree: &DepTree,
    predicate: usize,
    candidate: usize,
) -> Result<Vec<String>> {
    let p = sentence.token(predicate);
    let c = sentence.token(candidate);
    let mut out = vec![
        format!("pred.form={}", p.form),
        format!("pred.pos={}", p.ppos),
        format!("cand.form={}", c.form),
        format!("cand.pos={}", c.ppos),
        format!("pred.deprel={}", p.pdeprel),
        format!("cand.deprel={}", c.pdeprel),
        format!("path={}", tree.relation_path(predicate, candidate)?),
    ];

    for (role, id) in [("pred", predicate), ("cand", candidate)] {
        for &child in tree.children(id) {
            let t = sentence.token(child);
            out.push(format!("{role}.child.form={}", t.form));
            out.push(format!("{role}.child.pos={}", t.ppos));
        }
        for sib in tree.siblings(id) {
            let t = sentence.token(sib);
            out.push(format!("{role}.sib.form={}", t.form));
            out.push(format!("{role}.sib.pos={}", t.ppos));
        }
    }

    out.push(format!(
        "relpos={}",
        relative_position(predicate, candidate)
    ));
    let (lo, hi) = (predicate.min(candidate), predicate.max(candidate));
    let between: Vec<&str> = ((lo + 1)..hi)
        .map(|id| sentence.token(id).ppos.as_str())
        .collect();
    out.push(format!("between.pos={}", between.join("+")));

    Ok(out)
}

/// Binary feature set for a (predicate, candidate) pair. Unseen strings are
/// added to an unfrozen dictionary and dropped by a frozen one.
pub fn extract_binary_features(
    sentence: &Sentence,
    tree: &DepTree,
    predicate: usize,
    candidate: usize,
    dict: &mut FeatureDict,
) -> Result<BinaryFeatureSet> {
    let strings = feature_strings(sentence, tree, predicate, candidate)?;
    Ok(dict.encode_mut(&strings))
}

/// Reserved path-vocabulary entries.
pub const UNK_WORD: u32 = 0;
pub const UNK_REL: u32 = 1;
pub const UNK_POS: u32 = 2;
const RESERVED: [&str; 3] = ["<unk-word>", "<unk-rel>", "<unk-pos>"];

fn item_key(item: &PathItem) -> String {
    match item {
        PathItem::Pos(p) => format!("pos:{p}"),
        PathItem::Word(w) => format!("word:{w}"),
        PathItem::Rel(r, d) => format!("rel:{}{}", r, d.arrow()),
    }
}

fn unknown_index(item: &PathItem) -> u32 {
    match item {
        PathItem::Pos(_) => UNK_POS,
        PathItem::Word(_) => UNK_WORD,
        PathItem::Rel(..) => UNK_REL,
    }
}

/// Empty path-item vocabulary holding only the reserved unknown entries.
pub fn new_path_vocab() -> FeatureDict {
    let mut dict = FeatureDict::new();
    for r in RESERVED {
        dict.insert(r);
    }
    dict
}

/// Counts path items over training paths and builds a frozen vocabulary in
/// which words seen fewer than `cutoff` times are left out.
#[derive(Clone, Debug, Default)]
pub struct PathVocabBuilder {
    counts: HashMap<String, usize>,
    order: Vec<String>,
}

impl PathVocabBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: &PathSequence) {
        for item in &path.items {
            let key = item_key(item);
            let count = self.counts.entry(key.clone()).or_insert(0);
            if *count == 0 {
                self.order.push(key);
            }
            *count += 1;
        }
    }

    pub fn build(&self, cutoff: usize) -> FeatureDict {
        let mut dict = new_path_vocab();
        for key in &self.order {
            if key.starts_with("word:") && self.counts[key] < cutoff {
                continue;
            }
            dict.insert(key);
        }
        dict.freeze();
        dict
    }
}

/// One vocabulary index per path item. Items missing from a frozen
/// vocabulary map to the reserved unknown entry of their kind.
pub fn encode_path_items(path: &PathSequence, dict: &mut FeatureDict) -> Vec<usize> {
    path.items
        .iter()
        .map(|item| {
            dict.lookup_or_insert(&item_key(item))
                .unwrap_or_else(|| unknown_index(item)) as usize
        })
        .collect()
}

/// Encoding through a frozen vocabulary without mutable access.
pub fn encode_path_items_frozen(path: &PathSequence, dict: &FeatureDict) -> Vec<usize> {
    path.items
        .iter()
        .map(|item| {
            dict.get(&item_key(item))
                .unwrap_or_else(|| unknown_index(item)) as usize
        })
        .collect()
}
