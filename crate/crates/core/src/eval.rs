//! Labeled semantic precision, recall and F1 with diagnostic breakdowns.
//!
//! Scored units are predicate senses (correct when the PRED strings agree
//! at the same token) and (predicate, argument, role) triples (correct on
//! exact match). Percentages are 0 when undefined.
//!
//! Machine-readable output uses one `key=value` per line:
//!
//! ```text
//! overall.correct=2
//! overall.predicted=3
//! overall.gold=3
//! overall.precision=66.67
//! overall.recall=66.67
//! overall.f1=66.67
//! sent_len.1-10.f1=66.67
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::config::Category;
use crate::conll::Sentence;
use crate::deptree::DepTree;
use crate::error::{Error, Result};

/// Unit counts with derived percentages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        if self.predicted == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.predicted as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.gold as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn add(&mut self, other: &Counts) {
        self.correct += other.correct;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }

    fn kv(&self, prefix: &str, out: &mut String) {
        let _ = writeln!(out, "{prefix}.correct={}", self.correct);
        let _ = writeln!(out, "{prefix}.predicted={}", self.predicted);
        let _ = writeln!(out, "{prefix}.gold={}", self.gold);
        let _ = writeln!(out, "{prefix}.precision={:.2}", self.precision());
        let _ = writeln!(out, "{prefix}.recall={:.2}", self.recall());
        let _ = writeln!(out, "{prefix}.f1={:.2}", self.f1());
    }
}

/// Named sub-reports in a fixed order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BucketReport {
    pub buckets: Vec<(String, Counts)>,
}

impl BucketReport {
    pub fn total(&self) -> Counts {
        let mut c = Counts::default();
        for (_, b) in &self.buckets {
            c.add(b);
        }
        c
    }

    pub fn get(&self, name: &str) -> Option<&Counts> {
        self.buckets.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn to_kv(&self, prefix: &str) -> String {
        let mut out = String::new();
        for (name, c) in &self.buckets {
            c.kv(&format!("{prefix}.{name}"), &mut out);
        }
        out
    }

    pub fn to_table(&self, title: &str, first_column: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{title}");
        let _ = writeln!(
            out,
            "{first_column:<14} {:>8} {:>8} {:>8} {:>7} {:>7} {:>7}",
            "correct", "pred", "gold", "P", "R", "F1"
        );
        for (name, c) in &self.buckets {
            let _ = writeln!(
                out,
                "{name:<14} {:>8} {:>8} {:>8} {:>7.2} {:>7.2} {:>7.2}",
                c.correct,
                c.predicted,
                c.gold,
                c.precision(),
                c.recall(),
                c.f1()
            );
        }
        out
    }
}

/// Overall labeled score.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreReport {
    pub overall: Counts,
    /// Sense units only.
    pub senses: Counts,
    /// Argument triples only.
    pub arguments: Counts,
}

impl ScoreReport {
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        self.overall.kv("overall", &mut out);
        self.senses.kv("senses", &mut out);
        self.arguments.kv("arguments", &mut out);
        out
    }

    pub fn to_table(&self) -> String {
        BucketReport {
            buckets: vec![
                ("overall".into(), self.overall),
                ("senses".into(), self.senses),
                ("arguments".into(), self.arguments),
            ],
        }
        .to_table("Labeled semantic score", "units")
    }
}

type Triple = (usize, usize, String);

/// Sense units and argument triples of one sentence.
fn units(s: &Sentence) -> (Vec<(usize, &str)>, Vec<Triple>) {
    let preds = s.predicate_ids();
    let senses = preds
        .iter()
        .map(|&p| (p, s.token(p).pred.as_str()))
        .collect();
    let mut triples = Vec::new();
    for (col, &p) in preds.iter().enumerate() {
        for (a, role) in s.arguments(col) {
            triples.push((p, a, role.to_owned()));
        }
    }
    (senses, triples)
}

fn check_alignment(gold: &[Sentence], predicted: &[Sentence]) -> Result<()> {
    if gold.len() != predicted.len() {
        return Err(Error::Alignment(format!(
            "gold has {} sentences, predictions have {}",
            gold.len(),
            predicted.len()
        )));
    }
    for (i, (g, p)) in gold.iter().zip(predicted).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Alignment(format!(
                "sentence {}: {} gold tokens vs {} predicted",
                i + 1,
                g.len(),
                p.len()
            )));
        }
        for (gt, pt) in g.tokens.iter().zip(&p.tokens) {
            if gt.form != pt.form {
                return Err(Error::Alignment(format!(
                    "sentence {}, token {}: form {:?} vs {:?}",
                    i + 1,
                    gt.id,
                    gt.form,
                    pt.form
                )));
            }
        }
    }
    Ok(())
}

/// (sense counts, argument counts) of one aligned sentence pair.
fn sentence_counts(gold: &Sentence, predicted: &Sentence) -> (Counts, Counts) {
    let (gs, gt) = units(gold);
    let (ps, pt) = units(predicted);
    let gold_senses: HashMap<usize, &str> = gs.iter().copied().collect();
    let senses = Counts {
        correct: ps
            .iter()
            .filter(|(id, s)| gold_senses.get(id) == Some(s))
            .count(),
        predicted: ps.len(),
        gold: gs.len(),
    };
    let gold_triples: HashSet<&Triple> = gt.iter().collect();
    let args = Counts {
        correct: pt.iter().filter(|t| gold_triples.contains(t)).count(),
        predicted: pt.len(),
        gold: gt.len(),
    };
    (senses, args)
}

/// Labeled semantic score of aligned corpora.
pub fn score(gold: &[Sentence], predicted: &[Sentence]) -> Result<ScoreReport> {
    check_alignment(gold, predicted)?;
    let mut report = ScoreReport::default();
    for (g, p) in gold.iter().zip(predicted) {
        let (s, a) = sentence_counts(g, p);
        report.senses.add(&s);
        report.arguments.add(&a);
    }
    report.overall = report.senses;
    report.overall.add(&report.arguments);
    Ok(report)
}

/// Frequency bucket names, in order.
pub const PATH_FREQ_BUCKETS: [&str; 6] =
    ["0", "1-10", "11-100", "101-1000", "1001-10000", ">10000"];

pub fn path_freq_bucket(count: usize) -> &'static str {
    match count {
        0 => PATH_FREQ_BUCKETS[0],
        1..=10 => PATH_FREQ_BUCKETS[1],
        11..=100 => PATH_FREQ_BUCKETS[2],
        101..=1000 => PATH_FREQ_BUCKETS[3],
        1001..=10000 => PATH_FREQ_BUCKETS[4],
        _ => PATH_FREQ_BUCKETS[5],
    }
}

/// Direction-tagged relation path of a pair, or a marker when the tokens
/// lie in different trees.
fn path_key(tree: &DepTree, from: usize, to: usize) -> String {
    tree.relation_path(from, to)
        .unwrap_or_else(|_| "<no-path>".to_owned())
}

/// Training frequency of each unlexicalized predicate-argument path.
pub fn path_counts(training: &[Sentence]) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for s in training {
        let tree = DepTree::from_sentence(s);
        for (col, p) in s.predicate_ids().into_iter().enumerate() {
            for (a, _) in s.arguments(col) {
                *counts.entry(path_key(&tree, p, a)).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Argument recall grouped by how often the gold argument's path occurs
/// among training arguments. Buckets partition the gold arguments, and
/// every predicted argument is counted in the bucket of its own path so
/// that the predicted counts partition as well. Empty buckets are left
/// out.
pub fn recall_by_path_frequency(
    gold: &[Sentence],
    predicted: &[Sentence],
    training: &[Sentence],
) -> Result<BucketReport> {
    check_alignment(gold, predicted)?;
    let counts = path_counts(training);
    let mut buckets = vec![Counts::default(); PATH_FREQ_BUCKETS.len()];
    let bucket_of = |tree: &DepTree, p: usize, a: usize| -> usize {
        let n = counts.get(&path_key(tree, p, a)).copied().unwrap_or(0);
        PATH_FREQ_BUCKETS
            .iter()
            .position(|b| *b == path_freq_bucket(n))
            .unwrap()
    };
    for (g, p) in gold.iter().zip(predicted) {
        let tree = DepTree::from_sentence(g);
        let (_, gt) = units(g);
        let (_, pt) = units(p);
        let gold_set: HashSet<&Triple> = gt.iter().collect();
        for t in &gt {
            buckets[bucket_of(&tree, t.0, t.1)].gold += 1;
        }
        for t in &pt {
            let b = bucket_of(&tree, t.0, t.1);
            buckets[b].predicted += 1;
            if gold_set.contains(t) {
                buckets[b].correct += 1;
            }
        }
    }
    Ok(BucketReport {
        buckets: PATH_FREQ_BUCKETS
            .iter()
            .zip(buckets)
            .filter(|(_, c)| c.gold + c.predicted > 0)
            .map(|(n, c)| (n.to_string(), c))
            .collect(),
    })
}

pub const SENT_LEN_BUCKETS: [&str; 6] = ["1-10", "11-15", "16-20", "21-25", "26-30", "31-"];

pub fn sent_len_bucket(len: usize) -> &'static str {
    match len {
        0..=10 => SENT_LEN_BUCKETS[0],
        11..=15 => SENT_LEN_BUCKETS[1],
        16..=20 => SENT_LEN_BUCKETS[2],
        21..=25 => SENT_LEN_BUCKETS[3],
        26..=30 => SENT_LEN_BUCKETS[4],
        _ => SENT_LEN_BUCKETS[5],
    }
}

/// Labeled score (senses and arguments) per sentence-length bucket; empty
/// buckets are left out.
pub fn f1_by_sentence_length(gold: &[Sentence], predicted: &[Sentence]) -> Result<BucketReport> {
    check_alignment(gold, predicted)?;
    let mut buckets = vec![Counts::default(); SENT_LEN_BUCKETS.len()];
    let mut seen = vec![false; SENT_LEN_BUCKETS.len()];
    for (g, p) in gold.iter().zip(predicted) {
        let i = SENT_LEN_BUCKETS
            .iter()
            .position(|b| *b == sent_len_bucket(g.len()))
            .unwrap();
        let (s, a) = sentence_counts(g, p);
        buckets[i].add(&s);
        buckets[i].add(&a);
        seen[i] = true;
    }
    Ok(BucketReport {
        buckets: SENT_LEN_BUCKETS
            .iter()
            .zip(buckets)
            .zip(seen)
            .filter(|(_, seen)| *seen)
            .map(|((n, c), _)| (n.to_string(), c))
            .collect(),
    })
}

/// Role groups of the category table; `other` holds what the first four
/// miss so that the table partitions all arguments.
pub const ROLE_GROUPS: [&str; 5] = ["A0", "A1", "A2", "AM", "other"];

pub fn role_group(label: &str) -> &'static str {
    match label {
        "A0" => "A0",
        "A1" => "A1",
        "A2" => "A2",
        l if l.starts_with("AM") => "AM",
        _ => "other",
    }
}

/// Argument precision and recall per predicate category and role group.
/// Rows are named `verb.A0`, `noun.AM`, and so on; all ten rows are
/// present.
pub fn report_by_category_and_role(
    gold: &[Sentence],
    predicted: &[Sentence],
) -> Result<BucketReport> {
    check_alignment(gold, predicted)?;
    let categories = [Category::Verb, Category::Noun];
    let mut cells = vec![Counts::default(); categories.len() * ROLE_GROUPS.len()];
    let cell = |s: &Sentence, pred: usize, label: &str| -> usize {
        let c = Category::of_pos(&s.token(pred).ppos);
        let ci = categories.iter().position(|x| *x == c).unwrap();
        let ri = ROLE_GROUPS
            .iter()
            .position(|r| *r == role_group(label))
            .unwrap();
        ci * ROLE_GROUPS.len() + ri
    };
    for (g, p) in gold.iter().zip(predicted) {
        let (_, gt) = units(g);
        let (_, pt) = units(p);
        let gold_set: HashSet<&Triple> = gt.iter().collect();
        for t in &gt {
            cells[cell(g, t.0, &t.2)].gold += 1;
        }
        for t in &pt {
            let i = cell(g, t.0, &t.2);
            cells[i].predicted += 1;
            if gold_set.contains(t) {
                cells[i].correct += 1;
            }
        }
    }
    let mut buckets = Vec::new();
    for (ci, c) in categories.iter().enumerate() {
        for (ri, r) in ROLE_GROUPS.iter().enumerate() {
            buckets.push((
                format!("{}.{}", c.name(), r),
                cells[ci * ROLE_GROUPS.len() + ri],
            ));
        }
    }
    Ok(BucketReport { buckets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::Token;

    fn example(frames: Vec<(usize, &str, Vec<(usize, &str)>)>) -> Sentence {
        let mut s = Sentence::new(vec![
            Token::new(1, "He", "he", "PRP", 2, "SBJ"),
            Token::new(2, "had", "have", "VBD", 0, "ROOT"),
            Token::new(3, "trouble", "trouble", "NN", 2, "OBJ"),
            Token::new(4, "raising", "raise", "VBG", 3, "NMOD"),
            Token::new(5, "funds", "fund", "NNS", 4, "OBJ"),
        ]);
        s.set_annotation(
            frames
                .into_iter()
                .map(|(p, sense, args)| {
                    (
                        p,
                        sense.to_owned(),
                        args.into_iter().map(|(a, r)| (a, r.to_owned())).collect(),
                    )
                })
                .collect(),
        );
        s
    }

    #[test]
    fn two_thirds_example() {
        let gold = example(vec![(4, "raise.01", vec![(1, "A0"), (5, "A1")])]);
        let pred = example(vec![(4, "raise.01", vec![(1, "A0"), (2, "A2")])]);
        let r = score(&[gold], &[pred]).unwrap();
        assert_eq!(
            (r.overall.correct, r.overall.predicted, r.overall.gold),
            (2, 3, 3)
        );
        assert!((r.overall.f1() - 66.67).abs() < 0.01);
        assert!((r.overall.precision() - 66.67).abs() < 0.01);
    }

    #[test]
    fn empty_predictions() {
        let gold = example(vec![(4, "raise.01", vec![(1, "A0")])]);
        let pred = example(vec![]);
        let r = score(&[gold], &[pred]).unwrap();
        assert_eq!(r.overall.precision(), 0.0);
        assert_eq!(r.overall.recall(), 0.0);
        assert_eq!(r.overall.f1(), 0.0);
    }

    #[test]
    fn misaligned_corpora() {
        let a = example(vec![]);
        let mut b = a.clone();
        b.tokens[0].form = "She".into();
        assert!(matches!(
            score(&[a.clone()], &[b]),
            Err(Error::Alignment(_))
        ));
        assert!(score(&[a], &[]).is_err());
    }

    #[test]
    fn breakdowns_partition() {
        let gold = example(vec![
            (4, "raise.01", vec![(1, "A0"), (5, "A1")]),
            (2, "have.03", vec![(1, "A0")]),
        ]);
        let pred = example(vec![(4, "raise.01", vec![(1, "A0"), (2, "AM-TMP")])]);
        let overall = score(&[gold.clone()], &[pred.clone()]).unwrap();

        let pf =
            recall_by_path_frequency(&[gold.clone()], &[pred.clone()], &[gold.clone()]).unwrap();
        assert_eq!(pf.total(), overall.arguments);
        assert_eq!(pf.get("1-10").unwrap().gold, 3);

        let unseen = recall_by_path_frequency(&[gold.clone()], &[pred.clone()], &[]).unwrap();
        assert_eq!(unseen.buckets.len(), 1);
        assert_eq!(unseen.get("0").unwrap().gold, 3);

        let sl = f1_by_sentence_length(&[gold.clone()], &[pred.clone()]).unwrap();
        assert_eq!(sl.buckets.len(), 1);
        assert_eq!(sl.total(), overall.overall);

        let table = report_by_category_and_role(&[gold], &[pred]).unwrap();
        assert_eq!(table.total(), overall.arguments);
        assert_eq!(table.get("verb.A0").unwrap().correct, 1);
        assert_eq!(table.get("verb.AM").unwrap().predicted, 1);
    }

    #[test]
    fn bucket_edges() {
        assert_eq!(sent_len_bucket(10), "1-10");
        assert_eq!(sent_len_bucket(11), "11-15");
        assert_eq!(sent_len_bucket(30), "26-30");
        assert_eq!(sent_len_bucket(31), "31-");
        assert_eq!(path_freq_bucket(0), "0");
        assert_eq!(path_freq_bucket(10), "1-10");
        assert_eq!(path_freq_bucket(100), "11-100");
        assert_eq!(path_freq_bucket(10000), "1001-10000");
        assert_eq!(path_freq_bucket(10001), ">10000");
        assert_eq!(role_group("AM-LOC"), "AM");
        assert_eq!(role_group("C-A1"), "other");
    }

    #[test]
    fn kv_output() {
        let gold = example(vec![(4, "raise.01", vec![(1, "A0")])]);
        let r = score(&[gold.clone()], &[gold]).unwrap();
        let kv = r.to_kv();
        assert!(kv.contains("overall.f1=100.00\n"));
        assert!(kv.lines().all(|l| l.contains('=')));
    }
}
