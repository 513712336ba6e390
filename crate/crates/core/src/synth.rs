//! Toy-grammar corpus generator for end-to-end tests.
//!
//! Sentences use PTB-style tags and five roles (A0, A1, A2, AM-TMP,
//! AM-LOC) over verbal and nominal predicates. Two constructions are built
//! so that each input pathway carries information the other lacks:
//!
//! * double objects ("gave the clerk the book"): both objects attach as
//!   OBJ with the same path; only word order (a binary feature) separates
//!   the A2 from the A1.
//! * gerund complements ("he avoided washing" vs "the car needed
//!   washing"): the subject is the A0 of the gerund under control verbs and
//!   its A1 under verbs of need. The governing verb is the only cue, and it
//!   appears only in the lexicalized path.
//!
//! Gerunds modifying a noun under control verbs ("he had trouble raising
//! funds") follow the pattern of the running example.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conll::{Sentence, Token};

/// Seed of the bundled fixture corpus.
pub const FIXTURE_SEED: u64 = 2016;
pub const TRAIN_SIZE: usize = 200;
pub const HELDOUT_SIZE: usize = 50;

/// (form, lemma, sense)
const TRANSITIVE: &[(&str, &str, &str)] = &[
    ("bought", "buy", "buy.01"),
    ("sold", "sell", "sell.01"),
    ("saw", "see", "see.01"),
    ("found", "find", "find.01"),
    ("built", "build", "build.01"),
    ("ran", "run", "run.01"),
];
const INTRANSITIVE: &[(&str, &str, &str)] = &[
    ("ran", "run", "run.02"),
    ("slept", "sleep", "sleep.01"),
    ("arrived", "arrive", "arrive.01"),
    ("waited", "wait", "wait.01"),
];
const DITRANSITIVE: &[(&str, &str, &str)] = &[
    ("gave", "give", "give.01"),
    ("sent", "send", "send.01"),
    ("offered", "offer", "offer.01"),
    ("showed", "show", "show.01"),
];
const CONTROL: &[(&str, &str, &str)] = &[
    ("had", "have", "have.03"),
    ("faced", "face", "face.01"),
    ("avoided", "avoid", "avoid.01"),
];
const SUBJECT_CONTROL: &[(&str, &str, &str)] = &[
    ("avoided", "avoid", "avoid.01"),
    ("enjoyed", "enjoy", "enjoy.01"),
    ("started", "start", "start.01"),
    ("stopped", "stop", "stop.01"),
];
const NEED: &[(&str, &str, &str)] = &[
    ("needed", "need", "need.01"),
    ("deserved", "deserve", "deserve.01"),
    ("required", "require", "require.01"),
];
const COMPLEMENT_GERUNDS: &[(&str, &str, &str)] = &[
    ("washing", "wash", "wash.01"),
    ("painting", "paint", "paint.01"),
    ("checking", "check", "check.01"),
    ("repairing", "repair", "repair.01"),
];
/// (form, lemma, sense, object form, object lemma)
const GERUNDS: &[(&str, &str, &str, &str, &str)] = &[
    ("raising", "raise", "raise.01", "funds", "fund"),
    ("finding", "find", "find.01", "buyers", "buyer"),
    ("selling", "sell", "sell.01", "shares", "share"),
];
const NOMINAL: &[(&str, &str, &str)] = &[
    ("sale", "sale", "sale.01"),
    ("purchase", "purchase", "purchase.01"),
    ("construction", "construction", "construction.01"),
];
const NOUNS: &[&str] = &[
    "house", "car", "book", "company", "clerk", "letter", "boat", "farm",
];
const PEOPLE: &[&str] = &["manager", "teacher", "farmer", "doctor", "clerk"];
const NAMES: &[&str] = &["John", "Mary", "Acme", "Peter", "Susan"];
const PRONOUNS: &[(&str, &str)] = &[("He", "he"), ("She", "she"), ("They", "they")];
const PLACES: &[&str] = &["city", "park", "office", "market"];

/// Incrementally built sentence with its predicate frames.
struct Builder {
    tokens: Vec<Token>,
    frames: Vec<(usize, String, Vec<(usize, String)>)>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            tokens: Vec::new(),
            frames: Vec::new(),
        }
    }

    /// Append a token; its head is set later with [`Builder::attach`].
    fn push(&mut self, form: &str, lemma: &str, pos: &str) -> usize {
        let id = self.tokens.len() + 1;
        self.tokens
            .push(Token::new(id, form, lemma, pos, 0, "ROOT"));
        id
    }

    fn attach(&mut self, id: usize, head: usize, deprel: &str) {
        let t = &mut self.tokens[id - 1];
        t.head = head;
        t.phead = head;
        t.deprel = deprel.to_owned();
        t.pdeprel = deprel.to_owned();
    }

    fn frame(&mut self, pred: usize, sense: &str, args: Vec<(usize, &str)>) {
        let args = args.into_iter().map(|(a, r)| (a, r.to_owned())).collect();
        self.frames.push((pred, sense.to_owned(), args));
    }

    fn finish(self) -> Sentence {
        let mut s = Sentence::new(self.tokens);
        s.set_annotation(self.frames);
        s
    }
}

fn pick<'a, T, R: Rng>(items: &'a [T], rng: &mut R) -> &'a T {
    items.choose(rng).expect("non-empty word list")
}

/// Subject noun phrase at sentence start; returns its head id.
fn subject<R: Rng>(b: &mut Builder, rng: &mut R) -> usize {
    match rng.gen_range(0..3) {
        0 => {
            let (form, lemma) = *pick(PRONOUNS, rng);
            b.push(form, lemma, "PRP")
        }
        1 => {
            let name = *pick(NAMES, rng);
            b.push(name, &name.to_lowercase(), "NNP")
        }
        _ => {
            let det = b.push("The", "the", "DT");
            let noun = *pick(PEOPLE, rng);
            let n = b.push(noun, noun, "NN");
            b.attach(det, n, "NMOD");
            n
        }
    }
}

/// "the NOUN" attached to `head` with `deprel`; returns the noun id.
fn object(b: &mut Builder, head: usize, deprel: &str, noun: &str) -> usize {
    let det = b.push("the", "the", "DT");
    let n = b.push(noun, noun, "NN");
    b.attach(det, n, "NMOD");
    b.attach(n, head, deprel);
    n
}

/// Optional location and time adjuncts of `verb`; returns (id, role) pairs.
fn adjuncts<R: Rng>(b: &mut Builder, verb: usize, rng: &mut R) -> Vec<(usize, &'static str)> {
    let mut out = Vec::new();
    if rng.gen_bool(0.4) {
        let prep = b.push("in", "in", "IN");
        b.attach(prep, verb, "LOC");
        let place = *pick(PLACES, rng);
        object(b, prep, "PMOD", place);
        out.push((prep, "AM-LOC"));
    }
    if rng.gen_bool(0.4) {
        if rng.gen_bool(0.5) {
            let t = b.push("yesterday", "yesterday", "NN");
            b.attach(t, verb, "TMP");
            out.push((t, "AM-TMP"));
        } else {
            let prep = b.push("on", "on", "IN");
            b.attach(prep, verb, "TMP");
            let day = b.push("monday", "monday", "NNP");
            b.attach(day, prep, "PMOD");
            out.push((prep, "AM-TMP"));
        }
    }
    out
}

fn period(b: &mut Builder, root: usize) {
    let p = b.push(".", ".", ".");
    b.attach(p, root, "P");
}

fn transitive<R: Rng>(rng: &mut R) -> Sentence {
    let mut b = Builder::new();
    let subj = subject(&mut b, rng);
    let (form, lemma, sense) = *pick(TRANSITIVE, rng);
    let verb = b.push(form, lemma, "VBD");
    b.attach(subj, verb, "SBJ");
    let obj = object(&mut b, verb, "OBJ", pick(NOUNS, rng));
    let mut args = vec![(subj, "A0"), (obj, "A1")];
    args.extend(adjuncts(&mut b, verb, rng));
    period(&mut b, verb);
    b.frame(verb, sense, args);
    b.finish()
}

fn intransitive<R: Rng>(rng: &mut R) -> Sentence {
    let mut b = Builder::new();
    let subj = subject(&mut b, rng);
    let (form, lemma, sense) = *pick(INTRANSITIVE, rng);
    let verb = b.push(form, lemma, "VBD");
    b.attach(subj, verb, "SBJ");
    let mut args = vec![(subj, "A0")];
    args.extend(adjuncts(&mut b, verb, rng));
    period(&mut b, verb);
    b.frame(verb, sense, args);
    b.finish()
}

fn ditransitive<R: Rng>(rng: &mut R) -> Sentence {
    let mut b = Builder::new();
    let subj = subject(&mut b, rng);
    let (form, lemma, sense) = *pick(DITRANSITIVE, rng);
    let verb = b.push(form, lemma, "VBD");
    b.attach(subj, verb, "SBJ");
    let recipient = object(&mut b, verb, "OBJ", pick(NOUNS, rng));
    let theme = object(&mut b, verb, "OBJ", pick(NOUNS, rng));
    let mut args = vec![(subj, "A0"), (recipient, "A2"), (theme, "A1")];
    args.extend(adjuncts(&mut b, verb, rng));
    period(&mut b, verb);
    b.frame(verb, sense, args);
    b.finish()
}

fn gerund<R: Rng>(rng: &mut R) -> Sentence {
    let mut b = Builder::new();
    let subj = subject(&mut b, rng);
    let (form, lemma, sense) = *pick(CONTROL, rng);
    let verb = b.push(form, lemma, "VBD");
    b.attach(subj, verb, "SBJ");
    let trouble = b.push("trouble", "trouble", "NN");
    b.attach(trouble, verb, "OBJ");
    let (gform, glemma, gsense, oform, olemma) = *pick(GERUNDS, rng);
    let ger = b.push(gform, glemma, "VBG");
    b.attach(ger, trouble, "NMOD");
    let obj = b.push(oform, olemma, "NNS");
    b.attach(obj, ger, "OBJ");
    period(&mut b, verb);
    b.frame(verb, sense, vec![(subj, "A0"), (trouble, "A1")]);
    b.frame(ger, gsense, vec![(subj, "A0"), (obj, "A1")]);
    b.finish()
}

fn gerund_complement<R: Rng>(rng: &mut R) -> Sentence {
    let mut b = Builder::new();
    // Pronoun subjects only, so that every subject and gerund pair occurs
    // under both verb classes.
    let (pform, plemma) = *pick(PRONOUNS, rng);
    let subj = b.push(pform, plemma, "PRP");
    let control = rng.gen_bool(0.5);
    let (form, lemma, sense) = *pick(if control { SUBJECT_CONTROL } else { NEED }, rng);
    let verb = b.push(form, lemma, "VBD");
    b.attach(subj, verb, "SBJ");
    let (gform, glemma, gsense) = *pick(COMPLEMENT_GERUNDS, rng);
    let ger = b.push(gform, glemma, "VBG");
    b.attach(ger, verb, "OBJ");
    period(&mut b, verb);
    b.frame(verb, sense, vec![(subj, "A0"), (ger, "A1")]);
    b.frame(ger, gsense, vec![(subj, if control { "A0" } else { "A1" })]);
    b.finish()
}

fn nominal<R: Rng>(rng: &mut R) -> Sentence {
    let mut b = Builder::new();
    let name = *pick(NAMES, rng);
    let subj = b.push(name, &name.to_lowercase(), "NNP");
    let verb = b.push("reported", "report", "VBD");
    b.attach(subj, verb, "SBJ");
    let (nform, nlemma, nsense) = *pick(NOMINAL, rng);
    let det = b.push("the", "the", "DT");
    let noun = b.push(nform, nlemma, "NN");
    b.attach(det, noun, "NMOD");
    b.attach(noun, verb, "OBJ");
    let mut nargs = Vec::new();
    let of = b.push("of", "of", "IN");
    b.attach(of, noun, "NMOD");
    object(&mut b, of, "PMOD", pick(NOUNS, rng));
    nargs.push((of, "A1"));
    if rng.gen_bool(0.6) {
        let by = b.push("by", "by", "IN");
        b.attach(by, noun, "NMOD");
        let agent = *pick(NAMES, rng);
        let a = b.push(agent, &agent.to_lowercase(), "NNP");
        b.attach(a, by, "PMOD");
        nargs.push((by, "A0"));
    }
    if rng.gen_bool(0.4) {
        let prep = b.push("in", "in", "IN");
        b.attach(prep, noun, "NMOD");
        object(&mut b, prep, "PMOD", pick(PLACES, rng));
        nargs.push((prep, "AM-LOC"));
    }
    period(&mut b, verb);
    b.frame(verb, "report.01", vec![(subj, "A0"), (noun, "A1")]);
    b.frame(noun, nsense, nargs);
    b.finish()
}

/// One random sentence.
pub fn sentence<R: Rng>(rng: &mut R) -> Sentence {
    match rng.gen_range(0..20) {
        0..=2 => transitive(rng),
        3 => intransitive(rng),
        4..=6 => ditransitive(rng),
        7..=8 => gerund(rng),
        9..=16 => gerund_complement(rng),
        _ => nominal(rng),
    }
}

/// `count` sentences from a fixed seed.
pub fn generate(seed: u64, count: usize) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sentence(&mut rng)).collect()
}

/// The bundled fixture split: (training, held-out).
pub fn fixture_corpus() -> (Vec<Sentence>, Vec<Sentence>) {
    let mut all = generate(FIXTURE_SEED, TRAIN_SIZE + HELDOUT_SIZE);
    let heldout = all.split_off(TRAIN_SIZE);
    (all, heldout)
}

/// "He had trouble raising funds ." with both predicates annotated.
pub fn example_sentence() -> Sentence {
    let mut b = Builder::new();
    let he = b.push("He", "he", "PRP");
    let had = b.push("had", "have", "VBD");
    let trouble = b.push("trouble", "trouble", "NN");
    let raising = b.push("raising", "raise", "VBG");
    let funds = b.push("funds", "fund", "NNS");
    b.attach(he, had, "SBJ");
    b.attach(trouble, had, "OBJ");
    b.attach(raising, trouble, "NMOD");
    b.attach(funds, raising, "OBJ");
    period(&mut b, had);
    b.frame(had, "have.03", vec![(he, "A0"), (trouble, "A1")]);
    b.frame(raising, "raise.01", vec![(he, "A0"), (funds, "A1")]);
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentences_are_valid_trees() {
        for s in generate(5, 300) {
            s.validate().unwrap();
            assert_eq!(s.tokens.iter().filter(|t| t.phead == 0).count(), 1);
        }
        example_sentence().validate().unwrap();
    }

    #[test]
    fn generation_is_seeded() {
        assert_eq!(generate(9, 20), generate(9, 20));
        assert_ne!(generate(9, 20), generate(10, 20));
    }

    #[test]
    fn covers_roles_and_categories() {
        let corpus = generate(FIXTURE_SEED, TRAIN_SIZE);
        let mut roles = std::collections::BTreeSet::new();
        let mut noun_preds = 0;
        for s in &corpus {
            for (col, p) in s.predicate_ids().into_iter().enumerate() {
                if s.token(p).ppos.starts_with('N') {
                    noun_preds += 1;
                }
                for (_, r) in s.arguments(col) {
                    roles.insert(r.to_owned());
                }
            }
        }
        assert_eq!(
            roles.into_iter().collect::<Vec<_>>(),
            ["A0", "A1", "A2", "AM-LOC", "AM-TMP"]
        );
        assert!(noun_preds > 10);
    }
}
