use pathsrl::conll::{Sentence, Token};
use pathsrl::eval::score;
use pathsrl::logreg::LogRegConfig;
use pathsrl::srl::{label_corpus, label_sentence, Bundle, LabelOptions, PredicateClassifier};
use pathsrl::synth::{fixture_corpus, generate};
use pathsrl::{train_bundle, DepTree, SystemConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quick_config() -> SystemConfig {
    let mut cfg = SystemConfig::default();
    cfg.apply_str("epochs = 3\nrerank_n = 3\nreranker_epochs = 2")
        .unwrap();
    cfg
}

fn quick_bundle() -> (Vec<Sentence>, Bundle) {
    let corpus = generate(11, 40);
    let bundle = train_bundle(&corpus, None, &quick_config(), 2).unwrap();
    (corpus, bundle)
}

#[test]
fn bundle_save_load_round_trip() {
    let (corpus, bundle) = quick_bundle();
    assert!(bundle.reranker.is_some());
    let dir = tempfile::tempdir().unwrap();
    bundle.save(dir.path()).unwrap();
    let back = Bundle::load(dir.path()).unwrap();
    assert_eq!(back, bundle);

    let opts = LabelOptions::from_config(&bundle.config);
    let a = label_corpus(&corpus, &bundle, &opts, 1).unwrap();
    let b = label_corpus(&corpus, &back, &opts, 1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bundle_with_wrong_version_is_rejected() {
    let (_, bundle) = quick_bundle();
    let dir = tempfile::tempdir().unwrap();
    bundle.save(dir.path()).unwrap();
    let manifest = dir.path().join("manifest.txt");
    let text = std::fs::read_to_string(&manifest).unwrap();
    let edited: String = text
        .lines()
        .map(|l| {
            if l.starts_with("version") {
                "version = 999".to_owned()
            } else {
                l.to_owned()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&manifest, edited).unwrap();
    assert!(matches!(
        Bundle::load(dir.path()),
        Err(pathsrl::Error::Model(_))
    ));
}

#[test]
fn labeling_is_independent_of_thread_count() {
    let (corpus, bundle) = quick_bundle();
    let opts = LabelOptions::from_config(&bundle.config);
    let one = label_corpus(&corpus, &bundle, &opts, 1).unwrap();
    let four = label_corpus(&corpus, &bundle, &opts, 4).unwrap();
    assert_eq!(one, four);
}

#[test]
fn gold_predicate_mode_keeps_predicate_positions() {
    let (corpus, bundle) = quick_bundle();
    let mut opts = LabelOptions::from_config(&bundle.config);
    opts.gold_predicates = true;
    for s in &corpus {
        let out = label_sentence(s, &bundle, &opts).unwrap();
        assert_eq!(out.predicate_ids(), s.predicate_ids());
        for (a, b) in out.tokens.iter().zip(&s.tokens) {
            assert_eq!(
                (&a.form, &a.plemma, &a.ppos, a.phead),
                (&b.form, &b.plemma, &b.ppos, b.phead)
            );
        }
    }
}

#[test]
fn input_annotation_does_not_leak_into_output() {
    let (corpus, bundle) = quick_bundle();
    let opts = LabelOptions::from_config(&bundle.config);
    let mut stripped = corpus.clone();
    stripped.iter_mut().for_each(Sentence::clear_annotation);
    assert_eq!(
        label_corpus(&corpus, &bundle, &opts, 1).unwrap(),
        label_corpus(&stripped, &bundle, &opts, 1).unwrap()
    );
}

#[test]
fn predicate_classifier_learns_senses_and_positions() {
    let (train, held) = fixture_corpus();
    let cfg = LogRegConfig {
        alpha: 0.1,
        epochs: 10,
        l2: 0.0,
    };
    let clf = PredicateClassifier::train(&train, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let run = &clf.lemmas["run"];
    assert_eq!(run.senses.len(), 2);
    assert!(run.classifier.is_some());
    assert!(clf.lemmas["give"].classifier.is_none());

    let mut predicted = held.clone();
    for s in &mut predicted {
        let tree = DepTree::from_sentence(s);
        let frames = clf
            .identify(s, &tree)
            .into_iter()
            .map(|p| (p, clf.disambiguate(s, &tree, p), Vec::new()))
            .collect();
        s.set_annotation(frames);
    }
    let report = score(&held, &predicted).unwrap();
    assert!(report.senses.f1() > 95.0, "sense F1 {}", report.senses.f1());
}

#[test]
fn unseen_lemma_falls_back_to_first_sense() {
    let (train, _) = fixture_corpus();
    let clf = PredicateClassifier::train(
        &train,
        &LogRegConfig::default(),
        &mut ChaCha8Rng::seed_from_u64(1),
    )
    .unwrap();
    let mut tokens = vec![
        Token::new(1, "They", "they", "PRP", 2, "SBJ"),
        Token::new(2, "zorked", "zork", "VBD", 0, "ROOT"),
        Token::new(3, ".", ".", ".", 2, "P"),
    ];
    tokens[1].fillpred = true;
    let s = Sentence::new(tokens);
    let tree = DepTree::from_sentence(&s);
    assert_eq!(clf.disambiguate(&s, &tree, 2), "zork.01");
}

#[test]
fn dumped_embeddings_match_the_path_lstm_bit_for_bit() {
    use pathsrl::neural::lstm_forward;
    use pathsrl::srl::dump_embeddings;
    use pathsrl::{Category, NetworkKind, Task};

    let (corpus, bundle) = quick_bundle();
    let mut opts = LabelOptions::from_config(&bundle.config);
    opts.threshold = 0.0;
    let rows = dump_embeddings(&corpus, &bundle, &opts).unwrap();
    assert!(!rows.is_empty());
    let keys: Vec<_> = rows
        .iter()
        .map(|r| (r.sentence, r.predicate, r.argument))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(keys, sorted);
    for row in &rows {
        let s = &corpus[row.sentence - 1];
        let tree = DepTree::from_sentence(s);
        let category = Category::of_pos(&s.token(row.predicate).ppos);
        let model = bundle.model(NetworkKind::new(Task::Classification, category));
        let pair = model.encode(s, &tree, row.predicate, row.argument).unwrap();
        let (e, _) = lstm_forward(&model.network.spec, &model.network.lstm, &pair.path).unwrap();
        assert_eq!(row.embedding, e);
        let line = row.to_line();
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 4 + e.len());
        let parsed: Vec<f64> = fields[4..].iter().map(|v| v.parse().unwrap()).collect();
        assert_eq!(parsed, e);
    }
}
