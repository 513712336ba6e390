use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pathsrl::conll::read_corpus_file;

const QUICK: [&str; 6] = [
    "--set",
    "epochs=2",
    "--set",
    "rerank_n=2",
    "--set",
    "reranker_epochs=1",
];

fn pathsrl() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pathsrl"));
    cmd.env_remove("PATHSRL_SEED");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn generate(dir: &Path, name: &str, count: usize, skip: usize) -> PathBuf {
    let path = dir.join(name);
    run(pathsrl()
        .args([
            "generate",
            "--count",
            &count.to_string(),
            "--skip",
            &skip.to_string(),
            "-o",
        ])
        .arg(&path));
    path
}

fn train_quick(dir: &Path, train: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let model = dir.join(name);
    run(pathsrl()
        .arg("train")
        .arg("--train")
        .arg(train)
        .arg("-o")
        .arg(&model)
        .args(QUICK)
        .args(extra));
    model
}

fn manifest(model: &Path) -> String {
    std::fs::read_to_string(model.join("manifest.txt")).unwrap()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn train_label_evaluate_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let train = generate(tmp.path(), "train.conll", 30, 0);
    let test = generate(tmp.path(), "test.conll", 10, 30);
    let model = train_quick(
        tmp.path(),
        &train,
        "model",
        &["--dev", test.to_str().unwrap(), "--jobs", "2"],
    );
    let labeled = tmp.path().join("labeled.conll");
    run(pathsrl()
        .arg("label")
        .arg("-m")
        .arg(&model)
        .arg("-i")
        .arg(&test)
        .arg("-o")
        .arg(&labeled));
    let output = read_corpus_file(&labeled).unwrap();
    assert_eq!(output.len(), 10);

    let out = run(pathsrl()
        .args([
            "evaluate",
            "--report",
            "overall,path-freq,sent-len,role-table",
            "--format",
            "kv",
            "--gold",
        ])
        .arg(&test)
        .arg("--predicted")
        .arg(&labeled)
        .arg("--train")
        .arg(&train));
    let text = String::from_utf8(out.stdout).unwrap();
    for prefix in [
        "overall.f1=",
        "arguments.f1=",
        "path_freq.",
        "sent_len.",
        "role.",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(prefix)),
            "missing {prefix} in\n{text}"
        );
    }
    assert!(text.lines().all(|l| l.contains('=')));

    let out = run(pathsrl()
        .args(["evaluate", "--gold"])
        .arg(&test)
        .arg("--predicted")
        .arg(&test));
    assert!(String::from_utf8(out.stdout).unwrap().contains("overall"));
}

#[test]
fn gold_predicate_mode_keeps_input_predicates() {
    let tmp = tempfile::tempdir().unwrap();
    let train = generate(tmp.path(), "train.conll", 30, 0);
    let model = train_quick(tmp.path(), &train, "model", &[]);
    let labeled = tmp.path().join("labeled.conll");
    run(pathsrl()
        .arg("label")
        .arg("-m")
        .arg(&model)
        .arg("-i")
        .arg(fixtures().join("predicates-3.conll"))
        .arg("-o")
        .arg(&labeled)
        .arg("--gold-predicates")
        .arg("--no-reranker"));
    let gold = read_corpus_file(fixtures().join("predicates-3.conll")).unwrap();
    let out = read_corpus_file(&labeled).unwrap();
    assert_eq!(out[0].predicate_ids(), gold[0].predicate_ids());
}

#[test]
fn seed_comes_from_environment_unless_given() {
    let tmp = tempfile::tempdir().unwrap();
    let train = generate(tmp.path(), "train.conll", 15, 0);
    let from_env = tmp.path().join("env");
    run(pathsrl()
        .env("PATHSRL_SEED", "77")
        .arg("train")
        .arg("--train")
        .arg(&train)
        .arg("-o")
        .arg(&from_env)
        .args(QUICK));
    assert!(manifest(&from_env).lines().any(|l| l == "seed = 77"));

    let from_flag = tmp.path().join("flag");
    run(pathsrl()
        .env("PATHSRL_SEED", "77")
        .arg("train")
        .arg("--train")
        .arg(&train)
        .arg("-o")
        .arg(&from_flag)
        .args(QUICK)
        .args(["--seed", "5"]));
    assert!(manifest(&from_flag).lines().any(|l| l == "seed = 5"));
}

#[test]
fn ablation_is_recorded_in_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let train = generate(tmp.path(), "train.conll", 15, 0);
    let full = train_quick(tmp.path(), &train, "full", &[]);
    let path = train_quick(tmp.path(), &train, "nopath", &["--ablate", "path"]);
    let binary = train_quick(tmp.path(), &train, "nobinary", &["--ablate", "binary"]);
    assert!(manifest(&full).lines().any(|l| l == "ablation = none"));
    assert!(manifest(&path).lines().any(|l| l == "ablation = path"));
    assert!(manifest(&binary).lines().any(|l| l == "ablation = binary"));
}

#[test]
fn training_and_labeling_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let train = generate(tmp.path(), "train.conll", 30, 0);
    let test = generate(tmp.path(), "test.conll", 10, 30);
    let a = train_quick(tmp.path(), &train, "a", &["--jobs", "1"]);
    let b = train_quick(tmp.path(), &train, "b", &["--jobs", "4"]);
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
    let mut outputs = Vec::new();
    for (model, jobs) in [(&a, "1"), (&b, "3")] {
        let out = tmp.path().join(format!("out{jobs}.conll"));
        run(pathsrl()
            .arg("label")
            .arg("-m")
            .arg(model)
            .arg("-i")
            .arg(&test)
            .arg("-o")
            .arg(&out)
            .args(["--jobs", jobs]));
        outputs.push(std::fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn embedding_dump_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let train = generate(tmp.path(), "train.conll", 30, 0);
    let model = train_quick(
        tmp.path(),
        &train,
        "model",
        &[
            "--set",
            "cls-verb.embed=7",
            "--set",
            "cls-noun.embed=7",
            "--set",
            "id-verb.epochs=20",
            "--set",
            "id-noun.epochs=20",
        ],
    );
    let mut dumps = Vec::new();
    for name in ["a.tsv", "b.tsv"] {
        let out = tmp.path().join(name);
        run(pathsrl()
            .arg("dump-embeddings")
            .arg("-m")
            .arg(&model)
            .arg("-i")
            .arg(&train)
            .arg("-o")
            .arg(&out));
        dumps.push(std::fs::read_to_string(out).unwrap());
    }
    assert_eq!(dumps[0], dumps[1]);
    let keys: Vec<(usize, usize, usize)> = dumps[0]
        .lines()
        .map(|line| {
            let fields: Vec<&str> = line.split('\t').collect();
            assert_eq!(fields.len(), 4 + 7, "{line}");
            fields[4..].iter().for_each(|v| {
                v.parse::<f64>().unwrap();
            });
            (
                fields[0].parse().unwrap(),
                fields[1].parse().unwrap(),
                fields[2].parse().unwrap(),
            )
        })
        .collect();
    assert!(!keys.is_empty());
    assert!(keys
        .windows(2)
        .all(|w| w[0].0 < w[1].0 || (w[0].0 == w[1].0 && w[0] != w[1])));
}

#[test]
fn search_with_one_iteration() {
    let tmp = tempfile::tempdir().unwrap();
    let train = generate(tmp.path(), "train.conll", 20, 0);
    let dev = generate(tmp.path(), "dev.conll", 5, 20);
    let best = tmp.path().join("best.cfg");
    let out = run(pathsrl()
        .arg("search")
        .arg("--train")
        .arg(&train)
        .arg("--dev")
        .arg(&dev)
        .args([
            "--iterations",
            "1",
            "--jobs",
            "2",
            "--set",
            "epochs=1",
            "-o",
        ])
        .arg(&best));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
    assert!(text.lines().all(|l| l.contains("rank=1 trial=1 ")));
    let config = std::fs::read_to_string(&best).unwrap();
    for section in ["[id-verb]", "[id-noun]", "[cls-verb]", "[cls-noun]"] {
        assert!(config.contains(section));
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.conll");
    let code = |cmd: &mut Command| cmd.output().unwrap().status.code();

    // usage errors
    assert_eq!(code(pathsrl().arg("frobnicate")), Some(2));
    let train = generate(tmp.path(), "train.conll", 5, 0);
    let model = tmp.path().join("m");
    assert_eq!(
        code(
            pathsrl()
                .arg("train")
                .arg("--train")
                .arg(&train)
                .arg("-o")
                .arg(&model)
                .args(["--set", "epochs=lots"])
        ),
        Some(2)
    );
    assert_eq!(
        code(
            pathsrl()
                .args(["evaluate", "--report", "path-freq", "--gold"])
                .arg(&train)
                .arg("--predicted")
                .arg(&train)
        ),
        Some(2)
    );

    // I/O errors
    assert_eq!(
        code(
            pathsrl()
                .arg("train")
                .arg("--train")
                .arg(&missing)
                .arg("-o")
                .arg(&model)
        ),
        Some(3)
    );

    // malformed data
    let bad = tmp.path().join("bad.conll");
    std::fs::write(&bad, "1\tonly\tthree\n\n").unwrap();
    assert_eq!(
        code(
            pathsrl()
                .arg("evaluate")
                .arg("--gold")
                .arg(&bad)
                .arg("--predicted")
                .arg(&bad)
        ),
        Some(4)
    );
    let other = generate(tmp.path(), "other.conll", 6, 0);
    assert_eq!(
        code(
            pathsrl()
                .arg("evaluate")
                .arg("--gold")
                .arg(&train)
                .arg("--predicted")
                .arg(&other)
        ),
        Some(4)
    );
    std::fs::create_dir(tmp.path().join("empty")).unwrap();
    assert_eq!(
        code(
            pathsrl()
                .arg("label")
                .arg("-m")
                .arg(tmp.path().join("empty"))
                .arg("-i")
                .arg(&train)
                .arg("-o")
                .arg(&bad)
        ),
        Some(4)
    );
    assert_eq!(
        code(
            pathsrl()
                .args(["generate", "-o"])
                .arg(missing.join("out.conll"))
        ),
        Some(3)
    );
}

#[test]
fn example_sentence_through_fixture_model() {
    let tmp = tempfile::tempdir().unwrap();
    let model = tmp.path().join("model");
    run(pathsrl()
        .arg("train")
        .arg("--train")
        .arg(fixtures().join("synthetic-train.conll"))
        .arg("--config")
        .arg(fixtures().join("synthetic.cfg"))
        .args(["--jobs", "4", "-o"])
        .arg(&model));
    let labeled = tmp.path().join("figure1.conll");
    run(pathsrl()
        .arg("label")
        .arg("-m")
        .arg(&model)
        .arg("-i")
        .arg(fixtures().join("figure1.conll"))
        .arg("-o")
        .arg(&labeled));
    let out = read_corpus_file(&labeled).unwrap();
    let s = &out[0];
    let column = s
        .predicate_ids()
        .iter()
        .position(|&p| p == 4)
        .expect("raising is a predicate");
    let args = s.arguments(column);
    assert!(args.contains(&(1, "A0")), "{args:?}");
    assert!(args.contains(&(5, "A1")), "{args:?}");
}
