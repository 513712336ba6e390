//! `pathsrl` command-line interface.
//!
//! Exit codes: 0 success, 2 invalid configuration or usage, 3 I/O failure,
//! 4 invalid input data, model bundle or corpus alignment.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pathsrl::conll::{read_corpus_file, write_corpus_file};
use pathsrl::eval::{
    f1_by_sentence_length, recall_by_path_frequency, report_by_category_and_role, score,
};
use pathsrl::neural::Ablation;
use pathsrl::search::{best_config, random_search, SearchSpace};
use pathsrl::srl::{dump_embeddings, label_corpus, train_bundle, Bundle, LabelOptions};
use pathsrl::synth::{example_sentence, generate};
use pathsrl::{Error, SystemConfig};

#[derive(Parser)]
#[command(
    name = "pathsrl",
    version,
    about = "Dependency-path LSTM semantic role labeler"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model bundle.
    Train(TrainArgs),
    /// Label a CoNLL-2009 file with a trained bundle.
    Label(LabelArgs),
    /// Score predictions against gold annotation.
    Evaluate(EvaluateArgs),
    /// Random search over network hyperparameters.
    Search(SearchArgs),
    /// Export path embeddings of identified arguments.
    DumpEmbeddings(DumpArgs),
    /// Write a corpus from the built-in toy grammar.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file (`key = value` lines, `[network]` sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed; overrides the configuration file.
    #[arg(long, env = "PATHSRL_SEED")]
    seed: Option<u64>,
    /// Override one setting, e.g. `rerank_n=8` or `cls-verb.alpha=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Threads for independent work; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum AblateArg {
    Path,
    Binary,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    /// Development corpus for per-epoch dev scores and model selection.
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Bundle directory to write.
    #[arg(long, short)]
    output: PathBuf,
    /// Switch off one input pathway.
    #[arg(long)]
    ablate: Option<AblateArg>,
    /// Do not train a reranker.
    #[arg(long)]
    no_reranker: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct LabelArgs {
    /// Bundle directory.
    #[arg(long, short)]
    model: PathBuf,
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
    /// Use the local structure instead of the reranker.
    #[arg(long)]
    no_reranker: bool,
    /// Take predicate positions from the input's FILLPRED column.
    #[arg(long)]
    gold_predicates: bool,
    /// Beam size of the reranker; defaults to the bundle's setting.
    #[arg(long)]
    rerank_n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ReportKind {
    Overall,
    PathFreq,
    SentLen,
    RoleTable,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Table,
    Kv,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    predicted: PathBuf,
    /// Training corpus; required by the path-frequency report.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Reports to print, in order.
    #[arg(long, value_delimiter = ',', default_value = "overall")]
    report: Vec<ReportKind>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    /// Search-space file; defaults to the full ranges.
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    /// Write the best configuration here.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long, short)]
    model: PathBuf,
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long)]
    gold_predicates: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Drop this many sentences from the start of the stream.
    #[arg(long, default_value_t = 0)]
    skip: usize,
    #[arg(long, default_value_t = pathsrl::synth::FIXTURE_SEED)]
    seed: u64,
    /// Write the single running-example sentence instead.
    #[arg(long)]
    example_sentence: bool,
}

/// Error with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => 2,
            Error::Io(_) => 3,
            _ => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 3,
        message: format!("{}: {e}", path.display()),
    }
}

type CliResult = Result<(), Failure>;

fn read(path: &Path) -> Result<Vec<pathsrl::Sentence>, Failure> {
    read_corpus_file(path).map_err(|e| match e {
        Error::Io(io) => io_failure(path, io),
        other => Failure {
            code: 4,
            message: format!("{}: {other}", path.display()),
        },
    })
}

fn write_text(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| io_failure(path, e))
}

/// `cls-verb.alpha=0.01` becomes a `[cls-verb]` section line.
fn override_text(setting: &str) -> Result<String, Failure> {
    let (key, value) = setting.split_once('=').ok_or_else(|| Failure {
        code: 2,
        message: format!("--set expects KEY=VALUE, got {setting:?}"),
    })?;
    Ok(match key.split_once('.') {
        Some((section, key)) => format!("[{section}]\n{key} = {value}\n"),
        None => format!("{key} = {value}\n"),
    })
}

fn load_config(args: &ConfigArgs) -> Result<SystemConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            SystemConfig::from_str_with_defaults(&text)?
        }
        None => SystemConfig::default(),
    };
    for s in &args.set {
        config.apply_str(&override_text(s)?)?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    for w in config.validate()? {
        eprintln!("warning: {w}");
    }
    Ok(config)
}

fn cmd_train(args: TrainArgs) -> CliResult {
    let mut config = load_config(&args.config)?;
    match args.ablate {
        Some(AblateArg::Path) => config.ablation = Ablation::parse("path").expect("known ablation"),
        Some(AblateArg::Binary) => {
            config.ablation = Ablation::parse("binary").expect("known ablation")
        }
        None => {}
    }
    if args.no_reranker {
        config.rerank_n = 1;
    }
    let train = read(&args.train)?;
    let dev = args.dev.as_deref().map(read).transpose()?;
    let bundle = train_bundle(&train, dev.as_deref(), &config, args.config.jobs)?;
    bundle.save(&args.output).map_err(|e| match e {
        Error::Io(io) => io_failure(&args.output, io),
        other => other.into(),
    })?;
    for line in &bundle.log {
        if !line.contains(" epoch=") {
            eprintln!("{line}");
        }
    }
    Ok(())
}

fn cmd_label(args: LabelArgs) -> CliResult {
    let bundle = Bundle::load(&args.model)?;
    let input = read(&args.input)?;
    let mut options = LabelOptions::from_config(&bundle.config);
    options.gold_predicates = args.gold_predicates;
    options.use_reranker = !args.no_reranker;
    if let Some(n) = args.rerank_n {
        if n == 0 {
            return Err(Error::Config("--rerank-n must be at least 1".into()).into());
        }
        options.rerank_n = n;
    }
    let output = label_corpus(&input, &bundle, &options, args.jobs)?;
    write_corpus_file(&output, &args.output).map_err(|e| match e {
        Error::Io(io) => io_failure(&args.output, io),
        other => other.into(),
    })
}

fn cmd_evaluate(args: EvaluateArgs) -> CliResult {
    let gold = read(&args.gold)?;
    let predicted = read(&args.predicted)?;
    let train = args.train.as_deref().map(read).transpose()?;
    let mut out = String::new();
    for kind in &args.report {
        let text = match kind {
            ReportKind::Overall => {
                let r = score(&gold, &predicted)?;
                match args.format {
                    Format::Table => r.to_table(),
                    Format::Kv => r.to_kv(),
                }
            }
            ReportKind::PathFreq => {
                let train = train.as_deref().ok_or_else(|| Failure {
                    code: 2,
                    message: "the path-freq report needs --train".into(),
                })?;
                let r = recall_by_path_frequency(&gold, &predicted, train)?;
                match args.format {
                    Format::Table => {
                        r.to_table("Recall by training frequency of the path", "path frequency")
                    }
                    Format::Kv => r.to_kv("path_freq"),
                }
            }
            ReportKind::SentLen => {
                let r = f1_by_sentence_length(&gold, &predicted)?;
                match args.format {
                    Format::Table => r.to_table("Results by sentence length", "length"),
                    Format::Kv => r.to_kv("sent_len"),
                }
            }
            ReportKind::RoleTable => {
                let r = report_by_category_and_role(&gold, &predicted)?;
                match args.format {
                    Format::Table => r.to_table("Results by predicate category and role", "role"),
                    Format::Kv => r.to_kv("role"),
                }
            }
        };
        if !out.is_empty() && args.format == Format::Table {
            out.push('\n');
        }
        out.push_str(&text);
    }
    print!("{out}");
    Ok(())
}

fn cmd_search(args: SearchArgs) -> CliResult {
    let base = load_config(&args.config)?;
    let space = match &args.space {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            SearchSpace::parse(&text)?
        }
        None => SearchSpace::default(),
    };
    let train = read(&args.train)?;
    let dev = read(&args.dev)?;
    let results = random_search(
        &train,
        &dev,
        &base,
        &space,
        args.iterations,
        args.config.jobs,
    )?;
    let mut out = String::new();
    for r in &results {
        for (rank, (trial, c, score)) in r.trials.iter().enumerate() {
            out.push_str(&format!(
                "network={} rank={} trial={} dev_score={score:.2} alpha={} dropout={} embed={} hidden={} forget_gate={} memory_to_gates={}\n",
                r.kind.name(),
                rank + 1,
                trial + 1,
                c.alpha,
                c.dropout,
                c.embed_dim,
                c.hidden_dim,
                c.use_forget_gate,
                c.memory_to_gates
            ));
        }
    }
    print!("{out}");
    if let Some(path) = &args.output {
        write_text(path, &best_config(&base, &results).to_config_string())?;
    }
    Ok(())
}

fn cmd_dump(args: DumpArgs) -> CliResult {
    let bundle = Bundle::load(&args.model)?;
    let input = read(&args.input)?;
    let mut options = LabelOptions::from_config(&bundle.config);
    options.gold_predicates = args.gold_predicates;
    let rows = dump_embeddings(&input, &bundle, &options)?;
    let mut text = String::new();
    for row in rows {
        text.push_str(&row.to_line());
        text.push('\n');
    }
    write_text(&args.output, &text)
}

fn cmd_generate(args: GenerateArgs) -> CliResult {
    let corpus = if args.example_sentence {
        vec![example_sentence()]
    } else {
        generate(args.seed, args.skip + args.count).split_off(args.skip)
    };
    write_corpus_file(&corpus, &args.output).map_err(|e| match e {
        Error::Io(io) => io_failure(&args.output, io),
        other => other.into(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Label(a) => cmd_label(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Search(a) => cmd_search(a),
        Command::DumpEmbeddings(a) => cmd_dump(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
