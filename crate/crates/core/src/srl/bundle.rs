use std::fmt::Write as _;
use std::path::Path;

use crate::config::{NetworkKind, SystemConfig};
use crate::error::{Error, Result};
use crate::model_io::{ModelFile, FORMAT_VERSION};
use crate::rerank::RerankerModel;

use super::model::SrlModel;
use super::predicates::PredicateClassifier;

pub const MANIFEST: &str = "manifest.txt";
pub const CONFIG_FILE: &str = "config.txt";
pub const PREDICATES_FILE: &str = "predicates.model";
pub const RERANKER_FILE: &str = "reranker.model";
pub const LOG_FILE: &str = "train.log";
const BUNDLE_FORMAT: &str = "pathsrl-bundle";

pub fn model_file_name(kind: NetworkKind) -> String {
    format!("{}.model", kind.name())
}

/// A trained system: the four argument networks, the predicate classifier
/// and an optional reranker.
#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub config: SystemConfig,
    /// In [`NetworkKind::ALL`] order.
    pub models: Vec<SrlModel>,
    pub predicates: PredicateClassifier,
    pub reranker: Option<RerankerModel>,
    /// Training log lines.
    pub log: Vec<String>,
}

impl Bundle {
    pub fn model(&self, kind: NetworkKind) -> &SrlModel {
        &self.models[kind.index()]
    }

    fn manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "format = {BUNDLE_FORMAT}");
        let _ = writeln!(s, "version = {FORMAT_VERSION}");
        let _ = writeln!(s, "seed = {}", self.config.seed);
        let _ = writeln!(s, "ablation = {}", self.config.ablation.name());
        let _ = writeln!(s, "word_policy = {}", self.config.word_policy.name());
        let _ = writeln!(s, "config = {CONFIG_FILE}");
        for m in &self.models {
            let name = m.kind.name();
            let _ = writeln!(s, "{name} = {}", model_file_name(m.kind));
            let _ = writeln!(s, "{name}.labels = {}", m.labels.len());
            let _ = writeln!(s, "{name}.features = {}", m.features.len());
            let _ = writeln!(s, "{name}.path_vocab = {}", m.path_vocab.len());
        }
        let _ = writeln!(s, "predicates = {PREDICATES_FILE}");
        let _ = writeln!(
            s,
            "predicates.features = {}",
            self.predicates.features.len()
        );
        let _ = writeln!(s, "predicates.lemmas = {}", self.predicates.lemmas.len());
        match &self.reranker {
            Some(r) => {
                let _ = writeln!(s, "reranker = {RERANKER_FILE}");
                let _ = writeln!(s, "reranker.n = {}", r.n);
            }
            None => {
                let _ = writeln!(s, "reranker = none");
            }
        }
        let _ = writeln!(s, "log = {LOG_FILE}");
        s
    }

    /// Write the bundle directory, creating it if needed.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(MANIFEST), self.manifest())?;
        std::fs::write(dir.join(CONFIG_FILE), self.config.to_config_string())?;
        for m in &self.models {
            m.to_model_file().save(dir.join(model_file_name(m.kind)))?;
        }
        self.predicates
            .to_model_file()
            .save(dir.join(PREDICATES_FILE))?;
        let reranker_path = dir.join(RERANKER_FILE);
        match &self.reranker {
            Some(r) => r.to_model_file().save(&reranker_path)?,
            None if reranker_path.exists() => std::fs::remove_file(&reranker_path)?,
            None => {}
        }
        let mut log = self.log.join("\n");
        if !log.is_empty() {
            log.push('\n');
        }
        std::fs::write(dir.join(LOG_FILE), log)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let bundle_err = |msg: String| Error::Model(format!("{}: {msg}", dir.display()));
        let manifest = std::fs::read_to_string(dir.join(MANIFEST))
            .map_err(|e| bundle_err(format!("cannot read {MANIFEST}: {e}")))?;
        let entries: Vec<(&str, &str)> = manifest
            .lines()
            .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim(), v.trim())))
            .collect();
        let get = |key: &str| entries.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        if get("format") != Some(BUNDLE_FORMAT) {
            return Err(bundle_err("not a model bundle".into()));
        }
        let version = FORMAT_VERSION.to_string();
        if get("version") != Some(version.as_str()) {
            return Err(bundle_err(format!(
                "bundle version {} does not match supported version {FORMAT_VERSION}",
                get("version").unwrap_or("?")
            )));
        }
        let config_text = std::fs::read_to_string(dir.join(CONFIG_FILE))
            .map_err(|e| bundle_err(format!("cannot read {CONFIG_FILE}: {e}")))?;
        let config = SystemConfig::from_str_with_defaults(&config_text)?;

        let mut models = Vec::with_capacity(4);
        for kind in NetworkKind::ALL {
            let file = ModelFile::load(dir.join(model_file_name(kind)))?;
            let model = SrlModel::from_model_file(&file)?;
            if model.kind != kind {
                return Err(bundle_err(format!(
                    "{} holds the {} network",
                    model_file_name(kind),
                    model.kind.name()
                )));
            }
            models.push(model);
        }
        let predicates =
            PredicateClassifier::from_model_file(&ModelFile::load(dir.join(PREDICATES_FILE))?)?;
        let reranker = match get("reranker") {
            Some("none") | None => None,
            Some(name) => Some(RerankerModel::from_model_file(&ModelFile::load(
                dir.join(name),
            )?)?),
        };
        let log = std::fs::read_to_string(dir.join(LOG_FILE))
            .map(|s| s.lines().map(str::to_owned).collect())
            .unwrap_or_default();
        Ok(Bundle {
            config,
            models,
            predicates,
            reranker,
            log,
        })
    }
}
