//! Semantic role labeling over CoNLL-2009 data with LSTM embeddings of
//! lexicalized dependency paths, trained jointly with sparse binary
//! indicator features.

pub mod config;
pub mod conll;
pub mod deptree;
pub mod error;
pub mod eval;
pub mod features;
pub mod logreg;
pub mod model_io;
pub mod neural;
pub mod rerank;
pub mod search;
pub mod srl;
pub mod synth;

pub use config::{Category, NetworkConfig, NetworkKind, SystemConfig, Task};
pub use conll::{read_corpus, write_corpus, Sentence, Token};
pub use deptree::{extract_path_sequence, DepTree, Direction, PathItem, PathSequence, WordPolicy};
pub use error::{Error, Result};
pub use srl::{label_sentence, train_bundle, Bundle, LabelOptions};
