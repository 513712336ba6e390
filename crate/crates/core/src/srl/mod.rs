//! The argument networks, the predicate classifier and the labeling
//! pipeline built from them.

mod bundle;
mod model;
mod pipeline;
mod predicates;
mod train;

pub use bundle::{
    model_file_name, Bundle, CONFIG_FILE, LOG_FILE, MANIFEST, PREDICATES_FILE, RERANKER_FILE,
};
pub use model::{EncodedPair, SrlModel, ARG, ARG_INDEX, NONE};
pub use pipeline::{
    classify_argument, dump_embeddings, identification_scores, identify_arguments, label_corpus,
    label_predicate, label_sentence, predicates_of, score_candidates, Classification, EmbeddingRow,
    LabelOptions, LabeledArgument, LabeledStructure,
};
pub use predicates::{
    is_predicate_candidate, predicate_feature_strings, LemmaSenses, PredicateClassifier,
};
pub use train::{
    collect_instances, component_rng, network_dev_score, structure_f1, train_bundle, train_network,
    train_reranker, Instance,
};
