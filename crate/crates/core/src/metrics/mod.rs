//! Consistency metrics between plans, novelty indicators and task
//! classification.

mod align;
mod evaluate;
mod novelty;
mod serialize;
mod vector;

pub use align::{iou_set, sim_exec, smith_waterman, AlignParams};
pub use evaluate::{device_set, evaluate_pair, evaluate_pair_with, opcode_set, product_set, token_similarity, MetricVector};
pub use novelty::{
    classify_task, corpus_profiles, novelty_indicators, percentile_rank, profile_doc, task_kind, MetricsError, TIE_TOLERANCE,
    NoveltyIndicators, ProtocolProfile, TaskBands, MIN_CORPUS_PROTOCOLS,
};
pub use serialize::{
    final_product_tokens, plan_tokens, serialize_for_similarity, text_tokens, Serializable, TfIdfVectorizer, Vectorizer,
};
pub use vector::{sim_vector, SparseVector, TfIdf};
