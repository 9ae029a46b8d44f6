//! Protocol preprocessing: sentence splitting, opcode and entity extraction,
//! flow-unit typing, synonym merging and flow linking.

mod client;
mod corpus;
mod lexicon;
mod rules;
mod synonyms;
mod text;

pub use client::{
    ClientError, ExtractionClient, ExtractionRequest, ExtractionResponse, FixtureClient, FixtureEntry, RuleBasedClient,
    Task,
};
pub use corpus::{
    build_corpus, classify_flow_unit, extract_instance_action, Corpus, ExtractionError, IngestError, IngestOptions,
    SourcedFlow, CONDITION_KEYS,
};
pub use rules::{ComponentLabels, EntityResult, UnitMention};
pub use synonyms::{apply_alias, merge_synonyms, Embedder, TableEmbedder, TrigramEmbedder, DEFAULT_SYNONYM_THRESHOLD};
pub use text::{extract_opcode, split_sentences, OpcodeLexicon, MIN_SENTENCE_CHARS};

/// Aliases for component names share the device-synonym contract.
pub use synonyms::merge_synonyms as resolve_aliases;
