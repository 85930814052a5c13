//! Chunking, embedding, indexing and the two-granularity retrieval
//! experiment on real or synthetic text.

mod calibrate;
mod embed;
mod experiment;
mod synthetic;
mod text;

pub use calibrate::{calibrate, spherical_kmeans, CalibrationBaseline, CalibrationConfig, Clustering};
pub use embed::{
    embed_chunks, embed_texts, read_records, write_records, CachedEmbedder, Embedder, EmbeddingRecord, MockEmbedder,
    ServiceConfig, ServiceEmbedder, DEFAULT_MOCK_DIMENSION,
};
pub use experiment::{
    analyze_direction, build_index, direction_label, retrieval_experiment, write_direction_csv, ChunkIndex,
    DirectionResult, DirectionSummary, EpsilonSummary, QueryProfile,
};
pub use synthetic::{synthetic_corpus, PlantedDocument, SyntheticCorpusConfig};
pub use text::{
    chunk_corpus, chunk_text, containment_check, read_corpus_dir, write_corpus_dir, Chunk, ChunkSet, Document,
    TokenSpan, Tokenizer, WhitespaceTokenizer,
};
