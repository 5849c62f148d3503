//! Session-based venue embeddings and top-k venue recommendation.
//!
//! The pipeline turns raw check-in logs into venue recommendations:
//!
//! 1. [`ingest`] parses `user<TAB>venue<TAB>timestamp` logs, filters rare
//!    venues and inactive users, and splits each user's history in time.
//! 2. [`sessions`] groups consecutive check-ins whose gaps stay within a
//!    time budget into sessions and enumerates their contiguous venue
//!    n-grams.
//! 3. [`embedding`] treats each session as a token and each n-gram as a
//!    subword, then trains skip-gram/CBOW vectors with negative sampling.
//!    A session vector is the mean of its own row and its n-gram rows, so
//!    unseen sessions can still be embedded from known n-grams.
//! 4. [`recommend`] scans the vocabulary for nearest neighbors by cosine
//!    similarity and turns neighbor sequences into ranked venue lists.
//! 5. [`metrics`] scores recommendations against held-out check-ins with
//!    Precision@k, NDCG@k and HitRate, and runs parameter sweeps.

pub mod embedding;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod recommend;
pub mod sessions;

pub use embedding::{
    build_corpus, build_vocabulary, train, Corpus, EmbeddingModel, TokenKey, TrainConfig,
    TrainMode, Vocabulary,
};
pub use error::Error;
pub use ingest::{CheckinRecord, Dataset, FilterConfig, SplitDataset};
pub use metrics::{evaluate, grid_search, GridAxes, MetricsReport};
pub use recommend::{cosine_similarity, most_similar, recommend_for_user, RecType, Recommendation};
pub use sessions::{segment_user_history, SegmentationConfig, Session};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
