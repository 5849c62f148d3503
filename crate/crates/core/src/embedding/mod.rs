//! Token vocabulary and subword-composed embedding model.
//!
//! Each session becomes a token whose canonical key is its venue ids
//! joined by [`TOKEN_SEPARATOR`]. The vocabulary indexes session tokens
//! and, when subwords are enabled, every venue n-gram of every retained
//! session token. Input vectors exist for both tables; output vectors
//! only for session tokens. A session token's effective vector is the
//! arithmetic mean of its own input row and its n-gram input rows, which
//! lets unseen sessions be embedded from whichever n-grams are known.

mod io;
mod train;

pub use io::{export_text, load_model, save_model};
pub use train::{
    loss_and_gradient, train, train_with_logger, EpochStats, PairGradients, VectorRows,
};

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ingest::{Dataset, VenueId};
use crate::sessions::{ngram_slices, segment_user_history, SegmentationConfig};
use crate::Result;

/// Joins venue ids into token keys. Venue ids containing this character
/// (or whitespace) are rejected at parse time, so keys are injective.
pub const TOKEN_SEPARATOR: char = ',';

/// Canonical string form of a venue sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenKey(String);

impl TokenKey {
    pub fn from_venues<S: AsRef<str>>(venues: &[S]) -> TokenKey {
        debug_assert!(venues
            .iter()
            .all(|v| !v.as_ref().contains(TOKEN_SEPARATOR)));
        let mut key = String::new();
        for (i, venue) in venues.iter().enumerate() {
            if i > 0 {
                key.push(TOKEN_SEPARATOR);
            }
            key.push_str(venue.as_ref());
        }
        TokenKey(key)
    }

    pub fn single(venue: &str) -> TokenKey {
        TokenKey::from_venues(&[venue])
    }

    pub fn venues(&self) -> Vec<&str> {
        self.0.split(TOKEN_SEPARATOR).collect()
    }

    pub fn is_single_venue(&self) -> bool {
        !self.0.contains(TOKEN_SEPARATOR)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub(crate) fn from_raw(raw: String) -> TokenKey {
        TokenKey(raw)
    }
}

impl fmt::Display for TokenKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Training corpus: one sentence per user, one token per session (or per
/// check-in in non-sequential mode).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<Vec<TokenKey>>,
}

impl Corpus {
    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

/// Builds the training corpus from a train split.
///
/// With `non_seq` unset, each user's sentence is their session token
/// sequence in time order. With `non_seq` set, segmentation is bypassed
/// and the sentence is the user's raw venue token sequence.
pub fn build_corpus(train_split: &Dataset, seg_cfg: &SegmentationConfig, non_seq: bool) -> Corpus {
    let mut sentences = Vec::with_capacity(train_split.histories.len());
    for history in train_split.histories.values() {
        let sentence: Vec<TokenKey> = if non_seq {
            history
                .iter()
                .map(|r| TokenKey::single(&r.venue_id))
                .collect()
        } else {
            segment_user_history(history, seg_cfg.delta_t_secs)
                .iter()
                .map(|s| TokenKey::from_venues(&s.venue_ids))
                .collect()
        };
        if !sentence.is_empty() {
            sentences.push(sentence);
        }
    }
    Corpus { sentences }
}

/// Skip-gram or continuous bag of words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    SkipGram,
    Cbow,
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainMode::SkipGram => f.write_str("skipgram"),
            TrainMode::Cbow => f.write_str("cbow"),
        }
    }
}

impl std::str::FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "skipgram" | "skip-gram" | "sg" => Ok(TrainMode::SkipGram),
            "cbow" => Ok(TrainMode::Cbow),
            other => Err(Error::InvalidArgument(format!(
                "unknown training mode {other:?} (expected skipgram or cbow)"
            ))),
        }
    }
}

/// Hyperparameters of the embedding trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: TrainMode,
    /// When false, no n-gram table is built and tokens are whole units.
    pub use_subwords: bool,
    /// Vector dimensionality.
    pub size: usize,
    pub min_n: usize,
    pub max_n: usize,
    pub window: usize,
    pub epochs: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    pub initial_lr: f64,
    /// Session tokens rarer than this are dropped from the vocabulary.
    pub min_count: u32,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: TrainMode::SkipGram,
            use_subwords: true,
            size: 100,
            min_n: 1,
            max_n: 5,
            window: 5,
            epochs: 5,
            negatives: 5,
            initial_lr: 0.025,
            min_count: 1,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidArgument(what.to_string()))
            }
        };
        check(self.size >= 1, "size must be >= 1")?;
        check(
            self.min_n >= 1 && self.min_n <= self.max_n,
            "need 1 <= min_n <= max_n",
        )?;
        check(self.window >= 1, "window must be >= 1")?;
        check(self.epochs >= 1, "epochs must be >= 1")?;
        check(self.negatives >= 1, "negatives must be >= 1")?;
        check(
            self.initial_lr > 0.0 && self.initial_lr.is_finite(),
            "initial_lr must be positive",
        )?;
        check(self.workers >= 1, "workers must be >= 1")?;
        Ok(())
    }
}

/// Dense row-major matrix of parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rounds every entry through f32, so the matrix survives the 32-bit
    /// on-disk encoding without loss.
    pub(crate) fn quantize_to_f32(&mut self) {
        for v in &mut self.data {
            *v = *v as f32 as f64;
        }
    }
}

/// Token tables: session tokens with frequencies plus an optional n-gram
/// table. Indices are dense and 0-based over the union: session token
/// `i` owns input row `i`, n-gram slot `j` owns input row
/// `n_session_tokens + j`. Output rows exist for session tokens only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    session_keys: Vec<TokenKey>,
    frequencies: Vec<u64>,
    session_index: HashMap<TokenKey, usize>,
    ngram_keys: Vec<TokenKey>,
    ngram_index: HashMap<TokenKey, usize>,
    /// Per session token, the global input rows of its n-gram bag.
    /// Occurrences repeat, matching the bag the session yields.
    composition: Vec<Vec<u32>>,
    min_count: u32,
}

impl Vocabulary {
    pub fn n_session_tokens(&self) -> usize {
        self.session_keys.len()
    }

    pub fn n_ngram_tokens(&self) -> usize {
        self.ngram_keys.len()
    }

    pub fn n_input_rows(&self) -> usize {
        self.session_keys.len() + self.ngram_keys.len()
    }

    pub fn min_count(&self) -> u32 {
        self.min_count
    }

    pub fn session_token_index(&self, key: &TokenKey) -> Option<usize> {
        self.session_index.get(key).copied()
    }

    /// Global input row of an n-gram token.
    pub fn ngram_row(&self, key: &TokenKey) -> Option<usize> {
        self.ngram_index.get(key).copied()
    }

    pub fn session_key(&self, index: usize) -> &TokenKey {
        &self.session_keys[index]
    }

    pub fn frequency(&self, index: usize) -> u64 {
        self.frequencies[index]
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequencies
    }

    /// Global input rows of the n-gram bag of session token `index`.
    pub fn composition_rows(&self, index: usize) -> &[u32] {
        &self.composition[index]
    }

    pub fn session_keys(&self) -> &[TokenKey] {
        &self.session_keys
    }

    pub fn ngram_keys(&self) -> &[TokenKey] {
        &self.ngram_keys
    }

    pub(crate) fn from_tables(
        session_keys: Vec<TokenKey>,
        frequencies: Vec<u64>,
        ngram_keys: Vec<TokenKey>,
        min_count: u32,
        min_n: usize,
        max_n: usize,
        use_subwords: bool,
    ) -> Result<Vocabulary> {
        let n_sessions = session_keys.len();
        let session_index: HashMap<TokenKey, usize> = session_keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i))
            .collect();
        if session_index.len() != n_sessions {
            return Err(Error::ModelFormat("duplicate session token".into()));
        }
        let ngram_index: HashMap<TokenKey, usize> = ngram_keys
            .iter()
            .enumerate()
            .map(|(j, k)| (k.clone(), n_sessions + j))
            .collect();
        if ngram_index.len() != ngram_keys.len() {
            return Err(Error::ModelFormat("duplicate n-gram token".into()));
        }

        let mut composition = Vec::with_capacity(n_sessions);
        for key in &session_keys {
            let mut rows = Vec::new();
            if use_subwords {
                let venues = key.venues();
                for gram in ngram_slices(&venues, min_n, max_n)? {
                    let gram_key = TokenKey::from_venues(gram);
                    let row = ngram_index.get(&gram_key).copied().ok_or_else(|| {
                        Error::ModelFormat(format!("n-gram {gram_key} missing from vocabulary"))
                    })?;
                    rows.push(u32::try_from(row).expect("row index fits u32"));
                }
            }
            composition.push(rows);
        }

        Ok(Vocabulary {
            session_keys,
            frequencies,
            session_index,
            ngram_keys,
            ngram_index,
            composition,
            min_count,
        })
    }
}

/// Builds the vocabulary over a corpus.
///
/// Session tokens appearing at least `min_count` times are indexed in
/// first-seen order. With subwords enabled, every venue n-gram of every
/// retained session token is indexed exactly once, in the order the
/// session tokens produce them.
pub fn build_vocabulary(
    corpus: &Corpus,
    min_count: u32,
    min_n: usize,
    max_n: usize,
    use_subwords: bool,
) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus("cannot build a vocabulary".into()));
    }

    let mut counts: HashMap<&TokenKey, u64> = HashMap::new();
    let mut seen_order: Vec<&TokenKey> = Vec::new();
    for sentence in &corpus.sentences {
        for token in sentence {
            let count = counts.entry(token).or_insert(0);
            if *count == 0 {
                seen_order.push(token);
            }
            *count += 1;
        }
    }

    let mut session_keys = Vec::new();
    let mut frequencies = Vec::new();
    for token in seen_order {
        let count = counts[token];
        if count >= u64::from(min_count) {
            session_keys.push(token.clone());
            frequencies.push(count);
        }
    }

    let mut ngram_keys = Vec::new();
    if use_subwords {
        let mut known: HashMap<TokenKey, ()> = HashMap::new();
        for key in &session_keys {
            let venues = key.venues();
            for gram in ngram_slices(&venues, min_n, max_n)? {
                let gram_key = TokenKey::from_venues(gram);
                if known.insert(gram_key.clone(), ()).is_none() {
                    ngram_keys.push(gram_key);
                }
            }
        }
    }

    Vocabulary::from_tables(
        session_keys,
        frequencies,
        ngram_keys,
        min_count,
        min_n,
        max_n,
        use_subwords,
    )
}

/// A trained embedding model: vocabulary plus input/output vector tables.
#[derive(Debug)]
pub struct EmbeddingModel {
    vocabulary: Vocabulary,
    input_vectors: Matrix,
    output_vectors: Matrix,
    config: TrainConfig,
    composed_cache: OnceLock<ComposedCache>,
}

#[derive(Debug)]
pub(crate) struct ComposedCache {
    pub matrix: Matrix,
    pub norms: Vec<f64>,
}

impl PartialEq for EmbeddingModel {
    fn eq(&self, other: &Self) -> bool {
        self.vocabulary == other.vocabulary
            && self.input_vectors == other.input_vectors
            && self.output_vectors == other.output_vectors
            && self.config == other.config
    }
}

impl EmbeddingModel {
    /// Assembles a model, checking that the tables match the vocabulary
    /// and contain only finite values.
    pub fn from_parts(
        vocabulary: Vocabulary,
        input_vectors: Matrix,
        output_vectors: Matrix,
        config: TrainConfig,
    ) -> Result<EmbeddingModel> {
        if input_vectors.rows() != vocabulary.n_input_rows() {
            return Err(Error::DimensionMismatch {
                expected: vocabulary.n_input_rows(),
                got: input_vectors.rows(),
            });
        }
        if output_vectors.rows() != vocabulary.n_session_tokens() {
            return Err(Error::DimensionMismatch {
                expected: vocabulary.n_session_tokens(),
                got: output_vectors.rows(),
            });
        }
        if input_vectors.cols() != config.size || output_vectors.cols() != config.size {
            return Err(Error::DimensionMismatch {
                expected: config.size,
                got: input_vectors.cols(),
            });
        }
        if !input_vectors.all_finite() || !output_vectors.all_finite() {
            return Err(Error::ModelFormat(
                "vector tables contain non-finite values".into(),
            ));
        }
        Ok(EmbeddingModel {
            vocabulary,
            input_vectors,
            output_vectors,
            config,
            composed_cache: OnceLock::new(),
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn input_vectors(&self) -> &Matrix {
        &self.input_vectors
    }

    pub fn output_vectors(&self) -> &Matrix {
        &self.output_vectors
    }

    pub fn dim(&self) -> usize {
        self.config.size
    }

    fn compose_rows(&self, own_row: usize, ngram_rows: &[u32]) -> Vec<f64> {
        let mut acc = self.input_vectors.row(own_row).to_vec();
        for &row in ngram_rows {
            for (a, b) in acc.iter_mut().zip(self.input_vectors.row(row as usize)) {
                *a += b;
            }
        }
        let n = (1 + ngram_rows.len()) as f64;
        for a in &mut acc {
            *a /= n;
        }
        acc
    }

    /// The composed input vector of an in-vocabulary session token: the
    /// mean of its own input row and its n-gram input rows (just the own
    /// row when subwords are disabled).
    pub fn composed_input_vector(&self, token: &TokenKey) -> Result<Vec<f64>> {
        let index = self
            .vocabulary
            .session_token_index(token)
            .ok_or_else(|| Error::UnknownToken(token.to_string()))?;
        Ok(self.compose_rows(index, self.vocabulary.composition_rows(index)))
    }

    /// Vector for an arbitrary venue sequence.
    ///
    /// In-vocabulary tokens use [`Self::composed_input_vector`]. Unseen
    /// tokens average the input vectors of those of their n-grams that
    /// are known (subword models only); unknown n-grams are skipped. An
    /// unseen token with no known n-grams is unrepresentable.
    pub fn token_vector<S: AsRef<str>>(&self, session_venue_ids: &[S]) -> Result<Vec<f64>> {
        let key = TokenKey::from_venues(session_venue_ids);
        if self.vocabulary.session_token_index(&key).is_some() {
            return self.composed_input_vector(&key);
        }
        if !self.config.use_subwords {
            return Err(Error::UnknownToken(key.to_string()));
        }

        let venues: Vec<&str> = session_venue_ids.iter().map(|s| s.as_ref()).collect();
        let mut acc = vec![0.0; self.dim()];
        let mut found = 0usize;
        for gram in ngram_slices(&venues, self.config.min_n, self.config.max_n)? {
            let gram_key = TokenKey::from_venues(gram);
            if let Some(row) = self.vocabulary.ngram_row(&gram_key) {
                for (a, b) in acc.iter_mut().zip(self.input_vectors.row(row)) {
                    *a += b;
                }
                found += 1;
            }
        }
        if found == 0 {
            return Err(Error::Unrepresentable(key.to_string()));
        }
        for a in &mut acc {
            *a /= found as f64;
        }
        Ok(acc)
    }

    /// Composed vectors of all session tokens with their norms, built on
    /// first use and reused by the neighbor search.
    pub(crate) fn composed(&self) -> &ComposedCache {
        self.composed_cache.get_or_init(|| {
            let n = self.vocabulary.n_session_tokens();
            let dim = self.dim();
            let mut matrix = Matrix::zeros(n, dim);
            let mut norms = vec![0.0; n];
            for i in 0..n {
                let composed = self.compose_rows(i, self.vocabulary.composition_rows(i));
                norms[i] = composed.iter().map(|v| v * v).sum::<f64>().sqrt();
                matrix.row_mut(i).copy_from_slice(&composed);
            }
            ComposedCache { matrix, norms }
        })
    }
}
