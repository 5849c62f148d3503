//! Negative-sampling SGD over session and n-gram vectors.
//!
//! With `workers = 1` training is bit-reproducible for a fixed seed. With
//! more workers the vector tables are shared without synchronization
//! (lock-free, last write wins on overlapping rows), which is
//! intentionally nondeterministic.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_vocabulary, Corpus, EmbeddingModel, Matrix, TrainConfig, TrainMode, Vocabulary};
use crate::error::Error;
use crate::Result;

/// Read access to a table of equally sized rows.
pub trait VectorRows {
    fn dim(&self) -> usize;
    fn dot_row(&self, row: usize, v: &[f64]) -> f64;
    /// `out += scale * row`
    fn axpy_row(&self, row: usize, scale: f64, out: &mut [f64]);
}

impl VectorRows for Matrix {
    fn dim(&self) -> usize {
        self.cols()
    }

    fn dot_row(&self, row: usize, v: &[f64]) -> f64 {
        self.row(row).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    fn axpy_row(&self, row: usize, scale: f64, out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(self.row(row)) {
            *o += scale * a;
        }
    }
}

/// Parameter table shared across training threads. Cells hold f64 bits
/// in atomics; all accesses are relaxed. Concurrent row updates may lose
/// writes, which the multi-worker mode accepts by design.
pub(crate) struct ParamTable {
    rows: usize,
    cols: usize,
    cells: Vec<AtomicU64>,
}

impl ParamTable {
    fn from_matrix(matrix: Matrix) -> ParamTable {
        let rows = matrix.rows();
        let cols = matrix.cols();
        let cells = matrix
            .into_data()
            .into_iter()
            .map(|v| AtomicU64::new(v.to_bits()))
            .collect();
        ParamTable { rows, cols, cells }
    }

    fn into_matrix(self) -> Matrix {
        let data: Vec<f64> = self
            .cells
            .into_iter()
            .map(|c| f64::from_bits(c.into_inner()))
            .collect();
        Matrix::from_vec(self.rows, self.cols, data).expect("table shape is consistent")
    }

    #[inline]
    fn get(&self, row: usize, col: usize) -> f64 {
        f64::from_bits(self.cells[row * self.cols + col].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, row: usize, col: usize, value: f64) {
        self.cells[row * self.cols + col].store(value.to_bits(), Ordering::Relaxed);
    }

    /// `row += scale * v`
    fn add_row(&self, row: usize, scale: f64, v: &[f64]) {
        for (col, value) in v.iter().enumerate() {
            self.set(row, col, self.get(row, col) + scale * value);
        }
    }

    /// Writes the mean of the rows `own` and `others` into `out`.
    fn compose_into(&self, own: usize, others: &[u32], out: &mut [f64]) {
        for (col, slot) in out.iter_mut().enumerate() {
            *slot = self.get(own, col);
        }
        for &row in others {
            for (col, slot) in out.iter_mut().enumerate() {
                *slot += self.get(row as usize, col);
            }
        }
        let n = (1 + others.len()) as f64;
        for slot in out.iter_mut() {
            *slot /= n;
        }
    }
}

impl VectorRows for ParamTable {
    fn dim(&self) -> usize {
        self.cols
    }

    fn dot_row(&self, row: usize, v: &[f64]) -> f64 {
        v.iter()
            .enumerate()
            .map(|(col, b)| self.get(row, col) * b)
            .sum()
    }

    fn axpy_row(&self, row: usize, scale: f64, out: &mut [f64]) {
        for (col, o) in out.iter_mut().enumerate() {
            *o += scale * self.get(row, col);
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x), stable on both tails.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Gradients of one (center, context, negatives) step. Buffers are
/// reused across calls.
#[derive(Debug, Default)]
pub struct PairGradients {
    /// Gradient with respect to the composed center vector. The trainer
    /// divides it equally over the constituent input rows.
    center: Vec<f64>,
    outputs: Vec<(usize, Vec<f64>)>,
    n_outputs: usize,
}

impl PairGradients {
    pub fn new() -> PairGradients {
        PairGradients::default()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Gradient per touched output row. Rows appearing several times in
    /// the sample (duplicate negatives) are accumulated into one entry.
    pub fn outputs(&self) -> &[(usize, Vec<f64>)] {
        &self.outputs[..self.n_outputs]
    }

    fn reset(&mut self, dim: usize) {
        self.center.clear();
        self.center.resize(dim, 0.0);
        self.n_outputs = 0;
    }

    fn output_slot(&mut self, row: usize, dim: usize) -> &mut Vec<f64> {
        for i in 0..self.n_outputs {
            if self.outputs[i].0 == row {
                return &mut self.outputs[i].1;
            }
        }
        if self.n_outputs == self.outputs.len() {
            self.outputs.push((row, vec![0.0; dim]));
        } else {
            self.outputs[self.n_outputs].0 = row;
            let buf = &mut self.outputs[self.n_outputs].1;
            buf.clear();
            buf.resize(dim, 0.0);
        }
        self.n_outputs += 1;
        &mut self.outputs[self.n_outputs - 1].1
    }
}

/// Loss and gradients of the negative-sampling objective
/// `-ln σ(u·v_ctx) - Σ ln σ(-u·v_neg)` for one positive pair.
///
/// `grads.center` receives dL/du; `grads.outputs` the gradient of every
/// touched output row. Returns the loss.
pub fn loss_and_gradient<T: VectorRows>(
    center_composed: &[f64],
    context_index: usize,
    negative_indices: &[usize],
    output_vectors: &T,
    grads: &mut PairGradients,
) -> f64 {
    let dim = center_composed.len();
    debug_assert_eq!(dim, output_vectors.dim());
    grads.reset(dim);

    let mut loss = 0.0;

    let score = output_vectors.dot_row(context_index, center_composed);
    loss += softplus(-score);
    let g_pos = sigmoid(score) - 1.0;
    output_vectors.axpy_row(context_index, g_pos, &mut grads.center);
    {
        let slot = grads.output_slot(context_index, dim);
        for (s, u) in slot.iter_mut().zip(center_composed) {
            *s += g_pos * u;
        }
    }

    for &neg in negative_indices {
        let score = output_vectors.dot_row(neg, center_composed);
        loss += softplus(score);
        let g_neg = sigmoid(score);
        output_vectors.axpy_row(neg, g_neg, &mut grads.center);
        let slot = grads.output_slot(neg, dim);
        for (s, u) in slot.iter_mut().zip(center_composed) {
            *s += g_neg * u;
        }
    }

    loss
}

/// Draws negatives proportional to frequency^0.75.
struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    fn new(frequencies: &[u64]) -> NegativeSampler {
        let mut cumulative = Vec::with_capacity(frequencies.len());
        let mut total = 0.0;
        for &f in frequencies {
            total += (f as f64).powf(0.75);
            cumulative.push(total);
        }
        NegativeSampler { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let x = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= x)
    }
}

/// Per-epoch training statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 0-based epoch number.
    pub epoch: usize,
    pub mean_loss: f64,
    pub pairs: u64,
    /// Learning rate at the end of the epoch.
    pub lr: f64,
}

struct Schedule {
    initial_lr: f64,
    total_tokens: u64,
}

impl Schedule {
    #[inline]
    fn lr(&self, processed: u64) -> f64 {
        let frac = (processed as f64 / self.total_tokens as f64).min(1.0);
        self.initial_lr * (1.0 - frac) + self.initial_lr * 1e-4 * frac
    }
}

fn worker_seed(seed: u64, worker: u64) -> u64 {
    seed.wrapping_add((worker + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

struct WorkerCtx<'a> {
    input: &'a ParamTable,
    output: &'a ParamTable,
    sampler: &'a NegativeSampler,
    compositions: &'a [Vec<u32>],
    schedule: &'a Schedule,
    processed: &'a AtomicU64,
    config: &'a TrainConfig,
}

fn train_sentence<R: Rng>(
    ctx: &WorkerCtx,
    sentence: &[u32],
    rng: &mut R,
    composed: &mut Vec<f64>,
    context_mean: &mut Vec<f64>,
    negatives: &mut Vec<usize>,
    grads: &mut PairGradients,
) -> (f64, u64) {
    let dim = ctx.config.size;
    let mut loss_sum = 0.0;
    let mut pairs = 0u64;

    for (t, &center) in sentence.iter().enumerate() {
        let processed = ctx.processed.fetch_add(1, Ordering::Relaxed) + 1;
        let lr = ctx.schedule.lr(processed);
        let b = rng.gen_range(1..=ctx.config.window);
        let lo = t.saturating_sub(b);
        let hi = (t + b).min(sentence.len() - 1);

        match ctx.config.mode {
            TrainMode::SkipGram => {
                let center_comp = &ctx.compositions[center as usize];
                for j in lo..=hi {
                    if j == t {
                        continue;
                    }
                    let target = sentence[j] as usize;
                    negatives.clear();
                    for _ in 0..ctx.config.negatives {
                        let neg = ctx.sampler.sample(rng);
                        if neg != target {
                            negatives.push(neg);
                        }
                    }
                    ctx.input
                        .compose_into(center as usize, center_comp, composed);
                    loss_sum +=
                        loss_and_gradient(composed, target, negatives, ctx.output, grads);
                    pairs += 1;

                    for (row, grad) in grads.outputs() {
                        ctx.output.add_row(*row, -lr, grad);
                    }
                    let share = -lr / (1 + center_comp.len()) as f64;
                    ctx.input.add_row(center as usize, share, grads.center());
                    for &row in center_comp {
                        ctx.input.add_row(row as usize, share, grads.center());
                    }
                }
            }
            TrainMode::Cbow => {
                let context: Vec<u32> = (lo..=hi)
                    .filter(|&j| j != t)
                    .map(|j| sentence[j])
                    .collect();
                if context.is_empty() {
                    continue;
                }
                context_mean.clear();
                context_mean.resize(dim, 0.0);
                for &token in &context {
                    ctx.input.compose_into(
                        token as usize,
                        &ctx.compositions[token as usize],
                        composed,
                    );
                    for (m, c) in context_mean.iter_mut().zip(composed.iter()) {
                        *m += c;
                    }
                }
                let n_ctx = context.len() as f64;
                for m in context_mean.iter_mut() {
                    *m /= n_ctx;
                }

                let target = center as usize;
                negatives.clear();
                for _ in 0..ctx.config.negatives {
                    let neg = ctx.sampler.sample(rng);
                    if neg != target {
                        negatives.push(neg);
                    }
                }
                loss_sum +=
                    loss_and_gradient(context_mean, target, negatives, ctx.output, grads);
                pairs += 1;

                for (row, grad) in grads.outputs() {
                    ctx.output.add_row(*row, -lr, grad);
                }
                for &token in &context {
                    let comp = &ctx.compositions[token as usize];
                    let share = -lr / (n_ctx * (1 + comp.len()) as f64);
                    ctx.input.add_row(token as usize, share, grads.center());
                    for &row in comp {
                        ctx.input.add_row(row as usize, share, grads.center());
                    }
                }
            }
        }
    }

    (loss_sum, pairs)
}

fn run_worker(
    ctx: &WorkerCtx,
    sentences: &[Vec<u32>],
    seed: u64,
    report: &mpsc::Sender<(usize, f64, u64)>,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut composed = vec![0.0; ctx.config.size];
    let mut context_mean = vec![0.0; ctx.config.size];
    let mut negatives = Vec::with_capacity(ctx.config.negatives);
    let mut grads = PairGradients::new();

    for epoch in 0..ctx.config.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0u64;
        for sentence in sentences {
            let (l, p) = train_sentence(
                ctx,
                sentence,
                &mut rng,
                &mut composed,
                &mut context_mean,
                &mut negatives,
                &mut grads,
            );
            loss_sum += l;
            pairs += p;
        }
        // The channel outlives the workers; send cannot fail here.
        let _ = report.send((epoch, loss_sum, pairs));
    }
}

fn encode_corpus(corpus: &Corpus, vocabulary: &Vocabulary) -> Vec<Vec<u32>> {
    corpus
        .sentences
        .iter()
        .map(|sentence| {
            sentence
                .iter()
                .filter_map(|t| vocabulary.session_token_index(t))
                .map(|i| i as u32)
                .collect::<Vec<u32>>()
        })
        .filter(|s| !s.is_empty())
        .collect()
}

/// Splits sentences into `workers` contiguous chunks of similar token
/// counts.
fn partition<'a>(sentences: &'a [Vec<u32>], workers: usize) -> Vec<&'a [Vec<u32>]> {
    let total: usize = sentences.iter().map(Vec::len).sum();
    let per_worker = total.div_ceil(workers);
    let mut chunks = Vec::new();
    let mut start = 0;
    for _ in 0..workers {
        let mut end = start;
        let mut tokens = 0;
        while end < sentences.len() && tokens < per_worker {
            tokens += sentences[end].len();
            end += 1;
        }
        if end > start {
            chunks.push(&sentences[start..end]);
        }
        start = end;
    }
    if start < sentences.len() {
        chunks.push(&sentences[start..]);
    }
    chunks
}

/// Trains an embedding model, reporting per-epoch statistics through
/// `log` as they become available.
pub fn train_with_logger(
    corpus: &Corpus,
    config: &TrainConfig,
    mut log: impl FnMut(&EpochStats),
) -> Result<EmbeddingModel> {
    config.validate()?;
    let vocabulary = build_vocabulary(
        corpus,
        config.min_count,
        config.min_n,
        config.max_n,
        config.use_subwords,
    )?;
    let sentences = encode_corpus(corpus, &vocabulary);
    if !sentences.iter().any(|s| s.len() >= 2) {
        return Err(Error::EmptyCorpus(
            "every sentence has a single token, no context pairs exist".into(),
        ));
    }

    let dim = config.size;
    let n_input = vocabulary.n_input_rows();
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let input_data: Vec<f64> = (0..n_input * dim)
        .map(|_| (init_rng.gen::<f64>() - 0.5) / dim as f64)
        .collect();
    let input = ParamTable::from_matrix(Matrix::from_vec(n_input, dim, input_data)?);
    let output = ParamTable::from_matrix(Matrix::zeros(vocabulary.n_session_tokens(), dim));

    let sampler = NegativeSampler::new(vocabulary.frequencies());
    let total_tokens: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let schedule = Schedule {
        initial_lr: config.initial_lr,
        total_tokens: total_tokens * config.epochs as u64,
    };
    let processed = AtomicU64::new(0);
    let compositions: Vec<Vec<u32>> = (0..vocabulary.n_session_tokens())
        .map(|i| vocabulary.composition_rows(i).to_vec())
        .collect();

    let ctx = WorkerCtx {
        input: &input,
        output: &output,
        sampler: &sampler,
        compositions: &compositions,
        schedule: &schedule,
        processed: &processed,
        config,
    };

    let chunks = partition(&sentences, config.workers);
    let n_chunks = chunks.len();
    let (tx, rx) = mpsc::channel::<(usize, f64, u64)>();

    std::thread::scope(|scope| {
        for (w, chunk) in chunks.into_iter().enumerate() {
            let tx = tx.clone();
            let ctx = &ctx;
            let seed = worker_seed(config.seed, w as u64);
            scope.spawn(move || run_worker(ctx, chunk, seed, &tx));
        }
        drop(tx);

        // Aggregate per-epoch partials and emit each epoch once every
        // worker has reported it.
        let mut sums = vec![(0.0f64, 0u64, 0usize); config.epochs];
        let mut emitted = 0;
        while let Ok((epoch, loss, pairs)) = rx.recv() {
            let slot = &mut sums[epoch];
            slot.0 += loss;
            slot.1 += pairs;
            slot.2 += 1;
            while emitted < config.epochs && sums[emitted].2 == n_chunks {
                let (loss_sum, pairs, _) = sums[emitted];
                log(&EpochStats {
                    epoch: emitted,
                    mean_loss: if pairs > 0 { loss_sum / pairs as f64 } else { 0.0 },
                    pairs,
                    lr: schedule.lr(processed.load(Ordering::Relaxed).min(
                        total_tokens * (emitted as u64 + 1),
                    )),
                    // With one worker the processed counter is exact; with
                    // several it is approximate, like the mode itself.
                });
                emitted += 1;
            }
        }
    });

    let mut input = input.into_matrix();
    let mut output = output.into_matrix();
    // Round through f32 so the in-memory model matches its on-disk
    // encoding exactly.
    input.quantize_to_f32();
    output.quantize_to_f32();
    EmbeddingModel::from_parts(vocabulary, input, output, config.clone())
}

/// [`train_with_logger`] without a logger.
pub fn train(corpus: &Corpus, config: &TrainConfig) -> Result<EmbeddingModel> {
    train_with_logger(corpus, config, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::TokenKey;

    fn line_corpus(lines: &[&[&str]]) -> Corpus {
        Corpus {
            sentences: lines
                .iter()
                .map(|line| line.iter().map(|v| TokenKey::single(v)).collect())
                .collect(),
        }
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            size: 16,
            max_n: 2,
            epochs: 5,
            seed: 7,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn loss_at_zero_vectors_is_log2_per_term() {
        let output = Matrix::zeros(4, 3);
        let center = vec![0.0; 3];
        let mut grads = PairGradients::new();
        let loss = loss_and_gradient(&center, 0, &[1, 2, 3], &output, &mut grads);
        let expected = 4.0 * std::f64::consts::LN_2;
        assert!((loss - expected).abs() < 1e-12, "loss {loss} != {expected}");
        assert!(grads.center().iter().all(|&g| g == 0.0));
        assert_eq!(grads.outputs().len(), 4);
    }

    #[test]
    fn saturated_positive_term_vanishes() {
        // u . v = 20 drives -ln sigmoid(20) below 1e-8.
        let output = Matrix::from_vec(1, 1, vec![20.0]).unwrap();
        let center = vec![1.0];
        let mut grads = PairGradients::new();
        let loss = loss_and_gradient(&center, 0, &[], &output, &mut grads);
        assert!(loss < 1e-8, "positive term was {loss}");
    }

    #[test]
    fn duplicate_negatives_accumulate_into_one_slot() {
        let output = Matrix::from_vec(2, 2, vec![0.5, -0.25, 0.1, 0.2]).unwrap();
        let center = vec![0.3, 0.7];
        let mut grads = PairGradients::new();
        loss_and_gradient(&center, 0, &[1, 1], &output, &mut grads);
        assert_eq!(grads.outputs().len(), 2);
        let (row, grad) = &grads.outputs()[1];
        assert_eq!(*row, 1);
        let score: f64 = output.dot_row(1, &center);
        let g = sigmoid(score);
        for (got, u) in grad.iter().zip(&center) {
            assert!((got - 2.0 * g * u).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // A small in-module check; the acceptance suite runs the full
        // 100-configuration sweep.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let dim = rng.gen_range(1..6);
            let rows = rng.gen_range(2..6);
            let data: Vec<f64> = (0..rows * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let output = Matrix::from_vec(rows, dim, data.clone()).unwrap();
            let center: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let negatives: Vec<usize> =
                (0..3).map(|_| rng.gen_range(0..rows)).collect();

            let mut grads = PairGradients::new();
            loss_and_gradient(&center, 0, &negatives, &output, &mut grads);

            let h = 1e-5;
            for d in 0..dim {
                let mut plus = center.clone();
                plus[d] += h;
                let mut minus = center.clone();
                minus[d] -= h;
                let mut scratch = PairGradients::new();
                let f_plus = loss_and_gradient(&plus, 0, &negatives, &output, &mut scratch);
                let f_minus = loss_and_gradient(&minus, 0, &negatives, &output, &mut scratch);
                let fd = (f_plus - f_minus) / (2.0 * h);
                let an = grads.center()[d];
                assert!(
                    (fd - an).abs() / fd.abs().max(an.abs()).max(1.0) < 1e-4,
                    "center grad mismatch: fd={fd} analytic={an}"
                );
            }
        }
    }

    #[test]
    fn training_is_deterministic_with_one_worker() {
        let corpus = line_corpus(&[
            &["a", "b", "c", "a", "b"],
            &["c", "a", "b", "c"],
            &["b", "a"],
        ]);
        let config = small_config();
        let m1 = train(&corpus, &config).unwrap();
        let m2 = train(&corpus, &config).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn different_seeds_differ() {
        let corpus = line_corpus(&[&["a", "b", "c", "a", "b"], &["c", "a", "b", "c"]]);
        let config = small_config();
        let other = TrainConfig {
            seed: 8,
            ..config.clone()
        };
        let m1 = train(&corpus, &config).unwrap();
        let m2 = train(&corpus, &other).unwrap();
        assert_ne!(m1, m2);
    }

    #[test]
    fn epoch_loss_does_not_increase_beyond_noise() {
        let corpus = line_corpus(&[
            &["a", "b", "a", "b", "a", "b", "c", "d", "c", "d"],
            &["c", "d", "c", "d", "a", "b", "a", "b"],
            &["a", "b", "c", "d", "a", "b", "c", "d"],
        ]);
        let config = TrainConfig {
            epochs: 5,
            ..small_config()
        };
        let mut losses = Vec::new();
        train_with_logger(&corpus, &config, |stats| losses.push(stats.mean_loss)).unwrap();
        assert_eq!(losses.len(), 5);
        for pair in losses.windows(2) {
            assert!(
                pair[1] <= pair[0] * 1.01,
                "epoch loss increased: {losses:?}"
            );
        }
    }

    #[test]
    fn cooccurring_tokens_end_up_closer() {
        // a and b always co-occur; c lives in separate sentences.
        let mut sentences: Vec<Vec<TokenKey>> = Vec::new();
        for _ in 0..15 {
            sentences.push(vec![
                TokenKey::single("a"),
                TokenKey::single("b"),
                TokenKey::single("a"),
                TokenKey::single("b"),
            ]);
            sentences.push(vec![
                TokenKey::single("c"),
                TokenKey::single("d"),
                TokenKey::single("c"),
                TokenKey::single("d"),
            ]);
        }
        let corpus = Corpus { sentences };
        let config = TrainConfig {
            size: 24,
            epochs: 20,
            seed: 11,
            ..TrainConfig::default()
        };
        let model = train(&corpus, &config).unwrap();
        let va = model.composed_input_vector(&TokenKey::single("a")).unwrap();
        let vb = model.composed_input_vector(&TokenKey::single("b")).unwrap();
        let vc = model.composed_input_vector(&TokenKey::single("c")).unwrap();
        let cos = |x: &[f64], y: &[f64]| {
            let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
            let nx: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            let ny: f64 = y.iter().map(|a| a * a).sum::<f64>().sqrt();
            dot / (nx * ny)
        };
        assert!(
            cos(&va, &vb) > cos(&va, &vc),
            "cos(a,b)={} cos(a,c)={}",
            cos(&va, &vb),
            cos(&va, &vc)
        );
    }

    #[test]
    fn rejects_corpus_without_context_pairs() {
        let corpus = line_corpus(&[&["a"], &["b"], &["c"]]);
        assert!(matches!(
            train(&corpus, &small_config()),
            Err(Error::EmptyCorpus(_))
        ));
    }

    #[test]
    fn cbow_trains_and_is_deterministic() {
        let corpus = line_corpus(&[&["a", "b", "c", "a", "b"], &["c", "a", "b", "c"]]);
        let config = TrainConfig {
            mode: TrainMode::Cbow,
            ..small_config()
        };
        let m1 = train(&corpus, &config).unwrap();
        let m2 = train(&corpus, &config).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn multi_worker_training_completes() {
        let corpus = line_corpus(&[
            &["a", "b", "c", "a"],
            &["b", "c", "a", "b"],
            &["c", "a", "b", "c"],
            &["a", "c", "b", "a"],
        ]);
        let config = TrainConfig {
            workers: 3,
            ..small_config()
        };
        let model = train(&corpus, &config).unwrap();
        assert_eq!(model.vocabulary().n_session_tokens(), 3);
    }

    #[test]
    fn quantized_model_entries_survive_f32() {
        let corpus = line_corpus(&[&["a", "b", "a", "b"]]);
        let model = train(&corpus, &small_config()).unwrap();
        for &v in model.input_vectors().data() {
            assert_eq!(v, v as f32 as f64);
        }
    }

    #[test]
    fn negative_sampler_respects_frequency_power() {
        let sampler = NegativeSampler::new(&[16, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0u64; 2];
        for _ in 0..20_000 {
            counts[sampler.sample(&mut rng)] += 1;
        }
        // Weight ratio is 16^0.75 : 1 = 8 : 1.
        let ratio = counts[0] as f64 / counts[1] as f64;
        assert!((ratio - 8.0).abs() < 1.0, "ratio {ratio}");
    }
}
