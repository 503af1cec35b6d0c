//! CBOW training with negative sampling.
//!
//! For every position the context is the set of in-vocabulary tokens within a
//! radius drawn uniformly from `1..=window`. The hidden vector is the mean of
//! their input rows, and the per-example loss is
//!
//! ```text
//! -ln σ(h·out[target]) - Σ_neg ln σ(-h·out[neg])
//! ```
//!
//! with negatives drawn from the unigram distribution raised to 3/4.

use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};
use std::sync::Mutex;

use num_traits::Float;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::Vocab;
use super::{EmbeddingError, EmbeddingModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbowConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f32,
    /// Floor of the linearly decayed learning rate.
    pub min_learning_rate: f32,
    pub min_count: u64,
    pub seed: u64,
    /// Frequent-token subsampling threshold; `None` disables it.
    pub subsample: Option<f64>,
    /// Worker threads. Anything above 1 trains with unsynchronized shared
    /// updates and is not reproducible.
    pub workers: usize,
}

impl Default for CbowConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            min_count: 2,
            seed: 1,
            subsample: None,
            workers: 1,
        }
    }
}

impl CbowConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |msg: &str| Err(EmbeddingError::InvalidConfig(msg.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.min_count == 0 {
            return bad("min_count must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.min_learning_rate.is_finite() && self.min_learning_rate > 0.0) {
            return bad("min_learning_rate must be positive");
        }
        if matches!(self.subsample, Some(t) if !(t.is_finite() && t > 0.0)) {
            return bad("subsample threshold must be positive");
        }
        Ok(())
    }

    /// Parses `key=value` lines (`#` comments allowed) over the defaults.
    pub fn from_key_values(text: &str) -> Result<Self, EmbeddingError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| {
                EmbeddingError::InvalidConfig(format!("config line {}: {what}", i + 1))
            };
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| bad("invalid number"));
            let int = |v: &str| v.parse::<u64>().map_err(|_| bad("invalid integer"));
            match key {
                "dim" => cfg.dim = int(value)? as usize,
                "window" => cfg.window = int(value)? as usize,
                "negatives" => cfg.negatives = int(value)? as usize,
                "epochs" => cfg.epochs = int(value)? as usize,
                "learning_rate" => cfg.learning_rate = num(value)? as f32,
                "min_learning_rate" => cfg.min_learning_rate = num(value)? as f32,
                "min_count" => cfg.min_count = int(value)?,
                "seed" => cfg.seed = int(value)?,
                "workers" => cfg.workers = int(value)? as usize,
                "subsample" => {
                    cfg.subsample = match value {
                        "" | "none" | "off" => None,
                        v => Some(num(v)?),
                    }
                }
                other => return Err(bad(&format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Mean training loss per example, one entry per epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingReport {
    pub epoch_losses: Vec<f64>,
    pub examples: u64,
}

/// Row-addressable weight matrix the SGD kernel reads and updates.
pub(crate) trait Rows<F> {
    fn read_row(&self, row: u32, out: &mut [F]);
    fn dot_row(&self, row: u32, v: &[F]) -> F;
    /// `row += a * x`
    fn add_scaled(&mut self, row: u32, a: F, x: &[F]);
}

pub(crate) struct DenseRows<'a, F> {
    pub data: &'a mut [F],
    pub dim: usize,
}

impl<F: Float> Rows<F> for DenseRows<'_, F> {
    fn read_row(&self, row: u32, out: &mut [F]) {
        let start = row as usize * self.dim;
        out.copy_from_slice(&self.data[start..start + self.dim]);
    }

    fn dot_row(&self, row: u32, v: &[F]) -> F {
        let start = row as usize * self.dim;
        self.data[start..start + self.dim]
            .iter()
            .zip(v)
            .fold(F::zero(), |acc, (a, b)| acc + *a * *b)
    }

    fn add_scaled(&mut self, row: u32, a: F, x: &[F]) {
        let start = row as usize * self.dim;
        for (w, xi) in self.data[start..start + self.dim].iter_mut().zip(x) {
            *w = *w + a * *xi;
        }
    }
}

/// f32 matrix shared between workers. Reads and writes are relaxed atomic
/// loads/stores, so concurrent read-modify-write sequences may lose updates.
struct SharedRows<'a> {
    data: &'a [AtomicU32],
    dim: usize,
}

impl Rows<f32> for SharedRows<'_> {
    fn read_row(&self, row: u32, out: &mut [f32]) {
        let start = row as usize * self.dim;
        for (o, cell) in out.iter_mut().zip(&self.data[start..start + self.dim]) {
            *o = f32::from_bits(cell.load(Ordering::Relaxed));
        }
    }

    fn dot_row(&self, row: u32, v: &[f32]) -> f32 {
        let start = row as usize * self.dim;
        self.data[start..start + self.dim]
            .iter()
            .zip(v)
            .fold(0.0, |acc, (c, b)| acc + f32::from_bits(c.load(Ordering::Relaxed)) * b)
    }

    fn add_scaled(&mut self, row: u32, a: f32, x: &[f32]) {
        let start = row as usize * self.dim;
        for (cell, xi) in self.data[start..start + self.dim].iter().zip(x) {
            let w = f32::from_bits(cell.load(Ordering::Relaxed));
            cell.store((w + a * xi).to_bits(), Ordering::Relaxed);
        }
    }
}

/// Scratch buffers reused across examples.
pub(crate) struct Scratch<F> {
    hidden: Vec<F>,
    row: Vec<F>,
    hidden_grad: Vec<F>,
}

impl<F: Float> Scratch<F> {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            hidden: vec![F::zero(); dim],
            row: vec![F::zero(); dim],
            hidden_grad: vec![F::zero(); dim],
        }
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus<F: Float>(x: F) -> F {
    if x > F::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid<F: Float>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// One SGD step on a single CBOW example; returns the example's loss
/// evaluated before the update.
///
/// With learning rate `lr` every touched parameter moves by exactly
/// `-lr * ∂loss/∂param`, provided `negatives` holds no duplicates and
/// does not contain `target`.
pub(crate) fn cbow_step<F, I, O>(
    input: &mut I,
    output: &mut O,
    context: &[u32],
    target: u32,
    negatives: &[u32],
    lr: F,
    scratch: &mut Scratch<F>,
) -> F
where
    F: Float,
    I: Rows<F>,
    O: Rows<F>,
{
    debug_assert!(!context.is_empty());
    let inv_n = F::one() / F::from(context.len()).expect("context length fits");
    scratch.hidden.iter_mut().for_each(|h| *h = F::zero());
    for &c in context {
        input.read_row(c, &mut scratch.row);
        for (h, r) in scratch.hidden.iter_mut().zip(&scratch.row) {
            *h = *h + *r;
        }
    }
    scratch.hidden.iter_mut().for_each(|h| *h = *h * inv_n);
    scratch.hidden_grad.iter_mut().for_each(|g| *g = F::zero());

    let mut loss = F::zero();
    let samples = std::iter::once((target, F::one())).chain(negatives.iter().map(|&n| (n, F::zero())));
    for (word, label) in samples {
        let s = output.dot_row(word, &scratch.hidden);
        loss = loss + if label > F::zero() { softplus(-s) } else { softplus(s) };
        // -∂loss/∂s, scaled by the learning rate
        let g = (label - sigmoid(s)) * lr;
        output.read_row(word, &mut scratch.row);
        for (acc, o) in scratch.hidden_grad.iter_mut().zip(&scratch.row) {
            *acc = *acc + g * *o;
        }
        output.add_scaled(word, g, &scratch.hidden);
    }
    for &c in context {
        input.add_scaled(c, inv_n, &scratch.hidden_grad);
    }
    loss
}

/// Example loss without touching any weights.
pub fn cbow_loss<F: Float>(
    input: &[F],
    output: &[F],
    dim: usize,
    context: &[u32],
    target: u32,
    negatives: &[u32],
) -> F {
    let inv_n = F::one() / F::from(context.len()).expect("context length fits");
    let mut hidden = vec![F::zero(); dim];
    for &c in context {
        let row = &input[c as usize * dim..(c as usize + 1) * dim];
        for (h, r) in hidden.iter_mut().zip(row) {
            *h = *h + *r * inv_n;
        }
    }
    let score = |w: u32| {
        output[w as usize * dim..(w as usize + 1) * dim]
            .iter()
            .zip(&hidden)
            .fold(F::zero(), |acc, (a, b)| acc + *a * *b)
    };
    negatives
        .iter()
        .fold(softplus(-score(target)), |acc, &n| acc + softplus(score(n)))
}

/// Analytic gradients of one example's loss.
#[derive(Debug, Clone, PartialEq)]
pub struct CbowGradient<F> {
    pub loss: F,
    /// `∂loss/∂input`, same layout as the input matrix.
    pub input: Vec<F>,
    /// `∂loss/∂output`, same layout as the output matrix.
    pub output: Vec<F>,
}

/// Runs the training kernel once with unit learning rate on copies of the
/// weights and reads the gradient back off the parameter change.
pub fn cbow_gradient<F: Float>(
    input: &[F],
    output: &[F],
    dim: usize,
    context: &[u32],
    target: u32,
    negatives: &[u32],
) -> CbowGradient<F> {
    let mut new_in = input.to_vec();
    let mut new_out = output.to_vec();
    let mut scratch = Scratch::new(dim);
    let loss = cbow_step(
        &mut DenseRows { data: &mut new_in, dim },
        &mut DenseRows { data: &mut new_out, dim },
        context,
        target,
        negatives,
        F::one(),
        &mut scratch,
    );
    CbowGradient {
        loss,
        input: input.iter().zip(&new_in).map(|(a, b)| *a - *b).collect(),
        output: output.iter().zip(&new_out).map(|(a, b)| *a - *b).collect(),
    }
}

struct Schedule {
    start: f32,
    floor: f32,
    total: f64,
}

impl Schedule {
    fn rate(&self, processed: u64) -> f32 {
        let r = self.start * (1.0 - (processed as f64 / (self.total + 1.0)) as f32);
        r.max(self.floor)
    }
}

/// Draws the context/target/negatives of each position of a sentence and
/// feeds them to `step`. Returns words seen.
#[allow(clippy::too_many_arguments)]
fn train_sentence<R, I, O>(
    sentence: &[u32],
    config: &CbowConfig,
    rng: &mut R,
    noise: &WeightedIndex<f64>,
    keep: Option<&[f64]>,
    input: &mut I,
    output: &mut O,
    scratch: &mut Scratch<f32>,
    lr_at: impl Fn(u64) -> f32,
    processed_base: u64,
    loss: &mut f64,
    examples: &mut u64,
) -> u64
where
    R: Rng,
    I: Rows<f32>,
    O: Rows<f32>,
{
    let kept: Vec<u32>;
    let sentence = match keep {
        Some(probs) => {
            kept = sentence
                .iter()
                .copied()
                .filter(|&w| rng.random::<f64>() < probs[w as usize])
                .collect();
            &kept[..]
        }
        None => sentence,
    };
    let mut context = Vec::with_capacity(2 * config.window);
    let mut negatives = Vec::with_capacity(config.negatives);
    for (pos, &target) in sentence.iter().enumerate() {
        let radius = rng.random_range(1..=config.window);
        let lo = pos.saturating_sub(radius);
        let hi = (pos + radius).min(sentence.len() - 1);
        context.clear();
        context.extend((lo..=hi).filter(|&j| j != pos).map(|j| sentence[j]));
        if context.is_empty() {
            continue;
        }
        negatives.clear();
        for _ in 0..config.negatives {
            let w = noise.sample(rng) as u32;
            if w != target {
                negatives.push(w);
            }
        }
        let lr = lr_at(processed_base + pos as u64);
        *loss += f64::from(cbow_step(input, output, &context, target, &negatives, lr, scratch));
        *examples += 1;
    }
    sentence.len() as u64
}

/// Trains on `corpus` and returns the model plus per-epoch losses.
pub fn train_cbow_with_report<I, S>(
    corpus: I,
    config: &CbowConfig,
) -> Result<(EmbeddingModel, TrainingReport), EmbeddingError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[String]>,
{
    config.validate()?;
    let raw: Vec<S> = corpus.into_iter().collect();
    let vocab = Vocab::build(raw.iter().map(AsRef::as_ref), config.min_count);
    if vocab.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary);
    }
    let sentences: Vec<Vec<u32>> = raw
        .iter()
        .map(|s| s.as_ref().iter().filter_map(|t| vocab.get(t)).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect();
    drop(raw);

    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let scale = 1.0 / dim as f32;
    let mut input: Vec<f32> = (0..vocab.len() * dim)
        .map(|_| (rng.random::<f32>() - 0.5) * scale)
        .collect();
    let mut output = vec![0.0f32; vocab.len() * dim];

    let noise = WeightedIndex::new((0..vocab.len()).map(|i| (vocab.count(i as u32) as f64).powf(0.75)))
        .expect("vocabulary counts are positive");
    let keep: Option<Vec<f64>> = config.subsample.map(|t| {
        let total = vocab.total_count() as f64;
        (0..vocab.len())
            .map(|i| {
                let f = vocab.count(i as u32) as f64;
                (((f / (t * total)).sqrt() + 1.0) * (t * total) / f).min(1.0)
            })
            .collect()
    });

    let words_per_epoch: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let schedule = Schedule {
        start: config.learning_rate,
        floor: config.min_learning_rate,
        total: (words_per_epoch * config.epochs as u64) as f64,
    };

    let mut report = TrainingReport::default();
    if config.workers == 1 {
        let mut scratch = Scratch::new(dim);
        let mut processed = 0u64;
        for _ in 0..config.epochs {
            let (mut loss, mut examples) = (0.0, 0u64);
            for sentence in &sentences {
                processed += train_sentence(
                    sentence,
                    config,
                    &mut rng,
                    &noise,
                    keep.as_deref(),
                    &mut DenseRows { data: &mut input, dim },
                    &mut DenseRows { data: &mut output, dim },
                    &mut scratch,
                    |p| schedule.rate(p),
                    processed,
                    &mut loss,
                    &mut examples,
                );
            }
            report.examples += examples;
            report.epoch_losses.push(if examples > 0 { loss / examples as f64 } else { 0.0 });
        }
    } else {
        let shared_in: Vec<AtomicU32> = input.iter().map(|v| AtomicU32::new(v.to_bits())).collect();
        let shared_out: Vec<AtomicU32> = output.iter().map(|v| AtomicU32::new(v.to_bits())).collect();
        let processed = AtomicU64::new(0);
        let chunk = sentences.len().div_ceil(config.workers).max(1);
        for epoch in 0..config.epochs {
            let totals = Mutex::new((0.0f64, 0u64));
            std::thread::scope(|scope| {
                for (worker, shard) in sentences.chunks(chunk).enumerate() {
                    let (shared_in, shared_out, processed) = (&shared_in, &shared_out, &processed);
                    let (noise, keep, schedule, totals) = (&noise, &keep, &schedule, &totals);
                    scope.spawn(move || {
                        let mut rng = ChaCha8Rng::seed_from_u64(
                            config.seed ^ (((epoch as u64) << 32) | (worker as u64 + 1)),
                        );
                        let mut scratch = Scratch::new(dim);
                        let mut input = SharedRows { data: shared_in, dim };
                        let mut output = SharedRows { data: shared_out, dim };
                        let (mut loss, mut examples) = (0.0, 0u64);
                        for sentence in shard {
                            let base = processed.load(Ordering::Relaxed);
                            let n = train_sentence(
                                sentence,
                                config,
                                &mut rng,
                                noise,
                                keep.as_deref(),
                                &mut input,
                                &mut output,
                                &mut scratch,
                                |p| schedule.rate(p),
                                base,
                                &mut loss,
                                &mut examples,
                            );
                            processed.fetch_add(n, Ordering::Relaxed);
                        }
                        let mut t = totals.lock().expect("loss totals lock");
                        t.0 += loss;
                        t.1 += examples;
                    });
                }
            });
            let (loss, examples) = totals.into_inner().expect("loss totals lock");
            report.examples += examples;
            report.epoch_losses.push(if examples > 0 { loss / examples as f64 } else { 0.0 });
        }
        input = shared_in.into_iter().map(|c| f32::from_bits(c.into_inner())).collect();
        output = shared_out.into_iter().map(|c| f32::from_bits(c.into_inner())).collect();
    }

    let model = EmbeddingModel::from_parts(vocab, dim, input, output)?;
    Ok((model, report))
}

pub fn train_cbow<I, S>(corpus: I, config: &CbowConfig) -> Result<EmbeddingModel, EmbeddingError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[String]>,
{
    train_cbow_with_report(corpus, config).map(|(model, _)| model)
}
