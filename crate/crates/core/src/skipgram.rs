//! Skip-gram training with negative sampling on walk corpora.
//!
//! Every node within the window of a walk position forms a positive pair
//! with it; each positive pair draws `negatives` noise nodes from the
//! corpus unigram distribution raised to 3/4. Gradient ascent maximizes
//!
//! ```text
//! log sigma(e_c . e_ctx) + sum_j log sigma(-e_c . e_nj)
//! ```
//!
//! with a step size decaying linearly over all processed pairs. Training
//! runs deterministically with one worker; with more workers parameter
//! rows are updated lock-free and results are statistical.

use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alias::AliasTable;
use crate::error::{Error, Result};
use crate::hogwild::SharedMatrix;
use crate::walks::WalkCorpus;

/// Inputs beyond this magnitude saturate the logistic function.
const SIGMOID_CLAMP: f64 = 30.0;
/// The step size decays linearly to this fraction of its initial value.
const FINAL_STEP_FRACTION: f64 = 1e-4;
/// Exponent flattening the unigram noise distribution.
const NOISE_EXPONENT: f64 = 0.75;

#[derive(Copy, Clone, Debug)]
pub struct TrainConfig {
    /// Embedding dimension.
    pub dim: usize,
    /// Symmetric window size, truncated at walk boundaries.
    pub window: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    /// Passes over the walk corpus.
    pub epochs: usize,
    /// Initial SGD step size.
    pub step_size: f64,
    pub seed: u64,
    /// Worker threads; 1 is the deterministic reference mode.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            window: 10,
            negatives: 10,
            epochs: 5,
            step_size: 0.025,
            seed: 1,
            workers: 1,
        }
    }
}

/// Input and context vectors, one row per line-graph node. The input rows
/// are the final embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    node_count: usize,
    dim: usize,
    input: Vec<f32>,
    context: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Final embedding of a node (its input vector).
    pub fn embedding(&self, node: usize) -> &[f32] {
        &self.input[node * self.dim..(node + 1) * self.dim]
    }

    pub fn context_vector(&self, node: usize) -> &[f32] {
        &self.context[node * self.dim..(node + 1) * self.dim]
    }

    pub fn all_finite(&self) -> bool {
        self.input.iter().chain(self.context.iter()).all(|v| v.is_finite())
    }

    /// Embeddings as an `node_count x dim` f64 row-major matrix, the form
    /// the evaluation operations consume.
    pub fn to_f64_rows(&self) -> Vec<f64> {
        self.input.iter().map(|&v| v as f64).collect()
    }
}

// ---------------------------------------------------------------------
// Shared scalar kernels; instantiated at f64 for the checked gradient
// path and at f32 for the training loop.
// ---------------------------------------------------------------------

pub(crate) trait Real:
    Copy
    + PartialOrd
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(v: f64) -> Self;
    fn exp(self) -> Self;
}

impl Real for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn exp(self) -> Self {
        f32::exp(self)
    }
}

impl Real for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
}

#[inline]
fn sigmoid_generic<T: Real>(x: T) -> T {
    let cap = T::from_f64(SIGMOID_CLAMP);
    let x = if x > cap {
        cap
    } else if x < -cap {
        -cap
    } else {
        x
    };
    T::ONE / (T::ONE + (-x).exp())
}

/// Four-lane dot product: a fixed summation order (so results stay
/// reproducible) that still breaks the add dependency chain.
#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [T::ZERO; 4];
    for (ca, cb) in a.chunks_exact(4).zip(b.chunks_exact(4)) {
        lanes[0] = lanes[0] + ca[0] * cb[0];
        lanes[1] = lanes[1] + ca[1] * cb[1];
        lanes[2] = lanes[2] + ca[2] * cb[2];
        lanes[3] = lanes[3] + ca[3] * cb[3];
    }
    let mut sum = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
    let tail = a.len() / 4 * 4;
    for (&x, &y) in a[tail..].iter().zip(&b[tail..]) {
        sum = sum + x * y;
    }
    sum
}

/// y += a * x
#[inline]
fn axpy<T: Real>(y: &mut [T], x: &[T], a: T) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * xi;
    }
}

/// Logistic function with the input clamped to +-30.
pub fn sigmoid(x: f64) -> f64 {
    sigmoid_generic(x)
}

fn check_dims(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> Result<()> {
    let d = center.len();
    if context.len() != d || negatives.iter().any(|n| n.len() != d) {
        return Err(Error::DimensionMismatch(format!(
            "center has dimension {d} but context/negatives differ"
        )));
    }
    Ok(())
}

/// Value of the negative-sampling objective for one positive pair and its
/// sampled negatives.
pub fn pair_objective(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> Result<f64> {
    check_dims(center, context, negatives)?;
    let mut value = sigmoid(dot(center, context)).ln();
    for neg in negatives {
        value += sigmoid(-dot(center, neg)).ln();
    }
    Ok(value)
}

/// Gradient of [`pair_objective`] with respect to every parameter vector.
pub fn pair_gradient(
    center: &[f64],
    context: &[f64],
    negatives: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    check_dims(center, context, negatives)?;
    let d = center.len();
    let mut grad_center = vec![0.0; d];
    let mut grad_context = vec![0.0; d];
    let mut grad_negatives = vec![vec![0.0; d]; negatives.len()];

    // d/dx log sigma(x) = 1 - sigma(x); the same coefficient drives the
    // in-place updates of the training loop.
    let g = 1.0 - sigmoid(dot(center, context));
    axpy(&mut grad_context, center, g);
    axpy(&mut grad_center, context, g);
    for (neg, grad_neg) in negatives.iter().zip(&mut grad_negatives) {
        let g = 0.0 - sigmoid(dot(center, neg));
        axpy(grad_neg, center, g);
        axpy(&mut grad_center, neg, g);
    }
    Ok((grad_center, grad_context, grad_negatives))
}

/// One in-place ascent step for a (center, output) pair: updates the
/// output row immediately and accumulates the center update in `delta`.
#[inline]
fn step_output<T: Real>(center: &[T], output: &mut [T], label: bool, lr: T, delta: &mut [T]) {
    let x = dot(center, output);
    let target = if label { T::ONE } else { T::ZERO };
    let g = (target - sigmoid_generic(x)) * lr;
    axpy(delta, output, g);
    axpy(output, center, g);
}

/// Ordered in-window pairs contributed by a walk of length `len`.
fn pairs_in_walk(len: usize, window: usize) -> u64 {
    if len < 2 {
        return 0;
    }
    let len = len as u64;
    let w = window as u64;
    if len - 1 <= w {
        len * (len - 1)
    } else {
        w * (2 * len - w - 1)
    }
}

fn walk_rng(seed: u64, epoch: usize, walk: usize) -> ChaCha8Rng {
    let mut z = seed
        ^ 0xd6e8_feb8_6659_fd93u64.wrapping_mul(epoch as u64 + 1)
        ^ 0xa5a5_b7c9_3d21_7e61u64.wrapping_mul(walk as u64 + 1);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

/// Trains embeddings over the walk corpus. With `workers == 1` the result
/// is a deterministic function of the corpus and config.
pub fn train(corpus: &WalkCorpus, cfg: &TrainConfig) -> EmbeddingMatrix {
    let nodes = corpus.node_count();
    let dim = cfg.dim;

    let mut input = vec![0.0f32; nodes * dim];
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for v in input.iter_mut() {
        *v = (init_rng.random::<f32>() - 0.5) / dim as f32;
    }
    let mut context = vec![0.0f32; nodes * dim];

    // Noise distribution: corpus frequency ^ 3/4.
    let mut counts = vec![0.0f64; nodes];
    for walk in corpus.walks() {
        for &t in walk {
            counts[t as usize] += 1.0;
        }
    }
    let noise_weights: Vec<f64> = counts.iter().map(|&c| c.powf(NOISE_EXPONENT)).collect();
    let noise = AliasTable::new(&noise_weights).expect("corpus is non-empty");
    // With a single sampleable node the exclusion loop below cannot finish.
    let noise_support = noise_weights.iter().filter(|&&w| w > 0.0).count();

    let total_pairs: u64 = (0..cfg.epochs)
        .map(|_| {
            corpus
                .walks()
                .iter()
                .map(|w| pairs_in_walk(w.len(), cfg.window))
                .sum::<u64>()
        })
        .sum();
    let pair_counter = AtomicU64::new(0);

    let workers = cfg.workers.max(1);

    for epoch in 0..cfg.epochs {
        {
            let input_shared = SharedMatrix::new(&mut input, dim);
            let context_shared = SharedMatrix::new(&mut context, dim);
            std::thread::scope(|scope| {
                for worker in 0..workers {
                    let input = &input_shared;
                    let context = &context_shared;
                    let noise = &noise;
                    let pair_counter = &pair_counter;
                    scope.spawn(move || {
                        let mut delta = vec![0.0f32; dim];
                        for (walk_idx, walk) in corpus.walks().iter().enumerate() {
                            if walk_idx % workers != worker {
                                continue;
                            }
                            let walk_pairs = pairs_in_walk(walk.len(), cfg.window);
                            if walk_pairs == 0 {
                                continue;
                            }
                            let base = pair_counter.fetch_add(walk_pairs, Ordering::Relaxed);
                            let mut rng = walk_rng(cfg.seed, epoch, walk_idx);
                            let mut done = 0u64;
                            for (i, &center) in walk.iter().enumerate() {
                                let lo = i.saturating_sub(cfg.window);
                                let hi = (i + cfg.window).min(walk.len() - 1);
                                for j in lo..=hi {
                                    if j == i {
                                        continue;
                                    }
                                    let progress =
                                        (base + done) as f64 / total_pairs.max(1) as f64;
                                    let lr = (cfg.step_size
                                        * (1.0 - progress).max(FINAL_STEP_FRACTION))
                                        as f32;
                                    let positive = walk[j] as usize;
                                    // Safety: rows may alias across workers;
                                    // the lock-free update contract accepts
                                    // the race.
                                    let center_row = unsafe { input.row(center as usize) };
                                    delta.fill(0.0);
                                    let ctx_row = unsafe { context.row(positive) };
                                    step_output(center_row, ctx_row, true, lr, &mut delta);
                                    if noise_support > 1 {
                                        for _ in 0..cfg.negatives {
                                            let mut neg = noise.sample(&mut rng);
                                            while neg == positive {
                                                neg = noise.sample(&mut rng);
                                            }
                                            let neg_row = unsafe { context.row(neg) };
                                            step_output(center_row, neg_row, false, lr, &mut delta);
                                        }
                                    }
                                    axpy(center_row, &delta, 1.0);
                                    done += 1;
                                }
                            }
                        }
                    });
                }
            });
        }
        assert!(
            input.iter().chain(context.iter()).all(|v| v.is_finite()),
            "non-finite parameter after epoch {epoch}"
        );
    }

    EmbeddingMatrix {
        node_count: nodes,
        dim,
        input,
        context,
    }
}

// ---------------------------------------------------------------------
// Text embedding format: header `count dim`, then `token v1 ... vd` rows.
// ---------------------------------------------------------------------

/// Percent-escapes the bytes that would break the space-separated
/// embedding format or the `|` token separator.
pub fn escape_token(raw: &str) -> String {
    let mut out = Vec::with_capacity(raw.len());
    for &b in raw.as_bytes() {
        let needs_escape = matches!(b, b'%' | b'|' | b' ' | b'\t' | b'\n' | b'\r') || b < 0x20;
        if needs_escape {
            out.extend_from_slice(format!("%{b:02X}").as_bytes());
        } else {
            out.push(b);
        }
    }
    String::from_utf8(out).expect("escaping preserves UTF-8 validity")
}

pub fn unescape_token(escaped: &str) -> Result<String> {
    let bytes = escaped.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = escaped
                .get(i + 1..i + 3)
                .ok_or_else(|| Error::Incompatible(format!("truncated escape in '{escaped}'")))?;
            let value = u8::from_str_radix(hex, 16)
                .map_err(|_| Error::Incompatible(format!("bad escape '%{hex}'")))?;
            out.push(value);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| Error::Incompatible("escape decodes to invalid UTF-8".into()))
}

/// Tokens naming each line-graph node: `s|p|o` for triples, `i|j` for
/// edges, with components percent-escaped.
pub fn line_node_tokens(
    line: &crate::linegraph::TripleLineGraph,
    kg: Option<&crate::graph::KnowledgeGraph>,
    hg: Option<&crate::graph::HomogeneousGraph>,
) -> Result<Vec<String>> {
    use crate::linegraph::LineGraphOrigin;
    match line.origin() {
        LineGraphOrigin::Knowledge(ts) => {
            let g = kg.ok_or_else(|| {
                Error::Incompatible("token naming needs the source knowledge graph".into())
            })?;
            Ok(ts
                .iter()
                .map(|t| {
                    format!(
                        "{}|{}|{}",
                        escape_token(g.entity_name(t.subject)),
                        escape_token(g.predicate_name(t.predicate)),
                        escape_token(g.entity_name(t.object))
                    )
                })
                .collect())
        }
        LineGraphOrigin::Homogeneous(es) => {
            let g = hg.ok_or_else(|| {
                Error::Incompatible("token naming needs the source homogeneous graph".into())
            })?;
            Ok(es
                .iter()
                .map(|&(i, j)| {
                    format!(
                        "{}|{}",
                        escape_token(g.node_name(i)),
                        escape_token(g.node_name(j))
                    )
                })
                .collect())
        }
    }
}

/// Writes input vectors in the word2vec text format. `tokens` must have
/// one entry per node.
pub fn save_embeddings<W: Write>(matrix: &EmbeddingMatrix, tokens: &[String], mut w: W) -> Result<()> {
    if tokens.len() != matrix.node_count {
        return Err(Error::DimensionMismatch(format!(
            "{} tokens for {} embedding rows",
            tokens.len(),
            matrix.node_count
        )));
    }
    use std::fmt::Write as _;
    let mut buf = String::new();
    writeln!(w, "{} {}", matrix.node_count, matrix.dim)?;
    for (i, token) in tokens.iter().enumerate() {
        buf.clear();
        buf.push_str(token);
        for v in matrix.embedding(i) {
            let _ = write!(buf, " {v}");
        }
        buf.push('\n');
        w.write_all(buf.as_bytes())?;
    }
    Ok(())
}

/// Reads a text embedding file back; context vectors are zeroed.
pub fn load_embeddings<R: BufRead>(mut r: R) -> Result<(Vec<String>, EmbeddingMatrix)> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let mut parts = header.split_whitespace();
    let (count, dim) = match (parts.next(), parts.next(), parts.next()) {
        (Some(c), Some(d), None) => {
            let count: usize = c.parse().map_err(|_| Error::parse(1, "bad node count"))?;
            let dim: usize = d.parse().map_err(|_| Error::parse(1, "bad dimension"))?;
            (count, dim)
        }
        _ => return Err(Error::parse(1, "header must be `count dim`")),
    };

    let mut tokens = Vec::with_capacity(count);
    let mut input = Vec::with_capacity(count * dim);
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let token = fields
            .next()
            .ok_or_else(|| Error::parse(idx + 2, "missing token"))?;
        let before = input.len();
        for field in fields {
            let v: f32 = field
                .parse()
                .map_err(|_| Error::parse(idx + 2, format!("bad value '{field}'")))?;
            input.push(v);
        }
        if input.len() - before != dim {
            return Err(Error::parse(
                idx + 2,
                format!("expected {dim} values, got {}", input.len() - before),
            ));
        }
        tokens.push(token.to_string());
    }
    if tokens.len() != count {
        return Err(Error::DimensionMismatch(format!(
            "header promised {count} rows, file has {}",
            tokens.len()
        )));
    }
    let context = vec![0.0f32; count * dim];
    Ok((
        tokens,
        EmbeddingMatrix {
            node_count: count,
            dim,
            input,
            context,
        },
    ))
}
