//! An exactly enumerable autoregressive model over a tiny vocabulary.
//!
//! The model emits tokens after a begin marker until an end marker; a hard
//! cap forces the end marker so the support is finite and every sequence
//! probability is exact. That makes the intractable expected-utility target
//! computable by full enumeration, which is what every oracle test here
//! leans on.
//!
//! `max_length` caps the number of generated tokens including the closing
//! end marker, so body length is at most `max_length - 1`. When a body
//! reaches that cap the next step folds all conditional mass into the end
//! marker (the step has probability 1).

mod sampling;

pub use sampling::{truncate_distribution, SamplerConfig, TruncationAlgorithm};

use std::collections::{BTreeMap, HashMap, VecDeque};

use thiserror::Error;

use crate::logprob::LogProb;

/// Surface form of the begin marker in configs and sequence APIs.
pub const BOS: &str = "<bos>";
/// Surface form of the end marker.
pub const EOS: &str = "<eos>";

/// Conditional vectors must sum to 1 within this tolerance.
pub const CONDITIONAL_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ToyLmError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("malformed sequence: {0}")]
    MalformedSequence(String),
    #[error("support exceeds the enumeration budget of {budget} sequences")]
    BudgetExceeded { budget: usize },
    #[error("invalid sampler config: {0}")]
    InvalidSamplerConfig(String),
}

const BOS_ID: usize = 0;
const EOS_ID: usize = 1;

/// Order-n conditional table over a small vocabulary, with exact sequence
/// probabilities and full-support enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyLm {
    /// All symbols; index 0 is the begin marker, index 1 the end marker.
    vocabulary: Vec<String>,
    order: usize,
    max_length: usize,
    /// Context (exactly `order` ids, left-padded with the begin marker) to a
    /// probability vector aligned with `vocabulary`.
    conditionals: HashMap<Vec<usize>, Vec<f64>>,
}

impl ToyLm {
    /// Builds a model from named conditionals.
    ///
    /// `conditionals` maps a space-joined context (use `<bos>` for padding)
    /// to per-symbol probabilities; symbols absent from an entry get
    /// probability 0. Every context reachable before the forced end step
    /// must be present, every vector must sum to 1, and no context may emit
    /// the begin marker.
    pub fn new(
        body_symbols: Vec<String>,
        order: usize,
        max_length: usize,
        conditionals: &BTreeMap<String, BTreeMap<String, f64>>,
    ) -> Result<Self, ToyLmError> {
        if order == 0 {
            return Err(ToyLmError::InvalidModel("order must be at least 1".into()));
        }
        if max_length == 0 {
            return Err(ToyLmError::InvalidModel(
                "max_length must be at least 1".into(),
            ));
        }
        if body_symbols.is_empty() {
            return Err(ToyLmError::InvalidModel(
                "vocabulary needs at least one body symbol".into(),
            ));
        }

        let mut vocabulary = vec![BOS.to_string(), EOS.to_string()];
        vocabulary.extend(body_symbols);
        let index: HashMap<&str, usize> = vocabulary
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        if index.len() != vocabulary.len() {
            return Err(ToyLmError::InvalidModel("duplicate symbol".into()));
        }

        let mut table = HashMap::new();
        for (ctx_str, probs) in conditionals {
            let ctx = parse_context(ctx_str, &index, order)?;
            let mut vector = vec![0.0; vocabulary.len()];
            for (symbol, &p) in probs {
                let id = *index.get(symbol.as_str()).ok_or_else(|| {
                    ToyLmError::InvalidModel(format!("unknown symbol {symbol:?} in conditionals"))
                })?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(ToyLmError::InvalidModel(format!(
                        "probability {p} for {symbol:?} out of [0, 1]"
                    )));
                }
                vector[id] = p;
            }
            table.insert(ctx, vector);
        }

        let lm = ToyLm {
            vocabulary,
            order,
            max_length,
            conditionals: table,
        };
        lm.validate()?;
        Ok(lm)
    }

    /// A random order-1 model: all conditional entries positive, so the
    /// support is every body up to length `max_length - 1`.
    pub fn random(body_symbols: usize, max_length: usize, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

        let names: Vec<String> = (0..body_symbols).map(symbol_name).collect();
        let mut conditionals = BTreeMap::new();
        for ctx in std::iter::once(BOS.to_string()).chain(names.iter().cloned()) {
            let mut probs = BTreeMap::new();
            let mut weights: Vec<f64> = (0..=body_symbols)
                .map(|_| rng.random_range(0.05..1.0))
                .collect();
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
            probs.insert(EOS.to_string(), weights[0]);
            for (name, w) in names.iter().zip(&weights[1..]) {
                probs.insert(name.clone(), *w);
            }
            conditionals.insert(ctx, probs);
        }
        ToyLm::new(names, 1, max_length, &conditionals).expect("random model is valid")
    }

    /// The standing test model: order 1, four body symbols, bodies up to
    /// six tokens (support of 5461 sequences).
    pub fn random_default(seed: u64) -> Self {
        ToyLm::random(4, 7, seed)
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    /// Largest body length a complete sequence can have.
    pub fn max_body_len(&self) -> usize {
        self.max_length - 1
    }

    pub(crate) fn conditional(&self, ctx: &[usize]) -> &[f64] {
        &self.conditionals[ctx]
    }

    pub(crate) fn initial_context(&self) -> Vec<usize> {
        vec![BOS_ID; self.order]
    }

    pub(crate) fn shift_context(&self, ctx: &mut Vec<usize>, symbol: usize) {
        ctx.remove(0);
        ctx.push(symbol);
    }

    pub(crate) fn eos_id(&self) -> usize {
        EOS_ID
    }

    fn symbol_id(&self, symbol: &str) -> Option<usize> {
        self.vocabulary.iter().position(|s| s == symbol)
    }

    /// Renders a body (ids) as its surface string.
    pub(crate) fn body_text(&self, body: &[usize]) -> String {
        body.iter()
            .map(|&id| self.vocabulary[id].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Exact log-probability of a complete sequence given as tokens
    /// `[<bos>, body..., <eos>]`. Zero-probability sequences return log(0);
    /// structural problems are errors.
    pub fn logprob(&self, tokens: &[&str]) -> Result<LogProb, ToyLmError> {
        if tokens.len() < 2 || tokens[0] != BOS || tokens[tokens.len() - 1] != EOS {
            return Err(ToyLmError::MalformedSequence(
                "sequence must start with <bos> and end with <eos>".into(),
            ));
        }
        let body: Vec<usize> = tokens[1..tokens.len() - 1]
            .iter()
            .map(|t| match self.symbol_id(t) {
                Some(BOS_ID) | Some(EOS_ID) | None => Err(ToyLmError::MalformedSequence(
                    format!("unexpected token {t:?} in sequence body"),
                )),
                Some(id) => Ok(id),
            })
            .collect::<Result<_, _>>()?;
        if body.len() > self.max_body_len() {
            return Err(ToyLmError::MalformedSequence(format!(
                "body of {} tokens exceeds the cap of {}",
                body.len(),
                self.max_body_len()
            )));
        }
        Ok(self.body_logprob(&body))
    }

    /// Exact log-probability of a body given as its surface string (markers
    /// implied). The empty string is the empty body.
    pub fn logprob_body_text(&self, text: &str) -> Result<LogProb, ToyLmError> {
        let mut tokens = vec![BOS];
        tokens.extend(text.split_whitespace());
        tokens.push(EOS);
        self.logprob(&tokens)
    }

    fn body_logprob(&self, body: &[usize]) -> LogProb {
        let mut ctx = self.initial_context();
        let mut total = 0.0f64;
        for &sym in body {
            let p = self.conditional(&ctx)[sym];
            if p == 0.0 {
                return LogProb::ZERO;
            }
            total += p.ln();
            self.shift_context(&mut ctx, sym);
        }
        // Closing end marker: forced (probability 1) at the cap.
        if body.len() < self.max_body_len() {
            let p = self.conditional(&ctx)[EOS_ID];
            if p == 0.0 {
                return LogProb::ZERO;
            }
            total += p.ln();
        }
        LogProb::new(total.min(0.0)).expect("finite log-probability")
    }

    /// All complete sequences with positive probability, as (body text,
    /// exact logprob), in depth-first vocabulary order. Masses sum to 1.
    pub fn enumerate(&self, budget: usize) -> Result<Vec<(String, LogProb)>, ToyLmError> {
        let mut out = Vec::new();
        let mut stack = vec![(self.initial_context(), Vec::<usize>::new(), 0.0f64)];
        while let Some((ctx, body, logp)) = stack.pop() {
            if body.len() == self.max_body_len() {
                push_sequence(&mut out, self.body_text(&body), logp, budget)?;
                continue;
            }
            let probs = self.conditional(&ctx);
            if probs[EOS_ID] > 0.0 {
                push_sequence(
                    &mut out,
                    self.body_text(&body),
                    logp + probs[EOS_ID].ln(),
                    budget,
                )?;
            }
            // Reverse so the stack pops body symbols in vocabulary order.
            for (sym, &p) in probs.iter().enumerate().skip(EOS_ID + 1).rev() {
                if p > 0.0 {
                    let mut next_ctx = ctx.clone();
                    self.shift_context(&mut next_ctx, sym);
                    let mut next_body = body.clone();
                    next_body.push(sym);
                    stack.push((next_ctx, next_body, logp + p.ln()));
                }
            }
        }
        Ok(out)
    }

    /// Contexts reachable before the forced end step, starting from the
    /// all-begin-marker padding.
    fn reachable_contexts(&self) -> Result<Vec<Vec<usize>>, ToyLmError> {
        let mut seen = std::collections::HashSet::new();
        let mut queue = VecDeque::new();
        // (context, body length); lookups happen while body < cap.
        queue.push_back((self.initial_context(), 0usize));
        seen.insert(self.initial_context());
        let mut out = Vec::new();
        while let Some((ctx, depth)) = queue.pop_front() {
            if depth >= self.max_body_len() {
                continue;
            }
            let probs = self.conditionals.get(&ctx).ok_or_else(|| {
                ToyLmError::InvalidModel(format!(
                    "missing conditional for reachable context {:?}",
                    self.context_text(&ctx)
                ))
            })?;
            out.push(ctx.clone());
            for (sym, &p) in probs.iter().enumerate().skip(EOS_ID + 1) {
                if p > 0.0 {
                    let mut next = ctx.clone();
                    self.shift_context(&mut next, sym);
                    if seen.insert(next.clone()) {
                        queue.push_back((next, depth + 1));
                    }
                }
            }
        }
        Ok(out)
    }

    fn context_text(&self, ctx: &[usize]) -> String {
        ctx.iter()
            .map(|&id| self.vocabulary[id].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Body symbols, excluding the markers.
    pub fn body_symbols(&self) -> &[String] {
        &self.vocabulary[2..]
    }

    /// The conditional table keyed by symbol names, zero entries omitted.
    /// Round-trips through the config file format.
    pub fn named_conditionals(&self) -> BTreeMap<String, BTreeMap<String, f64>> {
        self.conditionals
            .iter()
            .map(|(ctx, probs)| {
                let entries = probs
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(id, &p)| (self.vocabulary[id].clone(), p))
                    .collect();
                (self.context_text(ctx), entries)
            })
            .collect()
    }

    fn validate(&self) -> Result<(), ToyLmError> {
        for (ctx, probs) in &self.conditionals {
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > CONDITIONAL_SUM_TOLERANCE {
                return Err(ToyLmError::InvalidModel(format!(
                    "conditional for {:?} sums to {sum}",
                    self.context_text(ctx)
                )));
            }
            if probs[BOS_ID] != 0.0 {
                return Err(ToyLmError::InvalidModel(format!(
                    "context {:?} assigns mass to the begin marker",
                    self.context_text(ctx)
                )));
            }
            if probs.iter().any(|p| *p < 0.0 || p.is_nan()) {
                return Err(ToyLmError::InvalidModel(format!(
                    "negative probability under context {:?}",
                    self.context_text(ctx)
                )));
            }
        }
        // Triggers MissingContext for any reachable gap.
        self.reachable_contexts()?;
        Ok(())
    }
}

fn push_sequence(
    out: &mut Vec<(String, LogProb)>,
    text: String,
    logp: f64,
    budget: usize,
) -> Result<(), ToyLmError> {
    if out.len() >= budget {
        return Err(ToyLmError::BudgetExceeded { budget });
    }
    out.push((text, LogProb::new(logp.min(0.0)).expect("finite logprob")));
    Ok(())
}

fn parse_context(
    ctx_str: &str,
    index: &HashMap<&str, usize>,
    order: usize,
) -> Result<Vec<usize>, ToyLmError> {
    let parts: Vec<&str> = ctx_str.split_whitespace().collect();
    if parts.len() != order {
        return Err(ToyLmError::InvalidModel(format!(
            "context {ctx_str:?} has {} symbols, expected {order}",
            parts.len()
        )));
    }
    parts
        .iter()
        .map(|p| {
            index.get(p).copied().ok_or_else(|| {
                ToyLmError::InvalidModel(format!("unknown symbol {p:?} in context"))
            })
        })
        .collect()
}

fn symbol_name(i: usize) -> String {
    if i < 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("s{i}")
    }
}
