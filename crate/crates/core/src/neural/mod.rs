//! Hierarchical bidirectional LSTM models for causality prediction (one
//! output per message) and causal explanation identification (one output per
//! discourse argument).
//!
//! Output index 0 is the positive class (causal / explanation), index 1 the
//! negative class.

mod embeddings;
mod optim;
mod tape;
mod train;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Message;
use crate::error::{Error, Result};
use crate::segmenter::DiscourseArgument;

pub use embeddings::{da_average, EmbeddingTable};
pub use optim::{Adam, Optimizer, Sgd};
pub use train::{gradient_check, train_neural, TrainConfig, TrainOutcome};

use tape::{sigmoid, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Cp,
    Cei,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    WordOnly,
    DaAvg,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::WordOnly, Variant::DaAvg];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::WordOnly => "word_only",
            Variant::DaAvg => "da_avg",
        }
    }

    fn has_word_lstm(self) -> bool {
        matches!(self, Variant::Full | Variant::WordOnly)
    }

    fn has_da_lstm(self) -> bool {
        matches!(self, Variant::Full | Variant::DaAvg)
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "word_only" | "word" => Ok(Variant::WordOnly),
            "da_avg" => Ok(Variant::DaAvg),
            other => Err(Error::InvalidParameter(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// One direction of an LSTM. `w` is row-major `4h × (input + h)` acting on
/// `[x; h_prev]`; row blocks are the input, forget, output and candidate gates.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmWeights {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub forward: LstmWeights,
    pub backward: LstmWeights,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let w = LstmWeights {
            w: vec![0.0; 4 * hidden_dim * (input_dim + hidden_dim)],
            b: vec![0.0; 4 * hidden_dim],
        };
        LstmParams {
            input_dim,
            hidden_dim,
            forward: w.clone(),
            backward: w,
        }
    }

    fn random(input_dim: usize, hidden_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        let a = 1.0 / ((input_dim + hidden_dim) as f64).sqrt();
        for dir in [&mut p.forward, &mut p.backward] {
            for v in dir.w.iter_mut().chain(dir.b.iter_mut()) {
                *v = rng.random_range(-a..a);
            }
        }
        p
    }

    pub fn weights(&self, direction: Direction) -> &LstmWeights {
        match direction {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        }
    }

    fn validate(&self) -> Result<()> {
        let h = self.hidden_dim;
        for d in [&self.forward, &self.backward] {
            if d.w.len() != 4 * h * (self.input_dim + h) {
                return Err(Error::Dimension {
                    expected: 4 * h * (self.input_dim + h),
                    got: d.w.len(),
                });
            }
            if d.b.len() != 4 * h {
                return Err(Error::Dimension {
                    expected: 4 * h,
                    got: d.b.len(),
                });
            }
            if d.w.iter().chain(&d.b).any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite LSTM parameter".into()));
            }
        }
        Ok(())
    }
}

/// One LSTM time step computed directly, without the gradient tape.
pub fn lstm_step(
    params: &LstmParams,
    direction: Direction,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = params.hidden_dim;
    if x.len() != params.input_dim {
        return Err(Error::Dimension {
            expected: params.input_dim,
            got: x.len(),
        });
    }
    for v in [h_prev, c_prev] {
        if v.len() != h {
            return Err(Error::Dimension {
                expected: h,
                got: v.len(),
            });
        }
    }
    let wts = params.weights(direction);
    let xh: Vec<f64> = x.iter().chain(h_prev).copied().collect();
    let z: Vec<f64> = wts
        .w
        .chunks_exact(xh.len())
        .zip(&wts.b)
        .map(|(row, b)| row.iter().zip(&xh).map(|(a, c)| a * c).sum::<f64>() + b)
        .collect();
    let mut h_t = vec![0.0; h];
    let mut c_t = vec![0.0; h];
    for k in 0..h {
        let i = sigmoid(z[k]);
        let f = sigmoid(z[h + k]);
        let o = sigmoid(z[2 * h + k]);
        let g = z[3 * h + k].tanh();
        c_t[k] = f * c_prev[k] + i * g;
        h_t[k] = o * c_t[k].tanh();
    }
    Ok((h_t, c_t))
}

/// Two-class affine output layer, row-major `2 × input_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub input_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NeuralModel {
    pub task: Task,
    pub variant: Variant,
    pub embeddings: Arc<EmbeddingTable>,
    pub hidden_dim: usize,
    pub dropout_p: f64,
    pub word_lstm: Option<LstmParams>,
    pub da_lstm: Option<LstmParams>,
    pub output: Affine,
}

/// Training/evaluation unit: the words of each discourse argument and gold
/// labels (one for CP, one per argument for CEI).
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralExample {
    pub arguments: Vec<Vec<String>>,
    pub labels: Vec<bool>,
}

impl NeuralExample {
    pub fn from_message(message: &Message, args: &[DiscourseArgument], labels: Vec<bool>) -> Self {
        NeuralExample {
            arguments: args.iter().map(|a| a.words(message)).collect(),
            labels,
        }
    }
}

fn quantize(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = *x as f32 as f64);
}

impl NeuralModel {
    /// Randomly initialized model; parameters are drawn uniformly from
    /// `±1/√fan_in` and rounded to single precision.
    pub fn new(
        task: Task,
        variant: Variant,
        embeddings: Arc<EmbeddingTable>,
        hidden_dim: usize,
        dropout_p: f64,
        seed: u64,
    ) -> Result<Self> {
        if hidden_dim == 0 {
            return Err(Error::InvalidParameter("hidden_dim must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = embeddings.dim();
        let word_lstm = variant
            .has_word_lstm()
            .then(|| LstmParams::random(d, hidden_dim, &mut rng));
        let da_input = if variant == Variant::Full { 2 * hidden_dim } else { d };
        let da_lstm = variant
            .has_da_lstm()
            .then(|| LstmParams::random(da_input, hidden_dim, &mut rng));
        let a = 1.0 / ((2 * hidden_dim) as f64).sqrt();
        let output = Affine {
            input_dim: 2 * hidden_dim,
            w: (0..4 * hidden_dim).map(|_| rng.random_range(-a..a)).collect(),
            b: (0..2).map(|_| rng.random_range(-a..a)).collect(),
        };
        let mut model = NeuralModel {
            task,
            variant,
            embeddings,
            hidden_dim,
            dropout_p,
            word_lstm,
            da_lstm,
            output,
        };
        model.quantize();
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::InvalidParameter(format!(
                "dropout_p must be in [0, 1), got {}",
                self.dropout_p
            )));
        }
        let h = self.hidden_dim;
        let d = self.embeddings.dim();
        if self.word_lstm.is_some() != self.variant.has_word_lstm()
            || self.da_lstm.is_some() != self.variant.has_da_lstm()
        {
            return Err(Error::InvalidParameter(format!(
                "layers do not match variant {}",
                self.variant.name()
            )));
        }
        if let Some(w) = &self.word_lstm {
            if w.input_dim != d || w.hidden_dim != h {
                return Err(Error::Dimension {
                    expected: d,
                    got: w.input_dim,
                });
            }
            w.validate()?;
        }
        if let Some(a) = &self.da_lstm {
            let input = if self.variant == Variant::Full { 2 * h } else { d };
            if a.input_dim != input || a.hidden_dim != h {
                return Err(Error::Dimension {
                    expected: input,
                    got: a.input_dim,
                });
            }
            a.validate()?;
        }
        let o = &self.output;
        if o.input_dim != 2 * h || o.w.len() != 4 * h || o.b.len() != 2 {
            return Err(Error::Dimension {
                expected: 4 * h,
                got: o.w.len(),
            });
        }
        Ok(())
    }

    /// Named parameter tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = Vec::new();
        for (name, l) in [("word_lstm", &self.word_lstm), ("da_lstm", &self.da_lstm)] {
            if let Some(l) = l {
                out.push((format!("{name}.forward.w"), &l.forward.w));
                out.push((format!("{name}.forward.b"), &l.forward.b));
                out.push((format!("{name}.backward.w"), &l.backward.w));
                out.push((format!("{name}.backward.b"), &l.backward.b));
            }
        }
        out.push(("output.w".into(), &self.output.w));
        out.push(("output.b".into(), &self.output.b));
        out
    }

    /// Mutable views, same order as [`NeuralModel::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for l in [&mut self.word_lstm, &mut self.da_lstm].into_iter().flatten() {
            out.push(&mut l.forward.w);
            out.push(&mut l.forward.b);
            out.push(&mut l.backward.w);
            out.push(&mut l.backward.b);
        }
        out.push(&mut self.output.w);
        out.push(&mut self.output.b);
        out
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Rounds every parameter to the nearest `f32`.
    pub fn quantize(&mut self) {
        for t in self.tensors_mut() {
            quantize(t);
        }
    }

    fn layout(&self) -> Layout {
        let mut next = 0;
        let word = self.word_lstm.as_ref().map(|_| {
            next += 4;
            next - 4
        });
        let da = self.da_lstm.as_ref().map(|_| {
            next += 4;
            next - 4
        });
        Layout { word, da, out: next }
    }

    fn check_task(&self, task: Task) -> Result<()> {
        if self.task != task {
            return Err(Error::InvalidParameter(format!(
                "model was built for {:?}, not {task:?}",
                self.task
            )));
        }
        Ok(())
    }

    /// Log-probabilities for one example: a single pair for CP, one pair per
    /// argument for CEI. `dropout_seed` enables dropout.
    pub fn forward_words(&self, arguments: &[Vec<String>], dropout_seed: Option<u64>) -> Result<Vec<[f64; 2]>> {
        if arguments.is_empty() {
            return Err(Error::EmptyArguments);
        }
        let tensors = self.tensors();
        let refs: Vec<&[f64]> = tensors.iter().map(|(_, t)| *t).collect();
        let mut tape = Tape::new(&refs);
        let outs = self.build(&mut tape, arguments, dropout_seed);
        Ok(outs
            .iter()
            .map(|&v| {
                let x = tape.value(v);
                [x[0], x[1]]
            })
            .collect())
    }

    /// Negative log-likelihood of `example` and its parameter gradients.
    /// CEI losses are averaged over arguments.
    pub fn loss_and_grad(&self, example: &NeuralExample, dropout_seed: Option<u64>) -> Result<(f64, Vec<Vec<f64>>)> {
        self.check_example(example)?;
        let tensors = self.tensors();
        let refs: Vec<&[f64]> = tensors.iter().map(|(_, t)| *t).collect();
        let mut tape = Tape::new(&refs);
        let loss = self.build_loss(&mut tape, example, dropout_seed);
        let value = tape.value(loss)[0];
        Ok((value, tape.backward(loss)))
    }

    pub fn loss(&self, example: &NeuralExample) -> Result<f64> {
        self.check_example(example)?;
        let tensors = self.tensors();
        let refs: Vec<&[f64]> = tensors.iter().map(|(_, t)| *t).collect();
        let mut tape = Tape::new(&refs);
        let loss = self.build_loss(&mut tape, example, None);
        Ok(tape.value(loss)[0])
    }

    fn check_example(&self, example: &NeuralExample) -> Result<()> {
        if example.arguments.is_empty() {
            return Err(Error::EmptyArguments);
        }
        let expected = match self.task {
            Task::Cp => 1,
            Task::Cei => example.arguments.len(),
        };
        if example.labels.len() != expected {
            return Err(Error::LengthMismatch {
                left: expected,
                right: example.labels.len(),
            });
        }
        Ok(())
    }

    fn build_loss(&self, tape: &mut Tape, example: &NeuralExample, dropout_seed: Option<u64>) -> Var {
        let outs = self.build(tape, &example.arguments, dropout_seed);
        let picks: Vec<Var> = outs
            .iter()
            .zip(&example.labels)
            .map(|(&o, &l)| tape.neg_pick(o, if l { 0 } else { 1 }))
            .collect();
        let n = picks.len() as f64;
        tape.scaled_sum(&picks, 1.0 / n)
    }

    fn build(&self, tape: &mut Tape, arguments: &[Vec<String>], dropout_seed: Option<u64>) -> Vec<Var> {
        let layout = self.layout();
        let h = self.hidden_dim;
        let mut rng = dropout_seed
            .filter(|_| self.dropout_p > 0.0)
            .map(ChaCha8Rng::seed_from_u64);

        let lower = match (self.variant, self.task) {
            (Variant::WordOnly, Task::Cp) => {
                let all: Vec<String> = arguments.iter().flatten().cloned().collect();
                let rep = self
                    .encode_tape(tape, layout.word.unwrap(), &all)
                    .unwrap_or_else(|| tape.constant(vec![0.0; 2 * h]));
                vec![rep]
            }
            (Variant::DaAvg, _) => {
                let reps: Vec<Option<Var>> = arguments
                    .iter()
                    .map(|a| da_average(&self.embeddings, a).map(|v| tape.constant(v)))
                    .collect();
                fill_missing(tape, reps, self.embeddings.dim())
            }
            _ => {
                let base = layout.word.unwrap();
                let reps: Vec<Option<Var>> = arguments
                    .iter()
                    .map(|a| self.encode_tape(tape, base, a))
                    .collect();
                fill_missing(tape, reps, 2 * h)
            }
        };
        let lower: Vec<Var> = match rng.as_mut() {
            Some(rng) => lower
                .into_iter()
                .map(|v| {
                    let n = tape.len(v);
                    let keep = 1.0 - self.dropout_p;
                    let mask = (0..n)
                        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    tape.mul_const(v, mask)
                })
                .collect(),
            None => lower,
        };

        let features: Vec<Var> = match (layout.da, self.task) {
            (Some(base), Task::Cp) => {
                let (fwd, bwd) = bilstm(tape, base, h, &lower);
                vec![tape.concat(&[*fwd.last().unwrap(), bwd[0]])]
            }
            (Some(base), Task::Cei) => {
                let (fwd, bwd) = bilstm(tape, base, h, &lower);
                fwd.iter().zip(&bwd).map(|(&f, &b)| tape.concat(&[f, b])).collect()
            }
            (None, _) => lower,
        };
        features
            .into_iter()
            .map(|f| {
                let z = tape.matvec(layout.out, f);
                let b = tape.param(layout.out + 1);
                let z = tape.add(z, b);
                tape.log_softmax(z)
            })
            .collect()
    }

    /// Word-level BiLSTM over the in-vocabulary words; `None` if none are.
    fn encode_tape(&self, tape: &mut Tape, base: usize, words: &[String]) -> Option<Var> {
        let xs: Vec<Var> = words
            .iter()
            .filter_map(|w| self.embeddings.get(w))
            .map(|v| v.to_vec())
            .collect::<Vec<_>>()
            .into_iter()
            .map(|v| tape.constant(v))
            .collect();
        if xs.is_empty() {
            return None;
        }
        let (fwd, bwd) = bilstm(tape, base, self.hidden_dim, &xs);
        Some(tape.concat(&[*fwd.last().unwrap(), bwd[0]]))
    }
}

struct Layout {
    word: Option<usize>,
    da: Option<usize>,
    out: usize,
}

/// Missing representations become the mean of the present ones, or zeros if
/// none is present.
fn fill_missing(tape: &mut Tape, reps: Vec<Option<Var>>, dim: usize) -> Vec<Var> {
    let present: Vec<Var> = reps.iter().flatten().copied().collect();
    if present.is_empty() {
        return reps.iter().map(|_| tape.constant(vec![0.0; dim])).collect();
    }
    let mut mean = None;
    reps.into_iter()
        .map(|r| match r {
            Some(v) => v,
            None => *mean.get_or_insert_with(|| tape.mean(&present)),
        })
        .collect()
}

fn lstm_step_tape(tape: &mut Tape, w: usize, b: usize, h: usize, x: Var, state: (Var, Var)) -> (Var, Var) {
    let xh = tape.concat(&[x, state.0]);
    let z = tape.matvec(w, xh);
    let bias = tape.param(b);
    let z = tape.add(z, bias);
    let zi = tape.slice(z, 0, h);
    let zf = tape.slice(z, h, h);
    let zo = tape.slice(z, 2 * h, h);
    let zg = tape.slice(z, 3 * h, h);
    let i = tape.sigmoid(zi);
    let f = tape.sigmoid(zf);
    let o = tape.sigmoid(zo);
    let g = tape.tanh(zg);
    let fc = tape.mul(f, state.1);
    let ig = tape.mul(i, g);
    let c = tape.add(fc, ig);
    let tc = tape.tanh(c);
    (tape.mul(o, tc), c)
}

/// Hidden states of both directions, each indexed by input position.
fn bilstm(tape: &mut Tape, base: usize, h: usize, xs: &[Var]) -> (Vec<Var>, Vec<Var>) {
    let zero_h = tape.constant(vec![0.0; h]);
    let zero_c = tape.constant(vec![0.0; h]);
    let mut state = (zero_h, zero_c);
    let mut fwd = Vec::with_capacity(xs.len());
    for &x in xs {
        state = lstm_step_tape(tape, base, base + 1, h, x, state);
        fwd.push(state.0);
    }
    let mut state = (zero_h, zero_c);
    let mut bwd = vec![zero_h; xs.len()];
    for (k, &x) in xs.iter().enumerate().rev() {
        state = lstm_step_tape(tape, base + 2, base + 3, h, x, state);
        bwd[k] = state.0;
    }
    (fwd, bwd)
}

/// `[h→_N; h←_1]` of the word-level BiLSTM; zeros when every word is
/// out of vocabulary.
pub fn encode_argument(model: &NeuralModel, words: &[String]) -> Result<Vec<f64>> {
    let Some(base) = model.layout().word else {
        return Err(Error::InvalidParameter(format!(
            "variant {} has no word-level LSTM",
            model.variant.name()
        )));
    };
    let tensors = model.tensors();
    let refs: Vec<&[f64]> = tensors.iter().map(|(_, t)| *t).collect();
    let mut tape = Tape::new(&refs);
    Ok(match model.encode_tape(&mut tape, base, words) {
        Some(v) => tape.value(v).to_vec(),
        None => vec![0.0; 2 * model.hidden_dim],
    })
}

fn dropout_seed(train_mode: bool, seed: u64) -> Option<u64> {
    train_mode.then_some(seed)
}

/// Message-level log-probabilities `[causal, non-causal]`.
pub fn forward_cp(
    model: &NeuralModel,
    message: &Message,
    args: &[DiscourseArgument],
    train_mode: bool,
    seed: u64,
) -> Result<[f64; 2]> {
    model.check_task(Task::Cp)?;
    let words: Vec<Vec<String>> = args.iter().map(|a| a.words(message)).collect();
    Ok(model.forward_words(&words, dropout_seed(train_mode, seed))?[0])
}

/// Per-argument log-probabilities `[explanation, not-explanation]`.
pub fn forward_cei(
    model: &NeuralModel,
    message: &Message,
    args: &[DiscourseArgument],
    train_mode: bool,
    seed: u64,
) -> Result<Vec<[f64; 2]>> {
    model.check_task(Task::Cei)?;
    let words: Vec<Vec<String>> = args.iter().map(|a| a.words(message)).collect();
    model.forward_words(&words, dropout_seed(train_mode, seed))
}
