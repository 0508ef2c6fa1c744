use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{Adam, Optimizer, Sgd};
use super::{NeuralExample, NeuralModel};
use crate::error::{Error, Result};
use crate::pipeline::evaluate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Defaults to the embedding dimension when unset.
    pub hidden_dim: Option<usize>,
    pub dropout_p: f64,
    /// Global gradient-norm clip; off by default.
    pub clip_norm: Option<f64>,
    /// Early-stopping patience in epochs, used only with a validation set.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::Adam,
            learning_rate: 0.001,
            epochs: 30,
            seed: 13,
            hidden_dim: None,
            dropout_p: 0.3,
            clip_norm: None,
            patience: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::InvalidParameter(format!(
                "dropout_p must be in [0, 1), got {}",
                self.dropout_p
            )));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::InvalidParameter("clip_norm must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: NeuralModel,
    /// Mean training loss before the first update, dropout off.
    pub initial_loss: f64,
    /// Mean training loss after each epoch, dropout off.
    pub losses: Vec<f64>,
    /// Validation weighted F1 after each epoch (empty without validation).
    pub validation_f1: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

enum Opt {
    Sgd(Sgd),
    Adam(Adam),
}

fn mean_loss(model: &NeuralModel, data: &[NeuralExample]) -> Result<f64> {
    let mut total = 0.0;
    for ex in data {
        total += model.loss(ex)?;
    }
    Ok(total / data.len() as f64)
}

/// Flattened predicted and gold labels over `data`.
pub(crate) fn predict_labels(model: &NeuralModel, data: &[NeuralExample]) -> Result<(Vec<bool>, Vec<bool>)> {
    let mut preds = Vec::new();
    let mut golds = Vec::new();
    for ex in data {
        for lp in model.forward_words(&ex.arguments, None)? {
            preds.push(lp[0] > lp[1]);
        }
        golds.extend_from_slice(&ex.labels);
    }
    Ok((preds, golds))
}

/// Per-example updates with seeded shuffling and dropout. With a validation
/// set, keeps the epoch with the best weighted F1 and stops after `patience`
/// epochs without improvement. Final parameters are rounded to `f32`.
pub fn train_neural(
    mut model: NeuralModel,
    train: &[NeuralExample],
    validation: Option<&[NeuralExample]>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    for ex in train.iter().chain(validation.unwrap_or_default()) {
        model.check_example(ex)?;
    }
    model.dropout_p = config.dropout_p;

    let shapes: Vec<usize> = model.tensors().iter().map(|(_, t)| t.len()).collect();
    let mut opt = match config.optimizer {
        Optimizer::Sgd => Opt::Sgd(Sgd {
            learning_rate: config.learning_rate,
        }),
        Optimizer::Adam => Opt::Adam(Adam::new(config.learning_rate, &shapes)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial_loss = mean_loss(&model, train)?;
    let mut losses = Vec::with_capacity(config.epochs);
    let mut validation_f1 = Vec::new();
    let mut best: Option<(f64, usize, NeuralModel)> = None;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let seed: u64 = rng.random();
            let (_, mut grads) = model.loss_and_grad(&train[i], Some(seed))?;
            if let Some(clip) = config.clip_norm {
                let norm = grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
                if norm > clip {
                    let s = clip / norm;
                    grads.iter_mut().flatten().for_each(|g| *g *= s);
                }
            }
            let mut params = model.tensors_mut();
            match &mut opt {
                Opt::Sgd(o) => o.step(&mut params, &grads),
                Opt::Adam(o) => o.step(&mut params, &grads),
            }
        }
        losses.push(mean_loss(&model, train)?);

        if let Some(val) = validation.filter(|v| !v.is_empty()) {
            let (preds, golds) = predict_labels(&model, val)?;
            let f1 = evaluate(&preds, &golds)?.weighted_f1;
            validation_f1.push(f1);
            let improved = best.as_ref().map_or(true, |(b, _, _)| f1 > *b);
            if improved {
                best = Some((f1, epoch, model.clone()));
            } else if epoch - best.as_ref().unwrap().1 >= config.patience {
                break;
            }
        }
    }

    let (mut model, best_epoch) = match best {
        Some((_, epoch, m)) => (m, epoch),
        None => (model, losses.len()),
    };
    model.quantize();
    Ok(TrainOutcome {
        model,
        initial_loss,
        losses,
        validation_f1,
        best_epoch,
    })
}

/// Largest relative disagreement between backpropagated and central
/// finite-difference gradients, over every parameter. Dropout is off.
pub fn gradient_check(model: &NeuralModel, example: &NeuralExample, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let (_, analytic) = model.loss_and_grad(example, None)?;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (t, ga) in analytic.iter().enumerate() {
        for (i, &a) in ga.iter().enumerate() {
            let orig = probe.tensors_mut()[t][i];
            probe.tensors_mut()[t][i] = orig + eps;
            let plus = probe.loss(example)?;
            probe.tensors_mut()[t][i] = orig - eps;
            let minus = probe.loss(example)?;
            probe.tensors_mut()[t][i] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
