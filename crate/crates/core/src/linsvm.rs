//! Linear SVM trained with Pegasos-style stochastic subgradient descent.
//!
//! Minimizes `(1/n) Σ max(0, 1 − yᵢ(w·xᵢ + b)) + (λ/2)(‖w‖² + b²)` with step
//! size `ηₜ = 1/(λt)`. The bias is handled as the weight of a constant feature
//! and therefore shrinks with the rest of the weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureSpace, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            lambda: 1e-4,
            epochs: 50,
            seed: 13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    weights: Vec<f64>,
    bias: f64,
    lambda: f64,
    feature_space: FeatureSpace,
}

type Sparse = Vec<(usize, f64)>;

fn dot(w: &[f64], x: &[(usize, f64)]) -> f64 {
    x.iter().map(|&(i, v)| w[i] * v).sum()
}

impl LinearModel {
    pub fn new(feature_space: FeatureSpace, weights: Vec<f64>, bias: f64, lambda: f64) -> Result<Self> {
        if weights.len() != feature_space.len() {
            return Err(Error::Dimension {
                expected: feature_space.len(),
                got: weights.len(),
            });
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("non-finite weight".into()));
        }
        Ok(LinearModel {
            weights,
            bias,
            lambda,
            feature_space,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn feature_space(&self) -> &FeatureSpace {
        &self.feature_space
    }

    pub fn weight_of(&self, name: &str) -> Option<f64> {
        self.feature_space.index_of(name).map(|i| self.weights[i])
    }

    /// Decision value `w·x + b`; features outside the space are ignored.
    pub fn margin(&self, x: &FeatureVector) -> f64 {
        dot(&self.weights, &self.feature_space.project(x)) + self.bias
    }

    pub fn predict(&self, x: &FeatureVector) -> (bool, f64) {
        let m = self.margin(x);
        (m >= 0.0, m)
    }

    /// Regularized hinge objective on a labeled set.
    pub fn objective(&self, x: &[FeatureVector], y: &[bool]) -> f64 {
        let hinge: f64 = x
            .iter()
            .zip(y)
            .map(|(xi, &yi)| {
                let s = if yi { 1.0 } else { -1.0 };
                (1.0 - s * self.margin(xi)).max(0.0)
            })
            .sum::<f64>()
            / x.len().max(1) as f64;
        let norm: f64 = self.weights.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias;
        hinge + 0.5 * self.lambda * norm
    }

    /// Negated weights and bias; flips every decision.
    pub fn negated(&self) -> Self {
        LinearModel {
            weights: self.weights.iter().map(|w| -w).collect(),
            bias: -self.bias,
            ..self.clone()
        }
    }
}

/// `w = scale · v`, so the per-step shrink is O(1).
struct ScaledWeights {
    v: Vec<f64>,
    vb: f64,
    scale: f64,
}

impl ScaledWeights {
    fn margin(&self, x: &[(usize, f64)]) -> f64 {
        self.scale * (dot(&self.v, x) + self.vb)
    }

    fn shrink(&mut self, factor: f64) {
        if factor <= 0.0 {
            self.v.iter_mut().for_each(|w| *w = 0.0);
            self.vb = 0.0;
            self.scale = 1.0;
            return;
        }
        self.scale *= factor;
        if self.scale < 1e-9 {
            self.v.iter_mut().for_each(|w| *w *= self.scale);
            self.vb *= self.scale;
            self.scale = 1.0;
        }
    }

    fn add(&mut self, x: &[(usize, f64)], step: f64) {
        let s = step / self.scale;
        for &(i, v) in x {
            self.v[i] += s * v;
        }
        self.vb += s;
    }

    /// One Pegasos step at iteration `t` (1-based).
    fn step(&mut self, x: &[(usize, f64)], y: f64, t: u64, lambda: f64) {
        let eta = 1.0 / (lambda * t as f64);
        let violated = y * self.margin(x) < 1.0;
        self.shrink(1.0 - eta * lambda);
        if violated {
            self.add(x, eta * y);
        }
    }

    fn materialize(&self) -> (Vec<f64>, f64) {
        (
            self.v.iter().map(|w| w * self.scale).collect(),
            self.vb * self.scale,
        )
    }
}

/// Result of training: the model plus the objective at the end of each epoch.
#[derive(Debug, Clone)]
pub struct SvmTrace {
    pub model: LinearModel,
    pub objective: Vec<f64>,
}

pub fn train_svm(
    x: &[FeatureVector],
    y: &[bool],
    space: &FeatureSpace,
    config: &SvmConfig,
) -> Result<LinearModel> {
    Ok(train_svm_traced(x, y, space, config, false)?.model)
}

/// Trains and optionally records the objective after every epoch.
pub fn train_svm_traced(
    x: &[FeatureVector],
    y: &[bool],
    space: &FeatureSpace,
    config: &SvmConfig,
    trace: bool,
) -> Result<SvmTrace> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if !y.iter().any(|&l| l) || y.iter().all(|&l| l) {
        return Err(Error::SingleClass);
    }
    if !(config.lambda > 0.0) {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    if config.epochs == 0 {
        return Err(Error::InvalidParameter("epochs must be >= 1".into()));
    }

    let data: Vec<(Sparse, f64)> = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| (space.project(xi), if yi { 1.0 } else { -1.0 }))
        .collect();
    let mut w = ScaledWeights {
        v: vec![0.0; space.len()],
        vb: 0.0,
        scale: 1.0,
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut objective = Vec::new();
    let mut t: u64 = 0;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let (xi, yi) = &data[i];
            w.step(xi, *yi, t, config.lambda);
        }
        if trace {
            let (weights, bias) = w.materialize();
            let m = LinearModel::new(space.clone(), weights, bias, config.lambda)?;
            objective.push(m.objective(x, y));
        }
    }
    let (weights, bias) = w.materialize();
    Ok(SvmTrace {
        model: LinearModel::new(space.clone(), weights, bias, config.lambda)?,
        objective,
    })
}
