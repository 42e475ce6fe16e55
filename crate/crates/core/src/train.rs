//! Scoring models and the corrected-risk training loop.
//!
//! Two architectures cover the desk-scale experiments: a linear scorer and
//! a one-hidden-layer rectifier MLP, both with parameters in one flat
//! vector (row-major per layer) so gradients and finite-difference checks
//! stay straightforward.
//!
//! Training follows the shuffled mini-batch scheme with stratified batches:
//! every step draws a fixed number of tuples and a fixed number of
//! unlabeled points, so each batch risk is itself an unbiased estimate.
//! The correction function is applied per batch; its chain-rule factor is
//! 1 on non-negative raw risk and the negative-branch slope otherwise.
//! Everything is single-threaded and deterministic given the config seed.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::coefficients::Priors;
use crate::data::{child_seed, rng_from_seed, LabeledPool, TupleDataset, UnlabeledDataset};
use crate::error::{Error, Result};
use crate::losses::{loss_grad, LossKind};
use crate::risk::{CorrectionSpec, RiskReport, RiskWeights, TupleScores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "arch", rename_all = "snake_case")]
pub enum ModelArch {
    Linear { dim: usize },
    Mlp { dim: usize, hidden: usize },
}

impl ModelArch {
    pub fn dim(&self) -> usize {
        match self {
            ModelArch::Linear { dim } | ModelArch::Mlp { dim, .. } => *dim,
        }
    }

    pub fn hidden(&self) -> Option<usize> {
        match self {
            ModelArch::Linear { .. } => None,
            ModelArch::Mlp { hidden, .. } => Some(*hidden),
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            ModelArch::Linear { dim } => dim + 1,
            ModelArch::Mlp { dim, hidden } => hidden * dim + hidden + hidden + 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::invalid("model dimension must be positive"));
        }
        if let ModelArch::Mlp { hidden, .. } = self {
            if *hidden == 0 {
                return Err(Error::invalid("hidden width must be positive"));
            }
        }
        Ok(())
    }
}

/// A real-valued scorer with a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    arch: ModelArch,
    params: Vec<f64>,
}

impl Model {
    pub fn zeros(arch: ModelArch) -> Result<Self> {
        arch.validate()?;
        Ok(Model {
            arch,
            params: vec![0.0; arch.num_params()],
        })
    }

    /// Uniform init in `[-1/sqrt(fan_in), +1/sqrt(fan_in)]` per layer.
    pub fn init_uniform(arch: ModelArch, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = rng_from_seed(seed);
        let params = match arch {
            ModelArch::Linear { dim } => {
                let bound = 1.0 / (dim as f64).sqrt();
                (0..dim + 1).map(|_| rng.gen_range(-bound..bound)).collect()
            }
            ModelArch::Mlp { dim, hidden } => {
                let b1 = 1.0 / (dim as f64).sqrt();
                let b2 = 1.0 / (hidden as f64).sqrt();
                let mut p: Vec<f64> = (0..hidden * dim + hidden)
                    .map(|_| rng.gen_range(-b1..b1))
                    .collect();
                p.extend((0..hidden + 1).map(|_| rng.gen_range(-b2..b2)));
                p
            }
        };
        Ok(Model { arch, params })
    }

    pub fn from_params(arch: ModelArch, params: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.num_params() {
            return Err(Error::ShapeMismatch {
                detail: format!(
                    "{} parameters for an architecture needing {}",
                    params.len(),
                    arch.num_params()
                ),
            });
        }
        Ok(Model { arch, params })
    }

    pub fn arch(&self) -> ModelArch {
        self.arch
    }

    pub fn dim(&self) -> usize {
        self.arch.dim()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut scratch = Vec::new();
        Ok(self.forward_into(x, &mut scratch))
    }

    /// Unchecked forward pass; fills `hidden` with post-rectifier
    /// activations (left empty for the linear model).
    fn forward_into(&self, x: &[f64], hidden: &mut Vec<f64>) -> f64 {
        hidden.clear();
        match self.arch {
            ModelArch::Linear { dim } => {
                let w = &self.params[..dim];
                let b = self.params[dim];
                w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b
            }
            ModelArch::Mlp { dim, hidden: h } => {
                let (w1, rest) = self.params.split_at(h * dim);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(h);
                let mut z = b2[0];
                for r in 0..h {
                    let row = &w1[r * dim..(r + 1) * dim];
                    let pre =
                        row.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b1[r];
                    let act = pre.max(0.0);
                    hidden.push(act);
                    z += w2[r] * act;
                }
                z
            }
        }
    }

    /// Adds `weight * d(score)/d(params)` into `grad`. `hidden` must be the
    /// activation cache from the forward pass on the same input; the
    /// rectifier derivative at exactly zero is taken as zero.
    fn accumulate_grad(&self, x: &[f64], hidden: &[f64], weight: f64, grad: &mut [f64]) {
        match self.arch {
            ModelArch::Linear { dim } => {
                for (g, xi) in grad[..dim].iter_mut().zip(x) {
                    *g += weight * xi;
                }
                grad[dim] += weight;
            }
            ModelArch::Mlp { dim, hidden: h } => {
                let w2_off = h * dim + h;
                for r in 0..h {
                    let act = hidden[r];
                    grad[w2_off + r] += weight * act;
                    if act > 0.0 {
                        let common = weight * self.params[w2_off + r];
                        grad[h * dim + r] += common;
                        let row = &mut grad[r * dim..(r + 1) * dim];
                        for (g, xi) in row.iter_mut().zip(x) {
                            *g += common * xi;
                        }
                    }
                }
                grad[w2_off + h] += weight;
            }
        }
    }
}

/// Mini-batch view: indices into the tuple and unlabeled datasets.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub tuple_idx: &'a [usize],
    pub unlabeled_idx: &'a [usize],
}

struct ScoredBatch {
    tuple_scores: TupleScores,
    unlabeled_scores: Vec<f64>,
    // per-point activation caches, row-major; empty for linear models
    tuple_hidden: Vec<f64>,
    unlabeled_hidden: Vec<f64>,
    hidden_width: usize,
}

fn score_batch(
    model: &Model,
    tuples: &TupleDataset,
    unlabeled: &UnlabeledDataset,
    batch: Batch<'_>,
) -> Result<ScoredBatch> {
    if tuples.dim() != model.dim() || unlabeled.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: tuples.dim().max(unlabeled.dim()),
        });
    }
    let n = tuples.n();
    let hw = model.arch.hidden().unwrap_or(0);
    let mut scratch = Vec::with_capacity(hw);
    let mut tuple_scores = Vec::with_capacity(batch.tuple_idx.len() * n);
    let mut tuple_hidden = Vec::with_capacity(batch.tuple_idx.len() * n * hw);
    for &i in batch.tuple_idx {
        for slot in 0..n {
            let z = model.forward_into(tuples.feature(i, slot), &mut scratch);
            tuple_scores.push(z);
            tuple_hidden.extend_from_slice(&scratch);
        }
    }
    let mut unlabeled_scores = Vec::with_capacity(batch.unlabeled_idx.len());
    let mut unlabeled_hidden = Vec::with_capacity(batch.unlabeled_idx.len() * hw);
    for &i in batch.unlabeled_idx {
        let z = model.forward_into(unlabeled.point(i), &mut scratch);
        unlabeled_scores.push(z);
        unlabeled_hidden.extend_from_slice(&scratch);
    }
    Ok(ScoredBatch {
        tuple_scores: TupleScores::new(tuple_scores, n)?,
        unlabeled_scores,
        tuple_hidden,
        unlabeled_hidden,
        hidden_width: hw,
    })
}

/// Corrected batch risk at the current parameters.
pub fn batch_risk(
    model: &Model,
    tuples: &TupleDataset,
    unlabeled: &UnlabeledDataset,
    batch: Batch<'_>,
    weights: &RiskWeights,
    priors: &Priors,
    kind: LossKind,
    correction: &CorrectionSpec,
) -> Result<RiskReport> {
    let scored = score_batch(model, tuples, unlabeled, batch)?;
    Ok(weights
        .evaluate(priors, &scored.tuple_scores, &scored.unlabeled_scores, kind)?
        .with_correction(correction))
}

/// Analytic gradient of the corrected batch risk, with the report.
pub fn risk_gradient(
    model: &Model,
    tuples: &TupleDataset,
    unlabeled: &UnlabeledDataset,
    batch: Batch<'_>,
    weights: &RiskWeights,
    priors: &Priors,
    kind: LossKind,
    correction: &CorrectionSpec,
) -> Result<(Vec<f64>, RiskReport)> {
    let scored = score_batch(model, tuples, unlabeled, batch)?;
    let report = weights
        .evaluate(priors, &scored.tuple_scores, &scored.unlabeled_scores, kind)?
        .with_correction(correction);
    let chain = if report.raw_total >= 0.0 {
        1.0
    } else {
        correction.negative_branch_slope()
    };

    let n = scored.tuple_scores.n();
    let n_tuples = scored.tuple_scores.n_tuples();
    let n_unl = scored.unlabeled_scores.len();
    let tp = priors.tau_plus();
    let tm = priors.tau_minus();
    let hw = scored.hidden_width;
    let mut grad = vec![0.0; model.num_params()];

    // d(raw)/d(score) for each score, then chain through the correction
    // and the model
    let push = |x: &[f64], hidden: &[f64], dz: f64, grad: &mut [f64]| {
        model.accumulate_grad(x, hidden, chain * dz, grad);
    };

    match weights {
        RiskWeights::General(w) => {
            for (row, &i) in batch.tuple_idx.iter().enumerate() {
                for slot in 0..n {
                    let z = scored.tuple_scores.at(row, slot);
                    let dz = (tp * w.c1[slot] * loss_grad(kind, z, 1)?
                        + tm * w.c2[slot] * loss_grad(kind, z, -1)?)
                        / n_tuples as f64;
                    let cell = row * n + slot;
                    push(
                        tuples.feature(i, slot),
                        &scored.tuple_hidden[cell * hw..(cell + 1) * hw],
                        dz,
                        &mut grad,
                    );
                }
            }
            for (row, &i) in batch.unlabeled_idx.iter().enumerate() {
                let z = scored.unlabeled_scores[row];
                let dz = (tp * w.d1 * loss_grad(kind, z, 1)?
                    + tm * w.d2 * loss_grad(kind, z, -1)?)
                    / n_unl as f64;
                push(
                    unlabeled.point(i),
                    &scored.unlabeled_hidden[row * hw..(row + 1) * hw],
                    dz,
                    &mut grad,
                );
            }
        }
        RiskWeights::Symmetric(s) => {
            let flat_len = (n_tuples * n) as f64;
            for (row, &i) in batch.tuple_idx.iter().enumerate() {
                for slot in 0..n {
                    let z = scored.tuple_scores.at(row, slot);
                    let dz = s.tuple_multiplier
                        * (loss_grad(kind, z, 1)? - loss_grad(kind, z, -1)?)
                        / flat_len;
                    let cell = row * n + slot;
                    push(
                        tuples.feature(i, slot),
                        &scored.tuple_hidden[cell * hw..(cell + 1) * hw],
                        dz,
                        &mut grad,
                    );
                }
            }
            for (row, &i) in batch.unlabeled_idx.iter().enumerate() {
                let z = scored.unlabeled_scores[row];
                let dz = (s.u_pos * loss_grad(kind, z, 1)?
                    + s.u_neg * loss_grad(kind, z, -1)?)
                    / n_unl as f64;
                push(
                    unlabeled.point(i),
                    &scored.unlabeled_hidden[row * hw..(row + 1) * hw],
                    dz,
                    &mut grad,
                );
            }
        }
    }
    Ok((grad, report))
}

/// Loop settings; all randomness that training consumes derives from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub correction: CorrectionSpec,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_tuples: usize,
    pub batch_unlabeled: usize,
    pub weight_decay: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl TrainConfig {
    fn validate(&self, n_tuples: usize, n_unlabeled: usize) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning rate must be non-negative"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_tuples == 0 || self.batch_tuples > n_tuples {
            return Err(Error::invalid(format!(
                "batch_tuples must be in 1..={n_tuples}"
            )));
        }
        if self.batch_unlabeled == 0 || self.batch_unlabeled > n_unlabeled {
            return Err(Error::invalid(format!(
                "batch_unlabeled must be in 1..={n_unlabeled}"
            )));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::invalid("weight decay must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// One optimisation step's risk record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub report: RiskReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: Model,
    pub steps: Vec<StepRecord>,
}

/// Trains by momentum SGD on the corrected weak risk.
///
/// Per epoch, both datasets are reshuffled; tuples are consumed in
/// consecutive chunks (the last may be short) and the unlabeled stream is
/// consumed cyclically in chunks of `batch_unlabeled`.
pub fn train(
    mut model: Model,
    tuples: &TupleDataset,
    unlabeled: &UnlabeledDataset,
    weights: &RiskWeights,
    priors: &Priors,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate(tuples.len(), unlabeled.len())?;
    if let Some(width) = weights.required_width() {
        if width != tuples.n() {
            return Err(Error::ShapeMismatch {
                detail: format!(
                    "weights expect {width}-tuples, dataset has {}-tuples",
                    tuples.n()
                ),
            });
        }
    }
    let mut shuffle_rng = rng_from_seed(child_seed(cfg.seed, "shuffle"));
    let mut tuple_order: Vec<usize> = (0..tuples.len()).collect();
    let mut unl_order: Vec<usize> = (0..unlabeled.len()).collect();
    let mut velocity = vec![0.0; model.num_params()];
    let mut steps = Vec::new();
    let mut step = 0usize;
    let mut unl_batch = Vec::with_capacity(cfg.batch_unlabeled);

    for epoch in 0..cfg.epochs {
        tuple_order.shuffle(&mut shuffle_rng);
        unl_order.shuffle(&mut shuffle_rng);
        let mut cursor = 0usize;
        for chunk in tuple_order.chunks(cfg.batch_tuples) {
            unl_batch.clear();
            for _ in 0..cfg.batch_unlabeled {
                unl_batch.push(unl_order[cursor]);
                cursor = (cursor + 1) % unl_order.len();
            }
            let batch = Batch {
                tuple_idx: chunk,
                unlabeled_idx: &unl_batch,
            };
            let (grad, report) =
                risk_gradient(&model, tuples, unlabeled, batch, weights, priors, cfg.loss, &cfg.correction)?;
            if !report.raw_total.is_finite() {
                return Err(Error::NonFiniteRisk {
                    step,
                    raw: report.raw_total,
                });
            }
            for ((v, g), p) in velocity.iter_mut().zip(&grad).zip(model.params_mut()) {
                *v = cfg.momentum * *v + g + cfg.weight_decay * *p;
                *p -= cfg.learning_rate * *v;
            }
            steps.push(StepRecord {
                step,
                epoch,
                report,
            });
            step += 1;
        }
    }
    Ok(TrainOutcome { model, steps })
}

/// Full-batch logistic regression on labeled points: the supervised oracle
/// that weakly supervised runs are compared against.
pub fn fit_logistic(
    pool: &LabeledPool,
    learning_rate: f64,
    epochs: usize,
    weight_decay: f64,
    seed: u64,
) -> Result<Model> {
    if pool.is_empty() {
        return Err(Error::EmptyInput {
            what: "labeled pool",
        });
    }
    let dim = pool.dim();
    let mut model = Model::init_uniform(ModelArch::Linear { dim }, seed)?;
    let inv_n = 1.0 / pool.len() as f64;
    let mut grad = vec![0.0; model.num_params()];
    let mut scratch = Vec::new();
    for _ in 0..epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..pool.len() {
            let x = pool.point(i);
            let z = model.forward_into(x, &mut scratch);
            let dz = loss_grad(LossKind::Logistic, z, pool.label(i))? * inv_n;
            model.accumulate_grad(x, &scratch, dz, &mut grad);
        }
        for (p, g) in model.params_mut().iter_mut().zip(&grad) {
            *p -= learning_rate * (g + weight_decay * *p);
        }
    }
    Ok(model)
}

/// Serialized model state: architecture, flat parameters, and the config
/// echo that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    #[serde(flatten)]
    pub arch: ModelArch,
    pub parameters: Vec<f64>,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl Checkpoint {
    pub fn new(model: &Model, seed: u64, config: serde_json::Value) -> Self {
        Checkpoint {
            arch: model.arch(),
            parameters: model.params().to_vec(),
            seed,
            config,
        }
    }

    pub fn to_model(&self) -> Result<Model> {
        Model::from_params(self.arch, self.parameters.clone())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
