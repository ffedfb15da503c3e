//! Adam training loop over the taped loss.

use web_time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Real, Tape, Var};
use crate::geometry::VolumeKind;
use crate::losses::{sample_negatives, total_loss, LossBreakdown, LossError, Negative};
use crate::model::{EmbeddingModel, Layout, ModelConfig, ModelError, ParamView};
use crate::normalize::{NormalizedAxiom, NormalizedKb};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Axioms per step; 0 trains on the full batch.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Seeds negative sampling and batch shuffling.
    pub seed: u64,
    /// 0 disables periodic checkpoints.
    pub checkpoint_every: usize,
    /// 0 disables the epoch log.
    pub log_every: usize,
    /// Stop once an epoch's total loss falls below this value.
    pub early_stop_loss: f64,
    /// Corruptions per positive role assertion and NF1 axiom.
    pub neg_ratio: usize,
    /// Sample negatives once instead of every epoch.
    pub fixed_negatives: bool,
    /// Keep role scales at their current value.
    pub freeze_role_scale: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 0,
            learning_rate: 5e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            checkpoint_every: 0,
            log_every: 1,
            early_stop_loss: 0.0,
            neg_ratio: 1,
            fixed_negatives: false,
            freeze_role_scale: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::InvalidConfig(msg.into()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0) {
            return bad("adam_beta1 must lie in (0, 1)");
        }
        if !(self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0) {
            return bad("adam_beta2 must lie in (0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("non-finite {kind} loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize, kind: &'static str },
    #[error("non-finite parameters after epoch {epoch}")]
    NonFiniteParameters { epoch: usize },
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    EarlyStop,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainReport {
    /// Loss of each epoch, measured before that epoch's updates.
    pub history: Vec<LossBreakdown>,
    pub wall_ms: f64,
    /// Number of epochs run.
    pub final_epoch: usize,
    pub stop_reason: StopReason,
    pub warnings: Vec<String>,
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(flatten)]
    pub loss: LossBreakdown,
    pub wall_ms: f64,
}

pub enum TrainEvent<'a> {
    Epoch(&'a EpochRecord),
    Checkpoint {
        epoch: usize,
        model: &'a EmbeddingModel,
    },
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, cfg: &TrainConfig) -> Self {
        Self {
            lr: cfg.learning_rate,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Value and gradient of `f` at `params`.
pub fn value_and_grad<E>(
    config: &ModelConfig,
    layout: Layout,
    params: &[f64],
    f: impl for<'t> FnOnce(&ParamView<'_, Var<'t>>) -> Result<Var<'t>, E>,
) -> Result<(f64, Vec<f64>), E> {
    let tape = Tape::with_capacity(params.len() * 8);
    let vars = tape.vars(params);
    let view = ParamView::new(config, layout, &vars, tape.constant(0.0));
    let out = f(&view)?;
    let value = out.value();
    let grads = out.backward().collect(&vars);
    Ok((value, grads))
}

/// Gradient of the training objective (softplus volumes) on the given axioms
/// and negatives.
pub fn loss_gradient(
    model: &EmbeddingModel,
    axioms: &[NormalizedAxiom],
    negatives: &[Negative],
) -> Result<(LossBreakdown, Vec<f64>), LossError> {
    let mut breakdown = LossBreakdown::default();
    let (_, grads) = value_and_grad(&model.config, model.layout, &model.params, |v| {
        let (total, b) = total_loss(v, axioms, negatives, VolumeKind::Softplus)?;
        breakdown = b;
        Ok::<_, LossError>(total)
    })?;
    Ok((breakdown, grads))
}

/// Loss of the model without taping, under either volume.
pub fn evaluate_loss(
    model: &EmbeddingModel,
    axioms: &[NormalizedAxiom],
    negatives: &[Negative],
    kind: VolumeKind,
) -> Result<LossBreakdown, LossError> {
    total_loss(&model.view(), axioms, negatives, kind).map(|(_, b)| b)
}

fn add_breakdown(acc: &mut LossBreakdown, b: &LossBreakdown) {
    acc.concept_assertion += b.concept_assertion;
    acc.role_assertion += b.role_assertion;
    acc.nf1 += b.nf1;
    acc.nf1_bottom += b.nf1_bottom;
    acc.nf2 += b.nf2;
    acc.nf2_disjoint += b.nf2_disjoint;
    acc.nf3 += b.nf3;
    acc.nf4 += b.nf4;
    acc.neg_role += b.neg_role;
    acc.neg_subsumption += b.neg_subsumption;
    acc.regularizer += b.regularizer;
    acc.total += b.total;
}

/// Initializes a model over the normalized signature and trains it.
pub fn train(
    nkb: &NormalizedKb,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<(EmbeddingModel, TrainReport), TrainError> {
    let mut model = EmbeddingModel::init(&nkb.symbols, model_cfg)?;
    let report = train_model(&mut model, nkb, cfg, |_| Ok(()))?;
    Ok((model, report))
}

/// Trains `model` in place. `observer` sees every logged epoch and every
/// periodic checkpoint; an error from it aborts training.
pub fn train_model(
    model: &mut EmbeddingModel,
    nkb: &NormalizedKb,
    cfg: &TrainConfig,
    mut observer: impl FnMut(TrainEvent<'_>) -> Result<(), TrainError>,
) -> Result<TrainReport, TrainError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(model.params.len(), cfg);
    let frozen = model.layout.role_scale_block();
    let mut report = TrainReport {
        history: Vec::new(),
        wall_ms: 0.0,
        final_epoch: 0,
        stop_reason: StopReason::Completed,
        warnings: Vec::new(),
    };
    let mut negatives: Vec<Negative> = Vec::new();
    let mut axiom_order: Vec<usize> = (0..nkb.axioms.len()).collect();

    for epoch in 1..=cfg.epochs {
        if epoch == 1 || !cfg.fixed_negatives {
            let sample = sample_negatives(nkb, &mut rng, cfg.neg_ratio);
            if epoch == 1 {
                report.warnings = sample.warnings;
            }
            negatives = sample.negatives;
        }

        let batches: Vec<(Vec<NormalizedAxiom>, Vec<Negative>)> =
            if cfg.batch_size == 0 || cfg.batch_size >= nkb.axioms.len() {
                vec![(nkb.axioms.clone(), negatives.clone())]
            } else {
                axiom_order.shuffle(&mut rng);
                negatives.shuffle(&mut rng);
                let n = nkb.axioms.len().div_ceil(cfg.batch_size);
                let per_neg = negatives.len().div_ceil(n).max(1);
                axiom_order
                    .chunks(cfg.batch_size)
                    .enumerate()
                    .map(|(i, chunk)| {
                        let axioms = chunk.iter().map(|&j| nkb.axioms[j]).collect();
                        let lo = (i * per_neg).min(negatives.len());
                        let hi = ((i + 1) * per_neg).min(negatives.len());
                        (axioms, negatives[lo..hi].to_vec())
                    })
                    .collect()
            };

        let mut epoch_loss = LossBreakdown::default();
        for (axioms, negs) in &batches {
            let (breakdown, mut grads) = loss_gradient(model, axioms, negs)?;
            if let Some(kind) = breakdown.non_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, kind });
            }
            if cfg.freeze_role_scale {
                grads[frozen.clone()].fill(0.0);
            }
            adam.step(&mut model.params, &grads);
            add_breakdown(&mut epoch_loss, &breakdown);
        }
        if !model.is_finite() {
            return Err(TrainError::NonFiniteParameters { epoch });
        }

        report.history.push(epoch_loss);
        report.final_epoch = epoch;
        if cfg.log_every > 0 && (epoch % cfg.log_every == 0 || epoch == 1) {
            let record = EpochRecord {
                epoch,
                loss: epoch_loss,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            };
            observer(TrainEvent::Epoch(&record))?;
        }
        if cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 {
            observer(TrainEvent::Checkpoint {
                epoch,
                model: &*model,
            })?;
        }
        if epoch_loss.total < cfg.early_stop_loss {
            report.stop_reason = StopReason::EarlyStop;
            break;
        }
    }
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}
