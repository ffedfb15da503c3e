//! Flat `key = value` run configuration covering model and training settings.
//!
//! Every key is optional; unset keys keep their defaults. `seed` sets both
//! the initialization seed and the sampling seed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EntityMode, ModelConfig, RelationMode};
use crate::train::TrainConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub dim: Option<usize>,
    pub seed: Option<u64>,
    pub relation_mode: Option<RelationMode>,
    pub entity_mode: Option<EntityMode>,
    pub epsilon: Option<f64>,
    pub temperature: Option<f64>,
    pub gamma: Option<f64>,
    pub phi: Option<f64>,
    pub reg_weight: Option<f64>,
    pub unconstrained: Option<bool>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub adam_beta1: Option<f64>,
    pub adam_beta2: Option<f64>,
    pub adam_eps: Option<f64>,
    pub checkpoint_every: Option<usize>,
    pub log_every: Option<usize>,
    pub early_stop_loss: Option<f64>,
    pub neg_ratio: Option<usize>,
    pub fixed_negatives: Option<bool>,
    pub freeze_role_scale: Option<bool>,
}

impl ConfigOverrides {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Keys set in `other` win.
    pub fn merge(self, other: ConfigOverrides) -> ConfigOverrides {
        macro_rules! pick {
            ($($f:ident),*) => {
                ConfigOverrides { $($f: other.$f.or(self.$f)),* }
            };
        }
        pick!(
            dim,
            seed,
            relation_mode,
            entity_mode,
            epsilon,
            temperature,
            gamma,
            phi,
            reg_weight,
            unconstrained,
            epochs,
            batch_size,
            learning_rate,
            adam_beta1,
            adam_beta2,
            adam_eps,
            checkpoint_every,
            log_every,
            early_stop_loss,
            neg_ratio,
            fixed_negatives,
            freeze_role_scale
        )
    }

    pub fn apply(&self, model: &mut ModelConfig, train: &mut TrainConfig) {
        macro_rules! set {
            ($target:expr, $($f:ident),*) => {
                $(if let Some(v) = self.$f { $target.$f = v; })*
            };
        }
        set!(
            model,
            dim,
            relation_mode,
            entity_mode,
            gamma,
            phi,
            reg_weight,
            unconstrained
        );
        set!(model.volume, epsilon, temperature);
        set!(
            train,
            epochs,
            batch_size,
            learning_rate,
            adam_beta1,
            adam_beta2,
            adam_eps,
            checkpoint_every,
            log_every,
            early_stop_loss,
            neg_ratio,
            fixed_negatives,
            freeze_role_scale
        );
        if let Some(seed) = self.seed {
            model.seed = seed;
            train.seed = seed;
        }
    }

    pub fn resolve(&self) -> (ModelConfig, TrainConfig) {
        let mut model = ModelConfig::default();
        let mut train = TrainConfig::default();
        self.apply(&mut model, &mut train);
        (model, train)
    }
}

/// Every key with its effective value, in file syntax.
pub fn to_toml(model: &ModelConfig, train: &TrainConfig) -> String {
    let full = ConfigOverrides {
        dim: Some(model.dim),
        seed: Some(model.seed),
        relation_mode: Some(model.relation_mode),
        entity_mode: Some(model.entity_mode),
        epsilon: Some(model.volume.epsilon),
        temperature: Some(model.volume.temperature),
        gamma: Some(model.gamma),
        phi: Some(model.phi),
        reg_weight: Some(model.reg_weight),
        unconstrained: Some(model.unconstrained),
        epochs: Some(train.epochs),
        batch_size: Some(train.batch_size),
        learning_rate: Some(train.learning_rate),
        adam_beta1: Some(train.adam_beta1),
        adam_beta2: Some(train.adam_beta2),
        adam_eps: Some(train.adam_eps),
        checkpoint_every: Some(train.checkpoint_every),
        log_every: Some(train.log_every),
        early_stop_loss: Some(train.early_stop_loss),
        neg_ratio: Some(train.neg_ratio),
        fixed_negatives: Some(train.fixed_negatives),
        freeze_role_scale: Some(train.freeze_role_scale),
    };
    toml::to_string(&full).expect("config serializes")
}
