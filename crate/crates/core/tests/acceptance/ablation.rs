//! Affine against translation-only roles on a link-prediction KB whose role
//! has to shrink its domain, plus the single-step equivalence of translation
//! mode and affine mode with unit scales held fixed.

use boxel::datasets::{link_split, LinkSpec};
use boxel::eval::{individual_candidates, known_links, link_queries, rank_links};
use boxel::train::{train, train_model, TrainConfig};
use boxel::{normalize, parse_kb, EmbeddingModel, ModelConfig, RelationMode};

use crate::{Error, Verdict};

const SEEDS: u64 = 5;
const DIM: usize = 4;
const EPOCHS: usize = 2000;
const LEARNING_RATE: f64 = 1e-2;
const GAMMA: f64 = 0.1;

fn mean_auc(mode: RelationMode) -> Result<f64, Error> {
    let mut total = 0.0;
    for seed in 0..SEEDS {
        let split = link_split(&LinkSpec::default(), seed);
        let nkb = normalize(&parse_kb(&split.train)?)?;
        let (model, _) = train(
            &nkb,
            &ModelConfig {
                dim: DIM,
                seed,
                gamma: GAMMA,
                relation_mode: mode,
                ..Default::default()
            },
            &TrainConfig {
                epochs: EPOCHS,
                seed,
                learning_rate: LEARNING_RATE,
                ..Default::default()
            },
        )?;
        let queries = link_queries(&model, &parse_kb(&split.test)?)?;
        let r = rank_links(
            &model,
            &queries,
            &individual_candidates(&model),
            &known_links(&nkb),
        )?;
        total += r.raw.auc;
    }
    Ok(total / SEEDS as f64)
}

/// One training step in translation mode and in affine mode with raw scales
/// 0 and frozen; true when losses and parameters agree bit for bit.
fn single_step_identical() -> Result<bool, Error> {
    let split = link_split(&LinkSpec::default(), 0);
    let nkb = normalize(&parse_kb(&split.train)?)?;
    let cfg = TrainConfig {
        epochs: 1,
        learning_rate: LEARNING_RATE,
        freeze_role_scale: true,
        ..Default::default()
    };
    let run = |mode: RelationMode| -> Result<(EmbeddingModel, Vec<u64>), Error> {
        let mut model = EmbeddingModel::init(
            &nkb.symbols,
            &ModelConfig {
                dim: DIM,
                gamma: GAMMA,
                relation_mode: mode,
                ..Default::default()
            },
        )?;
        let block = model.layout.role_scale_block();
        model.params[block].fill(0.0);
        let report = train_model(&mut model, &nkb, &cfg, |_| Ok(()))?;
        let bits = report.history[0]
            .fields()
            .iter()
            .map(|(_, v)| v.to_bits())
            .collect();
        Ok((model, bits))
    };
    let (affine, affine_loss) = run(RelationMode::Affine)?;
    let (translation, translation_loss) = run(RelationMode::Translation)?;
    let params_equal = affine
        .params
        .iter()
        .zip(&translation.params)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    Ok(affine_loss == translation_loss && params_equal)
}

pub fn run() -> Result<Verdict, Error> {
    let affine = mean_auc(RelationMode::Affine)?;
    let translation = mean_auc(RelationMode::Translation)?;
    let identical = single_step_identical()?;
    Ok(Verdict::new(
        affine >= translation && identical,
        format!(
            "mean raw link AUC over {SEEDS} seeds: affine {affine:.4} >= translation {translation:.4}; \
             single step bitwise identical: {identical}"
        ),
    ))
}
