//! Subsumption ranking on a held-out slice of a synthetic concept tree.

use boxel::datasets::{hierarchy_split, Hierarchy};
use boxel::eval::{concept_candidates, known_subsumptions, rank_subsumptions, subsumption_queries};
use boxel::train::{train, TrainConfig};
use boxel::{normalize, parse_kb, ModelConfig, VolumeKind};

use crate::{Error, Verdict};

const SEEDS: u64 = 5;
const DIM: usize = 10;
const EPOCHS: usize = 1000;
const HOLDOUT: f64 = 0.1;
const MIN_AUC: f64 = 0.90;
const MIN_HITS_AT_10: f64 = 0.60;

pub fn run() -> Result<Verdict, Error> {
    let h = Hierarchy::four_level();
    let (mut auc, mut hits, mut f_auc) = (0.0, 0.0, 0.0);
    let mut queries_total = 0;
    for seed in 0..SEEDS {
        let split = hierarchy_split(&h, HOLDOUT, seed);
        let nkb = normalize(&parse_kb(&split.train)?)?;
        let (model, _) = train(
            &nkb,
            &ModelConfig {
                dim: DIM,
                seed,
                ..Default::default()
            },
            &TrainConfig {
                epochs: EPOCHS,
                seed,
                ..Default::default()
            },
        )?;
        let queries = subsumption_queries(&model, &parse_kb(&split.test)?)?;
        queries_total += queries.len();
        let r = rank_subsumptions(
            &model,
            &queries,
            &concept_candidates(&model),
            &known_subsumptions(&nkb),
            VolumeKind::Softplus,
        )?;
        auc += r.raw.auc;
        hits += r.raw.hits_at_10;
        f_auc += r.filtered.auc;
    }
    let n = SEEDS as f64;
    let (auc, hits, f_auc) = (auc / n, hits / n, f_auc / n);
    Ok(Verdict::new(
        auc >= MIN_AUC && hits >= MIN_HITS_AT_10,
        format!(
            "{} concepts, {queries_total} held-out pairs over {SEEDS} seeds; mean raw AUC {auc:.4} (>= {MIN_AUC}), \
             mean raw hits@10 {hits:.3} (>= {MIN_HITS_AT_10}), mean filtered AUC {f_auc:.4}",
            h.len()
        ),
    ))
}
