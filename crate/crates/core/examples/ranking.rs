//! Subsumption ranking on the synthetic four-level hierarchy, five seeds.
//!
//! `cargo run --release --example ranking [epochs] [learning_rate]`

use boxel::datasets::{hierarchy_split, Hierarchy};
use boxel::eval::{concept_candidates, known_subsumptions, rank_subsumptions, subsumption_queries};
use boxel::train::{train, TrainConfig};
use boxel::{normalize, parse_kb, ModelConfig, VolumeKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map_or(Ok(1000), |s| s.parse())?;
    let learning_rate: f64 = args.get(2).map_or(Ok(5e-3), |s| s.parse())?;
    let hierarchy = Hierarchy::four_level();
    for seed in 0..5 {
        let split = hierarchy_split(&hierarchy, 0.1, seed);
        let nkb = normalize(&parse_kb(&split.train)?)?;
        let model_cfg = ModelConfig {
            dim: 10,
            seed,
            ..Default::default()
        };
        let train_cfg = TrainConfig {
            epochs,
            seed,
            learning_rate,
            log_every: 0,
            ..Default::default()
        };
        let (model, report) = train(&nkb, &model_cfg, &train_cfg)?;
        let queries = subsumption_queries(&model, &parse_kb(&split.test)?)?;
        let known = known_subsumptions(&nkb);
        let candidates = concept_candidates(&model);
        for kind in [VolumeKind::Softplus, VolumeKind::Modified] {
            let r = rank_subsumptions(&model, &queries, &candidates, &known, kind)?;
            println!(
                "seed={seed} {kind:?} {:.0}ms raw hits@10={:.3} auc={:.3} | filtered hits@10={:.3} auc={:.3}",
                report.wall_ms, r.raw.hits_at_10, r.raw.auc, r.filtered.hits_at_10, r.filtered.auc
            );
        }
    }
    Ok(())
}
