//! Link prediction with affine versus translation-only roles, five seeds.
//!
//! `cargo run --release --example ablation [epochs] [dim] [learning_rate] [gamma]`

use boxel::datasets::{link_split, LinkSpec};
use boxel::eval::{individual_candidates, known_links, link_queries, rank_links};
use boxel::train::{train, TrainConfig};
use boxel::{normalize, parse_kb, ModelConfig, RelationMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map_or(Ok(2000), |s| s.parse())?;
    let dim: usize = args.get(2).map_or(Ok(4), |s| s.parse())?;
    let learning_rate: f64 = args.get(3).map_or(Ok(1e-2), |s| s.parse())?;
    let gamma: f64 = args.get(4).map_or(Ok(0.1), |s| s.parse())?;
    for relation_mode in [RelationMode::Affine, RelationMode::Translation] {
        let mut total = 0.0;
        for seed in 0..5 {
            let split = link_split(&LinkSpec::default(), seed);
            let nkb = normalize(&parse_kb(&split.train)?)?;
            let model_cfg = ModelConfig {
                dim,
                seed,
                gamma,
                relation_mode,
                ..Default::default()
            };
            let train_cfg = TrainConfig {
                epochs,
                seed,
                learning_rate,
                log_every: 0,
                ..Default::default()
            };
            let (model, _) = train(&nkb, &model_cfg, &train_cfg)?;
            let queries = link_queries(&model, &parse_kb(&split.test)?)?;
            let r = rank_links(
                &model,
                &queries,
                &individual_candidates(&model),
                &known_links(&nkb),
            )?;
            println!(
                "{relation_mode:?} seed={seed} raw auc={:.4} hits@10={:.3} | filtered auc={:.4}",
                r.raw.auc, r.raw.hits_at_10, r.filtered.auc
            );
            total += r.raw.auc;
        }
        println!("{relation_mode:?} mean raw auc {:.4}", total / 5.0);
    }
    Ok(())
}
