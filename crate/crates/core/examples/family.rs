//! Trains the family knowledge base in two dimensions and prints the
//! soundness report and the learned boxes.
//!
//! `cargo run --release --example family [epochs] [seed]`

use boxel::datasets::FAMILY_KB;
use boxel::eval::check_soundness;
use boxel::train::{train, TrainConfig};
use boxel::{normalize, parse_kb, ModelConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let epochs = args.get(1).map_or(Ok(2000), |s| s.parse())?;
    let seed = args.get(2).map_or(Ok(0), |s| s.parse())?;
    let nkb = normalize(&parse_kb(FAMILY_KB)?)?;
    let model_cfg = ModelConfig {
        dim: 2,
        seed,
        ..Default::default()
    };
    let train_cfg = TrainConfig {
        epochs,
        seed,
        ..Default::default()
    };
    let (model, report) = train(&nkb, &model_cfg, &train_cfg)?;
    let last = report.history.last().copied().unwrap_or_default();
    println!(
        "epochs={} wall_ms={:.0} positive={:.6} total={:.6}",
        report.final_epoch,
        report.wall_ms,
        last.positive(),
        last.total
    );
    print!("{}", check_soundness(&model, &nkb, 0.01).to_text());
    for name in ["Person", "Male", "Female", "Parent", "Father", "Mother"] {
        let b = model.materialize_box(name)?;
        println!("{name}: {:?} {:?}", b.lower, b.upper);
    }
    Ok(())
}
