//! The full pipeline run twice with the same seed produces identical bytes.

use boxel::datasets::{hierarchy_split, Hierarchy, FAMILY_KB};
use boxel::eval::{
    check_soundness, concept_candidates, known_subsumptions, rank_subsumptions, subsumption_queries,
};
use boxel::model::manifest_path;
use boxel::train::{train, TrainConfig};
use boxel::viz::render_svg;
use boxel::{normalize, parse_kb, ModelConfig, VolumeKind};

use crate::{Error, Verdict};

/// Checkpoint, manifest, soundness report, ranking report and SVG.
fn artifacts(dir: &std::path::Path) -> Result<Vec<Vec<u8>>, Error> {
    let nkb = normalize(&parse_kb(FAMILY_KB)?)?;
    let (model, _) = train(
        &nkb,
        &ModelConfig {
            dim: 2,
            seed: 7,
            ..Default::default()
        },
        &TrainConfig {
            epochs: 300,
            seed: 7,
            ..Default::default()
        },
    )?;
    let ckpt = dir.join("family.ckpt");
    model.save_checkpoint(&ckpt)?;

    let split = hierarchy_split(&Hierarchy::four_level(), 0.1, 7);
    let hkb = normalize(&parse_kb(&split.train)?)?;
    let (hmodel, _) = train(
        &hkb,
        &ModelConfig {
            dim: 10,
            seed: 7,
            ..Default::default()
        },
        &TrainConfig {
            epochs: 200,
            seed: 7,
            batch_size: 16,
            ..Default::default()
        },
    )?;
    let ranking = rank_subsumptions(
        &hmodel,
        &subsumption_queries(&hmodel, &parse_kb(&split.test)?)?,
        &concept_candidates(&hmodel),
        &known_subsumptions(&hkb),
        VolumeKind::Softplus,
    )?;

    Ok(vec![
        std::fs::read(&ckpt)?,
        std::fs::read(manifest_path(&ckpt))?,
        check_soundness(&model, &nkb, 0.01).to_text().into_bytes(),
        ranking.to_report().into_bytes(),
        ranking.to_json().into_bytes(),
        render_svg(&model)?.into_bytes(),
        hmodel.to_bytes(),
    ])
}

pub fn run() -> Result<Verdict, Error> {
    let (a, b) = (tempfile::tempdir()?, tempfile::tempdir()?);
    let first = artifacts(a.path())?;
    let second = artifacts(b.path())?;
    let same = first == second;
    let bytes: usize = first.iter().map(Vec::len).sum();
    Ok(Verdict::new(
        same,
        format!(
            "{} artifacts ({bytes} bytes: checkpoints, manifest, reports, SVG) identical across two runs: {same}",
            first.len()
        ),
    ))
}
