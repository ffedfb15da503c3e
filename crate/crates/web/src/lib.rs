//! Browser bindings for the demo page: train a knowledge base in two
//! dimensions and draw it, list its normal forms, and compare two boxes.
//!
//! Each export returns a JSON string; the plain Rust functions behind them
//! are usable natively.

use boxel::eval::check_soundness;
use boxel::geometry::{contains, disjoint_measure, intersect, mvol, svol, BoxN};
use boxel::train::{train, TrainConfig};
use boxel::viz::render_scene;
use boxel::{normalize, parse_kb, ModelConfig, NormalizedKb, VolumeConfig, VolumeKind};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub use boxel::datasets::FAMILY_KB;

/// Epochs the demo accepts in one call.
pub const MAX_EPOCHS: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainOutcome {
    pub svg: String,
    pub epochs: usize,
    pub positive_loss: f64,
    pub total_loss: f64,
    pub satisfied: usize,
    pub axioms: usize,
    /// Per-axiom verdict lines.
    pub report: String,
}

fn normalized(text: &str) -> Result<NormalizedKb, String> {
    let kb = parse_kb(text).map_err(|e| format!("line {e}"))?;
    normalize(&kb).map_err(|e| e.to_string())
}

pub fn train_kb(text: &str, epochs: usize, seed: u64, tol: f64) -> Result<TrainOutcome, String> {
    if epochs == 0 || epochs > MAX_EPOCHS {
        return Err(format!("epochs must lie in 1..={MAX_EPOCHS}"));
    }
    let nkb = normalized(text)?;
    let model_cfg = ModelConfig {
        dim: 2,
        seed,
        ..Default::default()
    };
    let train_cfg = TrainConfig {
        epochs,
        seed,
        log_every: 0,
        ..Default::default()
    };
    let (model, report) = train(&nkb, &model_cfg, &train_cfg).map_err(|e| e.to_string())?;
    let last = report.history.last().copied().unwrap_or_default();
    let soundness = check_soundness(&model, &nkb, tol);
    Ok(TrainOutcome {
        svg: boxel::viz::render_svg(&model).map_err(|e| e.to_string())?,
        epochs: report.final_epoch,
        positive_loss: last.positive(),
        total_loss: last.total,
        satisfied: soundness.satisfied_count(),
        axioms: soundness.entries.len(),
        report: soundness.to_text(),
    })
}

/// Tagged normal forms, one per line.
pub fn normal_forms(text: &str) -> Result<String, String> {
    Ok(normalized(text)?.serialize())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxComparison {
    pub mvol: [f64; 2],
    pub svol: [f64; 2],
    /// How much of A lies outside B, under the modified volume. `None` when
    /// A has zero modified volume.
    pub disjoint_a_b: Option<f64>,
    pub disjoint_b_a: Option<f64>,
    pub a_in_b: bool,
    pub b_in_a: bool,
    /// `[x0, y0, x1, y1]`, absent when the boxes do not meet.
    pub intersection: Option<[f64; 4]>,
    pub svg: String,
}

fn corners(c: [f64; 4]) -> BoxN {
    BoxN::new(vec![c[0], c[1]], vec![c[2], c[3]])
}

/// Boxes are `[x0, y0, x1, y1]` with lower corner first.
pub fn compare(a: [f64; 4], b: [f64; 4], cfg: VolumeConfig) -> Result<BoxComparison, String> {
    if a.iter().chain(&b).any(|x| !x.is_finite()) {
        return Err("corners must be finite".into());
    }
    if !(cfg.epsilon > 0.0 && cfg.temperature > 0.0) {
        return Err("epsilon and temperature must be positive".into());
    }
    let (ba, bb) = (corners(a), corners(b));
    let d = |x: &BoxN, y: &BoxN| disjoint_measure(x, y, VolumeKind::Modified, &cfg).ok();
    let meet = intersect(&ba, &bb).map_err(|e| e.to_string())?;
    let intersection =
        (!meet.is_empty()).then(|| [meet.lower[0], meet.lower[1], meet.upper[0], meet.upper[1]]);
    Ok(BoxComparison {
        mvol: [mvol(&ba, &cfg), mvol(&bb, &cfg)],
        svol: [svol(&ba, &cfg), svol(&bb, &cfg)],
        disjoint_a_b: d(&ba, &bb),
        disjoint_b_a: d(&bb, &ba),
        a_in_b: contains(&bb, &ba, 0.0).map_err(|e| e.to_string())?,
        b_in_a: contains(&ba, &bb, 0.0).map_err(|e| e.to_string())?,
        intersection,
        svg: render_scene(&[("A", ba.clone()), ("B", bb.clone())], &[]),
    })
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = familyKb)]
pub fn family_kb() -> String {
    FAMILY_KB.to_owned()
}

/// JSON [`TrainOutcome`].
#[wasm_bindgen(js_name = trainKb)]
pub fn train_kb_js(text: &str, epochs: u32, seed: u32, tol: f64) -> Result<String, JsError> {
    to_json(train_kb(text, epochs as usize, u64::from(seed), tol))
}

#[wasm_bindgen(js_name = normalForms)]
pub fn normal_forms_js(text: &str) -> Result<String, JsError> {
    normal_forms(text).map_err(|e| JsError::new(&e))
}

/// JSON [`BoxComparison`]; `a` and `b` hold four numbers each.
#[wasm_bindgen(js_name = compareBoxes)]
pub fn compare_js(a: &[f64], b: &[f64], epsilon: f64, temperature: f64) -> Result<String, JsError> {
    let four =
        |v: &[f64]| <[f64; 4]>::try_from(v).map_err(|_| "a box needs four numbers".to_owned());
    let run = || {
        compare(
            four(a)?,
            four(b)?,
            VolumeConfig {
                epsilon,
                temperature,
            },
        )
    };
    to_json(run())
}
