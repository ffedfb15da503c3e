use std::time::Instant;

use boxel::datasets::FAMILY_KB;
use boxel::eval::{accuracy_strict, check_soundness};
use boxel::geometry::{contains, intersect};
use boxel::train::{train, TrainConfig};
use boxel::{normalize, parse_kb, ModelConfig};

use crate::{Error, Verdict};

const EPOCHS: usize = 2000;
const SOUNDNESS_TOL: f64 = 0.01;
const MIN_SATISFIED: f64 = 0.95;
const ACCURACY_TOL: f64 = 0.01;
const FACE_TOL: f64 = 0.02;
const MAX_SECONDS: f64 = 60.0;

const NAMED: [(&str, &str); 6] = [
    ("Male", "Person"),
    ("Female", "Person"),
    ("Father", "Male"),
    ("Mother", "Female"),
    ("Father", "Parent"),
    ("Mother", "Parent"),
];

pub fn run() -> Result<Verdict, Error> {
    let nkb = normalize(&parse_kb(FAMILY_KB)?)?;
    let start = Instant::now();
    let (model, _) = train(
        &nkb,
        &ModelConfig {
            dim: 2,
            seed: 0,
            ..Default::default()
        },
        &TrainConfig {
            epochs: EPOCHS,
            seed: 0,
            ..Default::default()
        },
    )?;
    let secs = start.elapsed().as_secs_f64();

    let soundness = check_soundness(&model, &nkb, SOUNDNESS_TOL).satisfied_fraction();
    let id = |n: &str| model.symbols.concept_id(n).ok_or(format!("missing {n}"));
    let pairs = NAMED
        .iter()
        .map(|&(c, d)| Ok((id(c)?, id(d)?)))
        .collect::<Result<Vec<_>, String>>()?;
    let accuracy = accuracy_strict(&model, &pairs, ACCURACY_TOL)?;
    let b = |n: &str| Ok::<_, String>(model.concept_box(id(n)?));
    let female_male_empty = intersect(&b("Female")?, &b("Male")?)?.is_empty();
    let father_in_parent_male = contains(
        &intersect(&b("Parent")?, &b("Male")?)?,
        &b("Father")?,
        FACE_TOL,
    )?;

    let pass = soundness >= MIN_SATISFIED
        && accuracy == 1.0
        && female_male_empty
        && father_in_parent_male
        && secs < MAX_SECONDS;
    Ok(Verdict::new(
        pass,
        format!(
            "satisfied={soundness:.3} (>= {MIN_SATISFIED} at tol {SOUNDNESS_TOL}), \
             accuracy={accuracy:.3} (= 1 at tol {ACCURACY_TOL}), \
             Female∩Male empty={female_male_empty}, \
             Father ⊆ Parent∩Male (tol {FACE_TOL})={father_in_parent_male}, \
             train {secs:.2}s (< {MAX_SECONDS}s)"
        ),
    ))
}
