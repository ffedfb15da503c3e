//! Reverse-mode gradients of every loss term and the regularizer against
//! central finite differences.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use boxel::autodiff::Real;
use boxel::kb::{ConceptId, IndividualId, RoleId};
use boxel::losses::{
    loss_concept_assertion, loss_neg_role_assertion, loss_neg_subsumption, loss_nf1,
    loss_nf1_bottom, loss_nf2, loss_nf2_disjoint, loss_nf3, loss_nf4, loss_role_assertion,
    regularizer, LossError,
};
use boxel::model::ParamView;
use boxel::normalize::Operand;
use boxel::train::value_and_grad;
use boxel::{parse_kb, EmbeddingModel, EntityMode, ModelConfig, VolumeKind};

use crate::{Error, Verdict};

const POINTS: usize = 100;
const STEP: f64 = 1e-5;
const MAX_REL_ERROR: f64 = 1e-4;
/// Gradient norm below which the relative error is measured against this
/// floor instead.
const NORM_FLOOR: f64 = 1e-8;
const MAX_SECONDS: f64 = 30.0;

const A: Operand = Operand::Concept(ConceptId(0));
const B: Operand = Operand::Concept(ConceptId(1));
const C: Operand = Operand::Concept(ConceptId(2));
const X: IndividualId = IndividualId(0);
const Y: IndividualId = IndividualId(1);
const Z: IndividualId = IndividualId(2);
const R: RoleId = RoleId(0);

type Op<T> = Result<T, LossError>;

fn concept_assertion<T: Real>(v: &ParamView<'_, T>, _: VolumeKind) -> Op<T> {
    loss_concept_assertion(v, A, X)
}
fn role_assertion<T: Real>(v: &ParamView<'_, T>, _: VolumeKind) -> Op<T> {
    loss_role_assertion(v, R, X, Y)
}
fn neg_role<T: Real>(v: &ParamView<'_, T>, _: VolumeKind) -> Op<T> {
    loss_neg_role_assertion(v, R, X, Z)
}
fn nf1<T: Real>(v: &ParamView<'_, T>, k: VolumeKind) -> Op<T> {
    loss_nf1(v, A, B, k)
}
fn nf1_nominal<T: Real>(v: &ParamView<'_, T>, k: VolumeKind) -> Op<T> {
    loss_nf1(v, Operand::Nominal(X), B, k)
}
fn nf1_bottom<T: Real>(v: &ParamView<'_, T>, _: VolumeKind) -> Op<T> {
    loss_nf1_bottom(v, A)
}
fn nf2<T: Real>(v: &ParamView<'_, T>, k: VolumeKind) -> Op<T> {
    loss_nf2(v, A, B, C, k)
}
fn nf2_disjoint<T: Real>(v: &ParamView<'_, T>, k: VolumeKind) -> Op<T> {
    loss_nf2_disjoint(v, A, B, k)
}
fn nf3<T: Real>(v: &ParamView<'_, T>, k: VolumeKind) -> Op<T> {
    loss_nf3(v, A, R, B, k)
}
fn nf4<T: Real>(v: &ParamView<'_, T>, k: VolumeKind) -> Op<T> {
    loss_nf4(v, R, A, B, k)
}
fn neg_subsumption<T: Real>(v: &ParamView<'_, T>, k: VolumeKind) -> Op<T> {
    loss_neg_subsumption(v, ConceptId(0), ConceptId(1), k)
}
fn reg<T: Real>(v: &ParamView<'_, T>, _: VolumeKind) -> Op<T> {
    Ok(regularizer(v))
}

/// Relative error between the taped gradient of `$op` and its central
/// finite-difference estimate at the parameters of `$model`.
macro_rules! rel_error {
    ($model:expr, $op:ident, $kind:expr) => {{
        let m: &EmbeddingModel = $model;
        let f = |p: &[f64]| -> Result<f64, LossError> {
            $op(&ParamView::new(&m.config, m.layout, p, 0.0), $kind)
        };
        let (_, taped) = value_and_grad(&m.config, m.layout, &m.params, |v| $op(v, $kind))?;
        let mut p = m.params.clone();
        let mut numeric = vec![0.0; p.len()];
        for i in 0..p.len() {
            let x = p[i];
            p[i] = x + STEP;
            let hi = f(&p)?;
            p[i] = x - STEP;
            let lo = f(&p)?;
            p[i] = x;
            numeric[i] = (hi - lo) / (2.0 * STEP);
        }
        relative_error(&taped, &numeric)
    }};
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(NORM_FLOOR)
}

/// Point `i`: a random model, alternating point/box entities and
/// constrained/unconstrained boxes.
fn random_model(i: usize) -> Result<EmbeddingModel, Error> {
    let kb = parse_kb("subclass(A, B)\nsubclass(C, top)\nrelation(r, x, y)\ninstance(A, z)")?;
    let cfg = ModelConfig {
        dim: 3,
        seed: i as u64,
        gamma: 2.0,
        entity_mode: if i.is_multiple_of(2) {
            EntityMode::Point
        } else {
            EntityMode::Box
        },
        unconstrained: i.is_multiple_of(3),
        ..Default::default()
    };
    let mut model = EmbeddingModel::init(&kb.symbols, &cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
    for p in &mut model.params {
        *p += rng.gen_range(-0.4..0.4);
    }
    Ok(model)
}

pub fn run() -> Result<Verdict, Error> {
    let start = Instant::now();
    let models = (0..POINTS)
        .map(random_model)
        .collect::<Result<Vec<_>, _>>()?;
    let mut worst: Vec<(&str, f64)> = Vec::new();
    macro_rules! check {
        ($name:expr, $op:ident, $kinds:expr) => {{
            let mut w = 0.0f64;
            for m in &models {
                for kind in $kinds {
                    let e = rel_error!(m, $op, kind);
                    w = if e.is_nan() { f64::INFINITY } else { w.max(e) };
                }
            }
            worst.push(($name, w));
        }};
    }
    let both = [VolumeKind::Softplus, VolumeKind::Modified];
    let none = [VolumeKind::Softplus];
    check!("concept_assertion", concept_assertion, none);
    check!("role_assertion", role_assertion, none);
    check!("neg_role", neg_role, none);
    check!("nf1", nf1, both);
    check!("nf1_nominal", nf1_nominal, both);
    check!("nf1_bottom", nf1_bottom, none);
    check!("nf2", nf2, both);
    check!("nf2_disjoint", nf2_disjoint, both);
    check!("nf3", nf3, both);
    check!("nf4", nf4, both);
    check!("neg_subsumption", neg_subsumption, both);
    check!("regularizer", reg, none);
    let secs = start.elapsed().as_secs_f64();
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let (arg, _) = worst
        .iter()
        .copied()
        .fold(("", -1.0), |acc, w| if w.1 > acc.1 { w } else { acc });
    Ok(Verdict::new(
        max < MAX_REL_ERROR && secs < MAX_SECONDS,
        format!(
            "{} operations × {POINTS} points, step {STEP:e}; max relative error {max:.2e} ({arg}) < {MAX_REL_ERROR:e}; {secs:.2}s < {MAX_SECONDS}s",
            worst.len()
        ),
    ))
}
