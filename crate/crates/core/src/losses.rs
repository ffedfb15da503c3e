//! Per-axiom loss terms, negative sampling and total-loss assembly.
//!
//! Every loss is written once against [`Real`] and evaluated either on plain
//! `f64` (scoring, soundness checks, finite differences) or on a tape
//! (training). The volume inside the disjoint measure is a parameter: the
//! softplus volume is used for training, the modified volume for checking.

use std::collections::HashSet;

use rand::Rng;
use thiserror::Error;

use crate::autodiff::{norm, sum, Real};
use crate::geometry::{
    apply, apply_point, disjoint_measure, intersect, inverse, volume, BoxN, GeometryError,
    VolumeKind,
};
use crate::kb::{ConceptId, IndividualId, RoleId};
use crate::model::ParamView;
use crate::normalize::{NormalizedAxiom, NormalizedKb, Operand};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("inconsistent axiom: {0}")]
    Inconsistent(String),
    #[error("assertion of bottom is unsatisfiable")]
    BottomAssertion,
    #[error("bottom is not allowed in this position")]
    UnexpectedBottom,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Sums of each kind of loss term.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct LossBreakdown {
    pub concept_assertion: f64,
    pub role_assertion: f64,
    pub nf1: f64,
    pub nf1_bottom: f64,
    pub nf2: f64,
    pub nf2_disjoint: f64,
    pub nf3: f64,
    pub nf4: f64,
    pub neg_role: f64,
    pub neg_subsumption: f64,
    /// Unweighted regularizer.
    pub regularizer: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// Sum of the positive-axiom terms.
    pub fn positive(&self) -> f64 {
        self.concept_assertion
            + self.role_assertion
            + self.nf1
            + self.nf1_bottom
            + self.nf2
            + self.nf2_disjoint
            + self.nf3
            + self.nf4
    }

    pub fn fields(&self) -> [(&'static str, f64); 12] {
        [
            ("concept_assertion", self.concept_assertion),
            ("role_assertion", self.role_assertion),
            ("nf1", self.nf1),
            ("nf1_bottom", self.nf1_bottom),
            ("nf2", self.nf2),
            ("nf2_disjoint", self.nf2_disjoint),
            ("nf3", self.nf3),
            ("nf4", self.nf4),
            ("neg_role", self.neg_role),
            ("neg_subsumption", self.neg_subsumption),
            ("regularizer", self.regularizer),
            ("total", self.total),
        ]
    }

    /// Name of the first non-finite field, if any.
    pub fn non_finite(&self) -> Option<&'static str> {
        self.fields()
            .into_iter()
            .find(|(_, v)| !v.is_finite())
            .map(|(k, _)| k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    ConceptAssertion,
    RoleAssertion,
    Nf1,
    Nf1Bottom,
    Nf2,
    Nf2Disjoint,
    Nf3,
    Nf4,
    NegRole,
    NegSubsumption,
}

impl LossKind {
    fn slot(self, b: &mut LossBreakdown) -> &mut f64 {
        match self {
            LossKind::ConceptAssertion => &mut b.concept_assertion,
            LossKind::RoleAssertion => &mut b.role_assertion,
            LossKind::Nf1 => &mut b.nf1,
            LossKind::Nf1Bottom => &mut b.nf1_bottom,
            LossKind::Nf2 => &mut b.nf2,
            LossKind::Nf2Disjoint => &mut b.nf2_disjoint,
            LossKind::Nf3 => &mut b.nf3,
            LossKind::Nf4 => &mut b.nf4,
            LossKind::NegRole => &mut b.neg_role,
            LossKind::NegSubsumption => &mut b.neg_subsumption,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::ConceptAssertion => "concept_assertion",
            LossKind::RoleAssertion => "role_assertion",
            LossKind::Nf1 => "nf1",
            LossKind::Nf1Bottom => "nf1_bottom",
            LossKind::Nf2 => "nf2",
            LossKind::Nf2Disjoint => "nf2_disjoint",
            LossKind::Nf3 => "nf3",
            LossKind::Nf4 => "nf4",
            LossKind::NegRole => "neg_role",
            LossKind::NegSubsumption => "neg_subsumption",
        }
    }
}

fn operand_box<T: Real>(v: &ParamView<'_, T>, op: Operand) -> Result<BoxN<T>, LossError> {
    v.operand_box(op).ok_or(LossError::UnexpectedBottom)
}

/// Disjoint measure that treats a zero-volume first box as contained: under
/// the modified volume that box is empty.
fn disjoint<T: Real>(
    v: &ParamView<'_, T>,
    b1: &BoxN<T>,
    b2: &BoxN<T>,
    kind: VolumeKind,
) -> Result<T, LossError> {
    match disjoint_measure(b1, b2, kind, &v.config.volume) {
        Err(GeometryError::DivisionByZero) => Ok(v.constant(0.0)),
        other => Ok(other?),
    }
}

/// `C(a)`: distance of the point of `a` outside the box of `C`, summed over
/// dimensions.
pub fn loss_concept_assertion<T: Real>(
    v: &ParamView<'_, T>,
    concept: Operand,
    individual: IndividualId,
) -> Result<T, LossError> {
    if concept == Operand::Bottom {
        return Err(LossError::BottomAssertion);
    }
    let b = operand_box(v, concept)?;
    let p = v.entity_point(individual);
    let terms: Vec<T> = p
        .iter()
        .zip(b.lower.iter().zip(&b.upper))
        .map(|(&x, (&lo, &hi))| (x - hi).relu() + (lo - x).relu())
        .collect();
    Ok(sum(&terms))
}

fn role_distance<T: Real>(
    v: &ParamView<'_, T>,
    role: RoleId,
    head: IndividualId,
    tail: IndividualId,
) -> Result<T, LossError> {
    let mapped = apply_point(&v.affine(role), &v.entity_point(head))?;
    let tail = v.entity_point(tail);
    let diff: Vec<T> = mapped.iter().zip(&tail).map(|(&a, &b)| a - b).collect();
    Ok(norm(&diff))
}

/// `r(a, b)`: `‖T_r(a) − b‖`.
pub fn loss_role_assertion<T: Real>(
    v: &ParamView<'_, T>,
    role: RoleId,
    head: IndividualId,
    tail: IndividualId,
) -> Result<T, LossError> {
    role_distance(v, role, head, tail)
}

/// Corrupted `r(a', b')`: `max(0, γ − ‖T_r(a') − b'‖)`.
pub fn loss_neg_role_assertion<T: Real>(
    v: &ParamView<'_, T>,
    role: RoleId,
    head: IndividualId,
    tail: IndividualId,
) -> Result<T, LossError> {
    let d = role_distance(v, role, head, tail)?;
    Ok((-(d - v.config.gamma)).relu())
}

/// `C ⊑ D` with `D ≠ ⊥`.
pub fn loss_nf1<T: Real>(
    v: &ParamView<'_, T>,
    sub: Operand,
    sup: Operand,
    kind: VolumeKind,
) -> Result<T, LossError> {
    let c = operand_box(v, sub)?;
    let d = operand_box(v, sup)?;
    disjoint(v, &c, &d, kind)
}

/// `C ⊑ ⊥`: pushes the first side of `C` below `−ε`.
pub fn loss_nf1_bottom<T: Real>(v: &ParamView<'_, T>, sub: Operand) -> Result<T, LossError> {
    match sub {
        Operand::Concept(c) => {
            let b = v.concept_box(c);
            Ok((b.upper[0] - b.lower[0] + v.config.volume.epsilon).relu())
        }
        Operand::Bottom => Ok(v.constant(0.0)),
        Operand::Nominal(_) | Operand::Top => Err(LossError::Inconsistent(
            "a nominal or top cannot be empty".into(),
        )),
    }
}

/// `C1 ⊓ C2 ⊑ E` with `E ≠ ⊥`.
pub fn loss_nf2<T: Real>(
    v: &ParamView<'_, T>,
    left: Operand,
    right: Operand,
    sup: Operand,
    kind: VolumeKind,
) -> Result<T, LossError> {
    let inter = intersect(&operand_box(v, left)?, &operand_box(v, right)?)?;
    let e = operand_box(v, sup)?;
    disjoint(v, &inter, &e, kind)
}

/// `C1 ⊓ C2 ⊑ ⊥`: `vol(C1 ∩ C2) / (vol(C1) + vol(C2))`.
pub fn loss_nf2_disjoint<T: Real>(
    v: &ParamView<'_, T>,
    left: Operand,
    right: Operand,
    kind: VolumeKind,
) -> Result<T, LossError> {
    if left == right && matches!(left, Operand::Nominal(_) | Operand::Top) {
        return Err(LossError::Inconsistent(
            "an individual cannot be disjoint from itself".into(),
        ));
    }
    let (b1, b2) = (operand_box(v, left)?, operand_box(v, right)?);
    let cfg = &v.config.volume;
    let inter = volume(&intersect(&b1, &b2)?, kind, cfg);
    let denom = volume(&b1, kind, cfg) + volume(&b2, kind, cfg);
    if denom.value() == 0.0 {
        return Ok(v.constant(0.0));
    }
    Ok(inter / denom)
}

/// `C ⊑ ∃r.D`: the image of `C` under `T_r` lies in `D`.
pub fn loss_nf3<T: Real>(
    v: &ParamView<'_, T>,
    sub: Operand,
    role: RoleId,
    filler: Operand,
    kind: VolumeKind,
) -> Result<T, LossError> {
    let image = apply(&v.affine(role), &operand_box(v, sub)?)?;
    disjoint(v, &image, &operand_box(v, filler)?, kind)
}

/// `∃r.C ⊑ D`: the preimage of `C` under `T_r` lies in `D`. With `D = ⊥`
/// the preimage must be empty, which for a bijective `T_r` means `C ⊑ ⊥`.
pub fn loss_nf4<T: Real>(
    v: &ParamView<'_, T>,
    role: RoleId,
    filler: Operand,
    sup: Operand,
    kind: VolumeKind,
) -> Result<T, LossError> {
    if sup == Operand::Bottom {
        return loss_nf1_bottom(v, filler);
    }
    let preimage = apply(&inverse(&v.affine(role))?, &operand_box(v, filler)?)?;
    disjoint(v, &preimage, &operand_box(v, sup)?, kind)
}

/// `C ⋢ D'`: `φ · (1 − L(C ⊑ D'))`.
pub fn loss_neg_subsumption<T: Real>(
    v: &ParamView<'_, T>,
    sub: ConceptId,
    sup: ConceptId,
    kind: VolumeKind,
) -> Result<T, LossError> {
    let l = loss_nf1(v, Operand::Concept(sub), Operand::Concept(sup), kind)?;
    Ok(-(l - 1.0) * v.config.phi)
}

/// Keeps non-empty concept boxes (and entity boxes, when individuals are
/// boxes) inside the unit box.
pub fn regularizer<T: Real>(v: &ParamView<'_, T>) -> T {
    let eps = v.config.volume.epsilon;
    let mut terms = Vec::new();
    let mut add = |b: BoxN<T>| {
        if b.is_empty() {
            return;
        }
        for (&lo, &hi) in b.lower.iter().zip(&b.upper) {
            terms.push((hi - 1.0 + eps).relu() + (-lo - eps).relu());
        }
    };
    for c in 0..v.layout.concepts {
        add(v.concept_box(ConceptId(c as u32)));
    }
    if v.layout.entity_boxes {
        for a in 0..v.layout.individuals {
            add(v.entity_box(IndividualId(a as u32)));
        }
    }
    if terms.is_empty() {
        v.constant(0.0)
    } else {
        sum(&terms)
    }
}

/// Loss of one normalized axiom, tagged with its kind. `None` for axioms
/// that the current parameterization cannot express (`C ⊑ ⊥` with
/// constrained boxes).
pub fn axiom_loss<T: Real>(
    v: &ParamView<'_, T>,
    axiom: &NormalizedAxiom,
    kind: VolumeKind,
) -> Result<Option<(LossKind, T)>, LossError> {
    let bottom_allowed = v.config.unconstrained;
    let out = match *axiom {
        NormalizedAxiom::ConceptAssertion {
            concept,
            individual,
        } => (
            LossKind::ConceptAssertion,
            loss_concept_assertion(v, concept, individual)?,
        ),
        NormalizedAxiom::RoleAssertion { role, head, tail } => (
            LossKind::RoleAssertion,
            loss_role_assertion(v, role, head, tail)?,
        ),
        NormalizedAxiom::Nf1 {
            sub,
            sup: Operand::Bottom,
        } => {
            if matches!(sub, Operand::Nominal(_) | Operand::Top) {
                return Err(LossError::Inconsistent(
                    "a nominal or top cannot be empty".into(),
                ));
            }
            if !bottom_allowed {
                return Ok(None);
            }
            (LossKind::Nf1Bottom, loss_nf1_bottom(v, sub)?)
        }
        NormalizedAxiom::Nf1 { sub, sup } => (LossKind::Nf1, loss_nf1(v, sub, sup, kind)?),
        NormalizedAxiom::Nf2 {
            left,
            right,
            sup: Operand::Bottom,
        } => (
            LossKind::Nf2Disjoint,
            loss_nf2_disjoint(v, left, right, kind)?,
        ),
        NormalizedAxiom::Nf2 { left, right, sup } => {
            (LossKind::Nf2, loss_nf2(v, left, right, sup, kind)?)
        }
        NormalizedAxiom::Nf3 { sub, role, filler } => {
            (LossKind::Nf3, loss_nf3(v, sub, role, filler, kind)?)
        }
        NormalizedAxiom::Nf4 {
            role,
            filler,
            sup: Operand::Bottom,
        } => {
            if !bottom_allowed {
                return Ok(None);
            }
            (
                LossKind::Nf4,
                loss_nf4(v, role, filler, Operand::Bottom, kind)?,
            )
        }
        NormalizedAxiom::Nf4 { role, filler, sup } => {
            (LossKind::Nf4, loss_nf4(v, role, filler, sup, kind)?)
        }
    };
    Ok(Some(out))
}

/// A corrupted axiom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Negative {
    Role {
        role: RoleId,
        head: IndividualId,
        tail: IndividualId,
    },
    NonSubsumption {
        sub: ConceptId,
        sup: ConceptId,
    },
}

pub fn negative_loss<T: Real>(
    v: &ParamView<'_, T>,
    negative: &Negative,
    kind: VolumeKind,
) -> Result<(LossKind, T), LossError> {
    Ok(match *negative {
        Negative::Role { role, head, tail } => (
            LossKind::NegRole,
            loss_neg_role_assertion(v, role, head, tail)?,
        ),
        Negative::NonSubsumption { sub, sup } => (
            LossKind::NegSubsumption,
            loss_neg_subsumption(v, sub, sup, kind)?,
        ),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NegativeSample {
    pub negatives: Vec<Negative>,
    pub warnings: Vec<String>,
}

/// `ratio` corruptions per positive role assertion and per NF1 axiom between
/// concept names. Role corruptions replace the head or the tail (uniformly)
/// with a different individual; NF1 corruptions replace the sub- or
/// superclass and never reproduce a known NF1 axiom.
pub fn sample_negatives(nkb: &NormalizedKb, rng: &mut impl Rng, ratio: usize) -> NegativeSample {
    let mut out = NegativeSample::default();
    let n_ind = nkb.symbols.individuals.len() as u32;
    let n_con = nkb.symbols.concepts.len() as u32;

    let positives: HashSet<(ConceptId, ConceptId)> = nkb
        .axioms
        .iter()
        .filter_map(|a| match *a {
            NormalizedAxiom::Nf1 {
                sub: Operand::Concept(c),
                sup: Operand::Concept(d),
            } => Some((c, d)),
            _ => None,
        })
        .collect();

    let mut role_skipped = false;
    let mut nf1_skipped = 0usize;
    for axiom in &nkb.axioms {
        match *axiom {
            NormalizedAxiom::RoleAssertion { role, head, tail } => {
                if n_ind < 2 {
                    role_skipped = true;
                    continue;
                }
                for _ in 0..ratio {
                    // Uniform over the other individuals.
                    let pick = |rng: &mut dyn rand::RngCore, keep: IndividualId| {
                        let r = rng.gen_range(0..n_ind - 1);
                        IndividualId(if r >= keep.0 { r + 1 } else { r })
                    };
                    let neg = if rng.gen_bool(0.5) {
                        Negative::Role {
                            role,
                            head: pick(rng, head),
                            tail,
                        }
                    } else {
                        Negative::Role {
                            role,
                            head,
                            tail: pick(rng, tail),
                        }
                    };
                    out.negatives.push(neg);
                }
            }
            NormalizedAxiom::Nf1 {
                sub: Operand::Concept(c),
                sup: Operand::Concept(d),
            } => {
                if n_con < 2 {
                    nf1_skipped += 1;
                    continue;
                }
                for _ in 0..ratio {
                    let mut found = None;
                    for _ in 0..32 {
                        let x = ConceptId(rng.gen_range(0..n_con));
                        let pair = if rng.gen_bool(0.5) { (x, d) } else { (c, x) };
                        if pair.0 != pair.1 && !positives.contains(&pair) {
                            found = Some(pair);
                            break;
                        }
                    }
                    match found {
                        Some((sub, sup)) => {
                            out.negatives.push(Negative::NonSubsumption { sub, sup })
                        }
                        None => nf1_skipped += 1,
                    }
                }
            }
            _ => {}
        }
    }
    if role_skipped {
        out.warnings
            .push("role corruption skipped: fewer than two individuals".into());
    }
    if nf1_skipped > 0 {
        out.warnings.push(format!(
            "{nf1_skipped} subsumption corruptions skipped: no valid replacement"
        ));
    }
    out
}

/// Total loss over `axioms` and `negatives` plus the weighted regularizer,
/// with its breakdown by kind.
pub fn total_loss<T: Real>(
    v: &ParamView<'_, T>,
    axioms: &[NormalizedAxiom],
    negatives: &[Negative],
    kind: VolumeKind,
) -> Result<(T, LossBreakdown), LossError> {
    let mut breakdown = LossBreakdown::default();
    let mut terms = Vec::with_capacity(axioms.len() + negatives.len() + 1);
    for axiom in axioms {
        if let Some((k, l)) = axiom_loss(v, axiom, kind)? {
            *k.slot(&mut breakdown) += l.value();
            terms.push(l);
        }
    }
    for negative in negatives {
        let (k, l) = negative_loss(v, negative, kind)?;
        *k.slot(&mut breakdown) += l.value();
        terms.push(l);
    }
    let reg = regularizer(v);
    breakdown.regularizer = reg.value();
    terms.push(reg * v.config.reg_weight);
    let total = sum(&terms);
    breakdown.total = total.value();
    Ok((total, breakdown))
}
