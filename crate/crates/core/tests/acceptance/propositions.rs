//! Zero loss under the modified volume coincides with geometric satisfaction:
//! hand-built geometries that satisfy an axiom have loss exactly 0 and pass
//! the checker at tolerance 0; hand-built violations have positive loss and
//! fail the checker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use boxel::eval::check_axiom;
use boxel::geometry::{apply, apply_point, inverse, BoxN};
use boxel::kb::{ConceptId, IndividualId, RoleId};
use boxel::losses::axiom_loss;
use boxel::normalize::{NormalizedAxiom, Operand};
use boxel::{parse_kb, EmbeddingModel, ModelConfig, VolumeKind};

use crate::{Error, Verdict};

const CASES: usize = 500;
const DIM: usize = 3;
const EPSILON: f64 = 0.1;

const A: ConceptId = ConceptId(0);
const B: ConceptId = ConceptId(1);
const C: ConceptId = ConceptId(2);
const X: IndividualId = IndividualId(0);
const Y: IndividualId = IndividualId(1);
const R: RoleId = RoleId(0);

struct Geo {
    model: EmbeddingModel,
    rng: ChaCha8Rng,
}

impl Geo {
    fn new(seed: u64) -> Result<Self, Error> {
        let kb = parse_kb("subclass(A, B)\nsubclass(C, top)\nrelation(r, x, y)")?;
        let model = EmbeddingModel::init(
            &kb.symbols,
            &ModelConfig {
                dim: DIM,
                unconstrained: true,
                volume: boxel::VolumeConfig {
                    epsilon: EPSILON,
                    temperature: 1.0,
                },
                ..Default::default()
            },
        )?;
        Ok(Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    fn set_box(&mut self, c: ConceptId, b: &BoxN) {
        let l = self.model.layout.concept_lower(c.index());
        let u = self.model.layout.concept_upper(c.index());
        self.model.params[l].copy_from_slice(&b.lower);
        self.model.params[u].copy_from_slice(&b.upper);
    }

    fn set_point(&mut self, a: IndividualId, p: &[f64]) {
        let r = self.model.layout.entity(a.index());
        self.model.params[r].copy_from_slice(p);
    }

    fn random_role(&mut self) {
        for i in self.model.layout.role_scale(R.index()) {
            self.model.params[i] = self.rng.gen_range(-1.0..1.0);
        }
        for i in self.model.layout.role_offset(R.index()) {
            self.model.params[i] = self.rng.gen_range(-1.0..1.0);
        }
    }

    fn random_box(&mut self) -> BoxN {
        let lower: Vec<f64> = (0..DIM).map(|_| self.rng.gen_range(-1.0..1.0)).collect();
        let upper = lower
            .iter()
            .map(|l| l + self.rng.gen_range(0.01..1.0))
            .collect();
        BoxN::new(lower, upper)
    }

    /// Every face moved outwards by a margin that is zero a quarter of the
    /// time, so tight faces are exercised too.
    fn expand(&mut self, b: &BoxN) -> BoxN {
        let mut out = b.clone();
        for i in 0..DIM {
            out.lower[i] -= self.margin();
            out.upper[i] += self.margin();
        }
        out
    }

    fn margin(&mut self) -> f64 {
        if self.rng.gen_bool(0.25) {
            0.0
        } else {
            self.rng.gen_range(0.0..0.3)
        }
    }

    /// Pulls one face of `outer` past the matching face of `inner`, so that
    /// `inner` sticks out by at least 0.001.
    fn shrink_past(&mut self, outer: &BoxN, inner: &BoxN) -> BoxN {
        let mut out = outer.clone();
        let i = self.rng.gen_range(0..DIM);
        let side = inner.upper[i] - inner.lower[i];
        let delta = self.rng.gen_range(0.001..(0.5 * side).max(0.0011));
        if self.rng.gen_bool(0.5) {
            out.lower[i] = inner.lower[i] + delta;
        } else {
            out.upper[i] = inner.upper[i] - delta;
        }
        out
    }

    fn point_in(&mut self, b: &BoxN) -> Vec<f64> {
        (0..DIM)
            .map(|i| {
                let t: f64 = self.rng.gen_range(0.0..=1.0);
                (b.lower[i] + t * (b.upper[i] - b.lower[i])).clamp(b.lower[i], b.upper[i])
            })
            .collect()
    }

    fn point_outside(&mut self, b: &BoxN) -> Vec<f64> {
        let mut p = self.point_in(b);
        let i = self.rng.gen_range(0..DIM);
        let delta = self.rng.gen_range(0.001..0.5);
        p[i] = if self.rng.gen_bool(0.5) {
            b.lower[i] - delta
        } else {
            b.upper[i] + delta
        };
        p
    }

    /// A box whose first side lies strictly below `−ε`.
    fn empty_box(&mut self) -> BoxN {
        let mut b = self.random_box();
        b.upper[0] = b.lower[0] - EPSILON - self.rng.gen_range(0.001..0.5);
        b
    }

    /// Two boxes whose intersection is the returned third box.
    fn overlapping(&mut self) -> (BoxN, BoxN, BoxN) {
        let inter = self.random_box();
        let (mut l, mut r) = (inter.clone(), inter.clone());
        for i in 0..DIM {
            let m = self.rng.gen_range(0.0..0.5);
            if self.rng.gen_bool(0.5) {
                l.lower[i] -= m;
            } else {
                r.lower[i] -= m;
            }
            let m = self.rng.gen_range(0.0..0.5);
            if self.rng.gen_bool(0.5) {
                l.upper[i] += m;
            } else {
                r.upper[i] += m;
            }
        }
        (l, r, inter)
    }

    fn separated(&mut self) -> (BoxN, BoxN) {
        let l = self.random_box();
        let mut r = self.random_box();
        let i = self.rng.gen_range(0..DIM);
        let gap = EPSILON + self.rng.gen_range(0.001..0.5);
        let side = r.upper[i] - r.lower[i];
        if self.rng.gen_bool(0.5) {
            r.lower[i] = l.upper[i] + gap;
            r.upper[i] = r.lower[i] + side;
        } else {
            r.upper[i] = l.lower[i] - gap;
            r.lower[i] = r.upper[i] - side;
        }
        (l, r)
    }

    /// `(loss, checker verdict)` of `axiom` on the current geometry.
    fn judge(&self, axiom: &NormalizedAxiom) -> Result<(f64, bool), Error> {
        let loss = axiom_loss(&self.model.view(), axiom, VolumeKind::Modified)?
            .map(|(_, l)| l)
            .ok_or("axiom has no loss term")?;
        let (ok, _) = check_axiom(&self.model, axiom, 0.0);
        Ok((loss, ok))
    }
}

/// Builds a satisfying (`true`) or violating (`false`) geometry and returns
/// the axiom it is about.
type Builder = fn(&mut Geo, bool) -> NormalizedAxiom;

fn concept_assertion(g: &mut Geo, sat: bool) -> NormalizedAxiom {
    let top = g.rng.gen_bool(0.2);
    let b = if top { BoxN::unit(DIM) } else { g.random_box() };
    if !top {
        g.set_box(A, &b);
    }
    let p = if sat {
        g.point_in(&b)
    } else {
        g.point_outside(&b)
    };
    g.set_point(X, &p);
    NormalizedAxiom::ConceptAssertion {
        concept: if top {
            Operand::Top
        } else {
            Operand::Concept(A)
        },
        individual: X,
    }
}

fn role_assertion(g: &mut Geo, sat: bool) -> NormalizedAxiom {
    g.random_role();
    let head = g.random_box().lower;
    g.set_point(X, &head);
    let mut tail = apply_point(&g.model.affine(R), &head).expect("dims agree");
    if !sat {
        let i = g.rng.gen_range(0..DIM);
        tail[i] += g.rng.gen_range(0.001..0.5);
    }
    g.set_point(Y, &tail);
    NormalizedAxiom::RoleAssertion {
        role: R,
        head: X,
        tail: Y,
    }
}

fn nf1(g: &mut Geo, sat: bool) -> NormalizedAxiom {
    match g.rng.gen_range(0..3) {
        0 => {
            let sup = g.random_box();
            g.set_box(B, &sup);
            let p = if sat {
                g.point_in(&sup)
            } else {
                g.point_outside(&sup)
            };
            g.set_point(X, &p);
            NormalizedAxiom::Nf1 {
                sub: Operand::Nominal(X),
                sup: Operand::Concept(B),
            }
        }
        1 => {
            let lower: Vec<f64> = (0..DIM).map(|_| g.rng.gen_range(0.0..0.5)).collect();
            let upper = lower
                .iter()
                .map(|l| l + g.rng.gen_range(0.01..0.5))
                .collect();
            let mut sub = BoxN::new(lower, upper);
            if !sat {
                let i = g.rng.gen_range(0..DIM);
                let delta = g.rng.gen_range(0.001..0.5);
                if g.rng.gen_bool(0.5) {
                    sub.lower[i] = -delta;
                } else {
                    sub.upper[i] = 1.0 + delta;
                }
            }
            g.set_box(A, &sub);
            NormalizedAxiom::Nf1 {
                sub: Operand::Concept(A),
                sup: Operand::Top,
            }
        }
        _ => {
            let sub = g.random_box();
            let mut sup = g.expand(&sub);
            if !sat {
                sup = g.shrink_past(&sup, &sub);
            }
            g.set_box(A, &sub);
            g.set_box(B, &sup);
            NormalizedAxiom::Nf1 {
                sub: Operand::Concept(A),
                sup: Operand::Concept(B),
            }
        }
    }
}

fn nf1_bottom(g: &mut Geo, sat: bool) -> NormalizedAxiom {
    let b = if sat { g.empty_box() } else { g.random_box() };
    g.set_box(A, &b);
    NormalizedAxiom::Nf1 {
        sub: Operand::Concept(A),
        sup: Operand::Bottom,
    }
}

fn nf2(g: &mut Geo, sat: bool) -> NormalizedAxiom {
    let (l, r, inter) = g.overlapping();
    let mut sup = g.expand(&inter);
    if !sat {
        sup = g.shrink_past(&sup, &inter);
    }
    g.set_box(A, &l);
    g.set_box(B, &r);
    g.set_box(C, &sup);
    NormalizedAxiom::Nf2 {
        left: Operand::Concept(A),
        right: Operand::Concept(B),
        sup: Operand::Concept(C),
    }
}

fn nf2_bottom(g: &mut Geo, sat: bool) -> NormalizedAxiom {
    let (l, r) = if sat {
        g.separated()
    } else {
        let (l, r, _) = g.overlapping();
        (l, r)
    };
    g.set_box(A, &l);
    g.set_box(B, &r);
    NormalizedAxiom::Nf2 {
        left: Operand::Concept(A),
        right: Operand::Concept(B),
        sup: Operand::Bottom,
    }
}

fn nf3(g: &mut Geo, sat: bool) -> NormalizedAxiom {
    g.random_role();
    let sub = g.random_box();
    let image = apply(&g.model.affine(R), &sub).expect("dims agree");
    let mut filler = g.expand(&image);
    if !sat {
        filler = g.shrink_past(&filler, &image);
    }
    g.set_box(A, &sub);
    g.set_box(B, &filler);
    NormalizedAxiom::Nf3 {
        sub: Operand::Concept(A),
        role: R,
        filler: Operand::Concept(B),
    }
}

fn nf4(g: &mut Geo, sat: bool) -> NormalizedAxiom {
    g.random_role();
    let filler = g.random_box();
    let inv = inverse(&g.model.affine(R)).expect("scales are positive");
    let preimage = apply(&inv, &filler).expect("dims agree");
    let mut sup = g.expand(&preimage);
    if !sat {
        sup = g.shrink_past(&sup, &preimage);
    }
    g.set_box(A, &filler);
    g.set_box(B, &sup);
    NormalizedAxiom::Nf4 {
        role: R,
        filler: Operand::Concept(A),
        sup: Operand::Concept(B),
    }
}

fn nf4_bottom(g: &mut Geo, sat: bool) -> NormalizedAxiom {
    g.random_role();
    let filler = if sat { g.empty_box() } else { g.random_box() };
    g.set_box(A, &filler);
    NormalizedAxiom::Nf4 {
        role: R,
        filler: Operand::Concept(A),
        sup: Operand::Bottom,
    }
}

pub fn run() -> Result<Verdict, Error> {
    let forms: [(&str, Builder); 9] = [
        ("C(a)", concept_assertion),
        ("r(a,b)", role_assertion),
        ("NF1", nf1),
        ("NF1⊥", nf1_bottom),
        ("NF2", nf2),
        ("NF2⊥", nf2_bottom),
        ("NF3", nf3),
        ("NF4", nf4),
        ("NF4⊥", nf4_bottom),
    ];
    let mut failures = Vec::new();
    for (k, (name, build)) in forms.iter().enumerate() {
        let mut g = Geo::new(k as u64)?;
        let mut bad = 0;
        for case in 0..2 * CASES {
            let sat = case % 2 == 0;
            let axiom = build(&mut g, sat);
            let (loss, ok) = g.judge(&axiom)?;
            let good = if sat {
                loss == 0.0 && ok
            } else {
                loss > 0.0 && !ok
            };
            if !good {
                bad += 1;
            }
        }
        if bad > 0 {
            failures.push(format!("{name}: {bad}"));
        }
    }
    let detail = format!(
        "{} forms × ({CASES} satisfying with loss == 0 and check at tol 0, {CASES} violating with loss > 0 and check failing); failures: {}",
        forms.len(),
        if failures.is_empty() {
            "none".to_owned()
        } else {
            failures.join(", ")
        }
    );
    Ok(Verdict::new(failures.is_empty(), detail))
}
