//! Fuzzed normalization: output shapes, fresh-name bound, idempotence, and
//! satisfiability agreement with the original KB on small domains.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use boxel::kb::{walk, Axiom, ConceptExpr, ConceptId, IndividualId, KnowledgeBase, RoleId};
use boxel::normalize;
use boxel::normalize::{small_model_oracle, NormalizedAxiom, Operand};

use crate::{Error, Verdict};

const FUZZED: usize = 1000;
const MAX_DEPTH: usize = 6;
const TINY: usize = 200;

struct Sig {
    concepts: u32,
    roles: u32,
    individuals: u32,
}

fn signature(sig: &Sig) -> KnowledgeBase {
    let mut kb = KnowledgeBase::new();
    for i in 0..sig.concepts {
        kb.symbols.concept(&format!("C{i}"));
    }
    for i in 0..sig.roles {
        kb.symbols.role(&format!("r{i}"));
    }
    for i in 0..sig.individuals {
        kb.symbols.individual(&format!("i{i}"));
    }
    kb
}

fn random_expr(rng: &mut ChaCha8Rng, sig: &Sig, depth: usize) -> ConceptExpr {
    if depth <= 1 || rng.gen_bool(0.35) {
        return match rng.gen_range(0..20) {
            0..=1 => ConceptExpr::Top,
            2 => ConceptExpr::Bottom,
            3..=5 if sig.individuals > 0 => {
                ConceptExpr::Nominal(IndividualId(rng.gen_range(0..sig.individuals)))
            }
            _ => ConceptExpr::Atomic(ConceptId(rng.gen_range(0..sig.concepts))),
        };
    }
    if rng.gen_bool(0.5) {
        ConceptExpr::and(
            random_expr(rng, sig, depth - 1),
            random_expr(rng, sig, depth - 1),
        )
    } else {
        ConceptExpr::some(
            RoleId(rng.gen_range(0..sig.roles)),
            random_expr(rng, sig, depth - 1),
        )
    }
}

fn random_kb(rng: &mut ChaCha8Rng, sig: &Sig, axioms: usize, depth: usize) -> KnowledgeBase {
    let mut kb = signature(sig);
    for _ in 0..axioms {
        let axiom = match rng.gen_range(0..10) {
            0 if sig.individuals > 0 => Axiom::ConceptAssertion {
                concept: random_expr(rng, sig, depth),
                individual: IndividualId(rng.gen_range(0..sig.individuals)),
            },
            1 if sig.individuals > 0 => Axiom::RoleAssertion {
                role: RoleId(rng.gen_range(0..sig.roles)),
                head: IndividualId(rng.gen_range(0..sig.individuals)),
                tail: IndividualId(rng.gen_range(0..sig.individuals)),
            },
            _ => Axiom::Inclusion {
                sub: random_expr(rng, sig, depth),
                sup: random_expr(rng, sig, depth),
            },
        };
        kb.push(axiom);
    }
    kb
}

/// Distinct subexpressions that are neither basic nor `⊥`.
fn complex_subexpressions(kb: &KnowledgeBase) -> usize {
    let mut seen = HashSet::new();
    let mut visit = |e: &ConceptExpr| {
        walk(e, &mut |s| {
            if !s.is_basic() && *s != ConceptExpr::Bottom {
                seen.insert(s.clone());
            }
        })
    };
    for axiom in &kb.axioms {
        match axiom {
            Axiom::Inclusion { sub, sup } => {
                visit(sub);
                visit(sup);
            }
            Axiom::ConceptAssertion { concept, .. } => visit(concept),
            Axiom::RoleAssertion { .. } => {}
        }
    }
    seen.len()
}

/// `⊥` may only appear as the right-hand side of NF1, NF2 and NF4.
fn valid_shape(axiom: &NormalizedAxiom) -> bool {
    let bot = |o: Operand| o == Operand::Bottom;
    match *axiom {
        NormalizedAxiom::Nf1 { sub, .. } => !bot(sub),
        NormalizedAxiom::Nf2 { left, right, .. } => !bot(left) && !bot(right),
        NormalizedAxiom::Nf3 { sub, filler, .. } => !bot(sub) && !bot(filler),
        NormalizedAxiom::Nf4 { filler, .. } => !bot(filler),
        NormalizedAxiom::ConceptAssertion { concept, .. } => !bot(concept),
        NormalizedAxiom::RoleAssertion { .. } => true,
    }
}

fn fuzz() -> Result<(usize, usize, Vec<String>), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let sig = Sig {
        concepts: 5,
        roles: 2,
        individuals: 3,
    };
    let mut problems = Vec::new();
    let (mut normalized, mut inconsistent) = (0, 0);
    for k in 0..FUZZED {
        let n_axioms = rng.gen_range(1..=6);
        let kb = random_kb(&mut rng, &sig, n_axioms, MAX_DEPTH);
        let nkb = match normalize(&kb) {
            Ok(nkb) => nkb,
            Err(_) => {
                inconsistent += 1;
                continue;
            }
        };
        normalized += 1;
        if let Some(a) = nkb.axioms.iter().find(|a| !valid_shape(a)) {
            problems.push(format!("kb {k}: bad shape {}", nkb.fmt_axiom(a)));
        }
        let bound = complex_subexpressions(&kb);
        if nkb.fresh_count > bound {
            problems.push(format!("kb {k}: {} fresh names > {bound}", nkb.fresh_count));
        }
        let again = normalize(&nkb.to_kb())?;
        if again.fresh_count != 0 || again.axioms != nkb.axioms {
            problems.push(format!("kb {k}: normalizing twice changes the result"));
        }
    }
    Ok((normalized, inconsistent, problems))
}

/// Returns (kbs compared, domain comparisons, satisfiable count, problems).
fn oracle() -> Result<(usize, usize, usize, Vec<String>), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sig = Sig {
        concepts: 2,
        roles: 1,
        individuals: 1,
    };
    let mut problems = Vec::new();
    let (mut kbs, mut comparisons, mut sat) = (0, 0, 0);
    while kbs < TINY {
        let n_axioms = rng.gen_range(1..=3);
        let kb = random_kb(&mut rng, &sig, n_axioms, 3);
        let normalized = normalize(&kb);
        let mut compared = 0;
        let mut any_sat = false;
        for d in 1..=3 {
            let Ok(original) = small_model_oracle(&kb, d) else {
                continue;
            };
            any_sat |= original;
            match &normalized {
                Err(e) => {
                    compared += 1;
                    if original {
                        problems.push(format!("{e} but a model of size {d} exists"));
                    }
                }
                Ok(nkb) => {
                    let Ok(rewritten) = small_model_oracle(&nkb.to_kb(), d) else {
                        continue;
                    };
                    compared += 1;
                    if original != rewritten {
                        problems.push(format!(
                            "domain {d}: original {original}, normalized {rewritten}"
                        ));
                    }
                }
            }
        }
        if compared > 0 {
            kbs += 1;
            comparisons += compared;
            sat += usize::from(any_sat);
        }
    }
    Ok((kbs, comparisons, sat, problems))
}

pub fn run() -> Result<Verdict, Error> {
    let (normalized, inconsistent, mut problems) = fuzz()?;
    let (kbs, comparisons, sat, oracle_problems) = oracle()?;
    problems.extend(oracle_problems);
    let detail = format!(
        "{FUZZED} fuzzed KBs (depth ≤ {MAX_DEPTH}): {normalized} normalized, {inconsistent} rejected as inconsistent; \
         {kbs} tiny KBs, {comparisons} domain-size comparisons, {sat} satisfiable; problems: {}",
        if problems.is_empty() {
            "none".to_owned()
        } else {
            format!("{} (first: {})", problems.len(), problems[0])
        }
    );
    Ok(Verdict::new(problems.is_empty(), detail))
}
