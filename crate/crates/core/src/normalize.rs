//! Rewriting EL++ KBs into normal forms.
//!
//! Every TBox axiom becomes one of
//!
//! ```text
//! NF1: C ⊑ D      NF2: C1 ⊓ C2 ⊑ D      NF3: C ⊑ ∃r.D      NF4: ∃r.C ⊑ D
//! ```
//!
//! where the operands are `⊤`, concept names or nominals, and `D` may be `⊥`
//! except in NF3. Complex subexpressions are replaced by fresh concept names
//! (`__nf0`, `__nf1`, ...). A fresh name is reused for every occurrence of the
//! same subexpression, so the number of fresh names is bounded by the number
//! of distinct complex subexpressions in the input.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use indexmap::IndexSet;
use thiserror::Error;

use crate::kb::{
    Axiom, ConceptExpr, ConceptId, IndividualId, KnowledgeBase, RoleId, SymbolTables, FRESH_PREFIX,
};

/// An operand of a normalized axiom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Top,
    Bottom,
    Concept(ConceptId),
    Nominal(IndividualId),
}

impl Operand {
    pub fn to_expr(self) -> ConceptExpr {
        match self {
            Operand::Top => ConceptExpr::Top,
            Operand::Bottom => ConceptExpr::Bottom,
            Operand::Concept(c) => ConceptExpr::Atomic(c),
            Operand::Nominal(a) => ConceptExpr::Nominal(a),
        }
    }

    fn from_basic(expr: &ConceptExpr) -> Option<Operand> {
        match expr {
            ConceptExpr::Top => Some(Operand::Top),
            ConceptExpr::Bottom => Some(Operand::Bottom),
            ConceptExpr::Atomic(c) => Some(Operand::Concept(*c)),
            ConceptExpr::Nominal(a) => Some(Operand::Nominal(*a)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormalizedAxiom {
    /// `sub ⊑ sup`
    Nf1 { sub: Operand, sup: Operand },
    /// `left ⊓ right ⊑ sup`; `sup = ⊥` encodes disjointness.
    Nf2 {
        left: Operand,
        right: Operand,
        sup: Operand,
    },
    /// `sub ⊑ ∃role.filler`
    Nf3 {
        sub: Operand,
        role: RoleId,
        filler: Operand,
    },
    /// `∃role.filler ⊑ sup`
    Nf4 {
        role: RoleId,
        filler: Operand,
        sup: Operand,
    },
    ConceptAssertion {
        concept: Operand,
        individual: IndividualId,
    },
    RoleAssertion {
        role: RoleId,
        head: IndividualId,
        tail: IndividualId,
    },
}

impl NormalizedAxiom {
    /// The equivalent general axiom.
    pub fn to_axiom(self) -> Axiom {
        match self {
            NormalizedAxiom::Nf1 { sub, sup } => Axiom::Inclusion {
                sub: sub.to_expr(),
                sup: sup.to_expr(),
            },
            NormalizedAxiom::Nf2 { left, right, sup } => Axiom::Inclusion {
                sub: ConceptExpr::and(left.to_expr(), right.to_expr()),
                sup: sup.to_expr(),
            },
            NormalizedAxiom::Nf3 { sub, role, filler } => Axiom::Inclusion {
                sub: sub.to_expr(),
                sup: ConceptExpr::some(role, filler.to_expr()),
            },
            NormalizedAxiom::Nf4 { role, filler, sup } => Axiom::Inclusion {
                sub: ConceptExpr::some(role, filler.to_expr()),
                sup: sup.to_expr(),
            },
            NormalizedAxiom::ConceptAssertion {
                concept,
                individual,
            } => Axiom::ConceptAssertion {
                concept: concept.to_expr(),
                individual,
            },
            NormalizedAxiom::RoleAssertion { role, head, tail } => {
                Axiom::RoleAssertion { role, head, tail }
            }
        }
    }
}

/// A KB in normal form over an extended signature.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedKb {
    pub symbols: SymbolTables,
    pub axioms: Vec<NormalizedAxiom>,
    pub fresh_count: usize,
    /// Fresh concept name → the expression it stands for.
    pub provenance: BTreeMap<ConceptId, ConceptExpr>,
}

impl NormalizedKb {
    pub fn is_fresh(&self, c: ConceptId) -> bool {
        self.provenance.contains_key(&c)
    }

    /// Concept names that came from the input KB.
    pub fn named_concepts(&self) -> Vec<ConceptId> {
        (0..self.symbols.concepts.len() as u32)
            .map(ConceptId)
            .filter(|c| !self.is_fresh(*c))
            .collect()
    }

    /// The same axioms as a general KB over the extended signature.
    pub fn to_kb(&self) -> KnowledgeBase {
        KnowledgeBase {
            symbols: self.symbols.clone(),
            axioms: self.axioms.iter().map(|a| a.to_axiom()).collect(),
        }
    }

    pub fn fmt_operand(&self, op: Operand) -> String {
        let s = &self.symbols;
        match op {
            Operand::Top => "top".into(),
            Operand::Bottom => "bottom".into(),
            Operand::Concept(c) => s.concept_name(c).into(),
            Operand::Nominal(a) => format!("nominal({})", s.individual_name(a)),
        }
    }

    pub fn fmt_axiom(&self, axiom: &NormalizedAxiom) -> String {
        let op = |o| self.fmt_operand(o);
        let s = &self.symbols;
        match *axiom {
            NormalizedAxiom::Nf1 { sub, sup } => format!("nf1({},{})", op(sub), op(sup)),
            NormalizedAxiom::Nf2 { left, right, sup } => {
                format!("nf2({},{},{})", op(left), op(right), op(sup))
            }
            NormalizedAxiom::Nf3 { sub, role, filler } => {
                format!("nf3({},{},{})", op(sub), s.role_name(role), op(filler))
            }
            NormalizedAxiom::Nf4 { role, filler, sup } => {
                format!("nf4({},{},{})", s.role_name(role), op(filler), op(sup))
            }
            NormalizedAxiom::ConceptAssertion {
                concept,
                individual,
            } => format!(
                "assert_c({},{})",
                op(concept),
                s.individual_name(individual)
            ),
            NormalizedAxiom::RoleAssertion { role, head, tail } => format!(
                "assert_r({},{},{})",
                s.role_name(role),
                s.individual_name(head),
                s.individual_name(tail)
            ),
        }
    }

    /// The same axioms over `target`, matching symbols by name.
    pub fn rebind(&self, target: &SymbolTables) -> Result<NormalizedKb, NormalizeError> {
        let from = &self.symbols;
        let unknown = |kind, name: &str| NormalizeError::UnknownSymbol {
            kind,
            name: name.to_owned(),
        };
        let concept = |c: ConceptId| {
            let name = from.concept_name(c);
            target
                .concept_id(name)
                .ok_or_else(|| unknown("concept", name))
        };
        let individual = |a: IndividualId| {
            let name = from.individual_name(a);
            target
                .individual_id(name)
                .ok_or_else(|| unknown("individual", name))
        };
        let role = |r: RoleId| {
            let name = from.role_name(r);
            target.role_id(name).ok_or_else(|| unknown("role", name))
        };
        let op = |o: Operand| -> Result<Operand, NormalizeError> {
            Ok(match o {
                Operand::Concept(c) => Operand::Concept(concept(c)?),
                Operand::Nominal(a) => Operand::Nominal(individual(a)?),
                other => other,
            })
        };
        fn expr(
            e: &ConceptExpr,
            concept: &impl Fn(ConceptId) -> Result<ConceptId, NormalizeError>,
            individual: &impl Fn(IndividualId) -> Result<IndividualId, NormalizeError>,
            role: &impl Fn(RoleId) -> Result<RoleId, NormalizeError>,
        ) -> Result<ConceptExpr, NormalizeError> {
            Ok(match e {
                ConceptExpr::Atomic(c) => ConceptExpr::Atomic(concept(*c)?),
                ConceptExpr::Nominal(a) => ConceptExpr::Nominal(individual(*a)?),
                ConceptExpr::Conjunction(l, r) => ConceptExpr::and(
                    expr(l, concept, individual, role)?,
                    expr(r, concept, individual, role)?,
                ),
                ConceptExpr::Existential(r, f) => {
                    ConceptExpr::some(role(*r)?, expr(f, concept, individual, role)?)
                }
                other => other.clone(),
            })
        }
        let axioms = self
            .axioms
            .iter()
            .map(|a| {
                Ok(match *a {
                    NormalizedAxiom::Nf1 { sub, sup } => NormalizedAxiom::Nf1 {
                        sub: op(sub)?,
                        sup: op(sup)?,
                    },
                    NormalizedAxiom::Nf2 { left, right, sup } => NormalizedAxiom::Nf2 {
                        left: op(left)?,
                        right: op(right)?,
                        sup: op(sup)?,
                    },
                    NormalizedAxiom::Nf3 {
                        sub,
                        role: r,
                        filler,
                    } => NormalizedAxiom::Nf3 {
                        sub: op(sub)?,
                        role: role(r)?,
                        filler: op(filler)?,
                    },
                    NormalizedAxiom::Nf4 {
                        role: r,
                        filler,
                        sup,
                    } => NormalizedAxiom::Nf4 {
                        role: role(r)?,
                        filler: op(filler)?,
                        sup: op(sup)?,
                    },
                    NormalizedAxiom::ConceptAssertion {
                        concept: c,
                        individual: a,
                    } => NormalizedAxiom::ConceptAssertion {
                        concept: op(c)?,
                        individual: individual(a)?,
                    },
                    NormalizedAxiom::RoleAssertion {
                        role: r,
                        head,
                        tail,
                    } => NormalizedAxiom::RoleAssertion {
                        role: role(r)?,
                        head: individual(head)?,
                        tail: individual(tail)?,
                    },
                })
            })
            .collect::<Result<Vec<_>, NormalizeError>>()?;
        let provenance = self
            .provenance
            .iter()
            .map(|(c, e)| Ok((concept(*c)?, expr(e, &concept, &individual, &role)?)))
            .collect::<Result<_, NormalizeError>>()?;
        Ok(NormalizedKb {
            symbols: target.clone(),
            axioms,
            fresh_count: self.fresh_count,
            provenance,
        })
    }

    /// The `.nkb` text form: one tagged axiom per line.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for axiom in &self.axioms {
            let _ = writeln!(out, "{}", self.fmt_axiom(axiom));
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("axiom {axiom}: `{text}` is inconsistent")]
    InconsistentAxiom { axiom: usize, text: String },
    #[error("{kind} `{name}` is not in the target signature")]
    UnknownSymbol { kind: &'static str, name: String },
}

pub fn normalize(kb: &KnowledgeBase) -> Result<NormalizedKb, NormalizeError> {
    let mut n = Normalizer {
        symbols: kb.symbols.clone(),
        out: IndexSet::new(),
        names: HashMap::new(),
        provenance: BTreeMap::new(),
        counter: 0,
        current: 0,
    };
    for (idx, axiom) in kb.axioms.iter().enumerate() {
        n.current = idx + 1;
        match axiom {
            Axiom::Inclusion { sub, sup } => {
                let (sub, sup) = (simplify(sub), simplify(sup));
                n.inclusion(&sub, &sup)?;
            }
            Axiom::ConceptAssertion {
                concept,
                individual,
            } => {
                let concept = simplify(concept);
                let op = match Operand::from_basic(&concept) {
                    Some(Operand::Bottom) => return Err(n.inconsistent(&concept, None)),
                    Some(op) => op,
                    None => {
                        let x = n.fresh_for(&concept);
                        n.inclusion(&ConceptExpr::Atomic(x), &concept)?;
                        Operand::Concept(x)
                    }
                };
                n.emit(NormalizedAxiom::ConceptAssertion {
                    concept: op,
                    individual: *individual,
                });
            }
            Axiom::RoleAssertion { role, head, tail } => n.emit(NormalizedAxiom::RoleAssertion {
                role: *role,
                head: *head,
                tail: *tail,
            }),
        }
    }
    Ok(NormalizedKb {
        symbols: n.symbols,
        axioms: n.out.into_iter().collect(),
        fresh_count: n.provenance.len(),
        provenance: n.provenance,
    })
}

/// Pushes `⊥` upwards: `C ⊓ ⊥` and `∃r.⊥` are both `⊥`.
fn simplify(expr: &ConceptExpr) -> ConceptExpr {
    match expr {
        ConceptExpr::Conjunction(l, r) => {
            let (l, r) = (simplify(l), simplify(r));
            if l == ConceptExpr::Bottom || r == ConceptExpr::Bottom {
                ConceptExpr::Bottom
            } else {
                ConceptExpr::and(l, r)
            }
        }
        ConceptExpr::Existential(role, f) => {
            let f = simplify(f);
            if f == ConceptExpr::Bottom {
                ConceptExpr::Bottom
            } else {
                ConceptExpr::some(*role, f)
            }
        }
        other => other.clone(),
    }
}

struct Normalizer {
    symbols: SymbolTables,
    out: IndexSet<NormalizedAxiom>,
    names: HashMap<ConceptExpr, ConceptId>,
    provenance: BTreeMap<ConceptId, ConceptExpr>,
    counter: usize,
    current: usize,
}

impl Normalizer {
    fn emit(&mut self, axiom: NormalizedAxiom) {
        self.out.insert(axiom);
    }

    fn inconsistent(&self, sub: &ConceptExpr, sup: Option<&ConceptExpr>) -> NormalizeError {
        let kb = KnowledgeBase {
            symbols: self.symbols.clone(),
            axioms: Vec::new(),
        };
        let text = match sup {
            Some(sup) => format!("{} ⊑ {}", kb.fmt_expr(sub), kb.fmt_expr(sup)),
            None => format!("{}(_)", kb.fmt_expr(sub)),
        };
        NormalizeError::InconsistentAxiom {
            axiom: self.current,
            text,
        }
    }

    fn fresh_for(&mut self, expr: &ConceptExpr) -> ConceptId {
        if let Some(&id) = self.names.get(expr) {
            return id;
        }
        let id = loop {
            let name = format!("{FRESH_PREFIX}{}", self.counter);
            self.counter += 1;
            if self.symbols.kinds_of(&name).is_empty() {
                break self.symbols.concept(&name);
            }
        };
        self.names.insert(expr.clone(), id);
        self.provenance.insert(id, expr.clone());
        id
    }

    /// Operand standing for `expr` on a left-hand side.
    fn left_operand(&mut self, expr: &ConceptExpr) -> Result<Operand, NormalizeError> {
        if let Some(op) = Operand::from_basic(expr) {
            return Ok(op);
        }
        let x = self.fresh_for(expr);
        self.inclusion(expr, &ConceptExpr::Atomic(x))?;
        Ok(Operand::Concept(x))
    }

    fn inclusion(&mut self, sub: &ConceptExpr, sup: &ConceptExpr) -> Result<(), NormalizeError> {
        if *sub == ConceptExpr::Bottom {
            return Ok(());
        }
        let sup_basic = Operand::from_basic(sup);
        if let Some(lhs) = Operand::from_basic(sub) {
            match (sup_basic, sup) {
                (Some(rhs), _) => {
                    if rhs == Operand::Bottom && matches!(lhs, Operand::Nominal(_) | Operand::Top) {
                        return Err(self.inconsistent(sub, Some(sup)));
                    }
                    self.emit(NormalizedAxiom::Nf1 { sub: lhs, sup: rhs });
                }
                (None, ConceptExpr::Conjunction(c, d)) => {
                    self.inclusion(sub, c)?;
                    self.inclusion(sub, d)?;
                }
                (None, ConceptExpr::Existential(role, filler)) => {
                    let filler_op = match Operand::from_basic(filler) {
                        Some(op) => op,
                        None => {
                            let x = self.fresh_for(filler);
                            self.emit(NormalizedAxiom::Nf3 {
                                sub: lhs,
                                role: *role,
                                filler: Operand::Concept(x),
                            });
                            return self.inclusion(&ConceptExpr::Atomic(x), filler);
                        }
                    };
                    self.emit(NormalizedAxiom::Nf3 {
                        sub: lhs,
                        role: *role,
                        filler: filler_op,
                    });
                }
                (None, _) => unreachable!("basic expressions handled above"),
            }
            return Ok(());
        }

        // Complex left-hand side.
        let Some(rhs) = sup_basic else {
            let x = self.fresh_for(sup);
            self.inclusion(sub, &ConceptExpr::Atomic(x))?;
            return self.inclusion(&ConceptExpr::Atomic(x), sup);
        };
        match sub {
            ConceptExpr::Conjunction(c, d) => {
                let left = self.left_operand(c)?;
                let right = self.left_operand(d)?;
                if rhs == Operand::Bottom && left == right && matches!(left, Operand::Nominal(_)) {
                    return Err(self.inconsistent(sub, Some(sup)));
                }
                self.emit(NormalizedAxiom::Nf2 {
                    left,
                    right,
                    sup: rhs,
                });
            }
            ConceptExpr::Existential(role, filler) => {
                let filler = self.left_operand(filler)?;
                self.emit(NormalizedAxiom::Nf4 {
                    role: *role,
                    filler,
                    sup: rhs,
                });
            }
            _ => unreachable!("basic expressions handled above"),
        }
        Ok(())
    }
}

/// Replaces every individual by its nominal: `r(a, b)` becomes
/// `{a} ⊑ ∃r.{b}` and `C(a)` becomes `{a} ⊑ C`.
pub fn abox_to_tbox(kb: &KnowledgeBase) -> KnowledgeBase {
    let axioms = kb
        .axioms
        .iter()
        .map(|axiom| match axiom {
            Axiom::Inclusion { .. } => axiom.clone(),
            Axiom::ConceptAssertion {
                concept,
                individual,
            } => Axiom::Inclusion {
                sub: ConceptExpr::Nominal(*individual),
                sup: concept.clone(),
            },
            Axiom::RoleAssertion { role, head, tail } => Axiom::Inclusion {
                sub: ConceptExpr::Nominal(*head),
                sup: ConceptExpr::some(*role, ConceptExpr::Nominal(*tail)),
            },
        })
        .collect();
    KnowledgeBase {
        symbols: kb.symbols.clone(),
        axioms,
    }
}

/// Upper bound on interpretations [`small_model_oracle`] will enumerate.
pub const ORACLE_LIMIT: u64 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{interpretations} interpretations exceed the enumeration limit")]
    TooLarge { interpretations: u128 },
    #[error("domain size must be between 1 and 3, got {0}")]
    BadDomain(usize),
}

/// Decides by exhaustive enumeration whether `kb` has a model whose domain has
/// exactly `domain_size` elements.
pub fn small_model_oracle(kb: &KnowledgeBase, domain_size: usize) -> Result<bool, OracleError> {
    if !(1..=3).contains(&domain_size) {
        return Err(OracleError::BadDomain(domain_size));
    }
    let d = domain_size as u32;
    let n_c = kb.symbols.concepts.len() as u32;
    let n_r = kb.symbols.roles.len() as u32;
    let n_i = kb.symbols.individuals.len() as u32;
    let concept_choices = 1u128 << d;
    let role_choices = 1u128 << (d * d);
    let total = concept_choices.pow(n_c) * role_choices.pow(n_r) * (d as u128).pow(n_i);
    if total > ORACLE_LIMIT as u128 {
        return Err(OracleError::TooLarge {
            interpretations: total,
        });
    }

    let radices: Vec<u32> = std::iter::repeat_n(1u32 << d, n_c as usize)
        .chain(std::iter::repeat_n(1u32 << (d * d), n_r as usize))
        .chain(std::iter::repeat_n(d, n_i as usize))
        .collect();
    let mut digits = vec![0u32; radices.len()];
    loop {
        let interp = Interp {
            d,
            concepts: &digits[..n_c as usize],
            roles: &digits[n_c as usize..(n_c + n_r) as usize],
            individuals: &digits[(n_c + n_r) as usize..],
        };
        if kb.axioms.iter().all(|a| interp.satisfies(a)) {
            return Ok(true);
        }
        // Mixed-radix increment.
        let mut k = 0;
        loop {
            if k == digits.len() {
                return Ok(false);
            }
            digits[k] += 1;
            if digits[k] < radices[k] {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

/// A finite interpretation: concept extensions and role relations as bitmasks.
struct Interp<'a> {
    d: u32,
    concepts: &'a [u32],
    /// Bit `x * d + y` set iff `(x, y)` is in the relation.
    roles: &'a [u32],
    individuals: &'a [u32],
}

impl Interp<'_> {
    fn full(&self) -> u32 {
        (1 << self.d) - 1
    }

    fn eval(&self, expr: &ConceptExpr) -> u32 {
        match expr {
            ConceptExpr::Top => self.full(),
            ConceptExpr::Bottom => 0,
            ConceptExpr::Nominal(a) => 1 << self.individuals[a.index()],
            ConceptExpr::Atomic(c) => self.concepts[c.index()],
            ConceptExpr::Conjunction(l, r) => self.eval(l) & self.eval(r),
            ConceptExpr::Existential(role, filler) => {
                let rel = self.roles[role.index()];
                let target = self.eval(filler);
                let mut out = 0;
                for x in 0..self.d {
                    for y in 0..self.d {
                        if rel & (1 << (x * self.d + y)) != 0 && target & (1 << y) != 0 {
                            out |= 1 << x;
                        }
                    }
                }
                out
            }
        }
    }

    fn satisfies(&self, axiom: &Axiom) -> bool {
        match axiom {
            Axiom::Inclusion { sub, sup } => self.eval(sub) & !self.eval(sup) == 0,
            Axiom::ConceptAssertion {
                concept,
                individual,
            } => self.eval(concept) & (1 << self.individuals[individual.index()]) != 0,
            Axiom::RoleAssertion { role, head, tail } => {
                let (x, y) = (
                    self.individuals[head.index()],
                    self.individuals[tail.index()],
                );
                self.roles[role.index()] & (1 << (x * self.d + y)) != 0
            }
        }
    }
}
