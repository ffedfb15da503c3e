//! EL++ knowledge bases: symbol tables, concept expressions, axioms, and the
//! line-based text format.
//!
//! ```text
//! expr  := "top" | "bottom" | NAME | "nominal(" NAME ")"
//!        | "and(" expr "," expr ")" | "some(" NAME "," expr ")"
//! axiom := "subclass(" expr "," expr ")"
//!        | "instance(" expr "," NAME ")"
//!        | "relation(" NAME "," NAME "," NAME ")"
//! ```
//!
//! One axiom per line, `#` starts a comment, blank lines are ignored.

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexSet;
use thiserror::Error;

/// Prefix reserved for names introduced by normalization.
pub const FRESH_PREFIX: &str = "__nf";

macro_rules! symbol_id {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

symbol_id!(
    /// Row of an individual in [`SymbolTables::individuals`].
    IndividualId
);
symbol_id!(
    /// Row of a concept name in [`SymbolTables::concepts`].
    ConceptId
);
symbol_id!(
    /// Row of a role name in [`SymbolTables::roles`].
    RoleId
);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Individual,
    Concept,
    Role,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolKind::Individual => "individual",
            SymbolKind::Concept => "concept",
            SymbolKind::Role => "role",
        })
    }
}

/// Names of individuals, concepts and roles. The position of a name in its
/// set is its embedding row.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolTables {
    pub individuals: IndexSet<String>,
    pub concepts: IndexSet<String>,
    pub roles: IndexSet<String>,
}

impl SymbolTables {
    pub fn individual(&mut self, name: &str) -> IndividualId {
        IndividualId(self.individuals.insert_full(name.to_owned()).0 as u32)
    }

    pub fn concept(&mut self, name: &str) -> ConceptId {
        ConceptId(self.concepts.insert_full(name.to_owned()).0 as u32)
    }

    pub fn role(&mut self, name: &str) -> RoleId {
        RoleId(self.roles.insert_full(name.to_owned()).0 as u32)
    }

    pub fn individual_id(&self, name: &str) -> Option<IndividualId> {
        self.individuals
            .get_index_of(name)
            .map(|i| IndividualId(i as u32))
    }

    pub fn concept_id(&self, name: &str) -> Option<ConceptId> {
        self.concepts
            .get_index_of(name)
            .map(|i| ConceptId(i as u32))
    }

    pub fn role_id(&self, name: &str) -> Option<RoleId> {
        self.roles.get_index_of(name).map(|i| RoleId(i as u32))
    }

    pub fn individual_name(&self, id: IndividualId) -> &str {
        self.individuals
            .get_index(id.index())
            .map_or("<?>", String::as_str)
    }

    pub fn concept_name(&self, id: ConceptId) -> &str {
        self.concepts
            .get_index(id.index())
            .map_or("<?>", String::as_str)
    }

    pub fn role_name(&self, id: RoleId) -> &str {
        self.roles
            .get_index(id.index())
            .map_or("<?>", String::as_str)
    }

    /// Which tables contain `name`.
    pub fn kinds_of(&self, name: &str) -> Vec<SymbolKind> {
        let mut kinds = Vec::new();
        if self.individuals.contains(name) {
            kinds.push(SymbolKind::Individual);
        }
        if self.concepts.contains(name) {
            kinds.push(SymbolKind::Concept);
        }
        if self.roles.contains(name) {
            kinds.push(SymbolKind::Role);
        }
        kinds
    }

    pub fn is_fresh(&self, id: ConceptId) -> bool {
        self.concept_name(id).starts_with(FRESH_PREFIX)
    }
}

/// An EL++ concept expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ConceptExpr {
    Top,
    Bottom,
    Nominal(IndividualId),
    Atomic(ConceptId),
    Conjunction(Box<ConceptExpr>, Box<ConceptExpr>),
    Existential(RoleId, Box<ConceptExpr>),
}

impl ConceptExpr {
    pub fn and(left: ConceptExpr, right: ConceptExpr) -> Self {
        ConceptExpr::Conjunction(Box::new(left), Box::new(right))
    }

    pub fn some(role: RoleId, filler: ConceptExpr) -> Self {
        ConceptExpr::Existential(role, Box::new(filler))
    }

    /// Number of nodes in the expression tree.
    pub fn size(&self) -> usize {
        match self {
            ConceptExpr::Conjunction(l, r) => 1 + l.size() + r.size(),
            ConceptExpr::Existential(_, f) => 1 + f.size(),
            _ => 1,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            ConceptExpr::Conjunction(l, r) => 1 + l.depth().max(r.depth()),
            ConceptExpr::Existential(_, f) => 1 + f.depth(),
            _ => 1,
        }
    }

    /// Top, a concept name or a nominal.
    pub fn is_basic(&self) -> bool {
        matches!(
            self,
            ConceptExpr::Top | ConceptExpr::Atomic(_) | ConceptExpr::Nominal(_)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Axiom {
    /// `sub ⊑ sup`
    Inclusion { sub: ConceptExpr, sup: ConceptExpr },
    /// `concept(individual)`
    ConceptAssertion {
        concept: ConceptExpr,
        individual: IndividualId,
    },
    /// `role(head, tail)`
    RoleAssertion {
        role: RoleId,
        head: IndividualId,
        tail: IndividualId,
    },
}

impl Axiom {
    pub fn is_tbox(&self) -> bool {
        matches!(self, Axiom::Inclusion { .. })
    }
}

/// A knowledge base. Axioms keep their load order; TBox and ABox are views.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    pub symbols: SymbolTables,
    pub axioms: Vec<Axiom>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tbox(&self) -> impl Iterator<Item = &Axiom> {
        self.axioms.iter().filter(|a| a.is_tbox())
    }

    pub fn abox(&self) -> impl Iterator<Item = &Axiom> {
        self.axioms.iter().filter(|a| !a.is_tbox())
    }

    pub fn push(&mut self, axiom: Axiom) {
        self.axioms.push(axiom);
    }

    /// Writes `expr` in the text format.
    pub fn fmt_expr(&self, expr: &ConceptExpr) -> String {
        let mut out = String::new();
        self.write_expr(&mut out, expr);
        out
    }

    fn write_expr(&self, out: &mut String, expr: &ConceptExpr) {
        let s = &self.symbols;
        match expr {
            ConceptExpr::Top => out.push_str("top"),
            ConceptExpr::Bottom => out.push_str("bottom"),
            ConceptExpr::Nominal(a) => {
                out.push_str("nominal(");
                out.push_str(s.individual_name(*a));
                out.push(')');
            }
            ConceptExpr::Atomic(c) => out.push_str(s.concept_name(*c)),
            ConceptExpr::Conjunction(l, r) => {
                out.push_str("and(");
                self.write_expr(out, l);
                out.push_str(", ");
                self.write_expr(out, r);
                out.push(')');
            }
            ConceptExpr::Existential(role, f) => {
                out.push_str("some(");
                out.push_str(s.role_name(*role));
                out.push_str(", ");
                self.write_expr(out, f);
                out.push(')');
            }
        }
    }

    pub fn fmt_axiom(&self, axiom: &Axiom) -> String {
        let s = &self.symbols;
        match axiom {
            Axiom::Inclusion { sub, sup } => {
                format!("subclass({}, {})", self.fmt_expr(sub), self.fmt_expr(sup))
            }
            Axiom::ConceptAssertion {
                concept,
                individual,
            } => format!(
                "instance({}, {})",
                self.fmt_expr(concept),
                s.individual_name(*individual)
            ),
            Axiom::RoleAssertion { role, head, tail } => format!(
                "relation({}, {}, {})",
                s.role_name(*role),
                s.individual_name(*head),
                s.individual_name(*tail)
            ),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KbError {
    #[error("{line}:{col}: syntax error: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("{line}:{col}: `{name}` is used as {second} but was declared as {first}")]
    NameClash {
        line: usize,
        col: usize,
        name: String,
        first: SymbolKind,
        second: SymbolKind,
    },
    #[error("{line}:{col}: `{name}` uses the reserved prefix `{FRESH_PREFIX}`")]
    ReservedName {
        line: usize,
        col: usize,
        name: String,
    },
}

/// Side information from parsing that is not part of the KB itself.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParseReport {
    /// Axioms dropped because an identical one appeared earlier.
    pub duplicates: usize,
}

pub fn parse_kb(text: &str) -> Result<KnowledgeBase, KbError> {
    parse_kb_with_report(text).map(|(kb, _)| kb)
}

pub fn parse_kb_with_report(text: &str) -> Result<(KnowledgeBase, ParseReport), KbError> {
    let mut kb = KnowledgeBase::new();
    let mut seen = HashSet::new();
    let mut report = ParseReport::default();
    for (i, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let mut p = LineParser::new(line, i + 1, &mut kb.symbols);
        p.skip_ws();
        if p.at_end() {
            continue;
        }
        let axiom = p.axiom()?;
        p.skip_ws();
        if !p.at_end() {
            return Err(p.error("end of line"));
        }
        if seen.insert(axiom.clone()) {
            kb.axioms.push(axiom);
        } else {
            report.duplicates += 1;
        }
    }
    Ok((kb, report))
}

/// Canonical text form: one line per axiom, in order.
pub fn serialize_kb(kb: &KnowledgeBase) -> String {
    let mut out = String::new();
    for axiom in &kb.axioms {
        out.push_str(&kb.fmt_axiom(axiom));
        out.push('\n');
    }
    out
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '/' | ':' | '-')
}

/// Whether `name` is a valid symbol name in the text format.
pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(is_name_start) && chars.all(is_name_char)
}

struct LineParser<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    symbols: &'a mut SymbolTables,
}

impl<'a> LineParser<'a> {
    fn new(line: &str, line_no: usize, symbols: &'a mut SymbolTables) -> Self {
        // Everything after `#` is a comment.
        let content = line.split('#').next().unwrap_or("");
        Self {
            chars: content.chars().collect(),
            pos: 0,
            line: line_no,
            symbols,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn error(&self, expected: &str) -> KbError {
        KbError::Syntax {
            line: self.line,
            col: self.col(),
            expected: expected.to_owned(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), KbError> {
        self.skip_ws();
        if self.chars.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("`{c}`")))
        }
    }

    fn peek_is(&mut self, c: char) -> bool {
        self.skip_ws();
        self.chars.get(self.pos) == Some(&c)
    }

    /// Reads a name; returns it with its starting column.
    fn ident(&mut self, what: &str) -> Result<(String, usize), KbError> {
        self.skip_ws();
        let start = self.pos;
        if !self.chars.get(self.pos).copied().is_some_and(is_name_start) {
            return Err(self.error(what));
        }
        while self.chars.get(self.pos).copied().is_some_and(is_name_char) {
            self.pos += 1;
        }
        Ok((self.chars[start..self.pos].iter().collect(), start + 1))
    }

    fn register(&mut self, kind: SymbolKind, name: &str, col: usize) -> Result<u32, KbError> {
        if name.starts_with(FRESH_PREFIX) {
            return Err(KbError::ReservedName {
                line: self.line,
                col,
                name: name.to_owned(),
            });
        }
        if matches!(name, "top" | "bottom") {
            return Err(KbError::Syntax {
                line: self.line,
                col,
                expected: format!("a {kind} name, found keyword `{name}`"),
            });
        }
        if let Some(&first) = self.symbols.kinds_of(name).iter().find(|k| **k != kind) {
            return Err(KbError::NameClash {
                line: self.line,
                col,
                name: name.to_owned(),
                first,
                second: kind,
            });
        }
        Ok(match kind {
            SymbolKind::Individual => self.symbols.individual(name).0,
            SymbolKind::Concept => self.symbols.concept(name).0,
            SymbolKind::Role => self.symbols.role(name).0,
        })
    }

    fn name_of(&mut self, kind: SymbolKind) -> Result<u32, KbError> {
        let (name, col) = self.ident(&format!("a {kind} name"))?;
        self.register(kind, &name, col)
    }

    fn axiom(&mut self) -> Result<Axiom, KbError> {
        let (kw, col) = self.ident("`subclass`, `instance` or `relation`")?;
        let axiom = match kw.as_str() {
            "subclass" => {
                self.expect('(')?;
                let sub = self.expr()?;
                self.expect(',')?;
                let sup = self.expr()?;
                Axiom::Inclusion { sub, sup }
            }
            "instance" => {
                self.expect('(')?;
                let concept = self.expr()?;
                self.expect(',')?;
                let individual = IndividualId(self.name_of(SymbolKind::Individual)?);
                Axiom::ConceptAssertion {
                    concept,
                    individual,
                }
            }
            "relation" => {
                self.expect('(')?;
                let role = RoleId(self.name_of(SymbolKind::Role)?);
                self.expect(',')?;
                let head = IndividualId(self.name_of(SymbolKind::Individual)?);
                self.expect(',')?;
                let tail = IndividualId(self.name_of(SymbolKind::Individual)?);
                Axiom::RoleAssertion { role, head, tail }
            }
            _ => {
                return Err(KbError::Syntax {
                    line: self.line,
                    col,
                    expected: "`subclass`, `instance` or `relation`".into(),
                })
            }
        };
        self.expect(')')?;
        Ok(axiom)
    }

    fn expr(&mut self) -> Result<ConceptExpr, KbError> {
        self.skip_ws();
        let save = self.pos;
        let (word, col) = self.ident("a concept expression")?;
        match word.as_str() {
            "top" => return Ok(ConceptExpr::Top),
            "bottom" => return Ok(ConceptExpr::Bottom),
            _ => {}
        }
        if !self.peek_is('(') {
            return Ok(ConceptExpr::Atomic(ConceptId(self.register(
                SymbolKind::Concept,
                &word,
                col,
            )?)));
        }
        self.expect('(')?;
        let expr = match word.as_str() {
            "nominal" => ConceptExpr::Nominal(IndividualId(self.name_of(SymbolKind::Individual)?)),
            "and" => {
                let l = self.expr()?;
                self.expect(',')?;
                let r = self.expr()?;
                ConceptExpr::and(l, r)
            }
            "some" => {
                let role = RoleId(self.name_of(SymbolKind::Role)?);
                self.expect(',')?;
                let filler = self.expr()?;
                ConceptExpr::some(role, filler)
            }
            _ => {
                self.pos = save;
                return Err(self.error("`and`, `some` or `nominal` (unsupported constructor)"));
            }
        };
        self.expect(')')?;
        Ok(expr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    UnresolvedName,
    NameClash,
    /// The axiom cannot hold in any interpretation, e.g. `{a} ⊑ ⊥`.
    Inconsistent,
    /// `⊥` on the left: the axiom holds vacuously and is dropped by normalization.
    TriviallySatisfied,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub axiom: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    pub fn is_fatal(&self) -> bool {
        self.kind != DiagnosticKind::TriviallySatisfied
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.axiom {
            Some(i) => write!(f, "axiom {}: {:?}: {}", i + 1, self.kind, self.message),
            None => write!(f, "{:?}: {}", self.kind, self.message),
        }
    }
}

pub fn validate_kb(kb: &KnowledgeBase) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let s = &kb.symbols;

    let tables: [(&IndexSet<String>, SymbolKind); 3] = [
        (&s.individuals, SymbolKind::Individual),
        (&s.concepts, SymbolKind::Concept),
        (&s.roles, SymbolKind::Role),
    ];
    for (i, (a, ka)) in tables.iter().enumerate() {
        for (b, kb_) in &tables[i + 1..] {
            for name in a.iter().filter(|n| b.contains(*n)) {
                out.push(Diagnostic {
                    kind: DiagnosticKind::NameClash,
                    axiom: None,
                    message: format!("`{name}` is both {ka} and {kb_}"),
                });
            }
        }
        for name in a.iter().filter(|n| !is_valid_name(n)) {
            out.push(Diagnostic {
                kind: DiagnosticKind::UnresolvedName,
                axiom: None,
                message: format!("`{name}` is not a valid {ka} name"),
            });
        }
    }

    for (idx, axiom) in kb.axioms.iter().enumerate() {
        let mut unresolved = Vec::new();
        let check_expr = |e: &ConceptExpr, unresolved: &mut Vec<String>| {
            walk(e, &mut |node| match node {
                ConceptExpr::Nominal(a) if a.index() >= s.individuals.len() => {
                    unresolved.push(format!("individual #{}", a.0))
                }
                ConceptExpr::Atomic(c) if c.index() >= s.concepts.len() => {
                    unresolved.push(format!("concept #{}", c.0))
                }
                ConceptExpr::Existential(r, _) if r.index() >= s.roles.len() => {
                    unresolved.push(format!("role #{}", r.0))
                }
                _ => {}
            })
        };
        match axiom {
            Axiom::Inclusion { sub, sup } => {
                check_expr(sub, &mut unresolved);
                check_expr(sup, &mut unresolved);
                if *sub == ConceptExpr::Bottom {
                    out.push(Diagnostic {
                        kind: DiagnosticKind::TriviallySatisfied,
                        axiom: Some(idx),
                        message: "bottom on the left-hand side".into(),
                    });
                }
                if *sup == ConceptExpr::Bottom
                    && matches!(sub, ConceptExpr::Nominal(_) | ConceptExpr::Top)
                {
                    out.push(Diagnostic {
                        kind: DiagnosticKind::Inconsistent,
                        axiom: Some(idx),
                        message: format!("{} cannot be empty", kb.fmt_expr(sub)),
                    });
                }
            }
            Axiom::ConceptAssertion {
                concept,
                individual,
            } => {
                check_expr(concept, &mut unresolved);
                if individual.index() >= s.individuals.len() {
                    unresolved.push(format!("individual #{}", individual.0));
                }
                if *concept == ConceptExpr::Bottom {
                    out.push(Diagnostic {
                        kind: DiagnosticKind::Inconsistent,
                        axiom: Some(idx),
                        message: "assertion of bottom".into(),
                    });
                }
            }
            Axiom::RoleAssertion { role, head, tail } => {
                if role.index() >= s.roles.len() {
                    unresolved.push(format!("role #{}", role.0));
                }
                for a in [head, tail] {
                    if a.index() >= s.individuals.len() {
                        unresolved.push(format!("individual #{}", a.0));
                    }
                }
            }
        }
        for u in unresolved {
            out.push(Diagnostic {
                kind: DiagnosticKind::UnresolvedName,
                axiom: Some(idx),
                message: format!("{u} is not declared"),
            });
        }
    }
    out
}

/// Pre-order traversal of an expression tree.
pub fn walk(expr: &ConceptExpr, f: &mut impl FnMut(&ConceptExpr)) {
    f(expr);
    match expr {
        ConceptExpr::Conjunction(l, r) => {
            walk(l, f);
            walk(r, f);
        }
        ConceptExpr::Existential(_, filler) => walk(filler, f),
        _ => {}
    }
}
