//! Scoring, ranking metrics, strict accuracy and the soundness checker.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{
    apply, apply_point, containment_violation, contains, intersect, inverse, volume, BoxN,
    GeometryError, VolumeKind,
};
use crate::kb::{Axiom, ConceptExpr, ConceptId, IndividualId, KnowledgeBase, RoleId};
use crate::model::EmbeddingModel;
use crate::normalize::{NormalizedAxiom, NormalizedKb, Operand};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no candidates to rank")]
    EmptyCandidates,
    #[error("no queries")]
    EmptyQueries,
    #[error("the true answer {0} is not among the candidates")]
    TruthNotCandidate(String),
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error(
        "unsupported test axiom `{0}`: expected subclass(C, D) between names or relation(r, a, b)"
    )]
    UnsupportedQuery(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `vol(C ∩ D) / vol(C)`, clamped to `[0, 1]`.
pub fn score_subsumption(
    model: &EmbeddingModel,
    sub: ConceptId,
    sup: ConceptId,
    kind: VolumeKind,
) -> Result<f64, EvalError> {
    score_boxes(
        &model.concept_box(sub),
        &model.concept_box(sup),
        kind,
        model,
    )
}

fn score_boxes(
    c: &BoxN,
    d: &BoxN,
    kind: VolumeKind,
    model: &EmbeddingModel,
) -> Result<f64, EvalError> {
    let cfg = &model.config.volume;
    let vc = volume(c, kind, cfg);
    if vc == 0.0 {
        return Err(GeometryError::DivisionByZero.into());
    }
    Ok((volume(&intersect(c, d)?, kind, cfg) / vc).clamp(0.0, 1.0))
}

/// `‖T_r(a) − b‖`; lower is better.
pub fn score_role(
    model: &EmbeddingModel,
    role: RoleId,
    head: IndividualId,
    tail: IndividualId,
) -> f64 {
    let mapped = apply_point(&model.affine(role), &model.entity_point(head))
        .expect("model dimensions agree");
    let tail = model.entity_point(tail);
    mapped
        .iter()
        .zip(&tail)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub hits_at_10: f64,
    pub hits_at_100: f64,
    pub mean_rank: f64,
    pub auc: f64,
}

impl Metrics {
    fn from_ranks(ranks: &[usize], candidates: &[usize]) -> Self {
        let n = ranks.len() as f64;
        let hits = |k| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        Self {
            hits_at_10: hits(10),
            hits_at_100: hits(100),
            mean_rank: ranks.iter().sum::<usize>() as f64 / n,
            auc: ranks
                .iter()
                .zip(candidates)
                .map(|(&r, &c)| normalized_rank_auc(r, c))
                .sum::<f64>()
                / n,
        }
    }
}

/// `1 − (rank − 1) / (candidates − 1)`; a single candidate scores 1.
pub fn normalized_rank_auc(rank: usize, candidates: usize) -> f64 {
    if candidates <= 1 {
        1.0
    } else {
        1.0 - (rank - 1) as f64 / (candidates - 1) as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RankingResult {
    /// 1-based rank of each query's answer among all candidates.
    pub ranks_raw: Vec<usize>,
    /// Rank after removing other known-true candidates.
    pub ranks_filtered: Vec<usize>,
    pub candidates_raw: Vec<usize>,
    pub candidates_filtered: Vec<usize>,
    pub raw: Metrics,
    pub filtered: Metrics,
}

pub const AUC_NOTE: &str =
    "auc is the per-query normalized rank 1 - (rank - 1) / (candidates - 1), averaged over queries";

/// Scores of every candidate for one query. Lower scores rank first.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryScores {
    pub scores: Vec<f64>,
    /// Index of the true answer.
    pub truth: usize,
    /// Candidates known to be true, skipped by the filtered ranking.
    pub known: Vec<bool>,
}

impl RankingResult {
    /// Ranks each query's answer; ties go to the lower candidate index.
    pub fn from_scores(queries: Vec<QueryScores>) -> Result<Self, EvalError> {
        if queries.is_empty() {
            return Err(EvalError::EmptyQueries);
        }
        let mut out = RankingResult::default();
        for QueryScores {
            scores,
            truth,
            known,
        } in queries
        {
            if scores.is_empty() {
                return Err(EvalError::EmptyCandidates);
            }
            let s = scores[truth];
            let ahead = |i: usize, x: f64| x < s || (x == s && i < truth);
            let mut raw = 1;
            let mut filtered = 1;
            let mut filtered_candidates = scores.len();
            for (i, &x) in scores.iter().enumerate() {
                let is_known = i != truth && known[i];
                if is_known {
                    filtered_candidates -= 1;
                }
                if ahead(i, x) {
                    raw += 1;
                    if !is_known {
                        filtered += 1;
                    }
                }
            }
            out.ranks_raw.push(raw);
            out.ranks_filtered.push(filtered);
            out.candidates_raw.push(scores.len());
            out.candidates_filtered.push(filtered_candidates);
        }
        out.raw = Metrics::from_ranks(&out.ranks_raw, &out.candidates_raw);
        out.filtered = Metrics::from_ranks(&out.ranks_filtered, &out.candidates_filtered);
        Ok(out)
    }

    /// Flat `key=value` report.
    pub fn to_report(&self) -> String {
        let mut s = format!("# {AUC_NOTE}\nqueries={}\n", self.ranks_raw.len());
        for (prefix, m) in [("raw", &self.raw), ("filtered", &self.filtered)] {
            let _ = writeln!(s, "{prefix}_hits_at_10={:.6}", m.hits_at_10);
            let _ = writeln!(s, "{prefix}_hits_at_100={:.6}", m.hits_at_100);
            let _ = writeln!(s, "{prefix}_mean_rank={:.6}", m.mean_rank);
            let _ = writeln!(s, "{prefix}_auc={:.6}", m.auc);
        }
        s
    }

    /// Machine-readable record with per-query ranks.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ranking result serializes");
        s.push('\n');
        s
    }
}

/// Ranks each query's superclass among `candidates` (excluding the query's
/// own subclass) by descending [`score_subsumption`]. `known` lists true
/// pairs removed for the filtered metrics.
pub fn rank_subsumptions(
    model: &EmbeddingModel,
    queries: &[(ConceptId, ConceptId)],
    candidates: &[ConceptId],
    known: &HashSet<(ConceptId, ConceptId)>,
    kind: VolumeKind,
) -> Result<RankingResult, EvalError> {
    let mut lists = Vec::with_capacity(queries.len());
    for &(sub, sup) in queries {
        let pool: Vec<ConceptId> = candidates.iter().copied().filter(|&c| c != sub).collect();
        let truth = pool
            .iter()
            .position(|&c| c == sup)
            .ok_or_else(|| EvalError::TruthNotCandidate(model.symbols.concept_name(sup).into()))?;
        let c_box = model.concept_box(sub);
        let scores = pool
            .iter()
            .map(|&d| score_boxes(&c_box, &model.concept_box(d), kind, model).map(|x| -x))
            .collect::<Result<Vec<_>, _>>()?;
        let flags = pool.iter().map(|&d| known.contains(&(sub, d))).collect();
        lists.push(QueryScores {
            scores,
            truth,
            known: flags,
        });
    }
    RankingResult::from_scores(lists)
}

/// Ranks each query's tail among `candidates` by ascending [`score_role`].
pub fn rank_links(
    model: &EmbeddingModel,
    queries: &[(RoleId, IndividualId, IndividualId)],
    candidates: &[IndividualId],
    known: &HashSet<(RoleId, IndividualId, IndividualId)>,
) -> Result<RankingResult, EvalError> {
    let mut lists = Vec::with_capacity(queries.len());
    for &(role, head, tail) in queries {
        let truth = candidates.iter().position(|&b| b == tail).ok_or_else(|| {
            EvalError::TruthNotCandidate(model.symbols.individual_name(tail).into())
        })?;
        let scores = candidates
            .iter()
            .map(|&b| score_role(model, role, head, b))
            .collect();
        let flags = candidates
            .iter()
            .map(|&b| known.contains(&(role, head, b)))
            .collect();
        lists.push(QueryScores {
            scores,
            truth,
            known: flags,
        });
    }
    RankingResult::from_scores(lists)
}

/// `C ⊑ D` pairs between concept names asserted in the training KB.
pub fn known_subsumptions(nkb: &NormalizedKb) -> HashSet<(ConceptId, ConceptId)> {
    nkb.axioms
        .iter()
        .filter_map(|a| match *a {
            NormalizedAxiom::Nf1 {
                sub: Operand::Concept(c),
                sup: Operand::Concept(d),
            } => Some((c, d)),
            _ => None,
        })
        .collect()
}

/// Role assertions of the training KB.
pub fn known_links(nkb: &NormalizedKb) -> HashSet<(RoleId, IndividualId, IndividualId)> {
    nkb.axioms
        .iter()
        .filter_map(|a| match *a {
            NormalizedAxiom::RoleAssertion { role, head, tail } => Some((role, head, tail)),
            _ => None,
        })
        .collect()
}

/// Named concepts of the model, without fresh names.
pub fn concept_candidates(model: &EmbeddingModel) -> Vec<ConceptId> {
    (0..model.symbols.concepts.len() as u32)
        .map(ConceptId)
        .filter(|&c| !model.symbols.is_fresh(c))
        .collect()
}

pub fn individual_candidates(model: &EmbeddingModel) -> Vec<IndividualId> {
    (0..model.symbols.individuals.len() as u32)
        .map(IndividualId)
        .collect()
}

fn lookup_concept(
    model: &EmbeddingModel,
    kb: &KnowledgeBase,
    c: ConceptId,
) -> Result<ConceptId, EvalError> {
    let name = kb.symbols.concept_name(c);
    model
        .symbols
        .concept_id(name)
        .ok_or_else(|| EvalError::UnknownName {
            kind: "concept",
            name: name.into(),
        })
}

/// `subclass(C, D)` lines of a test file, resolved against the model.
pub fn subsumption_queries(
    model: &EmbeddingModel,
    kb: &KnowledgeBase,
) -> Result<Vec<(ConceptId, ConceptId)>, EvalError> {
    kb.axioms
        .iter()
        .map(|axiom| match axiom {
            Axiom::Inclusion {
                sub: ConceptExpr::Atomic(c),
                sup: ConceptExpr::Atomic(d),
            } => Ok((
                lookup_concept(model, kb, *c)?,
                lookup_concept(model, kb, *d)?,
            )),
            other => Err(EvalError::UnsupportedQuery(kb.fmt_axiom(other))),
        })
        .collect()
}

/// `relation(r, a, b)` lines of a test file, resolved against the model.
pub fn link_queries(
    model: &EmbeddingModel,
    kb: &KnowledgeBase,
) -> Result<Vec<(RoleId, IndividualId, IndividualId)>, EvalError> {
    let ind = |a: IndividualId| {
        let name = kb.symbols.individual_name(a);
        model
            .symbols
            .individual_id(name)
            .ok_or_else(|| EvalError::UnknownName {
                kind: "individual",
                name: name.into(),
            })
    };
    kb.axioms
        .iter()
        .map(|axiom| match axiom {
            Axiom::RoleAssertion { role, head, tail } => {
                let name = kb.symbols.role_name(*role);
                let r = model
                    .symbols
                    .role_id(name)
                    .ok_or_else(|| EvalError::UnknownName {
                        kind: "role",
                        name: name.into(),
                    })?;
                Ok((r, ind(*head)?, ind(*tail)?))
            }
            other => Err(EvalError::UnsupportedQuery(kb.fmt_axiom(other))),
        })
        .collect()
}

/// Default per-face tolerance of [`accuracy_strict`]: only float noise.
pub const STRICT_TOLERANCE: f64 = 1e-9;

/// Fraction of pairs `(C, D)` whose box of `C` lies inside the box of `D`
/// within `tol`. Empty subclass boxes count as contained.
pub fn accuracy_strict(
    model: &EmbeddingModel,
    pairs: &[(ConceptId, ConceptId)],
    tol: f64,
) -> Result<f64, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyQueries);
    }
    let mut hits = 0;
    for &(c, d) in pairs {
        if contains(&model.concept_box(d), &model.concept_box(c), tol)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoundnessEntry {
    pub axiom: String,
    pub satisfied: bool,
    /// How far the geometry is from satisfying the axiom; zero when it does.
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub tolerance: f64,
    pub entries: Vec<SoundnessEntry>,
}

impl SoundnessReport {
    pub fn satisfied_count(&self) -> usize {
        self.entries.iter().filter(|e| e.satisfied).count()
    }

    /// 1 for an empty KB.
    pub fn satisfied_fraction(&self) -> f64 {
        if self.entries.is_empty() {
            1.0
        } else {
            self.satisfied_count() as f64 / self.entries.len() as f64
        }
    }

    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    /// One `VERDICT<TAB>magnitude<TAB>axiom` line per axiom after a summary
    /// comment.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# satisfied {}/{} ({:.6}) at tolerance {:e}\n",
            self.satisfied_count(),
            self.entries.len(),
            self.satisfied_fraction(),
            self.tolerance
        );
        for e in &self.entries {
            let verdict = if e.satisfied { "SATISFIED" } else { "VIOLATED" };
            let _ = writeln!(s, "{verdict}\t{:.6e}\t{}", e.magnitude, e.axiom);
        }
        s
    }
}

/// Smallest side; negative exactly when the box is empty.
fn min_side(b: &BoxN) -> f64 {
    b.sides().into_iter().fold(f64::INFINITY, f64::min)
}

/// Emptiness up to `tol`: some side is below `tol` (strictly negative at 0).
fn emptiness(b: Option<BoxN>, tol: f64) -> (bool, f64) {
    match b {
        None => (true, 0.0),
        Some(b) => {
            let m = min_side(&b);
            (m < tol, m.max(0.0))
        }
    }
}

fn containment(outer: Option<BoxN>, inner: Option<BoxN>, tol: f64) -> (bool, f64) {
    match (outer, inner) {
        (_, None) => (true, 0.0),
        (None, Some(inner)) => emptiness(Some(inner), tol),
        (Some(outer), Some(inner)) => {
            let ok = contains(&outer, &inner, tol).expect("model dimensions agree");
            (ok, containment_violation(&outer, &inner))
        }
    }
}

/// Geometric check of one normalized axiom: `(satisfied, magnitude)`.
pub fn check_axiom(model: &EmbeddingModel, axiom: &NormalizedAxiom, tol: f64) -> (bool, f64) {
    let bx = |op: Operand| model.operand_box(op);
    match *axiom {
        NormalizedAxiom::ConceptAssertion {
            concept,
            individual,
        } => {
            let p = BoxN::point(model.entity_point(individual));
            containment(bx(concept), Some(p), tol)
        }
        NormalizedAxiom::RoleAssertion { role, head, tail } => {
            let d = score_role(model, role, head, tail);
            (d <= tol, d)
        }
        NormalizedAxiom::Nf1 { sub, sup } => containment(bx(sup), bx(sub), tol),
        NormalizedAxiom::Nf2 { left, right, sup } => {
            let inter = match (bx(left), bx(right)) {
                (Some(a), Some(b)) => Some(intersect(&a, &b).expect("model dimensions agree")),
                _ => None,
            };
            containment(bx(sup), inter, tol)
        }
        NormalizedAxiom::Nf3 { sub, role, filler } => {
            let image = bx(sub).map(|b| apply(&model.affine(role), &b).expect("dims agree"));
            containment(bx(filler), image, tol)
        }
        NormalizedAxiom::Nf4 { role, filler, sup } => match inverse(&model.affine(role)) {
            Err(_) => (false, f64::INFINITY),
            Ok(inv) => {
                let preimage = bx(filler).map(|b| apply(&inv, &b).expect("dims agree"));
                containment(bx(sup), preimage, tol)
            }
        },
    }
}

/// Checks every axiom of `nkb` against the geometric interpretation of
/// `model`.
pub fn check_soundness(model: &EmbeddingModel, nkb: &NormalizedKb, tol: f64) -> SoundnessReport {
    let entries = nkb
        .axioms
        .iter()
        .map(|axiom| {
            let (satisfied, magnitude) = check_axiom(model, axiom, tol);
            SoundnessEntry {
                axiom: nkb.fmt_axiom(axiom),
                satisfied,
                magnitude,
            }
        })
        .collect();
    SoundnessReport {
        tolerance: tol,
        entries,
    }
}
