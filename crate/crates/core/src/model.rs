//! Embedding parameters and how boxes, points and affine maps are read off
//! them.
//!
//! All parameters live in one flat vector, laid out block by block:
//!
//! | block               | rows  | meaning                                   |
//! |---------------------|-------|-------------------------------------------|
//! | concept lower       | `N_C` | lower corner `m(C)`                       |
//! | concept upper       | `N_C` | side pre-activation, or raw `M(C)`        |
//! | entity point        | `N_I` | `m(a) = M(a)`                             |
//! | role scale (raw)    | `N_R` | diagonal is `exp(raw)`                    |
//! | role offset         | `N_R` | translation part                          |
//! | entity side (raw)   | `N_I` | only when entities are boxes              |
//!
//! With constrained boxes (the default) `M(C) = m(C) + softplus(raw)`, so a
//! concept box can never invert. Unconstrained boxes store `M(C)` directly.

use std::fs;
use std::io::{self, Read, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::Real;
use crate::geometry::{AffineMap, BoxN, VolumeConfig};
use crate::kb::{ConceptId, IndividualId, RoleId, SymbolTables};
use crate::normalize::Operand;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RelationMode {
    #[default]
    Affine,
    /// Every role scale is fixed to 1.
    Translation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EntityMode {
    #[default]
    Point,
    /// Individuals get boxes of their own; the ABox is rewritten into nominal
    /// inclusions before normalization.
    Box,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub dim: usize,
    pub seed: u64,
    pub relation_mode: RelationMode,
    pub entity_mode: EntityMode,
    #[serde(flatten)]
    pub volume: VolumeConfig,
    /// Margin of the negative role-assertion hinge.
    pub gamma: f64,
    /// Weight of non-subsumption terms.
    pub phi: f64,
    pub reg_weight: f64,
    /// Store `M(C)` directly instead of a softplus side; enables `C ⊑ ⊥`.
    pub unconstrained: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 50,
            seed: 0,
            relation_mode: RelationMode::Affine,
            entity_mode: EntityMode::Point,
            volume: VolumeConfig::default(),
            gamma: 1.0,
            phi: 0.05,
            reg_weight: 1.0,
            unconstrained: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("no symbols to embed")]
    EmptySignature,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a checkpoint of this format: {0}")]
    FormatVersionMismatch(String),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_owned()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if !(self.volume.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.volume.temperature > 0.0) {
            return bad("temperature must be positive");
        }
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return bad("phi must lie in (0, 1]");
        }
        if !(self.reg_weight >= 0.0) {
            return bad("reg_weight must be non-negative");
        }
        if !self.gamma.is_finite() {
            return bad("gamma must be finite");
        }
        Ok(())
    }
}

/// Offsets of the parameter blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub dim: usize,
    pub concepts: usize,
    pub individuals: usize,
    pub roles: usize,
    pub entity_boxes: bool,
}

impl Layout {
    fn block(&self, start_rows: usize, row: usize) -> Range<usize> {
        let start = (start_rows + row) * self.dim;
        start..start + self.dim
    }

    pub fn concept_lower(&self, c: usize) -> Range<usize> {
        self.block(0, c)
    }

    pub fn concept_upper(&self, c: usize) -> Range<usize> {
        self.block(self.concepts, c)
    }

    pub fn entity(&self, a: usize) -> Range<usize> {
        self.block(2 * self.concepts, a)
    }

    pub fn role_scale(&self, r: usize) -> Range<usize> {
        self.block(2 * self.concepts + self.individuals, r)
    }

    pub fn role_offset(&self, r: usize) -> Range<usize> {
        self.block(2 * self.concepts + self.individuals + self.roles, r)
    }

    pub fn entity_side(&self, a: usize) -> Range<usize> {
        self.block(2 * self.concepts + self.individuals + 2 * self.roles, a)
    }

    /// All role-scale parameters.
    pub fn role_scale_block(&self) -> Range<usize> {
        let start = (2 * self.concepts + self.individuals) * self.dim;
        start..start + self.roles * self.dim
    }

    pub fn len(&self) -> usize {
        let rows = self.individuals
            + 2 * self.concepts
            + 2 * self.roles
            + if self.entity_boxes {
                self.individuals
            } else {
                0
            };
        rows * self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Read-only access to boxes and maps over parameters of any [`Real`] type.
pub struct ParamView<'a, T> {
    pub config: &'a ModelConfig,
    pub layout: Layout,
    pub values: &'a [T],
    zero: T,
}

impl<'a, T: Real> ParamView<'a, T> {
    /// `zero` supplies constants for the number type (a tape constant for
    /// taped evaluation).
    pub fn new(config: &'a ModelConfig, layout: Layout, values: &'a [T], zero: T) -> Self {
        Self {
            config,
            layout,
            values,
            zero,
        }
    }

    pub fn constant(&self, c: f64) -> T {
        self.zero.lift(c)
    }

    fn row(&self, r: Range<usize>) -> Vec<T> {
        self.values[r].to_vec()
    }

    pub fn concept_box(&self, c: ConceptId) -> BoxN<T> {
        let lower = self.row(self.layout.concept_lower(c.index()));
        let raw = self.row(self.layout.concept_upper(c.index()));
        let upper = if self.config.unconstrained {
            raw
        } else {
            lower
                .iter()
                .zip(&raw)
                .map(|(&l, &d)| l + d.softplus(1.0))
                .collect()
        };
        BoxN { lower, upper }
    }

    pub fn entity_box(&self, a: IndividualId) -> BoxN<T> {
        let lower = self.row(self.layout.entity(a.index()));
        if !self.layout.entity_boxes {
            return BoxN::point(lower);
        }
        let raw = self.row(self.layout.entity_side(a.index()));
        let upper = lower
            .iter()
            .zip(&raw)
            .map(|(&l, &d)| l + d.softplus(1.0))
            .collect();
        BoxN { lower, upper }
    }

    /// The point of an individual (the box center when entities are boxes).
    pub fn entity_point(&self, a: IndividualId) -> Vec<T> {
        if !self.layout.entity_boxes {
            return self.row(self.layout.entity(a.index()));
        }
        let b = self.entity_box(a);
        b.lower
            .iter()
            .zip(&b.upper)
            .map(|(&l, &u)| (l + u) * 0.5)
            .collect()
    }

    /// `⊤` is read as the unit box.
    pub fn top_box(&self) -> BoxN<T> {
        let d = self.layout.dim;
        BoxN {
            lower: vec![self.constant(0.0); d],
            upper: vec![self.constant(1.0); d],
        }
    }

    /// `None` for `⊥`, which has no box.
    pub fn operand_box(&self, op: Operand) -> Option<BoxN<T>> {
        match op {
            Operand::Top => Some(self.top_box()),
            Operand::Bottom => None,
            Operand::Concept(c) => Some(self.concept_box(c)),
            Operand::Nominal(a) => Some(self.entity_box(a)),
        }
    }

    pub fn affine(&self, r: RoleId) -> AffineMap<T> {
        let scale = match self.config.relation_mode {
            RelationMode::Translation => vec![self.constant(1.0); self.layout.dim],
            RelationMode::Affine => self
                .row(self.layout.role_scale(r.index()))
                .into_iter()
                .map(Real::exp)
                .collect(),
        };
        AffineMap {
            scale,
            offset: self.row(self.layout.role_offset(r.index())),
        }
    }
}

/// Parameters of an embedding together with the signature they embed.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    pub config: ModelConfig,
    pub symbols: SymbolTables,
    pub layout: Layout,
    pub params: Vec<f64>,
}

/// Inverse of `softplus_1` for positive arguments.
fn softplus_inverse(y: f64) -> f64 {
    y + (-(-y).exp_m1()).ln()
}

impl EmbeddingModel {
    /// Random initialization fully determined by `config.seed`.
    pub fn init(symbols: &SymbolTables, config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        if symbols.concepts.is_empty() && symbols.individuals.is_empty() {
            return Err(ModelError::EmptySignature);
        }
        let layout = Layout {
            dim: config.dim,
            concepts: symbols.concepts.len(),
            individuals: symbols.individuals.len(),
            roles: symbols.roles.len(),
            entity_boxes: config.entity_mode == EntityMode::Box,
        };
        let mut params = vec![0.0; layout.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

        for c in 0..layout.concepts {
            for (li, ui) in layout.concept_lower(c).zip(layout.concept_upper(c)) {
                let lower: f64 = rng.gen_range(0.0..1.0);
                let side: f64 = rng.gen_range(0.1..0.5);
                params[li] = lower;
                params[ui] = if config.unconstrained {
                    lower + side
                } else {
                    softplus_inverse(side)
                };
            }
        }
        for a in 0..layout.individuals {
            for i in layout.entity(a) {
                params[i] = rng.gen_range(0.0..1.0);
            }
        }
        for r in 0..layout.roles {
            for i in layout.role_offset(r) {
                params[i] = rng.gen_range(-0.1..0.1);
            }
        }
        if layout.entity_boxes {
            for a in 0..layout.individuals {
                for i in layout.entity_side(a) {
                    params[i] = softplus_inverse(rng.gen_range(0.05..0.2));
                }
            }
        }
        Ok(Self {
            config: config.clone(),
            symbols: symbols.clone(),
            layout,
            params,
        })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn view(&self) -> ParamView<'_, f64> {
        ParamView::new(&self.config, self.layout, &self.params, 0.0)
    }

    pub fn concept_box(&self, c: ConceptId) -> BoxN {
        self.view().concept_box(c)
    }

    pub fn entity_box(&self, a: IndividualId) -> BoxN {
        self.view().entity_box(a)
    }

    pub fn entity_point(&self, a: IndividualId) -> Vec<f64> {
        self.view().entity_point(a)
    }

    pub fn operand_box(&self, op: Operand) -> Option<BoxN> {
        self.view().operand_box(op)
    }

    pub fn affine(&self, r: RoleId) -> AffineMap {
        self.view().affine(r)
    }

    /// Box of a concept or individual by name.
    pub fn materialize_box(&self, name: &str) -> Result<BoxN, ModelError> {
        if name == "top" {
            return Ok(BoxN::unit(self.dim()));
        }
        if let Some(c) = self.symbols.concept_id(name) {
            return Ok(self.concept_box(c));
        }
        if let Some(a) = self.symbols.individual_id(name) {
            return Ok(self.entity_box(a));
        }
        Err(ModelError::UnknownName(name.to_owned()))
    }

    pub fn materialize_affine(&self, role: &str) -> Result<AffineMap, ModelError> {
        self.symbols
            .role_id(role)
            .map(|r| self.affine(r))
            .ok_or_else(|| ModelError::UnknownName(role.to_owned()))
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

const MAGIC: &[u8; 6] = b"BOXEL1";

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    concepts: Vec<String>,
    individuals: Vec<String>,
    roles: Vec<String>,
    entity_boxes: bool,
    parameters: usize,
    config: ModelConfig,
}

#[derive(Serialize)]
struct Manifest<'a> {
    dim: usize,
    concepts: std::collections::BTreeMap<&'a str, usize>,
    individuals: std::collections::BTreeMap<&'a str, usize>,
    roles: std::collections::BTreeMap<&'a str, usize>,
}

/// Path of the JSON manifest written next to a checkpoint.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

impl EmbeddingModel {
    /// Checkpoint bytes: `BOXEL1`, a length-prefixed JSON header, then the
    /// parameters as little-endian `f64` in layout order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            dim: self.layout.dim,
            concepts: self.symbols.concepts.iter().cloned().collect(),
            individuals: self.symbols.individuals.iter().cloned().collect(),
            roles: self.symbols.roles.iter().cloned().collect(),
            entity_boxes: self.layout.entity_boxes,
            parameters: self.params.len(),
            config: self.config.clone(),
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(MAGIC.len() + 4 + header.len() + 8 * self.params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut r = bytes;
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)
            .map_err(|_| ModelError::FormatVersionMismatch("file too short".into()))?;
        if &magic != MAGIC {
            return Err(ModelError::FormatVersionMismatch(format!(
                "expected magic {:?}, found {:?}",
                String::from_utf8_lossy(MAGIC),
                String::from_utf8_lossy(&magic)
            )));
        }
        let mut len = [0u8; 4];
        r.read_exact(&mut len)
            .map_err(|_| ModelError::Corrupt("truncated header length".into()))?;
        let len = u32::from_le_bytes(len) as usize;
        if r.len() < len {
            return Err(ModelError::Corrupt("truncated header".into()));
        }
        let header: Header = serde_json::from_slice(&r[..len])
            .map_err(|e| ModelError::Corrupt(format!("header: {e}")))?;
        r = &r[len..];

        let mut symbols = SymbolTables::default();
        for n in &header.concepts {
            symbols.concept(n);
        }
        for n in &header.individuals {
            symbols.individual(n);
        }
        for n in &header.roles {
            symbols.role(n);
        }
        let layout = Layout {
            dim: header.dim,
            concepts: header.concepts.len(),
            individuals: header.individuals.len(),
            roles: header.roles.len(),
            entity_boxes: header.entity_boxes,
        };
        if layout.len() != header.parameters || r.len() != 8 * header.parameters {
            return Err(ModelError::Corrupt(format!(
                "expected {} parameters, header says {}, found {} bytes",
                layout.len(),
                header.parameters,
                r.len()
            )));
        }
        let params = r
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self {
            config: header.config,
            symbols,
            layout,
            params,
        })
    }

    /// Writes the checkpoint and its name → row manifest.
    pub fn save_checkpoint(&self, path: &Path) -> Result<(), ModelError> {
        fs::File::create(path)?.write_all(&self.to_bytes())?;
        fn rows(set: &indexmap::IndexSet<String>) -> std::collections::BTreeMap<&str, usize> {
            set.iter()
                .enumerate()
                .map(|(i, n)| (n.as_str(), i))
                .collect()
        }
        let manifest = Manifest {
            dim: self.layout.dim,
            concepts: rows(&self.symbols.concepts),
            individuals: rows(&self.symbols.individuals),
            roles: rows(&self.symbols.roles),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(manifest_path(path), text)?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self, ModelError> {
        Self::from_bytes(&fs::read(path)?)
    }
}
