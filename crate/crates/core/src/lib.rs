//! Geometric embeddings of EL++ knowledge bases.
//!
//! Concepts are axis-parallel boxes, individuals are points (or small boxes)
//! and roles are diagonal affine maps. The crate covers parsing and
//! normalizing knowledge bases, the geometric primitives, the training
//! objective with its optimizer, and evaluation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod config;
pub mod datasets;
pub mod eval;
pub mod geometry;
pub mod kb;
pub mod losses;
pub mod model;
pub mod normalize;
pub mod train;
pub mod viz;

pub use geometry::{AffineMap, BoxN, VolumeConfig, VolumeKind};
pub use kb::{parse_kb, serialize_kb, KbError, KnowledgeBase};
pub use model::{EmbeddingModel, EntityMode, ModelConfig, RelationMode};
pub use normalize::{normalize, NormalizedKb};
