//! Axis-parallel boxes, their volumes, and diagonal affine maps.
//!
//! A box is a `(lower, upper)` corner pair. No ordering is enforced between
//! the corners: a box with `upper_i < lower_i` in some dimension is empty,
//! and points are boxes with `lower == upper`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("volume of the reference box is zero")]
    DivisionByZero,
    #[error("scale component {value} in dimension {dim} is below the inversion floor")]
    SingularScale { dim: usize, value: f64 },
}

/// Smallest scale component [`inverse`] accepts.
pub const SCALE_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct BoxN<T = f64> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> BoxN<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Self {
        debug_assert_eq!(lower.len(), upper.len());
        Self { lower, upper }
    }

    /// The degenerate box `[p, p]`.
    pub fn point(p: Vec<T>) -> Self {
        Self {
            lower: p.clone(),
            upper: p,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Some side is strictly negative.
    pub fn is_empty(&self) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .any(|(l, u)| u.value() < l.value())
    }

    pub fn values(&self) -> BoxN<f64> {
        BoxN {
            lower: self.lower.iter().map(|x| x.value()).collect(),
            upper: self.upper.iter().map(|x| x.value()).collect(),
        }
    }

    pub fn sides(&self) -> Vec<T> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| u - l)
            .collect()
    }
}

impl BoxN<f64> {
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }
}

/// `x ↦ scale ⊙ x + offset` with a positive diagonal scale.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap<T = f64> {
    pub scale: Vec<T>,
    pub offset: Vec<T>,
}

impl AffineMap<f64> {
    pub fn identity(dim: usize) -> Self {
        Self {
            scale: vec![1.0; dim],
            offset: vec![0.0; dim],
        }
    }
}

impl<T: Real> AffineMap<T> {
    pub fn dim(&self) -> usize {
        self.scale.len()
    }
}

/// Constants of the two volume functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeConfig {
    /// Side inflation of the modified volume.
    pub epsilon: f64,
    /// Softplus temperature.
    pub temperature: f64,
}

impl Default for VolumeConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            temperature: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeKind {
    /// `Π max(0, side + ε)`
    Modified,
    /// `Π softplus_t(side)`
    Softplus,
}

fn check_dims(a: usize, b: usize) -> Result<(), GeometryError> {
    if a == b {
        Ok(())
    } else {
        Err(GeometryError::DimensionMismatch(a, b))
    }
}

/// Component-wise max of lowers and min of uppers.
pub fn intersect<T: Real>(b1: &BoxN<T>, b2: &BoxN<T>) -> Result<BoxN<T>, GeometryError> {
    check_dims(b1.dim(), b2.dim())?;
    Ok(BoxN {
        lower: b1
            .lower
            .iter()
            .zip(&b2.lower)
            .map(|(&a, &b)| a.max(b))
            .collect(),
        upper: b1
            .upper
            .iter()
            .zip(&b2.upper)
            .map(|(&a, &b)| a.min(b))
            .collect(),
    })
}

fn product<T: Real>(factors: impl Iterator<Item = T>) -> T {
    let mut it = factors;
    let first = it.next().expect("zero-dimensional box");
    it.fold(first, |acc, x| acc * x)
}

pub fn mvol<T: Real>(b: &BoxN<T>, cfg: &VolumeConfig) -> T {
    product(b.sides().into_iter().map(|s| (s + cfg.epsilon).relu()))
}

pub fn svol<T: Real>(b: &BoxN<T>, cfg: &VolumeConfig) -> T {
    product(b.sides().into_iter().map(|s| s.softplus(cfg.temperature)))
}

/// Hard volume `Π max(0, side)`.
pub fn hard_vol(b: &BoxN<f64>) -> f64 {
    b.sides().into_iter().map(|s| s.max(0.0)).product()
}

pub fn volume<T: Real>(b: &BoxN<T>, kind: VolumeKind, cfg: &VolumeConfig) -> T {
    match kind {
        VolumeKind::Modified => mvol(b, cfg),
        VolumeKind::Softplus => svol(b, cfg),
    }
}

/// `1 − vol(b1 ∩ b2) / vol(b1)` before clamping.
pub fn disjoint_measure_raw<T: Real>(
    b1: &BoxN<T>,
    b2: &BoxN<T>,
    kind: VolumeKind,
    cfg: &VolumeConfig,
) -> Result<T, GeometryError> {
    let inter = intersect(b1, b2)?;
    let v1 = volume(b1, kind, cfg);
    if v1.value() == 0.0 {
        return Err(GeometryError::DivisionByZero);
    }
    let ratio = volume(&inter, kind, cfg) / v1;
    Ok(-(ratio - 1.0))
}

/// `1 − vol(b1 ∩ b2) / vol(b1)`, clamped to `[0, 1]`. Zero certifies
/// `b1 ⊆ b2` and one certifies `b1 ∩ b2 = ∅` (under the modified volume).
pub fn disjoint_measure<T: Real>(
    b1: &BoxN<T>,
    b2: &BoxN<T>,
    kind: VolumeKind,
    cfg: &VolumeConfig,
) -> Result<T, GeometryError> {
    disjoint_measure_raw(b1, b2, kind, cfg).map(Real::clamp01)
}

pub fn apply_point<T: Real>(t: &AffineMap<T>, p: &[T]) -> Result<Vec<T>, GeometryError> {
    check_dims(t.dim(), p.len())?;
    Ok(t.scale
        .iter()
        .zip(&t.offset)
        .zip(p)
        .map(|((&s, &o), &x)| s * x + o)
        .collect())
}

/// Image of a box; corners map to corners because the scale is positive.
pub fn apply<T: Real>(t: &AffineMap<T>, b: &BoxN<T>) -> Result<BoxN<T>, GeometryError> {
    Ok(BoxN {
        lower: apply_point(t, &b.lower)?,
        upper: apply_point(t, &b.upper)?,
    })
}

/// `x ↦ x / scale − offset / scale`.
pub fn inverse<T: Real>(t: &AffineMap<T>) -> Result<AffineMap<T>, GeometryError> {
    if let Some((dim, s)) = t
        .scale
        .iter()
        .enumerate()
        .find(|(_, s)| !(s.value() >= SCALE_FLOOR))
    {
        return Err(GeometryError::SingularScale {
            dim,
            value: s.value(),
        });
    }
    Ok(AffineMap {
        scale: t.scale.iter().map(|&s| s.lift(1.0) / s).collect(),
        offset: t
            .scale
            .iter()
            .zip(&t.offset)
            .map(|(&s, &o)| -(o / s))
            .collect(),
    })
}

/// `outer ∘ inner`.
pub fn compose<T: Real>(
    outer: &AffineMap<T>,
    inner: &AffineMap<T>,
) -> Result<AffineMap<T>, GeometryError> {
    check_dims(outer.dim(), inner.dim())?;
    Ok(AffineMap {
        scale: outer
            .scale
            .iter()
            .zip(&inner.scale)
            .map(|(&a, &b)| a * b)
            .collect(),
        offset: apply_point(outer, &inner.offset)?,
    })
}

/// `inner ⊆ outer` up to `tol` per face. Empty boxes are contained in
/// everything.
pub fn contains(outer: &BoxN<f64>, inner: &BoxN<f64>, tol: f64) -> Result<bool, GeometryError> {
    check_dims(outer.dim(), inner.dim())?;
    if inner.is_empty() {
        return Ok(true);
    }
    Ok((0..inner.dim())
        .all(|i| outer.lower[i] - tol <= inner.lower[i] && inner.upper[i] <= outer.upper[i] + tol))
}

/// Largest amount by which `inner` sticks out of `outer` on any face; zero
/// when contained or when `inner` is empty.
pub fn containment_violation(outer: &BoxN<f64>, inner: &BoxN<f64>) -> f64 {
    if inner.is_empty() {
        return 0.0;
    }
    (0..inner.dim())
        .map(|i| {
            (outer.lower[i] - inner.lower[i])
                .max(inner.upper[i] - outer.upper[i])
                .max(0.0)
        })
        .fold(0.0, f64::max)
}
