//! Deterministic SVG drawing of a two-dimensional embedding.

use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::BoxN;
use crate::kb::{ConceptId, IndividualId};
use crate::model::EmbeddingModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VizError {
    #[error("only 2-dimensional embeddings can be drawn; this one has dimension {0}")]
    Dimension(usize),
}

const SIZE: f64 = 640.0;
const MARGIN: f64 = 40.0;

/// Stroke color of the `i`-th concept: hues spaced by the golden angle.
pub fn stroke_color(i: usize) -> String {
    let hue = (i as f64 * 137.507_764) % 360.0;
    format!("hsl({hue:.1},70%,38%)")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    min: [f64; 2],
    scale: f64,
}

impl Frame {
    fn fit(boxes: &[BoxN], points: &[Vec<f64>]) -> Self {
        let mut min = [0.0f64, 0.0];
        let mut max = [1.0f64, 1.0];
        let mut grow = |p: &[f64]| {
            for i in 0..2 {
                if p[i].is_finite() {
                    min[i] = min[i].min(p[i]);
                    max[i] = max[i].max(p[i]);
                }
            }
        };
        for b in boxes.iter().filter(|b| !b.is_empty()) {
            grow(&b.lower);
            grow(&b.upper);
        }
        for p in points {
            grow(p);
        }
        let span = (max[0] - min[0]).max(max[1] - min[1]);
        Self {
            min,
            scale: (SIZE - 2.0 * MARGIN) / span,
        }
    }

    fn x(&self, x: f64) -> f64 {
        MARGIN + (x - self.min[0]) * self.scale
    }

    /// SVG y grows downwards.
    fn y(&self, y: f64) -> f64 {
        SIZE - MARGIN - (y - self.min[1]) * self.scale
    }

    fn rect(&self, b: &BoxN) -> (f64, f64, f64, f64) {
        let w = ((b.upper[0] - b.lower[0]) * self.scale).max(0.0);
        let h = ((b.upper[1] - b.lower[1]) * self.scale).max(0.0);
        (self.x(b.lower[0]), self.y(b.upper[1].max(b.lower[1])), w, h)
    }
}

/// One labeled rectangle per named concept, one dot per individual, and the
/// unit box as a dashed frame.
pub fn render_svg(model: &EmbeddingModel) -> Result<String, VizError> {
    if model.dim() != 2 {
        return Err(VizError::Dimension(model.dim()));
    }
    let symbols = &model.symbols;
    let boxes: Vec<(&str, BoxN)> = (0..symbols.concepts.len() as u32)
        .map(ConceptId)
        .filter(|&c| !symbols.is_fresh(c))
        .map(|c| (symbols.concept_name(c), model.concept_box(c)))
        .collect();
    let points: Vec<(&str, Vec<f64>)> = (0..symbols.individuals.len() as u32)
        .map(IndividualId)
        .map(|a| (symbols.individual_name(a), model.entity_point(a)))
        .collect();
    Ok(render_scene(&boxes, &points))
}

/// Draws labeled 2-dimensional boxes and points over the unit box frame.
/// The view is fitted to everything drawn.
pub fn render_scene(boxes: &[(&str, BoxN)], points: &[(&str, Vec<f64>)]) -> String {
    let plain: Vec<BoxN> = boxes.iter().map(|(_, b)| b.clone()).collect();
    let dots: Vec<Vec<f64>> = points.iter().map(|(_, p)| p.clone()).collect();
    let f = Frame::fit(&plain, &dots);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let (x, y, w, h) = f.rect(&BoxN::unit(2));
    let _ = writeln!(
        s,
        r##"<rect class="unit" x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="none" stroke="#999999" stroke-dasharray="4 4"/>"##
    );
    for (i, (name, b)) in boxes.iter().enumerate() {
        let (x, y, w, h) = f.rect(b);
        let color = stroke_color(i);
        let name = escape(name);
        let _ = writeln!(
            s,
            r#"<rect class="concept" data-name="{name}" x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="{color}" fill-opacity="0.08" stroke="{color}" stroke-width="2"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" fill="{color}">{name}</text>"#,
            x + 3.0,
            y + 14.0
        );
    }
    for (name, p) in points {
        let name = escape(name);
        let (x, y) = (f.x(p[0]), f.y(p[1]));
        let _ = writeln!(
            s,
            r##"<circle class="individual" data-name="{name}" cx="{x:.3}" cy="{y:.3}" r="4" fill="#222222"/>"##
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.3}" y="{:.3}" fill="#222222">{name}</text>"##,
            x + 6.0,
            y - 6.0
        );
    }
    s.push_str("</svg>\n");
    s
}
