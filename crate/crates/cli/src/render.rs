//! Raster images of nodal stress fields and vector drawings of failure
//! patterns. Both are pure functions of their inputs.

use std::fmt::Write;

use thiserror::Error;
use vdlo::recovery::{interpolate_in_element, NodalStressField};
use vdlo::vdlo::{Status, VdloResult};
use vdlo::{Mesh, Point};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("channel {channel} range [{lo}, {hi}] is empty or not finite")]
    DegenerateRange { channel: usize, lo: f64, hi: f64 },
    #[error("image width must be positive")]
    ZeroWidth,
    #[error("mesh has zero extent")]
    EmptyDomain,
    #[error("stress field has {got} entries, mesh has {expected} nodes")]
    FieldLength { expected: usize, got: usize },
    #[error("pattern refers to node {node}, mesh has {count}")]
    NodeOutOfRange { node: usize, count: usize },
}

/// Linear map of one stress component onto 0..=255.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelRange {
    pub lo: f64,
    pub hi: f64,
}

impl ChannelRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        ChannelRange { lo, hi }
    }

    fn check(&self, channel: usize) -> Result<(), RenderError> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi {
            Ok(())
        } else {
            Err(RenderError::DegenerateRange { channel, lo: self.lo, hi: self.hi })
        }
    }

    /// `255 (v − lo) / (hi − lo)`, clamped, rounded half up.
    pub fn map(&self, v: f64) -> u8 {
        let s = 255.0 * (v - self.lo) / (self.hi - self.lo);
        if s.is_nan() {
            return 0;
        }
        (s.clamp(0.0, 255.0) + 0.5).floor() as u8
    }

    /// The smallest range covering component `k` of `field`, widened by one
    /// unit on each side when the component is constant.
    pub fn covering(field: &NodalStressField, k: usize) -> Self {
        let (lo, hi) = field.0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s[k]), hi.max(s[k])));
        if !(lo < hi) {
            let v = if lo.is_finite() { lo } else { 0.0 };
            return ChannelRange { lo: v - 1.0, hi: v + 1.0 };
        }
        ChannelRange { lo, hi }
    }
}

/// Image height for a given width, keeping the domain's aspect ratio.
pub fn image_height(mesh: &Mesh, width: usize) -> usize {
    let bb = mesh.bounding_box();
    ((width as f64 * bb.height() / bb.width()).round() as usize).max(1)
}

/// Binary PPM (P6) of σx, σy, τxy as red, green and blue. Pixel centres are
/// sampled; pixels outside the mesh are white.
pub fn render_stress_ppm(
    mesh: &Mesh,
    field: &NodalStressField,
    ranges: [ChannelRange; 3],
    width: usize,
) -> Result<Vec<u8>, RenderError> {
    for (k, r) in ranges.iter().enumerate() {
        r.check(k)?;
    }
    if width == 0 {
        return Err(RenderError::ZeroWidth);
    }
    if field.len() != mesh.node_count() {
        return Err(RenderError::FieldLength { expected: mesh.node_count(), got: field.len() });
    }
    let bb = mesh.bounding_box();
    if !(bb.width() > 0.0 && bb.height() > 0.0) {
        return Err(RenderError::EmptyDomain);
    }
    let height = image_height(mesh, width);
    let (dx, dy) = (bb.width() / width as f64, bb.height() / height as f64);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(3 * width * height);
    for j in 0..height {
        let y = bb.max.y - (j as f64 + 0.5) * dy;
        for i in 0..width {
            let p = Point::new(bb.min.x + (i as f64 + 0.5) * dx, y);
            match mesh.locate_element(p) {
                Some(e) => {
                    let s = interpolate_in_element(mesh, field, e, p);
                    out.extend((0..3).map(|k| ranges[k].map(s[k])));
                }
                None => out.extend([255, 255, 255]),
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvgStyle {
    /// Drawing width in pixels; the height follows the domain.
    pub width: f64,
    pub margin: f64,
    /// Stroke width of the segment with the largest slip.
    pub max_stroke: f64,
    pub outline_stroke: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle { width: 800.0, margin: 24.0, max_stroke: 4.0, outline_stroke: 1.0 }
    }
}

/// Mesh outline plus one line per pattern entry, stroke width proportional
/// to its slip, with λ written underneath.
pub fn render_pattern_svg(mesh: &Mesh, result: &VdloResult, style: &SvgStyle) -> Result<String, RenderError> {
    let count = mesh.node_count();
    if let Some(e) = result.pattern.iter().find(|e| e.a >= count || e.b >= count) {
        return Err(RenderError::NodeOutOfRange { node: e.a.max(e.b), count });
    }
    let bb = mesh.bounding_box();
    if !(bb.width() > 0.0 && bb.height() > 0.0) {
        return Err(RenderError::EmptyDomain);
    }
    let scale = (style.width - 2.0 * style.margin) / bb.width();
    let text_band = 2.0 * style.margin;
    let height = bb.height() * scale + 2.0 * style.margin + text_band;
    let map = |p: Point| (style.margin + (p.x - bb.min.x) * scale, style.margin + (bb.max.y - p.y) * scale);
    let mut svg = String::new();
    let w = style.width;
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{height:.1}" viewBox="0 0 {w:.1} {height:.1}">"#).unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(svg, r#"<g stroke="black" stroke-width="{:.2}" fill="none">"#, style.outline_stroke).unwrap();
    for edge in mesh.boundary() {
        let (a, b) = (map(mesh.node(edge.nodes[0])), map(mesh.node(edge.nodes[1])));
        writeln!(svg, r#"<line class="outline" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#, a.0, a.1, b.0, b.1).unwrap();
    }
    writeln!(svg, "</g>").unwrap();
    let max_slip = result.pattern.iter().fold(0.0f64, |m, e| m.max(e.slip));
    writeln!(svg, r#"<g stroke="crimson" stroke-linecap="round">"#).unwrap();
    for e in &result.pattern {
        let (a, b) = (map(mesh.node(e.a)), map(mesh.node(e.b)));
        let stroke = if max_slip > 0.0 { style.max_stroke * e.slip / max_slip } else { 0.0 };
        writeln!(
            svg,
            r#"<line class="slip" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke-width="{stroke:.3}"/>"#,
            a.0, a.1, b.0, b.1
        )
        .unwrap();
    }
    writeln!(svg, "</g>").unwrap();
    let label = match (result.status, result.lambda) {
        (Status::Failure, Some(l)) => format!("λ = {l:.4}"),
        _ => "stable".to_string(),
    };
    writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="16">{label}</text>"#,
        style.margin,
        height - 0.5 * style.margin
    )
    .unwrap();
    writeln!(svg, "</svg>").unwrap();
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_endpoints_and_midpoint() {
        let r = ChannelRange::new(-15.0, 5.0);
        assert_eq!(r.map(-15.0), 0);
        assert_eq!(r.map(5.0), 255);
        // 255 · 10 / 20 = 127.5 rounds up.
        assert_eq!(r.map(-5.0), 128);
        assert_eq!(r.map(-100.0), 0);
        assert_eq!(r.map(100.0), 255);
    }

    #[test]
    fn empty_range_is_rejected() {
        assert!(ChannelRange::new(1.0, 1.0).check(0).is_err());
        assert!(ChannelRange::new(2.0, 1.0).check(1).is_err());
        assert!(ChannelRange::new(0.0, f64::NAN).check(2).is_err());
    }

    #[test]
    fn covering_widens_constant_component() {
        let f = NodalStressField(vec![[1.0, 2.0, 3.0], [1.0, 4.0, 3.0]]);
        assert_eq!(ChannelRange::covering(&f, 0), ChannelRange::new(0.0, 2.0));
        assert_eq!(ChannelRange::covering(&f, 1), ChannelRange::new(2.0, 4.0));
    }
}
