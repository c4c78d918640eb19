//! SVG figures of solved sets: arcs drawn as polylines, branch points as
//! filled dots, bifurcation points and Green-critical points as rings, and
//! Pade poles overlaid as stars.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64 as C;

use crate::solver::MinimalSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SvgOptions {
    /// Pixel width of the figure; the height follows the aspect ratio.
    pub width: f64,
    /// Padding around the data, as a fraction of its span.
    pub margin: f64,
    /// Cap on polyline vertices per arc.
    pub max_vertices: usize,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions { width: 800.0, margin: 0.08, max_vertices: 400 }
    }
}

struct Frame {
    x0: f64,
    y1: f64,
    px_per_unit: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn map(&self, z: C) -> (f64, f64) {
        ((z.re - self.x0) * self.px_per_unit, (self.y1 - z.im) * self.px_per_unit)
    }
}

fn frame_for(points: &[C], opts: &SvgOptions) -> Result<Frame> {
    if points.is_empty() {
        return Err(Error::InvalidInput("nothing to draw".into()));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for z in points {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(z.im);
        y1 = y1.max(z.im);
    }
    let span_x = (x1 - x0).max(1e-9);
    let span_y = (y1 - y0).max(1e-9);
    let pad = opts.margin * span_x.max(span_y);
    x0 -= pad;
    x1 += pad;
    y0 -= pad;
    y1 += pad;
    let px_per_unit = opts.width / (x1 - x0);
    Ok(Frame { x0, y1, px_per_unit, width: opts.width, height: (y1 - y0) * px_per_unit })
}

fn thin(samples: &[C], cap: usize) -> Vec<C> {
    if samples.len() <= cap {
        return samples.to_vec();
    }
    let stride = samples.len().div_ceil(cap);
    let mut out: Vec<C> = samples.iter().step_by(stride).copied().collect();
    if out.last() != samples.last() {
        out.push(*samples.last().unwrap());
    }
    out
}

fn star_path(cx: f64, cy: f64, outer: f64, inner: f64) -> String {
    let mut d = String::new();
    for k in 0..10 {
        let r = if k % 2 == 0 { outer } else { inner };
        let ang = -std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI / 5.0;
        let (x, y) = (cx + r * ang.cos(), cy + r * ang.sin());
        let _ = write!(d, "{}{x:.2},{y:.2}", if k == 0 { "M" } else { "L" });
    }
    d.push('Z');
    d
}

/// Renders a solved set, with an optional Pade pole overlay, into an SVG
/// document string.
pub fn render_svg(set: &MinimalSet, poles: &[C], opts: &SvgOptions) -> Result<String> {
    let mut extent: Vec<C> = Vec::new();
    extent.extend(set.e0.iter().map(|&(z, _)| z));
    extent.extend(set.e1.iter().map(|&(z, _)| z));
    extent.extend(set.e2.iter().map(|&(z, _)| z));
    for arc in &set.arcs {
        extent.extend_from_slice(&arc.samples);
    }
    extent.extend_from_slice(poles);
    let frame = frame_for(&extent, opts)?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {:.2} {:.2}\">",
        frame.width, frame.height
    );
    let _ = writeln!(out, "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>");

    for arc in &set.arcs {
        let mut pts = String::new();
        for z in thin(&arc.samples, opts.max_vertices) {
            let (x, y) = frame.map(z);
            let _ = write!(pts, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            out,
            "  <polyline fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"2\" points=\"{}\"/>",
            pts.trim_end()
        );
    }
    for &(z, _) in &set.e0 {
        let (x, y) = frame.map(z);
        let _ = writeln!(out, "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"#1a1a1a\"/>");
    }
    for &(z, _) in &set.e1 {
        let (x, y) = frame.map(z);
        let _ = writeln!(
            out,
            "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5.5\" fill=\"none\" stroke=\"#1a1a1a\" stroke-width=\"1.5\"/>"
        );
    }
    for &(z, _) in &set.e2 {
        let (x, y) = frame.map(z);
        let _ = writeln!(
            out,
            "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5.5\" fill=\"none\" stroke=\"#8a8a8a\" stroke-width=\"1.5\" stroke-dasharray=\"2.5 2\"/>"
        );
    }
    for &p in poles {
        let (x, y) = frame.map(p);
        let _ = writeln!(out, "  <path d=\"{}\" fill=\"#c0392b\"/>", star_path(x, y, 6.5, 2.6));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_svg(path: &Path, set: &MinimalSet, poles: &[C], opts: &SvgOptions) -> Result<()> {
    let doc = render_svg(set, poles, opts)?;
    fs::write(path, doc)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdiff::trace::{Anchor, ArcTermination, TrajectoryArc};
    use crate::solver::Component;

    fn segment_set() -> MinimalSet {
        let a = C::new(-1.0, 0.0);
        let b = C::new(1.0, 0.0);
        let samples: Vec<C> =
            (0..=50).map(|k| a + (b - a) * (k as f64 / 50.0)).collect();
        MinimalSet {
            e0: vec![(a, 1), (b, 1)],
            e1: vec![(C::new(0.0, 0.5), 3)],
            e2: vec![(C::new(0.0, -0.5), 1)],
            arcs: vec![TrajectoryArc {
                samples,
                start: Some(Anchor::Pole { point: a }),
                end: ArcTermination::Anchor(Anchor::Pole { point: b }),
                q_length: 2.0,
                end_snap_distance: 0.0,
            }],
            components: vec![Component { e0: vec![0, 1], e1: vec![], arcs: vec![0] }],
        }
    }

    #[test]
    fn figure_contains_every_element_kind() {
        let poles = [C::new(0.3, 0.1), C::new(-0.4, 0.2)];
        let doc = render_svg(&segment_set(), &poles, &SvgOptions::default()).unwrap();
        assert!(doc.starts_with("<svg"));
        assert!(doc.ends_with("</svg>\n"));
        assert_eq!(doc.matches("<polyline").count(), 1);
        // Two filled dots plus one solid ring and one dashed ring.
        assert_eq!(doc.matches("<circle").count(), 4);
        assert_eq!(doc.matches("stroke-dasharray").count(), 1);
        assert_eq!(doc.matches("<path").count(), 2);
    }

    #[test]
    fn long_arcs_are_thinned() {
        let mut set = segment_set();
        let a = set.arcs[0].samples[0];
        let b = *set.arcs[0].samples.last().unwrap();
        set.arcs[0].samples =
            (0..=5000).map(|k| a + (b - a) * (k as f64 / 5000.0)).collect();
        let opts = SvgOptions { max_vertices: 100, ..Default::default() };
        let doc = render_svg(&set, &[], &opts).unwrap();
        let line = doc.lines().find(|l| l.contains("<polyline")).unwrap();
        let vertices = line.split_whitespace().filter(|w| w.contains(',')).count();
        assert!(vertices <= 102, "{vertices} vertices survived thinning");
    }

    #[test]
    fn empty_set_is_rejected() {
        let set = MinimalSet::default();
        assert!(render_svg(&set, &[], &SvgOptions::default()).is_err());
    }

    #[test]
    fn file_export_writes_the_document() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.svg");
        write_svg(&path, &segment_set(), &[], &SvgOptions::default()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("</svg>"));
    }

    #[test]
    fn aspect_ratio_follows_the_data() {
        let mut set = segment_set();
        set.e1.clear();
        set.e2.clear();
        // Tall vertical segment: height should exceed width.
        for z in &mut set.arcs[0].samples {
            *z = C::new(z.im, z.re * 3.0);
        }
        set.e0 = vec![(C::new(0.0, -3.0), 1), (C::new(0.0, 3.0), 1)];
        let doc = render_svg(&set, &[], &SvgOptions::default()).unwrap();
        let view = doc.lines().next().unwrap();
        let nums: Vec<f64> = view
            .split("viewBox=\"0 0 ")
            .nth(1)
            .unwrap()
            .trim_end_matches("\">")
            .split(' ')
            .map(|s| s.parse().unwrap())
            .collect();
        assert!(nums[1] > nums[0], "height {} should exceed width {}", nums[1], nums[0]);
    }
}
