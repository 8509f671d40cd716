//! Deterministic SVG rendering of patches. The y axis is flipped at output
//! so images match the mathematical orientation used everywhere else;
//! identical inputs produce identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::engine::Patch;
use crate::error::EngineError;
use crate::model::{merge_segments, MarkLayer, MarkSegment, Tileset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RenderLayer {
    Shape,
    TileMarks,
    SuperMarks,
}

impl RenderLayer {
    pub fn from_name(name: &str) -> Option<RenderLayer> {
        match name {
            "shape" => Some(RenderLayer::Shape),
            "tile-marks" => Some(RenderLayer::TileMarks),
            "super-marks" => Some(RenderLayer::SuperMarks),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderOptions {
    /// Pixels per cell.
    pub unit: u32,
    pub layers: BTreeSet<RenderLayer>,
    /// Overrides for tile fill colors; tileset colors are the defaults.
    pub palette: BTreeMap<String, String>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            unit: 10,
            layers: [
                RenderLayer::Shape,
                RenderLayer::TileMarks,
                RenderLayer::SuperMarks,
            ]
            .into_iter()
            .collect(),
            palette: BTreeMap::new(),
        }
    }
}

const FALLBACK_FILL: &str = "#d9d2c4";
const TILE_MARK_COLOR: &str = "#111111";
const SUPER_MARK_COLOR: &str = "#2b6cb8";

/// Render the patch as SVG: one path per tile outer boundary, then mark
/// polylines per layer, all in sorted placement order.
pub fn render_svg(
    ts: &Tileset,
    patch: &Patch,
    opts: &RenderOptions,
) -> Result<Vec<u8>, EngineError> {
    assert!(opts.unit >= 1, "unit must be at least one pixel per cell");
    let unit = opts.unit as i64;
    let mut bounds: Option<(i64, i64, i64, i64)> = None;
    let mut shapes = Vec::with_capacity(patch.placements.len());
    for placed in &patch.placements {
        let proto = ts
            .tile(&placed.tile)
            .ok_or_else(|| EngineError::UnknownTile(placed.tile.clone()))?;
        let shape = proto.shape.place(placed.placement);
        let (x0, y0, x1, y1) = shape.bounds();
        bounds = Some(match bounds {
            None => (x0, y0, x1, y1),
            Some((a, b, c, d)) => (a.min(x0), b.min(y0), c.max(x1), d.max(y1)),
        });
        shapes.push((placed, proto, shape));
    }
    let (min_x, min_y, max_x, max_y) = bounds.unwrap_or((0, 0, -1, -1));
    let width = (max_x - min_x + 1).max(0) * unit;
    let height = (max_y - min_y + 1).max(0) * unit;
    // Lattice point to pixel, flipping y.
    let px = |x: i64| (x - min_x) * unit;
    let py = |y: i64| (max_y + 1 - y) * unit;
    // Doubled-frame point to pixel (marks live in doubled coordinates).
    let dx = |x: i64| (x - 2 * min_x) * unit;
    let dy = |y: i64| (2 * (max_y + 1) - y) * unit;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    if opts.layers.contains(&RenderLayer::Shape) {
        for (placed, proto, shape) in &shapes {
            let fill = opts
                .palette
                .get(&placed.tile)
                .or(proto.color.as_ref())
                .map(String::as_str)
                .unwrap_or(FALLBACK_FILL);
            let boundary = shape.outer_boundary();
            let mut d = String::new();
            for (i, v) in boundary.iter().enumerate() {
                let cmd = if i == 0 { 'M' } else { 'L' };
                let _ = write!(d, "{}{} {} ", cmd, px(v.0), py(v.1));
            }
            d.push('Z');
            let _ = writeln!(
                svg,
                r##"<path d="{d}" fill="{fill}" stroke="#3a3a3a" stroke-width="0.5"/>"##
            );
        }
    }
    for (layer, render_layer, color, scale_width) in [
        (MarkLayer::Tile, RenderLayer::TileMarks, TILE_MARK_COLOR, 0.14),
        (
            MarkLayer::Super,
            RenderLayer::SuperMarks,
            SUPER_MARK_COLOR,
            0.10,
        ),
    ] {
        if !opts.layers.contains(&render_layer) {
            continue;
        }
        let mut segs: Vec<MarkSegment> = Vec::new();
        for (placed, proto, _) in &shapes {
            for m in &proto.marks {
                if m.layer == layer {
                    segs.push(m.placed(placed.placement));
                }
            }
        }
        let merged = merge_segments(&segs);
        let w = format_number(opts.unit as f64 * scale_width);
        for s in &merged {
            let _ = writeln!(
                svg,
                r#"<polyline points="{},{} {},{}" fill="none" stroke="{color}" stroke-width="{w}" stroke-linecap="square"/>"#,
                format_number(dx(s.a.0) as f64 / 2.0),
                format_number(dy(s.a.1) as f64 / 2.0),
                format_number(dx(s.b.0) as f64 / 2.0),
                format_number(dy(s.b.1) as f64 / 2.0),
            );
        }
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg.into_bytes())
}

fn format_number(v: f64) -> String {
    if v == v.trunc() {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::chair;
    use crate::engine::expand_tile;

    #[test]
    fn single_tile_shape_layer_has_one_path() {
        let ts = chair();
        let patch = expand_tile(&ts, "L", 0).unwrap();
        let mut opts = RenderOptions::default();
        opts.layers = [RenderLayer::Shape].into_iter().collect();
        let svg = String::from_utf8(render_svg(&ts, &patch, &opts).unwrap()).unwrap();
        assert_eq!(svg.matches("<path ").count(), 1);
        assert!(svg.starts_with("<?xml"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let ts = chair();
        let patch = expand_tile(&ts, "L", 2).unwrap();
        let opts = RenderOptions::default();
        let a = render_svg(&ts, &patch, &opts).unwrap();
        let b = render_svg(&ts, &patch, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chair_depth_3_has_64_paths_and_exact_dimensions() {
        let ts = chair();
        let patch = expand_tile(&ts, "L", 3).unwrap();
        let opts = RenderOptions {
            unit: 10,
            layers: [RenderLayer::Shape].into_iter().collect(),
            palette: BTreeMap::new(),
        };
        let svg = String::from_utf8(render_svg(&ts, &patch, &opts).unwrap()).unwrap();
        assert_eq!(svg.matches("<path ").count(), 64);
        // inflate(L, 8) spans a 16x16 bounding box.
        assert!(svg.contains(r#"width="160" height="160""#));
    }
}
