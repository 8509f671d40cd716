//! The tileset data model: prototiles with two layers of stitch marks,
//! per-parent substitution rules, the JSON file format, the exact-cover
//! validator, and the mark-coherence reports.
//!
//! Marks live in doubled coordinates: cell (x,y) spans (2x,2y)..(2x+2,2y+2),
//! so cell-edge midpoints and half-unit positions are exact integers. A
//! tile's "tile" layer holds its own unit stitches; its "super" layer holds
//! the supertile's curve set at half scale, so the tile embeds a picture of
//! its own expansion. `derived_super_marks` recomputes that picture from the
//! rule and `mark_coherence_report` compares the two.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::geometry::{Cell, D4Transform, Placement, Polyomino};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MarkLayer {
    #[serde(rename = "tile")]
    Tile,
    #[serde(rename = "super")]
    Super,
}

impl fmt::Display for MarkLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MarkLayer::Tile => "tile",
            MarkLayer::Super => "super",
        })
    }
}

/// An axis-parallel stitch segment in doubled coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MarkSegment {
    pub layer: MarkLayer,
    pub a: (i64, i64),
    pub b: (i64, i64),
}

impl MarkSegment {
    /// Endpoints are stored in sorted order so equal segments compare equal.
    pub fn new(layer: MarkLayer, a: (i64, i64), b: (i64, i64)) -> Self {
        if b < a {
            MarkSegment { layer, a: b, b: a }
        } else {
            MarkSegment { layer, a, b }
        }
    }

    pub fn is_axis_parallel(&self) -> bool {
        (self.a.0 == self.b.0) != (self.a.1 == self.b.1)
    }

    pub fn is_horizontal(&self) -> bool {
        self.a.1 == self.b.1 && self.a.0 != self.b.0
    }

    /// Length in doubled units (2 = one cell).
    pub fn doubled_len(&self) -> i64 {
        (self.b.0 - self.a.0).abs() + (self.b.1 - self.a.1).abs()
    }

    pub fn placed(&self, pl: Placement) -> MarkSegment {
        MarkSegment::new(self.layer, pl.apply_doubled(self.a), pl.apply_doubled(self.b))
    }

    pub fn scaled(&self, k: i64) -> MarkSegment {
        MarkSegment::new(
            self.layer,
            (self.a.0 * k, self.a.1 * k),
            (self.b.0 * k, self.b.1 * k),
        )
    }

    pub fn halved(&self) -> MarkSegment {
        debug_assert!(self.a.0 % 2 == 0 || self.a.0 == self.b.0);
        MarkSegment::new(
            self.layer,
            (self.a.0 / 2, self.a.1 / 2),
            (self.b.0 / 2, self.b.1 / 2),
        )
    }

    pub fn with_layer(&self, layer: MarkLayer) -> MarkSegment {
        MarkSegment { layer, ..*self }
    }
}

/// Merge colinear touching or overlapping segments into maximal segments.
/// Layers are merged independently and the result is sorted.
pub fn merge_segments(segments: &[MarkSegment]) -> Vec<MarkSegment> {
    let mut by_line: BTreeMap<(MarkLayer, bool, i64), Vec<(i64, i64)>> = BTreeMap::new();
    for s in segments {
        debug_assert!(s.is_axis_parallel());
        if s.is_horizontal() {
            by_line
                .entry((s.layer, true, s.a.1))
                .or_default()
                .push((s.a.0, s.b.0));
        } else {
            by_line
                .entry((s.layer, false, s.a.0))
                .or_default()
                .push((s.a.1, s.b.1));
        }
    }
    let mut out = Vec::new();
    for ((layer, horizontal, line), mut intervals) in by_line {
        intervals.sort_unstable();
        let mut merged: Vec<(i64, i64)> = Vec::new();
        for (lo, hi) in intervals {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        for (lo, hi) in merged {
            let seg = if horizontal {
                MarkSegment::new(layer, (lo, line), (hi, line))
            } else {
                MarkSegment::new(layer, (line, lo), (line, hi))
            };
            out.push(seg);
        }
    }
    out.sort_unstable();
    out
}

/// A prototile: shape, stitch marks, optional display color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilePrototype {
    pub id: String,
    pub shape: Polyomino,
    pub marks: Vec<MarkSegment>,
    pub color: Option<String>,
}

impl TilePrototype {
    pub fn marks_in_layer(&self, layer: MarkLayer) -> Vec<MarkSegment> {
        self.marks.iter().filter(|m| m.layer == layer).copied().collect()
    }
}

/// One substitution rule: the placed children exactly cover the k-inflated
/// parent (validated by `validate_rule`, not assumed at parse time).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionRule {
    pub parent: String,
    pub children: Vec<(String, Placement)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetaValue {
    Int(i64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tileset {
    pub name: String,
    /// Linear inflation factor, at least 2.
    pub scale: i64,
    pub metadata: BTreeMap<String, MetaValue>,
    pub tiles: Vec<TilePrototype>,
    pub rules: Vec<SubstitutionRule>,
}

impl Tileset {
    pub fn tile(&self, id: &str) -> Option<&TilePrototype> {
        self.tiles.iter().find(|t| t.id == id)
    }

    pub fn rule(&self, parent: &str) -> Option<&SubstitutionRule> {
        self.rules.iter().find(|r| r.parent == parent)
    }

    /// Structural validation: unique resolvable ids, scale in range,
    /// connected shapes, marks axis-parallel / nonzero / inside the tile.
    /// Exact-cover validity of rules is checked separately.
    pub fn check_structure(&self) -> Result<(), ModelError> {
        if self.scale < 2 {
            return Err(ModelError::ScaleOutOfRange(self.scale));
        }
        let mut ids = HashSet::new();
        for t in &self.tiles {
            if t.id.is_empty() {
                return Err(ModelError::Syntax("empty tile id".into()));
            }
            if !ids.insert(t.id.clone()) {
                return Err(ModelError::DuplicateTileId(t.id.clone()));
            }
            for (i, m) in t.marks.iter().enumerate() {
                if !m.is_axis_parallel() {
                    return Err(ModelError::BadMark {
                        id: t.id.clone(),
                        index: i,
                        reason: "segment is not axis-parallel or has zero length".into(),
                    });
                }
                if !segment_in_region(&t.shape, m) {
                    return Err(ModelError::BadMark {
                        id: t.id.clone(),
                        index: i,
                        reason: format!(
                            "segment ({},{})..({},{}) leaves the tile region",
                            m.a.0, m.a.1, m.b.0, m.b.1
                        ),
                    });
                }
            }
        }
        let mut parents = HashSet::new();
        for r in &self.rules {
            if !ids.contains(&r.parent) {
                return Err(ModelError::UnresolvedId(r.parent.clone()));
            }
            if !parents.insert(r.parent.clone()) {
                return Err(ModelError::DuplicateRule(r.parent.clone()));
            }
            for (child, _) in &r.children {
                if !ids.contains(child) {
                    return Err(ModelError::UnresolvedId(child.clone()));
                }
            }
        }
        Ok(())
    }
}

/// Is the segment inside the closed region covered by the shape's cells?
/// Checked per elementary doubled-unit step: each step must lie in the
/// closed doubled square of some cell of the shape.
fn segment_in_region(shape: &Polyomino, m: &MarkSegment) -> bool {
    let steps = m.doubled_len();
    for i in 0..steps {
        let p = if m.is_horizontal() {
            ((m.a.0 + i, m.a.1), (m.a.0 + i + 1, m.a.1))
        } else {
            ((m.a.0, m.a.1 + i), (m.a.0, m.a.1 + i + 1))
        };
        if !unit_step_in_region(shape, p.0, p.1) {
            return false;
        }
    }
    steps > 0
}

fn unit_step_in_region(shape: &Polyomino, a: (i64, i64), b: (i64, i64)) -> bool {
    // Candidate cells whose closed doubled square contains both endpoints.
    let xs = covering_range(a.0.min(b.0), a.0.max(b.0));
    let ys = covering_range(a.1.min(b.1), a.1.max(b.1));
    for &cx in &xs {
        for &cy in &ys {
            if shape.contains(Cell::new(cx, cy)) {
                return true;
            }
        }
    }
    false
}

/// Cells c with 2c <= lo and hi <= 2c+2.
fn covering_range(lo: i64, hi: i64) -> Vec<i64> {
    let mut v = Vec::new();
    let first = (hi - 2).div_euclid(2);
    let last = lo.div_euclid(2);
    for c in first..=last {
        if 2 * c <= lo && hi <= 2 * c + 2 {
            v.push(c);
        }
    }
    v
}

/// Is a doubled-frame point interior to the closed region of the shape
/// (not on its outer boundary)? True iff every cell whose closed square
/// contains the point belongs to the shape.
pub(crate) fn point_interior_to_region(shape: &Polyomino, p: (i64, i64)) -> bool {
    let xs = candidates(p.0);
    let ys = candidates(p.1);
    for &cx in &xs {
        for &cy in &ys {
            if !shape.contains(Cell::new(cx, cy)) {
                return false;
            }
        }
    }
    true
}

fn candidates(v: i64) -> Vec<i64> {
    if v % 2 == 0 {
        vec![v / 2 - 1, v / 2]
    } else {
        vec![(v - 1) / 2]
    }
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TilesetDoc {
    name: String,
    scale: i64,
    metadata: BTreeMap<String, MetaValue>,
    tiles: Vec<TileDoc>,
    rules: Vec<RuleDoc>,
}

#[derive(Serialize, Deserialize)]
struct TileDoc {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    color: Option<String>,
    cells: Vec<(i64, i64)>,
    marks: Vec<MarkDoc>,
}

#[derive(Serialize, Deserialize)]
struct MarkDoc {
    layer: MarkLayer,
    a: (i64, i64),
    b: (i64, i64),
}

#[derive(Serialize, Deserialize)]
struct RuleDoc {
    parent: String,
    children: Vec<ChildDoc>,
}

#[derive(Serialize, Deserialize)]
struct ChildDoc {
    tile: String,
    t: String,
    o: (i64, i64),
}

/// Parse the tileset file format and run structural validation.
pub fn parse_tileset(bytes: &[u8]) -> Result<Tileset, ModelError> {
    let doc: TilesetDoc = serde_json::from_slice(bytes)
        .map_err(|e| ModelError::Syntax(e.to_string()))?;
    let mut tiles = Vec::with_capacity(doc.tiles.len());
    for t in doc.tiles {
        let shape = Polyomino::new(t.cells.iter().map(|&(x, y)| Cell::new(x, y)).collect())
            .map_err(|source| ModelError::BadShape {
                id: t.id.clone(),
                source,
            })?;
        let marks = t
            .marks
            .iter()
            .map(|m| MarkSegment::new(m.layer, m.a, m.b))
            .collect();
        tiles.push(TilePrototype {
            id: t.id,
            shape,
            marks,
            color: t.color,
        });
    }
    let mut rules = Vec::with_capacity(doc.rules.len());
    for r in doc.rules {
        let mut children = Vec::with_capacity(r.children.len());
        for c in r.children {
            let t = D4Transform::from_symbol(&c.t)
                .ok_or_else(|| ModelError::Syntax(format!("unknown transform {:?}", c.t)))?;
            children.push((c.tile, Placement::new(t, c.o)));
        }
        rules.push(SubstitutionRule {
            parent: r.parent,
            children,
        });
    }
    let ts = Tileset {
        name: doc.name,
        scale: doc.scale,
        metadata: doc.metadata,
        tiles,
        rules,
    };
    ts.check_structure()?;
    Ok(ts)
}

/// Canonical text form: tiles sorted by id, rules sorted by parent, marks
/// sorted, fixed field order. Parsing the output reproduces the tileset.
pub fn serialize_tileset(ts: &Tileset) -> Vec<u8> {
    let mut tiles: Vec<&TilePrototype> = ts.tiles.iter().collect();
    tiles.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rules: Vec<&SubstitutionRule> = ts.rules.iter().collect();
    rules.sort_by(|a, b| a.parent.cmp(&b.parent));
    let doc = TilesetDoc {
        name: ts.name.clone(),
        scale: ts.scale,
        metadata: ts.metadata.clone(),
        tiles: tiles
            .into_iter()
            .map(|t| {
                let mut marks: Vec<&MarkSegment> = t.marks.iter().collect();
                marks.sort_unstable();
                TileDoc {
                    id: t.id.clone(),
                    color: t.color.clone(),
                    cells: t.shape.cells().iter().map(|c| (c.x, c.y)).collect(),
                    marks: marks
                        .into_iter()
                        .map(|m| MarkDoc {
                            layer: m.layer,
                            a: m.a,
                            b: m.b,
                        })
                        .collect(),
                }
            })
            .collect(),
        rules: rules
            .into_iter()
            .map(|r| RuleDoc {
                parent: r.parent.clone(),
                children: r
                    .children
                    .iter()
                    .map(|(tile, pl)| ChildDoc {
                        tile: tile.clone(),
                        t: pl.transform.symbol().to_string(),
                        o: pl.offset,
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("tileset serializes");
    bytes.push(b'\n');
    bytes
}

// ---------------------------------------------------------------------------
// Exact-cover validation
// ---------------------------------------------------------------------------

/// Outcome of checking one rule against the k-inflated parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverReport {
    pub parent: String,
    /// Cells covered two or more times, sorted by (y, x).
    pub overlap_cells: Vec<Cell>,
    /// Cells of the inflated parent covered zero times.
    pub hole_cells: Vec<Cell>,
    /// Covered cells outside the inflated parent.
    pub stray_cells: Vec<Cell>,
}

impl CoverReport {
    pub fn is_valid(&self) -> bool {
        self.overlap_cells.is_empty() && self.hole_cells.is_empty() && self.stray_cells.is_empty()
    }
}

pub fn validate_rule(ts: &Tileset, rule: &SubstitutionRule) -> Result<CoverReport, ModelError> {
    let parent = ts
        .tile(&rule.parent)
        .ok_or_else(|| ModelError::UnknownTile(rule.parent.clone()))?;
    let target = parent.shape.inflate(ts.scale);
    let mut counts: HashMap<Cell, u32> = HashMap::new();
    for (child_id, pl) in &rule.children {
        let child = ts
            .tile(child_id)
            .ok_or_else(|| ModelError::UnknownTile(child_id.clone()))?;
        for &c in child.shape.place(*pl).cells() {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    let mut overlap: Vec<Cell> = counts
        .iter()
        .filter(|(_, &n)| n >= 2)
        .map(|(&c, _)| c)
        .collect();
    let mut holes: Vec<Cell> = target
        .cells()
        .iter()
        .filter(|c| !counts.contains_key(c))
        .copied()
        .collect();
    let mut strays: Vec<Cell> = counts
        .keys()
        .filter(|c| !target.contains(**c))
        .copied()
        .collect();
    overlap.sort_by_key(|c| (c.y, c.x));
    holes.sort_by_key(|c| (c.y, c.x));
    strays.sort_by_key(|c| (c.y, c.x));
    Ok(CoverReport {
        parent: rule.parent.clone(),
        overlap_cells: overlap,
        hole_cells: holes,
        stray_cells: strays,
    })
}

#[derive(Debug, Clone)]
pub struct RuleReport {
    pub cover: CoverReport,
    /// Sum of child areas equals scale^2 times the parent area. A corollary
    /// of exact cover, reported independently for diagnostics.
    pub area_identity: bool,
    pub child_area_sum: usize,
    pub expected_area: usize,
}

#[derive(Debug, Clone)]
pub struct TilesetReport {
    pub rules: Vec<RuleReport>,
    pub pass: bool,
}

impl TilesetReport {
    pub fn failing_parents(&self) -> Vec<&str> {
        self.rules
            .iter()
            .filter(|r| !r.cover.is_valid() || !r.area_identity)
            .map(|r| r.cover.parent.as_str())
            .collect()
    }
}

pub fn validate_tileset(ts: &Tileset) -> Result<TilesetReport, ModelError> {
    ts.check_structure()?;
    let mut reports = Vec::with_capacity(ts.rules.len());
    for rule in &ts.rules {
        let cover = validate_rule(ts, rule)?;
        let parent_area = ts.tile(&rule.parent).expect("checked").shape.area();
        let child_area_sum: usize = rule
            .children
            .iter()
            .map(|(id, _)| ts.tile(id).expect("checked").shape.area())
            .sum();
        let expected_area = (ts.scale * ts.scale) as usize * parent_area;
        reports.push(RuleReport {
            cover,
            area_identity: child_area_sum == expected_area,
            child_area_sum,
            expected_area,
        });
    }
    let pass = reports.iter().all(|r| r.cover.is_valid() && r.area_identity);
    Ok(TilesetReport {
        rules: reports,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Mark coherence
// ---------------------------------------------------------------------------

/// Union of the children's tile-layer stitches mapped into the inflated
/// parent frame (doubled coordinates), merged maximally. This is the
/// computed super-level curve set for the tile.
pub fn derived_super_marks(ts: &Tileset, tile_id: &str) -> Result<Vec<MarkSegment>, ModelError> {
    let rule = ts
        .rule(tile_id)
        .ok_or_else(|| ModelError::NoRuleForTile(tile_id.to_string()))?;
    let mut segments = Vec::new();
    for (child_id, pl) in &rule.children {
        let child = ts
            .tile(child_id)
            .ok_or_else(|| ModelError::UnknownTile(child_id.clone()))?;
        for m in &child.marks {
            if m.layer == MarkLayer::Tile {
                segments.push(m.placed(*pl).with_layer(MarkLayer::Super));
            }
        }
    }
    Ok(merge_segments(&segments))
}

#[derive(Debug, Clone)]
pub struct TileCoherence {
    pub tile: String,
    /// Maximal segments present in both the scaled stored layer and the
    /// derived layer.
    pub matching: Vec<MarkSegment>,
    /// Derived segments absent from the stored super layer.
    pub missing: Vec<MarkSegment>,
    /// Stored super segments (scaled) absent from the derived set.
    pub extra: Vec<MarkSegment>,
    /// Dead ends of the derived curve set strictly inside the inflated
    /// parent region: points where a curve stops against an internal edge
    /// between adjacent children instead of continuing.
    pub continuity_breaks: Vec<(i64, i64)>,
}

impl TileCoherence {
    pub fn full_match(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }

    pub fn continuous(&self) -> bool {
        self.continuity_breaks.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct CoherenceReport {
    pub tiles: Vec<TileCoherence>,
}

impl CoherenceReport {
    pub fn full_match(&self) -> bool {
        self.tiles.iter().all(|t| t.full_match())
    }

    pub fn continuous(&self) -> bool {
        self.tiles.iter().all(|t| t.continuous())
    }
}

/// Compare each ruled tile's stored super layer (scaled to the inflated
/// frame) against its derived super marks, and report curve dead ends
/// strictly inside the supertile.
pub fn mark_coherence_report(ts: &Tileset) -> Result<CoherenceReport, ModelError> {
    let mut tiles = Vec::new();
    for rule in &ts.rules {
        let tile = ts
            .tile(&rule.parent)
            .ok_or_else(|| ModelError::UnknownTile(rule.parent.clone()))?;
        let derived = derived_super_marks(ts, &rule.parent)?;
        let stored: Vec<MarkSegment> = tile
            .marks_in_layer(MarkLayer::Super)
            .iter()
            .map(|m| m.scaled(ts.scale))
            .collect();
        let stored = merge_segments(&stored);
        let stored_set: HashSet<MarkSegment> = stored.iter().copied().collect();
        let derived_set: HashSet<MarkSegment> = derived.iter().copied().collect();
        let matching = derived
            .iter()
            .filter(|m| stored_set.contains(m))
            .copied()
            .collect();
        let missing = derived
            .iter()
            .filter(|m| !stored_set.contains(m))
            .copied()
            .collect();
        let extra = stored
            .iter()
            .filter(|m| !derived_set.contains(m))
            .copied()
            .collect();
        let inflated = tile.shape.inflate(ts.scale);
        let continuity_breaks = interior_dead_ends(&derived, &inflated);
        tiles.push(TileCoherence {
            tile: rule.parent.clone(),
            matching,
            missing,
            extra,
            continuity_breaks,
        });
    }
    Ok(CoherenceReport { tiles })
}

/// Endpoints of maximal segments that meet no other segment endpoint and lie
/// strictly inside the region.
fn interior_dead_ends(merged: &[MarkSegment], region: &Polyomino) -> Vec<(i64, i64)> {
    let mut degree: BTreeMap<(i64, i64), u32> = BTreeMap::new();
    for s in merged {
        *degree.entry(s.a).or_insert(0) += 1;
        *degree.entry(s.b).or_insert(0) += 1;
    }
    degree
        .into_iter()
        .filter(|&(p, d)| d == 1 && point_interior_to_region(region, p))
        .map(|(p, _)| p)
        .collect()
}
