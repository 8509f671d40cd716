//! Programmatic builders for the bundled tilesets. The files shipped under
//! assets/ are the canonical serializations of these builders; tests hold
//! the two in sync.
//!
//! The ax family is a square substitution system with inflation factor 2 on
//! three final prototiles (a 3x3 square, a 3x6 domino, a 6x6 square). The
//! 6x6 square carries a pair of crossed stitch rectangles with side lengths
//! 2 and 3; every other decoration is derived from the rules. The starting
//! set splits two of the rectangles into an always-grouped white/blue pair,
//! which is what the fuse / dedup / eliminate pipeline collapses back down
//! to the three-tile set.

use std::collections::BTreeMap;

use crate::algebra::{dedup, eliminate, fuse, Decomposition, PairRelation};
use crate::geometry::{Cell, D4Transform, Placement, Polyomino};
use crate::model::{
    derived_super_marks, MarkLayer, MarkSegment, MetaValue, SubstitutionRule, TilePrototype,
    Tileset,
};

/// The chair tileset: one L-tromino, scale 2, four children.
pub fn chair() -> Tileset {
    let l = Polyomino::new(vec![Cell::new(0, 0), Cell::new(1, 0), Cell::new(0, 1)])
        .expect("tromino is connected");
    Tileset {
        name: "chair".into(),
        scale: 2,
        metadata: BTreeMap::new(),
        tiles: vec![TilePrototype {
            id: "L".into(),
            shape: l,
            marks: vec![],
            color: None,
        }],
        rules: vec![SubstitutionRule {
            parent: "L".into(),
            children: vec![
                ("L".into(), Placement::new(D4Transform::R0, (0, 0))),
                ("L".into(), Placement::new(D4Transform::R90, (3, 0))),
                ("L".into(), Placement::new(D4Transform::R270, (0, 3))),
                ("L".into(), Placement::new(D4Transform::R0, (1, 1))),
            ],
        }],
    }
}

fn rect(w: i64, h: i64) -> Polyomino {
    let mut cells = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            cells.push(Cell::new(x, y));
        }
    }
    Polyomino::new(cells).expect("rectangles are connected")
}

/// Unit stitches of an axis-parallel rectangle outline in doubled
/// coordinates: corners (x0,y0)..(x1,y1), one doubled-length-2 piece per
/// lattice step.
fn rect_loop_stitches(x0: i64, y0: i64, x1: i64, y1: i64) -> Vec<MarkSegment> {
    let mut out = Vec::new();
    let mut x = x0;
    while x < x1 {
        out.push(MarkSegment::new(MarkLayer::Tile, (x, y0), (x + 2, y0)));
        out.push(MarkSegment::new(MarkLayer::Tile, (x, y1), (x + 2, y1)));
        x += 2;
    }
    let mut y = y0;
    while y < y1 {
        out.push(MarkSegment::new(MarkLayer::Tile, (x0, y), (x0, y + 2)));
        out.push(MarkSegment::new(MarkLayer::Tile, (x1, y), (x1, y + 2)));
        y += 2;
    }
    out
}

fn child(id: &str, t: D4Transform, o: (i64, i64)) -> (String, Placement) {
    (id.to_string(), Placement::new(t, o))
}

/// Fill in every ruled tile's super layer from its derived marks, at half
/// scale. Tiles keep their tile-layer stitches; the super layer becomes the
/// embedded picture of the supertile's curves.
fn attach_super_layers(ts: &mut Tileset) {
    let parents: Vec<String> = ts.rules.iter().map(|r| r.parent.clone()).collect();
    for parent in parents {
        let derived = derived_super_marks(ts, &parent).expect("ruled tile");
        let halved: Vec<MarkSegment> = derived.iter().map(|m| m.halved()).collect();
        let tile = ts
            .tiles
            .iter_mut()
            .find(|t| t.id == parent)
            .expect("parent resolves");
        tile.marks.retain(|m| m.layer == MarkLayer::Tile);
        tile.marks.extend(halved);
    }
}

/// The starting tileset: six prototiles on the scale-2 square system, with
/// the white square and the blue domino always stacked into a column inside
/// the big square's rule.
pub fn ax_seed() -> Tileset {
    let mut metadata = BTreeMap::new();
    metadata.insert("p".to_string(), MetaValue::Int(3));
    metadata.insert("q".to_string(), MetaValue::Int(2));

    // The 6x6 square carries two crossed stitch rectangles, each with one
    // side of length 2 and one of length 3, images of each other under the
    // diagonal reflection: corners (1,2)-(3,5) and (2,1)-(5,3) in cell
    // coordinates, stored as unit stitches in the doubled frame.
    let mut square6_marks = rect_loop_stitches(2, 4, 6, 10);
    square6_marks.extend(rect_loop_stitches(4, 2, 10, 6));

    let tiles = vec![
        TilePrototype {
            id: "white".into(),
            shape: rect(3, 3),
            marks: vec![],
            color: Some("#ffffff".into()),
        },
        TilePrototype {
            id: "blue".into(),
            shape: rect(3, 6),
            marks: vec![],
            color: Some("#5b8dd9".into()),
        },
        TilePrototype {
            id: "square3".into(),
            shape: rect(3, 3),
            marks: vec![],
            color: Some("#f2e6c9".into()),
        },
        TilePrototype {
            id: "domino".into(),
            shape: rect(3, 6),
            marks: vec![],
            color: Some("#7fb069".into()),
        },
        TilePrototype {
            id: "domino2".into(),
            shape: rect(6, 3),
            marks: vec![],
            color: Some("#7fb069".into()),
        },
        TilePrototype {
            id: "square6".into(),
            shape: rect(6, 6),
            marks: square6_marks,
            color: Some("#c96f5b".into()),
        },
    ];
    let rules = vec![
        SubstitutionRule {
            parent: "white".into(),
            children: vec![child("square6", D4Transform::R0, (0, 0))],
        },
        SubstitutionRule {
            parent: "blue".into(),
            children: vec![
                child("domino2", D4Transform::R0, (0, 0)),
                child("domino2", D4Transform::R0, (0, 3)),
                child("square6", D4Transform::R0, (0, 6)),
            ],
        },
        SubstitutionRule {
            parent: "square3".into(),
            children: vec![child("square6", D4Transform::R0, (0, 0))],
        },
        SubstitutionRule {
            parent: "domino".into(),
            children: vec![
                child("domino2", D4Transform::R0, (0, 0)),
                child("domino2", D4Transform::R0, (0, 3)),
                child("square6", D4Transform::R0, (0, 6)),
            ],
        },
        SubstitutionRule {
            parent: "domino2".into(),
            children: vec![
                child("domino", D4Transform::R0, (0, 0)),
                child("domino", D4Transform::R0, (3, 0)),
                child("square6", D4Transform::R0, (6, 0)),
            ],
        },
        SubstitutionRule {
            parent: "square6".into(),
            children: vec![
                child("square3", D4Transform::R0, (0, 0)),
                child("white", D4Transform::R0, (0, 3)),
                child("blue", D4Transform::R0, (0, 6)),
                child("square3", D4Transform::R0, (3, 0)),
                child("white", D4Transform::R0, (3, 3)),
                child("blue", D4Transform::R0, (3, 6)),
                child("domino2", D4Transform::R0, (6, 0)),
                child("domino2", D4Transform::R0, (6, 3)),
                child("square6", D4Transform::R0, (6, 6)),
            ],
        },
    ];
    let mut ts = Tileset {
        name: "ax-seed".into(),
        scale: 2,
        metadata,
        tiles,
        rules,
    };
    attach_super_layers(&mut ts);
    ts
}

/// The white/blue grouping used throughout the seed: the blue domino sits
/// directly on top of the white square.
pub fn ax_seed_pair_relation() -> PairRelation {
    PairRelation {
        tile_a: "white".into(),
        tile_b: "blue".into(),
        relative: Placement::new(D4Transform::R0, (0, 3)),
    }
}

/// The intermediate five-tile set: the seed with the white/blue pair fused
/// into one column tile.
pub fn ax5() -> Tileset {
    let mut ts = fuse(&ax_seed(), &ax_seed_pair_relation(), "column")
        .expect("the seed's white/blue pairs are total");
    ts.name = "ax5".into();
    ts
}

/// The decomposition that retires the column tile: a domino with a square3
/// stacked on top. This is the first decomposition the exhaustive search
/// returns, so the transform CLI reproduces the same tileset.
pub fn ax_column_decomposition() -> Decomposition {
    Decomposition {
        target: "column".into(),
        parts: vec![
            ("domino".to_string(), Placement::new(D4Transform::R0, (0, 0))),
            ("square3".to_string(), Placement::new(D4Transform::R0, (0, 6))),
        ],
    }
}

/// The final three-tile set, produced by the same pipeline the analyses
/// exercise: fuse the white/blue pair, merge the congruent dominoes, then
/// eliminate the column tile.
pub fn ax() -> Tileset {
    let (deduped, _) = dedup(&ax5()).expect("the two dominoes are congruent");
    let mut ts = eliminate(&deduped, &ax_column_decomposition())
        .expect("the column tile decomposes into square3 + domino");
    ts.name = "ax".into();
    ts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_tileset;

    #[test]
    fn all_assets_validate() {
        for ts in [chair(), ax_seed(), ax5(), ax()] {
            let report = validate_tileset(&ts).unwrap_or_else(|e| {
                panic!("{} failed structural validation: {e}", ts.name)
            });
            assert!(report.pass, "{} fails exact-cover validation", ts.name);
        }
    }

    #[test]
    fn pipeline_tile_counts() {
        assert_eq!(ax_seed().tiles.len(), 6);
        assert_eq!(ax5().tiles.len(), 5);
        assert_eq!(ax().tiles.len(), 3);
    }
}
