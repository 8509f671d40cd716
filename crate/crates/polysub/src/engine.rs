//! Iterative expansion: replace each placed tile by its rule's children in
//! the inflated frame, over and over. Coordinates stay integral at every
//! depth; a depth-d patch lives on a lattice scaled by scale^d relative to
//! the seed frame.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::geometry::{Cell, D4Transform, Placement};
use crate::model::Tileset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedTile {
    pub tile: String,
    pub placement: Placement,
}

/// A finite assembly of placed tiles at some expansion level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub tileset_name: String,
    pub level: u32,
    pub placements: Vec<PlacedTile>,
    /// Child-index path from the seed for each placement, recorded when
    /// expansion is asked to keep provenance.
    pub provenance: Option<Vec<Vec<u32>>>,
}

impl Patch {
    pub fn seed(tileset_name: &str, tile_id: &str) -> Patch {
        Patch {
            tileset_name: tileset_name.to_string(),
            level: 0,
            placements: vec![PlacedTile {
                tile: tile_id.to_string(),
                placement: Placement::IDENTITY,
            }],
            provenance: None,
        }
    }

    pub fn with_provenance(mut self) -> Patch {
        if self.provenance.is_none() {
            self.provenance = Some(vec![Vec::new(); self.placements.len()]);
        }
        self
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }
}

/// Replace every placement by its rule's children composed with the
/// inflated image of the placement. Errors on any tile without a rule.
pub fn expand_patch(ts: &Tileset, patch: &Patch) -> Result<Patch, EngineError> {
    let mut placements = Vec::new();
    let mut provenance = patch.provenance.as_ref().map(|_| Vec::new());
    for (i, placed) in patch.placements.iter().enumerate() {
        let rule = ts
            .rule(&placed.tile)
            .ok_or_else(|| EngineError::UnruledTile(placed.tile.clone()))?;
        let lifted = placed.placement.inflate(ts.scale);
        for (child_index, (child, child_pl)) in rule.children.iter().enumerate() {
            placements.push(PlacedTile {
                tile: child.clone(),
                placement: lifted.compose(*child_pl),
            });
            if let (Some(prov), Some(parent_prov)) = (&mut provenance, &patch.provenance) {
                let mut path = parent_prov[i].clone();
                path.push(child_index as u32);
                prov.push(path);
            }
        }
    }
    Ok(Patch {
        tileset_name: patch.tileset_name.clone(),
        level: patch.level + 1,
        placements,
        provenance,
    })
}

/// Depth-fold expansion of a singleton seed. Placement order is the
/// depth-first child order and is stable across runs.
pub fn expand_tile(ts: &Tileset, tile_id: &str, depth: u32) -> Result<Patch, EngineError> {
    if ts.tile(tile_id).is_none() {
        return Err(EngineError::UnknownTile(tile_id.to_string()));
    }
    let mut patch = Patch::seed(&ts.name, tile_id);
    for _ in 0..depth {
        patch = expand_patch(ts, &patch)?;
    }
    Ok(patch)
}

/// Streaming form of `expand_tile`: yields placements without materializing
/// the list. This implementation is sequential, so the visit order equals
/// the materialized depth-first order; callers must not rely on that if the
/// expansion is ever parallelized, only the materialized form is ordered.
pub fn expand_tile_visit<F>(
    ts: &Tileset,
    tile_id: &str,
    depth: u32,
    mut visit: F,
) -> Result<(), EngineError>
where
    F: FnMut(&str, Placement),
{
    if ts.tile(tile_id).is_none() {
        return Err(EngineError::UnknownTile(tile_id.to_string()));
    }
    fn go<F: FnMut(&str, Placement)>(
        ts: &Tileset,
        tile: &str,
        pl: Placement,
        depth: u32,
        visit: &mut F,
    ) -> Result<(), EngineError> {
        if depth == 0 {
            visit(tile, pl);
            return Ok(());
        }
        let rule = ts
            .rule(tile)
            .ok_or_else(|| EngineError::UnruledTile(tile.to_string()))?;
        let lifted = pl.inflate(ts.scale);
        for (child, child_pl) in &rule.children {
            go(ts, child, lifted.compose(*child_pl), depth - 1, visit)?;
        }
        Ok(())
    }
    go(ts, tile_id, Placement::IDENTITY, depth, &mut visit)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyEntry {
    pub tile: String,
    pub transform: D4Transform,
    /// Index of the covering placement in the patch's list.
    pub placement_index: usize,
}

/// Total map over covered cells. Construction fails on double coverage,
/// reporting the first offending cell in (y, x) order.
pub fn patch_occupancy(
    ts: &Tileset,
    patch: &Patch,
) -> Result<HashMap<Cell, OccupancyEntry>, EngineError> {
    let mut map: HashMap<Cell, OccupancyEntry> = HashMap::new();
    let mut clashes: Vec<Cell> = Vec::new();
    for (index, placed) in patch.placements.iter().enumerate() {
        let proto = ts
            .tile(&placed.tile)
            .ok_or_else(|| EngineError::UnknownTile(placed.tile.clone()))?;
        for &cell in proto.shape.place(placed.placement).cells() {
            if map
                .insert(
                    cell,
                    OccupancyEntry {
                        tile: placed.tile.clone(),
                        transform: placed.placement.transform,
                        placement_index: index,
                    },
                )
                .is_some()
            {
                clashes.push(cell);
            }
        }
    }
    if let Some(&first) = clashes.iter().min_by_key(|c| (c.y, c.x)) {
        return Err(EngineError::Overlap(first));
    }
    Ok(map)
}

/// All cells covered by the patch, with multiplicity collapsed; callers that
/// need overlap detection use `patch_occupancy` or the cover analyses.
pub fn patch_cells(ts: &Tileset, patch: &Patch) -> Result<Vec<Cell>, EngineError> {
    let mut cells = Vec::new();
    for placed in &patch.placements {
        let proto = ts
            .tile(&placed.tile)
            .ok_or_else(|| EngineError::UnknownTile(placed.tile.clone()))?;
        cells.extend_from_slice(proto.shape.place(placed.placement).cells());
    }
    cells.sort_by_key(|c| (c.y, c.x));
    cells.dedup();
    Ok(cells)
}

// ---------------------------------------------------------------------------
// Patch file format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PatchDoc {
    tileset: String,
    level: u32,
    placements: Vec<PlacementDoc>,
}

#[derive(Serialize, Deserialize)]
struct PlacementDoc {
    tile: String,
    t: String,
    o: (i64, i64),
}

#[derive(Serialize, Deserialize)]
struct StreamHeader {
    tileset: String,
    level: u32,
    streaming: bool,
}

fn placement_doc(p: &PlacedTile) -> PlacementDoc {
    PlacementDoc {
        tile: p.tile.clone(),
        t: p.placement.transform.symbol().to_string(),
        o: p.placement.offset,
    }
}

fn placement_from_doc(d: PlacementDoc) -> Result<PlacedTile, String> {
    let t = D4Transform::from_symbol(&d.t).ok_or_else(|| format!("unknown transform {:?}", d.t))?;
    Ok(PlacedTile {
        tile: d.tile,
        placement: Placement::new(t, d.o),
    })
}

pub fn serialize_patch(patch: &Patch) -> Vec<u8> {
    let doc = PatchDoc {
        tileset: patch.tileset_name.clone(),
        level: patch.level,
        placements: patch.placements.iter().map(placement_doc).collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("patch serializes");
    bytes.push(b'\n');
    bytes
}

/// Write the framed streaming form: a header line, then one placement
/// object per line.
pub fn write_patch_stream<W: Write>(
    out: &mut W,
    tileset: &str,
    level: u32,
    placements: impl Iterator<Item = (String, Placement)>,
) -> std::io::Result<()> {
    let header = StreamHeader {
        tileset: tileset.to_string(),
        level,
        streaming: true,
    };
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    for (tile, pl) in placements {
        let doc = PlacementDoc {
            tile,
            t: pl.transform.symbol().to_string(),
            o: pl.offset,
        };
        serde_json::to_writer(&mut *out, &doc)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse either patch form: the single-document format or the framed
/// streaming format (header line with "streaming": true, then one placement
/// per line).
pub fn parse_patch(bytes: &[u8]) -> Result<Patch, String> {
    if let Ok(doc) = serde_json::from_slice::<PatchDoc>(bytes) {
        let mut placements = Vec::with_capacity(doc.placements.len());
        for p in doc.placements {
            placements.push(placement_from_doc(p)?);
        }
        return Ok(Patch {
            tileset_name: doc.tileset,
            level: doc.level,
            placements,
            provenance: None,
        });
    }
    let mut lines = bytes.lines();
    let first = lines
        .next()
        .ok_or_else(|| "empty patch document".to_string())?
        .map_err(|e| e.to_string())?;
    let header: StreamHeader = serde_json::from_str(&first).map_err(|e| e.to_string())?;
    let mut placements = Vec::new();
    for line in lines {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: PlacementDoc = serde_json::from_str(&line).map_err(|e| e.to_string())?;
        placements.push(placement_from_doc(doc)?);
    }
    Ok(Patch {
        tileset_name: header.tileset,
        level: header.level,
        placements,
        provenance: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::chair;
    use crate::geometry::Polyomino;

    #[test]
    fn chair_single_expansion_covers_inflated_l() {
        let ts = chair();
        let patch = expand_tile(&ts, "L", 1).unwrap();
        assert_eq!(patch.len(), 4);
        let cells = patch_cells(&ts, &patch).unwrap();
        let target = ts.tile("L").unwrap().shape.inflate(2);
        assert_eq!(cells, target.cells());
        let occ = patch_occupancy(&ts, &patch).unwrap();
        assert_eq!(occ.len(), 12);
    }

    #[test]
    fn empty_patch_expands_to_empty() {
        let ts = chair();
        let patch = Patch {
            tileset_name: ts.name.clone(),
            level: 0,
            placements: vec![],
            provenance: None,
        };
        let next = expand_patch(&ts, &patch).unwrap();
        assert!(next.is_empty());
        assert_eq!(next.level, 1);
    }

    #[test]
    fn chair_depth_two_is_exact_cover_of_inflate_4() {
        let ts = chair();
        let patch = expand_tile(&ts, "L", 2).unwrap();
        assert_eq!(patch.len(), 16);
        let cells = patch_cells(&ts, &patch).unwrap();
        let target = ts.tile("L").unwrap().shape.inflate(4);
        assert_eq!(cells, target.cells());
        patch_occupancy(&ts, &patch).unwrap();
    }

    #[test]
    fn area_conservation_and_commutation() {
        let ts = chair();
        let mut patch = expand_tile(&ts, "L", 0).unwrap();
        for d in 1..=6 {
            let next = expand_patch(&ts, &patch).unwrap();
            assert_eq!(next.len(), 4 * patch.len());
            assert_eq!(next, expand_tile(&ts, "L", d).unwrap());
            patch = next;
        }
        assert_eq!(patch.len(), 4096);
    }

    #[test]
    fn unruled_tile_is_an_error() {
        let json = br#"{"name":"x","scale":2,"metadata":{},
            "tiles":[{"id":"A","cells":[[0,0]],"marks":[]},{"id":"K","cells":[[0,0]],"marks":[]}],
            "rules":[{"parent":"A","children":[
              {"tile":"K","t":"R0","o":[0,0]},{"tile":"K","t":"R0","o":[1,0]},
              {"tile":"K","t":"R0","o":[0,1]},{"tile":"K","t":"R0","o":[1,1]}]}]}"#;
        let ts = crate::model::parse_tileset(json).unwrap();
        let patch = expand_tile(&ts, "A", 1).unwrap();
        match expand_patch(&ts, &patch) {
            Err(EngineError::UnruledTile(id)) => assert_eq!(id, "K"),
            other => panic!("expected unruled-tile error, got {other:?}"),
        }
        assert!(matches!(
            expand_tile(&ts, "A", 2),
            Err(EngineError::UnruledTile(_))
        ));
    }

    #[test]
    fn occupancy_overlap_reports_least_cell() {
        let json = br#"{"name":"x","scale":2,"metadata":{},
            "tiles":[{"id":"A","cells":[[0,0]],"marks":[]}],"rules":[]}"#;
        let ts = crate::model::parse_tileset(json).unwrap();
        let patch = Patch {
            tileset_name: ts.name.clone(),
            level: 0,
            placements: vec![
                PlacedTile {
                    tile: "A".into(),
                    placement: Placement::new(D4Transform::R0, (2, 2)),
                },
                PlacedTile {
                    tile: "A".into(),
                    placement: Placement::new(D4Transform::R90, (2, 2)),
                },
            ],
            provenance: None,
        };
        match patch_occupancy(&ts, &patch) {
            Err(EngineError::Overlap(c)) => assert_eq!(c, Cell::new(2, 2)),
            other => panic!("expected overlap, got {other:?}"),
        }
        let empty = Patch {
            tileset_name: ts.name.clone(),
            level: 0,
            placements: vec![],
            provenance: None,
        };
        assert!(patch_occupancy(&ts, &empty).unwrap().is_empty());
    }

    #[test]
    fn provenance_replays_composition() {
        let ts = chair();
        let patch = expand_tile_with_provenance(&ts, "L", 2);
        let prov = patch.provenance.as_ref().unwrap();
        // Each depth-2 placement equals the composition of its depth-1
        // ancestor's placement with the rule child it came from.
        let rule = ts.rule("L").unwrap();
        let depth1 = expand_tile(&ts, "L", 1).unwrap();
        for (i, placed) in patch.placements.iter().enumerate() {
            let path = &prov[i];
            assert_eq!(path.len(), 2);
            let ancestor = &depth1.placements[path[0] as usize];
            let lifted = ancestor.placement.inflate(ts.scale);
            let expect = lifted.compose(rule.children[path[1] as usize].1);
            assert_eq!(placed.placement, expect);
            assert_eq!(placed.tile, rule.children[path[1] as usize].0);
        }
    }

    fn expand_tile_with_provenance(ts: &Tileset, tile: &str, depth: u32) -> Patch {
        let mut patch = Patch::seed(&ts.name, tile).with_provenance();
        for _ in 0..depth {
            patch = expand_patch(ts, &patch).unwrap();
        }
        patch
    }

    #[test]
    fn visitor_matches_materialized_order() {
        let ts = chair();
        let patch = expand_tile(&ts, "L", 3).unwrap();
        let mut seen = Vec::new();
        expand_tile_visit(&ts, "L", 3, |tile, pl| {
            seen.push(PlacedTile {
                tile: tile.to_string(),
                placement: pl,
            });
        })
        .unwrap();
        assert_eq!(seen, patch.placements);
    }

    #[test]
    fn patch_round_trip_both_formats() {
        let ts = chair();
        let patch = expand_tile(&ts, "L", 2).unwrap();
        let bytes = serialize_patch(&patch);
        assert_eq!(bytes, serialize_patch(&patch));
        let back = parse_patch(&bytes).unwrap();
        assert_eq!(back.placements, patch.placements);
        assert_eq!(back.level, patch.level);

        let mut stream = Vec::new();
        write_patch_stream(
            &mut stream,
            &ts.name,
            patch.level,
            patch
                .placements
                .iter()
                .map(|p| (p.tile.clone(), p.placement)),
        )
        .unwrap();
        let back = parse_patch(&stream).unwrap();
        assert_eq!(back.placements, patch.placements);

        // Expanded placements serialize identically across runs.
        let again = expand_tile(&ts, "L", 2).unwrap();
        assert_eq!(serialize_patch(&again), bytes);
    }

    #[test]
    fn inflate_extends_connectivity_checks() {
        // place preserves cardinality and connectivity on a corpus of shapes
        let shapes = [
            Polyomino::new(vec![Cell::new(0, 0), Cell::new(1, 0), Cell::new(0, 1)]).unwrap(),
            Polyomino::new(vec![Cell::new(0, 0), Cell::new(1, 0), Cell::new(2, 0)]).unwrap(),
        ];
        for s in &shapes {
            for t in crate::geometry::D4_ALL {
                let placed = s.place(Placement::new(t, (7, -3)));
                assert_eq!(placed.area(), s.area());
                assert!(Polyomino::new(placed.cells().to_vec()).is_ok());
            }
        }
    }
}
