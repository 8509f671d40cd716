//! Tileset rewrites: pairing-evidence scans, fusion of always-grouped tile
//! pairs, congruence deduplication, and elimination of tiles expressible as
//! compositions of others. Every rewrite is closed over valid tilesets: the
//! result must pass the exact-cover validator or the operation fails.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::engine::expand_tile;
use crate::error::AlgebraError;
use crate::geometry::{Cell, Placement, Polyomino, D4_ALL};
use crate::model::{
    merge_segments, validate_tileset, MarkLayer, MarkSegment, SubstitutionRule, TilePrototype,
    Tileset,
};

/// A fixed relative arrangement of tile_b in tile_a's frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRelation {
    pub tile_a: String,
    pub tile_b: String,
    pub relative: Placement,
}

#[derive(Debug, Clone)]
pub struct PairingEvidence {
    pub depth: u32,
    pub total_a: usize,
    pub total_b: usize,
    pub matched: usize,
    /// Unpaired occurrences as (seed tile, placement within its expansion).
    pub unmatched_a: Vec<(String, Placement)>,
    pub unmatched_b: Vec<(String, Placement)>,
}

impl PairingEvidence {
    /// The grouping conjecture holds at this depth iff nothing is unpaired.
    pub fn holds(&self) -> bool {
        self.unmatched_a.is_empty() && self.unmatched_b.is_empty()
    }
}

/// Expand every ruled tile to the given depth and greedily match
/// occurrences of tile_a with a tile_b at the stated relative placement.
/// The relation is frame-relative, so globally rotated or reflected pairs
/// match as well. Ties are resolved by scanning a-occurrences in least
/// (y, x) offset order.
pub fn find_pairings(
    ts: &Tileset,
    rel: &PairRelation,
    depth: u32,
) -> Result<PairingEvidence, AlgebraError> {
    for id in [&rel.tile_a, &rel.tile_b] {
        if ts.tile(id).is_none() {
            return Err(AlgebraError::UnknownTile(id.clone()));
        }
    }
    let mut evidence = PairingEvidence {
        depth,
        total_a: 0,
        total_b: 0,
        matched: 0,
        unmatched_a: Vec::new(),
        unmatched_b: Vec::new(),
    };
    let same = rel.tile_a == rel.tile_b;
    for tile in &ts.tiles {
        if ts.rule(&tile.id).is_none() {
            continue;
        }
        let patch = expand_tile(ts, &tile.id, depth)?;
        let mut a_occ: Vec<Placement> = Vec::new();
        let mut b_occ: Vec<Placement> = Vec::new();
        for placed in &patch.placements {
            if placed.tile == rel.tile_a {
                a_occ.push(placed.placement);
            }
            if placed.tile == rel.tile_b {
                b_occ.push(placed.placement);
            }
        }
        evidence.total_a += a_occ.len();
        evidence.total_b += b_occ.len();
        a_occ.sort_by_key(|p| (p.offset.1, p.offset.0, p.transform));
        let b_at: HashMap<Placement, usize> =
            b_occ.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let mut b_used: HashSet<usize> = HashSet::new();
        // In the self-pairing case an occurrence consumed in the b role is
        // no longer available in the a role either.
        let mut a_used_as_b: HashSet<Placement> = HashSet::new();
        for pa in &a_occ {
            if same && a_used_as_b.contains(pa) {
                continue;
            }
            let partner = pa.compose(rel.relative);
            match b_at.get(&partner) {
                Some(&i) if !b_used.contains(&i) && (!same || partner != *pa) => {
                    b_used.insert(i);
                    if same {
                        a_used_as_b.insert(partner);
                    }
                    evidence.matched += 1;
                }
                _ => evidence.unmatched_a.push((tile.id.clone(), *pa)),
            }
        }
        // When a == b every unconsumed occurrence is already reported by
        // the a-role loop above.
        if !same {
            for (i, pb) in b_occ.iter().enumerate() {
                if !b_used.contains(&i) {
                    evidence.unmatched_b.push((tile.id.clone(), *pb));
                }
            }
        }
    }
    Ok(evidence)
}

fn placed_marks(proto: &TilePrototype, pl: Placement) -> Vec<MarkSegment> {
    proto.marks.iter().map(|m| m.placed(pl)).collect()
}

/// Replace each matched (a, b) child pair in a rule's child list with a
/// single child of the fused tile at the a position. Errors if any a or b
/// occurrence in the list is unpaired.
fn fuse_child_list(
    children: &[(String, Placement)],
    rel: &PairRelation,
    new_id: &str,
) -> Result<Vec<(String, Placement)>, AlgebraError> {
    let mut consumed = vec![false; children.len()];
    let mut out: Vec<(String, Placement)> = Vec::new();
    let position: HashMap<(String, Placement), usize> = children
        .iter()
        .enumerate()
        .map(|(i, (id, pl))| ((id.clone(), *pl), i))
        .collect();
    for (i, (id, pl)) in children.iter().enumerate() {
        if consumed[i] {
            continue;
        }
        if id == &rel.tile_a {
            let partner = (rel.tile_b.clone(), pl.compose(rel.relative));
            match position.get(&partner) {
                Some(&j) if !consumed[j] && j != i => {
                    consumed[i] = true;
                    consumed[j] = true;
                    out.push((new_id.to_string(), *pl));
                }
                _ => {
                    return Err(AlgebraError::UnmatchedOccurrences {
                        a: rel.tile_a.clone(),
                        b: rel.tile_b.clone(),
                        unmatched_a: 1,
                        unmatched_b: 0,
                        depth: 1,
                    })
                }
            }
        } else if id == &rel.tile_b {
            // Leave for its a partner; if none claims it the scan below
            // reports it.
            continue;
        } else {
            consumed[i] = true;
            out.push((id.clone(), *pl));
        }
    }
    for (i, (id, _)) in children.iter().enumerate() {
        if id == &rel.tile_b && !consumed[i] {
            return Err(AlgebraError::UnmatchedOccurrences {
                a: rel.tile_a.clone(),
                b: rel.tile_b.clone(),
                unmatched_a: 0,
                unmatched_b: 1,
                depth: 1,
            });
        }
    }
    Ok(out)
}

/// Fuse a totally-paired (a, b) relation into one new prototile. The new
/// shape and marks are the union of the pair; each matched child pair in
/// every rule becomes one child of the new tile; the new tile's rule is
/// rebuilt from the pair of original rules; a and b are removed when no
/// longer referenced.
pub fn fuse(ts: &Tileset, rel: &PairRelation, new_id: &str) -> Result<Tileset, AlgebraError> {
    if ts.tile(new_id).is_some() {
        return Err(AlgebraError::IdExists(new_id.to_string()));
    }
    let a = ts
        .tile(&rel.tile_a)
        .ok_or_else(|| AlgebraError::UnknownTile(rel.tile_a.clone()))?;
    let b = ts
        .tile(&rel.tile_b)
        .ok_or_else(|| AlgebraError::UnknownTile(rel.tile_b.clone()))?;
    // Pairs must be total within rules, and still total one level deeper
    // where cross-boundary groupings would become visible.
    for depth in [1, 2] {
        let evidence = find_pairings(ts, rel, depth)?;
        if !evidence.holds() {
            return Err(AlgebraError::UnmatchedOccurrences {
                a: rel.tile_a.clone(),
                b: rel.tile_b.clone(),
                unmatched_a: evidence.unmatched_a.len(),
                unmatched_b: evidence.unmatched_b.len(),
                depth,
            });
        }
    }

    let mut cells = a.shape.cells().to_vec();
    cells.extend_from_slice(b.shape.place(rel.relative).cells());
    let shape = Polyomino::new(cells).map_err(|e| AlgebraError::BadPairRelation {
        a: rel.tile_a.clone(),
        b: rel.tile_b.clone(),
        reason: e.to_string(),
    })?;
    let mut marks = a.marks.clone();
    marks.extend(b.marks.iter().map(|m| m.placed(rel.relative)));
    let color = match (&a.color, &b.color) {
        (Some(x), Some(y)) if x == y => Some(x.clone()),
        _ => None,
    };
    let fused = TilePrototype {
        id: new_id.to_string(),
        shape,
        marks,
        color,
    };

    // Rebuild every rule with pairs collapsed; build the fused rule from
    // the two originals, collapsing pairs inside it as well (groupings that
    // straddle the old a/b border become visible in the union).
    let mut rules: Vec<SubstitutionRule> = Vec::new();
    for rule in &ts.rules {
        if rule.parent == rel.tile_a || rule.parent == rel.tile_b {
            continue;
        }
        rules.push(SubstitutionRule {
            parent: rule.parent.clone(),
            children: fuse_child_list(&rule.children, rel, new_id)?,
        });
    }
    if let (Some(rule_a), Some(rule_b)) = (ts.rule(&rel.tile_a), ts.rule(&rel.tile_b)) {
        let lifted = rel.relative.inflate(ts.scale);
        let mut combined = rule_a.children.clone();
        combined.extend(
            rule_b
                .children
                .iter()
                .map(|(id, q)| (id.clone(), lifted.compose(*q))),
        );
        rules.push(SubstitutionRule {
            parent: new_id.to_string(),
            children: fuse_child_list(&combined, rel, new_id)?,
        });
    }

    let referenced: HashSet<&str> = rules
        .iter()
        .flat_map(|r| r.children.iter().map(|(id, _)| id.as_str()))
        .collect();
    let mut tiles: Vec<TilePrototype> = Vec::new();
    for t in &ts.tiles {
        if (t.id == rel.tile_a || t.id == rel.tile_b) && !referenced.contains(t.id.as_str()) {
            continue;
        }
        tiles.push(t.clone());
    }
    tiles.push(fused);
    let kept: HashSet<&str> = tiles.iter().map(|t| t.id.as_str()).collect();
    rules.retain(|r| kept.contains(r.parent.as_str()));

    let out = Tileset {
        name: ts.name.clone(),
        scale: ts.scale,
        metadata: ts.metadata.clone(),
        tiles,
        rules,
    };
    let report = validate_tileset(&out).map_err(|e| AlgebraError::InvalidResult(e.to_string()))?;
    if !report.pass {
        return Err(AlgebraError::InvalidResult(format!(
            "fused tileset fails exact-cover validation for {:?}",
            report.failing_parents()
        )));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Dedup
// ---------------------------------------------------------------------------

/// All canonical placements of (shape, marks): the D4-plus-translation
/// images minimizing the (cells, marks) key.
fn canonical_placements(proto: &TilePrototype) -> (Vec<Placement>, (Vec<Cell>, Vec<MarkSegment>)) {
    let mut best: Option<(Vec<Cell>, Vec<MarkSegment>)> = None;
    let mut placements = Vec::new();
    for t in D4_ALL {
        let placed = proto.shape.place(Placement::new(t, (0, 0)));
        let (norm, shift) = placed.normalized();
        let pl = Placement::new(t, shift);
        let mut marks = placed_marks(proto, pl);
        marks.sort_unstable();
        let key = (norm.cells().to_vec(), marks);
        match &best {
            None => {
                best = Some(key);
                placements = vec![pl];
            }
            Some(b) => {
                if key < *b {
                    best = Some(key);
                    placements = vec![pl];
                } else if key == *b {
                    placements.push(pl);
                }
            }
        }
    }
    (placements, best.expect("tile has cells"))
}

type RuleSignature = Vec<(String, Vec<Cell>, Vec<MarkSegment>)>;

/// Rule content as seen from a canonical placement: for each child, its
/// class representative, covered cells, and placed marks. Child placements
/// themselves are not compared, so congruent-but-differently-anchored
/// children still match.
fn rule_signature(
    ts: &Tileset,
    parent: &str,
    pl: Placement,
    class_of: &BTreeMap<String, String>,
) -> Option<RuleSignature> {
    let rule = ts.rule(parent)?;
    let lifted = pl.inflate(ts.scale);
    let mut sig: RuleSignature = Vec::with_capacity(rule.children.len());
    for (child, q) in &rule.children {
        let total = lifted.compose(*q);
        let proto = ts.tile(child).expect("ids resolve");
        let cells = proto.shape.place(total).cells().to_vec();
        let mut marks = placed_marks(proto, total);
        marks.sort_unstable();
        sig.push((class_of[child].clone(), cells, marks));
    }
    sig.sort();
    Some(sig)
}

/// Merge tiles whose canonical shape, marks, and rule-up-to-congruence
/// coincide. Returns the rewritten tileset and the mapping from removed ids
/// to their kept representatives.
pub fn dedup(ts: &Tileset) -> Result<(Tileset, BTreeMap<String, String>), AlgebraError> {
    // Initial classes: canonical (shape, marks) key.
    let mut canon: HashMap<String, (Vec<Placement>, (Vec<Cell>, Vec<MarkSegment>))> =
        HashMap::new();
    for t in &ts.tiles {
        canon.insert(t.id.clone(), canonical_placements(t));
    }
    let mut class_of: BTreeMap<String, String> = BTreeMap::new();
    {
        let mut by_key: BTreeMap<(Vec<Cell>, Vec<MarkSegment>), Vec<String>> = BTreeMap::new();
        for t in &ts.tiles {
            by_key
                .entry(canon[&t.id].1.clone())
                .or_default()
                .push(t.id.clone());
        }
        for (_, mut ids) in by_key {
            ids.sort();
            let rep = ids[0].clone();
            for id in ids {
                class_of.insert(id, rep.clone());
            }
        }
    }
    // Refine by rule signatures until stable.
    loop {
        let mut next: BTreeMap<String, String> = BTreeMap::new();
        let mut by_key: BTreeMap<
            ((Vec<Cell>, Vec<MarkSegment>), Option<RuleSignature>),
            Vec<String>,
        > = BTreeMap::new();
        for t in &ts.tiles {
            let (pls, key) = &canon[&t.id];
            let sig = pls
                .iter()
                .filter_map(|&pl| rule_signature(ts, &t.id, pl, &class_of))
                .min();
            by_key
                .entry((key.clone(), sig))
                .or_default()
                .push(t.id.clone());
        }
        for (_, mut ids) in by_key {
            ids.sort();
            let rep = ids[0].clone();
            for id in ids {
                next.insert(id, rep.clone());
            }
        }
        if next == class_of {
            break;
        }
        class_of = next;
    }

    let mut mapping: BTreeMap<String, String> = BTreeMap::new();
    // Placement h per removed tile v: kept.place(h) reproduces v exactly,
    // marks included.
    let mut align: HashMap<String, Placement> = HashMap::new();
    for t in &ts.tiles {
        let rep = &class_of[&t.id];
        if rep == &t.id {
            continue;
        }
        mapping.insert(t.id.clone(), rep.clone());
        let kept = ts.tile(rep).expect("representative exists");
        let h = alignment_placement(kept, t).ok_or_else(|| {
            AlgebraError::InvalidResult(format!(
                "no exact alignment from {:?} onto {:?}",
                rep, t.id
            ))
        })?;
        align.insert(t.id.clone(), h);
    }

    let tiles: Vec<TilePrototype> = ts
        .tiles
        .iter()
        .filter(|t| class_of[&t.id] == t.id)
        .cloned()
        .collect();
    let mut rules: Vec<SubstitutionRule> = Vec::new();
    for rule in &ts.rules {
        if class_of[&rule.parent] != rule.parent {
            continue;
        }
        let children = rule
            .children
            .iter()
            .map(|(id, q)| {
                let rep = class_of[id].clone();
                let q = match align.get(id) {
                    Some(h) => q.compose(*h),
                    None => *q,
                };
                (rep, q)
            })
            .collect();
        rules.push(SubstitutionRule {
            parent: rule.parent.clone(),
            children,
        });
    }
    let out = Tileset {
        name: ts.name.clone(),
        scale: ts.scale,
        metadata: ts.metadata.clone(),
        tiles,
        rules,
    };
    let report = validate_tileset(&out).map_err(|e| AlgebraError::InvalidResult(e.to_string()))?;
    if !report.pass {
        return Err(AlgebraError::InvalidResult(
            "deduplicated tileset fails exact-cover validation".into(),
        ));
    }
    Ok((out, mapping))
}

/// Placement h with from.place(h) == to, shapes and marks both.
fn alignment_placement(from: &TilePrototype, to: &TilePrototype) -> Option<Placement> {
    let to_marks: Vec<MarkSegment> = {
        let mut m = to.marks.clone();
        m.sort_unstable();
        m
    };
    for t in D4_ALL {
        let placed = from.shape.place(Placement::new(t, (0, 0)));
        let (fx, fy, _, _) = placed.bounds();
        let (tx, ty, _, _) = to.shape.bounds();
        let pl = Placement::new(t, (tx - fx, ty - fy));
        if from.shape.place(pl) != to.shape {
            continue;
        }
        let mut marks = placed_marks(from, pl);
        marks.sort_unstable();
        if marks == to_marks {
            return Some(pl);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Eliminate
// ---------------------------------------------------------------------------

/// A tile expressed as an exact, mark-reproducing composition of other
/// prototiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub target: String,
    pub parts: Vec<(String, Placement)>,
}

/// Check the decomposition: parts exactly cover the target's shape and the
/// merged tile-layer marks reproduce the target's, segment for segment.
/// Super layers are regenerated via `derived_super_marks` downstream, so
/// they are not compared.
pub fn check_decomposition(ts: &Tileset, d: &Decomposition) -> Result<(), AlgebraError> {
    let target = ts
        .tile(&d.target)
        .ok_or_else(|| AlgebraError::UnknownTile(d.target.clone()))?;
    let mut counts: HashMap<Cell, u32> = HashMap::new();
    let mut part_marks: Vec<MarkSegment> = Vec::new();
    for (id, pl) in &d.parts {
        if id == &d.target {
            return Err(AlgebraError::InvalidDecomposition {
                target: d.target.clone(),
                reason: "a decomposition cannot use the target itself".into(),
            });
        }
        let proto = ts
            .tile(id)
            .ok_or_else(|| AlgebraError::UnknownTile(id.clone()))?;
        for &c in proto.shape.place(*pl).cells() {
            *counts.entry(c).or_insert(0) += 1;
        }
        part_marks.extend(
            proto
                .marks
                .iter()
                .filter(|m| m.layer == MarkLayer::Tile)
                .map(|m| m.placed(*pl)),
        );
    }
    let mut overlap: Vec<Cell> = counts.iter().filter(|(_, &n)| n > 1).map(|(&c, _)| c).collect();
    let mut holes: Vec<Cell> = target
        .shape
        .cells()
        .iter()
        .filter(|c| !counts.contains_key(c))
        .copied()
        .collect();
    let mut strays: Vec<Cell> = counts
        .keys()
        .filter(|c| !target.shape.contains(**c))
        .copied()
        .collect();
    overlap.sort_by_key(|c| (c.y, c.x));
    holes.sort_by_key(|c| (c.y, c.x));
    strays.sort_by_key(|c| (c.y, c.x));
    if !overlap.is_empty() || !holes.is_empty() || !strays.is_empty() {
        let fmt = |cells: &[Cell]| {
            cells
                .iter()
                .map(Cell::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        };
        return Err(AlgebraError::InvalidDecomposition {
            target: d.target.clone(),
            reason: format!(
                "cover defects: overlaps [{}], holes [{}], strays [{}]",
                fmt(&overlap),
                fmt(&holes),
                fmt(&strays)
            ),
        });
    }
    let target_tile_marks: Vec<MarkSegment> = target
        .marks
        .iter()
        .filter(|m| m.layer == MarkLayer::Tile)
        .copied()
        .collect();
    if merge_segments(&target_tile_marks) != merge_segments(&part_marks) {
        return Err(AlgebraError::InvalidDecomposition {
            target: d.target.clone(),
            reason: "part marks do not reproduce the target's tile-layer marks".into(),
        });
    }
    Ok(())
}

/// Remove a tile by rewriting every child occurrence of it as the composed
/// parts of a valid decomposition. The target's own rule is discarded.
pub fn eliminate(ts: &Tileset, d: &Decomposition) -> Result<Tileset, AlgebraError> {
    check_decomposition(ts, d)?;
    let tiles: Vec<TilePrototype> = ts
        .tiles
        .iter()
        .filter(|t| t.id != d.target)
        .cloned()
        .collect();
    let mut rules: Vec<SubstitutionRule> = Vec::new();
    for rule in &ts.rules {
        if rule.parent == d.target {
            continue;
        }
        let mut children = Vec::with_capacity(rule.children.len());
        for (id, q) in &rule.children {
            if id == &d.target {
                for (part, r) in &d.parts {
                    children.push((part.clone(), q.compose(*r)));
                }
            } else {
                children.push((id.clone(), *q));
            }
        }
        rules.push(SubstitutionRule {
            parent: rule.parent.clone(),
            children,
        });
    }
    let out = Tileset {
        name: ts.name.clone(),
        scale: ts.scale,
        metadata: ts.metadata.clone(),
        tiles,
        rules,
    };
    let report = validate_tileset(&out).map_err(|e| AlgebraError::InvalidResult(e.to_string()))?;
    if !report.pass {
        return Err(AlgebraError::InvalidResult(
            "tileset fails exact-cover validation after elimination".into(),
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Decomposition search
// ---------------------------------------------------------------------------

/// Exhaustive exact-cover search of the target's shape by placements of the
/// other prototiles, filtered by tile-layer mark reproduction. Results are
/// deduplicated up to symmetry of the parts (identical labeled covers with
/// identical placed marks count once) and sorted deterministically.
pub fn discover_decompositions(
    ts: &Tileset,
    target_id: &str,
    max_parts: usize,
) -> Result<Vec<Decomposition>, AlgebraError> {
    assert!(max_parts <= 4, "decomposition search is guarded at 4 parts");
    let target = ts
        .tile(target_id)
        .ok_or_else(|| AlgebraError::UnknownTile(target_id.to_string()))?;
    let region = &target.shape;

    // Candidate placements of every other prototile inside the region,
    // deduplicated by (tile, cells, placed marks) so symmetric placements
    // of a symmetric tile count once.
    #[derive(Clone)]
    struct Candidate {
        tile: String,
        placement: Placement,
        cells: Vec<Cell>,
    }
    let mut seen: HashSet<(String, Vec<Cell>, Vec<MarkSegment>)> = HashSet::new();
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut tiles_sorted: Vec<&TilePrototype> =
        ts.tiles.iter().filter(|t| t.id != target_id).collect();
    tiles_sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for proto in tiles_sorted {
        if proto.shape.area() > region.area() {
            continue;
        }
        for t in D4_ALL {
            let placed = proto.shape.place(Placement::new(t, (0, 0)));
            for anchor in region.cells() {
                for base in placed.cells() {
                    let off = (anchor.x - base.x, anchor.y - base.y);
                    let pl = Placement::new(t, off);
                    let image = proto.shape.place(pl);
                    if !image.cells().iter().all(|&c| region.contains(c)) {
                        continue;
                    }
                    let mut marks = placed_marks(proto, pl);
                    marks.retain(|m| m.layer == MarkLayer::Tile);
                    marks.sort_unstable();
                    let key = (proto.id.clone(), image.cells().to_vec(), marks);
                    if seen.insert(key) {
                        candidates.push(Candidate {
                            tile: proto.id.clone(),
                            placement: pl,
                            cells: image.cells().to_vec(),
                        });
                    }
                }
            }
        }
    }
    candidates.sort_by(|a, b| (&a.tile, &a.placement).cmp(&(&b.tile, &b.placement)));

    let all_cells: Vec<Cell> = region.cells().to_vec();
    let cell_index: HashMap<Cell, usize> =
        all_cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let per_cell: Vec<Vec<usize>> = {
        let mut v = vec![Vec::new(); all_cells.len()];
        for (ci, cand) in candidates.iter().enumerate() {
            for c in &cand.cells {
                v[cell_index[c]].push(ci);
            }
        }
        v
    };

    let mut results: Vec<Decomposition> = Vec::new();
    let mut covered = vec![false; all_cells.len()];
    let mut chosen: Vec<usize> = Vec::new();

    fn search(
        candidates: &[Candidate],
        per_cell: &[Vec<usize>],
        cell_index: &HashMap<Cell, usize>,
        covered: &mut Vec<bool>,
        chosen: &mut Vec<usize>,
        max_parts: usize,
        results: &mut Vec<Vec<usize>>,
    ) {
        let Some(first) = covered.iter().position(|&c| !c) else {
            results.push(chosen.clone());
            return;
        };
        if chosen.len() == max_parts {
            return;
        }
        for &ci in &per_cell[first] {
            // Avoid permutations: only allow candidates in ascending order
            // unless needed to cover the first free cell anyway; the first
            // free cell constraint already prevents permutations.
            let cand = &candidates[ci];
            if cand.cells.iter().any(|c| covered[cell_index[c]]) {
                continue;
            }
            for c in &cand.cells {
                covered[cell_index[c]] = true;
            }
            chosen.push(ci);
            search(
                candidates, per_cell, cell_index, covered, chosen, max_parts, results,
            );
            chosen.pop();
            for c in &cand.cells {
                covered[cell_index[c]] = false;
            }
        }
    }

    let mut raw: Vec<Vec<usize>> = Vec::new();
    search(
        &candidates,
        &per_cell,
        &cell_index,
        &mut covered,
        &mut chosen,
        max_parts,
        &mut raw,
    );
    for pick in raw {
        let d = Decomposition {
            target: target_id.to_string(),
            parts: pick
                .iter()
                .map(|&ci| (candidates[ci].tile.clone(), candidates[ci].placement))
                .collect(),
        };
        if check_decomposition(ts, &d).is_ok() {
            results.push(d);
        }
    }
    results.sort_by(|a, b| {
        (a.parts.len(), &a.parts).cmp(&(b.parts.len(), &b.parts))
    });
    results.dedup();
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{expand_tile, patch_cells};
    use crate::geometry::D4Transform;
    use crate::model::parse_tileset;

    fn paired_squares() -> Tileset {
        parse_tileset(
            br#"{"name":"pairs","scale":2,"metadata":{},
          "tiles":[
            {"id":"B","cells":[[0,0]],"marks":[]},
            {"id":"W","cells":[[0,0]],"marks":[]}
          ],
          "rules":[
            {"parent":"W","children":[
              {"tile":"W","t":"R0","o":[0,0]},{"tile":"B","t":"R0","o":[1,0]},
              {"tile":"W","t":"R0","o":[0,1]},{"tile":"B","t":"R0","o":[1,1]}]},
            {"parent":"B","children":[
              {"tile":"W","t":"R0","o":[0,0]},{"tile":"B","t":"R0","o":[1,0]},
              {"tile":"W","t":"R0","o":[0,1]},{"tile":"B","t":"R0","o":[1,1]}]}
          ]}"#,
        )
        .unwrap()
    }

    fn rel_wb() -> PairRelation {
        PairRelation {
            tile_a: "W".into(),
            tile_b: "B".into(),
            relative: Placement::new(D4Transform::R0, (1, 0)),
        }
    }

    #[test]
    fn paired_squares_fully_match() {
        let ts = paired_squares();
        for depth in 1..=4 {
            let ev = find_pairings(&ts, &rel_wb(), depth).unwrap();
            assert!(ev.holds(), "depth {depth}: {ev:?}");
            assert_eq!(ev.total_a, ev.matched);
            assert_eq!(ev.total_b, ev.matched);
        }
    }

    #[test]
    fn chair_self_pairing_reports_unmatched() {
        let ts = crate::assets::chair();
        let rel = PairRelation {
            tile_a: "L".into(),
            tile_b: "L".into(),
            relative: Placement::new(D4Transform::R90, (3, 0)),
        };
        let ev = find_pairings(&ts, &rel, 2).unwrap();
        assert!(!ev.holds());
        assert!(!ev.unmatched_a.is_empty() || !ev.unmatched_b.is_empty());
        // And fuse refuses.
        assert!(matches!(
            fuse(&ts, &rel, "LL"),
            Err(AlgebraError::UnmatchedOccurrences { .. })
        ));
    }

    #[test]
    fn fuse_paired_squares_yields_single_domino() {
        let ts = paired_squares();
        let fused = fuse(&ts, &rel_wb(), "D").unwrap();
        assert_eq!(fused.tiles.len(), 1);
        assert_eq!(fused.tiles[0].id, "D");
        assert_eq!(fused.tiles[0].shape.area(), 2);
        assert_eq!(fused.rules.len(), 1);
        assert_eq!(fused.rules[0].children.len(), 4);
        assert!(validate_tileset(&fused).unwrap().pass);

        // Fusion preserves label-forgetting occupancy for depths up to 3.
        for depth in 1..=3 {
            let before = patch_cells(&ts, &expand_tile(&ts, "W", depth).unwrap()).unwrap();
            let after = patch_cells(&fused, &expand_tile(&fused, "D", depth).unwrap()).unwrap();
            // W's expansion covers half of D's seed frame; compare against
            // the union of the pair instead.
            let mut pair = before.clone();
            pair.extend(
                patch_cells(&ts, &{
                    let mut p = expand_tile(&ts, "B", depth).unwrap();
                    let k = ts.scale.pow(depth);
                    for placed in &mut p.placements {
                        placed.placement = Placement::new(
                            D4Transform::R0,
                            (k, 0),
                        )
                        .compose(placed.placement);
                    }
                    p
                })
                .unwrap(),
            );
            pair.sort_by_key(|c| (c.y, c.x));
            pair.dedup();
            assert_eq!(after, pair, "depth {depth}");
        }
    }

    #[test]
    fn dedup_merges_rotated_copy() {
        // L1 plus its R180 image, with the rule conjugated through the
        // congruence so both substitution systems are identical up to the
        // rotation and the tile relabeling.
        let base = crate::assets::chair();
        let l1 = base.tile("L").unwrap();
        let g = Placement::new(D4Transform::R180, (2, 2));
        let l2_shape = l1.shape.place(g);
        let lifted_g = g.inflate(base.scale);
        let g_inv = g.inverse();
        let rule1 = base.rule("L").unwrap();
        let conj: Vec<(String, Placement)> = rule1
            .children
            .iter()
            .map(|(_, q)| ("L2".to_string(), lifted_g.compose(*q).compose(g_inv)))
            .collect();
        let ts = Tileset {
            name: "dup".into(),
            scale: 2,
            metadata: Default::default(),
            tiles: vec![
                TilePrototype {
                    id: "L1".into(),
                    shape: l1.shape.clone(),
                    marks: vec![],
                    color: None,
                },
                TilePrototype {
                    id: "L2".into(),
                    shape: l2_shape,
                    marks: vec![],
                    color: None,
                },
            ],
            rules: vec![
                SubstitutionRule {
                    parent: "L1".into(),
                    children: rule1
                        .children
                        .iter()
                        .map(|(_, q)| ("L1".to_string(), *q))
                        .collect(),
                },
                SubstitutionRule {
                    parent: "L2".into(),
                    children: conj,
                },
            ],
        };
        assert!(validate_tileset(&ts).unwrap().pass);
        let (out, mapping) = dedup(&ts).unwrap();
        assert_eq!(out.tiles.len(), 1);
        assert_eq!(mapping.get("L2"), Some(&"L1".to_string()));
        assert!(validate_tileset(&out).unwrap().pass);
    }

    #[test]
    fn dedup_keeps_distinct_tiles() {
        let ts = paired_squares();
        // W and B have equal shapes and equal rules; they merge. To check
        // the negative case, give B a distinguishing mark.
        let mut marked = ts.clone();
        marked.tiles[0]
            .marks
            .push(MarkSegment::new(MarkLayer::Tile, (0, 1), (2, 1)));
        let (out, mapping) = dedup(&marked).unwrap();
        assert_eq!(out.tiles.len(), 2);
        assert!(mapping.is_empty());
    }

    #[test]
    fn eliminate_redundant_domino() {
        let ts = parse_tileset(
            br#"{"name":"red","scale":2,"metadata":{},
          "tiles":[
            {"id":"D","cells":[[0,0],[1,0]],"marks":[]},
            {"id":"R","cells":[[0,0],[1,0],[0,1],[1,1]],"marks":[]},
            {"id":"S","cells":[[0,0]],"marks":[]}
          ],
          "rules":[
            {"parent":"S","children":[
              {"tile":"S","t":"R0","o":[0,0]},{"tile":"S","t":"R0","o":[1,0]},
              {"tile":"S","t":"R0","o":[0,1]},{"tile":"S","t":"R0","o":[1,1]}]},
            {"parent":"D","children":[
              {"tile":"S","t":"R0","o":[0,0]},{"tile":"S","t":"R0","o":[1,0]},
              {"tile":"S","t":"R0","o":[2,0]},{"tile":"S","t":"R0","o":[3,0]},
              {"tile":"S","t":"R0","o":[0,1]},{"tile":"S","t":"R0","o":[1,1]},
              {"tile":"S","t":"R0","o":[2,1]},{"tile":"S","t":"R0","o":[3,1]}]},
            {"parent":"R","children":[
              {"tile":"D","t":"R0","o":[0,0]},{"tile":"D","t":"R0","o":[2,0]},
              {"tile":"D","t":"R0","o":[0,1]},{"tile":"D","t":"R0","o":[2,1]},
              {"tile":"D","t":"R0","o":[0,2]},{"tile":"D","t":"R0","o":[2,2]},
              {"tile":"D","t":"R0","o":[0,3]},{"tile":"D","t":"R0","o":[2,3]}]}
          ]}"#,
        )
        .unwrap();
        assert!(validate_tileset(&ts).unwrap().pass);
        let d = Decomposition {
            target: "D".into(),
            parts: vec![
                ("S".into(), Placement::new(D4Transform::R0, (0, 0))),
                ("S".into(), Placement::new(D4Transform::R0, (1, 0))),
            ],
        };
        let out = eliminate(&ts, &d).unwrap();
        assert_eq!(out.tiles.len(), 2);
        assert!(out.tile("D").is_none());
        assert!(validate_tileset(&out).unwrap().pass);
        // Covered-cell sets of rule expansions are unchanged.
        for depth in 1..=2 {
            let before = patch_cells(&ts, &expand_tile(&ts, "R", depth).unwrap()).unwrap();
            let after = patch_cells(&out, &expand_tile(&out, "R", depth).unwrap()).unwrap();
            assert_eq!(before, after);
        }

        // A decomposition with a hole is rejected and lists the missing cell.
        let bad = Decomposition {
            target: "D".into(),
            parts: vec![("S".into(), Placement::new(D4Transform::R0, (0, 0)))],
        };
        match eliminate(&ts, &bad) {
            Err(AlgebraError::InvalidDecomposition { reason, .. }) => {
                assert!(reason.contains("(1,0)"), "reason: {reason}");
            }
            other => panic!("expected invalid decomposition, got {other:?}"),
        }
    }

    #[test]
    fn discover_decompositions_examples() {
        let ts = parse_tileset(
            br#"{"name":"disc","scale":2,"metadata":{},
          "tiles":[
            {"id":"D","cells":[[0,0],[1,0]],"marks":[]},
            {"id":"L","cells":[[0,0],[1,0],[0,1]],"marks":[]},
            {"id":"S","cells":[[0,0]],"marks":[]}
          ],
          "rules":[]}"#,
        )
        .unwrap();
        let ds = discover_decompositions(&ts, "D", 4).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].parts.len(), 2);
        assert!(ds[0].parts.iter().all(|(id, _)| id == "S"));

        // With only the unit square available an L-tromino has exactly one
        // decomposition, three squares.
        let squares_only = parse_tileset(
            br#"{"name":"sq","scale":2,"metadata":{},
          "tiles":[
            {"id":"L","cells":[[0,0],[1,0],[0,1]],"marks":[]},
            {"id":"S","cells":[[0,0]],"marks":[]}
          ],
          "rules":[]}"#,
        )
        .unwrap();
        let ds = discover_decompositions(&squares_only, "L", 4).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].parts.len(), 3);

        // With the domino also available there are two more ways.
        let ds = discover_decompositions(&ts, "L", 4).unwrap();
        assert_eq!(ds.len(), 3);

        // Unit square target with only dominoes available: area parity.
        let ts2 = parse_tileset(
            br#"{"name":"disc2","scale":2,"metadata":{},
          "tiles":[
            {"id":"D","cells":[[0,0],[1,0]],"marks":[]},
            {"id":"S","cells":[[0,0]],"marks":[]}
          ],
          "rules":[]}"#,
        )
        .unwrap();
        let ds = discover_decompositions(&ts2, "S", 4).unwrap();
        assert!(ds.is_empty());
    }
}
