//! Patch analyses: cover integrity, curve tracing and Fibonacci-snowflake
//! matching, stitch statistics, bar extraction, periodicity scans, and
//! substitution-matrix statistics.
//!
//! Every pass/fail decision here is integer-exact; floating point appears
//! only in the power-iteration eigenvector and the distances reported from
//! it.

use std::collections::{BTreeMap, HashMap};

use crate::engine::{self, Patch};
use crate::error::{AnalysisError, EngineError};
use crate::geometry::{Cell, D4Transform, Turn, TurnWord};
use crate::model::{merge_segments, MarkLayer, MarkSegment, Tileset};

// ---------------------------------------------------------------------------
// Cover checking
// ---------------------------------------------------------------------------

/// Overlaps are multiply-covered cells. Holes are uncovered cells interior
/// to the patch hull: complement components that do not touch the bounding
/// box. The ragged outer boundary of a patch is not a defect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchCoverReport {
    pub overlaps: Vec<Cell>,
    pub holes: Vec<Cell>,
}

impl PatchCoverReport {
    pub fn clean(&self) -> bool {
        self.overlaps.is_empty() && self.holes.is_empty()
    }
}

struct CountGrid {
    min_x: i64,
    min_y: i64,
    width: usize,
    height: usize,
    counts: Vec<u8>,
}

impl CountGrid {
    fn new(min_x: i64, min_y: i64, max_x: i64, max_y: i64) -> CountGrid {
        let width = (max_x - min_x + 1) as usize;
        let height = (max_y - min_y + 1) as usize;
        CountGrid {
            min_x,
            min_y,
            width,
            height,
            counts: vec![0; width * height],
        }
    }

    fn bump(&mut self, c: Cell) {
        let i = self.index(c);
        self.counts[i] = self.counts[i].saturating_add(1);
    }

    fn index(&self, c: Cell) -> usize {
        let x = (c.x - self.min_x) as usize;
        let y = (c.y - self.min_y) as usize;
        y * self.width + x
    }

    fn cell(&self, i: usize) -> Cell {
        Cell::new(
            self.min_x + (i % self.width) as i64,
            self.min_y + (i / self.width) as i64,
        )
    }

    fn finish(self) -> PatchCoverReport {
        let mut overlaps = Vec::new();
        for (i, &n) in self.counts.iter().enumerate() {
            if n >= 2 {
                overlaps.push(self.cell(i));
            }
        }
        // Flood the uncovered region from the bounding-box border; what is
        // left uncovered and unreached is interior, hence a hole.
        let mut reached = vec![false; self.counts.len()];
        let mut stack = Vec::new();
        for x in 0..self.width {
            for y in [0, self.height - 1] {
                let i = y * self.width + x;
                if self.counts[i] == 0 && !reached[i] {
                    reached[i] = true;
                    stack.push(i);
                }
            }
        }
        for y in 0..self.height {
            for x in [0, self.width - 1] {
                let i = y * self.width + x;
                if self.counts[i] == 0 && !reached[i] {
                    reached[i] = true;
                    stack.push(i);
                }
            }
        }
        while let Some(i) = stack.pop() {
            let x = i % self.width;
            let y = i / self.width;
            let mut push = |j: usize| {
                if self.counts[j] == 0 && !reached[j] {
                    reached[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                push(i - 1);
            }
            if x + 1 < self.width {
                push(i + 1);
            }
            if y > 0 {
                push(i - self.width);
            }
            if y + 1 < self.height {
                push(i + self.width);
            }
        }
        let mut holes = Vec::new();
        for (i, &n) in self.counts.iter().enumerate() {
            if n == 0 && !reached[i] {
                holes.push(self.cell(i));
            }
        }
        overlaps.sort_by_key(|c| (c.y, c.x));
        holes.sort_by_key(|c| (c.y, c.x));
        PatchCoverReport { overlaps, holes }
    }
}

pub fn cover_check(ts: &Tileset, patch: &Patch) -> Result<PatchCoverReport, EngineError> {
    let mut bounds: Option<(i64, i64, i64, i64)> = None;
    let mut shapes = Vec::new();
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
        shapes.push(shape);
    }
    let Some((x0, y0, x1, y1)) = bounds else {
        return Ok(PatchCoverReport {
            overlaps: vec![],
            holes: vec![],
        });
    };
    let mut grid = CountGrid::new(x0, y0, x1, y1);
    for shape in &shapes {
        for &c in shape.cells() {
            grid.bump(c);
        }
    }
    Ok(grid.finish())
}

/// Streaming cover check of the depth-fold expansion of one tile: the
/// placement list is never materialized. Two visitor passes, one for the
/// bounding box and one to fill the occupancy grid.
pub fn cover_check_expansion(
    ts: &Tileset,
    tile_id: &str,
    depth: u32,
) -> Result<PatchCoverReport, EngineError> {
    let mut bounds: Option<(i64, i64, i64, i64)> = None;
    engine::expand_tile_visit(ts, tile_id, depth, |tile, pl| {
        let proto = ts.tile(tile).expect("visited tiles resolve");
        for &c in proto.shape.cells() {
            let p = pl.apply(c);
            bounds = Some(match bounds {
                None => (p.x, p.y, p.x, p.y),
                Some((a, b, c2, d)) => (a.min(p.x), b.min(p.y), c2.max(p.x), d.max(p.y)),
            });
        }
    })?;
    let Some((x0, y0, x1, y1)) = bounds else {
        return Ok(PatchCoverReport {
            overlaps: vec![],
            holes: vec![],
        });
    };
    let mut grid = CountGrid::new(x0, y0, x1, y1);
    engine::expand_tile_visit(ts, tile_id, depth, |tile, pl| {
        let proto = ts.tile(tile).expect("visited tiles resolve");
        for &c in proto.shape.cells() {
            grid.bump(pl.apply(c));
        }
    })?;
    Ok(grid.finish())
}

/// Marks of all placed tiles in one layer, mapped to patch coordinates.
/// The result is not merged; feed it to `merge_segments` or the analyses.
pub fn patch_marks(
    ts: &Tileset,
    patch: &Patch,
    layer: MarkLayer,
) -> Result<Vec<MarkSegment>, EngineError> {
    let mut out = Vec::new();
    for placed in &patch.placements {
        let proto = ts
            .tile(&placed.tile)
            .ok_or_else(|| EngineError::UnknownTile(placed.tile.clone()))?;
        for m in &proto.marks {
            if m.layer == layer {
                out.push(m.placed(placed.placement));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Curve tracing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CurveTrace {
    /// Corner turn words of all simple cycles whose vertices all have
    /// degree 2 in the endpoint graph of the merged segments.
    pub closed: Vec<TurnWord>,
    /// The corner paths matching `closed`, for diagnostics.
    pub closed_corners: Vec<Vec<(i64, i64)>>,
    /// Maximal non-cycle curves (components touching a degree-1 endpoint or
    /// a junction).
    pub open_threads: usize,
    /// Vertices where three or more segment endpoints coincide.
    pub junction_points: usize,
}

/// Merge colinear touching segments, build the incidence graph of segment
/// endpoints, and extract all closed curves in which every vertex has
/// degree 2. Each cycle is returned as its corner turn word: after maximal
/// merging every graph vertex on a cycle is a genuine corner, so the words
/// are over {L, R} only. Layers are ignored; pass one layer's segments.
pub fn trace_closed_curves(segments: &[MarkSegment]) -> CurveTrace {
    let normalized: Vec<MarkSegment> = segments
        .iter()
        .map(|m| m.with_layer(MarkLayer::Tile))
        .collect();
    let merged = merge_segments(&normalized);
    let mut point_ids: HashMap<(i64, i64), usize> = HashMap::new();
    let mut points: Vec<(i64, i64)> = Vec::new();
    let mut incident: Vec<Vec<usize>> = Vec::new();
    let mut intern = |p: (i64, i64),
                      points: &mut Vec<(i64, i64)>,
                      incident: &mut Vec<Vec<usize>>|
     -> usize {
        *point_ids.entry(p).or_insert_with(|| {
            points.push(p);
            incident.push(Vec::new());
            points.len() - 1
        })
    };
    let mut ends = Vec::with_capacity(merged.len());
    for (si, s) in merged.iter().enumerate() {
        let a = intern(s.a, &mut points, &mut incident);
        let b = intern(s.b, &mut points, &mut incident);
        incident[a].push(si);
        incident[b].push(si);
        ends.push((a, b));
    }
    let junction_points = incident.iter().filter(|v| v.len() >= 3).count();
    let mut seg_used = vec![false; merged.len()];
    let mut closed = Vec::new();
    let mut closed_corners = Vec::new();
    let mut open_threads = 0usize;

    for start in 0..merged.len() {
        if seg_used[start] {
            continue;
        }
        let (a0, _) = ends[start];
        // Walk the component starting from segment `start` at endpoint a0.
        let mut corners = vec![a0];
        let mut seg = start;
        let mut at = a0;
        let mut is_cycle = false;
        loop {
            seg_used[seg] = true;
            let (a, b) = ends[seg];
            let next = if at == a { b } else { a };
            corners.push(next);
            if next == a0 {
                is_cycle = corners.iter().skip(1).all(|&v| incident[v].len() == 2);
                break;
            }
            if incident[next].len() != 2 {
                break;
            }
            let follow = incident[next]
                .iter()
                .copied()
                .find(|&s2| s2 != seg)
                .expect("degree-2 vertex has a second segment");
            if seg_used[follow] {
                break;
            }
            seg = follow;
            at = next;
        }
        if is_cycle {
            corners.pop();
            let path = canonical_cycle(&corners, &points);
            let word = corner_turn_word(&path);
            closed.push(word);
            closed_corners.push(path);
        } else {
            // Also sweep the other direction so the whole component is
            // marked as used before counting it once.
            let mut frontier: Vec<usize> = vec![start];
            while let Some(s) = frontier.pop() {
                seg_used[s] = true;
                let (a, b) = ends[s];
                for v in [a, b] {
                    for &s2 in &incident[v] {
                        if !seg_used[s2] {
                            seg_used[s2] = true;
                            frontier.push(s2);
                        }
                    }
                }
            }
            open_threads += 1;
        }
    }
    // Deterministic report order.
    let mut order: Vec<usize> = (0..closed.len()).collect();
    order.sort_by_key(|&i| closed_corners[i].first().map(|p| (p.1, p.0)).unwrap_or((0, 0)));
    let closed = order.iter().map(|&i| closed[i].clone()).collect();
    let closed_corners = order.iter().map(|&i| closed_corners[i].clone()).collect();
    CurveTrace {
        closed,
        closed_corners,
        open_threads,
        junction_points,
    }
}

/// Rotate the cycle to start at its least (y, x) corner and walk toward the
/// lesser of its two neighbors, for deterministic output.
fn canonical_cycle(corner_ids: &[usize], points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let n = corner_ids.len();
    let key = |i: usize| {
        let p = points[corner_ids[i]];
        (p.1, p.0)
    };
    let mut start = 0;
    for i in 1..n {
        if key(i) < key(start) {
            start = i;
        }
    }
    let fwd = key((start + 1) % n);
    let bwd = key((start + n - 1) % n);
    let mut path = Vec::with_capacity(n);
    if fwd <= bwd {
        for i in 0..n {
            path.push(points[corner_ids[(start + i) % n]]);
        }
    } else {
        for i in 0..n {
            path.push(points[corner_ids[(start + n - i) % n]]);
        }
    }
    path
}

/// Turn word of a closed rectilinear corner path: one symbol per corner.
fn corner_turn_word(path: &[(i64, i64)]) -> TurnWord {
    let n = path.len();
    let dir = |from: (i64, i64), to: (i64, i64)| -> (i64, i64) {
        ((to.0 - from.0).signum(), (to.1 - from.1).signum())
    };
    let mut symbols = Vec::with_capacity(n);
    for i in 0..n {
        let prev = path[(i + n - 1) % n];
        let here = path[i];
        let next = path[(i + 1) % n];
        let h1 = dir(prev, here);
        let h2 = dir(here, next);
        let s = if h2 == (-h1.1, h1.0) {
            Turn::L
        } else if h2 == (h1.1, -h1.0) {
            Turn::R
        } else {
            Turn::S
        };
        symbols.push(s);
    }
    // Rotate so the symbol at index i describes the turn after leaving
    // corner i; the word starts with the turn taken at the second corner,
    // matching the vertex-visit order of the walk.
    symbols.rotate_left(1);
    TurnWord::new(symbols, true)
}

// ---------------------------------------------------------------------------
// Fibonacci snowflakes
// ---------------------------------------------------------------------------

/// Fibonacci numbers with F(1) = F(2) = 1.
fn fibonacci(n: usize) -> usize {
    let (mut a, mut b) = (0usize, 1usize);
    for _ in 0..n {
        let c = a + b;
        a = b;
        b = c;
    }
    a
}

/// Boundary turn-word length of the order-n snowflake: 4 * F(3n+1).
pub fn snowflake_word_len(order: usize) -> usize {
    4 * fibonacci(3 * order + 1)
}

fn snowflake_q(n: usize) -> Vec<Turn> {
    // q(0) = empty, q(1) = R, then q(n) = q(n-1) ++ q(n-2) when n = 2 mod 3
    // and q(n) = q(n-1) ++ swap(q(n-2)) otherwise.
    let mut words: Vec<Vec<Turn>> = vec![vec![], vec![Turn::R]];
    for i in 2..=n {
        let mut w = words[i - 1].clone();
        if i % 3 == 2 {
            w.extend_from_slice(&words[i - 2]);
        } else {
            w.extend(words[i - 2].iter().map(|t| t.swapped()));
        }
        words.push(w);
    }
    words.swap_remove(n)
}

/// Closed boundary turn word of the order-n snowflake, normalized to
/// counterclockwise (turning number +4). Order 0 is the unit square "LLLL".
/// Every generated word is self-validated before being returned: closure and
/// turning number always, simplicity by walk for orders small enough to keep
/// the visited set in memory.
pub fn fibonacci_snowflake_word(order: usize) -> TurnWord {
    assert!(order <= 12, "snowflake words are generated up to order 12");
    let mut q = snowflake_q(3 * order + 1);
    let mut symbols = Vec::with_capacity(4 * q.len());
    for _ in 0..4 {
        symbols.extend_from_slice(&q);
    }
    let mut word = TurnWord::new(symbols, true);
    if word.turning_number() == -4 {
        word = word.swapped();
    }
    assert_eq!(word.turning_number(), 4, "snowflake words turn once");
    let validate_simplicity = order <= 9;
    let (closed, simple) = crate::geometry::walk_closed_word(&word);
    assert!(closed, "snowflake words close");
    if validate_simplicity {
        assert!(simple, "snowflake words are non-self-intersecting");
    }
    q.clear();
    word
}

/// Smallest order whose snowflake word equals `w` up to cyclic rotation,
/// reversal, and global L/R swap; None when no order at most 12 matches.
/// Candidate orders are selected by word length first, so only one
/// snowflake word is ever generated per call.
pub fn match_snowflake(w: &TurnWord) -> Option<usize> {
    if !w.closed || w.is_empty() {
        return None;
    }
    for order in 0..=12 {
        let len = snowflake_word_len(order);
        if len == w.len() {
            let sf = fibonacci_snowflake_word(order);
            if w.congruent(&sf) {
                return Some(order);
            }
        }
        if len > w.len() {
            break;
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Stitch statistics and bars
// ---------------------------------------------------------------------------

/// Histogram of maximal-merged segment lengths, keyed by doubled length
/// (2 doubled units = 1 cell). Odd keys are exact half-integer cell lengths.
pub fn stitch_histogram(segments: &[MarkSegment]) -> BTreeMap<i64, u64> {
    let merged = merge_segments(segments);
    let mut hist = BTreeMap::new();
    for s in merged {
        *hist.entry(s.doubled_len()).or_insert(0) += 1;
    }
    hist
}

/// Render a doubled length in cell units: "2" or "1.5".
pub fn cell_units(doubled: i64) -> String {
    if doubled % 2 == 0 {
        format!("{}", doubled / 2)
    } else {
        format!("{}.5", doubled / 2)
    }
}

#[derive(Debug, Clone)]
pub struct BarFamily {
    pub horizontal: bool,
    /// Supporting line coordinates in the doubled frame, strictly increasing.
    pub lines: Vec<i64>,
    /// Consecutive gaps between qualifying lines, doubled frame.
    pub spacings: Vec<i64>,
    /// Merged segment lengths on the qualifying lines, doubled frame.
    pub stitch_lengths: BTreeMap<i64, u64>,
}

#[derive(Debug, Clone)]
pub struct BarReport {
    pub families: Vec<BarFamily>,
    /// Every supporting line with its covered fraction of the extent, for
    /// auditing the qualification threshold: (horizontal, line, coverage).
    pub line_coverage: Vec<(bool, i64, f64)>,
    pub coverage_threshold: f64,
}

/// Group merged segments by supporting line; a line qualifies as a bar when
/// its segments cover at least `coverage` of the mark extent along that
/// direction. At most one family per direction, horizontal first.
pub fn extract_bars(segments: &[MarkSegment], coverage: f64) -> BarReport {
    let merged = merge_segments(
        &segments
            .iter()
            .map(|m| m.with_layer(MarkLayer::Tile))
            .collect::<Vec<_>>(),
    );
    let mut report = BarReport {
        families: Vec::new(),
        line_coverage: Vec::new(),
        coverage_threshold: coverage,
    };
    if merged.is_empty() {
        return report;
    }
    let min_x = merged.iter().map(|s| s.a.0).min().unwrap();
    let max_x = merged.iter().map(|s| s.b.0).max().unwrap();
    let min_y = merged.iter().map(|s| s.a.1).min().unwrap();
    let max_y = merged.iter().map(|s| s.b.1).max().unwrap();
    for horizontal in [true, false] {
        let extent = if horizontal { max_x - min_x } else { max_y - min_y };
        let mut lines: BTreeMap<i64, (i64, BTreeMap<i64, u64>)> = BTreeMap::new();
        for s in &merged {
            if s.is_horizontal() != horizontal {
                continue;
            }
            let line = if horizontal { s.a.1 } else { s.a.0 };
            let entry = lines.entry(line).or_default();
            entry.0 += s.doubled_len();
            *entry.1.entry(s.doubled_len()).or_insert(0) += 1;
        }
        let mut family = BarFamily {
            horizontal,
            lines: Vec::new(),
            spacings: Vec::new(),
            stitch_lengths: BTreeMap::new(),
        };
        for (line, (total, hist)) in &lines {
            let frac = if extent > 0 {
                *total as f64 / extent as f64
            } else {
                1.0
            };
            report.line_coverage.push((horizontal, *line, frac));
            if frac >= coverage {
                family.lines.push(*line);
                for (len, n) in hist {
                    *family.stitch_lengths.entry(*len).or_insert(0) += n;
                }
            }
        }
        family.spacings = family.lines.windows(2).map(|w| w[1] - w[0]).collect();
        if !family.lines.is_empty() {
            report.families.push(family);
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Fibonacci word factors
// ---------------------------------------------------------------------------

/// Prefix of the infinite Fibonacci word (a -> ab, b -> a, starting from a)
/// of length at least `min_len`.
pub fn fibonacci_word_prefix(min_len: usize) -> Vec<u8> {
    let mut w = vec![b'a'];
    while w.len() < min_len {
        let mut next = Vec::with_capacity(w.len() * 2);
        for &c in &w {
            if c == b'a' {
                next.push(b'a');
                next.push(b'b');
            } else {
                next.push(b'a');
            }
        }
        w = next;
    }
    w
}

/// True iff the sequence, under either bijection of its (at most two)
/// distinct values onto {a, b}, is a factor of the infinite Fibonacci word.
/// Scans a prefix of length at least 2 * len + 10.
pub fn fibonacci_factor_check(seq: &[i64]) -> bool {
    if seq.is_empty() {
        return true;
    }
    if seq.len() > 10_000 {
        return false;
    }
    let mut values: Vec<i64> = seq.to_vec();
    values.sort_unstable();
    values.dedup();
    if values.len() > 2 {
        return false;
    }
    let prefix = fibonacci_word_prefix(2 * seq.len() + 10);
    let mappings: Vec<Vec<u8>> = if values.len() == 1 {
        vec![
            seq.iter().map(|_| b'a').collect(),
            seq.iter().map(|_| b'b').collect(),
        ]
    } else {
        vec![
            seq.iter()
                .map(|v| if *v == values[0] { b'a' } else { b'b' })
                .collect(),
            seq.iter()
                .map(|v| if *v == values[0] { b'b' } else { b'a' })
                .collect(),
        ]
    };
    mappings
        .iter()
        .any(|m| prefix.windows(m.len()).any(|w| w == m.as_slice()))
}

// ---------------------------------------------------------------------------
// Periodicity
// ---------------------------------------------------------------------------

/// Inclusive cell rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub min_x: i64,
    pub min_y: i64,
    pub max_x: i64,
    pub max_y: i64,
}

impl Window {
    pub fn new(min_x: i64, min_y: i64, max_x: i64, max_y: i64) -> Window {
        Window {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.min_x && c.x <= self.max_x && c.y >= self.min_y && c.y <= self.max_y
    }

    /// The central third of the covered bounding box of a patch.
    pub fn central_third(bounds: (i64, i64, i64, i64)) -> Window {
        let (x0, y0, x1, y1) = bounds;
        let w = x1 - x0 + 1;
        let h = y1 - y0 + 1;
        Window::new(x0 + w / 3, y0 + h / 3, x0 + 2 * w / 3 - 1, y0 + 2 * h / 3 - 1)
    }
}

/// Translation vectors t (canonical half: ty > 0, or ty = 0 and tx > 0)
/// with |t| at most max_radius in the Chebyshev norm under which the
/// occupancy signature (tile id, transform) is invariant across the window.
/// An empty result is evidence of non-periodicity at this radius, never a
/// proof. Every cell of the window must be covered by the patch.
pub fn periodicity_scan(
    ts: &Tileset,
    patch: &Patch,
    window: Window,
    max_radius: i64,
) -> Result<Vec<(i64, i64)>, AnalysisError> {
    let occupancy = engine::patch_occupancy(ts, patch)?;
    let mut sig_ids: HashMap<(usize, D4Transform), u32> = HashMap::new();
    let tile_index: HashMap<&str, usize> = ts
        .tiles
        .iter()
        .enumerate()
        .map(|(i, t)| (t.id.as_str(), i))
        .collect();
    let w = (window.max_x - window.min_x + 1) as usize;
    let h = (window.max_y - window.min_y + 1) as usize;
    if w == 0 || h == 0 {
        return Err(AnalysisError::WindowOutOfRange);
    }
    let mut grid = vec![0u32; w * h];
    for y in window.min_y..=window.max_y {
        for x in window.min_x..=window.max_x {
            let entry = occupancy
                .get(&Cell::new(x, y))
                .ok_or(AnalysisError::WindowOutOfRange)?;
            let key = (tile_index[entry.tile.as_str()], entry.transform);
            let next = sig_ids.len() as u32 + 1;
            let id = *sig_ids.entry(key).or_insert(next);
            grid[(y - window.min_y) as usize * w + (x - window.min_x) as usize] = id;
        }
    }
    let mut periods = Vec::new();
    for ty in 0..=max_radius {
        for tx in -max_radius..=max_radius {
            if ty == 0 && tx <= 0 {
                continue;
            }
            if is_period(&grid, w, h, tx, ty) {
                periods.push((tx, ty));
            }
        }
    }
    periods.sort_by_key(|&(tx, ty)| (tx.abs().max(ty.abs()), ty, tx));
    Ok(periods)
}

fn is_period(grid: &[u32], w: usize, h: usize, tx: i64, ty: i64) -> bool {
    let mut any = false;
    for y in 0..h as i64 {
        let y2 = y + ty;
        if y2 < 0 || y2 >= h as i64 {
            continue;
        }
        for x in 0..w as i64 {
            let x2 = x + tx;
            if x2 < 0 || x2 >= w as i64 {
                continue;
            }
            any = true;
            if grid[y as usize * w + x as usize] != grid[y2 as usize * w + x2 as usize] {
                return false;
            }
        }
    }
    any
}

// ---------------------------------------------------------------------------
// Substitution statistics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionMatrix {
    /// Tile ids in tileset order.
    pub tiles: Vec<String>,
    /// counts[i][j] = number of children of tile i in the rule of tile j.
    pub counts: Vec<Vec<u64>>,
}

pub fn substitution_matrix(ts: &Tileset) -> Result<SubstitutionMatrix, AnalysisError> {
    let n = ts.tiles.len();
    let index: HashMap<&str, usize> = ts
        .tiles
        .iter()
        .enumerate()
        .map(|(i, t)| (t.id.as_str(), i))
        .collect();
    let mut counts = vec![vec![0u64; n]; n];
    for (j, tile) in ts.tiles.iter().enumerate() {
        let rule = ts
            .rule(&tile.id)
            .ok_or_else(|| AnalysisError::UnruledTile(tile.id.clone()))?;
        for (child, _) in &rule.children {
            counts[index[child.as_str()]][j] += 1;
        }
    }
    Ok(SubstitutionMatrix {
        tiles: ts.tiles.iter().map(|t| t.id.clone()).collect(),
        counts,
    })
}

/// Exact integer identity: for the area row-vector a, a M = scale^2 a.
pub fn matrix_area_identity(ts: &Tileset, m: &SubstitutionMatrix) -> bool {
    let areas: Vec<u64> = m
        .tiles
        .iter()
        .map(|id| ts.tile(id).map(|t| t.shape.area() as u64).unwrap_or(0))
        .collect();
    let k2 = (ts.scale * ts.scale) as u64;
    for j in 0..m.tiles.len() {
        let lhs: u64 = (0..m.tiles.len()).map(|i| areas[i] * m.counts[i][j]).sum();
        if lhs != k2 * areas[j] {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone)]
pub struct SubstitutionStats {
    pub matrix: SubstitutionMatrix,
    pub perron_value: f64,
    /// Dominant eigenvector, normalized to sum 1, in tileset tile order.
    pub perron_vector: Vec<f64>,
    /// Tile frequencies counted in the depth-fold expansion of the seed.
    pub empirical_frequencies: Vec<f64>,
    pub seed: String,
    pub depth: u32,
    pub l1_distance: f64,
}

/// Dominant eigenvalue and vector by power iteration (200 normalized
/// steps), plus empirical tile frequencies of the depth-fold expansion of
/// the largest tile (ties broken by tileset order), whose expansion mixes
/// fastest.
pub fn substitution_stats(ts: &Tileset, depth: u32) -> Result<SubstitutionStats, AnalysisError> {
    assert!(depth <= 8, "empirical counting is bounded at depth 8");
    let matrix = substitution_matrix(ts)?;
    let n = matrix.tiles.len();
    let mut v = vec![1.0f64 / n as f64; n];
    let mut value = 0.0;
    for _ in 0..200 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[i] += matrix.counts[i][j] as f64 * v[j];
            }
        }
        let norm: f64 = next.iter().sum();
        value = norm / v.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        if norm > 0.0 {
            for x in &mut next {
                *x /= norm;
            }
        }
        v = next;
    }
    let mut seed = ts.tiles.first().expect("tileset has tiles");
    for t in &ts.tiles {
        if t.shape.area() > seed.shape.area() {
            seed = t;
        }
    }
    let seed = seed.id.clone();
    let index: HashMap<&str, usize> = matrix
        .tiles
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let mut counts = vec![0u64; n];
    engine::expand_tile_visit(ts, &seed, depth, |tile, _| {
        counts[index[tile]] += 1;
    })?;
    let total: u64 = counts.iter().sum();
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let l1 = v
        .iter()
        .zip(&empirical)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>();
    Ok(SubstitutionStats {
        matrix,
        perron_value: value,
        perron_vector: v,
        empirical_frequencies: empirical,
        seed,
        depth,
        l1_distance: l1,
    })
}

// ---------------------------------------------------------------------------
